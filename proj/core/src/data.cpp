#include "coseg/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "coseg/error.hpp"
#include "coseg/pgm.hpp"
#include "coseg/rng.hpp"

namespace coseg {

std::string to_string(Provenance p) {
    switch (p) {
    case Provenance::Clean: return "Clean";
    case Provenance::CorruptedTypeI: return "CorruptedTypeI";
    case Provenance::CorruptedTypeII: return "CorruptedTypeII";
    case Provenance::Corrected: return "Corrected";
    }
    return "Clean";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "Clean") return Provenance::Clean;
    if (s == "CorruptedTypeI") return Provenance::CorruptedTypeI;
    if (s == "CorruptedTypeII") return Provenance::CorruptedTypeII;
    if (s == "Corrected") return Provenance::Corrected;
    throw FormatError("unknown provenance '" + s + "'");
}

std::string to_string(Split s) {
    return s == Split::Train ? "train" : "test";
}

std::size_t Dataset::index_of(int id) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].id == id) {
            return i;
        }
    }
    throw InvalidArgument("no sample with id " + std::to_string(id));
}

void Dataset::validate() const {
    std::set<int> ids;
    for (const Sample& s : samples) {
        const std::string where = "sample " + std::to_string(s.id);
        if (!ids.insert(s.id).second) {
            throw InvalidArgument("duplicate sample id " + std::to_string(s.id));
        }
        if (s.image.height != height || s.image.width != width || !same_shape(s.image, s.mask) ||
            !same_shape(s.image, s.pristine_mask)) {
            throw InvalidArgument(where + ": size differs from the dataset's " +
                                  std::to_string(height) + "x" + std::to_string(width));
        }
        s.mask.validate(num_classes);
        s.pristine_mask.validate(num_classes);
        if (s.provenance == Provenance::Clean && s.mask != s.pristine_mask) {
            throw InvalidArgument(where + ": marked Clean but mask differs from pristine mask");
        }
    }
}

std::vector<TrainingView> training_views(const Dataset& dataset) {
    std::vector<TrainingView> views;
    views.reserve(dataset.size());
    for (const Sample& s : dataset.samples) {
        views.push_back({s.id, &s.image, &s.mask});
    }
    return views;
}

void SceneParams::validate() const {
    if (min_blobs < 1 || max_blobs < min_blobs) {
        throw InvalidArgument("scene: invalid blob count range");
    }
    if (!(min_foreground >= 0.0 && max_foreground <= 1.0 && min_foreground < max_foreground)) {
        throw InvalidArgument("scene: invalid foreground fraction range");
    }
    if (!(min_axis > 0.0 && max_axis >= min_axis)) {
        throw InvalidArgument("scene: invalid axis range");
    }
    if (margin < 0 || max_attempts < 1) {
        throw InvalidArgument("scene: margin must be >= 0 and max_attempts >= 1");
    }
}

namespace {

struct Blob {
    double cx, cy, a, b, theta;
    double wobble[3];
    double phase[3];
};

bool render_attempt(Rng& rng, int size, const SceneParams& p, Sample& out) {
    const int blobs = static_cast<int>(rng.uniform_int(p.min_blobs, p.max_blobs));
    std::vector<Blob> shapes;
    for (int k = 0; k < blobs; ++k) {
        Blob b{};
        // Two blobs are kept smaller, mirroring a pair of lungs.
        const double shrink = blobs > 1 ? 0.7 : 1.0;
        b.a = rng.uniform(p.min_axis, p.max_axis) * size * shrink;
        b.b = rng.uniform(p.min_axis, p.max_axis) * size * shrink;
        const double reach = std::max(b.a, b.b) * (1.0 + p.max_wobble);
        const double lo = p.margin + reach;
        const double hi = size - 1 - p.margin - reach;
        if (hi <= lo) {
            return false;
        }
        if (blobs > 1) {
            // Left and right halves.
            const double mid = (size - 1) / 2.0;
            const double xl = k == 0 ? lo : mid + 1.0;
            const double xh = k == 0 ? mid - 1.0 : hi;
            b.cx = rng.uniform(std::min(xl, xh), std::max(xl, xh));
        } else {
            b.cx = rng.uniform(lo, hi);
        }
        b.cy = rng.uniform(lo, hi);
        b.theta = rng.uniform(0.0, std::numbers::pi);
        for (int h = 0; h < 3; ++h) {
            b.wobble[h] = rng.uniform(0.0, p.max_wobble / 3.0);
            b.phase[h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        shapes.push_back(b);
    }

    LabelMask mask(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            for (const Blob& b : shapes) {
                const double dx = x - b.cx;
                const double dy = y - b.cy;
                const double c = std::cos(b.theta);
                const double s = std::sin(b.theta);
                const double u = (c * dx + s * dy) / b.a;
                const double v = (-s * dx + c * dy) / b.b;
                const double phi = std::atan2(v, u);
                double limit = 1.0;
                for (int h = 0; h < 3; ++h) {
                    limit += b.wobble[h] * std::cos((h + 2) * phi + b.phase[h]);
                }
                if (u * u + v * v < limit * limit) {
                    mask.at(y, x) = 1;
                    break;
                }
            }
        }
    }

    const double fraction = static_cast<double>(mask.count(1)) / static_cast<double>(mask.size());
    if (fraction < p.min_foreground || fraction > p.max_foreground) {
        return false;
    }
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const bool near_border = y < p.margin || x < p.margin || y >= size - p.margin ||
                                     x >= size - p.margin;
            if (near_border && mask.at(y, x) != 0) {
                return false;
            }
        }
    }

    const double background = rng.uniform(p.background_lo, p.background_hi);
    const double contrast = rng.uniform(p.contrast_lo, p.contrast_hi);
    const double ramp_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double gx = std::cos(ramp_angle) * p.ramp;
    const double gy = std::sin(ramp_angle) * p.ramp;
    GrayImage image(size, size);
    const double half = (size - 1) / 2.0;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double v = background + gx * (x - half) / half + gy * (y - half) / half;
            if (mask.at(y, x) != 0) {
                v += contrast;
            }
            v += p.noise_sigma * rng.normal();
            image.at(y, x) = quantize_intensity(v) / 255.0;
        }
    }

    out.image = std::move(image);
    out.pristine_mask = mask;
    out.mask = std::move(mask);
    out.provenance = Provenance::Clean;
    return true;
}

} // namespace

Sample generate_scene(std::uint64_t seed, int size, const SceneParams& params, int id) {
    if (size < 16) {
        throw InvalidArgument("scene size must be at least 16, got " + std::to_string(size));
    }
    params.validate();
    Sample sample;
    sample.id = id;
    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        Rng rng(attempt == 0 ? seed : mix_seed(seed, static_cast<std::uint64_t>(attempt)));
        if (render_attempt(rng, size, params, sample)) {
            return sample;
        }
    }
    throw InvalidArgument("scene generation failed after " + std::to_string(params.max_attempts) +
                          " attempts (seed " + std::to_string(seed) + ")");
}

Corpus make_corpus(std::uint64_t seed, int n_train, int n_test, int size, const SceneParams& params) {
    if (n_train < 1 || n_test < 1) {
        throw InvalidArgument("corpus needs at least one train and one test sample");
    }
    Corpus corpus;
    corpus.train.split = Split::Train;
    corpus.test.split = Split::Test;
    for (Dataset* d : {&corpus.train, &corpus.test}) {
        d->height = size;
        d->width = size;
        d->num_classes = 2;
    }
    for (int id = 0; id < n_train + n_test; ++id) {
        Sample s = generate_scene(mix_seed(seed, static_cast<std::uint64_t>(id)), size, params, id);
        (id < n_train ? corpus.train : corpus.test).samples.push_back(std::move(s));
    }
    return corpus;
}

} // namespace coseg
