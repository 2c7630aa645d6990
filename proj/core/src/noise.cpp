#include "coseg/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "coseg/error.hpp"
#include "coseg/morphology.hpp"

namespace coseg {

std::string to_string(NoiseType t) {
    return t == NoiseType::TypeI ? "TypeI" : "TypeII";
}

NoiseType noise_type_from_string(const std::string& s) {
    if (s == "TypeI") return NoiseType::TypeI;
    if (s == "TypeII") return NoiseType::TypeII;
    throw InvalidArgument("unknown noise_type '" + s + "' (expected TypeI or TypeII)");
}

std::string to_string(BiasDirection b) {
    switch (b) {
    case BiasDirection::Over: return "Over";
    case BiasDirection::Under: return "Under";
    case BiasDirection::Mixed: return "Mixed";
    }
    return "Mixed";
}

BiasDirection bias_direction_from_string(const std::string& s) {
    if (s == "Over") return BiasDirection::Over;
    if (s == "Under") return BiasDirection::Under;
    if (s == "Mixed") return BiasDirection::Mixed;
    throw InvalidArgument("unknown bias_direction '" + s + "' (expected Over, Under or Mixed)");
}

void NoiseConfig::validate() const {
    if (!(nol >= 0.0 && nol <= 1.0)) {
        throw InvalidArgument("noise level must lie in [0, 1], got " + std::to_string(nol));
    }
    if (n_max < 1) {
        throw InvalidArgument("n_max must be >= 1");
    }
    if (bias_radius < 0) {
        throw InvalidArgument("bias_radius must be >= 0");
    }
    if (!(dropout_fraction >= 0.0 && dropout_fraction <= 1.0)) {
        throw InvalidArgument("dropout_fraction must lie in [0, 1]");
    }
}

LabelMask boundary_noise(const LabelMask& pristine, MorphOp op, int radius) {
    if (op == MorphOp::Dilate) {
        return dilate(pristine, radius);
    }
    for (int r = radius; r >= 1; --r) {
        LabelMask eroded = erode(pristine, r);
        if (eroded.count(1) > 0) {
            return eroded;
        }
    }
    return dilate(pristine, 1);
}

namespace {

void require_clean_binary(const Sample& sample) {
    if (!is_binary(sample.pristine_mask)) {
        throw InvalidArgument("corruption requires a binary mask (sample " +
                              std::to_string(sample.id) + ")");
    }
}

void erase_rectangle(LabelMask& mask, Rng& rng) {
    const std::size_t fg = mask.count(1);
    if (fg < 2) {
        return;
    }
    const double area = rng.uniform(0.10, 0.25) * static_cast<double>(fg);
    const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    const int w = std::max(1, static_cast<int>(std::lround(std::sqrt(area * aspect))));
    const int h = std::max(1, static_cast<int>(std::lround(area / w)));
    // centred on a random foreground pixel
    auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(fg) - 1));
    int cy = 0;
    int cx = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask.classes[i] == 1 && pick-- == 0) {
            cy = static_cast<int>(i) / mask.width;
            cx = static_cast<int>(i) % mask.width;
            break;
        }
    }
    const int y0 = cy - h / 2;
    const int x0 = cx - w / 2;
    LabelMask out = mask;
    for (int y = std::max(0, y0); y < std::min(mask.height, y0 + h); ++y) {
        for (int x = std::max(0, x0); x < std::min(mask.width, x0 + w); ++x) {
            out.at(y, x) = 0;
        }
    }
    if (out.count(1) > 0) {
        mask = std::move(out);
    }
}

} // namespace

Sample corrupt_type1(const Sample& sample, const NoiseConfig& cfg, Rng& rng) {
    require_clean_binary(sample);
    const MorphOp op = rng.bernoulli(0.5) ? MorphOp::Dilate : MorphOp::Erode;
    const int radius = static_cast<int>(rng.uniform_int(1, cfg.n_max));
    Sample out = sample;
    out.mask = boundary_noise(sample.pristine_mask, op, radius);
    out.provenance = Provenance::CorruptedTypeI;
    return out;
}

Sample corrupt_type2(const Sample& sample, const NoiseConfig& cfg, Rng& rng) {
    require_clean_binary(sample);
    const bool coin = rng.bernoulli(0.5);
    bool over = cfg.bias_direction == BiasDirection::Over;
    if (cfg.bias_direction == BiasDirection::Mixed) {
        over = coin;
    }
    Sample out = sample;
    out.mask = cfg.bias_radius == 0
                   ? sample.pristine_mask
                   : boundary_noise(sample.pristine_mask, over ? MorphOp::Dilate : MorphOp::Erode,
                                    cfg.bias_radius);
    if (rng.bernoulli(cfg.dropout_fraction)) {
        erase_rectangle(out.mask, rng);
    }
    out.provenance = Provenance::CorruptedTypeII;
    return out;
}

Sample corrupt_sample(const Sample& sample, const NoiseConfig& cfg) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(static_cast<std::uint32_t>(sample.id))));
    return cfg.noise_type == NoiseType::TypeI ? corrupt_type1(sample, cfg, rng)
                                              : corrupt_type2(sample, cfg, rng);
}

Dataset corrupt_dataset(const Dataset& train, const NoiseConfig& cfg) {
    cfg.validate();
    for (const Sample& s : train.samples) {
        if (s.provenance != Provenance::Clean) {
            throw InvalidArgument("corrupt_dataset expects an all-clean dataset; sample " +
                                  std::to_string(s.id) + " is " + to_string(s.provenance));
        }
    }
    const std::size_t n = train.size();
    const auto k = static_cast<std::size_t>(std::llround(cfg.nol * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng pick(mix_seed(cfg.seed, 0xC0C0C0C0ULL));
    pick.shuffle(std::span<std::size_t>(order));

    Dataset out = train;
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t idx = order[j];
        out.samples[idx] = corrupt_sample(train.samples[idx], cfg);
    }
    return out;
}

} // namespace coseg
