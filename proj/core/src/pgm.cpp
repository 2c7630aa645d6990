#include "coseg/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "coseg/error.hpp"

namespace coseg {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    int read_uint(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000) {
                fail(std::string(what) + " is too large", start);
            }
            ++pos_;
        }
        if (pos_ == start) {
            fail(std::string("expected ") + what, start);
        }
        return static_cast<int>(value);
    }

    [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
        throw FormatError("PGM: " + msg + " at byte offset " + std::to_string(at));
    }

    std::size_t pos_ = 0;
    std::string_view bytes_;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace

PgmRaster parse_pgm(std::string_view bytes) {
    HeaderReader r(bytes);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
        r.fail("expected magic P5 or P2", 0);
    }
    const bool binary = bytes[1] == '5';
    r.pos_ = 2;
    PgmRaster raster;
    raster.width = r.read_uint("width");
    raster.height = r.read_uint("height");
    const std::size_t maxval_at = r.pos_;
    const int maxval = r.read_uint("maxval");
    if (maxval != 255) {
        r.fail("maxval must be 255, got " + std::to_string(maxval), maxval_at);
    }
    if (raster.width < 1 || raster.height < 1) {
        r.fail("empty raster", 2);
    }
    const std::size_t count = static_cast<std::size_t>(raster.width) * raster.height;
    raster.values.resize(count);
    if (binary) {
        if (r.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[r.pos_]))) {
            r.fail("expected a single whitespace byte after maxval", r.pos_);
        }
        ++r.pos_;
        const std::size_t available = bytes.size() - r.pos_;
        if (available < count) {
            r.fail("truncated payload: " + std::to_string(available) + " of " +
                       std::to_string(count) + " bytes present",
                   bytes.size());
        }
        if (available > count) {
            r.fail("trailing data after payload", r.pos_ + count);
        }
        for (std::size_t i = 0; i < count; ++i) {
            raster.values[i] = static_cast<std::uint8_t>(bytes[r.pos_ + i]);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            r.skip_space_and_comments();
            if (r.pos_ >= bytes.size()) {
                r.fail("truncated payload: " + std::to_string(i) + " of " + std::to_string(count) +
                           " values present",
                       r.pos_);
            }
            const std::size_t at = r.pos_;
            const int v = r.read_uint("pixel value");
            if (v > 255) {
                r.fail("pixel value exceeds maxval", at);
            }
            raster.values[i] = static_cast<std::uint8_t>(v);
        }
        r.skip_space_and_comments();
        if (r.pos_ != bytes.size()) {
            r.fail("trailing data after payload", r.pos_);
        }
    }
    return raster;
}

std::string encode_pgm(const PgmRaster& raster, PgmEncoding encoding) {
    if (raster.values.size() != static_cast<std::size_t>(raster.width) * raster.height) {
        throw InvalidArgument("PGM raster buffer does not match its dimensions");
    }
    std::string out = (encoding == PgmEncoding::Binary ? "P5\n" : "P2\n") +
                      std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
    if (encoding == PgmEncoding::Binary) {
        out.append(raster.values.begin(), raster.values.end());
        return out;
    }
    for (int y = 0; y < raster.height; ++y) {
        for (int x = 0; x < raster.width; ++x) {
            if (x > 0) {
                out.push_back(' ');
            }
            out += std::to_string(raster.values[static_cast<std::size_t>(y) * raster.width + x]);
        }
        out.push_back('\n');
    }
    return out;
}

std::uint8_t quantize_intensity(double v) {
    const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

PgmRaster to_raster(const GrayImage& image) {
    PgmRaster r{image.width, image.height, std::vector<std::uint8_t>(image.size())};
    for (std::size_t i = 0; i < image.size(); ++i) {
        r.values[i] = quantize_intensity(image.pixels[i]);
    }
    return r;
}

PgmRaster to_raster(const LabelMask& mask) {
    return {mask.width, mask.height, std::vector<std::uint8_t>(mask.classes.begin(), mask.classes.end())};
}

GrayImage image_from_raster(const PgmRaster& raster) {
    GrayImage image(raster.height, raster.width);
    for (std::size_t i = 0; i < image.size(); ++i) {
        image.pixels[i] = raster.values[i] / 255.0;
    }
    return image;
}

LabelMask mask_from_raster(const PgmRaster& raster) {
    LabelMask mask(raster.height, raster.width);
    mask.classes.assign(raster.values.begin(), raster.values.end());
    return mask;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image, PgmEncoding encoding) {
    write_file(path, encode_pgm(to_raster(image), encoding));
}

void write_pgm(const std::filesystem::path& path, const LabelMask& mask, PgmEncoding encoding) {
    write_file(path, encode_pgm(to_raster(mask), encoding));
}

GrayImage read_pgm_image(const std::filesystem::path& path) {
    try {
        return image_from_raster(parse_pgm(read_file(path)));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

LabelMask read_pgm_mask(const std::filesystem::path& path) {
    try {
        return mask_from_raster(parse_pgm(read_file(path)));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace coseg
