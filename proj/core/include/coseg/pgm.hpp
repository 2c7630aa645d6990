#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coseg/types.hpp"

namespace coseg {

/// Decoded portable graymap (maxval 255 only).
struct PgmRaster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;
};

enum class PgmEncoding { Binary /* P5 */, Ascii /* P2 */ };

/// Parses P5 or P2 data. Errors carry the byte offset at which parsing failed.
PgmRaster parse_pgm(std::string_view bytes);
std::string encode_pgm(const PgmRaster& raster, PgmEncoding encoding = PgmEncoding::Binary);

/// Intensity v maps to byte floor(v * 255 + 0.5).
std::uint8_t quantize_intensity(double v);

PgmRaster to_raster(const GrayImage& image);
PgmRaster to_raster(const LabelMask& mask);
GrayImage image_from_raster(const PgmRaster& raster);
LabelMask mask_from_raster(const PgmRaster& raster);

void write_pgm(const std::filesystem::path& path, const GrayImage& image,
               PgmEncoding encoding = PgmEncoding::Binary);
/// Masks are stored with pixel value = class id.
void write_pgm(const std::filesystem::path& path, const LabelMask& mask,
               PgmEncoding encoding = PgmEncoding::Binary);
GrayImage read_pgm_image(const std::filesystem::path& path);
LabelMask read_pgm_mask(const std::filesystem::path& path);

} // namespace coseg
