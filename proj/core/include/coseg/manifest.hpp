#pragma once

#include <filesystem>

#include "coseg/data.hpp"

namespace coseg {

/// Writes `dir/manifest.jsonl` plus one PGM per image/mask/pristine mask
/// under `dir/pgm/`. Each manifest line is a JSON object with the keys
/// "id", "image", "mask", "pristine", "provenance"; paths are relative to `dir`.
void write_manifest(const std::filesystem::path& dir, const Dataset& dataset);

/// Reads a manifest written by write_manifest (or by hand). Rejects missing
/// files, duplicate ids, and inconsistent sizes.
Dataset read_manifest(const std::filesystem::path& manifest_path, Split split,
                      int num_classes = 2);

} // namespace coseg
