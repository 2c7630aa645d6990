#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "coseg/model.hpp"

namespace coseg {

/// Checkpoint layout, all integers little-endian:
///   bytes  0..7   magic "COSEGCK1"
///   bytes  8..15  spec_hash(spec) as uint64
///   bytes 16..23  parameter count as uint64
///   bytes 24..    count IEEE-754 binary64 values
inline constexpr std::string_view kCheckpointMagic = "COSEGCK1";

std::string encode_checkpoint(const ModelParams& params);
/// Rejects a wrong magic, spec hash, count, or payload length.
ModelParams decode_checkpoint(std::string_view bytes, const ModelSpec& spec);

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams read_checkpoint(const std::filesystem::path& path, const ModelSpec& spec);

} // namespace coseg
