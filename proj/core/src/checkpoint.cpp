#include "coseg/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "coseg/error.hpp"
#include "coseg/hash.hpp"

namespace coseg {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
    }
}

std::uint64_t get_u64(std::string_view bytes, std::size_t at) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
    }
    return v;
}

} // namespace

std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

std::string encode_checkpoint(const ModelParams& params) {
    params.validate();
    std::string out(kCheckpointMagic);
    put_u64(out, spec_hash(params.spec));
    put_u64(out, params.values.size());
    out.reserve(out.size() + 8 * params.values.size());
    for (double v : params.values) {
        put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

ModelParams decode_checkpoint(std::string_view bytes, const ModelSpec& spec) {
    constexpr std::size_t header = 24;
    if (bytes.size() < header || bytes.substr(0, 8) != kCheckpointMagic) {
        throw FormatError("checkpoint: bad magic or truncated header");
    }
    const std::uint64_t hash = get_u64(bytes, 8);
    if (hash != spec_hash(spec)) {
        throw FormatError("checkpoint: spec hash " + hex64(hash) + " does not match model spec " +
                          hex64(spec_hash(spec)));
    }
    const std::uint64_t count = get_u64(bytes, 16);
    if (count != param_count(spec)) {
        throw FormatError("checkpoint: stores " + std::to_string(count) + " parameters, spec needs " +
                          std::to_string(param_count(spec)));
    }
    if (bytes.size() != header + 8 * count) {
        throw FormatError("checkpoint: payload is " + std::to_string(bytes.size() - header) +
                          " bytes, expected " + std::to_string(8 * count));
    }
    ModelParams params = zero_model(spec);
    for (std::size_t k = 0; k < count; ++k) {
        params.values[k] = std::bit_cast<double>(get_u64(bytes, header + 8 * k));
    }
    params.validate();
    return params;
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
    const std::string bytes = encode_checkpoint(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing checkpoint " + path.string());
    }
}

ModelParams read_checkpoint(const std::filesystem::path& path, const ModelSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read checkpoint " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_checkpoint(bytes, spec);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace coseg
