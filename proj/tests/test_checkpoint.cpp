#include <gtest/gtest.h>

#include <filesystem>

#include "coseg/checkpoint.hpp"
#include "coseg/error.hpp"

using namespace coseg;

TEST(Checkpoint, RoundTripIsExact) {
    const ModelParams p = init_model(tiny_spec(), 12);
    const std::string bytes = encode_checkpoint(p);
    EXPECT_EQ(bytes.size(), 24 + 8 * p.values.size());
    EXPECT_EQ(bytes.substr(0, 8), "COSEGCK1");
    EXPECT_EQ(decode_checkpoint(bytes, tiny_spec()), p);

    const auto path = std::filesystem::temp_directory_path() / "coseg_ckpt_roundtrip.ckpt";
    write_checkpoint(path, p);
    EXPECT_EQ(read_checkpoint(path, tiny_spec()), p);
    std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptInputs) {
    const ModelParams p = init_model(tiny_spec(), 12);
    std::string bytes = encode_checkpoint(p);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(decode_checkpoint(bad_magic, tiny_spec()), FormatError);
    EXPECT_THROW(decode_checkpoint(bytes, tiny_spec(16, 16, 2)), FormatError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 1), tiny_spec()), FormatError);
    EXPECT_THROW(decode_checkpoint(bytes + "x", tiny_spec()), FormatError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, 10), tiny_spec()), FormatError);
    EXPECT_THROW(read_checkpoint("/nonexistent/coseg.ckpt", tiny_spec()), IoError);
}
