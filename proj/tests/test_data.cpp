#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "coseg/error.hpp"
#include "coseg/manifest.hpp"
#include "coseg/pgm.hpp"
#include "coseg/data.hpp"

using namespace coseg;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("coseg_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

} // namespace

TEST(Scene, DeterministicPerSeed) {
    EXPECT_EQ(generate_scene(5, 32), generate_scene(5, 32));
    EXPECT_NE(generate_scene(5, 32).image, generate_scene(6, 32).image);
}

TEST(Scene, ForegroundFractionAndContrast) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Sample s = generate_scene(seed, 32);
        const double fg = static_cast<double>(s.mask.count(1)) / s.mask.size();
        EXPECT_GE(fg, 0.15);
        EXPECT_LE(fg, 0.5);
        double in = 0.0;
        double out = 0.0;
        for (std::size_t i = 0; i < s.mask.size(); ++i) {
            (s.mask.classes[i] ? in : out) += s.image.pixels[i];
        }
        const double fg_count = static_cast<double>(s.mask.count(1));
        EXPECT_GT(in / fg_count, out / (s.mask.size() - fg_count)) << "seed " << seed;
        EXPECT_EQ(s.mask, s.pristine_mask);
        EXPECT_EQ(s.provenance, Provenance::Clean);
    }
}

TEST(Scene, IntensitiesAreQuantized) {
    const Sample s = generate_scene(9, 32);
    for (double v : s.image.pixels) {
        EXPECT_EQ(v, quantize_intensity(v) / 255.0);
    }
}

TEST(Corpus, SmallCorpusConstruction) {
    const Corpus c = make_corpus(1, 4, 2, 32);
    std::set<int> train_ids;
    std::set<int> all_ids;
    for (const Sample& s : c.train.samples) {
        train_ids.insert(s.id);
        all_ids.insert(s.id);
        EXPECT_EQ(s.image.height, 32);
        EXPECT_EQ(s.image.width, 32);
    }
    for (const Sample& s : c.test.samples) {
        EXPECT_EQ(train_ids.count(s.id), 0u);
        all_ids.insert(s.id);
        EXPECT_EQ(s.mask.height, 32);
    }
    EXPECT_EQ(all_ids.size(), 6u);
    EXPECT_EQ(c.train.split, Split::Train);
    EXPECT_EQ(c.test.split, Split::Test);
    const Corpus again = make_corpus(1, 4, 2, 32);
    EXPECT_EQ(c.train, again.train);
    EXPECT_EQ(c.test, again.test);
}

TEST(Corpus, RejectsBadArguments) {
    EXPECT_THROW(make_corpus(1, 0, 2, 32), InvalidArgument);
    EXPECT_THROW(make_corpus(1, 2, 2, 8), InvalidArgument);
}

TEST(Pgm, MaskRoundTrip) {
    LabelMask m(2, 2, 0);
    m.at(0, 1) = 1;
    m.at(1, 0) = 1;
    const fs::path dir = fresh_dir("pgm_mask");
    write_pgm(dir / "m.pgm", m);
    EXPECT_EQ(read_pgm_mask(dir / "m.pgm"), m);
    write_pgm(dir / "a.pgm", m, PgmEncoding::Ascii);
    EXPECT_EQ(read_pgm_mask(dir / "a.pgm"), m);
}

TEST(Pgm, PayloadLengthChecked) {
    const std::string header = "P5 2 2 255\n";
    const PgmRaster ok = parse_pgm(header + std::string("\x00\x01\x02\x03", 4));
    EXPECT_EQ(ok.width, 2);
    EXPECT_EQ(ok.values, (std::vector<std::uint8_t>{0, 1, 2, 3}));
    try {
        parse_pgm(header + std::string("\x00\x01\x02", 3));
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
    }
}

TEST(Pgm, HeaderErrors) {
    EXPECT_THROW(parse_pgm("P6 2 2 255\n...."), FormatError);
    EXPECT_THROW(parse_pgm("P5 2 2 65535\n...."), FormatError);
    EXPECT_THROW(parse_pgm("P2 2 2 255\n0 1 2 300\n"), FormatError);
    const PgmRaster commented = parse_pgm("P2\n# comment\n2 1\n255\n7 9\n");
    EXPECT_EQ(commented.values, (std::vector<std::uint8_t>{7, 9}));
}

TEST(Pgm, HalfIntensityRoundsUp) {
    EXPECT_EQ(quantize_intensity(0.5), 128);
    EXPECT_EQ(quantize_intensity(0.0), 0);
    EXPECT_EQ(quantize_intensity(1.0), 255);
    GrayImage img(8, 8, 0.5);
    const fs::path dir = fresh_dir("pgm_half");
    write_pgm(dir / "i.pgm", img);
    const GrayImage back = read_pgm_image(dir / "i.pgm");
    EXPECT_EQ(back.pixels[0], 128.0 / 255.0);
}

TEST(Manifest, CorpusRoundTrip) {
    const Corpus c = make_corpus(3, 4, 2, 16);
    const fs::path dir = fresh_dir("manifest_rt");
    write_manifest(dir / "train", c.train);
    write_manifest(dir / "test", c.test);
    EXPECT_EQ(read_manifest(dir / "train" / "manifest.jsonl", Split::Train), c.train);
    EXPECT_EQ(read_manifest(dir / "test" / "manifest.jsonl", Split::Test), c.test);
}

TEST(Manifest, DuplicateIdRejected) {
    const Corpus c = make_corpus(3, 2, 1, 16);
    const fs::path dir = fresh_dir("manifest_dup");
    write_manifest(dir, c.train);
    std::ifstream in(dir / "manifest.jsonl");
    std::string first;
    std::getline(in, first);
    in.close();
    write_file(dir / "manifest.jsonl", first + "\n" + first + "\n");
    EXPECT_THROW(read_manifest(dir / "manifest.jsonl", Split::Train), FormatError);
}

TEST(Manifest, MissingFileNamesPath) {
    const Corpus c = make_corpus(3, 2, 1, 16);
    const fs::path dir = fresh_dir("manifest_missing");
    write_manifest(dir, c.train);
    const fs::path victim = dir / "pgm" / "mask_000001.pgm";
    ASSERT_TRUE(fs::exists(victim));
    fs::remove(victim);
    try {
        read_manifest(dir / "manifest.jsonl", Split::Train);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("mask_000001.pgm"), std::string::npos) << e.what();
    }
}

TEST(Manifest, MalformedLineRejected) {
    const fs::path dir = fresh_dir("manifest_bad");
    write_file(dir / "manifest.jsonl", "{\"id\": 1}\n");
    EXPECT_THROW(read_manifest(dir / "manifest.jsonl", Split::Train), FormatError);
    write_file(dir / "manifest.jsonl", "not json\n");
    EXPECT_THROW(read_manifest(dir / "manifest.jsonl", Split::Train), FormatError);
}

TEST(Provenance, StringRoundTrip) {
    for (Provenance p : {Provenance::Clean, Provenance::CorruptedTypeI, Provenance::CorruptedTypeII,
                         Provenance::Corrected}) {
        EXPECT_EQ(provenance_from_string(to_string(p)), p);
    }
    EXPECT_THROW(provenance_from_string("Dirty"), FormatError);
}
