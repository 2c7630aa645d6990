#include "coseg/manifest.hpp"

#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "coseg/error.hpp"
#include "coseg/pgm.hpp"

namespace coseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string pgm_name(const char* kind, int id) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "pgm/%s_%06d.pgm", kind, id);
    return buf;
}

fs::path resolve(const fs::path& base, const std::string& rel) {
    const fs::path p(rel);
    return p.is_absolute() ? p : base / p;
}

} // namespace

void write_manifest(const fs::path& dir, const Dataset& dataset) {
    dataset.validate();
    std::error_code ec;
    fs::create_directories(dir / "pgm", ec);
    if (ec) {
        throw IoError("cannot create " + (dir / "pgm").string() + ": " + ec.message());
    }
    std::ofstream out(dir / "manifest.jsonl", std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + (dir / "manifest.jsonl").string());
    }
    for (const Sample& s : dataset.samples) {
        const std::string image = pgm_name("image", s.id);
        const std::string mask = pgm_name("mask", s.id);
        const std::string pristine = pgm_name("pristine", s.id);
        write_pgm(dir / image, s.image);
        write_pgm(dir / mask, s.mask);
        write_pgm(dir / pristine, s.pristine_mask);
        const json line = {{"id", s.id},
                           {"image", image},
                           {"mask", mask},
                           {"pristine", pristine},
                           {"provenance", to_string(s.provenance)}};
        out << line.dump() << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + (dir / "manifest.jsonl").string());
    }
}

Dataset read_manifest(const fs::path& manifest_path, Split split, int num_classes) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw IoError("cannot read manifest " + manifest_path.string());
    }
    const fs::path base = manifest_path.parent_path();
    Dataset dataset;
    dataset.split = split;
    dataset.num_classes = num_classes;
    std::set<int> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(where + ": " + e.what());
        }
        Sample s;
        fs::path paths[3];
        try {
            s.id = j.at("id").get<int>();
            paths[0] = resolve(base, j.at("image").get<std::string>());
            paths[1] = resolve(base, j.at("mask").get<std::string>());
            paths[2] = resolve(base, j.at("pristine").get<std::string>());
            s.provenance = provenance_from_string(j.at("provenance").get<std::string>());
        } catch (const json::exception& e) {
            throw FormatError(where + ": " + e.what());
        }
        if (!ids.insert(s.id).second) {
            throw FormatError(where + ": duplicate id " + std::to_string(s.id));
        }
        for (const auto& p : paths) {
            if (!fs::exists(p)) {
                throw IoError(where + ": referenced file " + p.string() + " does not exist");
            }
        }
        s.image = read_pgm_image(paths[0]);
        s.mask = read_pgm_mask(paths[1]);
        s.pristine_mask = read_pgm_mask(paths[2]);
        if (!same_shape(s.image, s.mask) || !same_shape(s.image, s.pristine_mask)) {
            throw FormatError(where + ": image and masks differ in size");
        }
        if (dataset.samples.empty()) {
            dataset.height = s.image.height;
            dataset.width = s.image.width;
        } else if (s.image.height != dataset.height || s.image.width != dataset.width) {
            throw FormatError(where + ": sample is " + std::to_string(s.image.height) + "x" +
                              std::to_string(s.image.width) + " but earlier samples are " +
                              std::to_string(dataset.height) + "x" + std::to_string(dataset.width));
        }
        dataset.samples.push_back(std::move(s));
    }
    try {
        dataset.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    return dataset;
}

} // namespace coseg
