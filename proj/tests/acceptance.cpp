// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero if any fails.
// Usage: coseg_acceptance [work_dir]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coseg/cotrain.hpp"
#include "coseg/morphology.hpp"
#include "coseg/noise.hpp"
#include "coseg/objectives.hpp"
#include "coseg/pipeline.hpp"
#include "coseg/report.hpp"
#include "oracles.hpp"

using namespace coseg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double cpu_seconds() {
    return static_cast<double>(std::clock()) / CLOCKS_PER_SEC;
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::istringstream in(slurp(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

Outcome gradient_correctness() {
    const double start = cpu_seconds();
    Rng rng(2024);
    const ModelSpec spec = tiny_spec(16, 16, 2);
    double worst = 0.0;
    std::size_t checked = 0;
    std::size_t kinks = 0;
    for (int input = 0; input < 5; ++input) {
        const ModelParams params = init_model(spec, 100 + input);
        const GrayImage image = oracle::random_image(rng, 16, 16);
        const LabelMask mask = oracle::random_mask(rng, 16, 16, 2, 0.3);
        const auto check = oracle::finite_difference_check(params, image, mask, LossConfig{}, 10, 1e-4,
                                                           500 + input);
        worst = std::max(worst, check.max_rel_error);
        checked += check.checked;
        kinks += check.skipped_kinks;
    }
    const double elapsed = cpu_seconds() - start;
    return {worst <= 1e-3 && checked == 50 && elapsed < 60.0,
            fmt("max rel error %.3g over %.0f coordinates (%.0f kink-crossing draws redrawn), %.1fs", worst,
                static_cast<double>(checked), static_cast<double>(kinks), elapsed)};
}

Outcome objective_oracles() {
    Rng rng(7);
    const double clamp = 1e-7;
    double worst_ce = 0.0;
    double worst_dice = 0.0;
    bool identical = true;
    for (int trial = 0; trial < 100; ++trial) {
        const ProbMap p = oracle::random_probs(rng, 4, 4, 3);
        const LabelMask m = oracle::random_mask(rng, 4, 4, 3);
        const double ce = cross_entropy_loss(p, m, clamp);
        const double score = corruption_score(p, m, clamp);
        worst_ce = std::max(worst_ce, std::abs(ce - oracle::cross_entropy(p, m, clamp)));
        worst_dice = std::max(worst_dice, std::abs(dice_loss(p, m) - oracle::dice_loss(p, m)));
        identical = identical && std::memcmp(&ce, &score, sizeof ce) == 0;
    }
    return {worst_ce <= 1e-10 && worst_dice <= 1e-10 && identical,
            fmt("max |CE - oracle| %.3g, max |Dice - oracle| %.3g, score == CE bitwise: ", worst_ce,
                worst_dice) + (identical ? "yes" : "no")};
}

Outcome morphology_oracles() {
    Rng rng(8);
    int mismatches = 0;
    int law_failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const LabelMask m = oracle::random_mask(rng, 8, 8, 2, rng.uniform(0.1, 0.9));
        for (int r = 0; r <= 3; ++r) {
            mismatches += dilate(m, r) != oracle::dilate(m, r);
            mismatches += erode(m, r) != oracle::erode(m, r);
            law_failures += erode(m, r) != complement(dilate_with_border(complement(m), r, 1));
            law_failures += complement(erode(m, r)) != dilate_with_border(complement(m), r, 1);
        }
        law_failures += dilate(dilate(m, 1), 2) != dilate(m, 3);
        law_failures += erode(erode(m, 1), 2) != erode(m, 3);
        law_failures += dilate(dilate(m, 1), 1) != dilate(m, 2);
        law_failures += erode(erode(m, 1), 1) != erode(m, 2);
    }
    return {mismatches == 0 && law_failures == 0,
            fmt("%.0f brute-force mismatches, %.0f law violations over 100 masks", mismatches, law_failures)};
}

Outcome selection_separation(const RunConfig& base) {
    const double start = cpu_seconds();
    const RunConfig cell = base.for_cell(NoiseType::TypeII, 0.5);
    const Corpus corpus = make_corpus(cell.seed, cell.n_train, cell.n_test, cell.image_size);
    const Dataset noisy = corrupt_dataset(corpus.train, cell.noise);
    const CotrainResult co = cotrain(cell.model_spec(), noisy, cell.peers);
    std::vector<ScoredSample> scores = score_dataset(co.pair.net1, co.pair.net2, noisy, cell.peers.loss.prob_clamp);
    std::sort(scores.begin(), scores.end(), [](const ScoredSample& a, const ScoredSample& b) {
        return a.score != b.score ? a.score < b.score : a.id < b.id;
    });
    int clean_total = 0;
    int clean_bottom = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool clean = !noisy.samples[noisy.index_of(scores[i].id)].is_corrupted();
        clean_total += clean;
        clean_bottom += clean && i < scores.size() / 2;
    }
    const double fraction = static_cast<double>(clean_bottom) / clean_total;
    const double elapsed = cpu_seconds() - start;
    return {fraction >= 0.8 && elapsed <= 600.0,
            fmt("%.3f of clean samples in the bottom half (%.0f/%.0f), %.0f CPU-s", fraction, clean_bottom,
                clean_total, elapsed)};
}

Outcome label_quality(const fs::path& run) {
    bool pass = true;
    std::string detail;
    for (const char* type : {"TypeI", "TypeII"}) {
        const auto report = nlohmann::json::parse(
            slurp(run / "cells" / cell_dir_name(type, 0.5) / "correction_report.json"));
        const double before = report["mean_dice_before"].get<double>();
        const double after = report["mean_dice_after"].get<double>();
        pass = pass && after - before >= 0.05;
        detail += std::string(type) + fmt(": %.4f -> %.4f (+%.4f); ", before, after, after - before);
    }
    return {pass, detail};
}

Outcome overfitting_curve(const fs::path& run) {
    // series -> epoch -> acc, for nol 0.5
    std::map<std::string, std::map<int, double>> acc;
    for (const auto& row : read_csv(run / "curves.csv")) {
        if (row.size() < 5 || std::stod(row[1]) != 0.5) continue;
        acc[row[0] + "/" + row[2]][std::stoi(row[3])] = std::stod(row[4]);
    }
    bool pass = true;
    std::string detail;
    for (const char* type : {"TypeI", "TypeII"}) {
        const auto& noisy = acc.at(std::string(type) + "/noisy");
        const auto& updated = acc.at(std::string(type) + "/updated");
        const double gap = updated.rbegin()->second - noisy.rbegin()->second;
        double lo = 1.0;
        double hi = 0.0;
        int seen = 0;
        for (auto it = updated.rbegin(); it != updated.rend() && seen < 10; ++it, ++seen) {
            lo = std::min(lo, it->second);
            hi = std::max(hi, it->second);
        }
        pass = pass && gap >= 0.02 && hi - lo <= 0.01;
        detail += std::string(type) + fmt(": updated %.4f vs noisy %.4f (gap %.4f), last-10 range %.4f; ",
                                          updated.rbegin()->second, noisy.rbegin()->second, gap, hi - lo);
    }
    return {pass, detail};
}

Outcome table_analog(const fs::path& run, double grid_cpu_seconds) {
    const auto rows = read_results_table(run / "results_table.csv");
    const auto noisy = read_results_table(run / "noisy_baseline.csv");
    const auto clean_it = std::find_if(rows.begin(), rows.end(),
                                       [](const ResultRow& r) { return r.noise_type == "NoiseFree"; });
    if (clean_it == rows.end()) return {false, "no noise-free baseline row"};
    const EvalResult clean = clean_it->eval;
    bool pass = grid_cpu_seconds <= 3600.0;
    double worst_dic = 1.0;
    double worst_acc = 1.0;
    int cells = 0;
    for (const ResultRow& r : rows) {
        if (r.network != "CoSeg") continue;
        ++cells;
        worst_dic = std::min(worst_dic, r.eval.dic - clean.dic);
        worst_acc = std::min(worst_acc, r.eval.acc - clean.acc);
    }
    pass = pass && cells == 6 && worst_dic >= -0.02 && worst_acc >= -0.02;
    std::string detail = fmt("clean DIC %.4f ACC %.4f; worst Co-Seg delta DIC %+.4f ACC %+.4f; ", clean.dic,
                             clean.acc, worst_dic, worst_acc);
    for (const ResultRow& r : noisy) {
        if (r.nol != 0.5) continue;
        const double shortfall = clean.dic - r.eval.dic;
        pass = pass && shortfall > 0.02;
        detail += r.noise_type + fmt(" noisy baseline DIC %.4f (short by %.4f); ", r.eval.dic, shortfall);
    }
    detail += fmt("grid %.1f CPU-min", grid_cpu_seconds / 60.0);
    return {pass, detail};
}

Outcome determinism(const fs::path& a, const fs::path& b) {
    std::vector<std::string> files{"results_table.csv", "curves.csv"};
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file() && e.path().extension() == ".ckpt") {
            files.push_back(fs::relative(e.path(), a).generic_string());
        }
    }
    int differing = 0;
    for (const std::string& f : files) {
        if (!fs::exists(b / f) || slurp(a / f) != slurp(b / f)) {
            std::printf("  differs: %s\n", f.c_str());
            ++differing;
        }
    }
    return {differing == 0 && files.size() > 2,
            fmt("%.0f files compared (%.0f checkpoints), %.0f differ", static_cast<double>(files.size()),
                static_cast<double>(files.size() - 2), differing)};
}

} // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_runs");
    const RunConfig cfg = RunConfig::from_json(nlohmann::json::object());
    const auto log = [](const std::string& line) { std::fprintf(stderr, "  %s\n", line.c_str()); };

    int failures = 0;
    const auto run = [&](int id, const char* name, const std::function<Outcome()>& body) {
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %d %-28s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    };

    run(1, "gradient-correctness", gradient_correctness);
    run(2, "objective-oracles", objective_oracles);
    run(3, "morphology-oracles", morphology_oracles);
    run(4, "selection-separation", [&] { return selection_separation(cfg); });

    double grid_cpu = 0.0;
    std::string grid_error;
    try {
        const double start = cpu_seconds();
        run_all(cfg, work / "run1", true, log);
        grid_cpu = cpu_seconds() - start;
    } catch (const std::exception& e) {
        grid_error = e.what();
    }
    const auto needs_grid = [&](const std::function<Outcome()>& body) {
        return [&, body] { return grid_error.empty() ? body() : Outcome{false, "run-all failed: " + grid_error}; };
    };
    run(5, "label-quality", needs_grid([&] { return label_quality(work / "run1"); }));
    run(6, "overfitting-curve", needs_grid([&] { return overfitting_curve(work / "run1"); }));
    run(7, "table-analog", needs_grid([&] { return table_analog(work / "run1", grid_cpu); }));
    run(8, "determinism", needs_grid([&] {
            run_all(cfg, work / "run2", true, log);
            return determinism(work / "run1", work / "run2");
        }));

    std::printf("%d of 8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
