#include "coseg/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include "coseg/checkpoint.hpp"
#include "coseg/hash.hpp"
#include "coseg/manifest.hpp"
#include "coseg/parallel.hpp"
#include "coseg/report.hpp"
#include "coseg/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace coseg {

namespace {

constexpr std::uint64_t kNoiseStream = 0x4E015E;
constexpr std::uint64_t kPeerStream = 0x9EE45;
constexpr std::uint64_t kFinalStream = 0xF17A1;

const char* const kKnownKeys[] = {
    "seed", "n_train", "n_test", "image_size",
    "noise_type", "nol", "n_max", "bias_direction", "bias_radius", "dropout_fraction", "noise_seed",
    "epochs", "batch_size", "alpha", "alpha_overridden", "warmup_epochs", "lr", "lr_schedule",
    "momentum", "lambda1", "lambda2", "prob_clamp", "train_seed",
    "final_epochs", "final_batch_size", "final_lr", "final_lr_schedule", "final_momentum",
    "final_seed", "noisy_fraction", "grid_noise_types", "grid_nols",
};

template <typename T>
T read_key(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end()) {
        return fallback;
    }
    try {
        if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
                throw FormatError("");
            }
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_integer()) {
                throw FormatError("");
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) {
                throw FormatError("");
            }
        }
        return it->get<T>();
    } catch (const std::exception&) {
        throw FormatError(std::string("config key '") + key + "' has the wrong type: " + it->dump());
    }
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
    if (dynamic_cast<const NumericalError*>(&e)) return "numerical_error";
    if (dynamic_cast<const FormatError*>(&e)) return "format_error";
    if (dynamic_cast<const IoError*>(&e)) return "io_error";
    return "error";
}

/// Runs body, tagging any failure with the stage name.
template <typename Fn>
auto in_stage(const std::string& stage, Fn&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, error_kind(e), e.what());
    }
}

void require_input(const std::string& stage, const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw StageError(stage, "missing_input",
                         "missing " + path.string() + " (run '" + producer + "' first)");
    }
}

/// Refuses to overwrite `marker` unless forced; with force, clears `dir`.
void prepare_output(const std::string& stage, const fs::path& dir, const fs::path& marker, bool force) {
    if (fs::exists(marker)) {
        if (!force) {
            throw StageError(stage, "output_exists",
                             marker.string() + " already exists (pass --force to overwrite)");
        }
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

void log_line(const LogFn& log, const std::string& line) {
    if (log) {
        log(line);
    }
}

} // namespace

RunConfig RunConfig::for_cell(NoiseType type, double nol) const {
    RunConfig c = *this;
    c.noise.noise_type = type;
    c.noise.nol = nol;
    if (!alpha_overridden) {
        c.peers.alpha = 1.0 - nol;
    }
    return c;
}

json RunConfig::to_json() const {
    json grid_types = json::array();
    for (NoiseType t : grid_noise_types) {
        grid_types.push_back(to_string(t));
    }
    json j = {
        {"seed", seed},
        {"n_train", n_train},
        {"n_test", n_test},
        {"image_size", image_size},
        {"noise_type", to_string(noise.noise_type)},
        {"nol", noise.nol},
        {"n_max", noise.n_max},
        {"bias_direction", to_string(noise.bias_direction)},
        {"bias_radius", noise.bias_radius},
        {"dropout_fraction", noise.dropout_fraction},
        {"noise_seed", noise.seed},
        {"epochs", peers.epochs},
        {"batch_size", peers.batch_size},
        {"alpha", peers.alpha},
        {"alpha_overridden", alpha_overridden},
        {"warmup_epochs", peers.warmup_epochs},
        {"lr", peers.lr},
        {"lr_schedule", to_string(peers.schedule)},
        {"momentum", peers.momentum},
        {"lambda1", peers.loss.lambda1},
        {"lambda2", peers.loss.lambda2},
        {"prob_clamp", peers.loss.prob_clamp},
        {"train_seed", peers.seed},
        {"final_epochs", final_net.epochs},
        {"final_batch_size", final_net.batch_size},
        {"final_lr", final_net.lr},
        {"final_lr_schedule", to_string(final_net.schedule)},
        {"final_momentum", final_net.momentum},
        {"final_seed", final_net.seed},
        {"grid_noise_types", grid_types},
        {"grid_nols", grid_nols},
    };
    j["noisy_fraction"] = noisy_fraction ? json(*noisy_fraction) : json();
    return j;
}

RunConfig RunConfig::from_json(const json& j, std::optional<std::uint64_t> seed_override) {
    if (!j.is_object()) {
        throw FormatError("config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys)) {
            throw FormatError("unknown config key '" + key + "'");
        }
    }

    RunConfig c;
    c.seed = seed_override.value_or(read_key<std::uint64_t>(j, "seed", c.seed));
    c.n_train = read_key(j, "n_train", c.n_train);
    c.n_test = read_key(j, "n_test", c.n_test);
    c.image_size = read_key(j, "image_size", c.image_size);

    try {
        c.noise.noise_type = noise_type_from_string(read_key<std::string>(j, "noise_type", "TypeI"));
        c.noise.bias_direction =
            bias_direction_from_string(read_key<std::string>(j, "bias_direction", "Mixed"));
        c.peers.schedule = lr_schedule_from_string(
            read_key<std::string>(j, "lr_schedule", to_string(c.peers.schedule)));
        c.final_net.schedule = lr_schedule_from_string(
            read_key<std::string>(j, "final_lr_schedule", "cosine"));
        if (j.contains("grid_noise_types")) {
            c.grid_noise_types.clear();
            for (const auto& name : read_key<std::vector<std::string>>(j, "grid_noise_types", {})) {
                c.grid_noise_types.push_back(noise_type_from_string(name));
            }
        }
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    c.noise.nol = read_key(j, "nol", c.noise.nol);
    c.noise.n_max = read_key(j, "n_max", c.noise.n_max);
    c.noise.bias_radius = read_key(j, "bias_radius", c.noise.bias_radius);
    c.noise.dropout_fraction = read_key(j, "dropout_fraction", c.noise.dropout_fraction);
    c.noise.seed = read_key<std::uint64_t>(j, "noise_seed", mix_seed(c.seed, kNoiseStream));

    c.peers.epochs = read_key(j, "epochs", c.peers.epochs);
    c.peers.batch_size = read_key(j, "batch_size", c.peers.batch_size);
    c.peers.warmup_epochs = read_key(j, "warmup_epochs", c.peers.warmup_epochs);
    c.peers.lr = read_key(j, "lr", c.peers.lr);
    c.peers.momentum = read_key(j, "momentum", c.peers.momentum);
    c.peers.loss.lambda1 = read_key(j, "lambda1", c.peers.loss.lambda1);
    c.peers.loss.lambda2 = read_key(j, "lambda2", c.peers.loss.lambda2);
    c.peers.loss.prob_clamp = read_key(j, "prob_clamp", c.peers.loss.prob_clamp);
    c.peers.seed = read_key<std::uint64_t>(j, "train_seed", mix_seed(c.seed, kPeerStream));

    c.alpha_overridden = j.contains("alpha") && read_key(j, "alpha_overridden", true);
    c.peers.alpha = c.alpha_overridden ? read_key(j, "alpha", 1.0) : 1.0 - c.noise.nol;

    c.final_net.epochs = read_key(j, "final_epochs", c.peers.epochs);
    c.final_net.batch_size = read_key(j, "final_batch_size", c.peers.batch_size);
    c.final_net.lr = read_key(j, "final_lr", 1e-4);
    c.final_net.momentum = read_key(j, "final_momentum", c.peers.momentum);
    c.final_net.loss = c.peers.loss;
    c.final_net.alpha = 1.0;
    c.final_net.warmup_epochs = 0;
    c.final_net.seed = read_key<std::uint64_t>(j, "final_seed", mix_seed(c.seed, kFinalStream));

    if (j.contains("noisy_fraction") && !j["noisy_fraction"].is_null()) {
        c.noisy_fraction = read_key(j, "noisy_fraction", 0.0);
    }
    if (j.contains("grid_nols")) {
        c.grid_nols = read_key<std::vector<double>>(j, "grid_nols", {});
    }
    c.validate();
    return c;
}

void RunConfig::validate() const {
    if (n_train < 1 || n_test < 1) {
        throw InvalidArgument("n_train and n_test must be positive");
    }
    if (image_size < 16 || image_size % 2 != 0) {
        throw InvalidArgument("image_size must be even and at least 16, got " + std::to_string(image_size));
    }
    noise.validate();
    peers.validate();
    final_net.validate();
    if (noisy_fraction && !(*noisy_fraction >= 0.0 && *noisy_fraction <= 1.0)) {
        throw InvalidArgument("noisy_fraction must lie in [0, 1]");
    }
    if (grid_noise_types.empty() || grid_nols.empty()) {
        throw InvalidArgument("grid_noise_types and grid_nols must be non-empty");
    }
    for (double nol : grid_nols) {
        if (!(nol >= 0.0 && nol <= 1.0)) {
            throw InvalidArgument("grid_nols entries must lie in [0, 1]");
        }
    }
}

RunConfig load_run_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
    if (!fs::exists(path)) {
        throw IoError("config file not found: " + path.string());
    }
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
    try {
        return RunConfig::from_json(j, seed_override);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument("config " + path.string() + ": " + e.what());
    }
}

json StageError::to_json() const {
    return {{"error", kind_}, {"stage", stage_}, {"message", what()}};
}

StageError stage_error(const std::string& stage, const std::exception& e) {
    if (const auto* tagged = dynamic_cast<const StageError*>(&e)) {
        return *tagged;
    }
    return StageError(stage, error_kind(e), e.what());
}

json to_json(const EvalResult& eval) {
    return {{"acc", eval.acc}, {"dic", eval.dic}, {"n_samples", eval.n_samples}};
}

Corpus stage_generate(const RunConfig& cfg, const fs::path& corpus_dir, bool force) {
    return in_stage("generate", [&] {
        cfg.validate();
        prepare_output("generate", corpus_dir, corpus_dir / "train" / "manifest.jsonl", force);
        Corpus corpus = make_corpus(cfg.seed, cfg.n_train, cfg.n_test, cfg.image_size);
        write_manifest(corpus_dir / "train", corpus.train);
        write_manifest(corpus_dir / "test", corpus.test);
        return corpus;
    });
}

Dataset stage_corrupt(const RunConfig& cfg, const fs::path& train_manifest, const fs::path& out_dir,
                      bool force) {
    return in_stage("corrupt", [&] {
        require_input("corrupt", train_manifest, "generate");
        prepare_output("corrupt", out_dir, out_dir / "manifest.jsonl", force);
        const Dataset clean = read_manifest(train_manifest, Split::Train);
        Dataset noisy = corrupt_dataset(clean, cfg.noise);
        write_manifest(out_dir, noisy);
        return noisy;
    });
}

CotrainResult stage_cotrain(const RunConfig& cfg, const fs::path& noisy_manifest, const fs::path& out_dir,
                            bool force) {
    return in_stage("cotrain", [&] {
        require_input("cotrain", noisy_manifest, "corrupt");
        prepare_output("cotrain", out_dir, out_dir / "peer1.ckpt", force);
        const Dataset noisy = read_manifest(noisy_manifest, Split::Train);
        CotrainResult result = cotrain(cfg.model_spec(), noisy, cfg.peers);
        write_checkpoint(out_dir / "peer1.ckpt", result.pair.net1);
        write_checkpoint(out_dir / "peer2.ckpt", result.pair.net2);
        write_cotrain_trace_csv(out_dir / "cotrain_trace.csv", result.traces);
        return result;
    });
}

UpdatedDataset stage_correct(const RunConfig& cfg, const fs::path& noisy_manifest, const fs::path& peers_dir,
                             const fs::path& out_dir, bool force) {
    return in_stage("correct", [&] {
        require_input("correct", noisy_manifest, "corrupt");
        require_input("correct", peers_dir / "peer1.ckpt", "cotrain");
        require_input("correct", peers_dir / "peer2.ckpt", "cotrain");
        prepare_output("correct", out_dir, out_dir / "manifest.jsonl", force);
        const ModelSpec spec = cfg.model_spec();
        const Dataset noisy = read_manifest(noisy_manifest, Split::Train);
        const ModelParams net1 = read_checkpoint(peers_dir / "peer1.ckpt", spec);
        const ModelParams net2 = read_checkpoint(peers_dir / "peer2.ckpt", spec);
        UpdatedDataset updated = build_updated_dataset(noisy, net1, net2, cfg.resolved_noisy_fraction(),
                                                       cfg.peers.loss.prob_clamp);
        write_manifest(out_dir, updated.dataset);
        write_text(out_dir / "correction_report.json", updated.report.to_json().dump(2) + "\n");
        write_scores_csv(out_dir / "scores.csv", updated.scores, noisy);
        write_overlays(out_dir / "overlays", noisy, updated.dataset, updated.report.flagged_ids);
        return updated;
    });
}

TrainResult stage_retrain(const RunConfig& cfg, const fs::path& updated_manifest, const fs::path& out_dir,
                          bool force) {
    return in_stage("retrain", [&] {
        require_input("retrain", updated_manifest, "correct");
        prepare_output("retrain", out_dir, out_dir / "final.ckpt", force);
        const Dataset updated = read_manifest(updated_manifest, Split::Train);
        TrainResult result = retrain_final(cfg.model_spec(), updated, cfg.final_net);
        write_checkpoint(out_dir / "final.ckpt", result.params);
        write_single_trace_csv(out_dir / "retrain_trace.csv", result.traces);
        return result;
    });
}

EvalResult stage_evaluate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& test_manifest) {
    return in_stage("evaluate", [&] {
        require_input("evaluate", checkpoint, "retrain");
        require_input("evaluate", test_manifest, "generate");
        const ModelParams params = read_checkpoint(checkpoint, cfg.model_spec());
        const Dataset test = read_manifest(test_manifest, Split::Test);
        return evaluate(params, test);
    });
}

void write_run_metadata(const RunConfig& cfg, const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            const std::string rel = fs::relative(entry.path(), root).generic_string();
            if (rel != "run_metadata.json") {
                files.push_back(rel);
            }
        }
    }
    std::sort(files.begin(), files.end());
    json artifacts = json::object();
    for (const std::string& rel : files) {
        artifacts[rel] = hex64(fnv1a64(read_file(root / rel)));
    }
    const json meta = {{"config", cfg.to_json()}, {"artifacts", artifacts}};
    write_text(root / "run_metadata.json", meta.dump(2) + "\n");
}

namespace {

struct CellOutcome {
    CellReport report;
    ResultRow coseg;
    ResultRow noisy_baseline;
    CurveSeries noisy_curve;
    CurveSeries updated_curve;
};

TrainResult train_baseline(const RunConfig& cfg, const Dataset& train, const fs::path& dir,
                           const std::string& stage) {
    return in_stage(stage, [&] {
        fs::create_directories(dir);
        TrainResult result = train_single(cfg.model_spec(), train, cfg.final_net);
        write_checkpoint(dir / "final.ckpt", result.params);
        write_single_trace_csv(dir / "trace.csv", result.traces);
        return result;
    });
}

CellOutcome run_cell(const RunConfig& cell, const RunLayout& top, const Dataset& test, const LogFn& log) {
    const std::string type = to_string(cell.noise.noise_type);
    const std::string name = cell_dir_name(type, cell.noise.nol);
    const RunLayout dir{top.root / "cells" / name};

    const Dataset noisy = stage_corrupt(cell, top.train_manifest(), dir.noisy(), false);
    log_line(log, name + ": corrupt done");
    stage_cotrain(cell, dir.noisy() / "manifest.jsonl", dir.peers(), false);
    log_line(log, name + ": cotrain done");
    UpdatedDataset updated = stage_correct(cell, dir.noisy() / "manifest.jsonl", dir.peers(), dir.updated(), false);
    log_line(log, name + ": correct done");
    const TrainResult final_net = stage_retrain(cell, dir.updated() / "manifest.jsonl", dir.final_dir(), false);
    const EvalResult eval = in_stage("evaluate", [&] { return evaluate(final_net.params, test); });
    log_line(log, name + ": retrain done, test dic " + format_double(eval.dic));

    const TrainResult baseline = train_baseline(cell, noisy, dir.root / "noisy_baseline", "baseline");
    const EvalResult baseline_eval = in_stage("evaluate", [&] { return evaluate(baseline.params, test); });
    log_line(log, name + ": noisy baseline done, test dic " + format_double(baseline_eval.dic));

    CellOutcome out;
    out.report = CellReport{type, cell.noise.nol, std::move(updated.scores), noisy,
                            std::move(updated.dataset), std::move(updated.report)};
    out.coseg = ResultRow{"CoSeg", type, cell.noise.nol, eval};
    out.noisy_baseline = ResultRow{"UNet", type, cell.noise.nol, baseline_eval};
    out.noisy_curve = CurveSeries{type, cell.noise.nol, "noisy", baseline.traces};
    out.updated_curve = CurveSeries{type, cell.noise.nol, "updated", final_net.traces};
    return out;
}

} // namespace

void run_all(const RunConfig& cfg, const fs::path& root, bool force, const LogFn& log) {
    const RunLayout top{root};
    in_stage("run-all", [&] {
        cfg.validate();
        for (const char* part : {"corpus", "cells", "baseline_clean", "results_table.csv"}) {
            if (!fs::exists(root / part)) {
                continue;
            }
            if (!force) {
                throw StageError("run-all", "output_exists",
                                 (root / part).string() + " already exists (pass --force to overwrite)");
            }
        }
        if (force) {
            for (const char* part : {"corpus", "cells", "baseline_clean", "results_table.csv",
                                     "noisy_baseline.csv", "curves.csv", "run_metadata.json"}) {
                fs::remove_all(root / part);
            }
        }
        fs::create_directories(root);
    });

    const Corpus corpus = stage_generate(cfg, top.corpus(), false);
    log_line(log, "generate done");

    const TrainResult clean = train_baseline(cfg, corpus.train, root / "baseline_clean", "baseline");
    const EvalResult clean_eval = in_stage("evaluate", [&] { return evaluate(clean.params, corpus.test); });
    log_line(log, "clean baseline done, test dic " + format_double(clean_eval.dic));

    std::vector<RunConfig> cells;
    for (NoiseType type : cfg.grid_noise_types) {
        for (double nol : cfg.grid_nols) {
            cells.push_back(cfg.for_cell(type, nol));
        }
    }

    std::mutex log_mutex;
    const LogFn cell_log = [&](const std::string& line) {
        std::lock_guard lock(log_mutex);
        log_line(log, line);
    };
    std::vector<CellOutcome> outcomes(cells.size());
    parallel_for(cells.size(), [&](std::size_t i) {
        outcomes[i] = run_cell(cells[i], top, corpus.test, cell_log);
    });

    RunReport report;
    report.curves.push_back(CurveSeries{"NoiseFree", 0.0, "clean", clean.traces});
    for (CellOutcome& o : outcomes) {
        report.curves.push_back(std::move(o.noisy_curve));
        report.curves.push_back(std::move(o.updated_curve));
        report.results.push_back(o.coseg);
        report.noisy_baselines.push_back(o.noisy_baseline);
        report.cells.push_back(std::move(o.report));
    }
    report.results.push_back(ResultRow{"UNet", "NoiseFree", 0.0, clean_eval});
    in_stage("report", [&] {
        emit_reports(report, root);
        write_run_metadata(cfg, root);
    });
    log_line(log, "reports written to " + root.string());
}

} // namespace coseg
