#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coseg/correction.hpp"
#include "coseg/cotrain.hpp"
#include "coseg/data.hpp"
#include "coseg/error.hpp"
#include "coseg/metrics.hpp"
#include "coseg/model.hpp"
#include "coseg/noise.hpp"

namespace coseg {

/// Fully resolved run configuration. Serialised as one flat JSON object:
///
///   seed, n_train, n_test, image_size,
///   noise_type, nol, n_max, bias_direction, bias_radius, dropout_fraction, noise_seed,
///   epochs, batch_size, alpha, warmup_epochs, lr, lr_schedule, momentum,
///   lambda1, lambda2, prob_clamp, train_seed,
///   final_epochs, final_batch_size, final_lr, final_lr_schedule, final_momentum, final_seed,
///   noisy_fraction, grid_noise_types, grid_nols
///
/// Missing keys take their defaults. alpha defaults to 1 - nol; giving it
/// explicitly is recorded as "alpha_overridden". Seeds not given are derived
/// from "seed". The peers default to a constant lr of 5e-5; the final and
/// baseline networks to cosine at 1e-4.
struct RunConfig {
    std::uint64_t seed = 1;
    int n_train = 128;
    int n_test = 64;
    int image_size = 32;
    NoiseConfig noise;
    TrainConfig peers;
    TrainConfig final_net;
    bool alpha_overridden = false;
    std::optional<double> noisy_fraction;  // defaults to nol
    std::vector<NoiseType> grid_noise_types{NoiseType::TypeI, NoiseType::TypeII};
    std::vector<double> grid_nols{0.1, 0.3, 0.5};

    [[nodiscard]] ModelSpec model_spec() const { return tiny_spec(image_size, image_size, 2); }
    [[nodiscard]] double resolved_noisy_fraction() const { return noisy_fraction.value_or(noise.nol); }
    /// Copy of this config for one grid cell; alpha follows the cell's nol unless overridden.
    [[nodiscard]] RunConfig for_cell(NoiseType type, double nol) const;

    [[nodiscard]] nlohmann::json to_json() const;
    /// Unknown keys and ill-typed values raise FormatError.
    static RunConfig from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed_override = {});
    void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = {});

/// An error tagged with the pipeline stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, std::string kind, const std::string& message)
        : Error(message), stage_(std::move(stage)), kind_(std::move(kind)) {}

    [[nodiscard]] const std::string& stage() const { return stage_; }
    [[nodiscard]] const std::string& kind() const { return kind_; }
    [[nodiscard]] nlohmann::json to_json() const;

private:
    std::string stage_;
    std::string kind_;
};

/// Wraps any exception as a StageError for `stage`, keeping its category.
StageError stage_error(const std::string& stage, const std::exception& e);

/// Standard layout of a run directory.
struct RunLayout {
    std::filesystem::path root;

    [[nodiscard]] std::filesystem::path corpus() const { return root / "corpus"; }
    [[nodiscard]] std::filesystem::path train_manifest() const { return corpus() / "train" / "manifest.jsonl"; }
    [[nodiscard]] std::filesystem::path test_manifest() const { return corpus() / "test" / "manifest.jsonl"; }
    [[nodiscard]] std::filesystem::path noisy() const { return root / "noisy"; }
    [[nodiscard]] std::filesystem::path peers() const { return root / "peers"; }
    [[nodiscard]] std::filesystem::path updated() const { return root / "updated"; }
    [[nodiscard]] std::filesystem::path final_dir() const { return root / "final"; }
    [[nodiscard]] std::filesystem::path final_checkpoint() const { return final_dir() / "final.ckpt"; }
};

using LogFn = std::function<void(const std::string&)>;

/// Writes <corpus_dir>/{train,test}/manifest.jsonl and their PGMs.
Corpus stage_generate(const RunConfig& cfg, const std::filesystem::path& corpus_dir, bool force);

/// Reads a clean training manifest and writes the corrupted copy to out_dir.
Dataset stage_corrupt(const RunConfig& cfg, const std::filesystem::path& train_manifest,
                      const std::filesystem::path& out_dir, bool force);

/// Writes peer1.ckpt, peer2.ckpt and cotrain_trace.csv to out_dir.
CotrainResult stage_cotrain(const RunConfig& cfg, const std::filesystem::path& noisy_manifest,
                            const std::filesystem::path& out_dir, bool force);

/// Writes the updated manifest, correction_report.json, scores.csv and
/// overlays/ to out_dir.
UpdatedDataset stage_correct(const RunConfig& cfg, const std::filesystem::path& noisy_manifest,
                             const std::filesystem::path& peers_dir,
                             const std::filesystem::path& out_dir, bool force);

/// Writes final.ckpt and retrain_trace.csv to out_dir.
TrainResult stage_retrain(const RunConfig& cfg, const std::filesystem::path& updated_manifest,
                          const std::filesystem::path& out_dir, bool force);

EvalResult stage_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                          const std::filesystem::path& test_manifest);

nlohmann::json to_json(const EvalResult& eval);

/// Records the resolved config and FNV-1a hashes of every file under root in
/// root/run_metadata.json.
void write_run_metadata(const RunConfig& cfg, const std::filesystem::path& root);

/// Full experiment: corpus, noise-free baseline, and for every grid cell
/// corrupt -> cotrain -> correct -> retrain -> evaluate plus a noisy-label
/// baseline; then every report file.
void run_all(const RunConfig& cfg, const std::filesystem::path& root, bool force,
             const LogFn& log = {});

} // namespace coseg
