#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "coseg/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out = "run";
    bool force = false;
    std::optional<std::uint64_t> seed;

    std::string corpus;
    std::string noisy;
    std::string peers;
    std::string updated;
    std::string checkpoint;
    std::string test;
};

std::string or_default(const std::string& given, const fs::path& fallback) {
    return given.empty() ? fallback.string() : given;
}

int fail(const nlohmann::json& error) {
    std::cerr << error.dump() << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Co-training segmentation with noisy-label correction"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--config", opt.config, "JSON run configuration (defaults when omitted)");
    app.add_option("--out", opt.out, "Run directory")->capture_default_str();
    app.add_flag("--force", opt.force, "Overwrite existing stage outputs");
    app.add_option("--seed", opt.seed, "Overrides the config seed");

    auto* generate = app.add_subcommand("generate", "Write the synthetic train/test corpus");
    auto* corrupt = app.add_subcommand("corrupt", "Corrupt the training labels");
    corrupt->add_option("--corpus", opt.corpus, "Corpus directory (default <out>/corpus)");
    auto* cotrain = app.add_subcommand("cotrain", "Co-train the two peer networks");
    cotrain->add_option("--noisy", opt.noisy, "Noisy corpus directory (default <out>/noisy)");
    auto* correct = app.add_subcommand("correct", "Flag and relabel noisy samples");
    correct->add_option("--noisy", opt.noisy, "Noisy corpus directory (default <out>/noisy)");
    correct->add_option("--peers", opt.peers, "Peer checkpoint directory (default <out>/peers)");
    auto* retrain = app.add_subcommand("retrain", "Train the final network on the updated corpus");
    retrain->add_option("--updated", opt.updated, "Updated corpus directory (default <out>/updated)");
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test corpus");
    evaluate->add_option("--checkpoint", opt.checkpoint, "Checkpoint (default <out>/final/final.ckpt)");
    evaluate->add_option("--test", opt.test, "Test manifest (default <out>/corpus/test/manifest.jsonl)");
    auto* run_all = app.add_subcommand("run-all", "Run the full noise grid with baselines and reports");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        return fail({{"error", "usage"}, {"stage", "cli"}, {"message", e.what()}});
    }

    std::string stage = "config";
    try {
        const coseg::RunConfig cfg = opt.config.empty()
                                         ? coseg::RunConfig::from_json(nlohmann::json::object(), opt.seed)
                                         : coseg::load_run_config(opt.config, opt.seed);
        const coseg::RunLayout run{opt.out};

        if (generate->parsed()) {
            stage = "generate";
            coseg::stage_generate(cfg, run.corpus(), opt.force);
        } else if (corrupt->parsed()) {
            stage = "corrupt";
            const fs::path corpus = or_default(opt.corpus, run.corpus());
            coseg::stage_corrupt(cfg, corpus / "train" / "manifest.jsonl", run.noisy(), opt.force);
        } else if (cotrain->parsed()) {
            stage = "cotrain";
            const fs::path noisy = or_default(opt.noisy, run.noisy());
            coseg::stage_cotrain(cfg, noisy / "manifest.jsonl", run.peers(), opt.force);
        } else if (correct->parsed()) {
            stage = "correct";
            const fs::path noisy = or_default(opt.noisy, run.noisy());
            coseg::stage_correct(cfg, noisy / "manifest.jsonl", or_default(opt.peers, run.peers()),
                                 run.updated(), opt.force);
        } else if (retrain->parsed()) {
            stage = "retrain";
            const fs::path updated = or_default(opt.updated, run.updated());
            coseg::stage_retrain(cfg, updated / "manifest.jsonl", run.final_dir(), opt.force);
        } else if (evaluate->parsed()) {
            stage = "evaluate";
            const coseg::EvalResult result =
                coseg::stage_evaluate(cfg, or_default(opt.checkpoint, run.final_checkpoint()),
                                      or_default(opt.test, run.test_manifest()));
            std::cout << coseg::to_json(result).dump() << "\n";
            return 0;
        } else if (run_all->parsed()) {
            stage = "run-all";
            coseg::run_all(cfg, run.root, opt.force, [](const std::string& line) { std::cerr << line << "\n"; });
            return 0;
        }
        coseg::write_run_metadata(cfg, run.root);
    } catch (const std::exception& e) {
        return fail(coseg::stage_error(stage, e).to_json());
    }
    return 0;
}
