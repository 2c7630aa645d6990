#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coseg/correction.hpp"
#include "coseg/cotrain.hpp"
#include "coseg/data.hpp"
#include "coseg/metrics.hpp"

namespace coseg {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// cotrain trace CSV: epoch,net,mean_loss,train_acc_vs_pristine,train_dic_vs_pristine
void write_cotrain_trace_csv(const std::filesystem::path& path, std::span<const EpochTrace> traces);

/// Single-network trace CSV: epoch,mean_loss,train_acc_vs_pristine,train_dic_vs_pristine
void write_single_trace_csv(const std::filesystem::path& path,
                            std::span<const SingleEpochTrace> traces);

/// One training-accuracy curve (noise-free, noisy, or updated labels).
struct CurveSeries {
    std::string noise_type;  // "NoiseFree" for the clean baseline
    double nol = 0.0;
    std::string series;      // "clean", "noisy", "updated"
    std::vector<SingleEpochTrace> points;
};

/// curves.csv: noise_type,nol,series,epoch,train_acc_vs_pristine,train_dic_vs_pristine
void write_curves_csv(const std::filesystem::path& path, std::span<const CurveSeries> curves);

/// scores.csv: id,score,group where group is "clean" or "noisy" by provenance.
void write_scores_csv(const std::filesystem::path& path, std::span<const ScoredSample> scores,
                      const Dataset& noisy_train);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
};

/// Equal-width bins over [lo, hi]; the last bin is closed. Values outside are clamped in.
Histogram histogram(std::span<const double> values, double lo, double hi, int bins = 32);

/// hist_clean.csv and hist_noisy.csv over a shared score range:
/// bin,lo,hi,count
void write_score_histograms(const std::filesystem::path& dir, std::span<const ScoredSample> scores,
                            const Dataset& noisy_train, int bins = 32);

/// For every flagged sample writes overlays/<id>_{pristine_boundary,noisy,corrected}.pgm
/// as class-id masks.
void write_overlays(const std::filesystem::path& dir, const Dataset& noisy_train,
                    const Dataset& updated, std::span<const int> flagged_ids);

/// Inner boundary of a binary mask: foreground pixels with a 4-neighbour in the background.
LabelMask mask_boundary(const LabelMask& mask);

struct ResultRow {
    std::string network;     // "CoSeg" or "UNet"
    std::string noise_type;  // "TypeI", "TypeII", "NoiseFree"
    double nol = 0.0;
    EvalResult eval;
};

/// network,noise_type,nol,acc,dic
void write_results_table(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results_table(const std::filesystem::path& path);

/// Artifacts of one (noise_type, nol) cell of a run.
struct CellReport {
    std::string noise_type;
    double nol = 0.0;
    std::vector<ScoredSample> scores;
    Dataset noisy_train;
    Dataset updated;
    CorrectionReport correction;
};

struct RunReport {
    std::vector<CurveSeries> curves;
    std::vector<CellReport> cells;
    std::vector<ResultRow> results;         // Co-Seg cells + noise-free baseline
    std::vector<ResultRow> noisy_baselines; // single network trained on noisy labels
};

/// Writes curves.csv, results_table.csv, noisy_baseline.csv, and per cell
/// cells/<type>_nol<x>/{scores.csv, hist_clean.csv, hist_noisy.csv,
/// correction_report.json, overlays/}.
void emit_reports(const RunReport& report, const std::filesystem::path& out_dir);

/// Directory name used for a cell, e.g. "TypeI_nol0.5".
std::string cell_dir_name(const std::string& noise_type, double nol);

} // namespace coseg
