#include "coseg/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "coseg/error.hpp"
#include "coseg/morphology.hpp"
#include "coseg/pgm.hpp"

namespace coseg {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

bool is_noisy(const Dataset& d, int id) {
    return d.samples[d.index_of(id)].is_corrupted();
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string cell_dir_name(const std::string& noise_type, double nol) {
    return noise_type + "_nol" + format_double(nol);
}

void write_cotrain_trace_csv(const fs::path& path, std::span<const EpochTrace> traces) {
    auto out = open_out(path);
    out << "epoch,net,mean_loss,train_acc_vs_pristine,train_dic_vs_pristine\n";
    for (const auto& t : traces) {
        for (int net = 0; net < 2; ++net) {
            const auto& s = t.nets[static_cast<std::size_t>(net)];
            out << t.epoch << ',' << net + 1 << ',' << format_double(s.mean_loss) << ','
                << format_double(s.train_acc) << ',' << format_double(s.train_dic) << '\n';
        }
    }
    finish(out, path);
}

void write_single_trace_csv(const fs::path& path, std::span<const SingleEpochTrace> traces) {
    auto out = open_out(path);
    out << "epoch,mean_loss,train_acc_vs_pristine,train_dic_vs_pristine\n";
    for (const auto& t : traces) {
        out << t.epoch << ',' << format_double(t.stats.mean_loss) << ','
            << format_double(t.stats.train_acc) << ',' << format_double(t.stats.train_dic) << '\n';
    }
    finish(out, path);
}

void write_curves_csv(const fs::path& path, std::span<const CurveSeries> curves) {
    auto out = open_out(path);
    out << "noise_type,nol,series,epoch,train_acc_vs_pristine,train_dic_vs_pristine\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            out << c.noise_type << ',' << format_double(c.nol) << ',' << c.series << ',' << p.epoch
                << ',' << format_double(p.stats.train_acc) << ',' << format_double(p.stats.train_dic)
                << '\n';
        }
    }
    finish(out, path);
}

void write_scores_csv(const fs::path& path, std::span<const ScoredSample> scores,
                      const Dataset& noisy_train) {
    auto out = open_out(path);
    out << "id,score,group\n";
    for (const auto& s : scores) {
        out << s.id << ',' << format_double(s.score) << ','
            << (is_noisy(noisy_train, s.id) ? "noisy" : "clean") << '\n';
    }
    finish(out, path);
}

Histogram histogram(std::span<const double> values, double lo, double hi, int bins) {
    if (bins < 1) {
        throw InvalidArgument("histogram needs at least one bin");
    }
    if (!(hi >= lo)) {
        throw InvalidArgument("histogram range is empty");
    }
    Histogram h{lo, hi, std::vector<std::size_t>(static_cast<std::size_t>(bins), 0)};
    const double width = (hi - lo) / bins;
    for (double v : values) {
        int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

void write_score_histograms(const fs::path& dir, std::span<const ScoredSample> scores,
                            const Dataset& noisy_train, int bins) {
    std::vector<double> clean;
    std::vector<double> noisy;
    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double v = scores[i].score;
        lo = i == 0 ? v : std::min(lo, v);
        hi = i == 0 ? v : std::max(hi, v);
        (is_noisy(noisy_train, scores[i].id) ? noisy : clean).push_back(v);
    }
    for (const auto& [name, values] : {std::pair{"hist_clean.csv", &clean}, std::pair{"hist_noisy.csv", &noisy}}) {
        const Histogram h = histogram(*values, lo, hi, bins);
        const fs::path path = dir / name;
        auto out = open_out(path);
        out << "bin,lo,hi,count\n";
        const double width = (hi - lo) / bins;
        for (int b = 0; b < bins; ++b) {
            out << b << ',' << format_double(lo + b * width) << ','
                << format_double(b == bins - 1 ? hi : lo + (b + 1) * width) << ','
                << h.counts[static_cast<std::size_t>(b)] << '\n';
        }
        finish(out, path);
    }
}

LabelMask mask_boundary(const LabelMask& mask) {
    LabelMask out(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(y, x) == 0) {
                continue;
            }
            const bool edge = y == 0 || x == 0 || y == mask.height - 1 || x == mask.width - 1 ||
                              mask.at(y - 1, x) == 0 || mask.at(y + 1, x) == 0 ||
                              mask.at(y, x - 1) == 0 || mask.at(y, x + 1) == 0;
            out.at(y, x) = edge ? 1 : 0;
        }
    }
    return out;
}

void write_overlays(const fs::path& dir, const Dataset& noisy_train, const Dataset& updated,
                    std::span<const int> flagged_ids) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
    for (int id : flagged_ids) {
        const Sample& before = noisy_train.samples[noisy_train.index_of(id)];
        const Sample& after = updated.samples[updated.index_of(id)];
        char stem[32];
        std::snprintf(stem, sizeof stem, "%06d", id);
        write_pgm(dir / (std::string(stem) + "_pristine_boundary.pgm"), mask_boundary(before.pristine_mask));
        write_pgm(dir / (std::string(stem) + "_noisy.pgm"), before.mask);
        write_pgm(dir / (std::string(stem) + "_corrected.pgm"), after.mask);
    }
}

void write_results_table(const fs::path& path, std::span<const ResultRow> rows) {
    auto out = open_out(path);
    out << "network,noise_type,nol,acc,dic\n";
    for (const auto& r : rows) {
        out << r.network << ',' << r.noise_type << ',' << format_double(r.nol) << ','
            << format_double(r.eval.acc) << ',' << format_double(r.eval.dic) << '\n';
    }
    finish(out, path);
}

std::vector<ResultRow> read_results_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line != "network,noise_type,nol,acc,dic") {
        throw FormatError(path.string() + ": unexpected header '" + line + "'");
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string f[5];
        for (auto& field : f) {
            std::getline(fields, field, ',');
        }
        ResultRow r;
        r.network = f[0];
        r.noise_type = f[1];
        try {
            r.nol = std::stod(f[2]);
            r.eval.acc = std::stod(f[3]);
            r.eval.dic = std::stod(f[4]);
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": malformed row '" + line + "'");
        }
        rows.push_back(r);
    }
    return rows;
}

void emit_reports(const RunReport& report, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw IoError("output directory " + out_dir.string() + " is not writable");
    }
    write_curves_csv(out_dir / "curves.csv", report.curves);
    write_results_table(out_dir / "results_table.csv", report.results);
    write_results_table(out_dir / "noisy_baseline.csv", report.noisy_baselines);
    for (const auto& cell : report.cells) {
        const fs::path dir = out_dir / "cells" / cell_dir_name(cell.noise_type, cell.nol);
        write_scores_csv(dir / "scores.csv", cell.scores, cell.noisy_train);
        write_score_histograms(dir, cell.scores, cell.noisy_train);
        write_overlays(dir / "overlays", cell.noisy_train, cell.updated, cell.correction.flagged_ids);
        auto out = open_out(dir / "correction_report.json");
        out << cell.correction.to_json().dump(2) << '\n';
        finish(out, dir / "correction_report.json");
    }
}

} // namespace coseg
