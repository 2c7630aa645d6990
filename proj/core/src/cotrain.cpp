#include "coseg/cotrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "coseg/error.hpp"
#include "coseg/metrics.hpp"
#include "coseg/parallel.hpp"
#include "coseg/rng.hpp"

namespace coseg {

namespace {

constexpr std::uint64_t kPeer1Stream = 1;
constexpr std::uint64_t kPeer2Stream = 2;
constexpr std::uint64_t kSingleStream = 3;
constexpr std::uint64_t kShuffleStream = 0x5EED0000ULL;

NetEpochStats measure(const ModelParams& params, const Dataset& train, double loss_sum, int batches) {
    const EvalResult eval = evaluate(params, train);
    return {batches > 0 ? loss_sum / batches : 0.0, eval.acc, eval.dic};
}

std::string where(int epoch, int batch) {
    return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch);
}

} // namespace

std::string to_string(LrSchedule s) {
    return s == LrSchedule::Constant ? "constant" : "cosine";
}

LrSchedule lr_schedule_from_string(const std::string& s) {
    if (s == "constant") return LrSchedule::Constant;
    if (s == "cosine") return LrSchedule::Cosine;
    throw InvalidArgument("unknown lr schedule '" + s + "' (expected constant or cosine)");
}

double epoch_lr(const TrainConfig& cfg, int epoch) {
    if (cfg.schedule == LrSchedule::Constant || cfg.epochs <= 0) {
        return cfg.lr;
    }
    return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / cfg.epochs));
}

void TrainConfig::validate() const {
    if (epochs < 0) {
        throw InvalidArgument("epochs must be >= 0");
    }
    if (batch_size < 2) {
        throw InvalidArgument("batch_size must be >= 2");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("alpha must lie in (0, 1], got " + std::to_string(alpha));
    }
    if (warmup_epochs < 0) {
        throw InvalidArgument("warmup_epochs must be >= 0");
    }
    if (!(lr > 0.0)) {
        throw InvalidArgument("lr must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw InvalidArgument("momentum must lie in [0, 1)");
    }
    loss.validate();
}

PeerPair make_peer_pair(const ModelSpec& spec, std::uint64_t seed) {
    return {init_model(spec, mix_seed(seed, kPeer1Stream)), init_model(spec, mix_seed(seed, kPeer2Stream)),
            {}, {}};
}

std::size_t selection_count(std::size_t batch, double alpha) {
    const auto m = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(batch)));
    return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(batch, 1));
}

std::vector<int> select_small_score(std::span<const ScoredSample> batch, double alpha) {
    if (batch.empty()) {
        throw InvalidArgument("select_small_score: empty batch");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("select_small_score: alpha must lie in (0, 1]");
    }
    std::vector<ScoredSample> ranked(batch.begin(), batch.end());
    for (const auto& s : ranked) {
        if (!std::isfinite(s.score)) {
            throw InvalidArgument("select_small_score: non-finite score for sample " + std::to_string(s.id));
        }
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoredSample& a, const ScoredSample& b) {
        return a.score != b.score ? a.score < b.score : a.id < b.id;
    });
    const std::size_t m = selection_count(ranked.size(), alpha);
    std::vector<int> ids;
    ids.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        ids.push_back(ranked[k].id);
    }
    return ids;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(mix_seed(seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

double batch_step(ModelParams& params, SgdState& state, std::span<const ForwardTrace* const> traces,
                  std::span<const LabelMask* const> masks, const TrainConfig& cfg, double lr) {
    if (traces.size() != masks.size() || traces.empty()) {
        throw InvalidArgument("batch_step: need matching, nonempty traces and masks");
    }
    const std::size_t m = traces.size();
    const std::size_t p = params.values.size();
    std::vector<std::vector<double>> grads(m, std::vector<double>(p, 0.0));
    std::vector<double> losses(m);
    parallel_for(m, [&](std::size_t j) {
        losses[j] = data_loss_and_grad(params, *traces[j], *masks[j], cfg.loss, grads[j]);
    });

    std::vector<double> grad(p, 0.0);
    double loss = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        loss += losses[j];
        for (std::size_t k = 0; k < p; ++k) {
            grad[k] += grads[j][k];
        }
    }
    const double inv = 1.0 / static_cast<double>(m);
    loss = loss * inv + cfg.loss.lambda2 * l2_penalty(params.values);
    for (std::size_t k = 0; k < p; ++k) {
        grad[k] = grad[k] * inv + 2.0 * cfg.loss.lambda2 * params.values[k];
    }
    if (!std::isfinite(loss)) {
        throw NumericalError("non-finite batch loss");
    }
    for (double g : grad) {
        if (!std::isfinite(g)) {
            throw NumericalError("non-finite gradient");
        }
    }
    sgd_step(params, grad, state, lr, cfg.momentum);
    return loss;
}

EpochTrace cotrain_epoch(PeerPair& pair, const Dataset& train, const TrainConfig& cfg, int epoch,
                         const UpdateObserver& observer) {
    cfg.validate();
    if (train.empty()) {
        throw InvalidArgument("cotrain_epoch: empty dataset");
    }
    const std::vector<TrainingView> views = training_views(train);
    const double alpha = epoch < cfg.warmup_epochs ? 1.0 : cfg.alpha;
    const auto order = epoch_permutation(views.size(), cfg.seed, epoch);
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

    std::array<double, 2> loss_sum{0.0, 0.0};
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++batches) {
        const std::size_t end = std::min(order.size(), start + bs);
        const std::size_t b = end - start;

        // Both networks score the batch on their current parameters.
        std::vector<ForwardTrace> traces(2 * b);
        std::array<std::vector<ScoredSample>, 2> scores{std::vector<ScoredSample>(b),
                                                        std::vector<ScoredSample>(b)};
        try {
            parallel_for(2 * b, [&](std::size_t t) {
                const std::size_t net = t / b;
                const TrainingView& v = views[order[start + t % b]];
                traces[t] = forward_trace(net == 0 ? pair.net1 : pair.net2, *v.image);
                scores[net][t % b] = {v.id, corruption_score(traces[t].probs, *v.mask, cfg.loss.prob_clamp)};
            });
        } catch (const NumericalError& e) {
            throw NumericalError(where(epoch, batches) + ": " + e.what());
        }
        const std::array<std::vector<int>, 2> selected{select_small_score(scores[0], alpha),
                                                       select_small_score(scores[1], alpha)};

        std::vector<int> batch_ids(b);
        for (std::size_t j = 0; j < b; ++j) {
            batch_ids[j] = views[order[start + j]].id;
        }

        for (int net = 0; net < 2; ++net) {
            const int peer = 1 - net;
            // Cross-update: this network learns from its peer's selection.
            const std::vector<int>& use = selected[static_cast<std::size_t>(peer)];
            std::vector<const ForwardTrace*> used_traces;
            std::vector<const LabelMask*> used_masks;
            for (int id : use) {
                const auto pos = static_cast<std::size_t>(
                    std::find(batch_ids.begin(), batch_ids.end(), id) - batch_ids.begin());
                used_traces.push_back(&traces[static_cast<std::size_t>(net) * b + pos]);
                used_masks.push_back(views[order[start + pos]].mask);
            }
            ModelParams& params = net == 0 ? pair.net1 : pair.net2;
            SgdState& state = net == 0 ? pair.opt1 : pair.opt2;
            try {
                loss_sum[static_cast<std::size_t>(net)] +=
                    batch_step(params, state, used_traces, used_masks, cfg, epoch_lr(cfg, epoch));
            } catch (const NumericalError& e) {
                throw NumericalError(where(epoch, batches) + ", network " + std::to_string(net + 1) +
                                     ": " + e.what());
            }
            if (observer) {
                observer({epoch, batches, net + 1, peer + 1, batch_ids, use,
                          selected[static_cast<std::size_t>(net)]});
            }
        }
    }

    EpochTrace trace;
    trace.epoch = epoch;
    trace.nets[0] = measure(pair.net1, train, loss_sum[0], batches);
    trace.nets[1] = measure(pair.net2, train, loss_sum[1], batches);
    return trace;
}

CotrainResult cotrain(const ModelSpec& spec, const Dataset& train, const TrainConfig& cfg,
                      const UpdateObserver& observer) {
    cfg.validate();
    CotrainResult result{make_peer_pair(spec, cfg.seed), {}};
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        result.traces.push_back(cotrain_epoch(result.pair, train, cfg, epoch, observer));
    }
    return result;
}

std::vector<ScoredSample> score_dataset(const ModelParams& net1, const ModelParams& net2,
                                        std::span<const TrainingView> samples, double clamp) {
    std::vector<ScoredSample> out(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const TrainingView& v = samples[i];
        const double s1 = corruption_score(forward(net1, *v.image), *v.mask, clamp);
        const double s2 = corruption_score(forward(net2, *v.image), *v.mask, clamp);
        out[i] = {v.id, 0.5 * (s1 + s2)};
    });
    return out;
}

std::vector<ScoredSample> score_dataset(const ModelParams& net1, const ModelParams& net2,
                                        const Dataset& dataset, double clamp) {
    const auto views = training_views(dataset);
    return score_dataset(net1, net2, views, clamp);
}

TrainResult train_single(const ModelSpec& spec, const Dataset& train, const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) {
        throw InvalidArgument("train_single: empty dataset");
    }
    const std::vector<TrainingView> views = training_views(train);
    TrainResult result{init_model(spec, mix_seed(cfg.seed, kSingleStream)), {}};
    SgdState state;
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = epoch_permutation(views.size(), cfg.seed, epoch);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += bs, ++batches) {
            const std::size_t b = std::min(order.size(), start + bs) - start;
            std::vector<ForwardTrace> traces(b);
            std::vector<const ForwardTrace*> trace_ptrs(b);
            std::vector<const LabelMask*> masks(b);
            try {
                parallel_for(b, [&](std::size_t j) {
                    traces[j] = forward_trace(result.params, *views[order[start + j]].image);
                });
                for (std::size_t j = 0; j < b; ++j) {
                    trace_ptrs[j] = &traces[j];
                    masks[j] = views[order[start + j]].mask;
                }
                loss_sum += batch_step(result.params, state, trace_ptrs, masks, cfg, epoch_lr(cfg, epoch));
            } catch (const NumericalError& e) {
                throw NumericalError(where(epoch, batches) + ": " + e.what());
            }
        }
        result.traces.push_back({epoch, measure(result.params, train, loss_sum, batches)});
    }
    return result;
}

} // namespace coseg
