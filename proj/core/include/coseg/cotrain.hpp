#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "coseg/data.hpp"
#include "coseg/model.hpp"
#include "coseg/objectives.hpp"

namespace coseg {

enum class LrSchedule { Constant, Cosine };

std::string to_string(LrSchedule s);
LrSchedule lr_schedule_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 60;
    int batch_size = 8;
    double alpha = 1.0;       // fraction of each mini-batch kept for the peer update
    int warmup_epochs = 5;    // epochs during which alpha is treated as 1
    double lr = 5e-5;
    double momentum = 0.9;
    LrSchedule schedule = LrSchedule::Constant;
    LossConfig loss;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PeerPair {
    ModelParams net1;
    ModelParams net2;
    SgdState opt1;
    SgdState opt2;
};

/// Learning rate used during `epoch`: constant, or lr * (1 + cos(pi * epoch / epochs)) / 2.
double epoch_lr(const TrainConfig& cfg, int epoch);

/// Two independently initialised networks (streams 1 and 2 of `seed`).
PeerPair make_peer_pair(const ModelSpec& spec, std::uint64_t seed);

struct NetEpochStats {
    double mean_loss = 0.0;   // mean loss of the batches this network was updated on
    double train_acc = 0.0;   // against pristine masks, after the epoch
    double train_dic = 0.0;
};

struct EpochTrace {
    int epoch = 0;
    std::array<NetEpochStats, 2> nets{};
};

/// Number of samples kept from a batch: max(1, round(alpha * batch)).
std::size_t selection_count(std::size_t batch, double alpha);

/// Ids of the selection_count() smallest scores, ties broken by ascending id,
/// returned in that ranked order.
std::vector<int> select_small_score(std::span<const ScoredSample> batch, double alpha);

/// Sample order used for `epoch`; a pure function of (n, seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, int epoch);

/// Emitted once per network update inside cotrain_epoch.
struct UpdateEvent {
    int epoch = 0;
    int batch = 0;
    int updated_net = 0;           // 1 or 2
    int source_net = 0;            // network whose ranking chose the samples
    std::vector<int> batch_ids;
    std::vector<int> used_ids;     // samples the update was computed on
    std::vector<int> own_selection;// what the updated network itself selected
};
using UpdateObserver = std::function<void(const UpdateEvent&)>;

/// One epoch of cross-updated co-training. Each network ranks every batch by
/// its own corruption scores (computed before the update); network 1 then
/// steps on network 2's selection and vice versa.
EpochTrace cotrain_epoch(PeerPair& pair, const Dataset& train, const TrainConfig& cfg, int epoch,
                         const UpdateObserver& observer = {});

struct CotrainResult {
    PeerPair pair;
    std::vector<EpochTrace> traces;
};

CotrainResult cotrain(const ModelSpec& spec, const Dataset& train, const TrainConfig& cfg,
                      const UpdateObserver& observer = {});

/// Mean of the two networks' corruption scores for every sample, in dataset order.
std::vector<ScoredSample> score_dataset(const ModelParams& net1, const ModelParams& net2,
                                        std::span<const TrainingView> samples, double clamp);
std::vector<ScoredSample> score_dataset(const ModelParams& net1, const ModelParams& net2,
                                        const Dataset& dataset, double clamp = 1e-7);

struct SingleEpochTrace {
    int epoch = 0;
    NetEpochStats stats;
};

struct TrainResult {
    ModelParams params;
    std::vector<SingleEpochTrace> traces;
};

/// Plain mini-batch training of one freshly initialised network (stream 3 of
/// cfg.seed) on every sample; no selection.
TrainResult train_single(const ModelSpec& spec, const Dataset& train, const TrainConfig& cfg);

/// One optimizer step on the mean total loss of the given samples, reusing cached forward
/// passes. Returns that mean loss.
double batch_step(ModelParams& params, SgdState& state, std::span<const ForwardTrace* const> traces,
                  std::span<const LabelMask* const> masks, const TrainConfig& cfg, double lr);

} // namespace coseg
