#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coseg/objectives.hpp"
#include "coseg/types.hpp"

namespace coseg {

enum class LayerKind {
    Conv,        // zero-padded convolution, optional ReLU
    Upsample2x,  // nearest-neighbour, doubles height and width
    ConcatSkip,  // appends the channels of an earlier layer's output
};

struct LayerDesc {
    LayerKind kind = LayerKind::Conv;
    std::string name;
    int out_channels = 0;  // Conv only
    int kernel = 1;        // Conv only, odd
    int stride = 1;        // Conv only
    bool relu = false;     // Conv only
    int skip_from = -1;    // ConcatSkip only: index of the source layer

    bool operator==(const LayerDesc&) const = default;
};

/// Layer graph of an encoder-decoder network. Layers run in order; the
/// last layer must be a Conv producing num_classes logits without ReLU,
/// followed by a per-pixel softmax.
struct ModelSpec {
    int height = 32;
    int width = 32;
    int input_channels = 1;
    int num_classes = 2;
    std::vector<LayerDesc> layers;

    bool operator==(const ModelSpec&) const = default;
};

/// The reference network:
///   conv3x3 -> 8 + ReLU; conv3x3 stride 2 -> 16 + ReLU; conv3x3 -> 16 + ReLU;
///   2x nearest upsample; conv3x3 -> 8 + ReLU; concat(first block);
///   conv1x1 -> num_classes; softmax.
ModelSpec tiny_spec(int height = 32, int width = 32, int num_classes = 2);

struct TensorShape {
    int channels = 0;
    int height = 0;
    int width = 0;

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(channels) * height * width;
    }
    bool operator==(const TensorShape&) const = default;
};

/// Output shape of every layer. Throws InvalidArgument with the offending
/// layer name if the graph is inconsistent.
std::vector<TensorShape> infer_shapes(const ModelSpec& spec);

/// Location of one conv layer's parameters inside the flat vector. Weights
/// are stored [out][in][ky][kx], followed by the biases [out].
struct ParamBlock {
    std::string layer;
    int layer_index = 0;
    std::size_t offset = 0;
    std::size_t weight_count = 0;
    std::size_t bias_count = 0;
    int fan_in = 0;   // in_channels * k * k
    int fan_out = 0;  // out_channels * k * k

    [[nodiscard]] std::size_t size() const { return weight_count + bias_count; }
    bool operator==(const ParamBlock&) const = default;
};

std::vector<ParamBlock> param_layout(const ModelSpec& spec);
std::size_t param_count(const ModelSpec& spec);

/// Stable 64-bit hash of the layer graph and input geometry.
std::uint64_t spec_hash(const ModelSpec& spec);

/// Flat parameter vector W_f together with the spec it belongs to.
struct ModelParams {
    ModelSpec spec;
    std::vector<ParamBlock> layout;
    std::vector<double> values;

    /// Throws InvalidArgument if the layout does not cover values exactly or a value is not finite.
    void validate() const;
    bool operator==(const ModelParams&) const = default;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
ModelParams init_model(const ModelSpec& spec, std::uint64_t seed);

/// All parameters set to zero (uniform softmax output).
ModelParams zero_model(const ModelSpec& spec);

/// Cached activations of one forward pass; consumed by backward().
struct ForwardTrace {
    std::vector<std::vector<double>> outputs;  // post-activation output of each layer
    std::vector<double> input;
    ProbMap probs;
};

ForwardTrace forward_trace(const ModelParams& params, const GrayImage& image);
ProbMap forward(const ModelParams& params, const GrayImage& image);

/// Gradient of a loss w.r.t. the parameters, given dLoss/dlogits of the
/// final layer. `grad` is accumulated into (not overwritten).
void backward(const ModelParams& params, const ForwardTrace& trace,
              std::span<const double> dlogits, std::span<double> grad);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Combined objective CE + lambda1 * Dice + lambda2 * ||W||^2 for one sample
/// and its exact gradient.
LossAndGrad loss_and_grad(const ModelParams& params, const GrayImage& image,
                          const LabelMask& mask, const LossConfig& cfg);

/// CE + lambda1 * Dice from a cached forward pass, accumulating its gradient
/// into `grad`. The L2 penalty is left to the caller so batch code adds it once.
double data_loss_and_grad(const ModelParams& params, const ForwardTrace& trace,
                          const LabelMask& mask, const LossConfig& cfg,
                          std::span<double> grad);

struct SgdState {
    std::vector<double> velocity;
};

/// Classical momentum: v <- momentum * v - lr * g; w <- w + v.
void sgd_step(ModelParams& params, std::span<const double> grad, SgdState& state,
              double lr, double momentum);

/// total_loss evaluated on the parameter vector of `params`.
double total_loss(const ProbMap& probs, const LabelMask& mask, const ModelParams& params,
                  const LossConfig& cfg);

} // namespace coseg
