#include "coseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coseg/error.hpp"
#include "coseg/hash.hpp"
#include "coseg/rng.hpp"

namespace coseg {

namespace {

void throw_layer(const LayerDesc& layer, int index, const std::string& msg) {
    throw InvalidArgument("layer " + std::to_string(index) + " ('" + layer.name + "'): " + msg);
}

int conv_out_size(int in, int kernel, int stride) {
    const int pad = kernel / 2;
    return (in + 2 * pad - kernel) / stride + 1;
}

/// Inclusive-exclusive output range whose receptive tap (o * stride + tap - pad)
/// stays inside [0, in).
std::pair<int, int> valid_range(int out, int in, int tap, int pad, int stride) {
    int lo = 0;
    while (lo < out && lo * stride + tap - pad < 0) {
        ++lo;
    }
    int hi = out;
    while (hi > lo && (hi - 1) * stride + tap - pad >= in) {
        --hi;
    }
    return {lo, hi};
}

struct ConvGeometry {
    TensorShape in;
    TensorShape out;
    int kernel;
    int stride;
};

void conv_forward(const ConvGeometry& g, const double* weights, const double* bias,
                  const double* in, double* out) {
    const int pad = g.kernel / 2;
    const std::size_t in_plane = static_cast<std::size_t>(g.in.height) * g.in.width;
    const std::size_t out_plane = static_cast<std::size_t>(g.out.height) * g.out.width;
    for (int o = 0; o < g.out.channels; ++o) {
        double* out_c = out + o * out_plane;
        std::fill(out_c, out_c + out_plane, bias[o]);
        for (int i = 0; i < g.in.channels; ++i) {
            const double* in_c = in + i * in_plane;
            const double* w = weights + (static_cast<std::size_t>(o) * g.in.channels + i) * g.kernel * g.kernel;
            for (int ky = 0; ky < g.kernel; ++ky) {
                const auto [y0, y1] = valid_range(g.out.height, g.in.height, ky, pad, g.stride);
                for (int kx = 0; kx < g.kernel; ++kx) {
                    const double wv = w[ky * g.kernel + kx];
                    const auto [x0, x1] = valid_range(g.out.width, g.in.width, kx, pad, g.stride);
                    for (int y = y0; y < y1; ++y) {
                        double* row_out = out_c + static_cast<std::size_t>(y) * g.out.width;
                        const double* row_in =
                            in_c + static_cast<std::size_t>(y * g.stride + ky - pad) * g.in.width + (kx - pad);
                        if (g.stride == 1) {
                            for (int x = x0; x < x1; ++x) {
                                row_out[x] += wv * row_in[x];
                            }
                        } else {
                            for (int x = x0; x < x1; ++x) {
                                row_out[x] += wv * row_in[x * g.stride];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates dW, db and (when din is non-null) dIn from dOut.
void conv_backward(const ConvGeometry& g, const double* weights, const double* in,
                   const double* dout, double* dweights, double* dbias, double* din) {
    const int pad = g.kernel / 2;
    const std::size_t in_plane = static_cast<std::size_t>(g.in.height) * g.in.width;
    const std::size_t out_plane = static_cast<std::size_t>(g.out.height) * g.out.width;
    for (int o = 0; o < g.out.channels; ++o) {
        const double* dout_c = dout + o * out_plane;
        double bsum = 0.0;
        for (std::size_t j = 0; j < out_plane; ++j) {
            bsum += dout_c[j];
        }
        dbias[o] += bsum;
        for (int i = 0; i < g.in.channels; ++i) {
            const double* in_c = in + i * in_plane;
            double* din_c = din != nullptr ? din + i * in_plane : nullptr;
            const std::size_t wbase = (static_cast<std::size_t>(o) * g.in.channels + i) * g.kernel * g.kernel;
            for (int ky = 0; ky < g.kernel; ++ky) {
                const auto [y0, y1] = valid_range(g.out.height, g.in.height, ky, pad, g.stride);
                for (int kx = 0; kx < g.kernel; ++kx) {
                    const auto [x0, x1] = valid_range(g.out.width, g.in.width, kx, pad, g.stride);
                    const double wv = weights[wbase + ky * g.kernel + kx];
                    double wsum = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* row_dout = dout_c + static_cast<std::size_t>(y) * g.out.width;
                        const std::size_t in_off =
                            static_cast<std::size_t>(y * g.stride + ky - pad) * g.in.width + (kx - pad);
                        const double* row_in = in_c + in_off;
                        if (g.stride == 1) {
                            for (int x = x0; x < x1; ++x) {
                                wsum += row_dout[x] * row_in[x];
                            }
                            if (din_c != nullptr) {
                                double* row_din = din_c + in_off;
                                for (int x = x0; x < x1; ++x) {
                                    row_din[x] += wv * row_dout[x];
                                }
                            }
                        } else {
                            for (int x = x0; x < x1; ++x) {
                                wsum += row_dout[x] * row_in[x * g.stride];
                            }
                            if (din_c != nullptr) {
                                double* row_din = din_c + in_off;
                                for (int x = x0; x < x1; ++x) {
                                    row_din[x * g.stride] += wv * row_dout[x];
                                }
                            }
                        }
                    }
                    dweights[wbase + ky * g.kernel + kx] += wsum;
                }
            }
        }
    }
}

void check_finite(std::span<const double> values, const LayerDesc& layer, int index) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericalError("non-finite activation in layer " + std::to_string(index) + " ('" +
                                 layer.name + "')");
        }
    }
}

void check_image(const ModelSpec& spec, const GrayImage& image) {
    if (image.height != spec.height || image.width != spec.width) {
        throw InvalidArgument("image is " + std::to_string(image.height) + "x" +
                              std::to_string(image.width) + " but the model expects " +
                              std::to_string(spec.height) + "x" + std::to_string(spec.width));
    }
    if (image.pixels.size() != static_cast<std::size_t>(image.height) * image.width) {
        throw InvalidArgument("image pixel buffer does not match its dimensions");
    }
}

} // namespace

ModelSpec tiny_spec(int height, int width, int num_classes) {
    ModelSpec spec;
    spec.height = height;
    spec.width = width;
    spec.input_channels = 1;
    spec.num_classes = num_classes;
    spec.layers = {
        {LayerKind::Conv, "enc1", 8, 3, 1, true, -1},
        {LayerKind::Conv, "down", 16, 3, 2, true, -1},
        {LayerKind::Conv, "bottleneck", 16, 3, 1, true, -1},
        {LayerKind::Upsample2x, "up", 0, 1, 1, false, -1},
        {LayerKind::Conv, "dec1", 8, 3, 1, true, -1},
        {LayerKind::ConcatSkip, "skip", 0, 1, 1, false, 0},
        {LayerKind::Conv, "head", num_classes, 1, 1, false, -1},
    };
    return spec;
}

std::vector<TensorShape> infer_shapes(const ModelSpec& spec) {
    if (spec.height < 8 || spec.width < 8) {
        throw InvalidArgument("model input must be at least 8x8");
    }
    if (spec.input_channels < 1) {
        throw InvalidArgument("model needs at least one input channel");
    }
    if (spec.num_classes < 2 || spec.num_classes > 255) {
        throw InvalidArgument("num_classes must lie in [2, 255]");
    }
    if (spec.layers.empty()) {
        throw InvalidArgument("model has no layers");
    }
    std::vector<TensorShape> shapes;
    shapes.reserve(spec.layers.size());
    TensorShape current{spec.input_channels, spec.height, spec.width};
    for (std::size_t idx = 0; idx < spec.layers.size(); ++idx) {
        const LayerDesc& layer = spec.layers[idx];
        const int i = static_cast<int>(idx);
        switch (layer.kind) {
        case LayerKind::Conv:
            if (layer.out_channels < 1) {
                throw_layer(layer, i, "conv needs at least one output channel");
            }
            if (layer.kernel < 1 || layer.kernel % 2 == 0) {
                throw_layer(layer, i, "conv kernel must be odd and positive");
            }
            if (layer.stride < 1) {
                throw_layer(layer, i, "conv stride must be positive");
            }
            current = {layer.out_channels, conv_out_size(current.height, layer.kernel, layer.stride),
                       conv_out_size(current.width, layer.kernel, layer.stride)};
            break;
        case LayerKind::Upsample2x:
            current = {current.channels, current.height * 2, current.width * 2};
            break;
        case LayerKind::ConcatSkip: {
            if (layer.skip_from < 0 || layer.skip_from >= i) {
                throw_layer(layer, i, "skip source must be an earlier layer");
            }
            const TensorShape& src = shapes[static_cast<std::size_t>(layer.skip_from)];
            if (src.height != current.height || src.width != current.width) {
                throw_layer(layer, i,
                            "skip source is " + std::to_string(src.height) + "x" +
                                std::to_string(src.width) + " but the decoder path is " +
                                std::to_string(current.height) + "x" + std::to_string(current.width));
            }
            current = {current.channels + src.channels, current.height, current.width};
            break;
        }
        }
        if (current.height < 1 || current.width < 1) {
            throw_layer(layer, i, "spatial size collapsed to zero");
        }
        shapes.push_back(current);
    }
    const LayerDesc& last = spec.layers.back();
    if (last.kind != LayerKind::Conv || last.relu || last.out_channels != spec.num_classes) {
        throw_layer(last, static_cast<int>(spec.layers.size()) - 1,
                    "final layer must be a conv producing num_classes logits without ReLU");
    }
    if (current.height != spec.height || current.width != spec.width) {
        throw InvalidArgument("model output is " + std::to_string(current.height) + "x" +
                              std::to_string(current.width) + " but input is " +
                              std::to_string(spec.height) + "x" + std::to_string(spec.width));
    }
    return shapes;
}

std::vector<ParamBlock> param_layout(const ModelSpec& spec) {
    const auto shapes = infer_shapes(spec);
    std::vector<ParamBlock> layout;
    std::size_t offset = 0;
    int in_channels = spec.input_channels;
    for (std::size_t idx = 0; idx < spec.layers.size(); ++idx) {
        const LayerDesc& layer = spec.layers[idx];
        if (layer.kind == LayerKind::Conv) {
            ParamBlock block;
            block.layer = layer.name;
            block.layer_index = static_cast<int>(idx);
            block.offset = offset;
            block.weight_count = static_cast<std::size_t>(layer.out_channels) * in_channels *
                                 layer.kernel * layer.kernel;
            block.bias_count = static_cast<std::size_t>(layer.out_channels);
            block.fan_in = in_channels * layer.kernel * layer.kernel;
            block.fan_out = layer.out_channels * layer.kernel * layer.kernel;
            offset += block.size();
            layout.push_back(block);
        }
        in_channels = shapes[idx].channels;
    }
    return layout;
}

std::size_t param_count(const ModelSpec& spec) {
    std::size_t total = 0;
    for (const auto& block : param_layout(spec)) {
        total += block.size();
    }
    return total;
}

std::uint64_t spec_hash(const ModelSpec& spec) {
    std::ostringstream os;
    os << "coseg-spec:" << spec.height << 'x' << spec.width << ':' << spec.input_channels << ':'
       << spec.num_classes;
    for (const auto& layer : spec.layers) {
        os << '|' << static_cast<int>(layer.kind) << ',' << layer.out_channels << ',' << layer.kernel
           << ',' << layer.stride << ',' << layer.relu << ',' << layer.skip_from;
    }
    return fnv1a64(os.str());
}

void ModelParams::validate() const {
    const auto expected = param_layout(spec);
    if (expected != layout) {
        throw InvalidArgument("parameter layout does not match the model spec");
    }
    std::size_t total = 0;
    for (const auto& block : layout) {
        total += block.size();
    }
    if (total != values.size()) {
        throw InvalidArgument("parameter layout covers " + std::to_string(total) + " values but " +
                              std::to_string(values.size()) + " are stored");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw InvalidArgument("parameter " + std::to_string(i) + " is not finite");
        }
    }
}

ModelParams zero_model(const ModelSpec& spec) {
    ModelParams params;
    params.spec = spec;
    params.layout = param_layout(spec);
    params.values.assign(param_count(spec), 0.0);
    return params;
}

ModelParams init_model(const ModelSpec& spec, std::uint64_t seed) {
    ModelParams params = zero_model(spec);
    Rng rng(seed);
    for (const auto& block : params.layout) {
        const double bound = std::sqrt(6.0 / static_cast<double>(block.fan_in + block.fan_out));
        for (std::size_t k = 0; k < block.weight_count; ++k) {
            params.values[block.offset + k] = rng.uniform(-bound, bound);
        }
    }
    return params;
}

ForwardTrace forward_trace(const ModelParams& params, const GrayImage& image) {
    const ModelSpec& spec = params.spec;
    check_image(spec, image);
    const auto shapes = infer_shapes(spec);
    if (params.values.size() != param_count(spec)) {
        throw InvalidArgument("parameter vector does not match the model spec");
    }

    ForwardTrace trace;
    trace.input = image.pixels;
    trace.outputs.resize(spec.layers.size());

    TensorShape in_shape{spec.input_channels, spec.height, spec.width};
    std::size_t block = 0;
    for (std::size_t idx = 0; idx < spec.layers.size(); ++idx) {
        const LayerDesc& layer = spec.layers[idx];
        const std::vector<double>& in = idx == 0 ? trace.input : trace.outputs[idx - 1];
        std::vector<double>& out = trace.outputs[idx];
        const TensorShape& out_shape = shapes[idx];
        out.assign(out_shape.size(), 0.0);
        switch (layer.kind) {
        case LayerKind::Conv: {
            const ParamBlock& pb = params.layout[block++];
            const double* w = params.values.data() + pb.offset;
            conv_forward({in_shape, out_shape, layer.kernel, layer.stride}, w, w + pb.weight_count,
                         in.data(), out.data());
            if (layer.relu) {
                for (double& v : out) {
                    if (v < 0.0) {
                        v = 0.0;  // NaN passes through to the finiteness check
                    }
                }
            }
            break;
        }
        case LayerKind::Upsample2x:
            for (int c = 0; c < out_shape.channels; ++c) {
                for (int y = 0; y < out_shape.height; ++y) {
                    const double* src = in.data() + (static_cast<std::size_t>(c) * in_shape.height + y / 2) * in_shape.width;
                    double* dst = out.data() + (static_cast<std::size_t>(c) * out_shape.height + y) * out_shape.width;
                    for (int x = 0; x < out_shape.width; ++x) {
                        dst[x] = src[x / 2];
                    }
                }
            }
            break;
        case LayerKind::ConcatSkip: {
            const auto& skip = trace.outputs[static_cast<std::size_t>(layer.skip_from)];
            std::copy(in.begin(), in.end(), out.begin());
            std::copy(skip.begin(), skip.end(), out.begin() + static_cast<std::ptrdiff_t>(in.size()));
            break;
        }
        }
        check_finite(out, layer, static_cast<int>(idx));
        in_shape = out_shape;
    }

    // Per-pixel softmax with max subtraction.
    const std::vector<double>& logits = trace.outputs.back();
    const int num_classes = spec.num_classes;
    trace.probs = ProbMap(spec.height, spec.width, num_classes);
    const std::size_t n = trace.probs.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        double m = logits[i];
        for (int l = 1; l < num_classes; ++l) {
            m = std::max(m, logits[l * n + i]);
        }
        double sum = 0.0;
        for (int l = 0; l < num_classes; ++l) {
            const double e = std::exp(logits[l * n + i] - m);
            trace.probs.probs[l * n + i] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (int l = 0; l < num_classes; ++l) {
            trace.probs.probs[l * n + i] *= inv;
        }
    }
    return trace;
}

ProbMap forward(const ModelParams& params, const GrayImage& image) {
    return forward_trace(params, image).probs;
}

void backward(const ModelParams& params, const ForwardTrace& trace,
              std::span<const double> dlogits, std::span<double> grad) {
    const ModelSpec& spec = params.spec;
    const auto shapes = infer_shapes(spec);
    if (grad.size() != params.values.size()) {
        throw InvalidArgument("gradient buffer does not match the parameter vector");
    }
    if (dlogits.size() != shapes.back().size()) {
        throw InvalidArgument("dlogits does not match the final layer output");
    }
    const std::size_t num_layers = spec.layers.size();

    std::vector<std::vector<double>> dout(num_layers);
    for (std::size_t idx = 0; idx < num_layers; ++idx) {
        dout[idx].assign(shapes[idx].size(), 0.0);
    }
    std::copy(dlogits.begin(), dlogits.end(), dout.back().begin());

    // Map layer index -> parameter block.
    std::vector<int> block_of(num_layers, -1);
    for (std::size_t b = 0; b < params.layout.size(); ++b) {
        block_of[static_cast<std::size_t>(params.layout[b].layer_index)] = static_cast<int>(b);
    }

    for (std::size_t r = num_layers; r-- > 0;) {
        const LayerDesc& layer = spec.layers[r];
        const TensorShape in_shape =
            r == 0 ? TensorShape{spec.input_channels, spec.height, spec.width} : shapes[r - 1];
        std::vector<double>& d = dout[r];
        double* din = r == 0 ? nullptr : dout[r - 1].data();
        switch (layer.kind) {
        case LayerKind::Conv: {
            if (layer.relu) {
                const auto& out = trace.outputs[r];
                for (std::size_t j = 0; j < d.size(); ++j) {
                    if (out[j] <= 0.0) {
                        d[j] = 0.0;
                    }
                }
            }
            const ParamBlock& pb = params.layout[static_cast<std::size_t>(block_of[r])];
            const double* in = r == 0 ? trace.input.data() : trace.outputs[r - 1].data();
            conv_backward({in_shape, shapes[r], layer.kernel, layer.stride},
                          params.values.data() + pb.offset, in, d.data(), grad.data() + pb.offset,
                          grad.data() + pb.offset + pb.weight_count, din);
            break;
        }
        case LayerKind::Upsample2x: {
            if (din == nullptr) {
                break;
            }
            const TensorShape& os = shapes[r];
            for (int c = 0; c < os.channels; ++c) {
                for (int y = 0; y < os.height; ++y) {
                    const double* src = d.data() + (static_cast<std::size_t>(c) * os.height + y) * os.width;
                    double* dst = din + (static_cast<std::size_t>(c) * in_shape.height + y / 2) * in_shape.width;
                    for (int x = 0; x < os.width; ++x) {
                        dst[x / 2] += src[x];
                    }
                }
            }
            break;
        }
        case LayerKind::ConcatSkip: {
            const std::size_t head = in_shape.size();
            if (din != nullptr) {
                for (std::size_t j = 0; j < head; ++j) {
                    din[j] += d[j];
                }
            }
            auto& dskip = dout[static_cast<std::size_t>(layer.skip_from)];
            for (std::size_t j = 0; j < dskip.size(); ++j) {
                dskip[j] += d[head + j];
            }
            break;
        }
        }
    }
}

double data_loss_and_grad(const ModelParams& params, const ForwardTrace& trace,
                          const LabelMask& mask, const LossConfig& cfg, std::span<double> grad) {
    const ProbMap& probs = trace.probs;
    std::vector<double> dprobs(probs.probs.size());
    const double loss = data_loss_grad_wrt_probs(probs, mask, cfg, dprobs);
    if (!std::isfinite(loss)) {
        throw NumericalError("non-finite loss at the output layer");
    }

    // Softmax Jacobian: dz_k = p_k (dp_k - sum_l p_l dp_l).
    const std::size_t n = probs.pixel_count();
    const int num_classes = probs.num_classes;
    std::vector<double> dlogits(dprobs.size());
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int l = 0; l < num_classes; ++l) {
            dot += probs.probs[l * n + i] * dprobs[l * n + i];
        }
        for (int l = 0; l < num_classes; ++l) {
            dlogits[l * n + i] = probs.probs[l * n + i] * (dprobs[l * n + i] - dot);
        }
    }
    backward(params, trace, dlogits, grad);
    return loss;
}

LossAndGrad loss_and_grad(const ModelParams& params, const GrayImage& image,
                          const LabelMask& mask, const LossConfig& cfg) {
    cfg.validate();
    require_same_shape(image, mask, "loss_and_grad");
    const ForwardTrace trace = forward_trace(params, image);
    LossAndGrad out;
    out.grad.assign(params.values.size(), 0.0);
    out.loss = data_loss_and_grad(params, trace, mask, cfg, out.grad);
    out.loss += cfg.lambda2 * l2_penalty(params.values);
    for (std::size_t k = 0; k < params.values.size(); ++k) {
        out.grad[k] += 2.0 * cfg.lambda2 * params.values[k];
    }
    return out;
}

void sgd_step(ModelParams& params, std::span<const double> grad, SgdState& state, double lr,
              double momentum) {
    if (grad.size() != params.values.size()) {
        throw InvalidArgument("sgd_step: gradient has " + std::to_string(grad.size()) +
                              " entries but there are " + std::to_string(params.values.size()) +
                              " parameters");
    }
    if (!(lr > 0.0)) {
        throw InvalidArgument("sgd_step: learning rate must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw InvalidArgument("sgd_step: momentum must lie in [0, 1)");
    }
    if (state.velocity.empty()) {
        state.velocity.assign(params.values.size(), 0.0);
    } else if (state.velocity.size() != params.values.size()) {
        throw InvalidArgument("sgd_step: optimizer state does not match the parameter vector");
    }
    for (std::size_t k = 0; k < params.values.size(); ++k) {
        state.velocity[k] = momentum * state.velocity[k] - lr * grad[k];
        params.values[k] += state.velocity[k];
    }
}

double total_loss(const ProbMap& probs, const LabelMask& mask, const ModelParams& params,
                  const LossConfig& cfg) {
    return total_loss(probs, mask, std::span<const double>(params.values), cfg);
}

} // namespace coseg
