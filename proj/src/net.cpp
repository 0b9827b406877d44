#include "nsc/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nsc/rng.hpp"

namespace nsc {

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::FullyConnected: return "FullyConnected";
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::SoftmaxCE: return "SoftmaxCE";
    }
    return "?";
}

LayerSpec LayerSpec::fc(int in, int out, bool prunable) {
    LayerSpec s;
    s.kind = LayerKind::FullyConnected;
    s.prunable = prunable;
    s.in_features = in;
    s.out_features = out;
    return s;
}

LayerSpec LayerSpec::conv2d(int in_c, int out_c, int kh, int kw, int stride, int padding,
                            int in_h, int in_w, bool prunable) {
    LayerSpec s;
    s.kind = LayerKind::Conv2D;
    s.prunable = prunable;
    s.in_channels = in_c;
    s.out_channels = out_c;
    s.kernel_h = kh;
    s.kernel_w = kw;
    s.stride = stride;
    s.padding = padding;
    s.in_h = in_h;
    s.in_w = in_w;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::ReLU;
    return s;
}

LayerSpec LayerSpec::softmax_ce() {
    LayerSpec s;
    s.kind = LayerKind::SoftmaxCE;
    return s;
}

int LayerSpec::out_h() const {
    return (in_h + 2 * padding - kernel_h) / stride + 1;
}

int LayerSpec::out_w() const {
    return (in_w + 2 * padding - kernel_w) / stride + 1;
}

int LayerSpec::input_size() const {
    switch (kind) {
        case LayerKind::FullyConnected: return in_features;
        case LayerKind::Conv2D: return in_channels * in_h * in_w;
        default: return 0;  // pass-through, takes whatever arrives
    }
}

int LayerSpec::output_size() const {
    switch (kind) {
        case LayerKind::FullyConnected: return out_features;
        case LayerKind::Conv2D: return out_channels * out_h() * out_w();
        default: return 0;
    }
}

int LayerSpec::weight_rows() const {
    if (kind == LayerKind::FullyConnected) return out_features;
    if (kind == LayerKind::Conv2D) return out_channels;
    return 0;
}

int LayerSpec::weight_cols() const {
    if (kind == LayerKind::FullyConnected) return in_features;
    if (kind == LayerKind::Conv2D) return kernel_h * kernel_w * in_channels;
    return 0;
}

void OptimizerConfig::validate() const {
    if (!(base_lr > 0.0f)) throw std::invalid_argument("base_lr must be positive");
    if (!(momentum >= 0.0f && momentum < 1.0f))
        throw std::invalid_argument("momentum must lie in [0,1)");
    if (!(weight_decay >= 0.0f)) throw std::invalid_argument("weight_decay must be >= 0");
    if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
}

float cosine_lr(const OptimizerConfig& cfg, int step_index) {
    const double phase = M_PI * static_cast<double>(step_index) / cfg.total_steps;
    return static_cast<float>(cfg.base_lr * 0.5 * (1.0 + std::cos(phase)));
}

ToyNetwork ToyNetwork::create(std::vector<LayerSpec> specs) {
    if (specs.empty()) throw std::invalid_argument("network needs at least one layer");
    ToyNetwork net;
    net.layers = std::move(specs);

    bool seen_weighted = false;
    int flowing = -1;  // flat width, -1 until the first sized layer
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        if (l.kind == LayerKind::SoftmaxCE && i + 1 != net.layers.size())
            throw std::invalid_argument("SoftmaxCE must be the final layer");
        if (l.weighted()) {
            if (!seen_weighted && l.prunable)
                throw std::invalid_argument(
                    "first weighted layer must not be prunable (layer " +
                    std::to_string(i) + ")");
            seen_weighted = true;
            if (l.kind == LayerKind::Conv2D) {
                if (l.out_h() < 1 || l.out_w() < 1)
                    throw GeometryError("layer " + std::to_string(i) +
                                        " (Conv2D): non-positive output size");
            }
            if (flowing >= 0 && flowing != l.input_size())
                throw DimensionError("layer " + std::to_string(i) + " (" +
                                     layer_kind_name(l.kind) + "): expects " +
                                     std::to_string(l.input_size()) + " features, gets " +
                                     std::to_string(flowing));
            flowing = l.output_size();
            net.weights.emplace_back(l.weight_rows(), l.weight_cols());
            net.grad.emplace_back(l.weight_rows(), l.weight_cols());
            net.momentum.emplace_back(l.weight_rows(), l.weight_cols());
        }
    }
    if (!seen_weighted) throw std::invalid_argument("network has no weighted layer");
    return net;
}

void ToyNetwork::init_weights(uint64_t seed) {
    int wi = 0;
    for (size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].weighted()) continue;
        Matrix& w = weights[wi];
        Rng rng(derive_seed(seed, static_cast<uint64_t>(wi)));
        const float bound = std::sqrt(6.0f / static_cast<float>(w.cols));
        for (float& v : w.data) v = rng.uniform(-bound, bound);
        ++wi;
    }
    ++weights_version;
}

void ToyNetwork::zero_grad() {
    for (Matrix& g : grad) g.fill(0.0f);
}

void ToyNetwork::set_weight(int weighted_index, Matrix w) {
    Matrix& dst = weights.at(static_cast<size_t>(weighted_index));
    if (!dst.same_shape(w))
        throw DimensionError("set_weight: shape mismatch for weighted layer " +
                             std::to_string(weighted_index));
    dst = std::move(w);
    ++weights_version;
}

int ToyNetwork::input_size() const {
    for (const LayerSpec& l : layers)
        if (l.weighted()) return l.input_size();
    return 0;
}

int ToyNetwork::class_count() const {
    int out = 0;
    for (const LayerSpec& l : layers)
        if (l.weighted()) out = l.output_size();
    return out;
}

int ToyNetwork::weight_index(int layer_index) const {
    int wi = -1;
    for (int i = 0; i <= layer_index; ++i)
        if (layers[i].weighted()) ++wi;
    return layers[layer_index].weighted() ? wi : -1;
}

Matrix im2col(const Matrix& input, const LayerSpec& conv) {
    const int oh = conv.out_h();
    const int ow = conv.out_w();
    if (oh < 1 || ow < 1)
        throw GeometryError("im2col: non-positive output size " + std::to_string(oh) +
                            "x" + std::to_string(ow));
    require_shape(input, input.rows, conv.in_channels * conv.in_h * conv.in_w, "im2col");
    const int batch = input.rows;
    const int patch = conv.in_channels * conv.kernel_h * conv.kernel_w;
    Matrix cols(batch * oh * ow, patch);
    for (int b = 0; b < batch; ++b) {
        const float* img = &input.data[static_cast<size_t>(b) * input.cols];
        for (int p = 0; p < oh * ow; ++p) {
            const int oy = p / ow;
            const int ox = p % ow;
            float* row = &cols.data[static_cast<size_t>(b * oh * ow + p) * patch];
            for (int ic = 0; ic < conv.in_channels; ++ic) {
                for (int ky = 0; ky < conv.kernel_h; ++ky) {
                    const int iy = oy * conv.stride + ky - conv.padding;
                    for (int kx = 0; kx < conv.kernel_w; ++kx) {
                        const int ix = ox * conv.stride + kx - conv.padding;
                        float v = 0.0f;
                        if (iy >= 0 && iy < conv.in_h && ix >= 0 && ix < conv.in_w)
                            v = img[(ic * conv.in_h + iy) * conv.in_w + ix];
                        row[(ic * conv.kernel_h + ky) * conv.kernel_w + kx] = v;
                    }
                }
            }
        }
    }
    return cols;
}

Matrix col2im(const Matrix& cols, const LayerSpec& conv, int batch_rows) {
    const int oh = conv.out_h();
    const int ow = conv.out_w();
    const int patch = conv.in_channels * conv.kernel_h * conv.kernel_w;
    require_shape(cols, batch_rows * oh * ow, patch, "col2im");
    Matrix out(batch_rows, conv.in_channels * conv.in_h * conv.in_w);
    for (int b = 0; b < batch_rows; ++b) {
        float* img = &out.data[static_cast<size_t>(b) * out.cols];
        for (int p = 0; p < oh * ow; ++p) {
            const int oy = p / ow;
            const int ox = p % ow;
            const float* row = &cols.data[static_cast<size_t>(b * oh * ow + p) * patch];
            for (int ic = 0; ic < conv.in_channels; ++ic) {
                for (int ky = 0; ky < conv.kernel_h; ++ky) {
                    const int iy = oy * conv.stride + ky - conv.padding;
                    if (iy < 0 || iy >= conv.in_h) continue;
                    for (int kx = 0; kx < conv.kernel_w; ++kx) {
                        const int ix = ox * conv.stride + kx - conv.padding;
                        if (ix < 0 || ix >= conv.in_w) continue;
                        img[(ic * conv.in_h + iy) * conv.in_w + ix] +=
                            row[(ic * conv.kernel_h + ky) * conv.kernel_w + kx];
                    }
                }
            }
        }
    }
    return out;
}

namespace {

// Output activations of a conv layer, gathered from the im2col product
// P (batch*positions x out_c) into the flat CHW layout.
Matrix scatter_conv_output(const Matrix& p, const LayerSpec& conv, int batch) {
    const int positions = conv.out_h() * conv.out_w();
    Matrix out(batch, conv.out_channels * positions);
    for (int b = 0; b < batch; ++b)
        for (int pos = 0; pos < positions; ++pos)
            for (int oc = 0; oc < conv.out_channels; ++oc)
                out.at(b, oc * positions + pos) = p.at(b * positions + pos, oc);
    return out;
}

Matrix gather_conv_output_grad(const Matrix& dout, const LayerSpec& conv, int batch) {
    const int positions = conv.out_h() * conv.out_w();
    Matrix dp(batch * positions, conv.out_channels);
    for (int b = 0; b < batch; ++b)
        for (int pos = 0; pos < positions; ++pos)
            for (int oc = 0; oc < conv.out_channels; ++oc)
                dp.at(b * positions + pos, oc) = dout.at(b, oc * positions + pos);
    return dp;
}

}  // namespace

ForwardCache forward(const ToyNetwork& net, const Matrix& batch) {
    if (batch.cols != net.input_size())
        throw DimensionError("forward: layer 0 (" +
                             layer_kind_name(net.layers.front().kind) + ") expects " +
                             std::to_string(net.input_size()) + " features, batch has " +
                             std::to_string(batch.cols));
    ForwardCache cache;
    cache.weights_version = net.weights_version;
    cache.batch_rows = batch.rows;
    cache.inputs.reserve(net.layers.size());
    cache.cols.resize(net.layers.size());

    Matrix act = batch;
    int wi = 0;
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        cache.inputs.push_back(act);
        switch (l.kind) {
            case LayerKind::FullyConnected: {
                if (act.cols != l.in_features)
                    throw DimensionError("forward: layer " + std::to_string(i) +
                                         " (FullyConnected) expects " +
                                         std::to_string(l.in_features) + " features, got " +
                                         std::to_string(act.cols));
                act = matmul_nt(act, net.weights[wi]);
                ++wi;
                break;
            }
            case LayerKind::Conv2D: {
                if (act.cols != l.input_size())
                    throw DimensionError("forward: layer " + std::to_string(i) +
                                         " (Conv2D) expects " +
                                         std::to_string(l.input_size()) + " features, got " +
                                         std::to_string(act.cols));
                Matrix cols = im2col(act, l);
                Matrix p = matmul_nt(cols, net.weights[wi]);
                act = scatter_conv_output(p, l, batch.rows);
                cache.cols[i] = std::move(cols);
                ++wi;
                break;
            }
            case LayerKind::ReLU: {
                for (float& v : act.data) v = v > 0.0f ? v : 0.0f;
                break;
            }
            case LayerKind::SoftmaxCE: {
                // Loss marker: logits pass through untouched.
                break;
            }
        }
    }
    cache.logits = std::move(act);
    return cache;
}

Matrix softmax(const Matrix& logits) {
    Matrix q(logits.rows, logits.cols);
    for (int r = 0; r < logits.rows; ++r) {
        const float* row = &logits.data[static_cast<size_t>(r) * logits.cols];
        float m = row[0];
        for (int c = 1; c < logits.cols; ++c) m = std::max(m, row[c]);
        float sum = 0.0f;
        float* qrow = &q.data[static_cast<size_t>(r) * q.cols];
        for (int c = 0; c < logits.cols; ++c) {
            qrow[c] = std::exp(row[c] - m);
            sum += qrow[c];
        }
        for (int c = 0; c < logits.cols; ++c) qrow[c] /= sum;
    }
    return q;
}

float cross_entropy(const Matrix& logits, const Matrix& targets) {
    if (!logits.same_shape(targets))
        throw DimensionError("cross_entropy: logits " + std::to_string(logits.rows) + "x" +
                             std::to_string(logits.cols) + " vs targets " +
                             std::to_string(targets.rows) + "x" +
                             std::to_string(targets.cols));
    double total = 0.0;
    for (int r = 0; r < logits.rows; ++r) {
        const float* row = &logits.data[static_cast<size_t>(r) * logits.cols];
        float m = row[0];
        for (int c = 1; c < logits.cols; ++c) m = std::max(m, row[c]);
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) sum += std::exp(static_cast<double>(row[c]) - m);
        const double lse = m + std::log(sum);
        for (int c = 0; c < logits.cols; ++c) {
            const float t = targets.at(r, c);
            if (t != 0.0f) total += static_cast<double>(t) * (lse - row[c]);
        }
    }
    return static_cast<float>(total / logits.rows);
}

Matrix one_hot(const std::vector<int>& labels, int classes) {
    Matrix t(static_cast<int>(labels.size()), classes);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw std::invalid_argument("one_hot: label out of range");
        t.at(static_cast<int>(i), labels[i]) = 1.0f;
    }
    return t;
}

BackwardResult backward(const ToyNetwork& net, const ForwardCache& cache,
                        const Matrix& targets, TargetKind) {
    if (cache.weights_version != net.weights_version)
        throw StaleCacheError("backward: cache from weight version " +
                              std::to_string(cache.weights_version) + ", network at " +
                              std::to_string(net.weights_version));
    if (!cache.logits.same_shape(targets))
        throw DimensionError("backward: targets " + std::to_string(targets.rows) + "x" +
                             std::to_string(targets.cols) + " vs logits " +
                             std::to_string(cache.logits.rows) + "x" +
                             std::to_string(cache.logits.cols));

    BackwardResult res;
    res.loss = cross_entropy(cache.logits, targets);
    res.grads.resize(net.weights.size());

    // d(mean CE)/d(logits) = (softmax - targets) / batch. Hard and Soft
    // targets share the algebra; the kind only documents intent.
    Matrix delta = softmax(cache.logits);
    const float inv_batch = 1.0f / static_cast<float>(cache.batch_rows);
    for (size_t i = 0; i < delta.size(); ++i)
        delta.data[i] = (delta.data[i] - targets.data[i]) * inv_batch;

    int wi = net.weighted_count();
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const LayerSpec& l = net.layers[i];
        switch (l.kind) {
            case LayerKind::SoftmaxCE:
                break;  // gradient starts at the logits
            case LayerKind::ReLU: {
                const Matrix& x = cache.inputs[i];
                for (size_t k = 0; k < delta.size(); ++k)
                    if (x.data[k] <= 0.0f) delta.data[k] = 0.0f;
                break;
            }
            case LayerKind::FullyConnected: {
                --wi;
                const Matrix& x = cache.inputs[i];
                res.grads[wi] = matmul(transpose(delta), x);
                if (i > 0) delta = matmul(delta, net.weights[wi]);
                break;
            }
            case LayerKind::Conv2D: {
                --wi;
                const Matrix dp = gather_conv_output_grad(delta, l, cache.batch_rows);
                res.grads[wi] = matmul(transpose(dp), cache.cols[i]);
                if (i > 0) {
                    Matrix dcols = matmul(dp, net.weights[wi]);
                    delta = col2im(dcols, l, cache.batch_rows);
                }
                break;
            }
        }
    }
    return res;
}

void sgd_step(ToyNetwork& net, int step_index, const OptimizerConfig& cfg) {
    cfg.validate();
    if (step_index >= cfg.total_steps)
        throw ScheduleExhaustedError("sgd_step: step " + std::to_string(step_index) +
                                     " outside schedule of " +
                                     std::to_string(cfg.total_steps));
    const float lr = cosine_lr(cfg, step_index);
    for (int wi = 0; wi < net.weighted_count(); ++wi) {
        Matrix& w = net.weights[wi];
        Matrix& g = net.grad[wi];
        Matrix& v = net.momentum[wi];
        for (size_t k = 0; k < w.size(); ++k) {
            v.data[k] = cfg.momentum * v.data[k] + g.data[k];
            w.data[k] -= lr * (v.data[k] + cfg.weight_decay * w.data[k]);
        }
    }
    ++net.weights_version;
}

}  // namespace nsc
