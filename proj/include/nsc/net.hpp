#ifndef NSC_NET_HPP
#define NSC_NET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nsc/matrix.hpp"

namespace nsc {

enum class LayerKind : uint8_t { FullyConnected = 0, Conv2D = 1, ReLU = 2, SoftmaxCE = 3 };

std::string layer_kind_name(LayerKind kind);

/// Shape description of one layer. Conv layers carry their input geometry so
/// flat activation rows can be interpreted as C x H x W tensors.
struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    bool prunable = false;

    // FullyConnected
    int in_features = 0;
    int out_features = 0;

    // Conv2D
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    int padding = 0;
    int in_h = 0;
    int in_w = 0;

    static LayerSpec fc(int in, int out, bool prunable);
    static LayerSpec conv2d(int in_c, int out_c, int kh, int kw, int stride, int padding,
                            int in_h, int in_w, bool prunable);
    static LayerSpec relu();
    static LayerSpec softmax_ce();

    bool weighted() const { return kind == LayerKind::FullyConnected || kind == LayerKind::Conv2D; }

    int out_h() const;
    int out_w() const;

    /// Flat activation widths in and out of the layer.
    int input_size() const;
    int output_size() const;

    /// Weight matrix shape: FC is out x in, Conv2D is out_c x (kh*kw*in_c).
    int weight_rows() const;
    int weight_cols() const;
};

/// Cosine-annealed SGD settings. total_steps 0 means unset; TrainConfig
/// resolves it to the run length, standalone users must set it.
struct OptimizerConfig {
    float base_lr = 0.05f;
    float momentum = 0.9f;
    float weight_decay = 0.0005f;
    int total_steps = 0;

    void validate() const;
};

float cosine_lr(const OptimizerConfig& cfg, int step_index);

/// Ordered layers with one weight, gradient and momentum matrix per weighted
/// layer. Plain value data; copying yields an independent network.
struct ToyNetwork {
    std::vector<LayerSpec> layers;
    std::vector<Matrix> weights;
    std::vector<Matrix> grad;
    std::vector<Matrix> momentum;
    uint64_t weights_version = 0;

    /// Validates layer chaining and allocates zeroed parameter storage.
    static ToyNetwork create(std::vector<LayerSpec> specs);

    void init_weights(uint64_t seed);
    void zero_grad();

    int weighted_count() const { return static_cast<int>(weights.size()); }
    void set_weight(int weighted_index, Matrix w);

    int input_size() const;
    int class_count() const;

    /// Index into weights/grad/momentum for a layer, -1 if unweighted.
    int weight_index(int layer_index) const;
};

/// Everything backward needs from a forward pass, tied to the weight
/// snapshot it was computed from.
struct ForwardCache {
    uint64_t weights_version = 0;
    int batch_rows = 0;
    std::vector<Matrix> inputs;  // activation entering each layer
    std::vector<Matrix> cols;    // im2col matrix per layer (conv layers only)
    Matrix logits;
};

enum class TargetKind : uint8_t { Hard = 0, Soft = 1 };

ForwardCache forward(const ToyNetwork& net, const Matrix& batch);

struct BackwardResult {
    std::vector<Matrix> grads;  // per weighted layer, same shapes as weights
    float loss = 0.0f;
};

/// Gradient of the mean cross-entropy loss w.r.t. every weighted layer.
/// Hard targets are one-hot rows; Soft targets are arbitrary distributions
/// (the in-place distillation path).
BackwardResult backward(const ToyNetwork& net, const ForwardCache& cache,
                        const Matrix& targets, TargetKind kind);

/// theta <- theta - lr(t) * (momentum-carried grad + weight_decay * theta).
void sgd_step(ToyNetwork& net, int step_index, const OptimizerConfig& cfg);

/// Patch extraction for conv-as-GEMM. Output rows = batch * out_h * out_w,
/// cols = in_c * kh * kw (channel-major).
Matrix im2col(const Matrix& input, const LayerSpec& conv);

/// Scatter-add inverse of im2col, used by the conv backward pass.
Matrix col2im(const Matrix& cols, const LayerSpec& conv, int batch_rows);

Matrix softmax(const Matrix& logits);
float cross_entropy(const Matrix& logits, const Matrix& targets);
Matrix one_hot(const std::vector<int>& labels, int classes);

}  // namespace nsc

#endif
