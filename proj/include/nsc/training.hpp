#ifndef NSC_TRAINING_HPP
#define NSC_TRAINING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nsc/matrix.hpp"
#include "nsc/net.hpp"
#include "nsc/pruning.hpp"

namespace nsc {

/// Nested is the full loop: dense frame, then one masked frame per level in
/// ascending sparsity, gradients shielded by the level's mask. SingleSparse
/// is the same loop restricted to one level. NaiveShared ablates the
/// gradient masking and accumulates the raw sparse-frame gradients.
enum class TrainMode : uint8_t { Nested = 0, SingleSparse = 1, Dense = 2, NaiveShared = 3 };

std::string train_mode_name(TrainMode mode);

/// Sparse frames run from warmup_steps on, every period steps. A negative
/// warmup resolves to 10% of the configured step count.
struct PruneSchedule {
    int warmup_steps = -1;
    int period = 1;
};

/// True when step t carries sparse frames. Requires a resolved schedule.
bool prune_step(int t, const PruneSchedule& schedule);

struct TrainConfig {
    SparsityLevelSet levels = SparsityLevelSet::defaults();
    int steps = 0;
    int batch_size = 32;
    OptimizerConfig optimizer;  // total_steps 0 resolves to steps
    PruneSchedule schedule;
    TrainMode mode = TrainMode::Nested;
    uint64_t seed = 1;
    bool distill = true;  // false: sparse frames train on hard labels
    int eval_interval = 0;  // 0 disables periodic evaluation

    PruneSchedule resolved_schedule() const;
    OptimizerConfig resolved_optimizer() const;
    void validate() const;
};

/// Feature rows with one integer class label per row.
struct TrainData {
    Matrix features;
    std::vector<int> labels;

    int sample_count() const { return features.rows; }
};

enum class Frame : uint8_t { Dense = 0, Sparse = 1, Eval = 2 };

std::string frame_name(Frame frame);

/// One metrics line. value is the batch loss for training frames and the
/// top-1 accuracy fraction for eval frames. level is 0 in the dense frame
/// and the 1-based sparsity level otherwise; eval rows at level 0 report
/// the unmasked network.
struct HistoryRecord {
    int step = 0;
    Frame frame = Frame::Dense;
    int level = 0;
    float value = 0.0f;
    float lr = 0.0f;
};

/// What one optimizer step saw. mask_sets holds the masks each frame used,
/// one entry per weighted layer (empty set for layers trained dense); it is
/// empty on steps without sparse frames.
struct StepMetrics {
    float dense_loss = 0.0f;
    std::vector<float> sparse_losses;  // ascending level order
    std::vector<NestedMaskSet> mask_sets;
    bool pruned = false;
};

struct TrainedModel {
    ToyNetwork net;
    std::vector<NestedMaskSet> masks;  // per weighted layer; empty in Dense mode
    std::vector<HistoryRecord> history;
};

/// Masks for every weighted layer of the current weights: prunable layers
/// get get_nested_masks, the rest an empty set.
std::vector<NestedMaskSet> compute_masks(const ToyNetwork& net,
                                         const SparsityLevelSet& levels);

/// Copy of net with weights masked at one level: prunable layers keep only
/// their level support, layers with an empty mask set stay dense.
/// level_index is 0-based.
ToyNetwork masked_network(const ToyNetwork& net,
                          const std::vector<NestedMaskSet>& masks, int level_index);

/// One full optimizer step on net. Accumulates the dense-frame gradient and,
/// on prune steps, the per-level sparse-frame gradients into net.grad, then
/// applies sgd_step. net.grad still holds the accumulated update afterwards.
StepMetrics train_step(ToyNetwork& net, const Matrix& batch, const Matrix& hard_targets,
                       const TrainConfig& cfg, int t);

/// Runs cfg.steps train_steps over batches sampled from data, recording
/// history and, when eval_interval is set, periodic accuracies on eval.
/// Final masks come from the final weights.
TrainedModel train(const ToyNetwork& initial, const TrainData& data,
                   const TrainData& eval, const TrainConfig& cfg);

/// Top-1 accuracy of the level's masked network on eval_data. An empty
/// masks vector evaluates the dense network.
float evaluate(const ToyNetwork& net, const std::vector<NestedMaskSet>& masks,
               int level_index, const TrainData& eval_data);

}  // namespace nsc

#endif
