#include "nsc/training.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nsc/errors.hpp"
#include "nsc/rng.hpp"

namespace nsc {

namespace {

constexpr float kDivergenceLimit = 1e4f;

void add_into(Matrix& dst, const Matrix& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

void add_masked_into(Matrix& dst, const Matrix& src, const BlockMask& mask) {
    for (size_t i = 0; i < dst.size(); ++i)
        if (mask.bits[i]) dst.data[i] += src.data[i];
}

void check_loss(float loss, int t, Frame frame, int level) {
    if (std::isfinite(loss) && loss <= kDivergenceLimit) return;
    std::string where = frame_name(frame) + " frame";
    if (frame == Frame::Sparse) where += " level " + std::to_string(level);
    throw DivergenceError("training diverged at step " + std::to_string(t) + ", " +
                          where + ": loss=" + std::to_string(loss));
}

void check_data(const ToyNetwork& net, const TrainData& data, const std::string& who) {
    if (data.features.rows < 1)
        throw DimensionError(who + ": no samples");
    if (data.features.cols != net.input_size())
        throw DimensionError(who + ": feature width " +
                             std::to_string(data.features.cols) + ", network expects " +
                             std::to_string(net.input_size()));
    if (static_cast<int>(data.labels.size()) != data.features.rows)
        throw DimensionError(who + ": " + std::to_string(data.labels.size()) +
                             " labels for " + std::to_string(data.features.rows) +
                             " rows");
    for (int label : data.labels)
        if (label < 0 || label >= net.class_count())
            throw DimensionError(who + ": label " + std::to_string(label) +
                                 " outside [0," + std::to_string(net.class_count()) +
                                 ")");
}

int argmax_row(const Matrix& m, int row) {
    int best = 0;
    for (int j = 1; j < m.cols; ++j)
        if (m.at(row, j) > m.at(row, best)) best = j;
    return best;
}

}  // namespace

std::string train_mode_name(TrainMode mode) {
    switch (mode) {
        case TrainMode::Nested: return "nested";
        case TrainMode::SingleSparse: return "single-sparse";
        case TrainMode::Dense: return "dense";
        case TrainMode::NaiveShared: return "naive-shared";
    }
    return "unknown";
}

std::string frame_name(Frame frame) {
    switch (frame) {
        case Frame::Dense: return "dense";
        case Frame::Sparse: return "sparse";
        case Frame::Eval: return "eval";
    }
    return "unknown";
}

bool prune_step(int t, const PruneSchedule& schedule) {
    if (schedule.warmup_steps < 0)
        throw std::invalid_argument("prune_step: unresolved schedule (negative warmup)");
    if (schedule.period < 1)
        throw std::invalid_argument("prune_step: period must be >= 1");
    if (t < schedule.warmup_steps) return false;
    return (t - schedule.warmup_steps) % schedule.period == 0;
}

PruneSchedule TrainConfig::resolved_schedule() const {
    PruneSchedule s = schedule;
    if (s.warmup_steps < 0) s.warmup_steps = steps / 10;
    return s;
}

OptimizerConfig TrainConfig::resolved_optimizer() const {
    OptimizerConfig opt = optimizer;
    if (opt.total_steps == 0) opt.total_steps = steps;
    return opt;
}

void TrainConfig::validate() const {
    if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
    if (batch_size < 1)
        throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    const PruneSchedule s = resolved_schedule();
    if (s.period < 1) throw std::invalid_argument("TrainConfig: period must be >= 1");
    if (s.warmup_steps >= steps)
        throw std::invalid_argument("TrainConfig: warmup_steps " +
                                    std::to_string(s.warmup_steps) +
                                    " must stay below steps " + std::to_string(steps));
    resolved_optimizer().validate();
    if (mode != TrainMode::Dense) levels.validate();
    if (mode == TrainMode::SingleSparse && levels.count() != 1)
        throw std::invalid_argument(
            "TrainConfig: single-sparse mode takes exactly one level, got " +
            std::to_string(levels.count()));
    if (eval_interval < 0)
        throw std::invalid_argument("TrainConfig: eval_interval must be >= 0");
}

std::vector<NestedMaskSet> compute_masks(const ToyNetwork& net,
                                         const SparsityLevelSet& levels) {
    std::vector<NestedMaskSet> sets(net.weighted_count());
    for (size_t li = 0; li < net.layers.size(); ++li) {
        const int wi = net.weight_index(static_cast<int>(li));
        if (wi >= 0 && net.layers[li].prunable)
            sets[wi] = get_nested_masks(net.weights[wi], levels);
    }
    return sets;
}

ToyNetwork masked_network(const ToyNetwork& net,
                          const std::vector<NestedMaskSet>& masks, int level_index) {
    ToyNetwork sub = net;
    if (masks.empty()) return sub;
    if (static_cast<int>(masks.size()) != net.weighted_count())
        throw DimensionError("masked_network: " + std::to_string(masks.size()) +
                             " mask sets for " + std::to_string(net.weighted_count()) +
                             " weighted layers");
    for (int wi = 0; wi < net.weighted_count(); ++wi) {
        if (masks[wi].count() == 0) continue;
        if (level_index < 0 || level_index >= masks[wi].count())
            throw std::out_of_range("masked_network: level index " +
                                    std::to_string(level_index) + " outside [0," +
                                    std::to_string(masks[wi].count()) + ")");
        sub.set_weight(wi, apply_mask(net.weights[wi], masks[wi].masks[level_index]));
    }
    return sub;
}

StepMetrics train_step(ToyNetwork& net, const Matrix& batch, const Matrix& hard_targets,
                       const TrainConfig& cfg, int t) {
    StepMetrics metrics;
    net.zero_grad();

    const ForwardCache dense_cache = forward(net, batch);
    const Matrix soft_labels = softmax(dense_cache.logits);
    const BackwardResult dense_res =
        backward(net, dense_cache, hard_targets, TargetKind::Hard);
    metrics.dense_loss = dense_res.loss;
    check_loss(dense_res.loss, t, Frame::Dense, 0);
    for (int wi = 0; wi < net.weighted_count(); ++wi)
        add_into(net.grad[wi], dense_res.grads[wi]);

    const bool sparse_frames =
        cfg.mode != TrainMode::Dense && prune_step(t, cfg.resolved_schedule());
    if (sparse_frames) {
        metrics.pruned = true;
        // All levels mask the same weight snapshot, so nesting holds within
        // the step and a block pruned today can return tomorrow.
        metrics.mask_sets = compute_masks(net, cfg.levels);
        const Matrix& targets = cfg.distill ? soft_labels : hard_targets;
        const TargetKind kind = cfg.distill ? TargetKind::Soft : TargetKind::Hard;
        for (int level = 0; level < cfg.levels.count(); ++level) {
            const ToyNetwork sub = masked_network(net, metrics.mask_sets, level);
            const ForwardCache cache = forward(sub, batch);
            const BackwardResult res = backward(sub, cache, targets, kind);
            metrics.sparse_losses.push_back(res.loss);
            check_loss(res.loss, t, Frame::Sparse, level + 1);
            for (int wi = 0; wi < net.weighted_count(); ++wi) {
                const bool shield = metrics.mask_sets[wi].count() > 0 &&
                                    cfg.mode != TrainMode::NaiveShared;
                if (shield)
                    add_masked_into(net.grad[wi], res.grads[wi],
                                    metrics.mask_sets[wi].masks[level]);
                else
                    add_into(net.grad[wi], res.grads[wi]);
            }
        }
    }

    sgd_step(net, t, cfg.resolved_optimizer());
    return metrics;
}

TrainedModel train(const ToyNetwork& initial, const TrainData& data,
                   const TrainData& eval, const TrainConfig& cfg) {
    cfg.validate();
    check_data(initial, data, "train data");
    const bool want_eval = cfg.eval_interval > 0 && eval.sample_count() > 0;
    if (want_eval) check_data(initial, eval, "eval data");
    if (cfg.mode != TrainMode::Dense) {
        // Surface bad block geometry now rather than at the first prune step.
        for (size_t li = 0; li < initial.layers.size(); ++li) {
            const int wi = initial.weight_index(static_cast<int>(li));
            if (wi >= 0 && initial.layers[li].prunable) {
                const Matrix& w = initial.weights[wi];
                if (w.rows % cfg.levels.block_m != 0 || w.cols % cfg.levels.block_n != 0)
                    throw BlockShapeError(
                        "train: weighted layer " + std::to_string(wi) + " shape " +
                        std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                        " not divisible by block " + std::to_string(cfg.levels.block_m) +
                        "x" + std::to_string(cfg.levels.block_n));
            }
        }
    }

    TrainedModel model;
    model.net = initial;
    ToyNetwork& net = model.net;
    const OptimizerConfig opt = cfg.resolved_optimizer();
    Rng batch_rng(derive_seed(cfg.seed, 17));

    for (int t = 0; t < cfg.steps; ++t) {
        Matrix batch(cfg.batch_size, data.features.cols);
        std::vector<int> batch_labels(cfg.batch_size);
        for (int r = 0; r < cfg.batch_size; ++r) {
            const int src = static_cast<int>(batch_rng.below(
                static_cast<uint64_t>(data.sample_count())));
            for (int c = 0; c < data.features.cols; ++c)
                batch.at(r, c) = data.features.at(src, c);
            batch_labels[r] = data.labels[src];
        }
        const Matrix hard = one_hot(batch_labels, net.class_count());

        const StepMetrics metrics = train_step(net, batch, hard, cfg, t);
        const float lr = cosine_lr(opt, t);
        model.history.push_back({t, Frame::Dense, 0, metrics.dense_loss, lr});
        for (size_t level = 0; level < metrics.sparse_losses.size(); ++level)
            model.history.push_back({t, Frame::Sparse, static_cast<int>(level) + 1,
                                     metrics.sparse_losses[level], lr});

        if (want_eval && (t + 1) % cfg.eval_interval == 0) {
            if (cfg.mode == TrainMode::Dense) {
                model.history.push_back(
                    {t, Frame::Eval, 0, evaluate(net, {}, 0, eval), lr});
            } else {
                const std::vector<NestedMaskSet> masks = compute_masks(net, cfg.levels);
                for (int level = 0; level < cfg.levels.count(); ++level)
                    model.history.push_back({t, Frame::Eval, level + 1,
                                             evaluate(net, masks, level, eval), lr});
            }
        }
    }

    if (cfg.mode != TrainMode::Dense) model.masks = compute_masks(net, cfg.levels);
    return model;
}

float evaluate(const ToyNetwork& net, const std::vector<NestedMaskSet>& masks,
               int level_index, const TrainData& eval_data) {
    check_data(net, eval_data, "eval data");
    const ToyNetwork sub = masked_network(net, masks, level_index);
    const ForwardCache cache = forward(sub, eval_data.features);
    int correct = 0;
    for (int r = 0; r < eval_data.sample_count(); ++r)
        if (argmax_row(cache.logits, r) == eval_data.labels[r]) ++correct;
    return static_cast<float>(correct) / static_cast<float>(eval_data.sample_count());
}

}  // namespace nsc
