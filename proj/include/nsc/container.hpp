#ifndef NSC_CONTAINER_HPP
#define NSC_CONTAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nsc/matrix.hpp"
#include "nsc/nested_csr.hpp"
#include "nsc/net.hpp"
#include "nsc/pruning.hpp"
#include "nsc/training.hpp"

namespace nsc {

/// Container kinds: a trained model carries dense weights plus nested masks;
/// encoded models carry one NestedCSR blob per prunable layer.
enum class ModelKind : uint8_t { Trained = 0, EncodedF32 = 1, EncodedI8 = 2 };

std::string model_kind_name(ModelKind kind);

/// One weighted layer of an encoded model: either a raw dense matrix or a
/// NestedCSR blob (exponent used by int8 payloads).
struct EncodedLayer {
    bool encoded = false;
    Matrix dense;
    NestedCSRMatrix sparse;
    int exponent = 0;
};

struct ModelContainer {
    ModelKind kind = ModelKind::Trained;
    std::vector<LayerSpec> layers;
    SparsityLevelSet levels;  // levels empty for dense-trained models

    // Trained: per weighted layer, masks empty-set for layers trained dense.
    std::vector<Matrix> weights;
    std::vector<NestedMaskSet> masks;

    // EncodedF32 / EncodedI8: per weighted layer.
    std::vector<EncodedLayer> encoded;

    int level_count() const { return static_cast<int>(levels.levels.size()); }
    void validate() const;
};

/// Bundles a training result for saving. Dense-trained models get an empty
/// level set.
ModelContainer container_from_trained(const TrainedModel& model,
                                      const SparsityLevelSet& levels);

/// Network with the container's dense weights (Trained kind only).
ToyNetwork network_from_container(const ModelContainer& c);

void save_model(const ModelContainer& c, const std::string& path);
ModelContainer load_model(const std::string& path);

}  // namespace nsc

#endif
