#ifndef NSC_DATASET_HPP
#define NSC_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsc/matrix.hpp"
#include "nsc/training.hpp"

namespace nsc {

/// Labeled feature rows plus the shape of one sample, so conv front ends
/// can interpret a row as C x H x W.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<int> dims;  // e.g. {2} for points, {1, 8, 8} for images
    int class_count = 0;

    int sample_count() const { return features.rows; }
    int feature_width() const;
    TrainData as_train_data() const;
    void validate() const;
};

/// Gaussian point clouds around class centers on a circle. dims = {2}.
Dataset make_blobs(int samples, int classes, uint64_t seed);

/// Two interleaved spiral arms rendered as 8x8 single-channel images, one
/// Gaussian bump per sample. Not linearly separable once the arms wind
/// through shared pixels. dims = {1, 8, 8}.
Dataset make_spiral(int samples, uint64_t seed, float turns = 2.5f,
                    float noise = 0.04f);

/// Striped and checkered 8x8 images with random phase and amplitude,
/// 3 classes. dims = {1, 8, 8}.
Dataset make_textures(int samples, uint64_t seed);

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Deterministic shuffled split; both parts are non-empty.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, float train_fraction,
                                          uint64_t seed);

}  // namespace nsc

#endif
