#ifndef NSC_TESTUTIL_HPP
#define NSC_TESTUTIL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <vector>

#include "nsc/matrix.hpp"
#include "nsc/net.hpp"
#include "nsc/pruning.hpp"
#include "nsc/rng.hpp"

namespace nsc::test {

inline Matrix random_matrix(int rows, int cols, Rng& rng, float scale = 1.0f) {
    Matrix m(rows, cols);
    for (float& v : m.data) v = rng.normal() * scale;
    return m;
}

inline float max_abs_diff(const Matrix& a, const Matrix& b) {
    float worst = 0.0f;
    for (size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

inline bool bit_equal(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        // Compare representations, so +0 vs -0 counts as different.
        uint32_t ai, bi;
        static_assert(sizeof(float) == 4);
        std::memcpy(&ai, &a.data[i], 4);
        std::memcpy(&bi, &b.data[i], 4);
        if (ai != bi) return false;
    }
    return true;
}

/// Block support pruned by independently re-ranking block norms. Kept apart
/// from the library so it can disagree with it.
inline std::vector<uint8_t> brute_force_block_keep(const Matrix& w, float s, int bm,
                                                   int bn) {
    const int gr = w.rows / bm;
    const int gc = w.cols / bn;
    std::vector<double> norms(static_cast<size_t>(gr) * gc);
    for (int br = 0; br < gr; ++br)
        for (int bc = 0; bc < gc; ++bc) {
            double sq = 0.0;
            for (int mi = 0; mi < bm; ++mi)
                for (int ni = 0; ni < bn; ++ni) {
                    const double v = w.at(br * bm + mi, bc * bn + ni);
                    sq += v * v;
                }
            norms[static_cast<size_t>(br) * gc + bc] = std::sqrt(sq);
        }
    std::vector<int> order(norms.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return norms[a] < norms[b]; });
    const int pruned = static_cast<int>(std::ceil(static_cast<double>(s) * norms.size()));
    std::vector<uint8_t> keep(norms.size(), 1);
    for (int k = 0; k < pruned && k < static_cast<int>(norms.size()); ++k)
        keep[order[k]] = 0;
    return keep;
}

/// Direct nested-loop convolution, the oracle for every conv-as-GEMM path.
inline Matrix direct_conv(const Matrix& input, const Matrix& weights,
                          const LayerSpec& conv) {
    const int oh = conv.out_h();
    const int ow = conv.out_w();
    Matrix out(input.rows, conv.out_channels * oh * ow);
    for (int b = 0; b < input.rows; ++b) {
        for (int oc = 0; oc < conv.out_channels; ++oc) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int ic = 0; ic < conv.in_channels; ++ic)
                        for (int ky = 0; ky < conv.kernel_h; ++ky)
                            for (int kx = 0; kx < conv.kernel_w; ++kx) {
                                const int iy = oy * conv.stride + ky - conv.padding;
                                const int ix = ox * conv.stride + kx - conv.padding;
                                if (iy < 0 || iy >= conv.in_h || ix < 0 || ix >= conv.in_w)
                                    continue;
                                const float x =
                                    input.at(b, (ic * conv.in_h + iy) * conv.in_w + ix);
                                const float w = weights.at(
                                    oc, (ic * conv.kernel_h + ky) * conv.kernel_w + kx);
                                acc += static_cast<double>(x) * w;
                            }
                    out.at(b, (oc * oh + oy) * ow + ox) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

/// Central finite differences of a scalar loss over every weight of the net.
/// `loss_fn` must be pure in the weights.
template <typename LossFn>
std::vector<Matrix> finite_difference_grads(ToyNetwork net, LossFn loss_fn, float eps) {
    std::vector<Matrix> grads;
    for (int wi = 0; wi < net.weighted_count(); ++wi) {
        Matrix g(net.weights[wi].rows, net.weights[wi].cols);
        for (size_t k = 0; k < g.size(); ++k) {
            const float saved = net.weights[wi].data[k];
            net.weights[wi].data[k] = saved + eps;
            ++net.weights_version;
            const float up = loss_fn(net);
            net.weights[wi].data[k] = saved - eps;
            ++net.weights_version;
            const float down = loss_fn(net);
            net.weights[wi].data[k] = saved;
            ++net.weights_version;
            g.data[k] = (up - down) / (2.0f * eps);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

inline float max_rel_error(const Matrix& got, const Matrix& want, float floor = 1e-4f) {
    float worst = 0.0f;
    for (size_t i = 0; i < got.size(); ++i) {
        const float denom = std::max(floor, std::abs(want.data[i]));
        worst = std::max(worst, std::abs(got.data[i] - want.data[i]) / denom);
    }
    return worst;
}

}  // namespace nsc::test

#endif
