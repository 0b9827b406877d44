#include <doctest.h>

#include <cmath>
#include <vector>

#include "nsc/net.hpp"
#include "nsc/rng.hpp"
#include "testutil.hpp"

using namespace nsc;
using namespace nsc::test;

namespace {

// FC(4)-ReLU-FC(3)-SoftmaxCE scratch net with deterministic weights.
ToyNetwork small_fc_net(uint64_t seed) {
    ToyNetwork net = ToyNetwork::create({LayerSpec::fc(4, 5, false), LayerSpec::relu(),
                                         LayerSpec::fc(5, 3, false),
                                         LayerSpec::softmax_ce()});
    net.init_weights(seed);
    return net;
}

float ce_loss(const ToyNetwork& net, const Matrix& batch, const Matrix& targets) {
    return cross_entropy(forward(net, batch).logits, targets);
}

float accuracy(const ToyNetwork& net, const Matrix& batch, const std::vector<int>& labels) {
    const Matrix logits = forward(net, batch).logits;
    int hits = 0;
    for (int r = 0; r < logits.rows; ++r) {
        int best = 0;
        for (int c = 1; c < logits.cols; ++c)
            if (logits.at(r, c) > logits.at(r, best)) best = c;
        if (best == labels[static_cast<size_t>(r)]) ++hits;
    }
    return static_cast<float>(hits) / logits.rows;
}

}  // namespace

TEST_CASE("layer geometry: conv output sizes and weight shapes") {
    LayerSpec conv = LayerSpec::conv2d(2, 3, 3, 3, 2, 1, 8, 8, true);
    CHECK(conv.out_h() == 4);
    CHECK(conv.out_w() == 4);
    CHECK(conv.input_size() == 2 * 8 * 8);
    CHECK(conv.output_size() == 3 * 4 * 4);
    CHECK(conv.weight_rows() == 3);
    CHECK(conv.weight_cols() == 18);

    LayerSpec fc = LayerSpec::fc(10, 4, false);
    CHECK(fc.weight_rows() == 4);
    CHECK(fc.weight_cols() == 10);
}

TEST_CASE("network construction rejects malformed layer stacks") {
    // Loss layer anywhere but last.
    CHECK_THROWS(ToyNetwork::create(
        {LayerSpec::softmax_ce(), LayerSpec::fc(2, 2, false)}));
    // First weighted layer must stay dense.
    CHECK_THROWS(ToyNetwork::create({LayerSpec::fc(2, 2, true), LayerSpec::softmax_ce()}));
    // Width mismatch between consecutive weighted layers.
    CHECK_THROWS_AS(ToyNetwork::create({LayerSpec::fc(2, 3, false),
                                        LayerSpec::fc(4, 2, false)}),
                    DimensionError);
    // Kernel larger than the padded input.
    CHECK_THROWS_AS(ToyNetwork::create(
                        {LayerSpec::conv2d(1, 1, 5, 5, 1, 0, 3, 3, false)}),
                    GeometryError);
    CHECK_THROWS(ToyNetwork::create({}));
    CHECK_THROWS(ToyNetwork::create({LayerSpec::relu()}));

    ToyNetwork ok = ToyNetwork::create({LayerSpec::fc(2, 3, false), LayerSpec::relu(),
                                        LayerSpec::fc(3, 2, true),
                                        LayerSpec::softmax_ce()});
    CHECK(ok.weighted_count() == 2);
    CHECK(ok.input_size() == 2);
    CHECK(ok.class_count() == 2);
    CHECK(ok.weight_index(0) == 0);
    CHECK(ok.weight_index(1) == -1);
    CHECK(ok.weight_index(2) == 1);
}

TEST_CASE("FC forward: identity weights pass activations through") {
    ToyNetwork net = ToyNetwork::create({LayerSpec::fc(3, 3, false)});
    Matrix eye(3, 3);
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0f;
    net.set_weight(0, eye);
    Matrix x(2, 3, {1.0f, -2.0f, 3.0f, 0.5f, 0.0f, -0.25f});
    CHECK(bit_equal(forward(net, x).logits, x));
}

TEST_CASE("FC forward: hand-computed product") {
    ToyNetwork net = ToyNetwork::create({LayerSpec::fc(2, 2, false)});
    net.set_weight(0, Matrix(2, 2, {1, 2, 3, 4}));
    Matrix x(1, 2, {1, 1});
    Matrix y = forward(net, x).logits;
    CHECK(y.at(0, 0) == 3.0f);
    CHECK(y.at(0, 1) == 7.0f);
}

TEST_CASE("1x1 conv is a per-pixel scale") {
    ToyNetwork net =
        ToyNetwork::create({LayerSpec::conv2d(1, 1, 1, 1, 1, 0, 2, 2, false)});
    net.set_weight(0, Matrix(1, 1, {2.0f}));
    Matrix x(1, 4, {1, 2, 3, 4});
    Matrix y = forward(net, x).logits;
    CHECK(y.cols == 4);
    for (int c = 0; c < 4; ++c) CHECK(y.at(0, c) == 2.0f * x.at(0, c));
}

TEST_CASE("im2col: 2x2 patches of a 3x3 image") {
    LayerSpec conv = LayerSpec::conv2d(1, 1, 2, 2, 1, 0, 3, 3, false);
    Matrix img(1, 9, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Matrix cols = im2col(img, conv);
    REQUIRE(cols.rows == 4);
    REQUIRE(cols.cols == 4);
    const float want[4][4] = {
        {1, 2, 4, 5}, {2, 3, 5, 6}, {4, 5, 7, 8}, {5, 6, 8, 9}};
    for (int p = 0; p < 4; ++p)
        for (int k = 0; k < 4; ++k) CHECK(cols.at(p, k) == want[p][k]);
}

TEST_CASE("im2col: padding fills out-of-image taps with zero") {
    LayerSpec conv = LayerSpec::conv2d(1, 1, 3, 3, 1, 1, 2, 2, false);
    Matrix img(1, 4, {1, 2, 3, 4});
    Matrix cols = im2col(img, conv);
    REQUIRE(cols.rows == 4);
    REQUIRE(cols.cols == 9);
    // Top-left window hangs over the border on its first row and column.
    const float want0[9] = {0, 0, 0, 0, 1, 2, 0, 3, 4};
    for (int k = 0; k < 9; ++k) CHECK(cols.at(0, k) == want0[k]);
    // Every patch covers the whole image plus five padding taps.
    for (int p = 0; p < 4; ++p) {
        float sum = 0.0f;
        for (int k = 0; k < 9; ++k) sum += cols.at(p, k);
        CHECK(sum == 10.0f);
    }
}

TEST_CASE("col2im is the adjoint of im2col") {
    Rng rng(31);
    LayerSpec conv = LayerSpec::conv2d(2, 1, 3, 3, 2, 1, 5, 5, false);
    const int batch = 3;
    Matrix x = random_matrix(batch, conv.input_size(), rng);
    Matrix cols = im2col(x, conv);
    Matrix y = random_matrix(cols.rows, cols.cols, rng);
    double lhs = 0.0, rhs = 0.0;
    for (size_t i = 0; i < cols.size(); ++i) lhs += static_cast<double>(cols.data[i]) * y.data[i];
    Matrix back = col2im(y, conv, batch);
    for (size_t i = 0; i < x.size(); ++i) rhs += static_cast<double>(x.data[i]) * back.data[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
}

TEST_CASE("conv forward matches the direct convolution oracle") {
    Rng rng(42);
    struct Case {
        int in_c, out_c, k, stride, pad, h, w, batch;
    };
    const Case cases[] = {
        {1, 1, 3, 1, 0, 5, 5, 1}, {1, 4, 3, 1, 1, 6, 6, 2}, {3, 2, 3, 2, 1, 7, 7, 2},
        {2, 3, 1, 1, 0, 4, 4, 3}, {2, 2, 5, 2, 2, 9, 9, 1},
    };
    for (const Case& c : cases) {
        ToyNetwork net = ToyNetwork::create({LayerSpec::conv2d(
            c.in_c, c.out_c, c.k, c.k, c.stride, c.pad, c.h, c.w, false)});
        net.init_weights(9);
        Matrix x = random_matrix(c.batch, net.input_size(), rng);
        Matrix got = forward(net, x).logits;
        Matrix want = direct_conv(x, net.weights[0], net.layers[0]);
        CHECK(max_abs_diff(got, want) <= 1e-5f);
    }
}

TEST_CASE("softmax rows are distributions, invariant under shifts") {
    Matrix logits(2, 3, {1.0f, 2.0f, 3.0f, -5.0f, 0.0f, 5.0f});
    Matrix q = softmax(logits);
    for (int r = 0; r < 2; ++r) {
        float sum = 0.0f;
        for (int c = 0; c < 3; ++c) {
            CHECK(q.at(r, c) > 0.0f);
            sum += q.at(r, c);
        }
        CHECK(sum == doctest::Approx(1.0f).epsilon(1e-6));
    }
    Matrix shifted = logits;
    for (float& v : shifted.data) v += 100.0f;
    CHECK(max_abs_diff(softmax(shifted), q) <= 1e-6f);
}

TEST_CASE("cross-entropy: hand values") {
    // Uniform logits over two classes cost ln 2.
    Matrix logits(1, 2, {0.0f, 0.0f});
    Matrix t(1, 2, {1.0f, 0.0f});
    CHECK(cross_entropy(logits, t) == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    // A confidently correct row costs nearly nothing; zero-weight targets
    // must not pull in their logits.
    Matrix sure(1, 2, {1000.0f, 0.0f});
    CHECK(cross_entropy(sure, t) == doctest::Approx(0.0).epsilon(1e-6));

    Matrix soft(1, 2, {0.5f, 0.5f});
    CHECK(cross_entropy(logits, soft) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("one_hot encodes labels and rejects out-of-range ones") {
    Matrix t = one_hot({0, 2}, 3);
    CHECK(t.rows == 2);
    CHECK(t.cols == 3);
    CHECK(bit_equal(t, Matrix(2, 3, {1, 0, 0, 0, 0, 1})));
    CHECK_THROWS(one_hot({3}, 3));
    CHECK_THROWS(one_hot({-1}, 3));
}

TEST_CASE("backward matches finite differences on an FC stack") {
    ToyNetwork net = small_fc_net(17);
    Rng rng(99);
    Matrix x = random_matrix(3, 4, rng);
    Matrix targets = one_hot({0, 2, 1}, 3);

    ForwardCache cache = forward(net, x);
    BackwardResult res = backward(net, cache, targets, TargetKind::Hard);
    CHECK(res.loss == doctest::Approx(cross_entropy(cache.logits, targets)).epsilon(1e-6));

    std::vector<Matrix> fd = finite_difference_grads(
        net, [&](const ToyNetwork& n) { return ce_loss(n, x, targets); }, 1e-2f);
    for (int wi = 0; wi < net.weighted_count(); ++wi)
        CHECK(max_rel_error(res.grads[wi], fd[wi], 1e-3f) <= 2e-2f);
}

TEST_CASE("backward matches finite differences on a conv stack with soft targets") {
    ToyNetwork net = ToyNetwork::create(
        {LayerSpec::conv2d(1, 2, 3, 3, 1, 1, 4, 4, false), LayerSpec::relu(),
         LayerSpec::fc(2 * 4 * 4, 2, true), LayerSpec::softmax_ce()});
    net.init_weights(23);
    Rng rng(5);
    Matrix x = random_matrix(2, 16, rng);
    // Arbitrary distribution rows exercise the soft-target path.
    Matrix targets(2, 2, {0.3f, 0.7f, 0.9f, 0.1f});

    ForwardCache cache = forward(net, x);
    BackwardResult res = backward(net, cache, targets, TargetKind::Soft);

    std::vector<Matrix> fd = finite_difference_grads(
        net, [&](const ToyNetwork& n) { return ce_loss(n, x, targets); }, 1e-2f);
    for (int wi = 0; wi < net.weighted_count(); ++wi)
        CHECK(max_rel_error(res.grads[wi], fd[wi], 1e-3f) <= 2e-2f);
}

TEST_CASE("self-distillation targets give exactly zero gradients") {
    ToyNetwork net = small_fc_net(3);
    Rng rng(8);
    Matrix x = random_matrix(4, 4, rng);
    ForwardCache cache = forward(net, x);
    Matrix targets = softmax(cache.logits);
    BackwardResult res = backward(net, cache, targets, TargetKind::Soft);
    for (const Matrix& g : res.grads)
        for (float v : g.data) CHECK(v == 0.0f);
}

TEST_CASE("confidently correct predictions give vanishing loss and gradients") {
    ToyNetwork net = ToyNetwork::create({LayerSpec::fc(2, 2, false), LayerSpec::softmax_ce()});
    net.set_weight(0, Matrix(2, 2, {20.0f, 0.0f, 0.0f, 20.0f}));
    Matrix x(2, 2, {1, 0, 0, 1});
    Matrix targets = one_hot({0, 1}, 2);
    ForwardCache cache = forward(net, x);
    BackwardResult res = backward(net, cache, targets, TargetKind::Hard);
    CHECK(res.loss < 1e-6f);
    for (const Matrix& g : res.grads)
        for (float v : g.data) CHECK(std::abs(v) < 1e-6f);
}

TEST_CASE("sgd_step: hand-computed update") {
    ToyNetwork net = ToyNetwork::create({LayerSpec::fc(1, 1, false)});
    net.set_weight(0, Matrix(1, 1, {1.0f}));
    net.grad[0].at(0, 0) = 1.0f;
    OptimizerConfig cfg{0.1f, 0.0f, 0.0f, 100};
    sgd_step(net, 0, cfg);  // cosine gives exactly base_lr at step 0
    CHECK(net.weights[0].at(0, 0) == doctest::Approx(0.9f).epsilon(1e-6));

    // Momentum carry: second step applies mu*v + g.
    ToyNetwork m = ToyNetwork::create({LayerSpec::fc(1, 1, false)});
    m.set_weight(0, Matrix(1, 1, {1.0f}));
    OptimizerConfig mc{0.1f, 0.5f, 0.0f, 1000000};
    m.grad[0].at(0, 0) = 1.0f;
    sgd_step(m, 0, mc);  // v=1, w=1-0.1
    m.grad[0].at(0, 0) = 1.0f;
    const float lr1 = cosine_lr(mc, 1);
    sgd_step(m, 1, mc);  // v=1.5, w=0.9-lr1*1.5
    CHECK(m.momentum[0].at(0, 0) == doctest::Approx(1.5f).epsilon(1e-6));
    CHECK(m.weights[0].at(0, 0) == doctest::Approx(0.9f - lr1 * 1.5f).epsilon(1e-5));

    // Weight decay couples the weight into its own update.
    ToyNetwork d = ToyNetwork::create({LayerSpec::fc(1, 1, false)});
    d.set_weight(0, Matrix(1, 1, {1.0f}));
    OptimizerConfig dc{0.1f, 0.0f, 0.5f, 100};
    d.grad[0].at(0, 0) = 1.0f;
    sgd_step(d, 0, dc);  // w = 1 - 0.1*(1 + 0.5*1)
    CHECK(d.weights[0].at(0, 0) == doctest::Approx(0.85f).epsilon(1e-6));
}

TEST_CASE("cosine schedule: endpoints, midpoint, monotone decay") {
    OptimizerConfig cfg{0.05f, 0.9f, 0.0005f, 200};
    CHECK(cosine_lr(cfg, 0) == doctest::Approx(0.05f).epsilon(1e-7));
    CHECK(cosine_lr(cfg, 100) == doctest::Approx(0.025f).epsilon(1e-6));
    CHECK(cosine_lr(cfg, 200) < 1e-9f);
    for (int t = 1; t <= 200; ++t) CHECK(cosine_lr(cfg, t) < cosine_lr(cfg, t - 1));
}

TEST_CASE("sgd_step refuses to run past the schedule") {
    ToyNetwork net = ToyNetwork::create({LayerSpec::fc(1, 1, false)});
    OptimizerConfig cfg{0.1f, 0.9f, 0.0f, 5};
    CHECK_THROWS_AS(sgd_step(net, 5, cfg), ScheduleExhaustedError);
    CHECK_THROWS_AS(sgd_step(net, 6, cfg), ScheduleExhaustedError);
    CHECK_NOTHROW(sgd_step(net, 4, cfg));
}

TEST_CASE("backward rejects a cache from older weights") {
    ToyNetwork net = small_fc_net(1);
    Rng rng(2);
    Matrix x = random_matrix(2, 4, rng);
    ForwardCache cache = forward(net, x);
    net.set_weight(0, net.weights[0]);  // bumps the version, same values
    CHECK_THROWS_AS(backward(net, cache, one_hot({0, 1}, 3), TargetKind::Hard),
                    StaleCacheError);
}

TEST_CASE("forward is pure and reproducible") {
    ToyNetwork net = small_fc_net(6);
    Rng rng(14);
    Matrix x = random_matrix(5, 4, rng);
    const uint64_t version = net.weights_version;
    Matrix a = forward(net, x).logits;
    Matrix b = forward(net, x).logits;
    CHECK(bit_equal(a, b));
    CHECK(net.weights_version == version);
}

TEST_CASE("forward rejects mis-sized batches") {
    ToyNetwork net = small_fc_net(6);
    CHECK_THROWS_AS(forward(net, Matrix(2, 3)), DimensionError);
}

TEST_CASE("weight init is seed-deterministic") {
    ToyNetwork a = small_fc_net(42);
    ToyNetwork b = small_fc_net(42);
    ToyNetwork c = small_fc_net(43);
    CHECK(bit_equal(a.weights[0], b.weights[0]));
    CHECK(bit_equal(a.weights[1], b.weights[1]));
    CHECK_FALSE(bit_equal(a.weights[0], c.weights[0]));
}

TEST_CASE("training drives a two-blob task to high accuracy") {
    Rng rng(2718);
    const int n = 200;
    Matrix x(n, 2);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        const int cls = i % 2;
        const float cx = cls ? 1.5f : -1.5f;
        const float cy = cls ? 1.5f : -1.5f;
        x.at(i, 0) = cx + 0.4f * rng.normal();
        x.at(i, 1) = cy + 0.4f * rng.normal();
        labels[static_cast<size_t>(i)] = cls;
    }
    Matrix targets = one_hot(labels, 2);

    ToyNetwork net = ToyNetwork::create({LayerSpec::fc(2, 16, false), LayerSpec::relu(),
                                         LayerSpec::fc(16, 2, false),
                                         LayerSpec::softmax_ce()});
    net.init_weights(7);
    OptimizerConfig cfg{0.2f, 0.9f, 0.0f, 400};
    float first_loss = 0.0f, last_loss = 0.0f;
    for (int step = 0; step < cfg.total_steps; ++step) {
        ForwardCache cache = forward(net, x);
        BackwardResult res = backward(net, cache, targets, TargetKind::Hard);
        if (step == 0) first_loss = res.loss;
        last_loss = res.loss;
        net.grad = res.grads;
        sgd_step(net, step, cfg);
    }
    CHECK(last_loss < first_loss);
    CHECK(accuracy(net, x, labels) >= 0.99f);
}
