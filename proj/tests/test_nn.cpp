#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "test_util.hpp"
#include "vlcsim/nn.hpp"

using namespace vlcsim;

namespace {

// 0.5 * sum(y^2) of the network output; its output gradient is y itself.
double quadratic_loss(const Mlp& mlp, const std::vector<double>& x) {
    double loss = 0.0;
    for (double v : mlp_forward(mlp, x)) loss += 0.5 * v * v;
    return loss;
}

// Central finite difference of quadratic_loss w.r.t. one parameter.
double fd_grad(Mlp mlp, const std::vector<double>& x, int layer, bool bias, size_t idx) {
    const double h = 1e-5;
    auto& p = bias ? mlp.layers[static_cast<size_t>(layer)].b
                   : mlp.layers[static_cast<size_t>(layer)].w;
    const double orig = p[idx];
    p[idx] = orig + h;
    const double up = quadratic_loss(mlp, x);
    p[idx] = orig - h;
    const double dn = quadratic_loss(mlp, x);
    return (up - dn) / (2.0 * h);
}

} // namespace

TEST_CASE("mlp construction and zero network") {
    Mlp mlp = make_mlp({8, 16, 16, 4});
    CHECK(mlp.input_dim() == 8);
    CHECK(mlp.output_dim() == 4);
    CHECK(mlp.n_params() == 8 * 16 + 16 + 16 * 16 + 16 + 16 * 4 + 4);
    const std::vector<double> y = mlp_forward(mlp, std::vector<double>(8, 1.0));
    for (double v : y) CHECK(v == 0.0);
    CHECK_THROWS_AS(make_mlp({5}), std::invalid_argument);
    CHECK_THROWS_AS(mlp_forward(mlp, std::vector<double>(7, 0.0)), std::invalid_argument);
}

TEST_CASE("init scales the final layer and zeroes biases") {
    Rng rng(1);
    Mlp mlp = make_mlp({8, 16, 4});
    init_mlp(mlp, rng, 0.01);
    for (double b : mlp.layers[0].b) CHECK(b == 0.0);
    const double bound0 = 1.0 / std::sqrt(8.0);
    for (double w : mlp.layers[0].w) CHECK(std::abs(w) <= bound0);
    const double bound1 = 0.01 / std::sqrt(16.0);
    for (double w : mlp.layers[1].w) CHECK(std::abs(w) <= bound1);
}

TEST_CASE("scaling the linear output layer scales the output") {
    Rng rng(2);
    Mlp mlp = make_mlp({6, 12, 3});
    init_mlp(mlp, rng);
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const std::vector<double> y1 = mlp_forward(mlp, x);
    for (double& w : mlp.layers.back().w) w *= 3.0;
    for (double& b : mlp.layers.back().b) b *= 3.0;
    const std::vector<double> y2 = mlp_forward(mlp, x);
    for (size_t i = 0; i < y1.size(); ++i) CHECK(y2[i] == doctest::Approx(3.0 * y1[i]));
}

TEST_CASE("backward matches central finite differences on every parameter") {
    Rng rng(7);
    Mlp mlp = make_mlp({8, 16, 16, 4});
    init_mlp(mlp, rng);
    std::vector<double> x(8);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);

    MlpCache cache;
    const std::vector<double> y = mlp_forward_cached(mlp, x, cache);
    Mlp grads = zeros_like(mlp);
    mlp_backward(mlp, cache, y, grads);

    for (int l = 0; l < static_cast<int>(mlp.layers.size()); ++l) {
        for (size_t i = 0; i < mlp.layers[static_cast<size_t>(l)].w.size(); ++i) {
            const double fd = fd_grad(mlp, x, l, false, i);
            const double an = grads.layers[static_cast<size_t>(l)].w[i];
            const bool ok = rel_close(an, fd, 1e-4) || std::abs(an - fd) < 1e-8;
            CHECK_MESSAGE(ok, "layer ", l, " w[", i, "] analytic ", an, " fd ", fd);
        }
        for (size_t i = 0; i < mlp.layers[static_cast<size_t>(l)].b.size(); ++i) {
            const double fd = fd_grad(mlp, x, l, true, i);
            const double an = grads.layers[static_cast<size_t>(l)].b[i];
            const bool ok = rel_close(an, fd, 1e-4) || std::abs(an - fd) < 1e-8;
            CHECK_MESSAGE(ok, "layer ", l, " b[", i, "] analytic ", an, " fd ", fd);
        }
    }
}

TEST_CASE("backward input gradient matches finite differences") {
    Rng rng(11);
    Mlp mlp = make_mlp({5, 9, 3});
    init_mlp(mlp, rng);
    std::vector<double> x(5);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);

    MlpCache cache;
    const std::vector<double> y = mlp_forward_cached(mlp, x, cache);
    Mlp grads = zeros_like(mlp);
    const std::vector<double> dx = mlp_backward(mlp, cache, y, grads);

    const double h = 1e-5;
    for (size_t i = 0; i < x.size(); ++i) {
        std::vector<double> xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (quadratic_loss(mlp, xp) - quadratic_loss(mlp, xm)) / (2.0 * h);
        const bool ok = rel_close(dx[i], fd, 1e-4) || std::abs(dx[i] - fd) < 1e-8;
        CHECK_MESSAGE(ok, "input ", i);
    }
}

TEST_CASE("gradients are linear in the loss and zero for untouched heads") {
    Rng rng(3);
    Mlp mlp = make_mlp({4, 8, 3});
    init_mlp(mlp, rng);
    std::vector<double> x = {0.3, -0.2, 0.8, 0.1};
    MlpCache cache;
    mlp_forward_cached(mlp, x, cache);

    // Loss touching only output 1: other rows of the last layer stay zero.
    Mlp g1 = zeros_like(mlp);
    mlp_backward(mlp, cache, {0.0, 1.0, 0.0}, g1);
    const Linear& last = g1.layers.back();
    for (int i = 0; i < last.in; ++i) {
        CHECK(last.w[static_cast<size_t>(i)] == 0.0);                      // row 0
        CHECK(last.w[static_cast<size_t>(2 * last.in + i)] == 0.0);        // row 2
    }
    CHECK(last.b[0] == 0.0);
    CHECK(last.b[2] == 0.0);

    // Doubling the output gradient doubles every parameter gradient.
    Mlp g2 = zeros_like(mlp);
    mlp_backward(mlp, cache, {0.0, 2.0, 0.0}, g2);
    for (size_t l = 0; l < mlp.layers.size(); ++l)
        for (size_t i = 0; i < g1.layers[l].w.size(); ++i)
            CHECK(g2.layers[l].w[i] == doctest::Approx(2.0 * g1.layers[l].w[i]));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Rng rng(5);
    Mlp mlp = make_mlp({3, 4, 2});
    init_mlp(mlp, rng);
    const Mlp before = mlp;
    AdamState st = make_adam(mlp);
    adam_step(mlp, zeros_like(mlp), st, 1e-3);
    for (size_t l = 0; l < mlp.layers.size(); ++l) {
        CHECK(mlp.layers[l].w == before.layers[l].w);
        CHECK(mlp.layers[l].b == before.layers[l].b);
    }
}

TEST_CASE("adam: first step moves each parameter by about lr in the gradient direction") {
    Mlp mlp = make_mlp({2, 2});
    Mlp grads = zeros_like(mlp);
    grads.layers[0].w = {0.5, -2.0, 1e-3, 0.0};
    AdamState st = make_adam(mlp);
    const double lr = 1e-3;
    adam_step(mlp, grads, st, lr);
    CHECK(mlp.layers[0].w[0] == doctest::Approx(-lr).epsilon(1e-6));
    CHECK(mlp.layers[0].w[1] == doctest::Approx(lr).epsilon(1e-6));
    CHECK(mlp.layers[0].w[2] == doctest::Approx(-lr).epsilon(1e-4));
    CHECK(mlp.layers[0].w[3] == 0.0);
}

TEST_CASE("adam minimizes a quadratic bowl monotonically") {
    // Single 1x1 layer; loss = 0.5 (w^2 + b^2) so grads are (w, b).
    Mlp mlp = make_mlp({1, 1});
    mlp.layers[0].w[0] = 0.8;
    mlp.layers[0].b[0] = -0.6;
    AdamState st = make_adam(mlp);
    double prev = 0.5 * (0.8 * 0.8 + 0.6 * 0.6);
    for (int i = 0; i < 1000; ++i) {
        Mlp g = zeros_like(mlp);
        g.layers[0].w[0] = mlp.layers[0].w[0];
        g.layers[0].b[0] = mlp.layers[0].b[0];
        adam_step(mlp, g, st, 5e-4);
        const double f = 0.5 * (mlp.layers[0].w[0] * mlp.layers[0].w[0] +
                                mlp.layers[0].b[0] * mlp.layers[0].b[0]);
        CHECK(f <= prev);
        prev = f;
    }
    CHECK(prev < 0.25);
}
