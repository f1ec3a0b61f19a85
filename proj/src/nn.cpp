#include "vlcsim/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace vlcsim {

long Mlp::n_params() const {
    long n = 0;
    for (const Linear& l : layers) n += static_cast<long>(l.w.size() + l.b.size());
    return n;
}

Mlp make_mlp(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least input and output sizes");
    Mlp mlp;
    for (size_t i = 0; i + 1 < sizes.size(); ++i) {
        if (sizes[i] <= 0 || sizes[i + 1] <= 0)
            throw std::invalid_argument("mlp layer sizes must be positive");
        Linear l;
        l.in = sizes[i];
        l.out = sizes[i + 1];
        l.w.assign(static_cast<size_t>(l.in) * static_cast<size_t>(l.out), 0.0);
        l.b.assign(static_cast<size_t>(l.out), 0.0);
        mlp.layers.push_back(std::move(l));
    }
    return mlp;
}

Mlp zeros_like(const Mlp& ref) {
    Mlp z;
    for (const Linear& l : ref.layers) {
        Linear g;
        g.in = l.in;
        g.out = l.out;
        g.w.assign(l.w.size(), 0.0);
        g.b.assign(l.b.size(), 0.0);
        z.layers.push_back(std::move(g));
    }
    return z;
}

void init_mlp(Mlp& mlp, Rng& rng, double final_layer_scale) {
    for (size_t li = 0; li < mlp.layers.size(); ++li) {
        Linear& l = mlp.layers[li];
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        const double scale = li + 1 == mlp.layers.size() ? final_layer_scale : 1.0;
        for (double& w : l.w) w = scale * rng.uniform(-bound, bound);
        for (double& b : l.b) b = 0.0;
    }
}

namespace {

void linear_forward(const Linear& l, const std::vector<double>& x, std::vector<double>& y) {
    y.resize(static_cast<size_t>(l.out));
    const double* xv = x.data();
    const int in = l.in;
    for (int o = 0; o < l.out; ++o) {
        const double* row = l.w.data() + static_cast<size_t>(o) * static_cast<size_t>(in);
        // Four strided partial sums: a fixed summation order that still gives
        // the compiler independent chains to vectorize.
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        int i = 0;
        for (; i + 4 <= in; i += 4) {
            s0 += row[i] * xv[i];
            s1 += row[i + 1] * xv[i + 1];
            s2 += row[i + 2] * xv[i + 2];
            s3 += row[i + 3] * xv[i + 3];
        }
        double s = l.b[static_cast<size_t>(o)];
        for (; i < in; ++i) s += row[i] * xv[i];
        y[static_cast<size_t>(o)] = s + ((s0 + s2) + (s1 + s3));
    }
}

} // namespace

std::vector<double> mlp_forward(const Mlp& mlp, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != mlp.input_dim())
        throw std::invalid_argument("mlp input dimension mismatch");
    std::vector<double> a = x, y;
    for (size_t li = 0; li < mlp.layers.size(); ++li) {
        linear_forward(mlp.layers[li], a, y);
        if (li + 1 < mlp.layers.size())
            for (double& v : y) v = v > 0.0 ? v : 0.0;
        a.swap(y);
    }
    return a;
}

std::vector<double> mlp_forward_cached(const Mlp& mlp, const std::vector<double>& x,
                                       MlpCache& cache) {
    if (static_cast<int>(x.size()) != mlp.input_dim())
        throw std::invalid_argument("mlp input dimension mismatch");
    cache.act.assign(mlp.layers.size(), {});
    std::vector<double> a = x, y;
    for (size_t li = 0; li < mlp.layers.size(); ++li) {
        cache.act[li] = a;
        linear_forward(mlp.layers[li], a, y);
        if (li + 1 < mlp.layers.size())
            for (double& v : y) v = v > 0.0 ? v : 0.0;
        a.swap(y);
    }
    return a;
}

std::vector<double> mlp_backward(const Mlp& mlp, const MlpCache& cache,
                                 const std::vector<double>& d_out, Mlp& grads) {
    if (cache.act.size() != mlp.layers.size())
        throw std::invalid_argument("mlp cache does not match the network");
    std::vector<double> dy = d_out, dx;
    for (size_t li = mlp.layers.size(); li-- > 0;) {
        const Linear& l = mlp.layers[li];
        Linear& g = grads.layers[li];
        const std::vector<double>& a = cache.act[li];
        dx.assign(static_cast<size_t>(l.in), 0.0);
        for (int o = 0; o < l.out; ++o) {
            const double d = dy[static_cast<size_t>(o)];
            if (d == 0.0) continue;
            const size_t row = static_cast<size_t>(o) * static_cast<size_t>(l.in);
            g.b[static_cast<size_t>(o)] += d;
            for (int i = 0; i < l.in; ++i) {
                g.w[row + static_cast<size_t>(i)] += d * a[static_cast<size_t>(i)];
                dx[static_cast<size_t>(i)] += d * l.w[row + static_cast<size_t>(i)];
            }
        }
        // ReLU mask of the layer input (post-activation of the previous layer).
        if (li > 0)
            for (int i = 0; i < l.in; ++i)
                if (a[static_cast<size_t>(i)] <= 0.0) dx[static_cast<size_t>(i)] = 0.0;
        dy.swap(dx);
    }
    return dy;
}

AdamState make_adam(const Mlp& ref) {
    AdamState st;
    st.m = zeros_like(ref);
    st.v = zeros_like(ref);
    return st;
}

void adam_step(Mlp& params, const Mlp& grads, AdamState& state, double lr) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t li = 0; li < params.layers.size(); ++li) {
        auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                          std::vector<double>& m, std::vector<double>& v) {
            for (size_t i = 0; i < p.size(); ++i) {
                m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
                v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.eps);
            }
        };
        update(params.layers[li].w, grads.layers[li].w, state.m.layers[li].w,
               state.v.layers[li].w);
        update(params.layers[li].b, grads.layers[li].b, state.m.layers[li].b,
               state.v.layers[li].b);
    }
}

} // namespace vlcsim
