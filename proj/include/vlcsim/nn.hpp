#pragma once

#include <vector>

#include "vlcsim/rng.hpp"

namespace vlcsim {

// Fully-connected layer y = W x + b, W row-major [out x in]. The same struct
// holds parameters, gradients, and Adam moments (identical shapes).
struct Linear {
    int in = 0;
    int out = 0;
    std::vector<double> w;
    std::vector<double> b;
};

// Multilayer perceptron with ReLU on every hidden layer and a linear output
// layer. Heads that need nonlinear outputs apply their transforms downstream.
struct Mlp {
    std::vector<Linear> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    long n_params() const;
};

// Zero-filled network with the given layer sizes, e.g. {8, 16, 16, 4}.
Mlp make_mlp(const std::vector<int>& sizes);

// Same shapes as the reference, all entries zero (gradient/moment buffers).
Mlp zeros_like(const Mlp& ref);

// Uniform fan-in init: w ~ U[-1/sqrt(in), 1/sqrt(in)], b = 0. The output
// layer's weights are additionally scaled by final_layer_scale so policy
// heads start near-uniform/centered.
void init_mlp(Mlp& mlp, Rng& rng, double final_layer_scale = 1.0);

// Inference-only pass.
std::vector<double> mlp_forward(const Mlp& mlp, const std::vector<double>& x);

// Per-layer input activations cached by forward for the backward pass.
// act[0] is the network input; act[l] the post-ReLU input of layer l.
struct MlpCache {
    std::vector<std::vector<double>> act;
};

std::vector<double> mlp_forward_cached(const Mlp& mlp, const std::vector<double>& x,
                                       MlpCache& cache);

// Accumulates dLoss/dparams into `grads` (shapes from zeros_like) given
// dLoss/doutput for one sample; returns dLoss/dinput.
std::vector<double> mlp_backward(const Mlp& mlp, const MlpCache& cache,
                                 const std::vector<double>& d_out, Mlp& grads);

// Adam with bias correction; moments shaped like the network.
struct AdamState {
    Mlp m;
    Mlp v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam(const Mlp& ref);

// One update: params -= lr * m_hat / (sqrt(v_hat) + eps). Gradients are the
// caller's accumulated sums; scale them to means beforehand.
void adam_step(Mlp& params, const Mlp& grads, AdamState& state, double lr);

} // namespace vlcsim
