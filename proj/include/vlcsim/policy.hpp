#pragma once

#include <cstdint>
#include <vector>

#include "vlcsim/config.hpp"
#include "vlcsim/env.hpp"
#include "vlcsim/nn.hpp"
#include "vlcsim/rng.hpp"

namespace vlcsim {

// Raw actor-head outputs per agent block, length 4*k_max + 2:
//   [0 .. k)        selection logits
//   [k .. 2k+1)     Gaussian mean pre-activations (k slot weights + utilization)
//   [2k+1 .. 3k+2)  Gaussian std pre-activations
//   [3k+2 .. 4k+2)  trigger logits
inline int actor_raw_dim(int k_max) { return 4 * k_max + 2; }

constexpr double kSigmaFloor = 1e-4;

// Per-slot factored action distribution. Invalid (empty) candidate slots are
// excluded from sampling, log-probability, and entropy; their probabilities
// are reported as 0. The utilization Gaussian (index k_max of mu/sigma) is
// always live. Means are tanh-scaled to [0, 1]; stds are softplus with a
// floor at kSigmaFloor.
struct ActionDistribution {
    int k_max = 0;
    SelectionHead head = SelectionHead::softmax_bernoulli;
    std::vector<std::uint8_t> valid;  // k_max slot flags
    std::vector<double> sel_p;        // k_max Bernoulli probabilities
    std::vector<double> mu;           // k_max + 1
    std::vector<double> sigma;        // k_max + 1
    std::vector<double> trig_p;       // k_max
};

// Builds the distribution from one raw head block. With the softmax head the
// selection probabilities are the masked softmax of the logits (uniform over
// valid slots at zero logits); with the sigmoid head each slot is independent.
ActionDistribution make_distribution(const double* raw, int k_max, SelectionHead head,
                                     const std::vector<std::uint8_t>& valid);

struct SampledAction {
    std::vector<double> action;  // environment format, length 3*k_max + 1
    double logprob = 0.0;
    double entropy = 0.0;
};

// Selection/trigger slots sample Bernoulli bits; power weights and
// utilization sample Gaussians around the transformed means (density taken in
// that space, no squash correction). The action vector feeds decode_action
// unchanged and is sufficient to re-evaluate its log-probability later.
SampledAction sample_action(const ActionDistribution& dist, Rng& rng);

// Greedy execution: bits fire at probability > 0.5, Gaussians collapse to
// their means.
std::vector<double> greedy_action(const ActionDistribution& dist);

struct LogProbResult {
    double logprob = 0.0;
    double entropy = 0.0;
};

// Log-probability of an action under the distribution plus the distribution's
// analytic entropy (sum of Bernoulli and Gaussian component entropies).
LogProbResult logprob_entropy(const ActionDistribution& dist, const std::vector<double>& action);

// Accumulates d(dlp_coef * logprob + dent_coef * entropy)/d(raw outputs) into
// d_raw (length 4*k_max + 2). Hand-derived chain rules for masked softmax,
// sigmoid, tanh-scaled Gaussian mean, and softplus std.
void logprob_entropy_backward(const ActionDistribution& dist, const std::vector<double>& action,
                              double dlp_coef, double dent_coef, double* d_raw);

// Fixed affine scaling of the raw physical observation so every feature is
// O(1) for the networks: gains relative to the nadir line-of-sight gain,
// interference relative to the nadir gain at full power, rates relative to
// the high-priority requirement, handover timers relative to the episode
// length. Flags, dimming, and previous-action features pass through.
class ObsNormalizer {
public:
    ObsNormalizer() = default;
    explicit ObsNormalizer(const SimConfig& cfg);

    const ObsLayout& layout() const { return layout_; }
    std::vector<double> normalize(const std::vector<double>& obs) const;
    // Validity flags of the candidate slots, read from the raw observation.
    std::vector<std::uint8_t> valid_slots(const std::vector<double>& obs) const;

private:
    ObsLayout layout_;
    double gain_scale_ = 1.0;
    double ici_scale_ = 1.0;
    double rate_scale_ = 1.0;
    double time_scale_ = 1.0;
};

// Actor network: shared trunk MLP whose output is n_blocks consecutive raw
// head blocks (one per controlled agent; 1 for a decentralized actor, n_aps
// for the joint actor).
struct ActorNet {
    Mlp net;
    int k_max = 0;
    int n_blocks = 1;
    SelectionHead head = SelectionHead::softmax_bernoulli;
};

ActorNet make_actor(int input_dim, int k_max, int hidden, int n_blocks, SelectionHead head,
                    Rng& rng);

// Value network: input -> hidden -> hidden -> scalar.
Mlp make_critic(int input_dim, int hidden, Rng& rng);

} // namespace vlcsim
