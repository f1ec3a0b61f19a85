#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vlcsim/config.hpp"
#include "vlcsim/env.hpp"
#include "vlcsim/metrics.hpp"
#include "vlcsim/nn.hpp"
#include "vlcsim/policy.hpp"
#include "vlcsim/rng.hpp"

namespace vlcsim {

struct GaeResult {
    std::vector<double> advantages;  // raw (unnormalized)
    std::vector<double> returns;     // advantages + values
};

// Recursive generalized advantage estimation over one time-ordered sequence.
// dones[t] = 1 cuts bootstrapping across the episode boundary after step t;
// bootstrap_value is the value of the state following the last step (ignored
// when dones.back() = 1). Advantages are returned raw so they can be checked
// against the brute-force discounted sum; normalize per update batch with
// normalize_advantages.
GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              const std::vector<std::uint8_t>& dones, double bootstrap_value,
              double discount, double lambda);

// In-place shift/scale to mean 0, std 1 (no-op scale when std is ~0).
void normalize_advantages(std::vector<double>& advantages);

// One policy-gradient sample set. For decentralized actors n_blocks = 1 and
// each row holds one agent's observation/action; for the joint actor
// n_blocks = n_aps and rows hold the concatenated global state and joint
// action. valid rows are n_blocks * k_max slot flags; action rows are
// n_blocks * (3 k_max + 1) environment-format actions.
struct ActorBatch {
    int k_max = 0;
    int n_blocks = 1;
    SelectionHead head = SelectionHead::softmax_bernoulli;
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<std::uint8_t>> valid;
    std::vector<std::vector<double>> actions;
    std::vector<double> old_logprobs;
    std::vector<double> advantages;  // already normalized
    int size() const { return static_cast<int>(inputs.size()); }
};

struct ActorUpdateStats {
    double loss = 0.0;          // policy_loss - entropy_coef * entropy
    double policy_loss = 0.0;   // -mean(min(ratio*A, clip(ratio)*A))
    double entropy = 0.0;       // mean joint entropy
    double clip_fraction = 0.0; // fraction of samples with |ratio - 1| > eps
    double approx_kl = 0.0;     // mean(old_logprob - new_logprob)
    bool nan_abort = false;     // loss went non-finite; no step was applied
};

// Clipped-surrogate loss over the given sample indices (forward only; used by
// the finite-difference validation and diagnostics).
double actor_loss(const ActorNet& actor, const ActorBatch& batch, const std::vector<int>& idx,
                  const PpoConfig& ppo);

// Loss plus parameter gradients accumulated into grads (grads is re-zeroed
// first). The clipped objective passes gradient through a sample only where
// the unclipped branch is active.
ActorUpdateStats actor_loss_and_grads(const ActorNet& actor, const ActorBatch& batch,
                                      const std::vector<int>& idx, const PpoConfig& ppo,
                                      Mlp& grads);

// Mean squared error of the value head against returns over idx.
double critic_loss(const Mlp& critic, const std::vector<std::vector<double>>& inputs,
                   const std::vector<double>& targets, const std::vector<int>& idx);

double critic_loss_and_grads(const Mlp& critic, const std::vector<std::vector<double>>& inputs,
                             const std::vector<double>& targets, const std::vector<int>& idx,
                             Mlp& grads);

// Full PPO update: epochs_per_update passes of shuffled minibatches with Adam
// steps. Returns minibatch-averaged stats. A non-finite loss aborts the
// remainder of the update (nan_abort set, offending minibatch not applied).
ActorUpdateStats ppo_update_actor(ActorNet& actor, AdamState& adam, const ActorBatch& batch,
                                  const PpoConfig& ppo, Rng& rng);

struct CriticUpdateStats {
    double loss = 0.0;
    bool nan_abort = false;
};

CriticUpdateStats ppo_update_critic(Mlp& critic, AdamState& adam,
                                    const std::vector<std::vector<double>>& inputs,
                                    const std::vector<double>& targets, const PpoConfig& ppo,
                                    Rng& rng);

struct CurvePoint {
    std::int64_t env_steps = 0;
    double raw_reward = 0.0;         // mean completed-episode return in the last rollout
    double normalized_reward = 0.0;  // running min-max rescaling of raw_reward
};

struct UpdateDiagnostics {
    std::int64_t env_steps = 0;
    double actor_loss = 0.0;  // mean over actors
    double critic_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
};

struct TrainResult {
    std::vector<ActorNet> actors;  // one per AP (decentralized) or a single joint actor
    Mlp critic;
    std::vector<CurvePoint> curve;
    std::vector<UpdateDiagnostics> diagnostics;
    std::int64_t total_env_steps = 0;
    bool diverged = false;          // NaN reward/loss guard tripped; params are at abort
    std::string divergence_note;
};

using ProgressFn = std::function<void(const UpdateDiagnostics&, const CurvePoint&)>;

// Decentralized actors (one per AP, acting on local observations) with one
// centralized critic evaluated on the concatenated normalized observations
// plus a one-hot agent index, trained on per-agent rewards. Consumes exactly
// cfg.ppo.total_steps environment steps; the final update may run on a
// partial rollout so the budget is met exactly.
TrainResult train_mappo(const SimConfig& cfg, std::uint64_t seed,
                        const ProgressFn& on_update = {});

// Single joint actor on the concatenated observations emitting all APs'
// actions, critic on the same global input, trained on the global (mean)
// reward.
TrainResult train_cenppo(const SimConfig& cfg, std::uint64_t seed,
                         const ProgressFn& on_update = {});

// Maps the current raw observations to one environment-format action per AP.
using JointPolicy = std::function<std::vector<std::vector<double>>(
    const VlcEnv& env, const std::vector<std::vector<double>>& observations)>;

// Greedy (no-exploration) policy from trained actors: either n_aps
// decentralized actors or a single joint actor with n_blocks = n_aps.
// Throws std::invalid_argument if the actor shapes match neither layout.
JointPolicy greedy_policy(std::vector<ActorNet> actors, ObsNormalizer norm);

struct EvalResult {
    std::vector<EpisodeMetrics> episodes;
};

// Runs n_episodes full episodes under the policy, each seeded from
// derive_seed(seed, episode); fills each episode's metrics from the trace and
// its mean_reward from the per-step global rewards. Throws
// std::invalid_argument when n_episodes < 1.
EvalResult evaluate_policy(const SimConfig& cfg, const JointPolicy& policy, int n_episodes,
                           std::uint64_t seed);

} // namespace vlcsim
