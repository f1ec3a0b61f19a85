#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "vlcsim/config.hpp"

namespace vlcsim {

// Episode-level quantities entering the tuning score. r_sum_norm is the mean
// network sum rate divided by the configured maximum, clipped to [0, 1] by
// whoever builds the struct.
struct ScoreComponents {
    double qossr_hp = 0.0;
    double p_out = 0.0;
    double hor = 0.0;
    double ppr = 0.0;
    double r_sum_norm = 0.0;
};

// f = w_qos * (1.0 * QoSSR - 0.5 * P_out) + w_stab * (-0.2 * HOR - 0.3 * PPR
//     + 0.1 * r_sum_norm); the inner coefficients are fixed.
double composite_score(const ScoreComponents& c, double w_qos, double w_stab);

// Gaussian-process regression on the unit square with a squared-exponential
// kernel, unit signal variance on the standardized targets, and per-dimension
// length-scales selected by marginal-likelihood grid search.
struct GpModel {
    std::vector<std::array<double, 2>> x;
    std::vector<double> y_raw;
    double y_mean = 0.0;
    double y_std = 1.0;
    double ls0 = 0.3;
    double ls1 = 0.3;
    double noise_var = 1e-8;       // jitter actually used (escalated if needed)
    std::vector<double> chol;      // lower Cholesky factor of K + noise I
    std::vector<double> alpha;     // (K + noise I)^{-1} y_standardized
};

// Requires at least two observations and inputs inside [0, 1]^2 (small
// numerical overshoot tolerated). Throws std::invalid_argument on bad input
// and std::runtime_error if the covariance stays ill-conditioned after
// jitter escalation.
GpModel gp_fit(const std::vector<std::array<double, 2>>& x, const std::vector<double>& y);

struct GpPrediction {
    double mean = 0.0;
    double var = 0.0;  // >= 0, in squared target units
};

GpPrediction gp_predict(const GpModel& gp, const std::array<double, 2>& q);

// Expected improvement of a Gaussian posterior over best_y (zero when the
// posterior is deterministic and not better).
double expected_improvement(double mean, double var, double best_y);

// Argmax of EI on the dense unit-square grid with the given resolution
// (first hit wins on ties, so the proposal is deterministic).
std::array<double, 2> acquisition_argmax(const GpModel& gp, double best_y, double resolution);

struct BoTrial {
    int index = 0;
    double w_qos = 0.0;
    double w_stab = 0.0;
    double score = 0.0;
    ScoreComponents components;
    bool failed = false;
};

struct BoResult {
    std::vector<BoTrial> trials;
    double best_w_qos = 0.0;
    double best_w_stab = 0.0;
    double best_score = 0.0;
};

// One full train-evaluate cycle at the given main weights.
using BoObjective = std::function<ScoreComponents(double w_qos, double w_stab)>;

// Weight search over [w_min, w_max]^2: n_init Halton points, then sequential
// GP fit -> EI argmax -> evaluate until n_trials (tuner bo), or a row-major
// ceil(sqrt(n))-per-side lattice truncated to n_trials (tuner grid). A trial
// whose objective throws is recorded as failed with the worst admissible
// score (P_out = 1, PPR = 1, and one handover per user per step). The search
// itself is deterministic; so is the result whenever the objective is.
BoResult run_bo(const BoConfig& cfg, const BoObjective& objective);

// Objective for tune-weights: overrides the reward main weights, trains
// bo.trial_algo for bo.trial_train_steps, then evaluates
// bo.trial_eval_episodes greedy episodes and averages the metrics. The same
// derived seed is reused for every trial so scores are comparable.
BoObjective make_training_objective(const SimConfig& base, std::uint64_t seed);

} // namespace vlcsim
