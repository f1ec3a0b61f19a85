#include "vlcsim/bo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vlcsim/ppo.hpp"

namespace vlcsim {

double composite_score(const ScoreComponents& c, double w_qos, double w_stab) {
  return w_qos * (1.0 * c.qossr_hp - 0.5 * c.p_out) +
         w_stab * (-0.2 * c.hor - 0.3 * c.ppr + 0.1 * c.r_sum_norm);
}

namespace {

double se_kernel(const std::array<double, 2>& a, const std::array<double, 2>& b, double ls0,
                 double ls1) {
  const double d0 = (a[0] - b[0]) / ls0;
  const double d1 = (a[1] - b[1]) / ls1;
  return std::exp(-0.5 * (d0 * d0 + d1 * d1));
}

// Lower Cholesky of the n x n matrix k (row-major); returns false when a
// pivot goes non-positive.
bool cholesky(std::vector<double>& k, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = k[static_cast<size_t>(i) * n + j];
      for (int m = 0; m < j; ++m) {
        s -= k[static_cast<size_t>(i) * n + m] * k[static_cast<size_t>(j) * n + m];
      }
      if (i == j) {
        if (s <= 0.0) return false;
        k[static_cast<size_t>(i) * n + j] = std::sqrt(s);
      } else {
        k[static_cast<size_t>(i) * n + j] = s / k[static_cast<size_t>(j) * n + j];
      }
    }
    for (int j = i + 1; j < n; ++j) k[static_cast<size_t>(i) * n + j] = 0.0;
  }
  return true;
}

// Solves L z = b in place.
void forward_solve(const std::vector<double>& l, int n, std::vector<double>& b) {
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<size_t>(i)];
    for (int j = 0; j < i; ++j) s -= l[static_cast<size_t>(i) * n + j] * b[static_cast<size_t>(j)];
    b[static_cast<size_t>(i)] = s / l[static_cast<size_t>(i) * n + i];
  }
}

// Solves L^T z = b in place.
void backward_solve(const std::vector<double>& l, int n, std::vector<double>& b) {
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= l[static_cast<size_t>(j) * n + i] * b[static_cast<size_t>(j)];
    b[static_cast<size_t>(i)] = s / l[static_cast<size_t>(i) * n + i];
  }
}

struct FitAttempt {
  bool ok = false;
  double log_marginal = 0.0;
  double noise_var = 0.0;
  std::vector<double> chol;
  std::vector<double> alpha;
};

FitAttempt fit_with_lengthscales(const std::vector<std::array<double, 2>>& x,
                                 const std::vector<double>& ys, double ls0, double ls1) {
  const int n = static_cast<int>(x.size());
  FitAttempt at;
  for (double noise = 1e-8; noise <= 1e-2 + 1e-15; noise *= 10.0) {
    std::vector<double> k(static_cast<size_t>(n) * static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        k[static_cast<size_t>(i) * n + j] =
            se_kernel(x[static_cast<size_t>(i)], x[static_cast<size_t>(j)], ls0, ls1) +
            (i == j ? noise : 0.0);
      }
    }
    if (!cholesky(k, n)) continue;
    std::vector<double> alpha = ys;
    forward_solve(k, n, alpha);
    double log_det_half = 0.0;
    for (int i = 0; i < n; ++i) log_det_half += std::log(k[static_cast<size_t>(i) * n + i]);
    double quad = 0.0;
    for (int i = 0; i < n; ++i) quad += alpha[static_cast<size_t>(i)] * alpha[static_cast<size_t>(i)];
    backward_solve(k, n, alpha);
    at.ok = true;
    at.noise_var = noise;
    at.chol = std::move(k);
    at.alpha = std::move(alpha);
    at.log_marginal = -0.5 * quad - log_det_half -
                      0.5 * static_cast<double>(n) * std::log(6.283185307179586476925287);
    return at;
  }
  return at;
}

constexpr double kLengthScaleGrid[] = {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0};

double halton(int index, int base) {
  double f = 1.0;
  double r = 0.0;
  int i = index;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

} // namespace

GpModel gp_fit(const std::vector<std::array<double, 2>>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("gp_fit: x and y must be aligned");
  if (x.size() < 2) throw std::invalid_argument("gp_fit: needs at least two observations");
  for (const std::array<double, 2>& p : x) {
    if (p[0] < -1e-9 || p[0] > 1.0 + 1e-9 || p[1] < -1e-9 || p[1] > 1.0 + 1e-9) {
      throw std::invalid_argument("gp_fit: inputs must be scaled to the unit square");
    }
  }
  GpModel gp;
  gp.x = x;
  gp.y_raw = y;
  const int n = static_cast<int>(x.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double stdev = std::sqrt(var / static_cast<double>(n));
  gp.y_mean = mean;
  gp.y_std = stdev > 1e-12 ? stdev : 1.0;
  std::vector<double> ys(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) ys[static_cast<size_t>(i)] = (y[static_cast<size_t>(i)] - gp.y_mean) / gp.y_std;

  FitAttempt best;
  double best_ls0 = 0.0, best_ls1 = 0.0;
  for (double ls0 : kLengthScaleGrid) {
    for (double ls1 : kLengthScaleGrid) {
      const FitAttempt at = fit_with_lengthscales(x, ys, ls0, ls1);
      if (!at.ok) continue;
      if (!best.ok || at.log_marginal > best.log_marginal) {
        best = at;
        best_ls0 = ls0;
        best_ls1 = ls1;
      }
    }
  }
  if (!best.ok) {
    throw std::runtime_error("gp_fit: covariance ill-conditioned for every jitter level");
  }
  gp.ls0 = best_ls0;
  gp.ls1 = best_ls1;
  gp.noise_var = best.noise_var;
  gp.chol = std::move(best.chol);
  gp.alpha = std::move(best.alpha);
  return gp;
}

GpPrediction gp_predict(const GpModel& gp, const std::array<double, 2>& q) {
  const int n = static_cast<int>(gp.x.size());
  std::vector<double> ks(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    ks[static_cast<size_t>(i)] = se_kernel(q, gp.x[static_cast<size_t>(i)], gp.ls0, gp.ls1);
  }
  double mean_s = 0.0;
  for (int i = 0; i < n; ++i) mean_s += ks[static_cast<size_t>(i)] * gp.alpha[static_cast<size_t>(i)];
  std::vector<double> v = ks;
  forward_solve(gp.chol, n, v);
  double reduction = 0.0;
  for (int i = 0; i < n; ++i) reduction += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
  GpPrediction p;
  p.mean = mean_s * gp.y_std + gp.y_mean;
  p.var = std::max(0.0, 1.0 - reduction) * gp.y_std * gp.y_std;
  return p;
}

double expected_improvement(double mean, double var, double best_y) {
  if (var <= 0.0) return std::max(0.0, mean - best_y);
  const double sd = std::sqrt(var);
  const double z = (mean - best_y) / sd;
  const double pdf = std::exp(-0.5 * z * z) / 2.5066282746310005024;
  const double cdf = 0.5 * std::erfc(-z / 1.4142135623730950488);
  return std::max(0.0, (mean - best_y) * cdf + sd * pdf);
}

std::array<double, 2> acquisition_argmax(const GpModel& gp, double best_y, double resolution) {
  if (resolution <= 0.0 || resolution > 1.0) {
    throw std::invalid_argument("acquisition_argmax: resolution must lie in (0, 1]");
  }
  const int steps = static_cast<int>(std::lround(1.0 / resolution));
  std::array<double, 2> best_q{0.0, 0.0};
  double best_ei = -1.0;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      const std::array<double, 2> q{std::min(1.0, i * resolution),
                                    std::min(1.0, j * resolution)};
      const GpPrediction p = gp_predict(gp, q);
      const double ei = expected_improvement(p.mean, p.var, best_y);
      if (ei > best_ei) {
        best_ei = ei;
        best_q = q;
      }
    }
  }
  return best_q;
}

BoResult run_bo(const BoConfig& cfg, const BoObjective& objective) {
  if (!objective) throw std::invalid_argument("run_bo: empty objective");
  if (cfg.n_init < 2) throw std::invalid_argument("run_bo: n_init must be at least 2");
  if (cfg.n_trials < cfg.n_init) {
    throw std::invalid_argument("run_bo: n_trials must be at least n_init");
  }
  if (!(cfg.w_min < cfg.w_max)) {
    throw std::invalid_argument("run_bo: weight bounds must be ordered");
  }
  const double span = cfg.w_max - cfg.w_min;
  const auto to_weight = [&](double u) { return cfg.w_min + span * u; };
  const auto to_unit = [&](double w) { return (w - cfg.w_min) / span; };

  // Scaled-unit proposals for every trial index.
  std::vector<std::array<double, 2>> proposals;
  if (cfg.tuner == TunerKind::grid) {
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.n_trials))));
    for (int i = 0; i < side && static_cast<int>(proposals.size()) < cfg.n_trials; ++i) {
      for (int j = 0; j < side && static_cast<int>(proposals.size()) < cfg.n_trials; ++j) {
        proposals.push_back({side > 1 ? static_cast<double>(i) / (side - 1) : 0.5,
                             side > 1 ? static_cast<double>(j) / (side - 1) : 0.5});
      }
    }
  } else {
    for (int i = 0; i < cfg.n_init; ++i) {
      proposals.push_back({halton(i + 1, 2), halton(i + 1, 3)});
    }
  }

  BoResult out;
  std::vector<std::array<double, 2>> seen;
  std::vector<double> scores;
  const int total = cfg.tuner == TunerKind::grid ? static_cast<int>(proposals.size())
                                                 : cfg.n_trials;
  for (int t = 0; t < total; ++t) {
    std::array<double, 2> u{};
    if (t < static_cast<int>(proposals.size())) {
      u = proposals[static_cast<size_t>(t)];
    } else {
      const GpModel gp = gp_fit(seen, scores);
      const double best_y = *std::max_element(scores.begin(), scores.end());
      u = acquisition_argmax(gp, best_y, 0.05);
    }
    BoTrial trial;
    trial.index = t;
    trial.w_qos = to_weight(u[0]);
    trial.w_stab = to_weight(u[1]);
    try {
      trial.components = objective(trial.w_qos, trial.w_stab);
      trial.score = composite_score(trial.components, trial.w_qos, trial.w_stab);
    } catch (const std::exception&) {
      // Worst admissible outcome: total outage, every handover a ping-pong,
      // one handover per user per step.
      trial.failed = true;
      trial.components = ScoreComponents{0.0, 1.0, 1.0, 1.0, 0.0};
      trial.score = composite_score(trial.components, trial.w_qos, trial.w_stab);
    }
    out.trials.push_back(trial);
    seen.push_back(u);
    scores.push_back(trial.score);
  }

  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  out.best_w_qos = out.trials[best].w_qos;
  out.best_w_stab = out.trials[best].w_stab;
  out.best_score = out.trials[best].score;
  (void)to_unit;
  return out;
}

BoObjective make_training_objective(const SimConfig& base, std::uint64_t seed) {
  return [base, seed](double w_qos, double w_stab) {
    SimConfig cfg = base;
    cfg.reward.w_qos = w_qos;
    cfg.reward.w_stab = w_stab;
    cfg.ppo.total_steps = cfg.bo.trial_train_steps;
    if (cfg.bo.trial_algo != "mappo" && cfg.bo.trial_algo != "cenppo") {
      throw std::invalid_argument("tune-weights: trial_algo must be mappo or cenppo");
    }
    const TrainResult tr = cfg.bo.trial_algo == "mappo" ? train_mappo(cfg, seed)
                                                        : train_cenppo(cfg, seed);
    if (tr.diverged) throw std::runtime_error("trial diverged: " + tr.divergence_note);
    const EvalResult ev = evaluate_policy(
        cfg, greedy_policy(tr.actors, ObsNormalizer(cfg)), cfg.bo.trial_eval_episodes,
        Rng::derive_seed(seed, 0x5eed));
    ScoreComponents c;
    double sum_rate = 0.0;
    for (const EpisodeMetrics& m : ev.episodes) {
      c.qossr_hp += m.qossr_hp;
      c.p_out += m.p_out_sp;
      c.hor += m.hor;
      c.ppr += m.ppr;
      sum_rate += m.sum_rate_bps;
    }
    const double n = static_cast<double>(ev.episodes.size());
    c.qossr_hp /= n;
    c.p_out /= n;
    c.hor /= n;
    c.ppr /= n;
    sum_rate /= n;
    const double rate_max = cfg.bo.rate_max_bps > 0.0
                                ? cfg.bo.rate_max_bps
                                : cfg.users.count * cfg.users.hp_rate_req_bps;
    c.r_sum_norm = rate_max > 0.0 ? std::clamp(sum_rate / rate_max, 0.0, 1.0) : 0.0;
    return c;
  };
}

} // namespace vlcsim
