#include "vlcsim/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

namespace vlcsim {

namespace {

void zero_mlp(Mlp& m) {
  for (Linear& l : m.layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  return idx;
}

// Per-sample pieces shared by the loss and gradient paths.
struct SampleEval {
  double logprob = 0.0;
  double entropy = 0.0;
  double objective = 0.0;  // min(ratio*A, clip(ratio)*A)
  double ratio = 1.0;
  bool unclipped_active = true;  // gradient flows through ratio*A
};

SampleEval evaluate_sample(const ActorBatch& batch, const std::vector<double>& out, int i,
                           const PpoConfig& ppo, std::vector<ActionDistribution>* dists) {
  const int k = batch.k_max;
  const int raw_dim = actor_raw_dim(k);
  const int adim = action_dim(k);
  SampleEval ev;
  for (int b = 0; b < batch.n_blocks; ++b) {
    const std::vector<std::uint8_t>& vrow = batch.valid[static_cast<size_t>(i)];
    std::vector<std::uint8_t> valid(vrow.begin() + static_cast<std::ptrdiff_t>(b) * k,
                                    vrow.begin() + static_cast<std::ptrdiff_t>(b + 1) * k);
    ActionDistribution dist = make_distribution(
        out.data() + static_cast<std::ptrdiff_t>(b) * raw_dim, k, batch.head, valid);
    const std::vector<double>& arow = batch.actions[static_cast<size_t>(i)];
    std::vector<double> action(arow.begin() + static_cast<std::ptrdiff_t>(b) * adim,
                               arow.begin() + static_cast<std::ptrdiff_t>(b + 1) * adim);
    const LogProbResult lr = logprob_entropy(dist, action);
    ev.logprob += lr.logprob;
    ev.entropy += lr.entropy;
    if (dists != nullptr) dists->push_back(std::move(dist));
  }
  const double adv = batch.advantages[static_cast<size_t>(i)];
  ev.ratio = std::exp(ev.logprob - batch.old_logprobs[static_cast<size_t>(i)]);
  const double surr1 = ev.ratio * adv;
  const double surr2 =
      std::clamp(ev.ratio, 1.0 - ppo.clip_epsilon, 1.0 + ppo.clip_epsilon) * adv;
  ev.objective = std::min(surr1, surr2);
  // min() follows the unclipped branch whenever it is not strictly larger;
  // inside the clip band both branches coincide, outside the clipped branch
  // is constant in the parameters.
  ev.unclipped_active = surr1 <= surr2;
  return ev;
}

void check_batch(const ActorNet& actor, const ActorBatch& batch, const std::vector<int>& idx) {
  if (batch.k_max != actor.k_max || batch.n_blocks != actor.n_blocks ||
      batch.head != actor.head) {
    throw std::invalid_argument("actor batch: head layout does not match the actor");
  }
  if (idx.empty()) throw std::invalid_argument("actor batch: empty index set");
  const size_t n = batch.inputs.size();
  if (batch.valid.size() != n || batch.actions.size() != n ||
      batch.old_logprobs.size() != n || batch.advantages.size() != n) {
    throw std::invalid_argument("actor batch: misaligned field lengths");
  }
}

} // namespace

GaeResult gae(const std::vector<double>& rewards, const std::vector<double>& values,
              const std::vector<std::uint8_t>& dones, double bootstrap_value,
              double discount, double lambda) {
  const size_t t_len = rewards.size();
  if (values.size() != t_len || dones.size() != t_len) {
    throw std::invalid_argument("gae: rewards, values, dones must be aligned");
  }
  if (discount < 0.0 || discount >= 1.0) {
    throw std::invalid_argument("gae: discount must lie in [0, 1)");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("gae: lambda must lie in [0, 1]");
  }
  GaeResult g;
  g.advantages.resize(t_len);
  g.returns.resize(t_len);
  double adv_next = 0.0;
  double value_next = bootstrap_value;
  for (size_t t = t_len; t-- > 0;) {
    const double nonterminal = dones[t] != 0 ? 0.0 : 1.0;
    const double delta = rewards[t] + discount * value_next * nonterminal - values[t];
    const double adv = delta + discount * lambda * nonterminal * adv_next;
    g.advantages[t] = adv;
    g.returns[t] = adv + values[t];
    adv_next = adv;
    value_next = values[t];
  }
  return g;
}

void normalize_advantages(std::vector<double>& advantages) {
  const size_t n = advantages.size();
  if (n == 0) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double stdev = std::sqrt(var / static_cast<double>(n));
  const double scale = stdev > 1e-12 ? 1.0 / stdev : 1.0;
  for (double& a : advantages) a = (a - mean) * scale;
}

double actor_loss(const ActorNet& actor, const ActorBatch& batch, const std::vector<int>& idx,
                  const PpoConfig& ppo) {
  check_batch(actor, batch, idx);
  double sum_obj = 0.0;
  double sum_ent = 0.0;
  for (int i : idx) {
    const std::vector<double> out =
        mlp_forward(actor.net, batch.inputs[static_cast<size_t>(i)]);
    const SampleEval ev = evaluate_sample(batch, out, i, ppo, nullptr);
    sum_obj += ev.objective;
    sum_ent += ev.entropy;
  }
  const double m = static_cast<double>(idx.size());
  return -sum_obj / m - ppo.entropy_coef * (sum_ent / m);
}

ActorUpdateStats actor_loss_and_grads(const ActorNet& actor, const ActorBatch& batch,
                                      const std::vector<int>& idx, const PpoConfig& ppo,
                                      Mlp& grads) {
  check_batch(actor, batch, idx);
  zero_mlp(grads);
  const int k = batch.k_max;
  const int raw_dim = actor_raw_dim(k);
  const int adim = action_dim(k);
  const double m = static_cast<double>(idx.size());
  const double dent = -ppo.entropy_coef / m;

  ActorUpdateStats st;
  double sum_obj = 0.0, sum_ent = 0.0, sum_kl = 0.0;
  int clipped = 0;
  MlpCache cache;
  std::vector<double> d_raw(static_cast<size_t>(actor.net.output_dim()));
  std::vector<ActionDistribution> dists;
  for (int i : idx) {
    const std::vector<double> out =
        mlp_forward_cached(actor.net, batch.inputs[static_cast<size_t>(i)], cache);
    dists.clear();
    const SampleEval ev = evaluate_sample(batch, out, i, ppo, &dists);
    sum_obj += ev.objective;
    sum_ent += ev.entropy;
    sum_kl += batch.old_logprobs[static_cast<size_t>(i)] - ev.logprob;
    if (std::abs(ev.ratio - 1.0) > ppo.clip_epsilon) ++clipped;

    const double adv = batch.advantages[static_cast<size_t>(i)];
    const double dlp = ev.unclipped_active ? -(ev.ratio * adv) / m : 0.0;
    std::fill(d_raw.begin(), d_raw.end(), 0.0);
    const std::vector<double>& arow = batch.actions[static_cast<size_t>(i)];
    for (int b = 0; b < batch.n_blocks; ++b) {
      std::vector<double> action(arow.begin() + static_cast<std::ptrdiff_t>(b) * adim,
                                 arow.begin() + static_cast<std::ptrdiff_t>(b + 1) * adim);
      logprob_entropy_backward(dists[static_cast<size_t>(b)], action, dlp, dent,
                               d_raw.data() + static_cast<std::ptrdiff_t>(b) * raw_dim);
    }
    mlp_backward(actor.net, cache, d_raw, grads);
  }
  st.policy_loss = -sum_obj / m;
  st.entropy = sum_ent / m;
  st.loss = st.policy_loss - ppo.entropy_coef * st.entropy;
  st.clip_fraction = static_cast<double>(clipped) / m;
  st.approx_kl = sum_kl / m;
  st.nan_abort = !std::isfinite(st.loss);
  return st;
}

double critic_loss(const Mlp& critic, const std::vector<std::vector<double>>& inputs,
                   const std::vector<double>& targets, const std::vector<int>& idx) {
  if (idx.empty()) throw std::invalid_argument("critic batch: empty index set");
  if (inputs.size() != targets.size()) {
    throw std::invalid_argument("critic batch: misaligned inputs/targets");
  }
  double sum = 0.0;
  for (int i : idx) {
    const double v = mlp_forward(critic, inputs[static_cast<size_t>(i)])[0];
    const double e = v - targets[static_cast<size_t>(i)];
    sum += e * e;
  }
  return sum / static_cast<double>(idx.size());
}

double critic_loss_and_grads(const Mlp& critic, const std::vector<std::vector<double>>& inputs,
                             const std::vector<double>& targets, const std::vector<int>& idx,
                             Mlp& grads) {
  if (idx.empty()) throw std::invalid_argument("critic batch: empty index set");
  if (inputs.size() != targets.size()) {
    throw std::invalid_argument("critic batch: misaligned inputs/targets");
  }
  zero_mlp(grads);
  const double m = static_cast<double>(idx.size());
  double sum = 0.0;
  MlpCache cache;
  std::vector<double> d_out(1);
  for (int i : idx) {
    const double v = mlp_forward_cached(critic, inputs[static_cast<size_t>(i)], cache)[0];
    const double e = v - targets[static_cast<size_t>(i)];
    sum += e * e;
    d_out[0] = 2.0 * e / m;
    mlp_backward(critic, cache, d_out, grads);
  }
  return sum / m;
}

ActorUpdateStats ppo_update_actor(ActorNet& actor, AdamState& adam, const ActorBatch& batch,
                                  const PpoConfig& ppo, Rng& rng) {
  const int n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_update_actor: empty batch");
  const int mb = std::max(1, std::min(ppo.minibatch_size, n));
  Mlp grads = zeros_like(actor.net);
  ActorUpdateStats agg;
  int n_minibatches = 0;
  for (int epoch = 0; epoch < ppo.epochs_per_update; ++epoch) {
    const std::vector<int> order = shuffled_indices(n, rng);
    for (int start = 0; start < n; start += mb) {
      const int stop = std::min(start + mb, n);
      const std::vector<int> sub(order.begin() + start, order.begin() + stop);
      const ActorUpdateStats st = actor_loss_and_grads(actor, batch, sub, ppo, grads);
      if (st.nan_abort) {
        agg.nan_abort = true;
        return agg;
      }
      adam_step(actor.net, grads, adam, ppo.actor_lr);
      agg.loss += st.loss;
      agg.policy_loss += st.policy_loss;
      agg.entropy += st.entropy;
      agg.clip_fraction += st.clip_fraction;
      agg.approx_kl += st.approx_kl;
      ++n_minibatches;
    }
  }
  const double d = static_cast<double>(n_minibatches);
  agg.loss /= d;
  agg.policy_loss /= d;
  agg.entropy /= d;
  agg.clip_fraction /= d;
  agg.approx_kl /= d;
  return agg;
}

CriticUpdateStats ppo_update_critic(Mlp& critic, AdamState& adam,
                                    const std::vector<std::vector<double>>& inputs,
                                    const std::vector<double>& targets, const PpoConfig& ppo,
                                    Rng& rng) {
  const int n = static_cast<int>(inputs.size());
  if (n == 0) throw std::invalid_argument("ppo_update_critic: empty batch");
  const int mb = std::max(1, std::min(ppo.minibatch_size, n));
  Mlp grads = zeros_like(critic);
  CriticUpdateStats agg;
  int n_minibatches = 0;
  for (int epoch = 0; epoch < ppo.epochs_per_update; ++epoch) {
    const std::vector<int> order = shuffled_indices(n, rng);
    for (int start = 0; start < n; start += mb) {
      const int stop = std::min(start + mb, n);
      const std::vector<int> sub(order.begin() + start, order.begin() + stop);
      const double loss = critic_loss_and_grads(critic, inputs, targets, sub, grads);
      if (!std::isfinite(loss)) {
        agg.nan_abort = true;
        return agg;
      }
      adam_step(critic, grads, adam, ppo.critic_lr);
      agg.loss += loss;
      ++n_minibatches;
    }
  }
  agg.loss /= static_cast<double>(n_minibatches);
  return agg;
}

namespace {

// One collected rollout; all observation content is already normalized.
struct Rollout {
  std::vector<std::vector<double>> concat;                    // [T][n_aps*obs_dim]
  std::vector<std::vector<std::vector<std::uint8_t>>> masks;  // [T][n_aps][k_max]
  std::vector<std::vector<std::vector<double>>> actions;      // [T][n_aps][act_dim]
  std::vector<std::vector<double>> logprobs;                  // [T][entries]
  std::vector<std::vector<double>> rewards;                   // [T][n_aps]
  std::vector<double> global_rewards;                         // [T]
  std::vector<std::uint8_t> dones;                            // [T]
  std::vector<double> completed_returns;
  std::vector<double> bootstrap_concat;
};

struct EpisodeCursor {
  std::uint64_t seed = 0;
  std::int64_t episode = 0;
  double episode_return = 0.0;
  std::vector<std::vector<double>> obs;  // raw observations of the current state

  void start(VlcEnv& env) {
    obs = env.reset(Rng::derive_seed(seed, static_cast<std::uint64_t>(1 + episode)))
              .observations;
  }
};

// Draws one joint action for the current (normalized) observations; fills
// env-format actions and the stored log-probability entries.
using SampleFn = std::function<void(const std::vector<std::vector<double>>& norm_obs,
                                    const std::vector<std::vector<std::uint8_t>>& masks,
                                    const std::vector<double>& concat,
                                    std::vector<std::vector<double>>& actions,
                                    std::vector<double>& logprobs)>;

Rollout collect_rollout(VlcEnv& env, const ObsNormalizer& norm, EpisodeCursor& cursor,
                        int t_len, const SampleFn& sample) {
  const int n = env.n_agents();
  const int obs_d = env.obs_dim();
  Rollout ro;
  ro.concat.reserve(static_cast<size_t>(t_len));
  ro.masks.reserve(static_cast<size_t>(t_len));
  ro.actions.reserve(static_cast<size_t>(t_len));
  ro.logprobs.reserve(static_cast<size_t>(t_len));
  ro.rewards.reserve(static_cast<size_t>(t_len));
  ro.global_rewards.reserve(static_cast<size_t>(t_len));
  ro.dones.reserve(static_cast<size_t>(t_len));

  std::vector<std::vector<double>> norm_obs(static_cast<size_t>(n));
  for (int t = 0; t < t_len; ++t) {
    std::vector<std::vector<std::uint8_t>> masks(static_cast<size_t>(n));
    std::vector<double> concat(static_cast<size_t>(n) * static_cast<size_t>(obs_d));
    for (int a = 0; a < n; ++a) {
      norm_obs[static_cast<size_t>(a)] = norm.normalize(cursor.obs[static_cast<size_t>(a)]);
      masks[static_cast<size_t>(a)] = norm.valid_slots(cursor.obs[static_cast<size_t>(a)]);
      std::copy(norm_obs[static_cast<size_t>(a)].begin(), norm_obs[static_cast<size_t>(a)].end(),
                concat.begin() + static_cast<std::ptrdiff_t>(a) * obs_d);
    }
    std::vector<std::vector<double>> actions;
    std::vector<double> logprobs;
    sample(norm_obs, masks, concat, actions, logprobs);

    const StepResult res = env.step(actions);
    ro.concat.push_back(std::move(concat));
    ro.masks.push_back(std::move(masks));
    ro.actions.push_back(std::move(actions));
    ro.logprobs.push_back(std::move(logprobs));
    ro.rewards.push_back(res.rewards);
    ro.global_rewards.push_back(res.global_reward);
    ro.dones.push_back(res.done ? 1 : 0);

    cursor.episode_return += res.global_reward;
    if (res.done) {
      ro.completed_returns.push_back(cursor.episode_return);
      cursor.episode_return = 0.0;
      ++cursor.episode;
      cursor.start(env);
    } else {
      cursor.obs = res.observations;
    }
  }
  ro.bootstrap_concat.resize(static_cast<size_t>(n) * static_cast<size_t>(obs_d));
  for (int a = 0; a < n; ++a) {
    const std::vector<double> nx = norm.normalize(cursor.obs[static_cast<size_t>(a)]);
    std::copy(nx.begin(), nx.end(),
              ro.bootstrap_concat.begin() + static_cast<std::ptrdiff_t>(a) * obs_d);
  }
  return ro;
}

// Running min-max normalization for the learning curve (0.5 until the range
// opens up).
struct CurveScaler {
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;

  double push(double raw) {
    if (!any) {
      lo = hi = raw;
      any = true;
    } else {
      lo = std::min(lo, raw);
      hi = std::max(hi, raw);
    }
    return hi > lo ? (raw - lo) / (hi - lo) : 0.5;
  }
};

bool rewards_finite(const Rollout& ro) {
  for (double r : ro.global_rewards) {
    if (!std::isfinite(r)) return false;
  }
  for (const std::vector<double>& row : ro.rewards) {
    for (double r : row) {
      if (!std::isfinite(r)) return false;
    }
  }
  return true;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

} // namespace

TrainResult train_mappo(const SimConfig& cfg, std::uint64_t seed, const ProgressFn& on_update) {
  VlcEnv env(cfg);
  const ObsNormalizer norm(cfg);
  const int n = env.n_agents();
  const int k = cfg.noma.k_max;
  const int obs_d = env.obs_dim();
  const int global_d = n * obs_d;
  const PpoConfig& ppo = cfg.ppo;

  Rng master(Rng::derive_seed(seed, 0));
  TrainResult out;
  out.actors.reserve(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) {
    out.actors.push_back(
        make_actor(obs_d, k, ppo.hidden_units, 1, cfg.env.selection_head, master));
  }
  out.critic = make_critic(global_d + n, ppo.hidden_units, master);
  std::vector<AdamState> actor_adam;
  actor_adam.reserve(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) actor_adam.push_back(make_adam(out.actors[static_cast<size_t>(a)].net));
  AdamState critic_adam = make_adam(out.critic);

  EpisodeCursor cursor;
  cursor.seed = seed;
  cursor.start(env);
  CurveScaler scaler;
  double last_raw = 0.0;
  bool have_raw = false;

  const SampleFn sampler = [&](const std::vector<std::vector<double>>& norm_obs,
                               const std::vector<std::vector<std::uint8_t>>& masks,
                               const std::vector<double>& /*concat*/,
                               std::vector<std::vector<double>>& actions,
                               std::vector<double>& logprobs) {
    actions.resize(static_cast<size_t>(n));
    logprobs.resize(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
      const std::vector<double> raw =
          mlp_forward(out.actors[static_cast<size_t>(a)].net, norm_obs[static_cast<size_t>(a)]);
      const ActionDistribution dist = make_distribution(
          raw.data(), k, cfg.env.selection_head, masks[static_cast<size_t>(a)]);
      SampledAction s = sample_action(dist, master);
      actions[static_cast<size_t>(a)] = std::move(s.action);
      logprobs[static_cast<size_t>(a)] = s.logprob;
    }
  };

  std::int64_t consumed = 0;
  while (consumed < ppo.total_steps && !out.diverged) {
    const int t_len =
        static_cast<int>(std::min<std::int64_t>(ppo.rollout_steps, ppo.total_steps - consumed));
    const Rollout ro = collect_rollout(env, norm, cursor, t_len, sampler);
    consumed += t_len;

    if (!rewards_finite(ro)) {
      out.diverged = true;
      out.divergence_note = "non-finite reward in rollout ending at step " +
                            std::to_string(consumed);
      break;
    }

    // Critic inputs/values for every (step, agent): global state + one-hot
    // agent index, sample index t * n + a.
    std::vector<std::vector<double>> critic_inputs;
    critic_inputs.reserve(static_cast<size_t>(t_len) * static_cast<size_t>(n));
    for (int t = 0; t < t_len; ++t) {
      for (int a = 0; a < n; ++a) {
        std::vector<double> x(static_cast<size_t>(global_d + n), 0.0);
        std::copy(ro.concat[static_cast<size_t>(t)].begin(),
                  ro.concat[static_cast<size_t>(t)].end(), x.begin());
        x[static_cast<size_t>(global_d + a)] = 1.0;
        critic_inputs.push_back(std::move(x));
      }
    }
    std::vector<double> targets(critic_inputs.size(), 0.0);

    ActorUpdateStats agg;
    for (int a = 0; a < n && !out.diverged; ++a) {
      std::vector<double> rewards_a(static_cast<size_t>(t_len));
      std::vector<double> values_a(static_cast<size_t>(t_len));
      for (int t = 0; t < t_len; ++t) {
        rewards_a[static_cast<size_t>(t)] =
            ro.rewards[static_cast<size_t>(t)][static_cast<size_t>(a)];
        values_a[static_cast<size_t>(t)] = mlp_forward(
            out.critic, critic_inputs[static_cast<size_t>(t) * static_cast<size_t>(n) +
                                      static_cast<size_t>(a)])[0];
      }
      std::vector<double> boot(static_cast<size_t>(global_d + n), 0.0);
      std::copy(ro.bootstrap_concat.begin(), ro.bootstrap_concat.end(), boot.begin());
      boot[static_cast<size_t>(global_d + a)] = 1.0;
      const double bootstrap_v = mlp_forward(out.critic, boot)[0];

      GaeResult g = gae(rewards_a, values_a, ro.dones, bootstrap_v, ppo.discount,
                        ppo.gae_lambda);
      for (int t = 0; t < t_len; ++t) {
        targets[static_cast<size_t>(t) * static_cast<size_t>(n) + static_cast<size_t>(a)] =
            g.returns[static_cast<size_t>(t)];
      }
      normalize_advantages(g.advantages);

      ActorBatch batch;
      batch.k_max = k;
      batch.n_blocks = 1;
      batch.head = cfg.env.selection_head;
      batch.inputs.reserve(static_cast<size_t>(t_len));
      batch.valid.reserve(static_cast<size_t>(t_len));
      batch.actions.reserve(static_cast<size_t>(t_len));
      for (int t = 0; t < t_len; ++t) {
        const std::vector<double>& c = ro.concat[static_cast<size_t>(t)];
        batch.inputs.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(a) * obs_d,
                                  c.begin() + static_cast<std::ptrdiff_t>(a + 1) * obs_d);
        batch.valid.push_back(ro.masks[static_cast<size_t>(t)][static_cast<size_t>(a)]);
        batch.actions.push_back(ro.actions[static_cast<size_t>(t)][static_cast<size_t>(a)]);
        batch.old_logprobs.push_back(
            ro.logprobs[static_cast<size_t>(t)][static_cast<size_t>(a)]);
      }
      batch.advantages = std::move(g.advantages);

      const ActorUpdateStats st =
          ppo_update_actor(out.actors[static_cast<size_t>(a)], actor_adam[static_cast<size_t>(a)],
                           batch, ppo, master);
      if (st.nan_abort) {
        out.diverged = true;
        out.divergence_note = "non-finite actor loss (agent " + std::to_string(a) +
                              ") at step " + std::to_string(consumed);
        break;
      }
      agg.loss += st.loss / n;
      agg.policy_loss += st.policy_loss / n;
      agg.entropy += st.entropy / n;
      agg.clip_fraction += st.clip_fraction / n;
      agg.approx_kl += st.approx_kl / n;
    }
    if (out.diverged) break;

    const CriticUpdateStats cst =
        ppo_update_critic(out.critic, critic_adam, critic_inputs, targets, ppo, master);
    if (cst.nan_abort) {
      out.diverged = true;
      out.divergence_note = "non-finite critic loss at step " + std::to_string(consumed);
      break;
    }

    double raw = have_raw ? last_raw : cursor.episode_return;
    if (!ro.completed_returns.empty()) raw = mean_of(ro.completed_returns);
    last_raw = raw;
    have_raw = true;
    CurvePoint pt{consumed, raw, scaler.push(raw)};
    UpdateDiagnostics diag{consumed, agg.loss,          cst.loss,
                           agg.entropy, agg.clip_fraction, agg.approx_kl};
    out.curve.push_back(pt);
    out.diagnostics.push_back(diag);
    if (on_update) on_update(diag, pt);
  }
  out.total_env_steps = consumed;
  return out;
}

TrainResult train_cenppo(const SimConfig& cfg, std::uint64_t seed, const ProgressFn& on_update) {
  VlcEnv env(cfg);
  const ObsNormalizer norm(cfg);
  const int n = env.n_agents();
  const int k = cfg.noma.k_max;
  const int obs_d = env.obs_dim();
  const int global_d = n * obs_d;
  const PpoConfig& ppo = cfg.ppo;
  const int raw_dim = actor_raw_dim(k);
  const int adim = action_dim(k);

  Rng master(Rng::derive_seed(seed, 0));
  TrainResult out;
  out.actors.push_back(
      make_actor(global_d, k, ppo.hidden_units, n, cfg.env.selection_head, master));
  out.critic = make_critic(global_d, ppo.hidden_units, master);
  ActorNet& actor = out.actors.front();
  AdamState actor_adam = make_adam(actor.net);
  AdamState critic_adam = make_adam(out.critic);

  EpisodeCursor cursor;
  cursor.seed = seed;
  cursor.start(env);
  CurveScaler scaler;
  double last_raw = 0.0;
  bool have_raw = false;

  const SampleFn sampler = [&](const std::vector<std::vector<double>>& /*norm_obs*/,
                               const std::vector<std::vector<std::uint8_t>>& masks,
                               const std::vector<double>& concat,
                               std::vector<std::vector<double>>& actions,
                               std::vector<double>& logprobs) {
    const std::vector<double> raw = mlp_forward(actor.net, concat);
    actions.resize(static_cast<size_t>(n));
    double joint_lp = 0.0;
    for (int b = 0; b < n; ++b) {
      const ActionDistribution dist =
          make_distribution(raw.data() + static_cast<std::ptrdiff_t>(b) * raw_dim, k,
                            cfg.env.selection_head, masks[static_cast<size_t>(b)]);
      SampledAction s = sample_action(dist, master);
      actions[static_cast<size_t>(b)] = std::move(s.action);
      joint_lp += s.logprob;
    }
    logprobs.assign(1, joint_lp);
  };

  std::int64_t consumed = 0;
  while (consumed < ppo.total_steps && !out.diverged) {
    const int t_len =
        static_cast<int>(std::min<std::int64_t>(ppo.rollout_steps, ppo.total_steps - consumed));
    const Rollout ro = collect_rollout(env, norm, cursor, t_len, sampler);
    consumed += t_len;

    if (!rewards_finite(ro)) {
      out.diverged = true;
      out.divergence_note = "non-finite reward in rollout ending at step " +
                            std::to_string(consumed);
      break;
    }

    std::vector<double> values(static_cast<size_t>(t_len));
    for (int t = 0; t < t_len; ++t) {
      values[static_cast<size_t>(t)] =
          mlp_forward(out.critic, ro.concat[static_cast<size_t>(t)])[0];
    }
    const double bootstrap_v = mlp_forward(out.critic, ro.bootstrap_concat)[0];
    GaeResult g =
        gae(ro.global_rewards, values, ro.dones, bootstrap_v, ppo.discount, ppo.gae_lambda);
    const std::vector<double> targets = g.returns;
    normalize_advantages(g.advantages);

    ActorBatch batch;
    batch.k_max = k;
    batch.n_blocks = n;
    batch.head = cfg.env.selection_head;
    batch.inputs = ro.concat;
    batch.old_logprobs.reserve(static_cast<size_t>(t_len));
    batch.valid.reserve(static_cast<size_t>(t_len));
    batch.actions.reserve(static_cast<size_t>(t_len));
    for (int t = 0; t < t_len; ++t) {
      std::vector<std::uint8_t> vrow(static_cast<size_t>(n) * static_cast<size_t>(k));
      std::vector<double> arow(static_cast<size_t>(n) * static_cast<size_t>(adim));
      for (int b = 0; b < n; ++b) {
        const std::vector<std::uint8_t>& mb = ro.masks[static_cast<size_t>(t)][static_cast<size_t>(b)];
        std::copy(mb.begin(), mb.end(), vrow.begin() + static_cast<std::ptrdiff_t>(b) * k);
        const std::vector<double>& ab = ro.actions[static_cast<size_t>(t)][static_cast<size_t>(b)];
        std::copy(ab.begin(), ab.end(), arow.begin() + static_cast<std::ptrdiff_t>(b) * adim);
      }
      batch.valid.push_back(std::move(vrow));
      batch.actions.push_back(std::move(arow));
      batch.old_logprobs.push_back(ro.logprobs[static_cast<size_t>(t)][0]);
    }
    batch.advantages = std::move(g.advantages);

    const ActorUpdateStats st = ppo_update_actor(actor, actor_adam, batch, ppo, master);
    if (st.nan_abort) {
      out.diverged = true;
      out.divergence_note = "non-finite actor loss at step " + std::to_string(consumed);
      break;
    }
    const CriticUpdateStats cst =
        ppo_update_critic(out.critic, critic_adam, ro.concat, targets, ppo, master);
    if (cst.nan_abort) {
      out.diverged = true;
      out.divergence_note = "non-finite critic loss at step " + std::to_string(consumed);
      break;
    }

    double raw = have_raw ? last_raw : cursor.episode_return;
    if (!ro.completed_returns.empty()) raw = mean_of(ro.completed_returns);
    last_raw = raw;
    have_raw = true;
    CurvePoint pt{consumed, raw, scaler.push(raw)};
    UpdateDiagnostics diag{consumed, st.loss,    cst.loss,
                           st.entropy, st.clip_fraction, st.approx_kl};
    out.curve.push_back(pt);
    out.diagnostics.push_back(diag);
    if (on_update) on_update(diag, pt);
  }
  out.total_env_steps = consumed;
  return out;
}

JointPolicy greedy_policy(std::vector<ActorNet> actors, ObsNormalizer norm) {
  if (actors.empty()) throw std::invalid_argument("greedy_policy: no actors");
  return [actors = std::move(actors), norm = std::move(norm)](
             const VlcEnv& env, const std::vector<std::vector<double>>& obs) {
    const int n = env.n_agents();
    const int k = env.config().noma.k_max;
    if (static_cast<int>(obs.size()) != n) {
      throw std::invalid_argument("greedy_policy: observation count != agent count");
    }
    std::vector<std::vector<double>> actions(static_cast<size_t>(n));
    if (static_cast<int>(actors.size()) == n && actors.front().n_blocks == 1) {
      for (int a = 0; a < n; ++a) {
        const ActorNet& actor = actors[static_cast<size_t>(a)];
        if (actor.k_max != k) throw std::invalid_argument("greedy_policy: k_max mismatch");
        const std::vector<double> x = norm.normalize(obs[static_cast<size_t>(a)]);
        if (static_cast<int>(x.size()) != actor.net.input_dim()) {
          throw std::invalid_argument("greedy_policy: actor input dim mismatch");
        }
        const std::vector<double> raw = mlp_forward(actor.net, x);
        const ActionDistribution dist = make_distribution(
            raw.data(), k, actor.head, norm.valid_slots(obs[static_cast<size_t>(a)]));
        actions[static_cast<size_t>(a)] = greedy_action(dist);
      }
      return actions;
    }
    if (actors.size() == 1 && actors.front().n_blocks == n) {
      const ActorNet& actor = actors.front();
      if (actor.k_max != k) throw std::invalid_argument("greedy_policy: k_max mismatch");
      std::vector<double> concat;
      concat.reserve(static_cast<size_t>(n) * norm.layout().dim());
      std::vector<std::vector<std::uint8_t>> masks(static_cast<size_t>(n));
      for (int a = 0; a < n; ++a) {
        const std::vector<double> x = norm.normalize(obs[static_cast<size_t>(a)]);
        concat.insert(concat.end(), x.begin(), x.end());
        masks[static_cast<size_t>(a)] = norm.valid_slots(obs[static_cast<size_t>(a)]);
      }
      if (static_cast<int>(concat.size()) != actor.net.input_dim()) {
        throw std::invalid_argument("greedy_policy: joint actor input dim mismatch");
      }
      const std::vector<double> raw = mlp_forward(actor.net, concat);
      const int raw_dim = actor_raw_dim(k);
      for (int b = 0; b < n; ++b) {
        const ActionDistribution dist =
            make_distribution(raw.data() + static_cast<std::ptrdiff_t>(b) * raw_dim, k,
                              actor.head, masks[static_cast<size_t>(b)]);
        actions[static_cast<size_t>(b)] = greedy_action(dist);
      }
      return actions;
    }
    throw std::invalid_argument(
        "greedy_policy: actors must be one per agent or a single joint actor");
  };
}

EvalResult evaluate_policy(const SimConfig& cfg, const JointPolicy& policy, int n_episodes,
                           std::uint64_t seed) {
  if (n_episodes < 1) {
    throw std::invalid_argument("evaluate_policy: n_episodes must be at least 1");
  }
  if (!policy) throw std::invalid_argument("evaluate_policy: empty policy");
  VlcEnv env(cfg);
  EvalResult out;
  out.episodes.reserve(static_cast<size_t>(n_episodes));
  for (int e = 0; e < n_episodes; ++e) {
    std::vector<std::vector<double>> obs =
        env.reset(Rng::derive_seed(seed, static_cast<std::uint64_t>(e))).observations;
    double reward_sum = 0.0;
    int steps = 0;
    while (env.episode_active()) {
      const StepResult res = env.step(policy(env, obs));
      reward_sum += res.global_reward;
      ++steps;
      obs = res.observations;
      if (res.done) break;
    }
    EpisodeMetrics m = compute_episode_metrics(env.trace(), env.metrics_params());
    m.mean_reward = steps > 0 ? reward_sum / static_cast<double>(steps) : 0.0;
    out.episodes.push_back(std::move(m));
  }
  return out;
}

} // namespace vlcsim
