#include "vlcsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vlcsim {

namespace {

// Observation clamp for "never handed over" (+inf timers).
constexpr double kTimeSinceHoCap = 1000.0;

} // namespace

std::vector<int> candidate_set(const AssociationState& assoc, const ChannelMatrix& cm, int ap,
                               int k_max) {
    std::vector<int> users;
    for (int u = 0; u < assoc.n_users(); ++u)
        if (assoc.serving_ap[u] == ap) users.push_back(u);
    std::sort(users.begin(), users.end(), [&](int a, int b) {
        const double ga = cm.gain(ap, a), gb = cm.gain(ap, b);
        if (ga != gb) return ga > gb;
        return a < b;
    });
    if (static_cast<int>(users.size()) > k_max) users.resize(static_cast<size_t>(k_max));
    return users;
}

DecodedAction decode_action(const std::vector<double>& action, const std::vector<int>& candidates,
                            double budget_w, int k_max) {
    if (static_cast<int>(action.size()) != action_dim(k_max))
        throw std::invalid_argument("action dimension mismatch");
    const int n = static_cast<int>(candidates.size());

    DecodedAction out;
    std::vector<double> weights;
    for (int s = 0; s < n; ++s) {
        if (action[static_cast<size_t>(s)] > 0.5) {
            out.alloc.users.push_back(candidates[static_cast<size_t>(s)]);
            weights.push_back(std::max(0.0, action[static_cast<size_t>(k_max + s)]));
        }
        if (action[static_cast<size_t>(2 * k_max + 1 + s)] > 0.5)
            out.triggered_users.push_back(candidates[static_cast<size_t>(s)]);
    }
    if (!out.alloc.users.empty()) {
        const double util = std::clamp(action[static_cast<size_t>(2 * k_max)], 0.0, 1.0);
        const double total = budget_w * util;
        double sum = 0.0;
        for (double w : weights) sum += w;
        out.alloc.powers_w.resize(out.alloc.users.size());
        for (size_t i = 0; i < weights.size(); ++i)
            out.alloc.powers_w[i] =
                sum > 0.0 ? total * weights[i] / sum : total / static_cast<double>(weights.size());
    }
    return out;
}

double agent_reward(const AgentStepView& view, const RewardConfig& rc, double hp_req_bps,
                    double outage_threshold_bps, double rate_norm_bps) {
    double hp_met = 0.0, outage = 0.0, sum_rate = 0.0;
    for (size_t i = 0; i < view.rates_bps.size(); ++i) {
        const double rate = view.rates_bps[i];
        if (view.is_hp[i]) {
            hp_met += std::min(1.0, rate / hp_req_bps);
        } else if (rate < outage_threshold_bps) {
            outage += 1.0 - rate / outage_threshold_bps;
        }
        sum_rate += rate;
    }
    const double r_qos = rc.w_hp_met * hp_met - rc.w_outage * outage;
    // rate_norm can be 0 when the network has no users; the throughput term
    // is then vacuously 0 rather than 0/0.
    const double thr = rate_norm_bps > 0.0 ? sum_rate / rate_norm_bps : 0.0;
    const double r_stab =
        -rc.w_ho * view.n_handovers - rc.w_pp * view.n_pingpongs + rc.w_thr * thr;
    return rc.w_qos * r_qos + rc.w_stab * r_stab;
}

VlcEnv::VlcEnv(const SimConfig& cfg)
    : cfg_(cfg), model_(cfg), pp_(cfg.handover.pingpong_window_s) {
    validate_config(cfg_);
    layout_ = ObsLayout{cfg_.noma.k_max, cfg_.env.neighbor_count};

    // Nearest neighbor APs by geometry, ties by ascending id; -1 pads the
    // list when fewer other APs exist than neighbor slots.
    const auto& aps = cfg_.aps.positions_m;
    const int n_aps = static_cast<int>(aps.size());
    neighbors_.resize(static_cast<size_t>(n_aps));
    for (int a = 0; a < n_aps; ++a) {
        std::vector<int> order;
        for (int b = 0; b < n_aps; ++b)
            if (b != a) order.push_back(b);
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            const double dx = norm(aps[static_cast<size_t>(x)] - aps[static_cast<size_t>(a)]);
            const double dy = norm(aps[static_cast<size_t>(y)] - aps[static_cast<size_t>(a)]);
            if (dx != dy) return dx < dy;
            return x < y;
        });
        order.resize(static_cast<size_t>(cfg_.env.neighbor_count), -1);
        neighbors_[static_cast<size_t>(a)] = std::move(order);
    }
}

ResetResult VlcEnv::reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    const int n_users = cfg_.users.count;
    const int n_aps = n_agents();

    users_.clear();
    users_.reserve(static_cast<size_t>(n_users));
    for (int u = 0; u < n_users; ++u)
        users_.push_back(init_user(rng_, cfg_.room, cfg_.receiver.height_m,
                                   cfg_.mobility.v_min_mps, cfg_.mobility.v_max_mps));

    gamma_.resize(static_cast<size_t>(n_aps));
    const auto& levels = cfg_.dimming.levels;
    for (int a = 0; a < n_aps; ++a)
        gamma_[static_cast<size_t>(a)] =
            levels[rng_.uniform_int(static_cast<std::uint64_t>(levels.size()))];

    std::vector<Vec3> pos(users_.size());
    for (size_t u = 0; u < users_.size(); ++u) pos[u] = users_[u].pos;
    cm_ = model_.compute(pos);
    assoc_ = initial_association(cm_);

    step_ = 0;
    time_s_ = 0.0;
    active_ = true;
    pp_ = PingPongClassifier(cfg_.handover.pingpong_window_s);
    prev_rate_bps_.assign(static_cast<size_t>(n_users), 0.0);
    prev_ici_a2w_.assign(static_cast<size_t>(n_users), 0.0);
    prev_action_enc_.assign(static_cast<size_t>(n_aps),
                            std::vector<double>(static_cast<size_t>(2 * cfg_.noma.k_max), 0.0));

    trace_ = EpisodeTrace{};
    trace_.n_users = n_users;
    trace_.n_aps = n_aps;
    trace_.dt_s = cfg_.mobility.dt_s;

    return emit_observations();
}

std::vector<int> VlcEnv::candidates(int ap) const {
    return candidate_set(assoc_, cm_, ap, cfg_.noma.k_max);
}

MetricsParams VlcEnv::metrics_params() const {
    MetricsParams p;
    p.n_hp_users = cfg_.n_hp_users();
    p.hp_rate_req_bps = cfg_.users.hp_rate_req_bps;
    p.outage_threshold_bps = cfg_.users.outage_threshold_bps;
    p.t_pp_s = cfg_.handover.pingpong_window_s;
    p.noise_a2 = cfg_.noise_variance_a2();
    return p;
}

std::vector<double> VlcEnv::observe_agent(int a) const {
    std::vector<double> obs(static_cast<size_t>(layout_.dim()), 0.0);
    const std::vector<int> cand = candidate_set(assoc_, cm_, a, cfg_.noma.k_max);
    for (size_t s = 0; s < cand.size(); ++s) {
        const int u = cand[s];
        double* f = obs.data() + static_cast<size_t>(layout_.slot_offset(static_cast<int>(s)));
        f[0] = 1.0;
        f[1] = cm_.gain(a, u);
        for (int n = 0; n < layout_.neighbor_count; ++n) {
            const int b = neighbors_[static_cast<size_t>(a)][static_cast<size_t>(n)];
            f[2 + n] = b >= 0 ? cm_.gain(b, u) : 0.0;
        }
        f[2 + layout_.neighbor_count] = prev_ici_a2w_[static_cast<size_t>(u)];
        f[3 + layout_.neighbor_count] = prev_rate_bps_[static_cast<size_t>(u)];
        f[4 + layout_.neighbor_count] = cfg_.is_hp_user(u) ? 1.0 : 0.0;
        f[5 + layout_.neighbor_count] =
            std::min(assoc_.time_since_ho_s[static_cast<size_t>(u)], kTimeSinceHoCap);
        f[6 + layout_.neighbor_count] = assoc_.previous_ap[static_cast<size_t>(u)] == a ? 1.0 : 0.0;
    }
    obs[static_cast<size_t>(layout_.gamma_index())] = gamma_[static_cast<size_t>(a)];
    const auto& prev = prev_action_enc_[static_cast<size_t>(a)];
    std::copy(prev.begin(), prev.end(),
              obs.begin() + static_cast<size_t>(layout_.prev_power_offset()));
    return obs;
}

ResetResult VlcEnv::emit_observations() const {
    ResetResult r;
    r.observations.reserve(static_cast<size_t>(n_agents()));
    for (int a = 0; a < n_agents(); ++a) r.observations.push_back(observe_agent(a));
    for (const auto& o : r.observations)
        r.global_state.insert(r.global_state.end(), o.begin(), o.end());
    return r;
}

StepResult VlcEnv::step(const std::vector<std::vector<double>>& actions) {
    if (!active_) throw std::invalid_argument("step called without an active episode");
    const int n_aps = n_agents();
    const int n_users = cfg_.users.count;
    const int k = cfg_.noma.k_max;
    if (static_cast<int>(actions.size()) != n_aps)
        throw std::invalid_argument("joint action must have one entry per agent");
    for (const auto& a : actions)
        if (static_cast<int>(a.size()) != action_dim(k))
            throw std::invalid_argument("action dimension mismatch");

    // 1. Decode every agent's action against the current association.
    std::vector<PowerAllocation> allocs(static_cast<size_t>(n_aps));
    std::vector<std::uint8_t> triggers(static_cast<size_t>(n_users), 0);
    std::vector<int> old_serving = assoc_.serving_ap;
    for (int a = 0; a < n_aps; ++a) {
        const std::vector<int> cand = candidate_set(assoc_, cm_, a, k);
        const double budget = effective_power_budget(
            cfg_.aps.max_electrical_power_w, gamma_[static_cast<size_t>(a)], cfg_.dimming.levels);
        DecodedAction da = decode_action(actions[static_cast<size_t>(a)], cand, budget, k);
        for (int u : da.triggered_users) triggers[static_cast<size_t>(u)] = 1;

        // Record the decoded action for the next observation: power as a
        // fraction of the budget per slot, plus the trigger bits.
        auto& enc = prev_action_enc_[static_cast<size_t>(a)];
        std::fill(enc.begin(), enc.end(), 0.0);
        for (size_t i = 0; i < da.alloc.users.size(); ++i) {
            const auto slot = std::find(cand.begin(), cand.end(), da.alloc.users[i]) - cand.begin();
            enc[static_cast<size_t>(slot)] = budget > 0.0 ? da.alloc.powers_w[i] / budget : 0.0;
        }
        for (int u : da.triggered_users) {
            const auto slot = std::find(cand.begin(), cand.end(), u) - cand.begin();
            enc[static_cast<size_t>(k + slot)] = 1.0;
        }
        allocs[static_cast<size_t>(a)] = std::move(da.alloc);
    }

    // 2. Handovers: timers advance, triggered users re-associate. Allocations
    // above were decoded first, so the change affects the next step only.
    const size_t log_before = assoc_.ho_log.size();
    apply_handover_triggers(assoc_, triggers, cm_, time_s_, cfg_.mobility.dt_s);
    StepResult res;
    res.ho_events.assign(assoc_.ho_log.begin() + static_cast<long>(log_before),
                         assoc_.ho_log.end());

    // 3. Link evaluation for the decoded allocations on the current channel.
    res.reports = compute_link_reports(allocs, cm_, cfg_.noise_variance_a2(),
                                       cfg_.noise.bandwidth_hz, cfg_.noma.sic_mode);

    // Per-user step record.
    StepRecord rec;
    rec.rate_bps.assign(static_cast<size_t>(n_users), 0.0);
    rec.sinr.assign(static_cast<size_t>(n_users), 0.0);
    rec.served.assign(static_cast<size_t>(n_users), 0);
    rec.power_w.assign(static_cast<size_t>(n_users), 0.0);
    rec.ici_a2w.assign(static_cast<size_t>(n_users), 0.0);
    rec.ap_power_w.assign(static_cast<size_t>(n_aps), 0.0);
    for (const LinkReport& r : res.reports) {
        const size_t u = static_cast<size_t>(r.user);
        rec.rate_bps[u] = r.rate_bps;
        rec.sinr[u] = r.sinr;
        rec.served[u] = 1;
        rec.power_w[u] = r.power_w;
        rec.ici_a2w[u] = r.ici_a2w;
    }
    for (int a = 0; a < n_aps; ++a)
        rec.ap_power_w[static_cast<size_t>(a)] = allocs[static_cast<size_t>(a)].total_power_w();

    // 4. Rewards, attributed by the association the agents acted under.
    std::vector<int> ho_count(static_cast<size_t>(n_aps), 0);
    std::vector<int> pp_count(static_cast<size_t>(n_aps), 0);
    for (const HoEvent& e : res.ho_events) {
        ++ho_count[static_cast<size_t>(e.from_ap)];
        if (pp_.classify(e)) ++pp_count[static_cast<size_t>(e.from_ap)];
    }
    res.rewards.resize(static_cast<size_t>(n_aps));
    for (int a = 0; a < n_aps; ++a) {
        AgentStepView view;
        for (int u = 0; u < n_users; ++u) {
            if (old_serving[static_cast<size_t>(u)] != a) continue;
            view.rates_bps.push_back(rec.rate_bps[static_cast<size_t>(u)]);
            view.is_hp.push_back(cfg_.is_hp_user(u) ? 1 : 0);
        }
        view.n_handovers = ho_count[static_cast<size_t>(a)];
        view.n_pingpongs = pp_count[static_cast<size_t>(a)];
        res.rewards[static_cast<size_t>(a)] =
            agent_reward(view, cfg_.reward, cfg_.users.hp_rate_req_bps,
                         cfg_.users.outage_threshold_bps, cfg_.rate_norm_bps());
    }
    res.global_reward =
        n_aps > 0
            ? std::accumulate(res.rewards.begin(), res.rewards.end(), 0.0) / n_aps
            : 0.0;

    // 5. Mobility advances after rewards.
    for (auto& s : users_)
        step_user(s, cfg_.mobility.dt_s, rng_, cfg_.room, cfg_.mobility.v_min_mps,
                  cfg_.mobility.v_max_mps);
    time_s_ += cfg_.mobility.dt_s;
    ++step_;

    // 6. Rebuild the channel at the new positions.
    std::vector<Vec3> pos(users_.size());
    for (size_t u = 0; u < users_.size(); ++u) pos[u] = users_[u].pos;
    cm_ = model_.compute(pos);

    // 7. Histories and next observations.
    for (int u = 0; u < n_users; ++u) {
        prev_rate_bps_[static_cast<size_t>(u)] = rec.rate_bps[static_cast<size_t>(u)];
        prev_ici_a2w_[static_cast<size_t>(u)] = rec.ici_a2w[static_cast<size_t>(u)];
    }
    trace_.steps.push_back(rec);
    trace_.ho_log = assoc_.ho_log;
    res.record = std::move(rec);

    res.done = step_ >= cfg_.env.max_steps_per_episode;
    if (res.done) active_ = false;

    ResetResult next = emit_observations();
    res.observations = std::move(next.observations);
    res.global_state = std::move(next.global_state);
    return res;
}

} // namespace vlcsim
