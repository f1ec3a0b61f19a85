#pragma once

#include <cstdint>
#include <vector>

#include "vlcsim/association.hpp"
#include "vlcsim/channel.hpp"
#include "vlcsim/config.hpp"
#include "vlcsim/metrics.hpp"
#include "vlcsim/mobility.hpp"
#include "vlcsim/noma.hpp"
#include "vlcsim/rng.hpp"

namespace vlcsim {

// Fixed per-agent observation layout. Each of k_max candidate slots carries
// slot_features() entries, in this order:
//   [0] validity (1 when the slot holds a user, else the whole slot is zero)
//   [1] own-AP channel power gain G to the slot user
//   [2 .. 2+neighbor_count) gains from the agent's nearest neighbor APs
//   [2+nc+0] inter-cell interference measured at the user last step (A^2)
//   [2+nc+1] user rate achieved last step (bit/s)
//   [2+nc+2] high-priority class flag
//   [2+nc+3] time since the user's last handover (s, clamped)
//   [2+nc+4] flag: this agent is the user's previous serving AP
// After the slots: the agent's dimming factor, then the agent's previous
// decoded action as k_max power fractions of the budget plus k_max trigger
// bits (slot-aligned to the previous step's candidate list, zero at reset).
struct ObsLayout {
    int k_max = 0;
    int neighbor_count = 0;

    int slot_features() const { return 7 + neighbor_count; }
    int slot_offset(int slot) const { return slot * slot_features(); }
    int gamma_index() const { return k_max * slot_features(); }
    int prev_power_offset() const { return gamma_index() + 1; }
    int prev_trigger_offset() const { return prev_power_offset() + k_max; }
    int dim() const { return prev_trigger_offset() + k_max; }
};

// Flat per-agent action vector, length 3*k_max + 1:
//   [0 .. k)    selection probability per candidate slot
//   [k .. 2k)   nonnegative raw power weight per slot
//   [2k]        budget utilization in [0, 1]
//   [2k+1 .. 3k+1) handover-trigger probability per slot
inline int action_dim(int k_max) { return 3 * k_max + 1; }

struct DecodedAction {
    PowerAllocation alloc;             // selected users with decoded powers
    std::vector<int> triggered_users;  // users whose trigger bit fired
};

// Users currently associated to `ap`, ordered by descending gain (ties by
// ascending user id), truncated to k_max slots.
std::vector<int> candidate_set(const AssociationState& assoc, const ChannelMatrix& cm, int ap,
                               int k_max);

// Deterministic threshold decode (selection and trigger fire above 0.5).
// Raw power weights are clamped at zero; selected powers are normalized to
// sum to budget * utilization, splitting equally when every selected weight
// is zero. Throws std::invalid_argument on an action dimension mismatch.
DecodedAction decode_action(const std::vector<double>& action, const std::vector<int>& candidates,
                            double budget_w, int k_max);

// Everything the shaped reward of one agent depends on for one step.
// rates/is_hp run over the users associated to the agent when it acted.
struct AgentStepView {
    std::vector<double> rates_bps;
    std::vector<std::uint8_t> is_hp;
    int n_handovers = 0;  // this step's events initiated by the agent (from_ap)
    int n_pingpongs = 0;  // subset of those classified as ping-pongs
};

// w_qos * (w_hp_met * sum_HP min(1, rate/req) - w_outage * sum_SP outage
// severity) + w_stab * (-w_ho * HOs - w_pp * ping-pongs + w_thr * sum_rate /
// rate_norm). Outage severity is (1 - rate/threshold) below the threshold.
double agent_reward(const AgentStepView& view, const RewardConfig& rc, double hp_req_bps,
                    double outage_threshold_bps, double rate_norm_bps);

struct ResetResult {
    std::vector<std::vector<double>> observations;  // one per agent
    std::vector<double> global_state;               // concatenated observations
};

struct StepResult {
    std::vector<std::vector<double>> observations;
    std::vector<double> global_state;
    std::vector<double> rewards;  // per agent
    double global_reward = 0.0;   // mean over agents
    std::vector<LinkReport> reports;
    std::vector<HoEvent> ho_events;  // this step only
    bool done = false;
    StepRecord record;  // per-step metrics increment
};

// The multi-agent decision process over the physical simulator. One step:
// decode all agent actions against the current association -> apply handover
// triggers -> evaluate links for the decoded allocations -> compute rewards
// -> advance mobility -> rebuild the channel -> emit next observations.
// Handovers therefore take effect for the NEXT step's candidate sets.
class VlcEnv {
public:
    explicit VlcEnv(const SimConfig& cfg);  // validates the config

    ResetResult reset(std::uint64_t seed);
    StepResult step(const std::vector<std::vector<double>>& actions);

    int n_agents() const { return static_cast<int>(cfg_.aps.positions_m.size()); }
    int n_users() const { return cfg_.users.count; }
    int obs_dim() const { return layout_.dim(); }
    int act_dim() const { return action_dim(cfg_.noma.k_max); }
    const ObsLayout& layout() const { return layout_; }
    const SimConfig& config() const { return cfg_; }

    bool episode_active() const { return active_; }
    int step_count() const { return step_; }
    double gamma(int ap) const { return gamma_.at(static_cast<size_t>(ap)); }
    const ChannelMatrix& channel() const { return cm_; }
    const AssociationState& association() const { return assoc_; }
    const std::vector<MobilityState>& user_states() const { return users_; }
    std::vector<int> candidates(int ap) const;

    // Trace of the episode so far (records appended per step, handover log
    // synchronized), consumable by compute_episode_metrics.
    const EpisodeTrace& trace() const { return trace_; }
    MetricsParams metrics_params() const;

private:
    std::vector<double> observe_agent(int a) const;
    ResetResult emit_observations() const;

    SimConfig cfg_;
    ChannelModel model_;
    ObsLayout layout_;
    std::vector<std::vector<int>> neighbors_;  // per AP, nearest first

    Rng rng_{0};
    bool active_ = false;
    int step_ = 0;
    double time_s_ = 0.0;
    std::vector<MobilityState> users_;
    AssociationState assoc_;
    ChannelMatrix cm_;
    std::vector<double> gamma_;
    PingPongClassifier pp_{2.0};

    std::vector<double> prev_rate_bps_;  // per user, zero at reset
    std::vector<double> prev_ici_a2w_;
    std::vector<std::vector<double>> prev_action_enc_;  // per agent, 2*k_max

    EpisodeTrace trace_;
};

} // namespace vlcsim
