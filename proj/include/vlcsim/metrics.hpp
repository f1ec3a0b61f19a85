#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "vlcsim/association.hpp"

namespace vlcsim {

// Everything the metrics need from one environment step. All per-user arrays
// are indexed by user id; unserved users carry zeros.
struct StepRecord {
    std::vector<double> rate_bps;
    std::vector<double> sinr;        // linear
    std::vector<std::uint8_t> served;
    std::vector<double> power_w;     // per-user allocated power
    std::vector<double> ici_a2w;     // measured at each user's PD vs its serving AP
    std::vector<double> ap_power_w;  // per-AP total transmitted power
};

struct EpisodeTrace {
    int n_users = 0;
    int n_aps = 0;
    double dt_s = 1.0;
    std::vector<StepRecord> steps;
    std::vector<HoEvent> ho_log;
};

struct MetricsParams {
    int n_hp_users = 0;
    double hp_rate_req_bps = 12e6;
    double outage_threshold_bps = 0.5e6;
    double t_pp_s = 2.0;
    double noise_a2 = 2e-15;
};

struct EpisodeMetrics {
    double qossr_hp = 0.0;        // fraction of (HP user, step) pairs at/above requirement
    double p_out_sp = 0.0;        // fraction of (SP user, step) pairs strictly below threshold
    double hor = 0.0;             // handovers per user per second
    double ppr = 0.0;             // ping-pong fraction of all handovers
    double jfi = 0.0;             // fairness of per-user average powers
    double sum_rate_bps = 0.0;    // per-step network sum rate, averaged over steps
    double avg_user_rate_bps = 0.0;
    double avg_sinr_db = 0.0;     // over served pairs with SINR > 0
    double avg_ap_power_w = 0.0;  // per (AP, step)
    double mean_reward = 0.0;     // filled by the caller when rewards exist

    long served_pairs = 0;
    long sinr_excluded = 0;       // served pairs with SINR == 0, left out of avg_sinr_db
    long ici_zero_skipped = 0;    // (user, step) pairs without a finite INR sample
    bool no_hp_users = false;     // qossr_hp vacuously 1.0
    bool no_sp_users = false;     // p_out_sp vacuously 0.0
    bool jfi_defined = true;      // false when every average power is zero

    std::vector<double> inr_samples_db;
    std::vector<double> sinr_samples_db;
};

double qossr_hp(const EpisodeTrace& trace, const MetricsParams& p);
double outage_probability_sp(const EpisodeTrace& trace, const MetricsParams& p);

// (handovers per user per second, ping-pong fraction). duration = step count * dt.
std::pair<double, double> hor_and_ppr(const std::vector<HoEvent>& log, double duration_s,
                                      int n_users, double t_pp_s);

// Jain's index of nonnegative values; throws std::invalid_argument if all zero.
double jfi(const std::vector<double>& avg_powers);

// Streaming ping-pong classifier; feed events in log order. An event is a
// ping-pong iff it returns the user to the AP it left at its previous event
// and the gap between the two events is at most the window.
class PingPongClassifier {
public:
    explicit PingPongClassifier(double t_pp_s) : t_pp_(t_pp_s) {}
    bool classify(const HoEvent& e);

private:
    struct Last {
        double time_s;
        int from_ap;
    };
    double t_pp_;
    std::unordered_map<int, Last> last_;
};

std::vector<std::uint8_t> classify_pingpong(const std::vector<HoEvent>& log, double t_pp_s);

EpisodeMetrics compute_episode_metrics(const EpisodeTrace& trace, const MetricsParams& p);

// Sorted p-quantiles at p = i/(n_points-1), linear interpolation; empty input
// yields an empty vector.
std::vector<double> empirical_quantiles(std::vector<double> samples, int n_points);

struct SummaryStat {
    double mean = 0.0;
    double ci95_half_width = 0.0;  // 1.96 * s / sqrt(n)
};

SummaryStat summarize(const std::vector<double>& values);

} // namespace vlcsim
