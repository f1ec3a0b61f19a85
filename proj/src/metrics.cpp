#include "vlcsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace vlcsim {

double qossr_hp(const EpisodeTrace& trace, const MetricsParams& p) {
    if (p.n_hp_users == 0) return 1.0;  // vacuous satisfaction, flagged by the caller
    long met = 0, total = 0;
    for (const StepRecord& s : trace.steps)
        for (int u = 0; u < p.n_hp_users; ++u) {
            ++total;
            if (s.rate_bps[u] >= p.hp_rate_req_bps) ++met;
        }
    return total == 0 ? 0.0 : static_cast<double>(met) / static_cast<double>(total);
}

double outage_probability_sp(const EpisodeTrace& trace, const MetricsParams& p) {
    const int n_sp = trace.n_users - p.n_hp_users;
    if (n_sp <= 0) return 0.0;
    long out = 0, total = 0;
    for (const StepRecord& s : trace.steps)
        for (int u = p.n_hp_users; u < trace.n_users; ++u) {
            ++total;
            if (s.rate_bps[u] < p.outage_threshold_bps) ++out;
        }
    return total == 0 ? 0.0 : static_cast<double>(out) / static_cast<double>(total);
}

bool PingPongClassifier::classify(const HoEvent& e) {
    bool pp = false;
    auto it = last_.find(e.user);
    if (it != last_.end())
        pp = e.to_ap == it->second.from_ap && e.time_s - it->second.time_s <= t_pp_;
    last_[e.user] = {e.time_s, e.from_ap};
    return pp;
}

std::vector<std::uint8_t> classify_pingpong(const std::vector<HoEvent>& log, double t_pp_s) {
    PingPongClassifier cls(t_pp_s);
    std::vector<std::uint8_t> flags(log.size());
    for (size_t i = 0; i < log.size(); ++i) flags[i] = cls.classify(log[i]) ? 1 : 0;
    return flags;
}

std::pair<double, double> hor_and_ppr(const std::vector<HoEvent>& log, double duration_s,
                                      int n_users, double t_pp_s) {
    const double hor = duration_s > 0 && n_users > 0
                           ? static_cast<double>(log.size()) / (n_users * duration_s)
                           : 0.0;
    long pp = 0;
    for (std::uint8_t f : classify_pingpong(log, t_pp_s)) pp += f;
    const double ppr = static_cast<double>(pp) / std::max<size_t>(1, log.size());
    return {hor, ppr};
}

double jfi(const std::vector<double>& avg_powers) {
    if (avg_powers.empty()) throw std::invalid_argument("jfi: empty input");
    double sum = 0.0, sum_sq = 0.0;
    for (double x : avg_powers) {
        sum += x;
        sum_sq += x * x;
    }
    if (sum_sq == 0.0) throw std::invalid_argument("jfi: undefined for all-zero powers");
    return sum * sum / (avg_powers.size() * sum_sq);
}

EpisodeMetrics compute_episode_metrics(const EpisodeTrace& trace, const MetricsParams& p) {
    EpisodeMetrics m;
    m.no_hp_users = p.n_hp_users == 0;
    m.no_sp_users = trace.n_users - p.n_hp_users <= 0;
    m.qossr_hp = qossr_hp(trace, p);
    m.p_out_sp = outage_probability_sp(trace, p);

    const double duration = trace.steps.size() * trace.dt_s;
    std::tie(m.hor, m.ppr) = hor_and_ppr(trace.ho_log, duration, trace.n_users, p.t_pp_s);

    std::vector<double> avg_power(trace.n_users, 0.0);
    double sum_rate_acc = 0.0, ap_power_acc = 0.0, sinr_db_acc = 0.0;
    for (const StepRecord& s : trace.steps) {
        double step_rate = 0.0;
        for (int u = 0; u < trace.n_users; ++u) {
            step_rate += s.rate_bps[u];
            avg_power[u] += s.power_w[u];
            if (s.served[u]) {
                ++m.served_pairs;
                if (s.sinr[u] > 0.0) {
                    const double db = 10.0 * std::log10(s.sinr[u]);
                    sinr_db_acc += db;
                    m.sinr_samples_db.push_back(db);
                } else {
                    ++m.sinr_excluded;
                }
            }
            if (s.ici_a2w[u] > 0.0)
                m.inr_samples_db.push_back(10.0 * std::log10(s.ici_a2w[u] / p.noise_a2));
            else
                ++m.ici_zero_skipped;
        }
        sum_rate_acc += step_rate;
        for (double pw : s.ap_power_w) ap_power_acc += pw;
    }

    const size_t n_steps = trace.steps.size();
    if (n_steps > 0) {
        m.sum_rate_bps = sum_rate_acc / n_steps;
        m.avg_user_rate_bps = trace.n_users > 0 ? m.sum_rate_bps / trace.n_users : 0.0;
        m.avg_ap_power_w = trace.n_aps > 0 ? ap_power_acc / (n_steps * trace.n_aps) : 0.0;
        for (double& x : avg_power) x /= n_steps;
    }
    const long sinr_counted = m.served_pairs - m.sinr_excluded;
    m.avg_sinr_db = sinr_counted > 0 ? sinr_db_acc / sinr_counted : 0.0;

    bool any_power = false;
    for (double x : avg_power) any_power |= x > 0.0;
    m.jfi_defined = trace.n_users > 0 && any_power;
    m.jfi = m.jfi_defined ? jfi(avg_power) : 0.0;
    return m;
}

std::vector<double> empirical_quantiles(std::vector<double> samples, int n_points) {
    std::vector<double> q;
    if (samples.empty() || n_points < 2) return q;
    std::sort(samples.begin(), samples.end());
    q.reserve(n_points);
    const double last = static_cast<double>(samples.size() - 1);
    for (int i = 0; i < n_points; ++i) {
        const double pos = last * i / (n_points - 1);
        const size_t lo = static_cast<size_t>(pos);
        const size_t hi = std::min(lo + 1, samples.size() - 1);
        const double frac = pos - lo;
        q.push_back(samples[lo] * (1.0 - frac) + samples[hi] * frac);
    }
    return q;
}

SummaryStat summarize(const std::vector<double>& values) {
    SummaryStat s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        const double stddev = std::sqrt(ss / (values.size() - 1));
        s.ci95_half_width = 1.96 * stddev / std::sqrt(static_cast<double>(values.size()));
    }
    return s;
}

} // namespace vlcsim
