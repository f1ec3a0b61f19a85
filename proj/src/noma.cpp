#include "vlcsim/noma.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vlcsim {

double effective_power_budget(double p_max_w, double gamma, const std::vector<double>& levels) {
    for (double g : levels)
        if (std::abs(g - gamma) <= 1e-12) return gamma * p_max_w;
    throw std::invalid_argument("effective_power_budget: gamma is not a configured dimming level");
}

std::vector<int> sic_order(const std::vector<int>& users, const std::vector<double>& gains) {
    std::vector<int> idx(users.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (gains[a] != gains[b]) return gains[a] > gains[b];
        return users[a] < users[b];
    });
    std::vector<int> ordered(users.size());
    for (size_t i = 0; i < idx.size(); ++i) ordered[i] = users[idx[i]];
    return ordered;
}

double intra_cell_interference(int idx, const PowerAllocation& alloc,
                               const std::vector<double>& gains, SicMode mode) {
    const double g_own = gains[idx];
    double interfering_power = 0.0;
    for (size_t j = 0; j < alloc.users.size(); ++j) {
        if (static_cast<int>(j) == idx) continue;
        if (mode == SicMode::standard && gains[j] < g_own) continue;  // cancelled via SIC
        interfering_power += alloc.powers_w[j];
    }
    return g_own * interfering_power;
}

double ici(int user, int serving_ap, const std::vector<PowerAllocation>& allocs,
           const ChannelMatrix& cm) {
    double total = 0.0;
    for (int a = 0; a < cm.n_aps; ++a) {
        if (a == serving_ap) continue;
        total += cm.gain(a, user) * allocs[a].total_power_w();
    }
    return total;
}

std::vector<LinkReport> compute_link_reports(const std::vector<PowerAllocation>& allocs,
                                             const ChannelMatrix& cm, double noise_a2,
                                             double bandwidth_hz, SicMode mode) {
    std::vector<LinkReport> reports;
    std::vector<double> gains;
    for (int a = 0; a < cm.n_aps; ++a) {
        const PowerAllocation& alloc = allocs[a];
        gains.resize(alloc.users.size());
        for (size_t i = 0; i < alloc.users.size(); ++i) gains[i] = cm.gain(a, alloc.users[i]);
        for (size_t i = 0; i < alloc.users.size(); ++i) {
            LinkReport r;
            r.user = alloc.users[i];
            r.serving_ap = a;
            r.power_w = alloc.powers_w[i];
            r.noise_a2 = noise_a2;
            r.intra_a2w = intra_cell_interference(static_cast<int>(i), alloc, gains, mode);
            r.ici_a2w = ici(r.user, a, allocs, cm);
            if (r.power_w > 0.0) {
                r.sinr = gains[i] * r.power_w / (r.intra_a2w + r.ici_a2w + noise_a2);
                r.rate_bps = bandwidth_hz * std::log2(1.0 + r.sinr);
            }
            reports.push_back(r);
        }
    }
    return reports;
}

} // namespace vlcsim
