#pragma once

#include <vector>

#include "vlcsim/channel.hpp"
#include "vlcsim/config.hpp"

namespace vlcsim {

// One AP's downlink schedule for a step: served user ids with their electrical
// transmit powers, parallel arrays.
struct PowerAllocation {
    std::vector<int> users;
    std::vector<double> powers_w;

    double total_power_w() const {
        double s = 0.0;
        for (double p : powers_w) s += p;
        return s;
    }
};

// Per-served-link outcome of a step.
struct LinkReport {
    int user = -1;
    int serving_ap = -1;
    double power_w = 0.0;
    double sinr = 0.0;          // linear
    double intra_a2w = 0.0;     // own-cell interference power seen by the PD
    double ici_a2w = 0.0;       // inter-cell interference power seen by the PD
    double noise_a2 = 0.0;
    double rate_bps = 0.0;
};

// budget = gamma * P_max; gamma must be one of the configured dimming levels.
double effective_power_budget(double p_max_w, double gamma, const std::vector<double>& levels);

// Decode order: descending channel power gain, ties by ascending user id.
// `users` and `gains` are parallel.
std::vector<int> sic_order(const std::vector<int>& users, const std::vector<double>& gains);

// Own-cell interference after perfect SIC. Under the standard convention a
// user cancels every co-served signal with strictly weaker gain and keeps the
// rest (equal gains are mutually non-cancellable); literal_eq5 keeps all j != u.
// `idx` indexes the served user inside `alloc`; `gains[i]` is the gain from the
// serving AP to alloc.users[i].
double intra_cell_interference(int idx, const PowerAllocation& alloc,
                               const std::vector<double>& gains, SicMode mode);

// Inter-cell interference: sum over other APs of (gain to victim) x (that
// AP's total transmitted power) — the inner per-user sum factors out because
// the gain does not depend on which co-served user a symbol targets.
double ici(int user, int serving_ap, const std::vector<PowerAllocation>& allocs,
           const ChannelMatrix& cm);

// Full per-link evaluation for every served user of every AP. Zero allocated
// power yields SINR 0 / rate 0 rather than an error.
std::vector<LinkReport> compute_link_reports(const std::vector<PowerAllocation>& allocs,
                                             const ChannelMatrix& cm, double noise_a2,
                                             double bandwidth_hz, SicMode mode);

} // namespace vlcsim
