#include "vlcsim/association.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace vlcsim {

namespace {

// Strongest AP for `user`, optionally excluding one AP; ties to lowest id.
int strongest_ap(const ChannelMatrix& cm, int user, int exclude = -1) {
    int best = -1;
    double best_gain = -1.0;
    for (int a = 0; a < cm.n_aps; ++a) {
        if (a == exclude) continue;
        const double g = cm.gain(a, user);
        if (g > best_gain) {
            best_gain = g;
            best = a;
        }
    }
    return best;
}

} // namespace

AssociationState initial_association(const ChannelMatrix& cm) {
    AssociationState st;
    st.serving_ap.resize(cm.n_users);
    st.previous_ap.assign(cm.n_users, -1);
    st.time_since_ho_s.assign(cm.n_users, std::numeric_limits<double>::infinity());
    for (int u = 0; u < cm.n_users; ++u) st.serving_ap[u] = strongest_ap(cm, u);
    return st;
}

void apply_handover_triggers(AssociationState& st, const std::vector<std::uint8_t>& triggers,
                             const ChannelMatrix& cm, double t_s, double dt_s) {
    if (static_cast<int>(triggers.size()) != st.n_users())
        throw std::invalid_argument("apply_handover_triggers: trigger vector size mismatch");
    for (double& t : st.time_since_ho_s) t += dt_s;
    if (cm.n_aps < 2) return;  // nowhere to go
    for (int u = 0; u < st.n_users(); ++u) {
        if (!triggers[u]) continue;
        const int from = st.serving_ap[u];
        const int to = strongest_ap(cm, u, from);
        st.ho_log.push_back({t_s, u, from, to});
        st.previous_ap[u] = from;
        st.serving_ap[u] = to;
        st.time_since_ho_s[u] = 0.0;
    }
}

std::vector<std::uint8_t> baseline_handover(const AssociationState& st, const ChannelMatrix& cm,
                                            double hysteresis_db) {
    const double factor = std::pow(10.0, hysteresis_db / 10.0);
    std::vector<std::uint8_t> triggers(st.n_users(), 0);
    for (int u = 0; u < st.n_users(); ++u) {
        const int serving = st.serving_ap[u];
        double best_other = -1.0;
        for (int a = 0; a < cm.n_aps; ++a)
            if (a != serving) best_other = std::max(best_other, cm.gain(a, u));
        if (best_other > cm.gain(serving, u) * factor) triggers[u] = 1;
    }
    return triggers;
}

} // namespace vlcsim
