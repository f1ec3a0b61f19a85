#pragma once

#include <cstdint>
#include <vector>

#include "vlcsim/channel.hpp"

namespace vlcsim {

struct HoEvent {
    double time_s = 0.0;
    int user = -1;
    int from_ap = -1;
    int to_ap = -1;
};

// Association is total: every user always has exactly one serving AP.
// time_since_ho starts at +infinity (never handed over).
struct AssociationState {
    std::vector<int> serving_ap;
    std::vector<int> previous_ap;        // -1 until the first handover
    std::vector<double> time_since_ho_s;
    std::vector<HoEvent> ho_log;

    int n_users() const { return static_cast<int>(serving_ap.size()); }
};

// Strongest-gain association; gain ties resolve to the lowest AP id.
AssociationState initial_association(const ChannelMatrix& cm);

// Advances every user's handover timer by dt, then re-associates each
// triggered user to its strongest non-serving AP (tie: lowest AP id), logging
// the event at absolute time t_s and zeroing that user's timer. Triggers are
// ignored when there is no other AP to move to. Throws std::invalid_argument
// on a size mismatch.
void apply_handover_triggers(AssociationState& st, const std::vector<std::uint8_t>& triggers,
                             const ChannelMatrix& cm, double t_s, double dt_s);

// Hysteresis rule: trigger user u iff its best neighbor gain strictly exceeds
// the serving gain times 10^(hysteresis_db/10).
std::vector<std::uint8_t> baseline_handover(const AssociationState& st, const ChannelMatrix& cm,
                                            double hysteresis_db);

} // namespace vlcsim
