#pragma once

#include "vlcsim/config.hpp"
#include "vlcsim/geometry.hpp"
#include "vlcsim/rng.hpp"

namespace vlcsim {

// Random Direction model: straight-line motion at fixed speed/heading, with
// speed and an inward heading redrawn on every wall contact (no pause).
struct MobilityState {
    Vec3 pos;          // z pinned to the receiver plane
    double speed = 0;  // m/s
    double heading = 0; // rad, in [0, 2*pi)
};

// Uniform position over the floor area, heading uniform on [0, 2*pi), speed
// uniform on [v_min, v_max]. Draw order: x, y, heading, speed.
MobilityState init_user(Rng& rng, const RoomConfig& room, double ue_height_m, double v_min,
                        double v_max);

// Advances one step of dt seconds. On wall contact the speed and an
// interior-pointing heading are redrawn (cosine-weighted about the inward
// normal; diagonal normal at corners) and the remaining time budget is spent
// on the new leg, so contacts consume distance but no time. Draw order on
// contact: speed, heading.
void step_user(MobilityState& s, double dt, Rng& rng, const RoomConfig& room, double v_min,
               double v_max);

} // namespace vlcsim
