#pragma once

#include <vector>

#include "vlcsim/env.hpp"

namespace vlcsim {

// Non-learning reference policy: every AP serves all of its candidate users
// (the strongest k_max when overloaded) with equal powers at full budget
// utilization, and handover triggers come from the hysteresis rule. Produces
// environment-format actions so baseline and learned policies share one
// evaluation path.
std::vector<std::vector<double>> baseline_joint_action(const VlcEnv& env);

} // namespace vlcsim
