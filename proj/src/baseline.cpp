#include "vlcsim/baseline.hpp"

#include "vlcsim/association.hpp"

namespace vlcsim {

std::vector<std::vector<double>> baseline_joint_action(const VlcEnv& env) {
  const SimConfig& cfg = env.config();
  const int n_aps = env.n_agents();
  const size_t k = static_cast<size_t>(cfg.noma.k_max);
  const std::vector<std::uint8_t> want_ho =
      baseline_handover(env.association(), env.channel(),
                        cfg.handover.baseline_hysteresis_db);

  std::vector<std::vector<double>> actions(
      static_cast<size_t>(n_aps),
      std::vector<double>(static_cast<size_t>(action_dim(cfg.noma.k_max)), 0.0));
  for (int a = 0; a < n_aps; ++a) {
    std::vector<double>& act = actions[static_cast<size_t>(a)];
    const std::vector<int>& cand = env.candidates(a);
    for (size_t s = 0; s < cand.size(); ++s) {
      act[s] = 1.0;          // select every candidate
      act[k + s] = 1.0;      // equal weights -> equal powers after scaling
      const int u = cand[s];
      if (env.association().serving_ap[static_cast<size_t>(u)] == a &&
          want_ho[static_cast<size_t>(u)] != 0) {
        act[2 * k + 1 + s] = 1.0;
      }
    }
    act[2 * k] = 1.0; // full budget utilization
  }
  return actions;
}

} // namespace vlcsim
