#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "vlcsim/baseline.hpp"
#include "vlcsim/env.hpp"
#include "vlcsim/noma.hpp"

using namespace vlcsim;

namespace {

SimConfig one_ap_config(int n_users) {
    SimConfig cfg = default_config();
    cfg.aps.positions_m = {{2.0, 4.0, 3.0}};
    cfg.users.count = n_users;
    cfg.env.neighbor_count = 0;
    cfg.dimming.levels = {1.0}; // pin the budget at full power
    return cfg;
}

} // namespace

TEST_CASE("equal split across three users at full budget") {
    const SimConfig cfg = one_ap_config(3);
    VlcEnv env(cfg);
    env.reset(42);
    const StepResult res = env.step(baseline_joint_action(env));
    int served = 0;
    for (int u = 0; u < 3; ++u) {
        if (res.record.served[static_cast<size_t>(u)] != 0) {
            ++served;
            CHECK(rel_close(res.record.power_w[static_cast<size_t>(u)], 5.0, 1e-12));
        }
    }
    CHECK(served == 3);
    CHECK(rel_close(res.record.ap_power_w[0], 15.0, 1e-12));
}

TEST_CASE("overloaded cell truncates to the strongest k users") {
    SimConfig cfg = one_ap_config(12);
    cfg.noma.k_max = 10;
    VlcEnv env(cfg);
    env.reset(7);
    const StepResult res = env.step(baseline_joint_action(env));
    int served = 0;
    for (int u = 0; u < 12; ++u) {
        if (res.record.served[static_cast<size_t>(u)] != 0) {
            ++served;
            CHECK(rel_close(res.record.power_w[static_cast<size_t>(u)], 1.5, 1e-12));
        }
    }
    CHECK(served == 10);
    CHECK(rel_close(res.record.ap_power_w[0], 15.0, 1e-12));
}

TEST_CASE("ap with no users stays silent") {
    const SimConfig cfg = one_ap_config(0);
    VlcEnv env(cfg);
    env.reset(1);
    const std::vector<std::vector<double>> actions = baseline_joint_action(env);
    REQUIRE(actions.size() == 1);
    const StepResult res = env.step(actions);
    CHECK(res.record.ap_power_w[0] == 0.0);
}

TEST_CASE("allocation is budget-tight under dimming") {
    SimConfig cfg = default_config();
    cfg.users.count = 12;
    VlcEnv env(cfg);
    env.reset(99);
    for (int step = 0; step < 5; ++step) {
        // Effective budgets follow each AP's dimming level.
        std::vector<double> budget(static_cast<size_t>(env.n_agents()));
        std::vector<bool> has_user(static_cast<size_t>(env.n_agents()), false);
        for (int a = 0; a < env.n_agents(); ++a) {
            budget[static_cast<size_t>(a)] = effective_power_budget(
                cfg.aps.max_electrical_power_w, env.gamma(a), cfg.dimming.levels);
            has_user[static_cast<size_t>(a)] = !env.candidates(a).empty();
        }
        const StepResult res = env.step(baseline_joint_action(env));
        for (int a = 0; a < env.n_agents(); ++a) {
            if (has_user[static_cast<size_t>(a)]) {
                CHECK(rel_close(res.record.ap_power_w[static_cast<size_t>(a)],
                                budget[static_cast<size_t>(a)], 1e-12));
            } else {
                CHECK(res.record.ap_power_w[static_cast<size_t>(a)] == 0.0);
            }
        }
    }
}

TEST_CASE("baseline episode yields finite metrics and sane handovers") {
    SimConfig cfg = default_config();
    cfg.users.count = 8;
    VlcEnv env(cfg);
    env.reset(3);
    while (env.episode_active()) {
        const StepResult res = env.step(baseline_joint_action(env));
        if (res.done) break;
    }
    const EpisodeMetrics m = compute_episode_metrics(env.trace(), env.metrics_params());
    CHECK(std::isfinite(m.sum_rate_bps));
    CHECK(std::isfinite(m.jfi));
    CHECK(m.jfi > 0.0);
    CHECK(m.hor >= 0.0);
    CHECK(m.qossr_hp >= 0.0);
    CHECK(m.qossr_hp <= 1.0);
}
