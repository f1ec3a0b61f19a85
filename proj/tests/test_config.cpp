#include <doctest.h>

#include <stdexcept>

#include "vlcsim/config.hpp"

using namespace vlcsim;

TEST_CASE("defaults carry the reference indoor scenario") {
    SimConfig cfg = default_config();
    CHECK(cfg.room.length_m == 4.0);
    CHECK(cfg.room.width_m == 8.0);
    CHECK(cfg.room.height_m == 3.0);
    REQUIRE(cfg.n_aps() == 8);
    // 2x4 ceiling grid: x in {1,3}, y in {1,3,5,7}.
    int idx = 0;
    for (double x : {1.0, 3.0})
        for (double y : {1.0, 3.0, 5.0, 7.0}) {
            CHECK(cfg.aps.positions_m[idx].x == x);
            CHECK(cfg.aps.positions_m[idx].y == y);
            CHECK(cfg.aps.positions_m[idx].z == 3.0);
            ++idx;
        }
    CHECK(cfg.aps.semi_angle_half_power_deg == 60.0);
    CHECK(cfg.aps.max_electrical_power_w == 15.0);
    CHECK(cfg.receiver.pd_area_m2 == 1e-4);
    CHECK(cfg.receiver.fov_half_angle_deg == 70.0);
    CHECK(cfg.receiver.responsivity_a_per_w == 0.5);
    CHECK(cfg.receiver.height_m == 0.85);
    CHECK(cfg.users.count == 20);
    CHECK(cfg.users.hp_fraction == 0.25);
    CHECK(cfg.users.hp_rate_req_bps == 12e6);
    CHECK(cfg.users.sp_rate_req_bps == 2e6);
    CHECK(cfg.users.outage_threshold_bps == 0.5e6);
    CHECK(cfg.noise.psd_a2_per_hz == 1e-22);
    CHECK(cfg.noise.bandwidth_hz == 20e6);
    CHECK(cfg.noise_variance_a2() == 1e-22 * 20e6);
    CHECK(cfg.noma.k_max == 10);
    CHECK(cfg.mobility.v_min_mps == 0.5);
    CHECK(cfg.mobility.v_max_mps == 1.5);
    CHECK(cfg.mobility.dt_s == 1.0);
    REQUIRE(cfg.dimming.levels.size() == 9);
    CHECK(cfg.dimming.levels.front() == 0.2);
    CHECK(cfg.dimming.levels.back() == 1.0);
    CHECK(cfg.handover.pingpong_window_s == 2.0);
    CHECK(cfg.handover.baseline_hysteresis_db == 3.0);
    CHECK(cfg.env.max_steps_per_episode == 100);
    CHECK(cfg.reward.w_qos == 2.5);
    CHECK(cfg.reward.w_stab == 0.75);
    CHECK(cfg.ppo.discount == 0.97);
    CHECK(cfg.ppo.gae_lambda == 0.95);
    CHECK(cfg.ppo.clip_epsilon == 0.2);
    CHECK(cfg.ppo.entropy_coef == 0.01);
    CHECK(cfg.ppo.actor_lr == 5e-4);
    CHECK(cfg.ppo.critic_lr == 1e-4);
    CHECK(cfg.ppo.rollout_steps == 2048);
    CHECK(cfg.ppo.total_steps == 1500000);
    CHECK(cfg.ppo.hidden_units == 256);
    CHECK(cfg.bo.w_min == 0.1);
    CHECK(cfg.bo.w_max == 5.0);
    CHECK(cfg.bo.n_trials == 81);
    CHECK(cfg.n_hp_users() == 5);
    CHECK(cfg.is_hp_user(4));
    CHECK_FALSE(cfg.is_hp_user(5));
    CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("JSON round trip preserves the configuration") {
    SimConfig cfg = default_config();
    cfg.noma.sic_mode = SicMode::literal_eq5;
    cfg.env.selection_head = SelectionHead::sigmoid_bernoulli;
    cfg.bo.tuner = TunerKind::grid;
    cfg.reward.w_qos = 1.25;
    SimConfig back = parse_config(config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(back.noma.sic_mode == SicMode::literal_eq5);
    CHECK(back.env.selection_head == SelectionHead::sigmoid_bernoulli);
    CHECK(back.bo.tuner == TunerKind::grid);
    CHECK(back.reward.w_qos == 1.25);
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("unknown keys are rejected at any level") {
    CHECK_THROWS_AS(parse_config(R"({"rooom": {}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"room": {"length": 4}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"ppo": {"lr": 1e-3}})"), std::invalid_argument);
}

TEST_CASE("partial configs overlay the defaults") {
    SimConfig cfg = parse_config(R"({"users": {"count": 10}})");
    CHECK(cfg.users.count == 10);
    CHECK(cfg.users.hp_rate_req_bps == 12e6);
    CHECK(cfg.n_aps() == 8);
}

TEST_CASE("malformed JSON and invalid values raise config errors") {
    CHECK_THROWS_AS(parse_config("{"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"room": {"length_m": -1}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"room": {"wall_reflectivity": 1.5}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"mobility": {"v_min_mps": 2.0, "v_max_mps": 1.0}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"noma": {"sic_mode": "bogus"}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"aps": {"positions_m": [[1, 1, 2.5]]}})"),
                    std::invalid_argument);  // AP not on the ceiling
    CHECK_THROWS_AS(parse_config(R"({"receiver": {"height_m": 3.5}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"env": {"neighbor_count": 8}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"dimming": {"levels": []}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"dimming": {"levels": [0.0, 1.0]}})"),
                    std::invalid_argument);
}

TEST_CASE("config hash tracks content") {
    SimConfig a = default_config();
    SimConfig b = default_config();
    CHECK(config_hash(a) == config_hash(b));
    b.users.count = 19;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("room height override re-pins the default AP grid") {
    SimConfig cfg = parse_config(R"({"room": {"height_m": 2.5}})");
    for (const Vec3& p : cfg.aps.positions_m) CHECK(p.z == 2.5);
}
