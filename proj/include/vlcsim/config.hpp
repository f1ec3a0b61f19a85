#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vlcsim/geometry.hpp"

namespace vlcsim {

struct RoomConfig {
    double length_m = 4.0;
    double width_m = 8.0;
    double height_m = 3.0;
    double wall_reflectivity = 0.8;
    double floor_reflectivity = 0.3;
    double ceiling_reflectivity = 0.8;
    double patch_edge_m = 0.25;
    bool reflect_floor = false;
    bool reflect_ceiling = false;
};

struct ApConfig {
    std::vector<Vec3> positions_m;          // z is forced to room height
    double semi_angle_half_power_deg = 60.0;
    double max_electrical_power_w = 15.0;
};

struct ReceiverConfig {
    double pd_area_m2 = 1e-4;
    double fov_half_angle_deg = 70.0;
    double optical_filter_gain = 1.0;
    double concentrator_gain = 1.0;
    double responsivity_a_per_w = 0.5;
    double height_m = 0.85;
};

struct UserConfig {
    int count = 20;
    double hp_fraction = 0.25;
    double hp_rate_req_bps = 12e6;
    double sp_rate_req_bps = 2e6;
    double outage_threshold_bps = 0.5e6;
};

struct NoiseConfig {
    double psd_a2_per_hz = 1e-22;
    double bandwidth_hz = 20e6;
};

enum class SicMode { standard, literal_eq5 };

struct NomaConfig {
    int k_max = 10;
    SicMode sic_mode = SicMode::standard;
};

struct MobilityConfig {
    double v_min_mps = 0.5;
    double v_max_mps = 1.5;
    double dt_s = 1.0;
};

struct DimmingConfig {
    std::vector<double> levels = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

struct HandoverConfig {
    double pingpong_window_s = 2.0;
    double baseline_hysteresis_db = 3.0;
};

enum class SelectionHead { softmax_bernoulli, sigmoid_bernoulli };

struct EnvConfig {
    int max_steps_per_episode = 100;
    int neighbor_count = 2;
    SelectionHead selection_head = SelectionHead::softmax_bernoulli;
};

struct RewardConfig {
    double w_qos = 2.5;
    double w_stab = 0.75;
    double w_hp_met = 1.0;
    double w_outage = 0.5;
    double w_ho = 0.2;
    double w_pp = 0.3;
    double w_thr = 0.1;
    double rate_norm_bps = 0.0;   // 0 means derive n_users * hp_rate_req
};

struct PpoConfig {
    double discount = 0.97;
    double gae_lambda = 0.95;
    double clip_epsilon = 0.2;
    double entropy_coef = 0.01;
    double actor_lr = 5e-4;
    double critic_lr = 1e-4;
    int rollout_steps = 2048;
    int epochs_per_update = 4;
    int minibatch_size = 256;
    std::int64_t total_steps = 1500000;
    int hidden_units = 256;
};

enum class TunerKind { bo, grid };

struct BoConfig {
    double w_min = 0.1;
    double w_max = 5.0;
    int n_init = 10;
    int n_trials = 81;
    std::int64_t trial_train_steps = 100000;
    int trial_eval_episodes = 20;
    std::string trial_algo = "mappo";
    double rate_max_bps = 0.0;    // 0 means derive n_users * hp_rate_req
    TunerKind tuner = TunerKind::bo;
};

struct SimConfig {
    RoomConfig room;
    ApConfig aps;
    ReceiverConfig receiver;
    UserConfig users;
    NoiseConfig noise;
    NomaConfig noma;
    MobilityConfig mobility;
    DimmingConfig dimming;
    HandoverConfig handover;
    EnvConfig env;
    RewardConfig reward;
    PpoConfig ppo;
    BoConfig bo;

    int n_aps() const { return static_cast<int>(aps.positions_m.size()); }
    double noise_variance_a2() const { return noise.psd_a2_per_hz * noise.bandwidth_hz; }
    double rate_norm_bps() const {
        return reward.rate_norm_bps > 0.0 ? reward.rate_norm_bps
                                          : users.count * users.hp_rate_req_bps;
    }
    int n_hp_users() const {
        return static_cast<int>(std::ceil(users.hp_fraction * users.count));
    }
    bool is_hp_user(int user) const { return user < n_hp_users(); }
};

// Table I defaults: 4x8x3 room, 8 APs on the 2x4 grid x in {1,3}, y in {1,3,5,7}.
SimConfig default_config();

// Throws std::invalid_argument with a descriptive message on any violation.
void validate_config(const SimConfig& cfg);

// Strict JSON round trip: unknown keys are rejected on load.
SimConfig load_config(const std::string& path);
SimConfig parse_config(const std::string& json_text);
std::string config_to_json(const SimConfig& cfg);
void save_config(const SimConfig& cfg, const std::string& path);

// FNV-1a over the canonical JSON form, for run manifests.
std::string config_hash(const SimConfig& cfg);

} // namespace vlcsim
