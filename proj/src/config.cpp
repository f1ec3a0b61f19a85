#include "vlcsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vlcsim {

using nlohmann::json;

SimConfig default_config() {
    SimConfig cfg;
    cfg.aps.positions_m.clear();
    for (double x : {1.0, 3.0})
        for (double y : {1.0, 3.0, 5.0, 7.0})
            cfg.aps.positions_m.push_back({x, y, cfg.room.height_m});
    return cfg;
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

void require(bool ok, const std::string& msg) {
    if (!ok) bad(msg);
}

// Rejects keys outside the declared set so typos fail loudly instead of
// silently falling back to defaults.
void check_keys(const json& j, const std::string& section, const std::set<std::string>& known) {
    if (!j.is_object()) bad("section '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            bad("unknown key '" + section + "." + it.key() + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

std::string sic_mode_name(SicMode m) {
    return m == SicMode::standard ? "standard" : "literal_eq5";
}
SicMode sic_mode_from(const std::string& s) {
    if (s == "standard") return SicMode::standard;
    if (s == "literal_eq5") return SicMode::literal_eq5;
    bad("noma.sic_mode must be 'standard' or 'literal_eq5', got '" + s + "'");
}

std::string selection_head_name(SelectionHead h) {
    return h == SelectionHead::softmax_bernoulli ? "softmax_bernoulli" : "sigmoid_bernoulli";
}
SelectionHead selection_head_from(const std::string& s) {
    if (s == "softmax_bernoulli") return SelectionHead::softmax_bernoulli;
    if (s == "sigmoid_bernoulli") return SelectionHead::sigmoid_bernoulli;
    bad("env.selection_head must be 'softmax_bernoulli' or 'sigmoid_bernoulli', got '" + s + "'");
}

std::string tuner_name(TunerKind t) { return t == TunerKind::bo ? "bo" : "grid"; }
TunerKind tuner_from(const std::string& s) {
    if (s == "bo") return TunerKind::bo;
    if (s == "grid") return TunerKind::grid;
    bad("bo.tuner must be 'bo' or 'grid', got '" + s + "'");
}

} // namespace

void validate_config(const SimConfig& cfg) {
    const auto& r = cfg.room;
    require(r.length_m > 0 && r.width_m > 0 && r.height_m > 0, "room dimensions must be positive");
    for (double rho : {r.wall_reflectivity, r.floor_reflectivity, r.ceiling_reflectivity})
        require(rho >= 0.0 && rho <= 1.0, "reflectivities must lie in [0, 1]");
    require(r.patch_edge_m > 0, "room.patch_edge_m must be positive");
    require(r.patch_edge_m <= r.length_m && r.patch_edge_m <= r.width_m &&
                r.patch_edge_m <= r.height_m,
            "room.patch_edge_m must fit at least one patch on every surface");

    require(!cfg.aps.positions_m.empty(), "at least one AP position is required");
    for (const Vec3& p : cfg.aps.positions_m) {
        require(p.x >= 0 && p.x <= r.length_m && p.y >= 0 && p.y <= r.width_m,
                "AP positions must lie within the room footprint");
        require(p.z == r.height_m, "AP z-coordinates must equal the room height");
    }
    require(cfg.aps.semi_angle_half_power_deg > 0 && cfg.aps.semi_angle_half_power_deg < 90,
            "aps.semi_angle_half_power_deg must lie in (0, 90)");
    require(cfg.aps.max_electrical_power_w > 0, "aps.max_electrical_power_w must be positive");

    const auto& rx = cfg.receiver;
    require(rx.pd_area_m2 > 0, "receiver.pd_area_m2 must be positive");
    require(rx.fov_half_angle_deg > 0 && rx.fov_half_angle_deg <= 90,
            "receiver.fov_half_angle_deg must lie in (0, 90]");
    require(rx.optical_filter_gain > 0 && rx.concentrator_gain > 0 && rx.responsivity_a_per_w > 0,
            "receiver gains and responsivity must be positive");
    require(rx.height_m > 0 && rx.height_m < r.height_m,
            "receiver.height_m must lie strictly between floor and ceiling");

    require(cfg.users.count >= 0, "users.count must be nonnegative");
    require(cfg.users.hp_fraction >= 0 && cfg.users.hp_fraction <= 1,
            "users.hp_fraction must lie in [0, 1]");
    require(cfg.users.hp_rate_req_bps > 0 && cfg.users.sp_rate_req_bps > 0 &&
                cfg.users.outage_threshold_bps > 0,
            "user rate requirements must be positive");

    require(cfg.noise.psd_a2_per_hz > 0 && cfg.noise.bandwidth_hz > 0,
            "noise PSD and bandwidth must be positive");

    require(cfg.noma.k_max >= 1, "noma.k_max must be at least 1");

    require(cfg.mobility.v_min_mps > 0 && cfg.mobility.v_max_mps >= cfg.mobility.v_min_mps,
            "mobility speeds must satisfy 0 < v_min <= v_max");
    require(cfg.mobility.dt_s > 0, "mobility.dt_s must be positive");

    require(!cfg.dimming.levels.empty(), "dimming.levels must be non-empty");
    for (double g : cfg.dimming.levels)
        require(g > 0 && g <= 1.0, "dimming levels must lie in (0, 1]");

    require(cfg.handover.pingpong_window_s >= 0, "handover.pingpong_window_s must be >= 0");
    require(cfg.handover.baseline_hysteresis_db >= 0,
            "handover.baseline_hysteresis_db must be >= 0");

    require(cfg.env.max_steps_per_episode >= 1, "env.max_steps_per_episode must be at least 1");
    require(cfg.env.neighbor_count >= 0 &&
                cfg.env.neighbor_count <= cfg.n_aps() - 1,
            "env.neighbor_count must lie in [0, n_aps - 1]");

    const auto& w = cfg.reward;
    for (double v : {w.w_qos, w.w_stab, w.w_hp_met, w.w_outage, w.w_ho, w.w_pp, w.w_thr})
        require(v >= 0, "reward weights must be non-negative");
    require(w.rate_norm_bps >= 0, "reward.rate_norm_bps must be >= 0 (0 derives the default)");

    const auto& p = cfg.ppo;
    require(p.discount > 0 && p.discount <= 1, "ppo.discount must lie in (0, 1]");
    require(p.gae_lambda >= 0 && p.gae_lambda <= 1, "ppo.gae_lambda must lie in [0, 1]");
    require(p.clip_epsilon > 0, "ppo.clip_epsilon must be positive");
    require(p.entropy_coef >= 0, "ppo.entropy_coef must be >= 0");
    require(p.actor_lr > 0 && p.critic_lr > 0, "ppo learning rates must be positive");
    require(p.rollout_steps >= 1, "ppo.rollout_steps must be at least 1");
    require(p.epochs_per_update >= 1, "ppo.epochs_per_update must be at least 1");
    require(p.minibatch_size >= 1, "ppo.minibatch_size must be at least 1");
    require(p.total_steps >= 0, "ppo.total_steps must be >= 0");
    require(p.hidden_units >= 1, "ppo.hidden_units must be at least 1");

    const auto& b = cfg.bo;
    require(b.w_min > 0 && b.w_max > b.w_min, "bo weight bounds must satisfy 0 < w_min < w_max");
    require(b.n_init >= 2, "bo.n_init must be at least 2");
    require(b.n_trials >= b.n_init, "bo.n_trials must be >= bo.n_init");
    require(b.trial_train_steps >= 0, "bo.trial_train_steps must be >= 0");
    require(b.trial_eval_episodes >= 1, "bo.trial_eval_episodes must be at least 1");
    require(b.trial_algo == "mappo" || b.trial_algo == "cenppo",
            "bo.trial_algo must be 'mappo' or 'cenppo'");
    require(b.rate_max_bps >= 0, "bo.rate_max_bps must be >= 0 (0 derives the default)");
}

std::string config_to_json(const SimConfig& cfg) {
    json j;
    const auto& r = cfg.room;
    j["room"] = {{"length_m", r.length_m},
                 {"width_m", r.width_m},
                 {"height_m", r.height_m},
                 {"wall_reflectivity", r.wall_reflectivity},
                 {"floor_reflectivity", r.floor_reflectivity},
                 {"ceiling_reflectivity", r.ceiling_reflectivity},
                 {"patch_edge_m", r.patch_edge_m},
                 {"reflect_floor", r.reflect_floor},
                 {"reflect_ceiling", r.reflect_ceiling}};

    json positions = json::array();
    for (const Vec3& p : cfg.aps.positions_m) positions.push_back({p.x, p.y, p.z});
    j["aps"] = {{"positions_m", positions},
                {"semi_angle_half_power_deg", cfg.aps.semi_angle_half_power_deg},
                {"max_electrical_power_w", cfg.aps.max_electrical_power_w}};

    const auto& rx = cfg.receiver;
    j["receiver"] = {{"pd_area_m2", rx.pd_area_m2},
                     {"fov_half_angle_deg", rx.fov_half_angle_deg},
                     {"optical_filter_gain", rx.optical_filter_gain},
                     {"concentrator_gain", rx.concentrator_gain},
                     {"responsivity_a_per_w", rx.responsivity_a_per_w},
                     {"height_m", rx.height_m}};

    j["users"] = {{"count", cfg.users.count},
                  {"hp_fraction", cfg.users.hp_fraction},
                  {"hp_rate_req_bps", cfg.users.hp_rate_req_bps},
                  {"sp_rate_req_bps", cfg.users.sp_rate_req_bps},
                  {"outage_threshold_bps", cfg.users.outage_threshold_bps}};

    j["noise"] = {{"psd_a2_per_hz", cfg.noise.psd_a2_per_hz},
                  {"bandwidth_hz", cfg.noise.bandwidth_hz}};

    j["noma"] = {{"k_max", cfg.noma.k_max}, {"sic_mode", sic_mode_name(cfg.noma.sic_mode)}};

    j["mobility"] = {{"v_min_mps", cfg.mobility.v_min_mps},
                     {"v_max_mps", cfg.mobility.v_max_mps},
                     {"dt_s", cfg.mobility.dt_s}};

    j["dimming"] = {{"levels", cfg.dimming.levels}};

    j["handover"] = {{"pingpong_window_s", cfg.handover.pingpong_window_s},
                     {"baseline_hysteresis_db", cfg.handover.baseline_hysteresis_db}};

    j["env"] = {{"max_steps_per_episode", cfg.env.max_steps_per_episode},
                {"neighbor_count", cfg.env.neighbor_count},
                {"selection_head", selection_head_name(cfg.env.selection_head)}};

    const auto& w = cfg.reward;
    j["reward"] = {{"w_qos", w.w_qos},       {"w_stab", w.w_stab}, {"w_hp_met", w.w_hp_met},
                   {"w_outage", w.w_outage}, {"w_ho", w.w_ho},     {"w_pp", w.w_pp},
                   {"w_thr", w.w_thr},       {"rate_norm_bps", w.rate_norm_bps}};

    const auto& p = cfg.ppo;
    j["ppo"] = {{"discount", p.discount},
                {"gae_lambda", p.gae_lambda},
                {"clip_epsilon", p.clip_epsilon},
                {"entropy_coef", p.entropy_coef},
                {"actor_lr", p.actor_lr},
                {"critic_lr", p.critic_lr},
                {"rollout_steps", p.rollout_steps},
                {"epochs_per_update", p.epochs_per_update},
                {"minibatch_size", p.minibatch_size},
                {"total_steps", p.total_steps},
                {"hidden_units", p.hidden_units}};

    const auto& b = cfg.bo;
    j["bo"] = {{"w_min", b.w_min},
               {"w_max", b.w_max},
               {"n_init", b.n_init},
               {"n_trials", b.n_trials},
               {"trial_train_steps", b.trial_train_steps},
               {"trial_eval_episodes", b.trial_eval_episodes},
               {"trial_algo", b.trial_algo},
               {"rate_max_bps", b.rate_max_bps},
               {"tuner", tuner_name(b.tuner)}};

    return j.dump(2) + "\n";
}

SimConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad(std::string("JSON parse error: ") + e.what());
    }
    check_keys(j, "<root>",
               {"room", "aps", "receiver", "users", "noise", "noma", "mobility", "dimming",
                "handover", "env", "reward", "ppo", "bo"});

    SimConfig cfg = default_config();

    if (j.contains("room")) {
        const json& s = j["room"];
        check_keys(s, "room",
                   {"length_m", "width_m", "height_m", "wall_reflectivity", "floor_reflectivity",
                    "ceiling_reflectivity", "patch_edge_m", "reflect_floor", "reflect_ceiling"});
        auto& r = cfg.room;
        read(s, "length_m", r.length_m);
        read(s, "width_m", r.width_m);
        read(s, "height_m", r.height_m);
        read(s, "wall_reflectivity", r.wall_reflectivity);
        read(s, "floor_reflectivity", r.floor_reflectivity);
        read(s, "ceiling_reflectivity", r.ceiling_reflectivity);
        read(s, "patch_edge_m", r.patch_edge_m);
        read(s, "reflect_floor", r.reflect_floor);
        read(s, "reflect_ceiling", r.reflect_ceiling);
        // The default AP grid hangs from the default ceiling; if the room height
        // changed and the APs were not overridden, re-pin them to the new ceiling.
        if (!j.contains("aps") || !j["aps"].contains("positions_m"))
            for (Vec3& p : cfg.aps.positions_m) p.z = r.height_m;
    }

    if (j.contains("aps")) {
        const json& s = j["aps"];
        check_keys(s, "aps", {"positions_m", "semi_angle_half_power_deg", "max_electrical_power_w"});
        if (s.contains("positions_m")) {
            cfg.aps.positions_m.clear();
            for (const json& pj : s.at("positions_m")) {
                if (!pj.is_array() || pj.size() != 3)
                    bad("aps.positions_m entries must be [x, y, z] triples");
                cfg.aps.positions_m.push_back(
                    {pj[0].get<double>(), pj[1].get<double>(), pj[2].get<double>()});
            }
        }
        read(s, "semi_angle_half_power_deg", cfg.aps.semi_angle_half_power_deg);
        read(s, "max_electrical_power_w", cfg.aps.max_electrical_power_w);
    }

    if (j.contains("receiver")) {
        const json& s = j["receiver"];
        check_keys(s, "receiver",
                   {"pd_area_m2", "fov_half_angle_deg", "optical_filter_gain", "concentrator_gain",
                    "responsivity_a_per_w", "height_m"});
        auto& rx = cfg.receiver;
        read(s, "pd_area_m2", rx.pd_area_m2);
        read(s, "fov_half_angle_deg", rx.fov_half_angle_deg);
        read(s, "optical_filter_gain", rx.optical_filter_gain);
        read(s, "concentrator_gain", rx.concentrator_gain);
        read(s, "responsivity_a_per_w", rx.responsivity_a_per_w);
        read(s, "height_m", rx.height_m);
    }

    if (j.contains("users")) {
        const json& s = j["users"];
        check_keys(s, "users",
                   {"count", "hp_fraction", "hp_rate_req_bps", "sp_rate_req_bps",
                    "outage_threshold_bps"});
        auto& u = cfg.users;
        read(s, "count", u.count);
        read(s, "hp_fraction", u.hp_fraction);
        read(s, "hp_rate_req_bps", u.hp_rate_req_bps);
        read(s, "sp_rate_req_bps", u.sp_rate_req_bps);
        read(s, "outage_threshold_bps", u.outage_threshold_bps);
    }

    if (j.contains("noise")) {
        const json& s = j["noise"];
        check_keys(s, "noise", {"psd_a2_per_hz", "bandwidth_hz"});
        read(s, "psd_a2_per_hz", cfg.noise.psd_a2_per_hz);
        read(s, "bandwidth_hz", cfg.noise.bandwidth_hz);
    }

    if (j.contains("noma")) {
        const json& s = j["noma"];
        check_keys(s, "noma", {"k_max", "sic_mode"});
        read(s, "k_max", cfg.noma.k_max);
        if (s.contains("sic_mode"))
            cfg.noma.sic_mode = sic_mode_from(s.at("sic_mode").get<std::string>());
    }

    if (j.contains("mobility")) {
        const json& s = j["mobility"];
        check_keys(s, "mobility", {"v_min_mps", "v_max_mps", "dt_s"});
        read(s, "v_min_mps", cfg.mobility.v_min_mps);
        read(s, "v_max_mps", cfg.mobility.v_max_mps);
        read(s, "dt_s", cfg.mobility.dt_s);
    }

    if (j.contains("dimming")) {
        const json& s = j["dimming"];
        check_keys(s, "dimming", {"levels"});
        if (s.contains("levels")) cfg.dimming.levels = s.at("levels").get<std::vector<double>>();
    }

    if (j.contains("handover")) {
        const json& s = j["handover"];
        check_keys(s, "handover", {"pingpong_window_s", "baseline_hysteresis_db"});
        read(s, "pingpong_window_s", cfg.handover.pingpong_window_s);
        read(s, "baseline_hysteresis_db", cfg.handover.baseline_hysteresis_db);
    }

    if (j.contains("env")) {
        const json& s = j["env"];
        check_keys(s, "env", {"max_steps_per_episode", "neighbor_count", "selection_head"});
        read(s, "max_steps_per_episode", cfg.env.max_steps_per_episode);
        read(s, "neighbor_count", cfg.env.neighbor_count);
        if (s.contains("selection_head"))
            cfg.env.selection_head = selection_head_from(s.at("selection_head").get<std::string>());
    }

    if (j.contains("reward")) {
        const json& s = j["reward"];
        check_keys(s, "reward",
                   {"w_qos", "w_stab", "w_hp_met", "w_outage", "w_ho", "w_pp", "w_thr",
                    "rate_norm_bps"});
        auto& w = cfg.reward;
        read(s, "w_qos", w.w_qos);
        read(s, "w_stab", w.w_stab);
        read(s, "w_hp_met", w.w_hp_met);
        read(s, "w_outage", w.w_outage);
        read(s, "w_ho", w.w_ho);
        read(s, "w_pp", w.w_pp);
        read(s, "w_thr", w.w_thr);
        read(s, "rate_norm_bps", w.rate_norm_bps);
    }

    if (j.contains("ppo")) {
        const json& s = j["ppo"];
        check_keys(s, "ppo",
                   {"discount", "gae_lambda", "clip_epsilon", "entropy_coef", "actor_lr",
                    "critic_lr", "rollout_steps", "epochs_per_update", "minibatch_size",
                    "total_steps", "hidden_units"});
        auto& p = cfg.ppo;
        read(s, "discount", p.discount);
        read(s, "gae_lambda", p.gae_lambda);
        read(s, "clip_epsilon", p.clip_epsilon);
        read(s, "entropy_coef", p.entropy_coef);
        read(s, "actor_lr", p.actor_lr);
        read(s, "critic_lr", p.critic_lr);
        read(s, "rollout_steps", p.rollout_steps);
        read(s, "epochs_per_update", p.epochs_per_update);
        read(s, "minibatch_size", p.minibatch_size);
        read(s, "total_steps", p.total_steps);
        read(s, "hidden_units", p.hidden_units);
    }

    if (j.contains("bo")) {
        const json& s = j["bo"];
        check_keys(s, "bo",
                   {"w_min", "w_max", "n_init", "n_trials", "trial_train_steps",
                    "trial_eval_episodes", "trial_algo", "rate_max_bps", "tuner"});
        auto& b = cfg.bo;
        read(s, "w_min", b.w_min);
        read(s, "w_max", b.w_max);
        read(s, "n_init", b.n_init);
        read(s, "n_trials", b.n_trials);
        read(s, "trial_train_steps", b.trial_train_steps);
        read(s, "trial_eval_episodes", b.trial_eval_episodes);
        read(s, "trial_algo", b.trial_algo);
        read(s, "rate_max_bps", b.rate_max_bps);
        if (s.contains("tuner")) b.tuner = tuner_from(s.at("tuner").get<std::string>());
    }

    validate_config(cfg);
    return cfg;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void save_config(const SimConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) bad("cannot write '" + path + "'");
    out << config_to_json(cfg);
}

std::string config_hash(const SimConfig& cfg) {
    const std::string text = config_to_json(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace vlcsim
