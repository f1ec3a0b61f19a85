#pragma once

#include <vector>

#include "vlcsim/config.hpp"
#include "vlcsim/geometry.hpp"

namespace vlcsim {

// Transmit/receive optics bundled for the channel equations. APs radiate
// straight down, photodiodes face straight up.
struct Radiometry {
    double lambertian_m = 1.0;
    double pd_area_m2 = 1e-4;
    double cos_fov = 0.0;           // cos of the FOV half-angle
    double optical_filter_gain = 1.0;
    double concentrator_gain = 1.0;
    double responsivity_a_per_w = 0.5;
};

Radiometry make_radiometry(const SimConfig& cfg);

// m = -ln(2)/ln(cos(phi_half)); throws std::domain_error outside (0, pi/2).
double lambertian_order(double phi_half_rad);

// Line-of-sight DC gain of the generalized Lambertian link. Returns 0 when the
// incidence angle exceeds the FOV; throws std::invalid_argument when the two
// positions coincide.
double los_gain(const Vec3& ap_pos, const Vec3& ue_pos, const Radiometry& rad);

struct Patch {
    Vec3 center;
    Vec3 normal;        // inward-facing
    Vec3 axis_u;        // in-plane unit axes spanning the patch
    Vec3 axis_v;
    double edge_u_m;
    double edge_v_m;
    double area_m2;
    double reflectivity;
};

// Discretizes the room surfaces into reflection patches. Walls are always
// included; floor and ceiling only when the room config asks for them. Cell
// counts round to the nearest integer so the grid always tiles the full
// surface even when the edge length does not divide the dimensions.
class PatchGrid {
public:
    explicit PatchGrid(const RoomConfig& room);
    const std::vector<Patch>& patches() const { return patches_; }

private:
    std::vector<Patch> patches_;
};

// First-bounce diffuse gain: midpoint Riemann sum of the two-segment
// Lambertian product over all patches. Reference implementation; the
// ChannelModel below computes the same sum with the AP-side factors cached.
double nlos_first_order_gain(const Vec3& ap_pos, const Vec3& ue_pos, const PatchGrid& grid,
                             const Radiometry& rad);

struct ChannelMatrix {
    int n_aps = 0;
    int n_users = 0;
    std::vector<double> h_los;     // row-major [ap * n_users + user]
    std::vector<double> h_nlos1;
    std::vector<double> h_total;
    std::vector<double> g;         // electrical power gain (R * H_total)^2

    double los(int a, int u) const { return h_los[a * n_users + u]; }
    double nlos1(int a, int u) const { return h_nlos1[a * n_users + u]; }
    double total(int a, int u) const { return h_total[a * n_users + u]; }
    double gain(int a, int u) const { return g[a * n_users + u]; }
};

// Owns the patch grid and the per-(AP, patch) static factors so a per-step
// channel rebuild only evaluates the patch-to-user side once per user and
// reuses it across APs.
class ChannelModel {
public:
    explicit ChannelModel(const SimConfig& cfg);

    ChannelMatrix compute(const std::vector<Vec3>& ue_positions) const;

    const Radiometry& radiometry() const { return rad_; }
    const PatchGrid& grid() const { return grid_; }
    const std::vector<Vec3>& ap_positions() const { return ap_positions_; }

    // Largest LoS gain achievable in this geometry (user at an AP's nadir);
    // used to normalize gain observations.
    double nadir_los_gain() const { return nadir_los_gain_; }

private:
    Radiometry rad_;
    PatchGrid grid_;
    std::vector<Vec3> ap_positions_;
    std::vector<double> ap_patch_static_;   // [ap * n_patches + patch]
    double nadir_los_gain_ = 0.0;
};

// Convenience wrapper used by tests: builds a throwaway model and evaluates it.
ChannelMatrix build_channel_matrix(const SimConfig& cfg, const std::vector<Vec3>& ue_positions);

} // namespace vlcsim
