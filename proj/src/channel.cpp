#include "vlcsim/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vlcsim {

namespace {
constexpr double kPi = std::numbers::pi;
}

double lambertian_order(double phi_half_rad) {
    if (phi_half_rad <= 0.0 || phi_half_rad >= kPi / 2.0)
        throw std::domain_error("lambertian_order: semi-angle must lie in (0, pi/2)");
    return -std::log(2.0) / std::log(std::cos(phi_half_rad));
}

Radiometry make_radiometry(const SimConfig& cfg) {
    Radiometry rad;
    rad.lambertian_m = lambertian_order(deg_to_rad(cfg.aps.semi_angle_half_power_deg));
    rad.pd_area_m2 = cfg.receiver.pd_area_m2;
    rad.cos_fov = std::cos(deg_to_rad(cfg.receiver.fov_half_angle_deg));
    rad.optical_filter_gain = cfg.receiver.optical_filter_gain;
    rad.concentrator_gain = cfg.receiver.concentrator_gain;
    rad.responsivity_a_per_w = cfg.receiver.responsivity_a_per_w;
    return rad;
}

double los_gain(const Vec3& ap_pos, const Vec3& ue_pos, const Radiometry& rad) {
    const Vec3 diff = ap_pos - ue_pos;
    const double d = norm(diff);
    if (d == 0.0) throw std::invalid_argument("los_gain: transmitter and receiver coincide");
    // AP normal straight down, PD normal straight up: both angles share the
    // same cosine (vertical drop over distance).
    const double cos_angle = diff.z / d;
    if (cos_angle < rad.cos_fov) return 0.0;   // outside FOV (or receiver above AP)
    const double m = rad.lambertian_m;
    return (m + 1.0) * rad.pd_area_m2 / (2.0 * kPi * d * d) * std::pow(cos_angle, m) *
           rad.optical_filter_gain * rad.concentrator_gain * cos_angle;
}

PatchGrid::PatchGrid(const RoomConfig& room) {
    const double L = room.length_m, W = room.width_m, H = room.height_m;
    const double edge = room.patch_edge_m;

    auto cells = [edge](double extent) {
        return std::max<long>(1, std::lround(extent / edge));
    };

    // axis_u/axis_v span the surface; origin is its min corner.
    auto add_surface = [&](Vec3 origin, Vec3 axis_u, double len_u, Vec3 axis_v, double len_v,
                           Vec3 normal, double rho) {
        const long nu = cells(len_u), nv = cells(len_v);
        const double du = len_u / nu, dv = len_v / nv;
        for (long i = 0; i < nu; ++i) {
            for (long j = 0; j < nv; ++j) {
                Vec3 c = origin + axis_u * ((i + 0.5) * du) + axis_v * ((j + 0.5) * dv);
                patches_.push_back({c, normal, axis_u, axis_v, du, dv, du * dv, rho});
            }
        }
    };

    const double rho_w = room.wall_reflectivity;
    add_surface({0, 0, 0}, {0, 1, 0}, W, {0, 0, 1}, H, {1, 0, 0}, rho_w);    // x = 0
    add_surface({L, 0, 0}, {0, 1, 0}, W, {0, 0, 1}, H, {-1, 0, 0}, rho_w);   // x = L
    add_surface({0, 0, 0}, {1, 0, 0}, L, {0, 0, 1}, H, {0, 1, 0}, rho_w);    // y = 0
    add_surface({0, W, 0}, {1, 0, 0}, L, {0, 0, 1}, H, {0, -1, 0}, rho_w);   // y = W
    if (room.reflect_floor)
        add_surface({0, 0, 0}, {1, 0, 0}, L, {0, 1, 0}, W, {0, 0, 1}, room.floor_reflectivity);
    if (room.reflect_ceiling)
        add_surface({0, 0, H}, {1, 0, 0}, L, {0, 1, 0}, W, {0, 0, -1}, room.ceiling_reflectivity);
}

namespace {

// AP -> surface-point factor of the first-bounce term; geometry-static. The
// patch area lives in the user-side factor, so this is a per-area density.
double ap_side_density(const Vec3& ap_pos, const Vec3& point, const Vec3& normal,
                       double reflectivity, double m) {
    const Vec3 to_patch = point - ap_pos;
    const double d1 = norm(to_patch);
    if (d1 == 0.0) return 0.0;
    const double cos_phi1 = -to_patch.z / d1;              // AP normal (0,0,-1)
    const double cos_psi1 = dot(ap_pos - point, normal) / d1;
    if (cos_phi1 <= 0.0 || cos_psi1 <= 0.0) return 0.0;
    return (m + 1.0) * reflectivity * std::pow(cos_phi1, m) * cos_psi1 /
           (2.0 * kPi * kPi * d1 * d1);
}

double ap_patch_factor(const Vec3& ap_pos, const Patch& p, double m) {
    return ap_side_density(ap_pos, p.center, p.normal, p.reflectivity, m);
}

// Pointwise patch -> user integrand sampled at a surface point. `density` is
// the unclipped cos_phi2 * cos_psi2 / d2^2; `fov_margin` is cos_psi2 minus the
// FOV cosine so callers can treat the acceptance cutoff as a signed distance.
struct UserSample {
    double density;
    double fov_margin;
    double d2;
};

UserSample sample_user_side(const Vec3& point, const Vec3& normal, const Vec3& ue_pos,
                            const Radiometry& rad) {
    const Vec3 to_ue = ue_pos - point;
    const double d2 = norm(to_ue);
    if (d2 == 0.0) return {0.0, -1.0, 0.0};
    const double cos_phi2 = dot(to_ue, normal) / d2;
    const double cos_psi2 = (point.z - ue_pos.z) / d2;  // PD normal (0,0,1)
    const double margin = cos_psi2 - rad.cos_fov;
    if (cos_phi2 <= 0.0 || cos_psi2 <= 0.0) return {0.0, margin, d2};
    return {cos_phi2 * cos_psi2 / (d2 * d2), margin, d2};
}

// Integral of the user-side density over (part of) a patch, together with its
// first spatial moment. The moment locates where on the patch the received
// mass actually sits, so the AP-side factor can be evaluated there rather
// than at the patch center; for users close to a wall the mass concentrates
// in a millimetre-scale spot and the distinction dominates the result.
struct CellMass {
    double mass = 0.0;
    Vec3 moment{0.0, 0.0, 0.0};
    bool anchored = true;  // single unrefined midpoint sample at the cell center
};

// Recursive midpoint quadrature over one patch cell. Two features of the
// integrand defeat a plain one-point-per-patch midpoint rule: it varies on the
// scale of the cell-to-user distance (steep for users near a wall), and the
// FOV cutoff switches it off discontinuously along a curve across the wall.
// Cells close to the user, and cells straddling the cutoff, are split 2x2;
// straddling leaves weight the density by a linear estimate of the covered
// fraction instead of the raw on/off indicator. Refinement tracks the
// integrand, not the outer grid, so halving the patch edge leaves the sum
// nearly unchanged.
CellMass patch_cell_integral(const Patch& p, const Vec3& center, double eu, double ev,
                             const Vec3& ue_pos, const Radiometry& rad, int depth) {
    const UserSample sc = sample_user_side(center, p.normal, ue_pos, rad);
    const double span = std::max(eu, ev);
    // |grad cos_psi2| <= 2/d2, so the margin moves at most this much in-cell.
    const double drift =
        sc.d2 > 0.0 ? std::hypot(eu, ev) / sc.d2 : 2.0;
    if (sc.fov_margin <= -drift) return {};
    double coverage = 1.0;
    bool straddle = false;
    if (sc.fov_margin < drift) {
        double m_min = sc.fov_margin;
        double m_max = sc.fov_margin;
        for (double fu : {-0.5, 0.5})
            for (double fv : {-0.5, 0.5}) {
                const Vec3 corner = center + p.axis_u * (fu * eu) + p.axis_v * (fv * ev);
                const double m = sample_user_side(corner, p.normal, ue_pos, rad).fov_margin;
                m_min = std::min(m_min, m);
                m_max = std::max(m_max, m);
            }
        if (m_max < 0.0) return {};
        straddle = m_min < 0.0;
        if (straddle)
            coverage = std::clamp(0.5 + sc.fov_margin / (m_max - m_min), 0.0, 1.0);
    }
    const bool near_user = sc.d2 < 4.0 * span;
    // Near the user the cutoff curve bends on the scale of the distance
    // itself, so straddling cells there must resolve finer than 2 cm.
    const double straddle_span = std::min(0.02, sc.d2 / 16.0);
    if (depth < 14 && (near_user || (straddle && span > straddle_span))) {
        CellMass acc;
        acc.anchored = false;
        for (double fu : {-0.25, 0.25})
            for (double fv : {-0.25, 0.25}) {
                const CellMass c =
                    patch_cell_integral(p, center + p.axis_u * (fu * eu) + p.axis_v * (fv * ev),
                                        eu / 2, ev / 2, ue_pos, rad, depth + 1);
                acc.mass += c.mass;
                acc.moment = acc.moment + c.moment;
            }
        return acc;
    }
    if (sc.d2 < 8.0 * span) {
        // Leaf cells just outside the refinement shell still see noticeable
        // curvature; a 2x2 Gauss rule removes the residual midpoint bias.
        constexpr double g = 0.28867513459481287;  // 0.5 / sqrt(3)
        CellMass acc;
        acc.anchored = false;
        const double w = 0.25 * eu * ev * coverage;
        for (double fu : {-g, g})
            for (double fv : {-g, g}) {
                const Vec3 point = center + p.axis_u * (fu * eu) + p.axis_v * (fv * ev);
                const double m = w * sample_user_side(point, p.normal, ue_pos, rad).density;
                acc.mass += m;
                acc.moment = acc.moment + point * m;
            }
        return acc;
    }
    const double mass = sc.density * coverage * eu * ev;
    return {mass, center * mass, !straddle};
}

struct PatchUserFactor {
    double factor = 0.0;  // optics-scaled mass
    Vec3 point;           // where to evaluate the AP-side density
    bool anchored = true;
};

// patch -> user factor; shared across APs for a given user position.
PatchUserFactor patch_user_factor(const Patch& p, const Vec3& ue_pos, const Radiometry& rad) {
    const double optics = rad.pd_area_m2 * rad.optical_filter_gain * rad.concentrator_gain;
    const CellMass cm = patch_cell_integral(p, p.center, p.edge_u_m, p.edge_v_m, ue_pos, rad, 0);
    if (cm.mass <= 0.0 || cm.anchored) return {optics * cm.mass, p.center, true};
    return {optics * cm.mass, cm.moment * (1.0 / cm.mass), false};
}

} // namespace

double nlos_first_order_gain(const Vec3& ap_pos, const Vec3& ue_pos, const PatchGrid& grid,
                             const Radiometry& rad) {
    double sum = 0.0;
    for (const Patch& p : grid.patches()) {
        const PatchUserFactor f = patch_user_factor(p, ue_pos, rad);
        if (f.factor == 0.0) continue;
        sum += ap_side_density(ap_pos, f.point, p.normal, p.reflectivity, rad.lambertian_m) *
               f.factor;
    }
    return sum;
}

ChannelModel::ChannelModel(const SimConfig& cfg)
    : rad_(make_radiometry(cfg)), grid_(cfg.room), ap_positions_(cfg.aps.positions_m) {
    const auto& patches = grid_.patches();
    const int n_aps = static_cast<int>(ap_positions_.size());
    const int n_patches = static_cast<int>(patches.size());
    ap_patch_static_.resize(static_cast<size_t>(n_aps) * n_patches);
    for (int a = 0; a < n_aps; ++a)
        for (int p = 0; p < n_patches; ++p)
            ap_patch_static_[static_cast<size_t>(a) * n_patches + p] =
                ap_patch_factor(ap_positions_[a], patches[p], rad_.lambertian_m);

    const Vec3 nadir{ap_positions_[0].x, ap_positions_[0].y, cfg.receiver.height_m};
    nadir_los_gain_ = los_gain(ap_positions_[0], nadir, rad_);
}

ChannelMatrix ChannelModel::compute(const std::vector<Vec3>& ue_positions) const {
    const int n_aps = static_cast<int>(ap_positions_.size());
    const int n_users = static_cast<int>(ue_positions.size());
    const auto& patches = grid_.patches();
    const int n_patches = static_cast<int>(patches.size());

    ChannelMatrix cm;
    cm.n_aps = n_aps;
    cm.n_users = n_users;
    const size_t n = static_cast<size_t>(n_aps) * n_users;
    cm.h_los.resize(n);
    cm.h_nlos1.resize(n);
    cm.h_total.resize(n);
    cm.g.resize(n);

    std::vector<PatchUserFactor> patch_user(n_patches);
    const double resp = rad_.responsivity_a_per_w;
    for (int u = 0; u < n_users; ++u) {
        for (int p = 0; p < n_patches; ++p)
            patch_user[p] = patch_user_factor(patches[p], ue_positions[u], rad_);
        for (int a = 0; a < n_aps; ++a) {
            const double* stat = &ap_patch_static_[static_cast<size_t>(a) * n_patches];
            double nlos = 0.0;
            for (int p = 0; p < n_patches; ++p) {
                const PatchUserFactor& f = patch_user[p];
                if (f.factor == 0.0) continue;
                // The cached AP-side table holds the patch-center value; it
                // only applies when the user-side mass sits at the center.
                const double s = f.anchored
                                     ? stat[p]
                                     : ap_side_density(ap_positions_[a], f.point,
                                                       patches[p].normal, patches[p].reflectivity,
                                                       rad_.lambertian_m);
                nlos += s * f.factor;
            }
            const double los = los_gain(ap_positions_[a], ue_positions[u], rad_);
            const size_t idx = static_cast<size_t>(a) * n_users + u;
            cm.h_los[idx] = los;
            cm.h_nlos1[idx] = nlos;
            cm.h_total[idx] = los + nlos;
            cm.g[idx] = (resp * (los + nlos)) * (resp * (los + nlos));
        }
    }
    return cm;
}

ChannelMatrix build_channel_matrix(const SimConfig& cfg, const std::vector<Vec3>& ue_positions) {
    return ChannelModel(cfg).compute(ue_positions);
}

} // namespace vlcsim
