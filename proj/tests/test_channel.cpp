#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "test_util.hpp"
#include "vlcsim/channel.hpp"
#include "vlcsim/config.hpp"
#include "vlcsim/rng.hpp"

using namespace vlcsim;

namespace {
// Hand-derived reference values for the Table I geometry (AP at ceiling 3 m,
// receiver plane 0.85 m, semi-angle 60 deg, A_PD = 1e-4 m^2, T_s = g = 1).
constexpr double kNadirLos = 6.8860981326942278e-06;   // 2e-4 / (2*pi*2.15^2)
constexpr double kOrder30Deg = 4.8188416793064199;     // -ln2 / ln(cos 30 deg)
constexpr double kOblique45Los = 1.7215245331735574e-06;
} // namespace

TEST_CASE("lambertian order: half-power semi-angle of 60 degrees gives order 1") {
    CHECK(std::abs(lambertian_order(deg_to_rad(60.0)) - 1.0) <= 1e-12);
}

TEST_CASE("lambertian order: 30 degrees reference value") {
    CHECK(rel_close(lambertian_order(deg_to_rad(30.0)), kOrder30Deg, 1e-12));
}

TEST_CASE("lambertian order: rejects degenerate angles") {
    CHECK_THROWS_AS(lambertian_order(0.0), std::domain_error);
    CHECK_THROWS_AS(lambertian_order(-0.1), std::domain_error);
    CHECK_THROWS_AS(lambertian_order(deg_to_rad(90.0)), std::domain_error);
    CHECK_THROWS_AS(lambertian_order(deg_to_rad(120.0)), std::domain_error);
}

TEST_CASE("LoS gain at nadir matches the closed form") {
    SimConfig cfg = default_config();
    Radiometry rad = make_radiometry(cfg);
    const Vec3 ap{1.0, 1.0, 3.0};
    const Vec3 ue{1.0, 1.0, 0.85};
    CHECK(rel_close(los_gain(ap, ue, rad), kNadirLos, 1e-3));   // acceptance tolerance
    CHECK(rel_close(los_gain(ap, ue, rad), kNadirLos, 1e-12));  // tight
}

TEST_CASE("LoS gain at 45-degree obliquity matches hand value") {
    SimConfig cfg = default_config();
    Radiometry rad = make_radiometry(cfg);
    const Vec3 ap{1.0, 1.0, 3.0};
    const Vec3 ue{1.0 + 2.15, 1.0, 0.85};
    CHECK(rel_close(los_gain(ap, ue, rad), kOblique45Los, 1e-12));
}

TEST_CASE("LoS gain is zero beyond the FOV half-angle") {
    SimConfig cfg = default_config();
    Radiometry rad = make_radiometry(cfg);
    const Vec3 ap{1.0, 1.0, 3.0};
    // tan(70 deg) * 2.15 = 5.907 m is the FOV edge on the receiver plane.
    CHECK(los_gain(ap, {1.0, 1.0 + 5.91, 0.85}, rad) == 0.0);
    CHECK(los_gain(ap, {1.0, 1.0 + 5.90, 0.85}, rad) > 0.0);
    // Receiver above the AP: no geometric path.
    CHECK(los_gain(ap, {1.0, 2.0, 3.5}, rad) == 0.0);
}

TEST_CASE("LoS gain rejects coincident endpoints") {
    SimConfig cfg = default_config();
    Radiometry rad = make_radiometry(cfg);
    CHECK_THROWS_AS(los_gain({1, 1, 3}, {1, 1, 3}, rad), std::invalid_argument);
}

TEST_CASE("patch grid tiles the four walls of the default room") {
    SimConfig cfg = default_config();
    PatchGrid grid(cfg.room);
    // Walls: 2 * (32x12) + 2 * (16x12) at 0.25 m edge.
    CHECK(grid.patches().size() == 1152);
    double area = 0.0;
    for (const Patch& p : grid.patches()) area += p.area_m2;
    // Total wall area: 2*(8*3) + 2*(4*3) = 72 m^2.
    CHECK(rel_close(area, 72.0, 1e-12));
}

TEST_CASE("patch grid adds floor and ceiling only when asked") {
    SimConfig cfg = default_config();
    cfg.room.reflect_floor = true;
    cfg.room.reflect_ceiling = true;
    PatchGrid grid(cfg.room);
    // + 2 * (16x32) horizontal surfaces.
    CHECK(grid.patches().size() == 1152 + 2 * 512);
}

TEST_CASE("first-order diffuse gain is positive and below the nadir LoS gain") {
    SimConfig cfg = default_config();
    Radiometry rad = make_radiometry(cfg);
    PatchGrid grid(cfg.room);
    Rng rng(42);
    for (int i = 0; i < 10; ++i) {
        const Vec3 ap = cfg.aps.positions_m[rng.uniform_int(8)];
        const Vec3 ue{rng.uniform(0.0, 4.0), rng.uniform(0.0, 8.0), 0.85};
        const double nlos = nlos_first_order_gain(ap, ue, grid, rad);
        CHECK(nlos >= 0.0);
        CHECK(nlos < kNadirLos);
    }
}

TEST_CASE("diffuse gain converges as the patch grid is refined") {
    SimConfig cfg = default_config();
    Radiometry rad = make_radiometry(cfg);
    PatchGrid coarse(cfg.room);
    RoomConfig fine_room = cfg.room;
    fine_room.patch_edge_m = 0.125;
    PatchGrid fine(fine_room);
    Rng rng(7);
    for (int i = 0; i < 3; ++i) {
        const Vec3 ap = cfg.aps.positions_m[rng.uniform_int(8)];
        const Vec3 ue{rng.uniform(0.0, 4.0), rng.uniform(0.0, 8.0), 0.85};
        const double g_coarse = nlos_first_order_gain(ap, ue, coarse, rad);
        const double g_fine = nlos_first_order_gain(ap, ue, fine, rad);
        CHECK(std::abs(g_coarse - g_fine) / g_fine < 0.02);
    }
}

TEST_CASE("cached channel model equals the direct patch sum") {
    SimConfig cfg = default_config();
    ChannelModel model(cfg);
    Rng rng(11);
    std::vector<Vec3> ues;
    for (int u = 0; u < 5; ++u)
        ues.push_back({rng.uniform(0.0, 4.0), rng.uniform(0.0, 8.0), 0.85});
    ChannelMatrix cm = model.compute(ues);
    for (int a = 0; a < cm.n_aps; ++a) {
        for (int u = 0; u < cm.n_users; ++u) {
            const double direct = nlos_first_order_gain(cfg.aps.positions_m[a], ues[u],
                                                        model.grid(), model.radiometry());
            CHECK(rel_close(cm.nlos1(a, u), direct, 1e-12));
            CHECK(cm.los(a, u) == los_gain(cfg.aps.positions_m[a], ues[u], model.radiometry()));
        }
    }
}

TEST_CASE("channel matrix invariants: totals and squared-responsivity gains") {
    SimConfig cfg = default_config();
    Rng rng(3);
    std::vector<Vec3> ues;
    for (int u = 0; u < 8; ++u)
        ues.push_back({rng.uniform(0.0, 4.0), rng.uniform(0.0, 8.0), 0.85});
    ChannelMatrix cm = build_channel_matrix(cfg, ues);
    const double resp = cfg.receiver.responsivity_a_per_w;
    for (int a = 0; a < cm.n_aps; ++a) {
        for (int u = 0; u < cm.n_users; ++u) {
            CHECK(cm.total(a, u) == cm.los(a, u) + cm.nlos1(a, u));
            const double expected = resp * cm.total(a, u) * resp * cm.total(a, u);
            CHECK(rel_close(cm.gain(a, u), expected, 1e-15));
            CHECK(cm.gain(a, u) >= 0.0);
        }
    }
}

TEST_CASE("nadir gain accessor matches a direct evaluation") {
    SimConfig cfg = default_config();
    ChannelModel model(cfg);
    CHECK(rel_close(model.nadir_los_gain(), kNadirLos, 1e-12));
}

TEST_CASE("room symmetry: diffuse gains agree for mirrored AP-user pairs") {
    SimConfig cfg = default_config();
    Radiometry rad = make_radiometry(cfg);
    PatchGrid grid(cfg.room);
    // 180-degree rotation about the room center (2, 4) maps AP (1,3) to (3,5).
    const double a = nlos_first_order_gain({1, 3, 3}, {1.5, 2.0, 0.85}, grid, rad);
    const double b = nlos_first_order_gain({3, 5, 3}, {2.5, 6.0, 0.85}, grid, rad);
    CHECK(rel_close(a, b, 1e-9));
}
