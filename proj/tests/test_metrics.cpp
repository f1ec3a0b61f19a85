#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "test_util.hpp"
#include "vlcsim/metrics.hpp"
#include "vlcsim/rng.hpp"

using namespace vlcsim;

namespace {

// Quadratic reference classifier: scan backwards for the user's previous event.
std::vector<std::uint8_t> brute_force_pingpong(const std::vector<HoEvent>& log, double t_pp) {
    std::vector<std::uint8_t> flags(log.size(), 0);
    for (size_t i = 0; i < log.size(); ++i) {
        for (size_t j = i; j-- > 0;) {
            if (log[j].user != log[i].user) continue;
            flags[i] = log[i].to_ap == log[j].from_ap && log[i].time_s - log[j].time_s <= t_pp;
            break;
        }
    }
    return flags;
}

std::vector<HoEvent> random_log(Rng& rng, int n_users, int n_aps, int n_events) {
    std::vector<int> serving(n_users);
    for (int& s : serving) s = rng.uniform_int(n_aps);
    std::vector<HoEvent> log;
    double t = 0.0;
    for (int i = 0; i < n_events; ++i) {
        t += rng.uniform(0.0, 2.0);
        const int u = rng.uniform_int(n_users);
        int to = rng.uniform_int(n_aps - 1);
        if (to >= serving[u]) ++to;  // any AP except the serving one
        log.push_back({t, u, serving[u], to});
        serving[u] = to;
    }
    return log;
}

StepRecord make_step(int n_users, int n_aps) {
    StepRecord s;
    s.rate_bps.assign(n_users, 0.0);
    s.sinr.assign(n_users, 0.0);
    s.served.assign(n_users, 0);
    s.power_w.assign(n_users, 0.0);
    s.ici_a2w.assign(n_users, 0.0);
    s.ap_power_w.assign(n_aps, 0.0);
    return s;
}

} // namespace

TEST_CASE("Jain's index closed forms") {
    CHECK(std::abs(jfi({2.0, 2.0, 2.0, 2.0}) - 1.0) <= 1e-12);
    std::vector<double> one_hot(20, 0.0);
    one_hot[7] = 13.0;
    CHECK(std::abs(jfi(one_hot) - 0.05) <= 1e-12);
    CHECK(std::abs(jfi({1.0, 1.0, 2.0, 0.0}) - 2.0 / 3.0) <= 1e-12);
    CHECK_THROWS_AS(jfi({0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(jfi({}), std::invalid_argument);
}

TEST_CASE("Jain's index bounds hold on random nonnegative vectors") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + rng.uniform_int(30);
        std::vector<double> v(n);
        for (double& x : v) x = rng.uniform(0.0, 10.0);
        v[rng.uniform_int(n)] = 1.0;  // guarantee not all-zero
        const double f = jfi(v);
        CHECK(f <= 1.0 + 1e-12);
        CHECK(f >= 1.0 / n - 1e-12);
    }
}

TEST_CASE("QoS satisfaction counts rate >= requirement, inclusive") {
    EpisodeTrace trace;
    trace.n_users = 2;
    trace.n_aps = 1;
    MetricsParams p;
    p.n_hp_users = 1;
    p.hp_rate_req_bps = 12e6;
    StepRecord met = make_step(2, 1);
    met.rate_bps[0] = 12e6;  // exactly at the requirement
    StepRecord missed = make_step(2, 1);
    missed.rate_bps[0] = 12e6 - 1.0;
    trace.steps = {met, missed};
    CHECK(qossr_hp(trace, p) == 0.5);
}

TEST_CASE("outage uses strict less-than") {
    EpisodeTrace trace;
    trace.n_users = 2;
    trace.n_aps = 1;
    MetricsParams p;
    p.n_hp_users = 0;
    p.outage_threshold_bps = 0.5e6;
    StepRecord at = make_step(2, 1);
    at.rate_bps = {0.5e6, 0.5e6};  // exactly at threshold: not an outage
    StepRecord below = make_step(2, 1);
    below.rate_bps = {0.4e6, 0.5e6};
    trace.steps = {at, below};
    CHECK(outage_probability_sp(trace, p) == 0.25);
}

TEST_CASE("degenerate populations: vacuous QoS and outage") {
    EpisodeTrace trace;
    trace.n_users = 1;
    trace.n_aps = 1;
    trace.steps = {make_step(1, 1)};
    MetricsParams p;
    p.n_hp_users = 0;
    CHECK(qossr_hp(trace, p) == 1.0);
    p.n_hp_users = 1;
    CHECK(outage_probability_sp(trace, p) == 0.0);
}

TEST_CASE("handover rate and ping-pong reference cases") {
    {
        auto [hor, ppr] = hor_and_ppr({}, 100.0, 20, 2.0);
        CHECK(hor == 0.0);
        CHECK(ppr == 0.0);
    }
    {
        std::vector<HoEvent> log{{5.0, 0, 0, 1}, {6.0, 0, 1, 0}};
        auto [hor, ppr] = hor_and_ppr(log, 10.0, 2, 2.0);
        CHECK(rel_close(hor, 2.0 / (2 * 10.0), 1e-15));
        CHECK(ppr == 0.5);  // the return hop lands inside the window
    }
    {
        std::vector<HoEvent> log{{5.0, 0, 0, 1}, {8.0, 0, 1, 0}};
        auto [hor, ppr] = hor_and_ppr(log, 10.0, 2, 2.0);
        CHECK(ppr == 0.0);  // 3 s gap is outside the 2 s window
    }
    {
        // Gap exactly at the window boundary counts as ping-pong.
        std::vector<HoEvent> log{{5.0, 0, 0, 1}, {7.0, 0, 1, 0}};
        auto [hor, ppr] = hor_and_ppr(log, 10.0, 2, 2.0);
        CHECK(ppr == 0.5);
    }
}

TEST_CASE("streaming ping-pong classifier equals the brute-force scan") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const int n_users = 1 + rng.uniform_int(6);
        const int n_aps = 2 + rng.uniform_int(5);
        const int n_events = rng.uniform_int(60);
        auto log = random_log(rng, n_users, n_aps, n_events);
        CHECK(classify_pingpong(log, 2.0) == brute_force_pingpong(log, 2.0));
    }
}

TEST_CASE("episode metrics aggregate a small hand-computed trace") {
    // 2 users (user 0 HP), 2 APs, 2 steps.
    EpisodeTrace trace;
    trace.n_users = 2;
    trace.n_aps = 2;
    trace.dt_s = 1.0;
    StepRecord s1 = make_step(2, 2);
    s1.rate_bps = {12e6, 1e6};
    s1.sinr = {100.0, 10.0};
    s1.served = {1, 1};
    s1.power_w = {10.0, 5.0};
    s1.ici_a2w = {2e-15, 0.0};
    s1.ap_power_w = {10.0, 5.0};
    StepRecord s2 = make_step(2, 2);
    s2.rate_bps = {6e6, 0.4e6};
    s2.sinr = {50.0, 0.0};
    s2.served = {1, 1};
    s2.power_w = {10.0, 0.0};
    s2.ici_a2w = {4e-15, 1e-15};
    s2.ap_power_w = {10.0, 0.0};
    trace.steps = {s1, s2};
    trace.ho_log = {{0.0, 1, 0, 1}, {1.0, 1, 1, 0}};

    MetricsParams p;
    p.n_hp_users = 1;
    p.hp_rate_req_bps = 12e6;
    p.outage_threshold_bps = 0.5e6;
    p.t_pp_s = 2.0;
    p.noise_a2 = 2e-15;

    EpisodeMetrics m = compute_episode_metrics(trace, p);
    CHECK(m.qossr_hp == 0.5);    // met at step 1 only
    CHECK(m.p_out_sp == 0.5);    // 1e6 ok, 0.4e6 below
    CHECK(rel_close(m.hor, 2.0 / (2 * 2.0), 1e-15));
    CHECK(m.ppr == 0.5);
    // Average powers: user0 10, user1 2.5 -> JFI = 12.5^2 / (2 * 106.25).
    CHECK(rel_close(m.jfi, 12.5 * 12.5 / (2.0 * 106.25), 1e-12));
    CHECK(rel_close(m.sum_rate_bps, (13e6 + 6.4e6) / 2.0, 1e-12));
    CHECK(rel_close(m.avg_user_rate_bps, (13e6 + 6.4e6) / 4.0, 1e-12));
    // Served SINR>0 pairs: 100, 10, 50 -> mean of their dB values.
    const double expected_sinr_db =
        (10.0 * std::log10(100.0) + 10.0 * std::log10(10.0) + 10.0 * std::log10(50.0)) / 3.0;
    CHECK(rel_close(m.avg_sinr_db, expected_sinr_db, 1e-12));
    CHECK(m.served_pairs == 4);
    CHECK(m.sinr_excluded == 1);
    CHECK(m.ici_zero_skipped == 1);
    // INR samples: 0 dB, ~3 dB, -3 dB.
    REQUIRE(m.inr_samples_db.size() == 3);
    CHECK(rel_close(m.avg_ap_power_w, 25.0 / 4.0, 1e-12));
    CHECK(m.jfi_defined);
}

TEST_CASE("all-silent episode leaves JFI undefined instead of throwing") {
    EpisodeTrace trace;
    trace.n_users = 2;
    trace.n_aps = 1;
    trace.steps = {make_step(2, 1)};
    MetricsParams p;
    p.n_hp_users = 1;
    EpisodeMetrics m = compute_episode_metrics(trace, p);
    CHECK_FALSE(m.jfi_defined);
    CHECK(m.jfi == 0.0);
}

TEST_CASE("empirical quantiles interpolate the sorted samples") {
    auto q = empirical_quantiles({4.0, 1.0, 3.0, 2.0}, 5);
    REQUIRE(q.size() == 5);
    CHECK(q[0] == 1.0);
    CHECK(q[2] == 2.5);
    CHECK(q[4] == 4.0);
    CHECK(empirical_quantiles({}, 11).empty());
    auto single = empirical_quantiles({7.0}, 3);
    REQUIRE(single.size() == 3);
    CHECK(single[0] == 7.0);
    CHECK(single[2] == 7.0);
}

TEST_CASE("summary statistics: mean and 95% confidence half-width") {
    SummaryStat s = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == 2.5);
    // Sample std = sqrt(5/3); half-width = 1.96 * s / sqrt(4).
    CHECK(rel_close(s.ci95_half_width, 1.96 * std::sqrt(5.0 / 3.0) / 2.0, 1e-12));
    CHECK(summarize({}).mean == 0.0);
    CHECK(summarize({5.0}).ci95_half_width == 0.0);
}
