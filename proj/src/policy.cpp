#include "vlcsim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vlcsim/channel.hpp"

namespace vlcsim {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;  // ln(2*pi)

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// x*ln(x) with the 0*ln(0) = 0 convention.
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double bernoulli_entropy(double p) { return -xlogx(p) - xlogx(1.0 - p); }

double bernoulli_logprob(double p, bool bit) {
    return bit ? std::log(p) : std::log1p(-p);
}

// d(logprob)/d(logit) for a Bernoulli behind a sigmoid.
double bernoulli_dlp_dlogit(double p, bool bit) { return (bit ? 1.0 : 0.0) - p; }

// d(entropy)/d(logit) for a Bernoulli behind a sigmoid; vanishes at p in {0,1}.
double bernoulli_dent_dlogit(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return p * (1.0 - p) * (std::log1p(-p) - std::log(p));
}

double gaussian_logprob(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * kLn2Pi;
}

double gaussian_entropy(double sigma) { return std::log(sigma) + 0.5 * (1.0 + kLn2Pi); }

double clamp_prob(double p) { return std::clamp(p, 1e-15, 1.0 - 1e-15); }

} // namespace

ActionDistribution make_distribution(const double* raw, int k_max, SelectionHead head,
                                     const std::vector<std::uint8_t>& valid) {
    if (static_cast<int>(valid.size()) != k_max)
        throw std::invalid_argument("slot mask length must equal k_max");
    ActionDistribution d;
    d.k_max = k_max;
    d.head = head;
    d.valid = valid;
    d.sel_p.assign(static_cast<size_t>(k_max), 0.0);
    d.trig_p.assign(static_cast<size_t>(k_max), 0.0);
    d.mu.assign(static_cast<size_t>(k_max) + 1, 0.0);
    d.sigma.assign(static_cast<size_t>(k_max) + 1, kSigmaFloor);

    if (head == SelectionHead::softmax_bernoulli) {
        double max_logit = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < k_max; ++s)
            if (valid[static_cast<size_t>(s)]) max_logit = std::max(max_logit, raw[s]);
        double sum = 0.0;
        for (int s = 0; s < k_max; ++s)
            if (valid[static_cast<size_t>(s)]) {
                d.sel_p[static_cast<size_t>(s)] = std::exp(raw[s] - max_logit);
                sum += d.sel_p[static_cast<size_t>(s)];
            }
        if (sum > 0.0)
            for (int s = 0; s < k_max; ++s) d.sel_p[static_cast<size_t>(s)] /= sum;
    } else {
        for (int s = 0; s < k_max; ++s)
            if (valid[static_cast<size_t>(s)]) d.sel_p[static_cast<size_t>(s)] = sigmoid(raw[s]);
    }

    for (int i = 0; i <= k_max; ++i) {
        d.mu[static_cast<size_t>(i)] = 0.5 * (std::tanh(raw[k_max + i]) + 1.0);
        d.sigma[static_cast<size_t>(i)] = std::max(softplus(raw[2 * k_max + 1 + i]), kSigmaFloor);
    }
    for (int s = 0; s < k_max; ++s)
        if (valid[static_cast<size_t>(s)])
            d.trig_p[static_cast<size_t>(s)] = sigmoid(raw[3 * k_max + 2 + s]);
    return d;
}

SampledAction sample_action(const ActionDistribution& dist, Rng& rng) {
    const int k = dist.k_max;
    SampledAction out;
    out.action.assign(static_cast<size_t>(action_dim(k)), 0.0);
    // Draw order: selection bits, slot power weights, utilization, trigger
    // bits; invalid slots consume no draws.
    for (int s = 0; s < k; ++s)
        if (dist.valid[static_cast<size_t>(s)])
            out.action[static_cast<size_t>(s)] =
                rng.bernoulli(dist.sel_p[static_cast<size_t>(s)]) ? 1.0 : 0.0;
    for (int s = 0; s < k; ++s)
        if (dist.valid[static_cast<size_t>(s)])
            out.action[static_cast<size_t>(k + s)] =
                rng.normal(dist.mu[static_cast<size_t>(s)], dist.sigma[static_cast<size_t>(s)]);
    out.action[static_cast<size_t>(2 * k)] =
        rng.normal(dist.mu[static_cast<size_t>(k)], dist.sigma[static_cast<size_t>(k)]);
    for (int s = 0; s < k; ++s)
        if (dist.valid[static_cast<size_t>(s)])
            out.action[static_cast<size_t>(2 * k + 1 + s)] =
                rng.bernoulli(dist.trig_p[static_cast<size_t>(s)]) ? 1.0 : 0.0;

    const LogProbResult lp = logprob_entropy(dist, out.action);
    out.logprob = lp.logprob;
    out.entropy = lp.entropy;
    return out;
}

std::vector<double> greedy_action(const ActionDistribution& dist) {
    const int k = dist.k_max;
    std::vector<double> a(static_cast<size_t>(action_dim(k)), 0.0);
    for (int s = 0; s < k; ++s) {
        if (!dist.valid[static_cast<size_t>(s)]) continue;
        a[static_cast<size_t>(s)] = dist.sel_p[static_cast<size_t>(s)] > 0.5 ? 1.0 : 0.0;
        a[static_cast<size_t>(k + s)] = dist.mu[static_cast<size_t>(s)];
        a[static_cast<size_t>(2 * k + 1 + s)] = dist.trig_p[static_cast<size_t>(s)] > 0.5 ? 1.0 : 0.0;
    }
    a[static_cast<size_t>(2 * k)] = dist.mu[static_cast<size_t>(k)];
    return a;
}

LogProbResult logprob_entropy(const ActionDistribution& dist, const std::vector<double>& action) {
    const int k = dist.k_max;
    if (static_cast<int>(action.size()) != action_dim(k))
        throw std::invalid_argument("action dimension mismatch");
    LogProbResult r;
    for (int s = 0; s < k; ++s) {
        if (!dist.valid[static_cast<size_t>(s)]) continue;
        const bool sel = action[static_cast<size_t>(s)] > 0.5;
        r.logprob += bernoulli_logprob(dist.sel_p[static_cast<size_t>(s)], sel);
        r.entropy += bernoulli_entropy(dist.sel_p[static_cast<size_t>(s)]);
        r.logprob += gaussian_logprob(action[static_cast<size_t>(k + s)],
                                      dist.mu[static_cast<size_t>(s)],
                                      dist.sigma[static_cast<size_t>(s)]);
        r.entropy += gaussian_entropy(dist.sigma[static_cast<size_t>(s)]);
        const bool trig = action[static_cast<size_t>(2 * k + 1 + s)] > 0.5;
        r.logprob += bernoulli_logprob(dist.trig_p[static_cast<size_t>(s)], trig);
        r.entropy += bernoulli_entropy(dist.trig_p[static_cast<size_t>(s)]);
    }
    r.logprob += gaussian_logprob(action[static_cast<size_t>(2 * k)], dist.mu[static_cast<size_t>(k)],
                                  dist.sigma[static_cast<size_t>(k)]);
    r.entropy += gaussian_entropy(dist.sigma[static_cast<size_t>(k)]);
    return r;
}

namespace {

// Gaussian head gradients for one (mu, sigma) pair at raw indices (im, is).
void gaussian_backward(double x, double mu, double sigma, double dlp, double dent, double* d_raw,
                       int im, int is) {
    const double z = (x - mu) / sigma;
    // d(mu)/d(raw) through the tanh scaling recovered from mu itself.
    const double dmu_draw = 2.0 * mu * (1.0 - mu);
    d_raw[im] += dlp * (z / sigma) * dmu_draw;
    // d(sigma)/d(raw) through softplus; zero in the floored regime.
    const double dsig_draw = sigma > kSigmaFloor ? 1.0 - std::exp(-sigma) : 0.0;
    d_raw[is] += (dlp * ((z * z - 1.0) / sigma) + dent / sigma) * dsig_draw;
}

} // namespace

void logprob_entropy_backward(const ActionDistribution& dist, const std::vector<double>& action,
                              double dlp_coef, double dent_coef, double* d_raw) {
    const int k = dist.k_max;
    if (static_cast<int>(action.size()) != action_dim(k))
        throw std::invalid_argument("action dimension mismatch");

    // Selection head.
    if (dist.head == SelectionHead::softmax_bernoulli) {
        // dL/dz_t = p_t * (c_t - sum_s c_s p_s) for the masked softmax, where
        // c_s collects dL/dp_s from the Bernoulli log-prob and entropy.
        std::vector<double> c(static_cast<size_t>(k), 0.0);
        double mean_c = 0.0;
        for (int s = 0; s < k; ++s) {
            if (!dist.valid[static_cast<size_t>(s)]) continue;
            const double p = clamp_prob(dist.sel_p[static_cast<size_t>(s)]);
            const bool bit = action[static_cast<size_t>(s)] > 0.5;
            const double dlp_dp = bit ? 1.0 / p : -1.0 / (1.0 - p);
            const double dent_dp = std::log1p(-p) - std::log(p);
            c[static_cast<size_t>(s)] = dlp_coef * dlp_dp + dent_coef * dent_dp;
            mean_c += c[static_cast<size_t>(s)] * dist.sel_p[static_cast<size_t>(s)];
        }
        for (int s = 0; s < k; ++s)
            if (dist.valid[static_cast<size_t>(s)])
                d_raw[s] += dist.sel_p[static_cast<size_t>(s)] * (c[static_cast<size_t>(s)] - mean_c);
    } else {
        for (int s = 0; s < k; ++s) {
            if (!dist.valid[static_cast<size_t>(s)]) continue;
            const double p = dist.sel_p[static_cast<size_t>(s)];
            const bool bit = action[static_cast<size_t>(s)] > 0.5;
            d_raw[s] += dlp_coef * bernoulli_dlp_dlogit(p, bit) +
                        dent_coef * bernoulli_dent_dlogit(p);
        }
    }

    // Gaussian heads: slot weights and utilization.
    for (int s = 0; s < k; ++s)
        if (dist.valid[static_cast<size_t>(s)])
            gaussian_backward(action[static_cast<size_t>(k + s)], dist.mu[static_cast<size_t>(s)],
                              dist.sigma[static_cast<size_t>(s)], dlp_coef, dent_coef, d_raw,
                              k + s, 2 * k + 1 + s);
    gaussian_backward(action[static_cast<size_t>(2 * k)], dist.mu[static_cast<size_t>(k)],
                      dist.sigma[static_cast<size_t>(k)], dlp_coef, dent_coef, d_raw, 2 * k,
                      3 * k + 1);

    // Trigger head.
    for (int s = 0; s < k; ++s) {
        if (!dist.valid[static_cast<size_t>(s)]) continue;
        const double p = dist.trig_p[static_cast<size_t>(s)];
        const bool bit = action[static_cast<size_t>(2 * k + 1 + s)] > 0.5;
        d_raw[3 * k + 2 + s] += dlp_coef * bernoulli_dlp_dlogit(p, bit) +
                                dent_coef * bernoulli_dent_dlogit(p);
    }
}

ObsNormalizer::ObsNormalizer(const SimConfig& cfg) {
    layout_ = ObsLayout{cfg.noma.k_max, cfg.env.neighbor_count};
    const Radiometry rad = make_radiometry(cfg);
    const Vec3 ap{0.0, 0.0, cfg.room.height_m};
    const Vec3 ue{0.0, 0.0, cfg.receiver.height_m};
    const double h_nadir = los_gain(ap, ue, rad);
    const double g_nadir = (rad.responsivity_a_per_w * h_nadir) *
                           (rad.responsivity_a_per_w * h_nadir);
    gain_scale_ = 1.0 / g_nadir;
    ici_scale_ = 1.0 / (g_nadir * cfg.aps.max_electrical_power_w);
    rate_scale_ = 1.0 / cfg.users.hp_rate_req_bps;
    time_scale_ = 1.0 / (cfg.env.max_steps_per_episode * cfg.mobility.dt_s);
}

std::vector<double> ObsNormalizer::normalize(const std::vector<double>& obs) const {
    if (static_cast<int>(obs.size()) != layout_.dim())
        throw std::invalid_argument("observation dimension mismatch");
    std::vector<double> out = obs;
    const int nc = layout_.neighbor_count;
    for (int s = 0; s < layout_.k_max; ++s) {
        double* f = out.data() + static_cast<size_t>(layout_.slot_offset(s));
        f[1] *= gain_scale_;
        for (int n = 0; n < nc; ++n) f[2 + n] *= gain_scale_;
        f[2 + nc] *= ici_scale_;
        f[3 + nc] *= rate_scale_;
        f[5 + nc] *= time_scale_;
    }
    return out;
}

std::vector<std::uint8_t> ObsNormalizer::valid_slots(const std::vector<double>& obs) const {
    std::vector<std::uint8_t> v(static_cast<size_t>(layout_.k_max), 0);
    for (int s = 0; s < layout_.k_max; ++s)
        v[static_cast<size_t>(s)] =
            obs[static_cast<size_t>(layout_.slot_offset(s))] > 0.5 ? 1 : 0;
    return v;
}

ActorNet make_actor(int input_dim, int k_max, int hidden, int n_blocks, SelectionHead head,
                    Rng& rng) {
    ActorNet a;
    a.k_max = k_max;
    a.n_blocks = n_blocks;
    a.head = head;
    a.net = make_mlp({input_dim, hidden, hidden, n_blocks * actor_raw_dim(k_max)});
    // 1/100 final-layer scale keeps the initial policy near-uniform/centered.
    init_mlp(a.net, rng, 0.01);
    return a;
}

Mlp make_critic(int input_dim, int hidden, Rng& rng) {
    Mlp c = make_mlp({input_dim, hidden, hidden, 1});
    init_mlp(c, rng);
    return c;
}

} // namespace vlcsim
