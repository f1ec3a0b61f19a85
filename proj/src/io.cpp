#include "vlcsim/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vlcsim {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr char kMagic[8] = {'V', 'L', 'C', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_doubles(std::string& out, const std::vector<double>& v) {
  const size_t bytes = v.size() * sizeof(double);
  const size_t at = out.size();
  out.resize(at + bytes);
  std::memcpy(out.data() + at, v.data(), bytes);
}

struct ByteReader {
  const std::string& data;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > data.size()) throw std::invalid_argument("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
  std::vector<double> doubles(size_t n) {
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), data.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
    return v;
  }
};

void put_mlp(std::string& out, const Mlp& mlp) {
  put_u32(out, static_cast<std::uint32_t>(mlp.layers.size()));
  for (const Linear& l : mlp.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.in));
    put_u32(out, static_cast<std::uint32_t>(l.out));
    put_doubles(out, l.w);
    put_doubles(out, l.b);
  }
}

Mlp read_mlp(ByteReader& r) {
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 64) throw std::invalid_argument("checkpoint: bad layer count");
  Mlp mlp;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    Linear l;
    l.in = static_cast<int>(r.u32());
    l.out = static_cast<int>(r.u32());
    if (l.in <= 0 || l.out <= 0 || l.in > 1 << 20 || l.out > 1 << 20) {
      throw std::invalid_argument("checkpoint: bad layer shape");
    }
    l.w = r.doubles(static_cast<size_t>(l.in) * static_cast<size_t>(l.out));
    l.b = r.doubles(static_cast<size_t>(l.out));
    mlp.layers.push_back(std::move(l));
  }
  for (size_t i = 1; i < mlp.layers.size(); ++i) {
    if (mlp.layers[i].in != mlp.layers[i - 1].out) {
      throw std::invalid_argument("checkpoint: inconsistent layer shapes");
    }
  }
  return mlp;
}

} // namespace

std::string episode_metrics_csv(const std::vector<EpisodeMetrics>& episodes) {
  std::string out =
      "episode,qossr_hp,p_out_sp,hor,ppr,jfi,sum_rate_bps,avg_user_rate_bps,"
      "avg_sinr_db,avg_ap_power_w,mean_reward,served_pairs,sinr_excluded,"
      "ici_zero_skipped,jfi_defined\n";
  for (size_t e = 0; e < episodes.size(); ++e) {
    const EpisodeMetrics& m = episodes[e];
    out += std::to_string(e);
    for (double v : {m.qossr_hp, m.p_out_sp, m.hor, m.ppr, m.jfi, m.sum_rate_bps,
                     m.avg_user_rate_bps, m.avg_sinr_db, m.avg_ap_power_w, m.mean_reward}) {
      out += ',';
      out += fmt(v);
    }
    out += ',' + std::to_string(m.served_pairs);
    out += ',' + std::to_string(m.sinr_excluded);
    out += ',' + std::to_string(m.ici_zero_skipped);
    out += ',' + std::to_string(m.jfi_defined ? 1 : 0);
    out += '\n';
  }
  return out;
}

std::string db_samples_csv(const std::vector<EpisodeMetrics>& episodes) {
  std::string out = "episode,kind,value_db\n";
  for (size_t e = 0; e < episodes.size(); ++e) {
    for (double v : episodes[e].inr_samples_db) {
      out += std::to_string(e) + ",inr," + fmt(v) + '\n';
    }
    for (double v : episodes[e].sinr_samples_db) {
      out += std::to_string(e) + ",sinr," + fmt(v) + '\n';
    }
  }
  return out;
}

std::string learning_curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "env_steps,raw_reward,normalized_reward\n";
  for (const CurvePoint& p : curve) {
    out += std::to_string(p.env_steps) + ',' + fmt(p.raw_reward) + ',' +
           fmt(p.normalized_reward) + '\n';
  }
  return out;
}

std::string diagnostics_csv(const std::vector<UpdateDiagnostics>& diagnostics) {
  std::string out = "env_steps,actor_loss,critic_loss,entropy,clip_fraction,approx_kl\n";
  for (const UpdateDiagnostics& d : diagnostics) {
    out += std::to_string(d.env_steps);
    for (double v : {d.actor_loss, d.critic_loss, d.entropy, d.clip_fraction, d.approx_kl}) {
      out += ',';
      out += fmt(v);
    }
    out += '\n';
  }
  return out;
}

std::string bo_trials_csv(const std::vector<BoTrial>& trials) {
  std::string out = "trial,w_qos,w_stab,score,failed,qossr_hp,p_out,hor,ppr,r_sum_norm\n";
  for (const BoTrial& t : trials) {
    out += std::to_string(t.index);
    for (double v : {t.w_qos, t.w_stab, t.score}) {
      out += ',';
      out += fmt(v);
    }
    out += ',' + std::to_string(t.failed ? 1 : 0);
    for (double v : {t.components.qossr_hp, t.components.p_out, t.components.hor,
                     t.components.ppr, t.components.r_sum_norm}) {
      out += ',';
      out += fmt(v);
    }
    out += '\n';
  }
  return out;
}

std::string summary_json(const std::vector<EpisodeMetrics>& episodes) {
  nlohmann::ordered_json j;
  j["episodes"] = episodes.size();
  const auto add = [&](const char* name, auto getter) {
    std::vector<double> vals;
    vals.reserve(episodes.size());
    for (const EpisodeMetrics& m : episodes) vals.push_back(getter(m));
    const SummaryStat s = summarize(vals);
    j[name]["mean"] = s.mean;
    j[name]["ci95_half_width"] = s.ci95_half_width;
  };
  add("qossr_hp", [](const EpisodeMetrics& m) { return m.qossr_hp; });
  add("p_out_sp", [](const EpisodeMetrics& m) { return m.p_out_sp; });
  add("hor", [](const EpisodeMetrics& m) { return m.hor; });
  add("ppr", [](const EpisodeMetrics& m) { return m.ppr; });
  add("jfi", [](const EpisodeMetrics& m) { return m.jfi; });
  add("sum_rate_bps", [](const EpisodeMetrics& m) { return m.sum_rate_bps; });
  add("avg_user_rate_bps", [](const EpisodeMetrics& m) { return m.avg_user_rate_bps; });
  add("avg_sinr_db", [](const EpisodeMetrics& m) { return m.avg_sinr_db; });
  add("avg_ap_power_w", [](const EpisodeMetrics& m) { return m.avg_ap_power_w; });
  add("mean_reward", [](const EpisodeMetrics& m) { return m.mean_reward; });
  return j.dump(2) + "\n";
}

std::string manifest_json(const SimConfig& cfg, std::uint64_t seed, const std::string& command) {
  nlohmann::ordered_json j;
  j["tool"] = "vlcsim";
  j["version"] = "1.0.0";
  j["compiler"] = __VERSION__;
  j["command"] = command;
  j["seed"] = seed;
  j["config_hash"] = config_hash(cfg);
  j["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  if (ck.algo != "mappo" && ck.algo != "cenppo") {
    throw std::invalid_argument("checkpoint: algo must be mappo or cenppo");
  }
  if (ck.actors.empty()) throw std::invalid_argument("checkpoint: no actors");
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(ck.algo.size()));
  out += ck.algo;
  put_u32(out, static_cast<std::uint32_t>(ck.config_json.size()));
  out += ck.config_json;
  put_u32(out, static_cast<std::uint32_t>(ck.actors.size()));
  for (const ActorNet& a : ck.actors) {
    put_u32(out, static_cast<std::uint32_t>(a.k_max));
    put_u32(out, static_cast<std::uint32_t>(a.n_blocks));
    put_u32(out, a.head == SelectionHead::softmax_bernoulli ? 0u : 1u);
    put_mlp(out, a.net);
  }
  put_mlp(out, ck.critic);
  write_text_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string data = read_text_file(path);
  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::invalid_argument("checkpoint: bad magic");
  }
  ByteReader r{data, sizeof(kMagic)};
  Checkpoint ck;
  ck.algo = r.bytes(r.u32());
  if (ck.algo != "mappo" && ck.algo != "cenppo") {
    throw std::invalid_argument("checkpoint: unknown algorithm tag");
  }
  ck.config_json = r.bytes(r.u32());
  const std::uint32_t n_actors = r.u32();
  if (n_actors == 0 || n_actors > 4096) throw std::invalid_argument("checkpoint: bad actor count");
  for (std::uint32_t i = 0; i < n_actors; ++i) {
    ActorNet a;
    a.k_max = static_cast<int>(r.u32());
    a.n_blocks = static_cast<int>(r.u32());
    const std::uint32_t head = r.u32();
    if (head > 1) throw std::invalid_argument("checkpoint: bad head tag");
    a.head = head == 0 ? SelectionHead::softmax_bernoulli : SelectionHead::sigmoid_bernoulli;
    a.net = read_mlp(r);
    if (a.k_max <= 0 || a.n_blocks <= 0 ||
        a.net.output_dim() != a.n_blocks * (4 * a.k_max + 2)) {
      throw std::invalid_argument("checkpoint: actor head does not match its network");
    }
    ck.actors.push_back(std::move(a));
  }
  ck.critic = read_mlp(r);
  if (r.pos != data.size()) throw std::invalid_argument("checkpoint: trailing bytes");
  return ck;
}

} // namespace vlcsim
