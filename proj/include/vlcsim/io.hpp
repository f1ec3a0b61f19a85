#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vlcsim/bo.hpp"
#include "vlcsim/config.hpp"
#include "vlcsim/metrics.hpp"
#include "vlcsim/policy.hpp"
#include "vlcsim/ppo.hpp"

namespace vlcsim {

// Every numeric cell is printed with %.17g, so equal doubles always give
// byte-identical files.
std::string episode_metrics_csv(const std::vector<EpisodeMetrics>& episodes);

// Long-format dB samples: episode,kind,value_db with kind in {inr, sinr}.
std::string db_samples_csv(const std::vector<EpisodeMetrics>& episodes);

std::string learning_curve_csv(const std::vector<CurvePoint>& curve);

std::string diagnostics_csv(const std::vector<UpdateDiagnostics>& diagnostics);

// trial,w_qos,w_stab,score,failed plus the five score components.
std::string bo_trials_csv(const std::vector<BoTrial>& trials);

// Mean and 95% confidence half-width of each episode metric, plus counts.
std::string summary_json(const std::vector<EpisodeMetrics>& episodes);

// Self-sufficient run record: tool version and compiler, the subcommand,
// seed, config hash, and the full configuration inline.
std::string manifest_json(const SimConfig& cfg, std::uint64_t seed, const std::string& command);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Trained policy bundle; the embedded config rebuilds the environment and
// observation normalizer at evaluation time.
struct Checkpoint {
    std::string algo;  // "mappo" or "cenppo"
    std::string config_json;
    std::vector<ActorNet> actors;
    Mlp critic;
};

// Fixed-magic little-endian binary layout. Loading validates the magic,
// every declared shape, and file length; mismatches throw
// std::invalid_argument.
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace vlcsim
