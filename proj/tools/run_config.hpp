#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssvep/analysis.hpp"
#include "ssvep/filterbank.hpp"
#include "ssvep/training.hpp"

namespace ssvep::cli {

struct SynthSettings {
  SynthSpec spec;
  int n_subjects = 2;
  std::vector<double> freqs_hz;  // empty: 8 Hz upward in 0.2 Hz steps
};

// Everything one command needs, loadable from a single JSON file. Relative
// paths are taken as given (relative to the working directory).
struct RunConfig {
  std::vector<std::filesystem::path> archives;
  std::string channel_set = "all";    // preset name, used when `channels` is empty
  std::vector<std::string> channels;  // explicit electrode list
  std::vector<std::string> channel_sets;  // sweep: one protocol run per preset
  FilterBankSpec bank;
  std::vector<double> durations{0.4};
  StageConfig stage1 = StageConfig::benchmark_global();
  StageConfig stage2 = StageConfig::benchmark_subject();
  double gaze_shift_s = 0.5;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
  std::optional<std::filesystem::path> global_checkpoint;
  bool save_fold_checkpoints = false;
  StimulusLayout layout = StimulusLayout::jfpm();
  int importance_combinations = 3;
  double importance_duration_s = 0.2;
  SynthSettings synth;

  // Electrode names to keep; empty means every channel.
  std::vector<std::string> resolved_channels() const;
  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

// "0.2,0.4" -> {0.2, 0.4}
std::vector<double> parse_durations(const std::string& text);
// A preset name ("3", "6", "9", "all", "64") or a comma-separated list.
void apply_channel_flag(RunConfig& config, const std::string& text);

}  // namespace ssvep::cli
