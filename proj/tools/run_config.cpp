#include "run_config.hpp"

#include <set>
#include <sstream>

#include "ssvep/checkpoint.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"

namespace ssvep::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kKeys{"archives",       "channel_set",
                                  "channels",       "channel_sets",
                                  "bank",           "durations",
                                  "stage1",         "stage2",
                                  "gaze_shift_s",   "out",
                                  "seed",           "jobs",
                                  "global_checkpoint", "save_fold_checkpoints",
                                  "layout",         "importance_combinations",
                                  "importance_duration_s", "synth"};

// Preset values first, then whatever the file overrides.
StageConfig stage_from(const json& j, const StageConfig& preset) {
  json merged = preset;
  merged.merge_patch(j);
  return merged.get<StageConfig>();
}

json layout_json(const StimulusLayout& l) {
  return {{"freqs_hz", l.freqs_hz},
          {"phases_rad", l.phases_rad},
          {"refresh_rate_hz", l.refresh_rate_hz},
          {"duration_s", l.duration_s}};
}

StimulusLayout layout_from(const json& j) {
  StimulusLayout l = StimulusLayout::jfpm(j.value("n_targets", 40), j.value("start_hz", 8.0), j.value("step_hz", 0.2),
                                          j.value("duration_s", 5.0), j.value("refresh_rate_hz", 60.0));
  if (j.contains("freqs_hz")) l.freqs_hz = j.at("freqs_hz").get<std::vector<double>>();
  if (j.contains("phases_rad")) l.phases_rad = j.at("phases_rad").get<std::vector<double>>();
  return l;
}

json synth_json(const SynthSettings& s) {
  json mixing = json::array();
  for (Eigen::Index r = 0; r < s.spec.channel_mixing.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < s.spec.channel_mixing.cols(); ++c) row.push_back(s.spec.channel_mixing(r, c));
    mixing.push_back(row);
  }
  return {{"n_subjects", s.n_subjects},
          {"freqs_hz", s.freqs_hz},
          {"n_classes", s.spec.n_classes},
          {"n_channels", s.spec.n_channels},
          {"sampling_rate_hz", s.spec.sampling_rate_hz},
          {"duration_s", s.spec.duration_s},
          {"harmonic_amplitudes", s.spec.harmonic_amplitudes},
          {"harmonic_phases", s.spec.harmonic_phases},
          {"noise_std", s.spec.noise_std},
          {"channel_mixing", mixing},
          {"n_blocks", s.spec.n_blocks},
          {"cue_duration_s", s.spec.cue_duration_s},
          {"visual_latency_s", s.spec.visual_latency_s}};
}

SynthSettings synth_from(const json& j) {
  SynthSettings s;
  s.n_subjects = j.value("n_subjects", s.n_subjects);
  s.freqs_hz = j.value("freqs_hz", s.freqs_hz);
  auto& p = s.spec;
  p.n_classes = j.value("n_classes", p.n_classes);
  p.n_channels = j.value("n_channels", p.n_channels);
  p.sampling_rate_hz = j.value("sampling_rate_hz", p.sampling_rate_hz);
  p.duration_s = j.value("duration_s", p.duration_s);
  p.harmonic_amplitudes = j.value("harmonic_amplitudes", p.harmonic_amplitudes);
  p.harmonic_phases = j.value("harmonic_phases", std::vector<double>(p.harmonic_amplitudes.size(), 0.0));
  p.noise_std = j.value("noise_std", p.noise_std);
  p.n_blocks = j.value("n_blocks", p.n_blocks);
  p.cue_duration_s = j.value("cue_duration_s", p.cue_duration_s);
  p.visual_latency_s = j.value("visual_latency_s", p.visual_latency_s);
  const auto rows = j.value("channel_mixing", std::vector<std::vector<double>>{});
  if (!rows.empty()) {
    p.channel_mixing.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw ArgumentError("channel_mixing rows differ in length");
      for (std::size_t c = 0; c < rows[r].size(); ++c) p.channel_mixing(r, c) = rows[r][c];
    }
  }
  return s;
}

}  // namespace

std::vector<std::string> RunConfig::resolved_channels() const {
  return channels.empty() ? channel_preset(channel_set) : channels;
}

void RunConfig::validate() const {
  if (durations.empty()) throw ArgumentError("no durations configured");
  for (double d : durations) {
    if (!(d > 0.0)) throw ArgumentError("durations must be positive");
  }
  if (bank.n_subbands < 1) throw ArgumentError("n_subbands must be >= 1");
  if (jobs < 1) throw ArgumentError("jobs must be >= 1");
  if (!(gaze_shift_s >= 0.0)) throw ArgumentError("gaze_shift_s must be nonnegative");
  if (importance_combinations < 1) throw ArgumentError("importance_combinations must be >= 1");
  if (synth.n_subjects < 1) throw ArgumentError("synth.n_subjects must be >= 1");
  stage1.validate();
  stage2.validate();
  if (channels.empty()) channel_preset(channel_set);
  for (const auto& name : channel_sets) channel_preset(name);
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ArgumentError("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    for (const auto& p : j.value("archives", std::vector<std::string>{})) c.archives.emplace_back(p);
    c.channel_set = j.value("channel_set", c.channel_set);
    c.channels = j.value("channels", c.channels);
    c.channel_sets = j.value("channel_sets", c.channel_sets);
    if (j.contains("bank")) c.bank = j.at("bank").get<FilterBankSpec>();
    c.durations = j.value("durations", c.durations);
    if (j.contains("stage1")) c.stage1 = stage_from(j.at("stage1"), StageConfig::benchmark_global());
    if (j.contains("stage2")) c.stage2 = stage_from(j.at("stage2"), StageConfig::benchmark_subject());
    c.gaze_shift_s = j.value("gaze_shift_s", c.gaze_shift_s);
    c.out = j.value("out", c.out.string());
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("global_checkpoint")) c.global_checkpoint = j.at("global_checkpoint").get<std::string>();
    c.save_fold_checkpoints = j.value("save_fold_checkpoints", c.save_fold_checkpoints);
    if (j.contains("layout")) c.layout = layout_from(j.at("layout"));
    c.importance_combinations = j.value("importance_combinations", c.importance_combinations);
    c.importance_duration_s = j.value("importance_duration_s", c.importance_duration_s);
    if (j.contains("synth")) c.synth = synth_from(j.at("synth"));
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  std::vector<std::string> archives;
  for (const auto& p : c.archives) archives.push_back(p.string());
  json j{{"archives", archives},
         {"channel_set", c.channel_set},
         {"channels", c.channels},
         {"channel_sets", c.channel_sets},
         {"bank", c.bank},
         {"durations", c.durations},
         {"stage1", c.stage1},
         {"stage2", c.stage2},
         {"gaze_shift_s", c.gaze_shift_s},
         {"out", c.out.string()},
         {"seed", c.seed},
         {"jobs", c.jobs},
         {"save_fold_checkpoints", c.save_fold_checkpoints},
         {"layout", layout_json(c.layout)},
         {"importance_combinations", c.importance_combinations},
         {"importance_duration_s", c.importance_duration_s},
         {"synth", synth_json(c.synth)}};
  if (c.global_checkpoint) j["global_checkpoint"] = c.global_checkpoint->string();
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) throw ArgumentError("config '" + path.string() + "' is not valid JSON");
  return config_from_json(j);
}

std::vector<double> parse_durations(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ArgumentError("bad duration '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ArgumentError("empty duration list");
  return out;
}

void apply_channel_flag(RunConfig& config, const std::string& text) {
  if (text.find(',') == std::string::npos) {
    try {
      channel_preset(text);
      config.channel_set = text;
      config.channels.clear();
      return;
    } catch (const LookupError&) {
      // a single electrode name
    }
  }
  config.channels.clear();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) config.channels.push_back(item);
  }
  if (config.channels.empty()) throw ArgumentError("empty channel list");
}

}  // namespace ssvep::cli
