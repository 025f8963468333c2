#include "ssvep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"

namespace ssvep {

using nlohmann::json;

void RecordingMeta::validate() const {
  auto fail = [this](const std::string& what) {
    throw ArgumentError("recording '" + subject_id + "': " + what);
  };
  if (!(sampling_rate_hz > 0.0) || !std::isfinite(sampling_rate_hz)) fail("sampling_rate_hz must be positive");
  if (n_blocks <= 0 || n_targets <= 0 || n_channels <= 0 || n_samples <= 0) fail("dimensions must be positive");
  if (stimulus_freqs_hz.size() != static_cast<std::size_t>(n_targets)) fail("stimulus_freqs_hz length != n_targets");
  if (stimulus_phases_rad.size() != static_cast<std::size_t>(n_targets)) fail("stimulus_phases_rad length != n_targets");
  if (channel_names.size() != static_cast<std::size_t>(n_channels)) fail("channel_names length != n_channels");
  std::set<double> seen;
  for (double f : stimulus_freqs_hz) {
    if (!(f > 0.0) || !std::isfinite(f)) fail("stimulus frequencies must be positive");
    if (!seen.insert(f).second) fail("stimulus frequencies must be pairwise distinct");
  }
  for (double p : stimulus_phases_rad) {
    if (!std::isfinite(p)) fail("stimulus phases must be finite");
  }
  if (!(cue_duration_s >= 0.0) || !(visual_latency_s >= 0.0)) fail("cue and latency must be nonnegative");
}

int RecordingMeta::channel_index(const std::string& name) const {
  auto it = std::find(channel_names.begin(), channel_names.end(), name);
  if (it == channel_names.end()) {
    throw LookupError("unknown channel '" + name + "'");
  }
  return static_cast<int>(it - channel_names.begin());
}

SsvepArchive::SsvepArchive(RecordingMeta m) : meta(std::move(m)) {
  meta.validate();
  data.assign(static_cast<std::size_t>(meta.n_blocks) * meta.n_targets * meta.n_channels * meta.n_samples, 0.0f);
}

void SsvepArchive::validate() const {
  meta.validate();
  const std::size_t expected =
      static_cast<std::size_t>(meta.n_blocks) * meta.n_targets * meta.n_channels * meta.n_samples;
  if (data.size() != expected) {
    throw CorruptionError("tensor holds " + std::to_string(data.size()) + " values, header implies " +
                          std::to_string(expected));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw DataError("non-finite sample at flat index " + std::to_string(i));
    }
  }
}

int seconds_to_samples(double seconds, double rate_hz) {
  return static_cast<int>(std::lround(seconds * rate_hz));
}

namespace {

json meta_to_json(const RecordingMeta& m) {
  return json{{"subject_id", m.subject_id},
              {"sampling_rate_hz", m.sampling_rate_hz},
              {"n_blocks", m.n_blocks},
              {"n_targets", m.n_targets},
              {"n_channels", m.n_channels},
              {"n_samples", m.n_samples},
              {"stimulus_freqs_hz", m.stimulus_freqs_hz},
              {"stimulus_phases_rad", m.stimulus_phases_rad},
              {"channel_names", m.channel_names},
              {"cue_duration_s", m.cue_duration_s},
              {"visual_latency_s", m.visual_latency_s}};
}

RecordingMeta meta_from_json(const json& j) {
  RecordingMeta m;
  try {
    j.at("subject_id").get_to(m.subject_id);
    j.at("sampling_rate_hz").get_to(m.sampling_rate_hz);
    j.at("n_blocks").get_to(m.n_blocks);
    j.at("n_targets").get_to(m.n_targets);
    j.at("n_channels").get_to(m.n_channels);
    j.at("n_samples").get_to(m.n_samples);
    j.at("stimulus_freqs_hz").get_to(m.stimulus_freqs_hz);
    j.at("stimulus_phases_rad").get_to(m.stimulus_phases_rad);
    j.at("channel_names").get_to(m.channel_names);
    j.at("cue_duration_s").get_to(m.cue_duration_s);
    j.at("visual_latency_s").get_to(m.visual_latency_s);
  } catch (const json::exception& e) {
    throw FormatError(std::string("archive header: ") + e.what());
  }
  if (j.size() != 11) {
    throw FormatError("archive header carries unexpected fields");
  }
  try {
    m.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("archive header: ") + e.what());
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> encode_archive(const SsvepArchive& archive) {
  archive.validate();
  auto bytes = io::frame(std::string_view(kArchiveMagic, 8), meta_to_json(archive.meta));
  bytes.reserve(bytes.size() + archive.data.size() * 4);
  for (float v : archive.data) {
    io::append_f32_le(bytes, v);
  }
  return bytes;
}

SsvepArchive decode_archive(std::span<const std::uint8_t> bytes) {
  const auto framed = io::unframe(bytes, std::string_view(kArchiveMagic, 8));
  SsvepArchive archive;
  archive.meta = meta_from_json(framed.header);
  const auto& m = archive.meta;
  const std::size_t count = static_cast<std::size_t>(m.n_blocks) * m.n_targets * m.n_channels * m.n_samples;
  const std::size_t payload = bytes.size() - framed.payload_offset;
  if (payload != count * 4) {
    throw CorruptionError("payload is " + std::to_string(payload) + " bytes, header implies " +
                          std::to_string(count * 4));
  }
  archive.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    archive.data[i] = io::read_f32_le(bytes, framed.payload_offset + 4 * i);
  }
  archive.validate();
  return archive;
}

SsvepArchive read_archive(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return decode_archive(bytes);
}

void write_archive(const SsvepArchive& archive, const std::filesystem::path& path) {
  const auto bytes = encode_archive(archive);
  io::write_file_atomic(path, bytes);
}

TrialSet extract_epochs(const SsvepArchive& archive, double duration_s) {
  const auto& m = archive.meta;
  const int start = seconds_to_samples(m.cue_duration_s + m.visual_latency_s, m.sampling_rate_hz);
  const int n = seconds_to_samples(duration_s, m.sampling_rate_hz);
  if (n <= 0) {
    throw RangeError("duration " + std::to_string(duration_s) + " s yields an empty epoch");
  }
  if (start + n > m.n_samples) {
    throw RangeError("epoch [" + std::to_string(start) + ", " + std::to_string(start + n) +
                     ") exceeds trial length " + std::to_string(m.n_samples));
  }
  TrialSet set;
  set.duration_s = duration_s;
  set.n_channels = m.n_channels;
  set.n_epoch_samples = n;
  set.n_classes = m.n_targets;
  set.sampling_rate_hz = m.sampling_rate_hz;
  set.channel_names = m.channel_names;
  set.trials.reserve(static_cast<std::size_t>(m.n_blocks) * m.n_targets);
  for (int b = 0; b < m.n_blocks; ++b) {
    for (int t = 0; t < m.n_targets; ++t) {
      Trial trial;
      trial.epoch.resize(m.n_channels, n);
      for (int c = 0; c < m.n_channels; ++c) {
        const float* src = &archive.data[archive.index(b, t, c, start)];
        for (int s = 0; s < n; ++s) {
          trial.epoch(c, s) = static_cast<double>(src[s]);
        }
      }
      trial.label = t;
      trial.subject_id = m.subject_id;
      trial.block_index = b;
      set.trials.push_back(std::move(trial));
    }
  }
  return set;
}

TrialSet select_channels(const TrialSet& trials, const std::vector<std::string>& names) {
  std::vector<int> rows;
  rows.reserve(names.size());
  for (const auto& name : names) {
    auto it = std::find(trials.channel_names.begin(), trials.channel_names.end(), name);
    if (it == trials.channel_names.end()) {
      throw LookupError("unknown channel '" + name + "'");
    }
    rows.push_back(static_cast<int>(it - trials.channel_names.begin()));
  }
  TrialSet out = trials;
  out.n_channels = static_cast<int>(names.size());
  out.channel_names = names;
  for (auto& trial : out.trials) {
    Matrix picked(static_cast<Eigen::Index>(rows.size()), trial.epoch.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      picked.row(static_cast<Eigen::Index>(i)) = trial.epoch.row(rows[i]);
    }
    trial.epoch = std::move(picked);
  }
  return out;
}

FoldPlan plan_leave_one_block_out(int n_blocks) {
  if (n_blocks < 2) {
    throw ArgumentError("leave-one-block-out needs at least 2 blocks, got " + std::to_string(n_blocks));
  }
  FoldPlan plan;
  for (int test = 0; test < n_blocks; ++test) {
    Fold fold;
    fold.test_block = test;
    for (int b = 0; b < n_blocks; ++b) {
      if (b != test) fold.train_blocks.push_back(b);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

TrialSet merge_trialsets(const std::vector<TrialSet>& sets) {
  if (sets.empty()) {
    throw ArgumentError("nothing to merge");
  }
  TrialSet out = sets.front();
  for (std::size_t i = 1; i < sets.size(); ++i) {
    const auto& s = sets[i];
    if (s.n_channels != out.n_channels || s.n_epoch_samples != out.n_epoch_samples ||
        s.n_classes != out.n_classes) {
      throw ArgumentError("cannot merge trial sets with differing (C, N, M)");
    }
    out.trials.insert(out.trials.end(), s.trials.begin(), s.trials.end());
  }
  return out;
}

TrialSet filter_blocks(const TrialSet& trials, const std::vector<int>& blocks) {
  TrialSet out = trials;
  out.trials.clear();
  for (const auto& trial : trials.trials) {
    if (std::find(blocks.begin(), blocks.end(), trial.block_index) != blocks.end()) {
      out.trials.push_back(trial);
    }
  }
  return out;
}

std::vector<std::string> channel_preset(const std::string& name) {
  if (name == "3") return {"O1", "Oz", "O2"};
  if (name == "6") return {"O1", "Oz", "O2", "POz", "PO3", "PO4"};
  if (name == "9") return {"Pz", "PO3", "PO5", "PO4", "PO6", "POz", "O1", "Oz", "O2"};
  if (name == "all" || name == "64") return {};
  throw LookupError("unknown channel preset '" + name + "'");
}

}  // namespace ssvep
