#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

inline constexpr char kArchiveMagic[] = "SSVEPAR1";

struct RecordingMeta {
  std::string subject_id;
  double sampling_rate_hz = 0.0;
  int n_blocks = 0;
  int n_targets = 0;
  int n_channels = 0;
  int n_samples = 0;
  std::vector<double> stimulus_freqs_hz;
  std::vector<double> stimulus_phases_rad;
  std::vector<std::string> channel_names;
  double cue_duration_s = 0.0;
  double visual_latency_s = 0.0;

  // Throws ArgumentError describing the first violated invariant.
  void validate() const;
  int channel_index(const std::string& name) const;

  bool operator==(const RecordingMeta&) const = default;
};

// One subject's raw recording, [block][target][channel][sample] in float32.
struct SsvepArchive {
  RecordingMeta meta;
  std::vector<float> data;

  SsvepArchive() = default;
  // Zero-filled tensor sized from `meta`.
  explicit SsvepArchive(RecordingMeta m);

  std::size_t index(int block, int target, int channel, int sample) const {
    return ((static_cast<std::size_t>(block) * meta.n_targets + target) * meta.n_channels + channel) *
               meta.n_samples +
           sample;
  }
  float& at(int block, int target, int channel, int sample) { return data[index(block, target, channel, sample)]; }
  float at(int block, int target, int channel, int sample) const { return data[index(block, target, channel, sample)]; }

  // Checks meta invariants, tensor size and finiteness.
  void validate() const;
};

struct Trial {
  Matrix epoch;  // C x N
  int label = 0;
  std::string subject_id;
  int block_index = 0;
};

struct TrialSet {
  std::vector<Trial> trials;
  double duration_s = 0.0;
  int n_channels = 0;
  int n_epoch_samples = 0;
  int n_classes = 0;
  double sampling_rate_hz = 0.0;
  std::vector<std::string> channel_names;
};

struct Fold {
  int test_block = 0;
  std::vector<int> train_blocks;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

// Round half away from zero of seconds * rate.
int seconds_to_samples(double seconds, double rate_hz);

SsvepArchive read_archive(const std::filesystem::path& path);
void write_archive(const SsvepArchive& archive, const std::filesystem::path& path);

// In-memory codec behind read_archive/write_archive.
std::vector<std::uint8_t> encode_archive(const SsvepArchive& archive);
SsvepArchive decode_archive(std::span<const std::uint8_t> bytes);

TrialSet extract_epochs(const SsvepArchive& archive, double duration_s);
TrialSet select_channels(const TrialSet& trials, const std::vector<std::string>& names);
FoldPlan plan_leave_one_block_out(int n_blocks);
TrialSet merge_trialsets(const std::vector<TrialSet>& sets);

// Keeps only trials whose block index is listed.
TrialSet filter_blocks(const TrialSet& trials, const std::vector<int>& blocks);

// Named electrode subsets; "all" (or "64") returns an empty list meaning
// every channel in the recording.
std::vector<std::string> channel_preset(const std::string& name);

}  // namespace ssvep
