#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssvep/dataset.hpp"
#include "ssvep/filterbank.hpp"
#include "ssvep/training.hpp"
#include "ssvep/types.hpp"

namespace ssvep {

struct StimulusLayout {
  std::vector<double> freqs_hz;
  std::vector<double> phases_rad;
  double refresh_rate_hz = 60.0;
  double duration_s = 5.0;

  void validate() const;

  // Joint frequency-phase layout: f_j = start + j * step over ascending
  // frequencies, theta_j = (j * 0.5 pi) mod 2 pi.
  static StimulusLayout jfpm(int n_targets = 40, double start_hz = 8.0, double step_hz = 0.2,
                             double duration_s = 5.0, double refresh_rate_hz = 60.0);
};

// Mean absolute difference between the frame sequences
// s(f, theta, k) = (1 + sin(2 pi f k / R + theta)) / 2, k = 0 .. T*R - 1.
Matrix sinusoid_distance_matrix(const StimulusLayout& layout);

// Mean off-diagonal distance per frequency gap |f_i - f_j|, gaps rounded to
// 1e-6 Hz and listed ascending.
std::vector<std::pair<double, double>> distance_by_gap(const StimulusLayout& layout, const Matrix& distances);

// Mean distance at one gap; throws LookupError when no pair has that gap.
double distance_at_gap(const std::vector<std::pair<double, double>>& profile, double gap_hz);

std::string distance_matrix_csv(const StimulusLayout& layout, const Matrix& distances);

struct ChannelWeight {
  std::string channel;
  std::vector<double> magnitudes;  // |w2(c, k)| for each combination k
  double total = 0.0;
};

struct ImportanceOptions {
  FilterBankSpec bank;
  StageConfig stage = StageConfig::benchmark_global();
  int n_combinations = 3;
  double duration_s = 0.2;  // 50 samples at 250 Hz
};

// Retrains the network with a narrow second layer on every trial of every
// archive (no held-out data) and reads the channel weights back.
std::vector<ChannelWeight> channel_importance(const std::vector<SsvepArchive>& archives,
                                              const ImportanceOptions& options);

std::string importance_csv(const std::vector<ChannelWeight>& weights);

struct SynthSpec {
  std::string subject_id = "synthetic";
  int n_classes = 8;
  int n_channels = 4;
  double sampling_rate_hz = 250.0;
  double duration_s = 1.0;  // stimulation length after onset
  std::vector<double> harmonic_amplitudes{1.0, 0.5, 0.25};
  std::vector<double> harmonic_phases{0.0, 0.0, 0.0};
  double noise_std = 0.5;
  // n_channels x n_harmonics; harmonic k reaches channel c with weight (c, k).
  Matrix channel_mixing;
  int n_blocks = 4;
  std::uint64_t seed = 0;
  double cue_duration_s = 0.5;
  double visual_latency_s = 0.14;

  void validate() const;
  // Mixing with entry (c, k) = 1 / (1 + |c - k|), full rank by construction.
  static Matrix default_mixing(int n_channels, int n_harmonics);
};

// One archive of synthetic SSVEP trials. The response to class j is
// mixing * [A_k sin(2 pi k f_j t + phi_k + theta_j)]_k starting at the epoch
// onset (cue + latency), plus white Gaussian noise on every sample. `phases`
// may be empty (all zero).
SsvepArchive generate_synthetic(const SynthSpec& spec, const std::vector<double>& freqs_hz,
                                const std::vector<double>& phases_rad = {});

}  // namespace ssvep
