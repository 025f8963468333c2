#include "ssvep/analysis.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"
#include "ssvep/network.hpp"

namespace ssvep {

void StimulusLayout::validate() const {
  if (freqs_hz.empty()) throw ArgumentError("stimulus layout has no frequencies");
  if (phases_rad.size() != freqs_hz.size()) throw ArgumentError("one phase per stimulus frequency is required");
  if (!(refresh_rate_hz > 0.0)) throw ArgumentError("refresh rate must be positive");
  const double fmax = *std::max_element(freqs_hz.begin(), freqs_hz.end());
  if (!(refresh_rate_hz > 2.0 * fmax)) throw ArgumentError("refresh rate must exceed twice the highest frequency");
  if (!(duration_s > 0.0)) throw ArgumentError("layout duration must be positive");
}

StimulusLayout StimulusLayout::jfpm(int n_targets, double start_hz, double step_hz, double duration_s,
                                    double refresh_rate_hz) {
  StimulusLayout layout;
  layout.refresh_rate_hz = refresh_rate_hz;
  layout.duration_s = duration_s;
  for (int j = 0; j < n_targets; ++j) {
    layout.freqs_hz.push_back(start_hz + j * step_hz);
    layout.phases_rad.push_back(std::fmod(j * 0.5 * std::numbers::pi, 2.0 * std::numbers::pi));
  }
  return layout;
}

Matrix sinusoid_distance_matrix(const StimulusLayout& layout) {
  layout.validate();
  const double exact = layout.duration_s * layout.refresh_rate_hz;
  const long frames = std::lround(exact);
  if (frames < 1 || std::abs(exact - static_cast<double>(frames)) > 1e-9 * std::max(1.0, exact)) {
    throw ArgumentError("T * R must be a positive whole number of frames");
  }
  const auto m = static_cast<Eigen::Index>(layout.freqs_hz.size());
  Matrix frames_of(m, frames);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (long k = 0; k < frames; ++k) {
      frames_of(j, k) = 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * layout.freqs_hz[j] * k /
                                                   layout.refresh_rate_hz +
                                               layout.phases_rad[j]));
    }
  }
  Matrix d = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      d(i, j) = d(j, i) = (frames_of.row(i) - frames_of.row(j)).cwiseAbs().sum() / static_cast<double>(frames);
    }
  }
  return d;
}

std::vector<std::pair<double, double>> distance_by_gap(const StimulusLayout& layout, const Matrix& distances) {
  const auto m = static_cast<Eigen::Index>(layout.freqs_hz.size());
  if (distances.rows() != m || distances.cols() != m) throw ArgumentError("distance matrix does not match layout");
  std::map<long long, std::pair<double, long>> sums;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto key = std::llround(std::abs(layout.freqs_hz[i] - layout.freqs_hz[j]) * 1e6);
      auto& [sum, count] = sums[key];
      sum += distances(i, j);
      ++count;
    }
  }
  std::vector<std::pair<double, double>> profile;
  for (const auto& [key, acc] : sums) profile.emplace_back(key * 1e-6, acc.first / acc.second);
  return profile;
}

double distance_at_gap(const std::vector<std::pair<double, double>>& profile, double gap_hz) {
  for (const auto& [gap, mean] : profile) {
    if (std::abs(gap - gap_hz) < 1e-6) return mean;
  }
  throw LookupError("no stimulus pair is " + std::to_string(gap_hz) + " Hz apart");
}

std::string distance_matrix_csv(const StimulusLayout& layout, const Matrix& distances) {
  std::ostringstream out;
  out << std::setprecision(10) << "freq_hz";
  for (double f : layout.freqs_hz) out << ',' << f;
  out << '\n';
  for (Eigen::Index i = 0; i < distances.rows(); ++i) {
    out << layout.freqs_hz[i];
    for (Eigen::Index j = 0; j < distances.cols(); ++j) out << ',' << distances(i, j);
    out << '\n';
  }
  return out.str();
}

std::vector<ChannelWeight> channel_importance(const std::vector<SsvepArchive>& archives,
                                              const ImportanceOptions& options) {
  if (archives.empty()) throw ArgumentError("no archives for channel importance");
  if (options.n_combinations < 1) throw ArgumentError("need at least one channel combination");
  const auto& names = archives.front().meta.channel_names;
  for (const auto& a : archives) {
    if (a.meta.channel_names != names) throw ArgumentError("archives do not share one channel set");
  }

  std::vector<std::vector<Example>> examples;
  ExampleRefs pooled;
  NetworkConfig config;
  for (const auto& archive : archives) {
    const TrialSet trials = extract_epochs(archive, options.duration_s);
    examples.push_back(prepare_examples(trials, options.bank));
    config = NetworkConfig::standard(trials.n_channels, trials.n_epoch_samples, options.bank.n_subbands,
                                     trials.n_classes);
  }
  for (const auto& set : examples) {
    for (const auto& e : set) pooled.push_back(&e);
  }
  config.n_combinations = options.n_combinations;
  config.validate();

  StageConfig stage = options.stage;
  stage.seed = derive_seed(options.stage.seed, "importance", "global", -1);
  Rng rng(io::mix64(stage.seed));
  const auto result = train_stage(config, pooled, init_params(config, rng), stage);

  std::vector<ChannelWeight> weights;
  for (int c = 0; c < config.n_channels; ++c) {
    ChannelWeight w{names[c], {}, 0.0};
    for (int k = 0; k < config.n_combinations; ++k) {
      w.magnitudes.push_back(std::abs(result.params.w2.values[static_cast<std::size_t>(c) * config.n_combinations + k]));
      w.total += w.magnitudes.back();
    }
    weights.push_back(std::move(w));
  }
  return weights;
}

std::string importance_csv(const std::vector<ChannelWeight>& weights) {
  std::ostringstream out;
  out << std::setprecision(10) << "channel";
  const std::size_t k = weights.empty() ? 0 : weights.front().magnitudes.size();
  for (std::size_t i = 1; i <= k; ++i) out << ",w" << i;
  out << ",total\n";
  for (const auto& w : weights) {
    out << w.channel;
    for (double v : w.magnitudes) out << ',' << v;
    out << ',' << w.total << '\n';
  }
  return out.str();
}

Matrix SynthSpec::default_mixing(int n_channels, int n_harmonics) {
  Matrix mix(n_channels, n_harmonics);
  for (int c = 0; c < n_channels; ++c) {
    for (int k = 0; k < n_harmonics; ++k) mix(c, k) = 1.0 / (1.0 + std::abs(c - k));
  }
  return mix;
}

void SynthSpec::validate() const {
  if (n_classes < 1 || n_channels < 1 || n_blocks < 1) throw ArgumentError("synthetic sizes must be positive");
  if (!(sampling_rate_hz > 0.0) || !(duration_s > 0.0)) throw ArgumentError("rate and duration must be positive");
  if (cue_duration_s < 0.0 || visual_latency_s < 0.0) throw ArgumentError("cue and latency must be nonnegative");
  if (harmonic_amplitudes.empty()) throw ArgumentError("at least one harmonic is required");
  if (harmonic_phases.size() != harmonic_amplitudes.size()) {
    throw ArgumentError("one phase per harmonic amplitude is required");
  }
  for (double a : harmonic_amplitudes) {
    if (!(a >= 0.0)) throw ArgumentError("harmonic amplitudes must be nonnegative");
  }
  if (!(noise_std >= 0.0)) throw ArgumentError("noise_std must be nonnegative");
  if (channel_mixing.size() != 0) {
    const auto k = static_cast<Eigen::Index>(harmonic_amplitudes.size());
    if (channel_mixing.rows() != n_channels || channel_mixing.cols() != k) {
      throw ArgumentError("channel_mixing must be n_channels x n_harmonics");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(channel_mixing);
    if (lu.rank() != std::min<Eigen::Index>(n_channels, k)) throw ArgumentError("channel_mixing is rank deficient");
  }
}

SsvepArchive generate_synthetic(const SynthSpec& spec, const std::vector<double>& freqs_hz,
                                const std::vector<double>& phases_rad) {
  spec.validate();
  if (static_cast<int>(freqs_hz.size()) != spec.n_classes) throw ArgumentError("one frequency per class is required");
  if (!phases_rad.empty() && phases_rad.size() != freqs_hz.size()) {
    throw ArgumentError("one stimulus phase per class is required");
  }
  const int n_harm = static_cast<int>(spec.harmonic_amplitudes.size());
  for (double f : freqs_hz) {
    if (n_harm * f >= spec.sampling_rate_hz / 2.0) {
      throw ArgumentError("harmonic " + std::to_string(n_harm) + " of " + std::to_string(f) +
                          " Hz aliases at the sampling rate");
    }
  }
  const Matrix mix = spec.channel_mixing.size() ? spec.channel_mixing : SynthSpec::default_mixing(spec.n_channels, n_harm);

  RecordingMeta meta;
  meta.subject_id = spec.subject_id;
  meta.sampling_rate_hz = spec.sampling_rate_hz;
  meta.n_blocks = spec.n_blocks;
  meta.n_targets = spec.n_classes;
  meta.n_channels = spec.n_channels;
  const int onset = seconds_to_samples(spec.cue_duration_s + spec.visual_latency_s, spec.sampling_rate_hz);
  meta.n_samples = onset + seconds_to_samples(spec.duration_s, spec.sampling_rate_hz);
  meta.stimulus_freqs_hz = freqs_hz;
  meta.stimulus_phases_rad = phases_rad.empty() ? std::vector<double>(freqs_hz.size(), 0.0) : phases_rad;
  for (int c = 0; c < spec.n_channels; ++c) meta.channel_names.push_back("CH" + std::to_string(c + 1));
  meta.cue_duration_s = spec.cue_duration_s;
  meta.visual_latency_s = spec.visual_latency_s;
  meta.validate();

  SsvepArchive archive(meta);
  Rng rng(io::mix64(spec.seed));
  std::normal_distribution<double> noise(0.0, 1.0);
  Vector sources(n_harm);
  for (int b = 0; b < spec.n_blocks; ++b) {
    for (int j = 0; j < spec.n_classes; ++j) {
      for (int n = 0; n < meta.n_samples; ++n) {
        const bool on = n >= onset;
        if (on) {
          const double t = (n - onset) / spec.sampling_rate_hz;
          for (int k = 0; k < n_harm; ++k) {
            sources(k) = spec.harmonic_amplitudes[k] *
                         std::sin(2.0 * std::numbers::pi * (k + 1) * freqs_hz[j] * t + spec.harmonic_phases[k] +
                                  meta.stimulus_phases_rad[j]);
          }
        }
        for (int c = 0; c < spec.n_channels; ++c) {
          double v = on ? mix.row(c).dot(sources) : 0.0;
          if (spec.noise_std > 0.0) v += spec.noise_std * noise(rng);
          archive.at(b, j, c, n) = static_cast<float>(v);
        }
      }
    }
  }
  return archive;
}

}  // namespace ssvep
