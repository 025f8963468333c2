#pragma once

#include <span>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

struct BandpassSpec {
  double low_cut_hz = 0.0;
  double high_cut_hz = 0.0;
  int order = 2;                    // analog low-pass prototype order
  double passband_ripple_db = 1.0;
};

// Transfer function b(z)/a(z) with a[0] == 1.
struct FilterCoefficients {
  std::vector<double> numerator;
  std::vector<double> denominator;
};

// Sub-band r (1-based) spans [r * base_freq_hz - margin_hz, upper_cut_hz].
struct FilterBankSpec {
  int n_subbands = 3;
  double base_freq_hz = 8.0;
  double margin_hz = 2.0;
  double upper_cut_hz = 90.0;

  BandpassSpec band(int r) const;
  void validate(double sampling_rate_hz) const;
};

// Channels x samples x sub-bands, stored as one C x N slice per sub-band.
struct SubbandStack {
  std::vector<Matrix> slices;

  int n_subbands() const { return static_cast<int>(slices.size()); }
  int n_channels() const { return slices.empty() ? 0 : static_cast<int>(slices[0].rows()); }
  int n_samples() const { return slices.empty() ? 0 : static_cast<int>(slices[0].cols()); }
};

// Chebyshev type I band-pass: analytic prototype poles, low-pass to band-pass
// transform, bilinear transform with pre-warped edges. The result has
// 2 * order + 1 taps and unit-circle zeros at DC and Nyquist.
FilterCoefficients design_cheby1_bandpass(const BandpassSpec& spec, double sampling_rate_hz);

// Direct-form II transposed IIR filter with optional initial state.
std::vector<double> lfilter(const FilterCoefficients& coeffs, std::span<const double> x,
                            std::span<const double> initial_state = {});

// |H(e^{jw})| at `freq_hz`.
double magnitude_response(const FilterCoefficients& coeffs, double freq_hz, double sampling_rate_hz);

// Forward-backward filtering for signals of one fixed length. The input is
// extended at both ends by an odd reflection of 3 * (taps - 1) samples and
// each pass starts from the filter's steady state for the first sample it
// sees, so constants pass through untouched by edge transients. The output
// is the mean of the forward-backward result and its time mirror
// (backward-forward), which makes the operator exactly reversal-symmetric.
class ZeroPhaseFilter {
 public:
  ZeroPhaseFilter(FilterCoefficients coeffs, int signal_length);

  int signal_length() const { return length_; }
  int pad_length() const { return pad_; }
  std::vector<double> apply(std::span<const double> signal) const;

 private:
  FilterCoefficients coeffs_;
  int length_ = 0;
  int pad_ = 0;
  int order_ = 0;
  std::vector<double> step_state_;  // filter state after a long unit step

  std::vector<double> forward_backward(const std::vector<double>& ext) const;
};

std::vector<double> filtfilt(const FilterCoefficients& coeffs, std::span<const double> signal);

// Precomputed bank for epochs of a fixed length.
class SubbandFilter {
 public:
  SubbandFilter(const FilterBankSpec& bank, double sampling_rate_hz, int n_samples);

  SubbandStack apply(const Matrix& epoch) const;
  const std::vector<FilterCoefficients>& coefficients() const { return coeffs_; }

 private:
  std::vector<FilterCoefficients> coeffs_;
  std::vector<ZeroPhaseFilter> filters_;
  int n_samples_ = 0;
};

SubbandStack make_subbands(const Matrix& epoch, const FilterBankSpec& bank, double sampling_rate_hz);

}  // namespace ssvep
