#include "ssvep/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/LU>

#include "ssvep/errors.hpp"

namespace ssvep {

namespace {

using Complex = std::complex<double>;

// Coefficients of prod_i (x - roots[i]), highest power first.
std::vector<Complex> poly(const std::vector<Complex>& roots) {
  std::vector<Complex> c{1.0};
  for (const auto& r : roots) {
    std::vector<Complex> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  return c;
}

}  // namespace

BandpassSpec FilterBankSpec::band(int r) const {
  BandpassSpec spec;
  spec.low_cut_hz = r * base_freq_hz - margin_hz;
  spec.high_cut_hz = upper_cut_hz;
  return spec;
}

void FilterBankSpec::validate(double sampling_rate_hz) const {
  if (n_subbands < 1) {
    throw ArgumentError("filter bank needs at least one sub-band");
  }
  for (int r = 1; r <= n_subbands; ++r) {
    const auto b = band(r);
    if (!(b.low_cut_hz > 0.0) || !(b.low_cut_hz < b.high_cut_hz) || !(b.high_cut_hz < sampling_rate_hz / 2)) {
      throw DesignError("sub-band " + std::to_string(r) + " [" + std::to_string(b.low_cut_hz) + ", " +
                        std::to_string(b.high_cut_hz) + "] Hz is not a valid band at f_s=" +
                        std::to_string(sampling_rate_hz));
    }
  }
}

FilterCoefficients design_cheby1_bandpass(const BandpassSpec& spec, double fs) {
  if (!(fs > 0.0)) {
    throw DesignError("sampling rate must be positive");
  }
  if (!(spec.low_cut_hz > 0.0) || !(spec.low_cut_hz < spec.high_cut_hz)) {
    throw DesignError("band edges must satisfy 0 < low < high");
  }
  if (!(spec.high_cut_hz < fs / 2)) {
    throw DesignError("high cut-off " + std::to_string(spec.high_cut_hz) + " Hz is at or above Nyquist");
  }
  if (spec.order < 1 || !(spec.passband_ripple_db > 0.0)) {
    throw DesignError("order must be >= 1 and ripple positive");
  }
  const int n = spec.order;
  const double pi = std::numbers::pi;

  // Analog Chebyshev I prototype with its ripple band edge at 1 rad/s.
  const double eps = std::sqrt(std::pow(10.0, spec.passband_ripple_db / 10.0) - 1.0);
  const double mu = std::asinh(1.0 / eps) / n;
  std::vector<Complex> poles;
  for (int k = 1; k <= n; ++k) {
    const double theta = pi * (2 * k - 1) / (2.0 * n);
    poles.emplace_back(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
  }
  Complex prod{1.0};
  for (const auto& p : poles) prod *= -p;
  double gain = prod.real();
  if (n % 2 == 0) gain /= std::sqrt(1.0 + eps * eps);

  // Pre-warp the edges, then low-pass -> band-pass.
  const double fs2 = 2.0 * fs;
  const double w_lo = fs2 * std::tan(pi * spec.low_cut_hz / fs);
  const double w_hi = fs2 * std::tan(pi * spec.high_cut_hz / fs);
  const double bw = w_hi - w_lo;
  const double w0 = std::sqrt(w_lo * w_hi);

  std::vector<Complex> bp_poles;
  for (const auto& p : poles) {
    const Complex scaled = p * bw / 2.0;
    const Complex root = std::sqrt(scaled * scaled - w0 * w0);
    bp_poles.push_back(scaled + root);
    bp_poles.push_back(scaled - root);
  }
  std::vector<Complex> bp_zeros(n, Complex{0.0});
  gain *= std::pow(bw, n);

  // Bilinear transform; the n zeros at infinity land on z = -1.
  std::vector<Complex> z_zeros, z_poles;
  Complex num{1.0}, den{1.0};
  for (const auto& z : bp_zeros) {
    z_zeros.push_back((fs2 + z) / (fs2 - z));
    num *= fs2 - z;
  }
  for (const auto& p : bp_poles) {
    z_poles.push_back((fs2 + p) / (fs2 - p));
    den *= fs2 - p;
  }
  for (int i = 0; i < n; ++i) z_zeros.emplace_back(-1.0);
  gain *= (num / den).real();

  const auto b = poly(z_zeros);
  const auto a = poly(z_poles);
  FilterCoefficients out;
  for (const auto& c : b) out.numerator.push_back(gain * c.real());
  for (const auto& c : a) out.denominator.push_back(c.real());
  return out;
}

std::vector<double> lfilter(const FilterCoefficients& coeffs, std::span<const double> x,
                            std::span<const double> initial_state) {
  const std::size_t taps = std::max(coeffs.numerator.size(), coeffs.denominator.size());
  std::vector<double> b(taps, 0.0), a(taps, 0.0);
  const double a0 = coeffs.denominator.at(0);
  for (std::size_t i = 0; i < coeffs.numerator.size(); ++i) b[i] = coeffs.numerator[i] / a0;
  for (std::size_t i = 0; i < coeffs.denominator.size(); ++i) a[i] = coeffs.denominator[i] / a0;

  const std::size_t order = taps - 1;
  std::vector<double> z(order, 0.0);
  if (!initial_state.empty()) {
    if (initial_state.size() != order) {
      throw ArgumentError("initial state must have " + std::to_string(order) + " entries");
    }
    std::copy(initial_state.begin(), initial_state.end(), z.begin());
  }
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double xn = x[n];
    const double yn = b[0] * xn + (order > 0 ? z[0] : 0.0);
    for (std::size_t i = 0; i + 1 < order; ++i) {
      z[i] = b[i + 1] * xn + z[i + 1] - a[i + 1] * yn;
    }
    if (order > 0) z[order - 1] = b[order] * xn - a[order] * yn;
    y[n] = yn;
  }
  return y;
}

double magnitude_response(const FilterCoefficients& coeffs, double freq_hz, double fs) {
  const double w = 2.0 * std::numbers::pi * freq_hz / fs;
  Complex num{0.0}, den{0.0};
  for (std::size_t k = 0; k < coeffs.numerator.size(); ++k) {
    num += coeffs.numerator[k] * std::polar(1.0, -w * static_cast<double>(k));
  }
  for (std::size_t k = 0; k < coeffs.denominator.size(); ++k) {
    den += coeffs.denominator[k] * std::polar(1.0, -w * static_cast<double>(k));
  }
  return std::abs(num / den);
}

namespace {

std::vector<double> reversed(std::vector<double> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

}  // namespace

ZeroPhaseFilter::ZeroPhaseFilter(FilterCoefficients coeffs, int signal_length)
    : coeffs_(std::move(coeffs)), length_(signal_length) {
  const int taps = static_cast<int>(std::max(coeffs_.numerator.size(), coeffs_.denominator.size()));
  coeffs_.numerator.resize(taps, 0.0);
  coeffs_.denominator.resize(taps, 0.0);
  order_ = taps - 1;
  pad_ = 3 * order_;
  if (length_ <= pad_) {
    throw ArgumentError("signal of length " + std::to_string(length_) + " is too short; need more than " +
                        std::to_string(pad_) + " samples");
  }
  if (order_ == 0) return;

  // Steady-state response to a unit step: (I - A^T) zi = b[1:] - a[1:] b[0],
  // with A the companion matrix of the denominator.
  const auto& b = coeffs_.numerator;
  const auto& a = coeffs_.denominator;
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(order_, order_);
  Eigen::VectorXd rhs(order_);
  for (int i = 0; i < order_; ++i) {
    system(i, 0) += a[i + 1] / a[0];
    if (i + 1 < order_) system(i, i + 1) -= 1.0;
    rhs[i] = b[i + 1] - a[i + 1] * b[0];
  }
  const Eigen::VectorXd zi = system.partialPivLu().solve(rhs);
  step_state_.assign(zi.data(), zi.data() + order_);
}

std::vector<double> ZeroPhaseFilter::forward_backward(const std::vector<double>& ext) const {
  std::vector<double> state(order_);
  for (int k = 0; k < order_; ++k) state[k] = step_state_[k] * ext.front();
  auto y = reversed(lfilter(coeffs_, ext, state));
  for (int k = 0; k < order_; ++k) state[k] = step_state_[k] * y.front();
  return reversed(lfilter(coeffs_, y, state));
}

std::vector<double> ZeroPhaseFilter::apply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != length_) {
    throw ArgumentError("filter prepared for length " + std::to_string(length_) + ", got " +
                        std::to_string(x.size()));
  }
  const int n = length_;
  const int m = n + 2 * pad_;
  std::vector<double> ext(m);
  for (int i = 0; i < pad_; ++i) {
    ext[i] = 2.0 * x[0] - x[pad_ - i];
    ext[pad_ + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + pad_);

  // The odd extension commutes with reversal, so the mirrored pass sees the
  // extension of the reversed signal.
  const auto fb = forward_backward(ext);
  const auto bf = reversed(forward_backward(reversed(ext)));
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = 0.5 * (fb[pad_ + i] + bf[pad_ + i]);
  return out;
}

std::vector<double> filtfilt(const FilterCoefficients& coeffs, std::span<const double> signal) {
  return ZeroPhaseFilter(coeffs, static_cast<int>(signal.size())).apply(signal);
}

SubbandFilter::SubbandFilter(const FilterBankSpec& bank, double fs, int n_samples) : n_samples_(n_samples) {
  bank.validate(fs);
  for (int r = 1; r <= bank.n_subbands; ++r) {
    coeffs_.push_back(design_cheby1_bandpass(bank.band(r), fs));
    filters_.emplace_back(coeffs_.back(), n_samples);
  }
}

SubbandStack SubbandFilter::apply(const Matrix& epoch) const {
  if (epoch.cols() != n_samples_) {
    throw ArgumentError("epoch has " + std::to_string(epoch.cols()) + " samples, bank prepared for " +
                        std::to_string(n_samples_));
  }
  SubbandStack stack;
  for (const auto& filter : filters_) {
    Matrix slice(epoch.rows(), epoch.cols());
    for (Eigen::Index c = 0; c < epoch.rows(); ++c) {
      const auto row = filter.apply(std::span<const double>(epoch.row(c).data(), n_samples_));
      std::copy(row.begin(), row.end(), slice.row(c).data());
    }
    stack.slices.push_back(std::move(slice));
  }
  return stack;
}

SubbandStack make_subbands(const Matrix& epoch, const FilterBankSpec& bank, double fs) {
  return SubbandFilter(bank, fs, static_cast<int>(epoch.cols())).apply(epoch);
}

}  // namespace ssvep
