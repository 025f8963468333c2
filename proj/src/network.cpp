#include "ssvep/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssvep/errors.hpp"

namespace ssvep {

namespace {

using ColMap = Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
using MutColMap = Eigen::Map<Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
using Strided = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
using RowsMap = Eigen::Map<const Matrix, 0, Strided>;
using MutRowsMap = Eigen::Map<Matrix, 0, Strided>;
using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;

// Tap `tap` of a [N_ch, taps, N_ch] filter tensor, viewed as (d x k).
ColMap filter_tap(const Tensor& w, int n_comb, int taps, int tap) {
  return ColMap(w.values.data() + static_cast<std::ptrdiff_t>(tap) * n_comb, n_comb, n_comb,
                Eigen::OuterStride<>(taps * n_comb));
}

MutColMap filter_tap(Tensor& w, int n_comb, int taps, int tap) {
  return MutColMap(w.values.data() + static_cast<std::ptrdiff_t>(tap) * n_comb, n_comb, n_comb,
                   Eigen::OuterStride<>(taps * n_comb));
}

// Rows offset, offset + stride, ... of a row-major matrix.
RowsMap strided_rows(const Matrix& m, int offset, int stride, int count) {
  return RowsMap(m.data() + static_cast<std::ptrdiff_t>(offset) * m.cols(), count, m.cols(),
                 Strided(static_cast<Eigen::Index>(stride) * m.cols(), 1));
}

MutRowsMap strided_rows(Matrix& m, int offset, int stride, int count) {
  return MutRowsMap(m.data() + static_cast<std::ptrdiff_t>(offset) * m.cols(), count, m.cols(),
                    Strided(static_cast<Eigen::Index>(stride) * m.cols(), 1));
}

Matrix draw_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(rows, cols);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform(rng) < p ? 0.0 : keep_scale;
  }
  return mask;
}

Matrix apply_mask(const Matrix& values, const Matrix& mask) {
  return mask.size() == 0 ? values : Matrix(values.cwiseProduct(mask));
}

void check_cache(const ForwardCache& cache, int label, const Parameters& params) {
  if (!params.matches(cache.config)) {
    throw ArgumentError("parameters do not match the cached network configuration");
  }
  if (label < 0 || label >= cache.config.n_classes) {
    throw ArgumentError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(cache.config.n_classes) + ")");
  }
  if (cache.softmax.size() != cache.config.n_classes || cache.z4.rows() != cache.config.len4()) {
    throw ArgumentError("forward cache is incomplete or from another configuration");
  }
}

}  // namespace

NetworkConfig NetworkConfig::standard(int n_channels, int n_samples, int n_subbands, int n_classes) {
  NetworkConfig c;
  c.n_channels = n_channels;
  c.n_samples = n_samples;
  c.n_subbands = n_subbands;
  c.n_classes = n_classes;
  c.n_combinations = n_subbands * n_classes;
  return c;
}

void NetworkConfig::validate() const {
  if (n_channels < 1 || n_samples < 1 || n_subbands < 1 || n_classes < 1 || n_combinations < 1) {
    throw ArgumentError("network dimensions must be positive");
  }
  if (fir_length < 1 || downsample_stride < 1 || tap_length < 1) {
    throw ArgumentError("filter lengths and stride must be positive");
  }
  if (n_samples < tap_length) {
    throw ArgumentError("epoch shorter than the layer-3 taps");
  }
  if (len3() <= fir_length - 1) {
    throw ArgumentError("epoch of " + std::to_string(n_samples) + " samples is too short for a length-" +
                        std::to_string(fir_length) + " FIR after down-sampling");
  }
}

Tensor::Tensor(std::vector<int> dims) : shape(std::move(dims)) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  values.assign(n, 0.0);
}

Parameters Parameters::zeros(const NetworkConfig& c) {
  c.validate();
  Parameters p;
  p.w1 = Tensor({c.n_subbands});
  p.w2 = Tensor({c.n_channels, c.n_combinations});
  p.w3 = Tensor({c.n_combinations, c.tap_length, c.n_combinations});
  p.w4 = Tensor({c.n_combinations, c.fir_length, c.n_combinations});
  p.w_fc = Tensor({c.fc_inputs(), c.n_classes});
  p.b_fc = Tensor({c.n_classes});
  return p;
}

double Parameters::squared_norm() const {
  double sum = 0.0;
  for (const Tensor* t : tensors()) {
    for (double v : t->values) sum += v * v;
  }
  return sum;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

bool Parameters::matches(const NetworkConfig& config) const {
  const Parameters expected = zeros(config);
  const auto mine = tensors();
  const auto theirs = expected.tensors();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i]->shape != theirs[i]->shape || mine[i]->values.size() != theirs[i]->values.size()) {
      return false;
    }
  }
  return true;
}

void DropoutSpec::validate() const {
  for (double p : {p_after_l2, p_after_l3, p_after_l4}) {
    if (!(p >= 0.0 && p < 1.0)) {
      throw ArgumentError("dropout probabilities must lie in [0, 1)");
    }
  }
}

Vector softmax(const Vector& logits) {
  const double peak = logits.maxCoeff();
  Vector e = (logits.array() - peak).exp();
  return e / e.sum();
}

Parameters init_params(const NetworkConfig& config, Rng& rng) {
  Parameters p = Parameters::zeros(config);
  std::fill(p.w1.values.begin(), p.w1.values.end(), 1.0);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (Tensor* t : {&p.w2, &p.w3, &p.w4, &p.w_fc, &p.b_fc}) {
    for (double& v : t->values) v = normal(rng);
  }
  return p;
}

ForwardCache forward(const NetworkConfig& config, const Parameters& params, const SubbandStack& stack,
                     const DropoutSpec& dropout, Rng& rng) {
  if (!params.matches(config)) {
    throw ArgumentError("parameters do not match the network configuration");
  }
  if (stack.n_subbands() != config.n_subbands || stack.n_channels() != config.n_channels ||
      stack.n_samples() != config.n_samples) {
    throw ArgumentError("input volume " + std::to_string(stack.n_channels()) + "x" +
                        std::to_string(stack.n_samples()) + "x" + std::to_string(stack.n_subbands()) +
                        " does not match the network input " + std::to_string(config.n_channels) + "x" +
                        std::to_string(config.n_samples) + "x" + std::to_string(config.n_subbands));
  }
  const bool drop = dropout.enabled;
  if (drop) dropout.validate();

  const int nch = config.n_combinations;
  const int len3 = config.len3();
  const int len4 = config.len4();

  ForwardCache cache;
  cache.config = config;
  cache.input = stack;

  // Layer 1: sub-band combination.
  cache.z1 = Matrix::Zero(config.n_channels, config.n_samples);
  for (int r = 0; r < config.n_subbands; ++r) {
    cache.z1 += params.w1.values[r] * stack.slices[r];
  }

  // Layer 2: channel combinations, z2 = z1' w2.
  const ConstMatMap w2(params.w2.values.data(), config.n_channels, nch);
  cache.z2 = cache.z1.transpose() * w2;
  if (drop && dropout.p_after_l2 > 0.0) cache.mask2 = draw_mask(cache.z2.rows(), cache.z2.cols(), dropout.p_after_l2, rng);
  cache.l3_input = apply_mask(cache.z2, cache.mask2);

  // Layer 3: strided two-tap filtering across the full depth, then ReLU.
  Matrix pre3 = Matrix::Zero(len3, nch);
  for (int tap = 0; tap < config.tap_length; ++tap) {
    pre3.noalias() += strided_rows(cache.l3_input, tap, config.downsample_stride, len3) *
                      filter_tap(params.w3, nch, config.tap_length, tap);
  }
  cache.z3 = pre3.cwiseMax(0.0);
  if (drop && dropout.p_after_l3 > 0.0) cache.mask3 = draw_mask(len3, nch, dropout.p_after_l3, rng);
  cache.l4_input = apply_mask(cache.z3, cache.mask3);

  // Layer 4: valid FIR convolution across the full depth.
  cache.z4 = Matrix::Zero(len4, nch);
  for (int tap = 0; tap < config.fir_length; ++tap) {
    cache.z4.noalias() += cache.l4_input.middleRows(tap, len4) * filter_tap(params.w4, nch, config.fir_length, tap);
  }
  if (drop && dropout.p_after_l4 > 0.0) cache.mask4 = draw_mask(len4, nch, dropout.p_after_l4, rng);
  cache.fc_input = apply_mask(cache.z4, cache.mask4);

  // Layer 5: fully connected + softmax.
  const ConstMatMap w_fc(params.w_fc.values.data(), config.fc_inputs(), config.n_classes);
  const Eigen::Map<const Vector> flat(cache.fc_input.data(), config.fc_inputs());
  const Eigen::Map<const Vector> bias(params.b_fc.values.data(), config.n_classes);
  cache.logits = w_fc.transpose() * flat + bias;
  cache.softmax = softmax(cache.logits);
  return cache;
}

double loss(const ForwardCache& cache, int label, const Parameters& params, double l2_lambda) {
  check_cache(cache, label, params);
  const double p = std::max(cache.softmax[label], 1e-12);
  return -std::log(p) + l2_lambda * params.squared_norm();
}

Gradients backward(const ForwardCache& cache, int label, const Parameters& params, double l2_lambda) {
  check_cache(cache, label, params);
  const auto& config = cache.config;
  const int nch = config.n_combinations;
  const int len3 = config.len3();
  const int len4 = config.len4();
  Gradients g = Parameters::zeros(config);

  Vector dlogits = cache.softmax;
  dlogits[label] -= 1.0;

  // Layer 5.
  const Eigen::Map<const Vector> flat(cache.fc_input.data(), config.fc_inputs());
  MatMap g_fc(g.w_fc.values.data(), config.fc_inputs(), config.n_classes);
  g_fc.noalias() = flat * dlogits.transpose();
  Eigen::Map<Vector>(g.b_fc.values.data(), config.n_classes) = dlogits;
  const ConstMatMap w_fc(params.w_fc.values.data(), config.fc_inputs(), config.n_classes);
  Matrix dz4(len4, nch);
  Eigen::Map<Vector>(dz4.data(), config.fc_inputs()).noalias() = w_fc * dlogits;
  if (cache.mask4.size() != 0) dz4.array() *= cache.mask4.array();

  // Layer 4.
  Matrix dl4 = Matrix::Zero(len3, nch);
  for (int tap = 0; tap < config.fir_length; ++tap) {
    filter_tap(g.w4, nch, config.fir_length, tap).noalias() = cache.l4_input.middleRows(tap, len4).transpose() * dz4;
    dl4.middleRows(tap, len4).noalias() += dz4 * filter_tap(params.w4, nch, config.fir_length, tap).transpose();
  }
  if (cache.mask3.size() != 0) dl4.array() *= cache.mask3.array();
  const Matrix dpre3 = (cache.z3.array() > 0.0).select(dl4.array(), 0.0).matrix();

  // Layer 3.
  Matrix dl3 = Matrix::Zero(config.n_samples, nch);
  for (int tap = 0; tap < config.tap_length; ++tap) {
    filter_tap(g.w3, nch, config.tap_length, tap).noalias() =
        strided_rows(cache.l3_input, tap, config.downsample_stride, len3).transpose() * dpre3;
    auto rows = strided_rows(dl3, tap, config.downsample_stride, len3);
    rows += dpre3 * filter_tap(params.w3, nch, config.tap_length, tap).transpose();
  }
  if (cache.mask2.size() != 0) dl3.array() *= cache.mask2.array();

  // Layer 2.
  MatMap(g.w2.values.data(), config.n_channels, nch).noalias() = cache.z1 * dl3;
  const ConstMatMap w2(params.w2.values.data(), config.n_channels, nch);
  const Matrix dz1 = w2 * dl3.transpose();

  // Layer 1.
  for (int r = 0; r < config.n_subbands; ++r) {
    g.w1.values[r] = dz1.cwiseProduct(cache.input.slices[r]).sum();
  }

  if (l2_lambda != 0.0) {
    const auto grads = g.tensors();
    const auto values = params.tensors();
    for (std::size_t i = 0; i < grads.size(); ++i) {
      for (std::size_t j = 0; j < grads[i]->values.size(); ++j) {
        grads[i]->values[j] += 2.0 * l2_lambda * values[i]->values[j];
      }
    }
  }
  return g;
}

int predict(const NetworkConfig& config, const Parameters& params, const SubbandStack& stack) {
  Rng unused(0);
  const auto cache = forward(config, params, stack, DropoutSpec::disabled(), unused);
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < cache.softmax.size(); ++j) {
    if (cache.softmax[j] > cache.softmax[best]) best = j;
  }
  return static_cast<int>(best);
}

}  // namespace ssvep
