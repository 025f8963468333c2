#pragma once

#include <array>
#include <string>
#include <vector>

#include "ssvep/filterbank.hpp"
#include "ssvep/types.hpp"

namespace ssvep {

struct NetworkConfig {
  int n_channels = 0;      // C
  int n_samples = 0;       // N
  int n_subbands = 0;      // N_s
  int n_classes = 0;       // M
  int n_combinations = 0;  // N_ch, normally N_s * M
  int fir_length = 10;
  int downsample_stride = 2;
  int tap_length = 2;

  // N_ch = N_s * M.
  static NetworkConfig standard(int n_channels, int n_samples, int n_subbands, int n_classes);

  int len3() const { return (n_samples - tap_length) / downsample_stride + 1; }
  int len4() const { return len3() - fir_length + 1; }
  int fc_inputs() const { return len4() * n_combinations; }
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims);
  std::size_t size() const { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

// Trainable weights, in serialization order:
//   w1   [N_s]              sub-band weights
//   w2   [C, N_ch]          channel combinations
//   w3   [N_ch, tap, N_ch]  filter k, tap, input depth
//   w4   [N_ch, fir, N_ch]  filter k, tap, input depth
//   w_fc [len4 * N_ch, M]  rows follow the time-major flattening of z4
//   b_fc [M]
struct Parameters {
  Tensor w1, w2, w3, w4, w_fc, b_fc;

  static constexpr std::array<const char*, 6> kNames{"w1", "w2", "w3", "w4", "w_fc", "b_fc"};

  static Parameters zeros(const NetworkConfig& config);
  std::array<Tensor*, 6> tensors() { return {&w1, &w2, &w3, &w4, &w_fc, &b_fc}; }
  std::array<const Tensor*, 6> tensors() const { return {&w1, &w2, &w3, &w4, &w_fc, &b_fc}; }

  double squared_norm() const;
  std::size_t count() const;
  bool matches(const NetworkConfig& config) const;
  bool operator==(const Parameters&) const = default;
};

using Gradients = Parameters;

// Drop probabilities after layers 2, 3 and 4 (inverted dropout).
struct DropoutSpec {
  double p_after_l2 = 0.1;
  double p_after_l3 = 0.1;
  double p_after_l4 = 0.95;
  bool enabled = true;

  static DropoutSpec disabled() { return DropoutSpec{0.0, 0.0, 0.0, false}; }
  void validate() const;
  bool operator==(const DropoutSpec&) const = default;
};

struct ForwardCache {
  NetworkConfig config;
  SubbandStack input;
  Matrix z1;  // C x N
  Matrix z2;  // N x N_ch
  Matrix z3;  // len3 x N_ch, after ReLU
  Matrix z4;  // len4 x N_ch
  // Inverted-dropout multipliers (0 or 1/(1-p)); empty when not applied.
  Matrix mask2, mask3, mask4;
  // Layer inputs after dropout.
  Matrix l3_input, l4_input, fc_input;
  Vector logits;
  Vector softmax;
};

Vector softmax(const Vector& logits);

// w1 = 1, every other entry ~ Normal(0, variance 0.01).
Parameters init_params(const NetworkConfig& config, Rng& rng);

ForwardCache forward(const NetworkConfig& config, const Parameters& params, const SubbandStack& stack,
                     const DropoutSpec& dropout, Rng& rng);

// Cross-entropy of one trial plus l2_lambda * |params|^2.
double loss(const ForwardCache& cache, int label, const Parameters& params, double l2_lambda);

// Exact gradient of `loss` with the cached dropout masks held fixed.
Gradients backward(const ForwardCache& cache, int label, const Parameters& params, double l2_lambda);

// Dropout-free forward; lowest index among tied maxima.
int predict(const NetworkConfig& config, const Parameters& params, const SubbandStack& stack);

}  // namespace ssvep
