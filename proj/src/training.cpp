#include "ssvep/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"
#include "ssvep/parallel.hpp"

namespace ssvep {

namespace {

void add_scaled(Parameters& into, double scale, const Parameters& from) {
  const auto dst = into.tensors();
  const auto src = from.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto& d = dst[i]->values;
    const auto& s = src[i]->values;
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += scale * s[j];
  }
}

Parameters zeros_like(const Parameters& like) {
  Parameters out = like;
  for (Tensor* t : out.tensors()) std::fill(t->values.begin(), t->values.end(), 0.0);
  return out;
}

}  // namespace

void StageConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ArgumentError("learning_rate must be nonnegative");
  if (!(l2_lambda >= 0.0)) throw ArgumentError("l2_lambda must be nonnegative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ArgumentError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ArgumentError("adam_epsilon must be positive");
  dropout.validate();
}

StageConfig StageConfig::benchmark_global() {
  StageConfig c;
  c.epochs = 1000;
  c.batch_size = 100;
  c.dropout = {0.1, 0.1, 0.95, true};
  return c;
}

StageConfig StageConfig::benchmark_subject() {
  StageConfig c;
  c.epochs = 1000;
  c.batch_size = 200;
  c.dropout = {0.6, 0.6, 0.95, true};
  return c;
}

StageConfig StageConfig::beta_global() {
  StageConfig c = benchmark_global();
  c.epochs = 800;
  return c;
}

StageConfig StageConfig::beta_subject() {
  StageConfig c;
  c.epochs = 1000;
  c.batch_size = 120;
  c.dropout = {0.7, 0.7, 0.95, true};
  return c;
}

AdamState AdamState::fresh(const Parameters& like) {
  return AdamState{zeros_like(like), zeros_like(like), 0};
}

void adam_step(Parameters& params, const Gradients& grads, AdamState& state, const StageConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.adam_beta2, t);
  const auto p = params.tensors();
  const auto g = grads.tensors();
  const auto m = state.first_moment.tensors();
  const auto v = state.second_moment.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i]->values.size() != p[i]->values.size() || m[i]->values.size() != p[i]->values.size()) {
      throw ShapeError(std::string("Adam: shape mismatch in ") + Parameters::kNames[i]);
    }
    for (std::size_t j = 0; j < p[i]->values.size(); ++j) {
      const double gj = g[i]->values[j];
      double& mj = m[i]->values[j];
      double& vj = v[i]->values[j];
      mj = cfg.adam_beta1 * mj + (1.0 - cfg.adam_beta1) * gj;
      vj = cfg.adam_beta2 * vj + (1.0 - cfg.adam_beta2) * gj * gj;
      const double m_hat = mj / correction1;
      const double v_hat = vj / correction2;
      p[i]->values[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
  }
}

std::vector<Example> prepare_examples(const TrialSet& trials, const FilterBankSpec& bank) {
  std::vector<Example> out;
  out.reserve(trials.trials.size());
  const SubbandFilter filter(bank, trials.sampling_rate_hz, trials.n_epoch_samples);
  for (const auto& trial : trials.trials) {
    out.push_back(Example{filter.apply(trial.epoch), trial.label, trial.subject_id, trial.block_index});
  }
  return out;
}

ExampleRefs refs_of(const std::vector<Example>& examples) {
  ExampleRefs out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(&e);
  return out;
}

StageResult train_stage(const NetworkConfig& config, std::span<const Example* const> examples, Parameters init,
                        const StageConfig& cfg) {
  cfg.validate();
  if (examples.empty()) {
    throw ArgumentError("cannot train on an empty trial set");
  }
  if (!init.matches(config)) {
    throw ShapeError("initial parameters do not match the network configuration");
  }
  StageResult result;
  result.params = std::move(init);
  result.final_state = AdamState::fresh(result.params);

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_objective = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const double n = static_cast<double>(stop - start);
      Gradients grads = zeros_like(result.params);
      double cross_entropy = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const Example& ex = *examples[order[k]];
        const auto cache = forward(config, result.params, ex.input, cfg.dropout, rng);
        cross_entropy += loss(cache, ex.label, result.params, 0.0);
        add_scaled(grads, 1.0 / n, backward(cache, ex.label, result.params, 0.0));
      }
      const double norm = result.params.squared_norm();
      epoch_objective += cross_entropy + n * cfg.l2_lambda * norm;
      if (cfg.l2_lambda != 0.0) add_scaled(grads, 2.0 * cfg.l2_lambda, result.params);
      adam_step(result.params, grads, result.final_state, cfg);
    }
    result.loss_history.push_back(epoch_objective / static_cast<double>(order.size()));
  }
  return result;
}

std::uint64_t subject_seed(std::uint64_t stage_seed, const std::string& subject_id) {
  return stage_seed ^ io::fnv1a(subject_id);
}

std::map<std::string, StageResult> finetune_subjects(const NetworkConfig& config, const Parameters& global_params,
                                                     const std::map<std::string, ExampleRefs>& per_subject,
                                                     const StageConfig& stage2, int jobs) {
  std::vector<std::string> ids;
  for (const auto& [id, refs] : per_subject) {
    if (refs.empty()) {
      throw ArgumentError("subject '" + id + "' has no training trials");
    }
    ids.push_back(id);
  }
  std::vector<StageResult> results(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    StageConfig cfg = stage2;
    cfg.seed = subject_seed(stage2.seed, ids[i]);
    results[i] = train_stage(config, per_subject.at(ids[i]), global_params, cfg);
  });
  std::map<std::string, StageResult> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], std::move(results[i]));
  return out;
}

TwoStageResult two_stage_train(const NetworkConfig& config, std::span<const Example* const> global,
                               const std::map<std::string, ExampleRefs>& per_subject, const StageConfig& stage1,
                               const StageConfig& stage2, int jobs) {
  for (const auto& [id, refs] : per_subject) {
    if (refs.empty()) throw ArgumentError("subject '" + id + "' has no training trials");
  }
  TwoStageResult out;
  Rng init_rng(io::mix64(stage1.seed));
  out.global = train_stage(config, global, init_params(config, init_rng), stage1);
  out.subjects = finetune_subjects(config, out.global.params, per_subject, stage2, jobs);
  return out;
}

double accuracy_on(const NetworkConfig& config, const Parameters& params, std::span<const Example* const> examples) {
  if (examples.empty()) throw ArgumentError("accuracy of an empty set");
  std::size_t correct = 0;
  for (const Example* e : examples) {
    if (predict(config, params, e->input) == e->label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace ssvep

namespace ssvep {

std::uint64_t derive_seed(std::uint64_t base, const std::string& tag, const std::string& subject_id, int fold) {
  std::uint64_t h = io::mix64(base ^ io::fnv1a(tag));
  h = io::mix64(h ^ io::fnv1a(subject_id));
  return io::mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(fold)));
}

}  // namespace ssvep
