#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ssvep/dataset.hpp"
#include "ssvep/filterbank.hpp"
#include "ssvep/network.hpp"

namespace ssvep {

struct StageConfig {
  int epochs = 1000;
  int batch_size = 100;
  double learning_rate = 1e-4;
  double l2_lambda = 1e-3;
  DropoutSpec dropout;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
  bool operator==(const StageConfig&) const = default;

  static StageConfig benchmark_global();
  static StageConfig benchmark_subject();
  static StageConfig beta_global();
  static StageConfig beta_subject();
};

struct AdamState {
  Parameters first_moment;
  Parameters second_moment;
  std::uint64_t step = 0;

  static AdamState fresh(const Parameters& like);
};

// Bias-corrected Adam update in place; increments state.step.
void adam_step(Parameters& params, const Gradients& grads, AdamState& state, const StageConfig& cfg);

// One preprocessed trial: the network input volume plus provenance.
struct Example {
  SubbandStack input;
  int label = 0;
  std::string subject_id;
  int block_index = 0;
};

using ExampleRefs = std::vector<const Example*>;

std::vector<Example> prepare_examples(const TrialSet& trials, const FilterBankSpec& bank);
ExampleRefs refs_of(const std::vector<Example>& examples);

struct StageResult {
  Parameters params;
  std::vector<double> loss_history;  // per-epoch mean objective
  AdamState final_state;             // started fresh at step 0
};

// Mini-batch Adam on the mean batch cross-entropy plus one L2 term. Each epoch
// reshuffles with the stage RNG; the last batch may be smaller.
StageResult train_stage(const NetworkConfig& config, std::span<const Example* const> examples, Parameters init,
                        const StageConfig& cfg);

struct TwoStageResult {
  StageResult global;
  std::map<std::string, StageResult> subjects;
};

// Seed of a subject's fine-tuning run: stage seed XOR FNV-1a(subject).
std::uint64_t subject_seed(std::uint64_t stage_seed, const std::string& subject_id);

// Stage 1 from init_params on the pooled set (seeded by stage1.seed), then one
// fine-tune per subject from the stage-1 weights with fresh optimizer state.
// Subjects may run on up to `jobs` threads without affecting the results.
TwoStageResult two_stage_train(const NetworkConfig& config, std::span<const Example* const> global,
                               const std::map<std::string, ExampleRefs>& per_subject, const StageConfig& stage1,
                               const StageConfig& stage2, int jobs = 1);

// Fine-tunes every subject from `global_params`.
std::map<std::string, StageResult> finetune_subjects(const NetworkConfig& config, const Parameters& global_params,
                                                     const std::map<std::string, ExampleRefs>& per_subject,
                                                     const StageConfig& stage2, int jobs = 1);

double accuracy_on(const NetworkConfig& config, const Parameters& params, std::span<const Example* const> examples);

}  // namespace ssvep

namespace ssvep {

// Seed for one (tag, subject, fold) task derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, const std::string& tag, const std::string& subject_id, int fold);

}  // namespace ssvep
