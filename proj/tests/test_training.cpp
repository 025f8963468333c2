#include <doctest.h>

#include <cmath>

#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"
#include "ssvep/training.hpp"
#include "support/synthetic_study.hpp"

using namespace ssvep;

namespace {

// Parameters holding only a 2-vector in w1, for optimizer checks.
Parameters pair_of(double x, double y) {
  Parameters p;
  p.w1 = Tensor({2});
  p.w1.values = {x, y};
  for (auto* t : {&p.w2, &p.w3, &p.w4, &p.w_fc, &p.b_fc}) *t = Tensor({0});
  return p;
}

std::vector<Example> study_examples(const SsvepArchive& archive, double duration = 0.5) {
  return prepare_examples(extract_epochs(archive, duration), FilterBankSpec{});
}

NetworkConfig config_for(const std::vector<Example>& ex, int n_classes) {
  return NetworkConfig::standard(ex.front().input.n_channels(), ex.front().input.n_samples(),
                                 ex.front().input.n_subbands(), n_classes);
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("stage presets") {
    const auto g = StageConfig::benchmark_global();
    CHECK(g.epochs == 1000);
    CHECK(g.batch_size == 100);
    CHECK(g.learning_rate == 1e-4);
    CHECK(g.l2_lambda == 1e-3);
    CHECK(g.dropout == DropoutSpec{0.1, 0.1, 0.95, true});
    const auto s = StageConfig::benchmark_subject();
    CHECK(s.epochs == 1000);
    CHECK(s.batch_size == 200);
    CHECK(s.dropout == DropoutSpec{0.6, 0.6, 0.95, true});
    CHECK(StageConfig::beta_global().epochs == 800);
    CHECK(StageConfig::beta_subject().batch_size == 120);
    CHECK(StageConfig::beta_subject().dropout == DropoutSpec{0.7, 0.7, 0.95, true});
    CHECK(g.adam_beta1 == 0.9);
    CHECK(g.adam_beta2 == 0.999);
    CHECK(g.adam_epsilon == 1e-8);

    StageConfig bad = g;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = g;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = g;
    bad.dropout.p_after_l2 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
  }

  TEST_CASE("adam: zero gradient leaves parameters alone") {
    auto p = pair_of(1.0, -2.0);
    auto state = AdamState::fresh(p);
    adam_step(p, pair_of(0.0, 0.0), state, StageConfig{});
    CHECK(p.w1.values == std::vector<double>{1.0, -2.0});
    CHECK(state.step == 1);
  }

  TEST_CASE("adam: first step is lr * sign(g)") {
    auto p = pair_of(1.0, -2.0);
    auto state = AdamState::fresh(p);
    StageConfig cfg;
    adam_step(p, pair_of(0.3, -7.0), state, cfg);
    CHECK(p.w1.values[0] == doctest::Approx(1.0 - 1e-4).epsilon(1e-9));
    CHECK(p.w1.values[1] == doctest::Approx(-2.0 + 1e-4).epsilon(1e-9));
  }

  TEST_CASE("adam: quadratic bowl") {
    auto f = [](const Parameters& p) { return p.w1.values[0] * p.w1.values[0] + 10 * p.w1.values[1] * p.w1.values[1]; };
    auto p = pair_of(1.0, -2.0);
    const double start = f(p);
    auto state = AdamState::fresh(p);
    StageConfig cfg;
    cfg.learning_rate = 0.05;
    for (int i = 0; i < 100; ++i) {
      adam_step(p, pair_of(2 * p.w1.values[0], 20 * p.w1.values[1]), state, cfg);
    }
    CHECK(f(p) < 1e-3 * start);
  }

  TEST_CASE("weight decay alone shrinks the norm every step") {
    Rng rng(1);
    const auto c = NetworkConfig::standard(2, 24, 1, 2);
    auto p = init_params(c, rng);
    auto state = AdamState::fresh(p);
    StageConfig cfg;
    cfg.learning_rate = 1e-3;
    double norm = p.squared_norm();
    for (int i = 0; i < 10; ++i) {
      Gradients g = p;
      for (auto* t : g.tensors()) {
        for (auto& v : t->values) v *= 2 * cfg.l2_lambda;
      }
      adam_step(p, g, state, cfg);
      CHECK(p.squared_norm() < norm);
      norm = p.squared_norm();
    }
  }

  TEST_CASE("train_stage contracts") {
    const auto archive = generate_synthetic(testing::study_spec("S01", 3, 0.3), testing::study_freqs());
    const auto ex = study_examples(archive);
    const auto refs = refs_of(ex);
    const auto c = config_for(ex, 8);
    Rng rng(2);
    const auto init = init_params(c, rng);
    StageConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = static_cast<int>(refs.size());
    CHECK(train_stage(c, refs, init, cfg).final_state.step == 1);
    cfg.epochs = 3;
    cfg.batch_size = 5;  // 32 trials -> 7 batches
    const auto a = train_stage(c, refs, init, cfg);
    CHECK(a.final_state.step == 21);
    CHECK(a.loss_history.size() == 3);
    const auto b = train_stage(c, refs, init, cfg);
    CHECK(a.params == b.params);
    CHECK(a.loss_history == b.loss_history);
    cfg.seed = 99;
    CHECK_FALSE(train_stage(c, refs, init, cfg).params == a.params);
    CHECK_THROWS_AS(train_stage(c, ExampleRefs{}, init, cfg), ArgumentError);
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_stage(c, refs, init, cfg), ArgumentError);
  }

  TEST_CASE("overfit oracle on a high-SNR set") {
    auto spec = testing::study_spec("S01", 5, 0.1);
    const auto archive = generate_synthetic(spec, testing::study_freqs(), testing::study_phases());
    const auto ex = study_examples(archive);
    const auto refs = refs_of(ex);
    const auto c = config_for(ex, 8);
    Rng rng(io::mix64(17));
    StageConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-3;
    cfg.dropout = DropoutSpec::disabled();
    const auto result = train_stage(c, refs, init_params(c, rng), cfg);
    for (int e = 1; e < 10; ++e) CHECK(result.loss_history[e] < result.loss_history[e - 1]);
    CHECK(accuracy_on(c, result.params, refs) == 1.0);
    for (const auto* e : refs) CHECK(predict(c, result.params, e->input) == e->label);
  }

  TEST_CASE("no-op fine-tune reproduces the global model") {
    const auto archive = generate_synthetic(testing::study_spec("S01", 4, 0.5), testing::study_freqs());
    const auto ex = study_examples(archive);
    const auto refs = refs_of(ex);
    const auto c = config_for(ex, 8);
    StageConfig s1;
    s1.epochs = 3;
    s1.batch_size = 8;
    StageConfig s2 = s1;
    s2.epochs = 1;
    s2.learning_rate = 0.0;
    const auto r = two_stage_train(c, refs, {{"S01", refs}}, s1, s2);
    CHECK(r.subjects.at("S01").params == r.global.params);
    CHECK(r.subjects.at("S01").final_state.step == 4);  // fresh state: 32 / 8 batches, one epoch

    CHECK_THROWS_AS(two_stage_train(c, refs, {{"S01", refs}, {"S02", {}}}, s1, s2), ArgumentError);
  }

  TEST_CASE("fine-tuning is independent of the thread count") {
    const auto a1 = generate_synthetic(testing::study_spec("S01", 6, 0.5), testing::study_freqs());
    const auto a2 = generate_synthetic(testing::study_spec("S02", 7, 0.5), testing::study_freqs());
    const auto e1 = study_examples(a1), e2 = study_examples(a2);
    const auto c = config_for(e1, 8);
    Rng rng(3);
    const auto init = init_params(c, rng);
    StageConfig s2;
    s2.epochs = 2;
    s2.batch_size = 16;
    std::map<std::string, ExampleRefs> per{{"S01", refs_of(e1)}, {"S02", refs_of(e2)}};
    const auto serial = finetune_subjects(c, init, per, s2, 1);
    const auto parallel = finetune_subjects(c, init, per, s2, 2);
    CHECK(serial.at("S01").params == parallel.at("S01").params);
    CHECK(serial.at("S02").params == parallel.at("S02").params);
    CHECK_FALSE(serial.at("S01").params == serial.at("S02").params);
  }

  TEST_CASE("two subjects with conflicting labels: each fine-tuned model beats the global one") {
    const auto archives = testing::study_archives(21);
    const auto options = testing::study_options(5);
    const int test_block = 3;
    std::vector<std::vector<Example>> ex;
    for (const auto& a : archives) ex.push_back(study_examples(a));
    const auto c = config_for(ex[0], 8);
    ExampleRefs pooled;
    std::map<std::string, ExampleRefs> train, test;
    for (std::size_t s = 0; s < ex.size(); ++s) {
      for (const auto& e : ex[s]) {
        if (e.block_index == test_block) {
          test[e.subject_id].push_back(&e);
        } else {
          train[e.subject_id].push_back(&e);
          pooled.push_back(&e);
        }
      }
    }
    const auto r = two_stage_train(c, pooled, train, options.stage1, options.stage2);
    for (const auto& [id, refs] : test) {
      const double fine = accuracy_on(c, r.subjects.at(id).params, refs);
      const double global = accuracy_on(c, r.global.params, refs);
      MESSAGE(id << ": fine-tuned " << fine << ", global " << global);
      CHECK(fine > global);
    }
  }

  TEST_CASE("seed derivation") {
    CHECK(subject_seed(5, "S01") == (5 ^ io::fnv1a("S01")));
    CHECK(derive_seed(1, "stage1", "global", 0) == derive_seed(1, "stage1", "global", 0));
    CHECK(derive_seed(1, "stage1", "global", 0) != derive_seed(1, "stage1", "global", 1));
    CHECK(derive_seed(1, "stage1", "global", 0) != derive_seed(1, "stage2", "global", 0));
    CHECK(derive_seed(1, "stage1", "global", 0) != derive_seed(2, "stage1", "global", 0));
    CHECK(derive_seed(1, "stage1", "S01", 0) != derive_seed(1, "stage1", "S02", 0));
  }
}
