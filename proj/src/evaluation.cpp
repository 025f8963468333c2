#include "ssvep/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "ssvep/checkpoint.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/parallel.hpp"

namespace ssvep {

long ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

long ConfusionMatrix::trace() const {
  long sum = 0;
  for (int i = 0; i < n_classes; ++i) sum += at(i, i);
  return sum;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_classes != n_classes) throw ArgumentError("confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

double itr_bits_per_min(double p, int m, double seconds) {
  if (m < 2) throw ArgumentError("ITR needs at least 2 classes");
  if (!(seconds > 0.0)) throw ArgumentError("ITR needs a positive selection time");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("accuracy must lie in [0, 1]");
  double bits = std::log2(static_cast<double>(m));
  if (p > 0.0) bits += p * std::log2(p);
  if (p < 1.0) bits += (1.0 - p) * std::log2((1.0 - p) / (m - 1));
  // log2(M) + P log2 P + (1-P) log2((1-P)/(M-1)) vanishes at chance but
  // rounding leaves a few ulps behind.
  if (std::abs(bits) < 1e-12 * std::log2(static_cast<double>(m))) bits = 0.0;
  return bits * 60.0 / seconds;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ArgumentError("predictions and labels differ in length");
  if (labels.empty()) throw ArgumentError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, int m) {
  if (predictions.size() != labels.size()) throw ArgumentError("predictions and labels differ in length");
  ConfusionMatrix cm(m);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= m || predictions[i] < 0 || predictions[i] >= m) {
      throw ArgumentError("class index out of range [0, " + std::to_string(m) + ")");
    }
    ++cm.at(labels[i], predictions[i]);
  }
  return cm;
}

double standard_error(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

namespace {

double mean_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

void check_archives(const std::vector<SsvepArchive>& archives) {
  if (archives.empty()) throw ArgumentError("no archives to evaluate");
  const auto& ref = archives.front().meta;
  std::set<std::string> ids;
  for (const auto& a : archives) {
    const auto& m = a.meta;
    if (m.n_targets != ref.n_targets || m.sampling_rate_hz != ref.sampling_rate_hz ||
        m.channel_names != ref.channel_names || m.n_blocks != ref.n_blocks) {
      throw ArgumentError("archive '" + m.subject_id + "' disagrees with '" + ref.subject_id +
                          "' on classes, sampling rate, channels or block count");
    }
    if (!ids.insert(m.subject_id).second) {
      throw ArgumentError("duplicate subject id '" + m.subject_id + "'");
    }
  }
}

std::string duration_tag(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "T%.2f", seconds);
  return buf;
}

struct FoldOutcome {
  std::vector<double> fine_accuracy;    // per subject
  std::vector<double> global_accuracy;  // per subject
  ConfusionMatrix confusion;
};

}  // namespace

EvalReport run_protocol(const std::vector<SsvepArchive>& archives, const ProtocolOptions& options) {
  check_archives(archives);
  options.stage1.validate();
  options.stage2.validate();
  if (options.durations.empty()) throw ArgumentError("no durations requested");

  const auto& ref = archives.front().meta;
  const int m = ref.n_targets;
  const FoldPlan plan = plan_leave_one_block_out(ref.n_blocks);

  EvalReport report;
  report.n_classes = m;
  report.gaze_shift_s = options.gaze_shift_s;

  for (double duration : options.durations) {
    std::vector<std::vector<Example>> examples;
    NetworkConfig config;
    for (const auto& archive : archives) {
      TrialSet trials = extract_epochs(archive, duration);
      if (!options.channels.empty()) trials = select_channels(trials, options.channels);
      examples.push_back(prepare_examples(trials, options.bank));
      config = NetworkConfig::standard(trials.n_channels, trials.n_epoch_samples, options.bank.n_subbands, m);
    }
    config.validate();

    std::vector<FoldOutcome> outcomes(plan.folds.size());
    parallel_for(plan.folds.size(), options.jobs, [&](std::size_t f) {
      const int test = plan.folds[f].test_block;
      ExampleRefs pooled;
      std::map<std::string, ExampleRefs> per_subject;
      for (std::size_t s = 0; s < archives.size(); ++s) {
        auto& mine = per_subject[archives[s].meta.subject_id];
        for (const auto& e : examples[s]) {
          if (e.block_index != test) {
            pooled.push_back(&e);
            mine.push_back(&e);
          }
        }
      }
      StageConfig s1 = options.stage1;
      s1.seed = derive_seed(options.stage1.seed, "stage1", "global", test);
      StageConfig s2 = options.stage2;
      s2.seed = derive_seed(options.stage2.seed, "stage2", "", test);
      const auto trained = two_stage_train(config, pooled, per_subject, s1, s2, 1);

      if (options.checkpoint_dir) {
        const auto prefix = duration_tag(duration) + "_fold" + std::to_string(test) + "_";
        save_checkpoint({config, s1, trained.global.params,
                         {"global", "global", test, trained.global.loss_history.back()}},
                        *options.checkpoint_dir / (prefix + "global.ckpt"));
        for (const auto& [id, result] : trained.subjects) {
          save_checkpoint({config, s2, result.params, {"subject", id, test, result.loss_history.back()}},
                          *options.checkpoint_dir / (prefix + id + ".ckpt"));
        }
      }

      FoldOutcome& out = outcomes[f];
      out.confusion = ConfusionMatrix(m);
      for (std::size_t s = 0; s < archives.size(); ++s) {
        const auto& fine = trained.subjects.at(archives[s].meta.subject_id).params;
        std::vector<int> preds, global_preds, labels;
        for (const auto& e : examples[s]) {
          if (e.block_index != test) continue;
          preds.push_back(predict(config, fine, e.input));
          global_preds.push_back(predict(config, trained.global.params, e.input));
          labels.push_back(e.label);
        }
        out.fine_accuracy.push_back(accuracy(preds, labels));
        out.global_accuracy.push_back(accuracy(global_preds, labels));
        out.confusion += confusion(preds, labels, m);
      }
    });

    DurationResult row;
    row.duration_s = duration;
    row.confusion = ConfusionMatrix(m);
    std::vector<double> accs, itrs;
    for (std::size_t s = 0; s < archives.size(); ++s) {
      SubjectResult subject;
      subject.subject_id = archives[s].meta.subject_id;
      for (const auto& out : outcomes) {
        subject.fold_accuracy.push_back(out.fine_accuracy[s]);
        subject.fold_global_accuracy.push_back(out.global_accuracy[s]);
      }
      subject.accuracy = mean_of(subject.fold_accuracy);
      subject.global_accuracy = mean_of(subject.fold_global_accuracy);
      subject.itr = itr_bits_per_min(subject.accuracy, m, duration + options.gaze_shift_s);
      accs.push_back(subject.accuracy);
      itrs.push_back(subject.itr);
      row.subjects.push_back(std::move(subject));
    }
    for (const auto& out : outcomes) row.confusion += out.confusion;
    row.mean_acc = mean_of(accs);
    row.acc_se = standard_error(accs);
    row.mean_itr = mean_of(itrs);
    row.itr_se = standard_error(itrs);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "duration_s,mean_acc,acc_se,mean_itr,itr_se\n";
  for (const auto& row : report.rows) {
    out << row.duration_s << ',' << row.mean_acc << ',' << row.acc_se << ',' << row.mean_itr << ','
        << row.itr_se << '\n';
  }
  return out.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "true\\pred";
  for (int j = 0; j < cm.n_classes; ++j) out << ',' << j;
  out << '\n';
  for (int i = 0; i < cm.n_classes; ++i) {
    out << i;
    for (int j = 0; j < cm.n_classes; ++j) out << ',' << cm.at(i, j);
    out << '\n';
  }
  return out.str();
}

nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json subjects = nlohmann::json::array();
    for (const auto& s : row.subjects) {
      subjects.push_back({{"subject_id", s.subject_id},
                          {"fold_accuracy", s.fold_accuracy},
                          {"fold_global_accuracy", s.fold_global_accuracy},
                          {"accuracy", s.accuracy},
                          {"global_accuracy", s.global_accuracy},
                          {"itr", s.itr}});
    }
    rows.push_back({{"duration_s", row.duration_s},
                    {"mean_acc", row.mean_acc},
                    {"acc_se", row.acc_se},
                    {"mean_itr", row.mean_itr},
                    {"itr_se", row.itr_se},
                    {"confusion", row.confusion.counts},
                    {"subjects", subjects}});
  }
  return {{"n_classes", report.n_classes}, {"gaze_shift_s", report.gaze_shift_s}, {"rows", rows}};
}

std::string accuracy_table_csv(const std::vector<std::pair<std::string, DurationResult>>& rows) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "setting,mean_acc_pct,acc_se_pct,summary\n";
  for (const auto& [label, row] : rows) {
    const double acc = 100.0 * row.mean_acc;
    const double se = 100.0 * row.acc_se;
    out << label << ',' << acc << ',' << se << ',' << acc << "±" << se << '\n';
  }
  return out.str();
}

}  // namespace ssvep
