#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

#include "run_config.hpp"
#include "ssvep/analysis.hpp"
#include "ssvep/checkpoint.hpp"
#include "ssvep/dataset.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/evaluation.hpp"
#include "ssvep/io.hpp"
#include "ssvep/training.hpp"

namespace ssvep::cli {

namespace fs = std::filesystem;

namespace {

// Flags shared by every command; each is only applied when given.
struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string channels;
  int subbands = 3;
  std::string durations;
  std::string out;
  std::vector<std::string> archives;
  std::map<std::string, CLI::Option*> given;

  void attach(CLI::App& cmd, bool with_archives) {
    cmd.add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    given["seed"] = cmd.add_option("--seed", seed, "global seed");
    given["jobs"] = cmd.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    given["channels"] = cmd.add_option("--channels", channels, "preset (3, 6, 9, all) or comma-separated names");
    given["subbands"] = cmd.add_option("--subbands", subbands, "number of filter-bank sub-bands");
    given["durations"] = cmd.add_option("--durations", durations, "comma-separated epoch lengths in seconds");
    given["out"] = cmd.add_option("--out", out, "output directory");
    if (with_archives) given["archives"] = cmd.add_option("archives", archives, "subject archives");
  }

  bool has(const std::string& name) const {
    auto it = given.find(name);
    return it != given.end() && it->second->count() > 0;
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_config(config);
    if (has("seed")) c.seed = seed;
    if (has("jobs")) c.jobs = jobs;
    if (has("channels")) apply_channel_flag(c, channels);
    if (has("subbands")) c.bank.n_subbands = subbands;
    if (has("durations")) c.durations = parse_durations(durations);
    if (has("out")) c.out = out;
    if (has("archives")) c.archives.assign(archives.begin(), archives.end());
    c.validate();
    return c;
  }
};

std::vector<SsvepArchive> load_archives(const RunConfig& c) {
  if (c.archives.empty()) throw ArgumentError("no archives given (config 'archives' or positional paths)");
  std::vector<SsvepArchive> out;
  for (const auto& p : c.archives) {
    try {
      out.push_back(read_archive(p));
    } catch (const Error& e) {
      throw IoError("cannot load archive '" + p.string() + "': " + e.what());
    }
  }
  return out;
}

struct Prepared {
  NetworkConfig net;
  std::vector<std::vector<Example>> examples;  // per archive
};

Prepared prepare(const RunConfig& c, const std::vector<SsvepArchive>& archives, double duration) {
  Prepared p;
  const auto channels = c.resolved_channels();
  for (const auto& a : archives) {
    TrialSet trials = extract_epochs(a, duration);
    if (!channels.empty()) trials = select_channels(trials, channels);
    p.examples.push_back(prepare_examples(trials, c.bank));
    const auto net = NetworkConfig::standard(trials.n_channels, trials.n_epoch_samples, c.bank.n_subbands,
                                             trials.n_classes);
    if (p.examples.size() > 1 && !(net == p.net)) {
      throw ArgumentError("archive '" + a.meta.subject_id + "' yields a different network shape");
    }
    p.net = net;
  }
  p.net.validate();
  return p;
}

std::string duration_tag(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "T%.2f", seconds);
  return buf;
}

std::string loss_csv(const std::vector<double>& history) {
  std::ostringstream s;
  s << std::setprecision(17) << "epoch,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) s << i + 1 << ',' << history[i] << '\n';
  return s.str();
}

void emit(std::ostream& out, const fs::path& dir, const std::string& name, const std::string& text) {
  io::write_text_atomic(dir / name, text);
  out << "wrote " << (dir / name).string() << '\n';
}

void save_verified(std::ostream& out, const Checkpoint& cp, const fs::path& path) {
  save_checkpoint(cp, path);
  if (!(load_checkpoint(path, cp.config).params == cp.params)) {
    throw CorruptionError("checkpoint '" + path.string() + "' did not read back identically");
  }
  out << "wrote " << path.string() << '\n';
}

void start_outputs(std::ostream& out, const RunConfig& c) {
  fs::create_directories(c.out);
  emit(out, c.out, "run_config.json", config_to_json(c).dump(2) + "\n");
}

int cmd_train_global(const RunConfig& c, std::ostream& out) {
  const auto archives = load_archives(c);
  const auto p = prepare(c, archives, c.durations.front());
  ExampleRefs pooled;
  for (const auto& set : p.examples) {
    for (const auto& e : set) pooled.push_back(&e);
  }
  StageConfig stage = c.stage1;
  stage.seed = derive_seed(c.seed, "train-global", "global", -1);
  Rng rng(io::mix64(stage.seed));
  const auto result = train_stage(p.net, pooled, init_params(p.net, rng), stage);

  start_outputs(out, c);
  save_verified(out, {p.net, stage, result.params, {"global", "global", -1, result.loss_history.back()}},
                c.out / "global.ckpt");
  emit(out, c.out, "global_loss.csv", loss_csv(result.loss_history));
  return 0;
}

int cmd_finetune(const RunConfig& c, const std::string& checkpoint_flag, std::ostream& out) {
  fs::path path;
  if (!checkpoint_flag.empty()) {
    path = checkpoint_flag;
  } else if (c.global_checkpoint) {
    path = *c.global_checkpoint;
  } else {
    throw ArgumentError("finetune needs --checkpoint or config 'global_checkpoint'");
  }
  const auto archives = load_archives(c);
  const auto p = prepare(c, archives, c.durations.front());
  const Checkpoint global = load_checkpoint(path, p.net);

  std::map<std::string, ExampleRefs> per_subject;
  for (std::size_t s = 0; s < archives.size(); ++s) {
    const auto& id = archives[s].meta.subject_id;
    if (per_subject.count(id)) throw ArgumentError("duplicate subject id '" + id + "'");
    per_subject[id] = refs_of(p.examples[s]);
  }
  StageConfig stage = c.stage2;
  stage.seed = derive_seed(c.seed, "finetune", "", -1);
  const auto results = finetune_subjects(p.net, global.params, per_subject, stage, c.jobs);

  start_outputs(out, c);
  for (const auto& [id, result] : results) {
    StageConfig used = stage;
    used.seed = subject_seed(stage.seed, id);
    save_verified(out, {p.net, used, result.params, {"subject", id, -1, result.loss_history.back()}},
                  c.out / (id + ".ckpt"));
    emit(out, c.out, id + "_loss.csv", loss_csv(result.loss_history));
  }
  return 0;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const auto archives = load_archives(c);
  start_outputs(out, c);

  auto run = [&](const std::vector<std::string>& channels, const std::string& suffix) {
    ProtocolOptions o;
    o.durations = c.durations;
    o.channels = channels;
    o.bank = c.bank;
    o.stage1 = c.stage1;
    o.stage1.seed = derive_seed(c.seed, "sweep", "global", -1);
    o.stage2 = c.stage2;
    o.stage2.seed = derive_seed(c.seed, "sweep", "subject", -1);
    o.gaze_shift_s = c.gaze_shift_s;
    o.jobs = c.jobs;
    if (c.save_fold_checkpoints) {
      o.checkpoint_dir = c.out / ("checkpoints" + suffix);
      fs::create_directories(*o.checkpoint_dir);
    }
    const auto report = run_protocol(archives, o);
    emit(out, c.out, "report" + suffix + ".csv", report_csv(report));
    emit(out, c.out, "report" + suffix + ".json", report_json(report).dump(2) + "\n");
    for (const auto& row : report.rows) {
      emit(out, c.out, "confusion" + suffix + "_" + duration_tag(row.duration_s) + ".csv",
           confusion_csv(row.confusion));
    }
    return report;
  };

  if (c.channel_sets.empty()) {
    run(c.resolved_channels(), "");
    return 0;
  }
  std::map<double, std::vector<std::pair<std::string, DurationResult>>> tables;
  for (const auto& set : c.channel_sets) {
    const auto channels = channel_preset(set);
    const auto report = run(channels, "_" + set);
    const std::size_t n = channels.empty() ? archives.front().meta.channel_names.size() : channels.size();
    for (const auto& row : report.rows) tables[row.duration_s].emplace_back(std::to_string(n) + " channels", row);
  }
  for (const auto& [duration, rows] : tables) {
    emit(out, c.out, "channels_" + duration_tag(duration) + ".csv", accuracy_table_csv(rows));
  }
  return 0;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  const auto& settings = c.synth;
  std::vector<double> freqs = settings.freqs_hz;
  if (freqs.empty()) {
    for (int j = 0; j < settings.spec.n_classes; ++j) freqs.push_back(8.0 + 0.2 * j);
  }
  start_outputs(out, c);
  for (int s = 1; s <= settings.n_subjects; ++s) {
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", s);
    SynthSpec spec = settings.spec;
    spec.subject_id = id;
    spec.seed = derive_seed(c.seed, "synth", id, -1);
    const auto archive = generate_synthetic(spec, freqs);
    const fs::path path = c.out / (std::string(id) + ".ssvep");
    write_archive(archive, path);
    if (!(read_archive(path).data == archive.data)) {
      throw CorruptionError("archive '" + path.string() + "' did not read back identically");
    }
    out << "wrote " << path.string() << '\n';
  }
  return 0;
}

int cmd_analyze(const RunConfig& c, const std::string& mode, std::ostream& out) {
  if (mode == "distances") {
    const auto d = sinusoid_distance_matrix(c.layout);
    start_outputs(out, c);
    emit(out, c.out, "distances.csv", distance_matrix_csv(c.layout, d));
    std::ostringstream gaps;
    gaps << std::setprecision(10) << "gap_hz,mean_distance\n";
    for (const auto& [gap, mean] : distance_by_gap(c.layout, d)) gaps << gap << ',' << mean << '\n';
    emit(out, c.out, "distance_gaps.csv", gaps.str());
    return 0;
  }
  if (mode == "importance") {
    const auto archives = load_archives(c);
    ImportanceOptions o;
    o.bank = c.bank;
    o.stage = c.stage1;
    o.stage.seed = c.seed;
    o.n_combinations = c.importance_combinations;
    o.duration_s = c.importance_duration_s;
    const auto weights = channel_importance(archives, o);
    start_outputs(out, c);
    emit(out, c.out, "importance.csv", importance_csv(weights));
    return 0;
  }
  if (mode == "synth") return cmd_synth(c, out);
  throw ArgumentError("unknown analyze mode '" + mode + "'");
}

int cmd_inspect(const std::vector<std::string>& files, std::ostream& out) {
  for (const auto& file : files) {
    const auto bytes = io::read_file(file);
    const std::string magic(bytes.begin(), bytes.begin() + std::min<std::size_t>(8, bytes.size()));
    out << file << ": ";
    if (magic == kArchiveMagic) {
      const auto archive = decode_archive(bytes);
      const auto& m = archive.meta;
      out << "archive [" << m.n_blocks << "][" << m.n_targets << "][" << m.n_channels << "][" << m.n_samples
          << "]\n";
      out << io::unframe(bytes, kArchiveMagic).header.dump(2) << '\n';
    } else if (magic == kCheckpointMagic) {
      const auto cp = decode_checkpoint(bytes);
      out << "checkpoint " << cp.provenance.stage << " / " << cp.provenance.subject_id << ", "
          << cp.params.count() << " parameters\n";
      out << io::unframe(bytes, kCheckpointMagic).header.dump(2) << '\n';
    } else {
      throw FormatError("'" + file + "' is neither an archive nor a checkpoint");
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SSVEP target identification: training, evaluation and analyses"};
  app.name("ssvep");
  app.require_subcommand(1);

  Flags train_flags, tune_flags, sweep_flags, analyze_flags, synth_flags;
  auto* train = app.add_subcommand("train-global", "train the stage-1 model on all trials of all archives");
  train_flags.attach(*train, true);

  auto* tune = app.add_subcommand("finetune", "fine-tune a global checkpoint per subject");
  tune_flags.attach(*tune, true);
  std::string checkpoint;
  tune->add_option("--checkpoint", checkpoint, "global checkpoint")->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "leave-one-block-out evaluation over durations");
  sweep_flags.attach(*sweep, true);

  auto* analyze = app.add_subcommand("analyze", "stimulus distances, channel importance or synthetic data");
  analyze_flags.attach(*analyze, true);
  std::string mode;
  analyze->add_option("--mode", mode, "distances | importance | synth")
      ->required()
      ->check(CLI::IsMember({"distances", "importance", "synth"}));

  auto* synth = app.add_subcommand("synth", "write synthetic subject archives");
  synth_flags.attach(*synth, false);

  auto* inspect = app.add_subcommand("inspect", "print archive or checkpoint headers");
  std::vector<std::string> files;
  inspect->add_option("files", files, "archive or checkpoint files")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (train->parsed()) return cmd_train_global(train_flags.resolve(), out);
    if (tune->parsed()) return cmd_finetune(tune_flags.resolve(), checkpoint, out);
    if (sweep->parsed()) return cmd_sweep(sweep_flags.resolve(), out);
    if (analyze->parsed()) return cmd_analyze(analyze_flags.resolve(), mode, out);
    if (synth->parsed()) return cmd_synth(synth_flags.resolve(), out);
    if (inspect->parsed()) return cmd_inspect(files, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace ssvep::cli
