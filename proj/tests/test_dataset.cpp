#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ssvep/dataset.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"
#include "support/temp_dir.hpp"

using namespace ssvep;

namespace {

RecordingMeta tiny_meta() {
  RecordingMeta m;
  m.subject_id = "S01";
  m.sampling_rate_hz = 250.0;
  m.n_blocks = 1;
  m.n_targets = 1;
  m.n_channels = 1;
  m.n_samples = 4;
  m.stimulus_freqs_hz = {8.0};
  m.stimulus_phases_rad = {0.0};
  m.channel_names = {"Oz"};
  m.cue_duration_s = 0.5;
  m.visual_latency_s = 0.14;
  return m;
}

SsvepArchive tiny_archive() {
  SsvepArchive a(tiny_meta());
  a.data = {0.0f, 1.0f, 2.0f, 3.0f};
  return a;
}

// The header text exactly as the format prescribes: compact JSON, keys sorted.
const std::string kTinyHeader =
    R"({"channel_names":["Oz"],"cue_duration_s":0.5,"n_blocks":1,"n_channels":1,"n_samples":4,)"
    R"("n_targets":1,"sampling_rate_hz":250.0,"stimulus_freqs_hz":[8.0],"stimulus_phases_rad":[0.0],)"
    R"("subject_id":"S01","visual_latency_s":0.14})";

io::Bytes handmade(const std::string& header, const std::vector<float>& values) {
  io::Bytes b{'S', 'S', 'V', 'E', 'P', 'A', 'R', '1'};
  io::append_u64_le(b, header.size());
  b.insert(b.end(), header.begin(), header.end());
  for (float v : values) io::append_f32_le(b, v);
  return b;
}

// Benchmark-like layout: 40 targets at 8..15.8 Hz, 64 channels, 6 s trials.
RecordingMeta benchmark_meta(int n_blocks = 1) {
  RecordingMeta m;
  m.subject_id = "B01";
  m.sampling_rate_hz = 250.0;
  m.n_blocks = n_blocks;
  m.n_targets = 40;
  m.n_channels = 64;
  m.n_samples = 1500;
  for (int j = 0; j < 40; ++j) {
    m.stimulus_freqs_hz.push_back(8.0 + 0.2 * j);
    m.stimulus_phases_rad.push_back(std::fmod(j * 0.5 * M_PI, 2 * M_PI));
  }
  const std::vector<std::string> nine{"Pz", "PO3", "PO5", "PO4", "PO6", "POz", "O1", "Oz", "O2"};
  for (int c = 0; c < 64; ++c) m.channel_names.push_back("E" + std::to_string(c));
  // Scatter the occipital names through the montage in a different order.
  const int slots[9] = {47, 60, 54, 3, 20, 61, 62, 8, 30};
  for (int i = 0; i < 9; ++i) m.channel_names[slots[i]] = nine[i];
  m.cue_duration_s = 0.5;
  m.visual_latency_s = 0.14;
  return m;
}

// Sample value encodes (block, target, channel, sample).
SsvepArchive indexed_archive(RecordingMeta meta) {
  SsvepArchive a(std::move(meta));
  for (int b = 0; b < a.meta.n_blocks; ++b)
    for (int t = 0; t < a.meta.n_targets; ++t)
      for (int c = 0; c < a.meta.n_channels; ++c)
        for (int n = 0; n < a.meta.n_samples; ++n) a.at(b, t, c, n) = static_cast<float>(n + 10000 * c);
  return a;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("meta invariants") {
    auto m = tiny_meta();
    CHECK_NOTHROW(m.validate());
    m.stimulus_phases_rad = {};
    CHECK_THROWS_AS(m.validate(), ArgumentError);
    m = tiny_meta();
    m.channel_names = {"Oz", "O1"};
    CHECK_THROWS_AS(m.validate(), ArgumentError);
    m = benchmark_meta();
    m.stimulus_freqs_hz[3] = m.stimulus_freqs_hz[2];
    CHECK_THROWS_AS(m.validate(), ArgumentError);
    m = tiny_meta();
    m.stimulus_freqs_hz = {-8.0};
    CHECK_THROWS_AS(m.validate(), ArgumentError);
  }

  TEST_CASE("minimal archive round trip") {
    testing::TempDir dir;
    const auto a = tiny_archive();
    write_archive(a, dir / "a.ssvep");
    const auto b = read_archive(dir / "a.ssvep");
    CHECK(b.meta == a.meta);
    CHECK(b.data == std::vector<float>{0, 1, 2, 3});
  }

  TEST_CASE("encoder matches a hand-built file byte for byte") {
    const auto expected = handmade(kTinyHeader, {0, 1, 2, 3});
    CHECK(encode_archive(tiny_archive()) == expected);
    const auto decoded = decode_archive(expected);
    CHECK(decoded.meta == tiny_meta());
    CHECK(decoded.data == std::vector<float>{0, 1, 2, 3});
  }

  TEST_CASE("header declaring 2 channels with a 1-channel payload is corrupt") {
    std::string header = kTinyHeader;
    header.replace(header.find(R"("channel_names":["Oz"])"), 22, R"("channel_names":["Oz","O1"])");
    header.replace(header.find(R"("n_channels":1)"), 14, R"("n_channels":2)");
    CHECK_THROWS_AS(decode_archive(handmade(header, {0, 1, 2, 3})), CorruptionError);
  }

  TEST_CASE("malformed archives") {
    auto bytes = handmade(kTinyHeader, {0, 1, 2, 3});
    bytes[0] = 'X';
    CHECK_THROWS_AS(decode_archive(bytes), FormatError);
    CHECK_THROWS_AS(decode_archive(handmade(kTinyHeader, {0, 1, 2})), CorruptionError);
    CHECK_THROWS_AS(decode_archive(handmade(kTinyHeader, {0, 1, 2, 3, 4})), CorruptionError);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(decode_archive(handmade(kTinyHeader, {0, nan, 2, 3})), DataError);
    std::string extra = kTinyHeader;
    extra.insert(1, R"("comment":"x",)");
    CHECK_THROWS_AS(decode_archive(handmade(extra, {0, 1, 2, 3})), FormatError);
    std::string missing = kTinyHeader;
    missing.replace(missing.find(R"("cue_duration_s":0.5,)"), 21, "");
    CHECK_THROWS_AS(decode_archive(handmade(missing, {0, 1, 2, 3})), FormatError);
  }

  TEST_CASE("writing NaN is rejected before touching the disk") {
    testing::TempDir dir;
    auto a = tiny_archive();
    a.data[2] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(write_archive(a, dir / "bad.ssvep"), DataError);
    CHECK_FALSE(std::filesystem::exists(dir / "bad.ssvep"));
  }

  TEST_CASE("repeated writes are byte-identical and random archives round-trip") {
    testing::TempDir dir;
    std::mt19937 rng(5);
    std::normal_distribution<float> g;
    for (int trial = 0; trial < 20; ++trial) {
      RecordingMeta m = tiny_meta();
      m.n_blocks = 1 + trial % 3;
      m.n_targets = 1 + trial % 4;
      m.n_channels = 1 + trial % 2;
      m.n_samples = 3 + trial;
      m.stimulus_freqs_hz.clear();
      m.stimulus_phases_rad.clear();
      for (int j = 0; j < m.n_targets; ++j) {
        m.stimulus_freqs_hz.push_back(8 + j);
        m.stimulus_phases_rad.push_back(0.1 * j);
      }
      m.channel_names.resize(m.n_channels);
      for (int c = 0; c < m.n_channels; ++c) m.channel_names[c] = "C" + std::to_string(c);
      SsvepArchive a(m);
      for (auto& v : a.data) v = g(rng);
      write_archive(a, dir / "x1");
      write_archive(a, dir / "x2");
      CHECK(io::read_file(dir / "x1") == io::read_file(dir / "x2"));
      const auto b = read_archive(dir / "x1");
      CHECK(b.meta == a.meta);
      CHECK(std::memcmp(b.data.data(), a.data.data(), a.data.size() * sizeof(float)) == 0);
    }
  }

  TEST_CASE("sample rounding") {
    CHECK(seconds_to_samples(0.4, 250) == 100);
    CHECK(seconds_to_samples(0.5 + 0.14, 250) == 160);
    CHECK(seconds_to_samples(0.002, 250) == 1);  // 0.5 rounds away from zero
    CHECK(seconds_to_samples(0.13, 250) == 33);  // 32.5
  }

  TEST_CASE("benchmark epoch: start 160, 100 samples") {
    const auto a = indexed_archive(benchmark_meta());
    const auto ts = extract_epochs(a, 0.4);
    CHECK(ts.n_epoch_samples == 100);
    CHECK(ts.n_channels == 64);
    CHECK(ts.trials.size() == 40);
    CHECK(ts.trials[5].epoch(3, 0) == 160.0 + 30000.0);
    CHECK(ts.trials[5].epoch(3, 99) == 259.0 + 30000.0);
    CHECK(ts.trials[5].label == 5);
  }

  TEST_CASE("epoch boundary and overrun") {
    const auto a = indexed_archive(benchmark_meta());
    const double rest = (1500 - 160) / 250.0;
    const auto ts = extract_epochs(a, rest);
    CHECK(ts.n_epoch_samples == 1340);
    CHECK(ts.trials[0].epoch(0, 1339) == 1499.0);
    CHECK_THROWS_AS(extract_epochs(a, rest + 0.004), RangeError);
    CHECK_THROWS_AS(extract_epochs(a, 0.0), RangeError);
  }

  TEST_CASE("epochs are pure and labels balanced") {
    RecordingMeta m = benchmark_meta(3);
    m.n_channels = 2;
    m.channel_names.resize(2);
    const auto a = indexed_archive(m);
    const auto x = extract_epochs(a, 0.2);
    const auto y = extract_epochs(a, 0.2);
    REQUIRE(x.trials.size() == 120);
    std::vector<int> counts(40, 0);
    for (std::size_t i = 0; i < x.trials.size(); ++i) {
      CHECK(x.trials[i].epoch == y.trials[i].epoch);
      ++counts[x.trials[i].label];
    }
    CHECK(std::all_of(counts.begin(), counts.end(), [](int c) { return c == 3; }));
  }

  TEST_CASE("channel selection") {
    const auto ts = extract_epochs(indexed_archive(benchmark_meta()), 0.2);
    const auto nine = channel_preset("9");
    const auto sel = select_channels(ts, nine);
    CHECK(sel.n_channels == 9);
    CHECK(sel.channel_names == nine);
    CHECK(sel.trials[0].epoch(0, 0) == 160.0 + 10000.0 * 47);  // Pz
    CHECK(sel.trials[0].epoch(8, 0) == 160.0 + 10000.0 * 30);  // O2
    const auto all = select_channels(ts, ts.channel_names);
    CHECK(all.trials[7].epoch == ts.trials[7].epoch);
    CHECK_THROWS_AS(select_channels(ts, {"XX"}), LookupError);
    CHECK(channel_preset("all").empty());
    CHECK_THROWS_AS(channel_preset("7"), LookupError);
  }

  TEST_CASE("leave-one-block-out plans") {
    const auto two = plan_leave_one_block_out(2);
    REQUIRE(two.folds.size() == 2);
    CHECK(two.folds[0].test_block == 0);
    CHECK(two.folds[0].train_blocks == std::vector<int>{1});
    CHECK(two.folds[1].test_block == 1);
    CHECK(two.folds[1].train_blocks == std::vector<int>{0});
    CHECK_THROWS_AS(plan_leave_one_block_out(1), ArgumentError);
    for (int n = 2; n <= 8; ++n) {
      const auto plan = plan_leave_one_block_out(n);
      CHECK(plan.folds.size() == static_cast<std::size_t>(n));
      std::vector<int> as_test(n, 0), as_train(n, 0);
      for (const auto& f : plan.folds) {
        ++as_test[f.test_block];
        CHECK(f.train_blocks.size() == static_cast<std::size_t>(n - 1));
        for (int b : f.train_blocks) {
          CHECK(b != f.test_block);
          ++as_train[b];
        }
      }
      for (int b = 0; b < n; ++b) {
        CHECK(as_test[b] == 1);
        CHECK(as_train[b] == n - 1);
      }
    }
  }

  TEST_CASE("merging trial sets") {
    TrialSet base;
    base.n_channels = 1;
    base.n_epoch_samples = 2;
    base.n_classes = 40;
    base.duration_s = 0.008;
    base.sampling_rate_hz = 250;
    base.channel_names = {"Oz"};
    std::vector<TrialSet> subjects;
    for (int s = 0; s < 35; ++s) {
      TrialSet t = base;
      for (int b = 0; b < 5; ++b)
        for (int j = 0; j < 40; ++j) t.trials.push_back({Matrix::Constant(1, 2, s), j, "S" + std::to_string(s), b});
      subjects.push_back(t);
    }
    const auto merged = merge_trialsets(subjects);
    CHECK(merged.trials.size() == 7000);
    CHECK(merged.trials[6999].subject_id == "S34");
    CHECK(merged.trials[6999].block_index == 4);
    const auto one = merge_trialsets({subjects[3]});
    CHECK(one.trials.size() == 200);
    CHECK(one.trials[17].epoch == subjects[3].trials[17].epoch);
    TrialSet other = base;
    other.n_epoch_samples = 3;
    CHECK_THROWS_AS(merge_trialsets({subjects[0], other}), ArgumentError);
  }

  TEST_CASE("block filtering") {
    RecordingMeta m = benchmark_meta(4);
    m.n_channels = 1;
    m.channel_names.resize(1);
    m.n_samples = 200;
    const auto ts = extract_epochs(indexed_archive(m), 0.1);
    const auto kept = filter_blocks(ts, {1, 3});
    CHECK(kept.trials.size() == 80);
    for (const auto& t : kept.trials) CHECK((t.block_index == 1 || t.block_index == 3));
  }
}
