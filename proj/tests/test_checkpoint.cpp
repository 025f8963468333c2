#include <doctest.h>

#include <cstring>

#include "ssvep/checkpoint.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"
#include "support/temp_dir.hpp"

using namespace ssvep;

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint cp;
  cp.config = NetworkConfig::standard(3, 40, 2, 4);
  cp.stage_config = StageConfig::benchmark_subject();
  cp.stage_config.seed = 0xfedcba9876543210ULL;
  Rng rng(12);
  cp.params = init_params(cp.config, rng);
  cp.params.w3.values[5] = 1.0 / 3.0;  // needs all 64 bits
  cp.provenance = {"subject", "S07", 2, 0.123456789012345678};
  return cp;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("bit-exact round trip") {
    testing::TempDir dir;
    const auto cp = sample_checkpoint();
    save_checkpoint(cp, dir / "a.ckpt");
    const auto back = load_checkpoint(dir / "a.ckpt");
    CHECK(back.config == cp.config);
    CHECK(back.stage_config == cp.stage_config);
    CHECK(back.provenance == cp.provenance);
    CHECK(back.params == cp.params);
    save_checkpoint(back, dir / "b.ckpt");
    CHECK(io::read_file(dir / "a.ckpt") == io::read_file(dir / "b.ckpt"));
  }

  TEST_CASE("layout: magic, manifest order, contiguous f64 blobs") {
    const auto cp = sample_checkpoint();
    const auto bytes = encode_checkpoint(cp);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "SSVEPCK1");
    const auto f = io::unframe(bytes, "SSVEPCK1");
    CHECK(f.header["format_version"] == 1);
    const auto& manifest = f.header["tensors"];
    REQUIRE(manifest.size() == 6);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(manifest[i]["name"] == Parameters::kNames[i]);
      CHECK(manifest[i]["offset"] == offset);
      offset += cp.params.tensors()[i]->size() * 8;
    }
    CHECK(bytes.size() == f.payload_offset + offset);
    // First w2 value sits right after the w1 blob.
    CHECK(io::read_f64_le(bytes, f.payload_offset + 8 * cp.params.w1.size()) == cp.params.w2.values[0]);
  }

  TEST_CASE("damaged checkpoints are refused") {
    const auto bytes = encode_checkpoint(sample_checkpoint());
    CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(bytes.size() - 1)), FormatError);
    CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(30)), FormatError);
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(extra), FormatError);
    auto magic = bytes;
    magic[7] = '2';
    CHECK_THROWS_AS(decode_checkpoint(magic), FormatError);

    auto f = io::unframe(bytes, "SSVEPCK1");
    auto payload = std::vector<std::uint8_t>(bytes.begin() + f.payload_offset, bytes.end());
    auto rebuild = [&](const nlohmann::json& header) {
      auto out = io::frame("SSVEPCK1", header);
      out.insert(out.end(), payload.begin(), payload.end());
      return out;
    };
    CHECK_NOTHROW(decode_checkpoint(rebuild(f.header)));
    auto h = f.header;
    h["format_version"] = 2;
    CHECK_THROWS_AS(decode_checkpoint(rebuild(h)), FormatError);
    h = f.header;
    std::swap(h["tensors"][0], h["tensors"][1]);
    CHECK_THROWS_AS(decode_checkpoint(rebuild(h)), FormatError);
    h = f.header;
    h["tensors"][2]["offset"] = 8;
    CHECK_THROWS_AS(decode_checkpoint(rebuild(h)), FormatError);
  }

  TEST_CASE("loading into a different network is a shape error") {
    testing::TempDir dir;
    const auto cp = sample_checkpoint();
    save_checkpoint(cp, dir / "a.ckpt");
    CHECK_NOTHROW(load_checkpoint(dir / "a.ckpt", cp.config));
    auto other = cp.config;
    other.n_subbands = 3;
    CHECK_THROWS_AS(load_checkpoint(dir / "a.ckpt", other), ShapeError);
    Checkpoint bad = cp;
    bad.params.w2.values.pop_back();
    CHECK_THROWS_AS(encode_checkpoint(bad), ShapeError);
  }

  TEST_CASE("missing file") {
    testing::TempDir dir;
    CHECK_THROWS_AS(load_checkpoint(dir / "none.ckpt"), IoError);
  }
}
