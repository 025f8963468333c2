#include <doctest.h>

#include <cmath>
#include <limits>

#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"
#include "support/temp_dir.hpp"

using namespace ssvep;

TEST_SUITE("io") {
  TEST_CASE("little-endian integers and floats") {
    io::Bytes b;
    io::append_u64_le(b, 0x0102030405060708ULL);
    CHECK(b == io::Bytes{8, 7, 6, 5, 4, 3, 2, 1});
    io::append_f32_le(b, 1.0f);  // 0x3f800000
    CHECK(b[8] == 0x00);
    CHECK(b[11] == 0x3f);
    io::append_f64_le(b, -2.5);
    CHECK(io::read_u64_le(b, 0) == 0x0102030405060708ULL);
    CHECK(io::read_f32_le(b, 8) == 1.0f);
    CHECK(io::read_f64_le(b, 12) == -2.5);
    CHECK_THROWS_AS(io::read_f64_le(b, 13), CorruptionError);
  }

  TEST_CASE("frame and unframe") {
    const auto bytes = io::frame("ABCDEFGH", nlohmann::json{{"k", 1}});
    const std::string text(bytes.begin(), bytes.end());
    CHECK(text.substr(0, 8) == "ABCDEFGH");
    CHECK(io::read_u64_le(bytes, 8) == 7);  // {"k":1}
    CHECK(text.substr(16) == "{\"k\":1}");
    const auto f = io::unframe(bytes, "ABCDEFGH");
    CHECK(f.header["k"] == 1);
    CHECK(f.payload_offset == bytes.size());
    CHECK_THROWS_AS(io::unframe(bytes, "XXXXXXXX"), FormatError);
    CHECK_THROWS_AS(io::unframe(std::span(bytes).first(12), "ABCDEFGH"), FormatError);
    CHECK_THROWS_AS(io::unframe(std::span(bytes).first(20), "ABCDEFGH"), FormatError);
  }

  TEST_CASE("hashes are stable") {
    CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(io::mix64(0) != io::mix64(1));
  }

  TEST_CASE("atomic writes leave no temp files") {
    testing::TempDir dir;
    io::write_text_atomic(dir / "a.txt", "hello");
    io::write_text_atomic(dir / "a.txt", "world");
    const auto back = io::read_file(dir / "a.txt");
    CHECK(std::string(back.begin(), back.end()) == "world");
    int n = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++n;
    CHECK(n == 1);
    CHECK_THROWS_AS(io::read_file(dir / "missing"), IoError);
  }
}
