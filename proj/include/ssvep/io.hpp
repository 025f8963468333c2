#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ssvep::io {

using Bytes = std::vector<std::uint8_t>;

void append_u64_le(Bytes& out, std::uint64_t value);
void append_f32_le(Bytes& out, float value);
void append_f64_le(Bytes& out, double value);

std::uint64_t read_u64_le(std::span<const std::uint8_t> in, std::size_t offset);
float read_f32_le(std::span<const std::uint8_t> in, std::size_t offset);
double read_f64_le(std::span<const std::uint8_t> in, std::size_t offset);

Bytes read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`, so readers never
// observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

// Framed container shared by archives and checkpoints:
//   8-byte ASCII magic | u64 LE header length | UTF-8 JSON header | payload
struct Framed {
  nlohmann::json header;
  std::size_t payload_offset = 0;
};

Bytes frame(std::string_view magic, const nlohmann::json& header);

// Throws FormatError on bad magic or unparsable header, CorruptionError when
// the declared header length runs past the end of the buffer.
Framed unframe(std::span<const std::uint8_t> bytes, std::string_view magic);

// 64-bit FNV-1a; stable across platforms (std::hash is not).
std::uint64_t fnv1a(std::string_view text);

// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace ssvep::io
