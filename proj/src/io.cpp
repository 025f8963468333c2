#include "ssvep/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "ssvep/errors.hpp"

namespace ssvep::io {

namespace {

template <typename U>
void append_le(Bytes& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename U>
U read_le(std::span<const std::uint8_t> in, std::size_t offset) {
  if (offset + sizeof(U) > in.size()) {
    throw CorruptionError("read past end of buffer at offset " + std::to_string(offset));
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(in[offset + i]) << (8 * i);
  }
  return value;
}

}  // namespace

void append_u64_le(Bytes& out, std::uint64_t value) { append_le(out, value); }

void append_f32_le(Bytes& out, float value) {
  append_le(out, std::bit_cast<std::uint32_t>(value));
}

void append_f64_le(Bytes& out, double value) {
  append_le(out, std::bit_cast<std::uint64_t>(value));
}

std::uint64_t read_u64_le(std::span<const std::uint8_t> in, std::size_t offset) {
  return read_le<std::uint64_t>(in, offset);
}

float read_f32_le(std::span<const std::uint8_t> in, std::size_t offset) {
  return std::bit_cast<float>(read_le<std::uint32_t>(in, offset));
}

double read_f64_le(std::span<const std::uint8_t> in, std::size_t offset) {
  return std::bit_cast<double>(read_le<std::uint64_t>(in, offset));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::random_device rd;
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open " + tmp.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bytes frame(std::string_view magic, const nlohmann::json& header) {
  const std::string text = header.dump();
  Bytes out;
  out.reserve(magic.size() + 8 + text.size());
  out.insert(out.end(), magic.begin(), magic.end());
  append_u64_le(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

Framed unframe(std::span<const std::uint8_t> bytes, std::string_view magic) {
  if (bytes.size() < magic.size() ||
      std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
    throw FormatError("bad magic: expected " + std::string(magic));
  }
  if (bytes.size() < magic.size() + 8) {
    throw FormatError("file truncated inside the header length field");
  }
  const std::uint64_t header_len = read_u64_le(bytes, magic.size());
  const std::size_t start = magic.size() + 8;
  if (header_len > bytes.size() - start) {
    throw FormatError("declared header length " + std::to_string(header_len) +
                      " exceeds file size");
  }
  Framed framed;
  try {
    framed.header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                          bytes.begin() + static_cast<std::ptrdiff_t>(start + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed JSON header: ") + e.what());
  }
  framed.payload_offset = start + header_len;
  return framed;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace ssvep::io
