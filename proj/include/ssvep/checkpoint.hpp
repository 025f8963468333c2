#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssvep/filterbank.hpp"
#include "ssvep/network.hpp"
#include "ssvep/training.hpp"

namespace ssvep {

inline constexpr char kCheckpointMagic[] = "SSVEPCK1";
inline constexpr int kCheckpointVersion = 1;

struct Provenance {
  std::string stage;       // "global", "subject", "importance"
  std::string subject_id;  // "global" for pooled models
  int fold = -1;           // test block held out, -1 when trained on everything
  double final_loss = 0.0;

  bool operator==(const Provenance&) const = default;
};

struct Checkpoint {
  NetworkConfig config;
  StageConfig stage_config;
  Parameters params;
  Provenance provenance;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also throws ShapeError unless the stored network matches `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected);

// JSON forms shared by checkpoints, reports and the CLI config. Readers fall
// back to the struct defaults for absent keys.
void to_json(nlohmann::json& j, const NetworkConfig& c);
void from_json(const nlohmann::json& j, NetworkConfig& c);
void to_json(nlohmann::json& j, const DropoutSpec& d);
void from_json(const nlohmann::json& j, DropoutSpec& d);
void to_json(nlohmann::json& j, const StageConfig& s);
void from_json(const nlohmann::json& j, StageConfig& s);
void to_json(nlohmann::json& j, const FilterBankSpec& b);
void from_json(const nlohmann::json& j, FilterBankSpec& b);
void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);

}  // namespace ssvep
