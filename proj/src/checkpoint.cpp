#include "ssvep/checkpoint.hpp"

#include <string_view>

#include "ssvep/errors.hpp"
#include "ssvep/io.hpp"

namespace ssvep {

using nlohmann::json;

void to_json(json& j, const NetworkConfig& c) {
  j = json{{"n_channels", c.n_channels},         {"n_samples", c.n_samples},
           {"n_subbands", c.n_subbands},         {"n_classes", c.n_classes},
           {"n_combinations", c.n_combinations}, {"fir_length", c.fir_length},
           {"downsample_stride", c.downsample_stride}, {"tap_length", c.tap_length}};
}

void from_json(const json& j, NetworkConfig& c) {
  c.n_channels = j.at("n_channels").get<int>();
  c.n_samples = j.at("n_samples").get<int>();
  c.n_subbands = j.at("n_subbands").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.n_combinations = j.value("n_combinations", c.n_subbands * c.n_classes);
  c.fir_length = j.value("fir_length", 10);
  c.downsample_stride = j.value("downsample_stride", 2);
  c.tap_length = j.value("tap_length", 2);
}

void to_json(json& j, const DropoutSpec& d) {
  j = json{{"p_after_l2", d.p_after_l2}, {"p_after_l3", d.p_after_l3}, {"p_after_l4", d.p_after_l4},
           {"enabled", d.enabled}};
}

void from_json(const json& j, DropoutSpec& d) {
  const DropoutSpec defaults;
  d.p_after_l2 = j.value("p_after_l2", defaults.p_after_l2);
  d.p_after_l3 = j.value("p_after_l3", defaults.p_after_l3);
  d.p_after_l4 = j.value("p_after_l4", defaults.p_after_l4);
  d.enabled = j.value("enabled", defaults.enabled);
}

void to_json(json& j, const StageConfig& s) {
  j = json{{"epochs", s.epochs},
           {"batch_size", s.batch_size},
           {"learning_rate", s.learning_rate},
           {"l2_lambda", s.l2_lambda},
           {"dropout", s.dropout},
           {"seed", s.seed},
           {"adam_beta1", s.adam_beta1},
           {"adam_beta2", s.adam_beta2},
           {"adam_epsilon", s.adam_epsilon}};
}

void from_json(const json& j, StageConfig& s) {
  const StageConfig defaults;
  s.epochs = j.value("epochs", defaults.epochs);
  s.batch_size = j.value("batch_size", defaults.batch_size);
  s.learning_rate = j.value("learning_rate", defaults.learning_rate);
  s.l2_lambda = j.value("l2_lambda", defaults.l2_lambda);
  s.dropout = j.contains("dropout") ? j.at("dropout").get<DropoutSpec>() : defaults.dropout;
  s.seed = j.value("seed", defaults.seed);
  s.adam_beta1 = j.value("adam_beta1", defaults.adam_beta1);
  s.adam_beta2 = j.value("adam_beta2", defaults.adam_beta2);
  s.adam_epsilon = j.value("adam_epsilon", defaults.adam_epsilon);
}

void to_json(json& j, const FilterBankSpec& b) {
  j = json{{"n_subbands", b.n_subbands},
           {"base_freq_hz", b.base_freq_hz},
           {"margin_hz", b.margin_hz},
           {"upper_cut_hz", b.upper_cut_hz}};
}

void from_json(const json& j, FilterBankSpec& b) {
  const FilterBankSpec defaults;
  b.n_subbands = j.value("n_subbands", defaults.n_subbands);
  b.base_freq_hz = j.value("base_freq_hz", defaults.base_freq_hz);
  b.margin_hz = j.value("margin_hz", defaults.margin_hz);
  b.upper_cut_hz = j.value("upper_cut_hz", defaults.upper_cut_hz);
}

void to_json(json& j, const Provenance& p) {
  j = json{{"stage", p.stage}, {"subject_id", p.subject_id}, {"fold", p.fold}, {"final_loss", p.final_loss}};
}

void from_json(const json& j, Provenance& p) {
  p.stage = j.at("stage").get<std::string>();
  p.subject_id = j.at("subject_id").get<std::string>();
  p.fold = j.at("fold").get<int>();
  p.final_loss = j.at("final_loss").get<double>();
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp) {
  cp.config.validate();
  if (!cp.params.matches(cp.config)) {
    throw ShapeError("checkpoint parameters do not match its network configuration");
  }
  json manifest = json::array();
  std::size_t offset = 0;
  const auto tensors = cp.params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    manifest.push_back(json{{"name", Parameters::kNames[i]}, {"shape", tensors[i]->shape}, {"offset", offset}});
    offset += tensors[i]->values.size() * 8;
  }
  const json header{{"format_version", kCheckpointVersion},
                    {"network", cp.config},
                    {"stage", cp.stage_config},
                    {"provenance", cp.provenance},
                    {"tensors", manifest}};
  auto bytes = io::frame(std::string_view(kCheckpointMagic, 8), header);
  bytes.reserve(bytes.size() + offset);
  for (const Tensor* t : tensors) {
    for (double v : t->values) io::append_f64_le(bytes, v);
  }
  return bytes;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const auto framed = io::unframe(bytes, std::string_view(kCheckpointMagic, 8));
  const json& h = framed.header;
  Checkpoint cp;
  try {
    if (h.at("format_version").get<int>() != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " + h.at("format_version").dump());
    }
    cp.config = h.at("network").get<NetworkConfig>();
    cp.stage_config = h.at("stage").get<StageConfig>();
    cp.provenance = h.at("provenance").get<Provenance>();
    cp.config.validate();
    cp.params = Parameters::zeros(cp.config);
    const auto& manifest = h.at("tensors");
    auto tensors = cp.params.tensors();
    if (!manifest.is_array() || manifest.size() != tensors.size()) {
      throw FormatError("checkpoint tensor manifest must list 6 tensors");
    }
    const std::size_t payload = bytes.size() - framed.payload_offset;
    std::size_t expected_offset = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& entry = manifest[i];
      if (entry.at("name").get<std::string>() != Parameters::kNames[i]) {
        throw FormatError("tensor " + std::to_string(i) + " should be " + Parameters::kNames[i]);
      }
      if (entry.at("shape").get<std::vector<int>>() != tensors[i]->shape) {
        throw FormatError(std::string("tensor ") + Parameters::kNames[i] + " shape disagrees with the network");
      }
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      if (offset != expected_offset) {
        throw FormatError(std::string("tensor ") + Parameters::kNames[i] + " has a non-contiguous offset");
      }
      const std::size_t count = tensors[i]->values.size();
      if (offset + count * 8 > payload) {
        throw FormatError("checkpoint truncated inside tensor " + std::string(Parameters::kNames[i]));
      }
      for (std::size_t k = 0; k < count; ++k) {
        tensors[i]->values[k] = io::read_f64_le(bytes, framed.payload_offset + offset + 8 * k);
      }
      expected_offset = offset + count * 8;
    }
    if (expected_offset != payload) {
      throw FormatError("checkpoint has " + std::to_string(payload - expected_offset) + " trailing bytes");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  return cp;
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_checkpoint(cp));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected) {
  auto cp = load_checkpoint(path);
  if (!(cp.config == expected)) {
    throw ShapeError("checkpoint " + path.string() + " was trained for a different network shape");
  }
  return cp;
}

}  // namespace ssvep
