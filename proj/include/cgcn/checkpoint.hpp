#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgcn/errors.hpp"
#include "cgcn/model.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

/// Binary checkpoint container: magic "CGCNCKPT", u32 version, u32 tensor
/// count, then per tensor: u32 name length, name bytes, u32 rows, u32 cols,
/// rows*cols little-endian float64 values. A JSON sidecar at <path>.json
/// carries the architecture config.
inline constexpr char kCheckpointMagic[8] = {'C', 'G', 'C', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError(path + ": truncated checkpoint");
  return v;
}

}  // namespace detail

inline nlohmann::ordered_json model_config_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["input_dim"] = cfg.input_dim;
  j["hidden_dims"] = cfg.hidden_dims;
  j["latent_dim"] = cfg.latent_dim;
  j["activation"] = activation_name(cfg.hidden_act);
  j["k"] = cfg.k;
  j["v"] = cfg.v;
  return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  cfg.latent_dim = j.at("latent_dim").get<int>();
  cfg.hidden_act = parse_activation(j.at("activation").get<std::string>());
  cfg.k = j.at("k").get<int>();
  cfg.v = j.at("v").get<double>();
  return cfg;
}

inline void save_checkpoint(const std::string& path, ModelState& state, const ModelConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_u32(out, kCheckpointVersion);
  const auto params = parameters(state);
  detail::write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    detail::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u32(out, static_cast<std::uint32_t>(tensor->rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(tensor->cols()));
    const auto data = tensor->data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failure on checkpoint: " + path);
  out.close();
  std::ofstream sidecar(path + ".json");
  if (!sidecar) throw IoError("cannot write checkpoint sidecar: " + path + ".json");
  sidecar << model_config_json(cfg).dump(2) << "\n";
}

struct Checkpoint {
  ModelConfig config;
  std::map<std::string, Tensor> tensors;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw FormatError(path + ": not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = detail::read_u32(in, path);
  if (version != kCheckpointVersion) {
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = detail::read_u32(in, path);
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = detail::read_u32(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = detail::read_u32(in, path);
    const std::uint32_t cols = detail::read_u32(in, path);
    std::vector<double> values(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw FormatError(path + ": truncated checkpoint");
    ckpt.tensors.emplace(std::move(name), Tensor(static_cast<int>(rows), static_cast<int>(cols), std::move(values)));
  }
  std::ifstream sidecar(path + ".json");
  if (!sidecar) throw IoError("cannot open checkpoint sidecar: " + path + ".json");
  nlohmann::json j = nlohmann::json::parse(sidecar, nullptr, true, true);
  ckpt.config = model_config_from_json(j);
  return ckpt;
}

/// Copies checkpoint tensors into a freshly built model by name. Shapes must
/// match; unknown names are rejected.
inline void apply_checkpoint(ModelState& state, const Checkpoint& ckpt) {
  auto params = parameters(state);
  std::map<std::string, Tensor*> by_name;
  for (auto& [name, tensor] : params) by_name[name] = tensor;
  for (const auto& [name, tensor] : ckpt.tensors) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      if (name == "centers") {  // present only in post-training checkpoints
        state.centers = tensor;
        continue;
      }
      throw ValidationError("checkpoint tensor '" + name + "' does not exist in the model");
    }
    if (!it->second->same_shape(tensor)) {
      throw ValidationError("checkpoint tensor '" + name + "' has shape " + tensor.shape_string() +
                            ", model expects " + it->second->shape_string());
    }
    *it->second = tensor;
  }
}

}  // namespace cgcn
