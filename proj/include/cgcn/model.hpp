#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cgcn/encoders.hpp"
#include "cgcn/errors.hpp"
#include "cgcn/fusion.hpp"
#include "cgcn/rng.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// Architecture description. Encoder dims are
/// input_dim -> hidden_dims... -> latent_dim; decoders mirror them.
struct ModelConfig {
  int input_dim = 0;
  std::vector<int> hidden_dims = {256, 64};
  int latent_dim = 20;
  Activation hidden_act = Activation::kRelu;
  int k = 0;
  double v = 1.0;

  void validate() const {
    if (input_dim < 1) throw ConfigError("model input_dim must be >= 1");
    if (latent_dim < 1) throw ConfigError("model latent_dim must be >= 1");
    for (const int h : hidden_dims)
      if (h < 1) throw ConfigError("hidden dims must be >= 1");
    if (k < 1) throw ConfigError("cluster count k must be >= 1");
    if (v <= 0.0) throw ConfigError("student-t dof v must be > 0");
  }
};

/// All learnable parameters. Centers stay empty (0x0) until the clustering
/// phase initializes them.
struct ModelState {
  AEParams ae;
  GAEParams gae;
  FusionParams fusion;
  Tensor centers;  // K x d'
};

/// Ordered registry of (name, tensor) pairs; the fixed order drives
/// deterministic initialization, optimizer updates, and checkpoints.
inline std::vector<std::pair<std::string, Tensor*>> parameters(ModelState& s) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t i = 0; i < s.ae.encoder.size(); ++i) {
    out.emplace_back("ae.enc." + std::to_string(i) + ".w", &s.ae.encoder[i].w);
    out.emplace_back("ae.enc." + std::to_string(i) + ".b", &s.ae.encoder[i].b);
  }
  for (std::size_t i = 0; i < s.ae.decoder.size(); ++i) {
    out.emplace_back("ae.dec." + std::to_string(i) + ".w", &s.ae.decoder[i].w);
    out.emplace_back("ae.dec." + std::to_string(i) + ".b", &s.ae.decoder[i].b);
  }
  for (std::size_t i = 0; i < s.gae.encoder.size(); ++i) {
    out.emplace_back("gae.enc." + std::to_string(i) + ".w", &s.gae.encoder[i].w);
  }
  for (std::size_t i = 0; i < s.gae.decoder.size(); ++i) {
    out.emplace_back("gae.dec." + std::to_string(i) + ".w", &s.gae.decoder[i].w);
  }
  out.emplace_back("fusion.delta_raw", &s.fusion.delta_raw);
  out.emplace_back("fusion.lambda1", &s.fusion.lambda1);
  out.emplace_back("fusion.lambda2", &s.fusion.lambda2);
  out.emplace_back("fusion.lambda_b", &s.fusion.lambda_b);
  if (s.centers.size() > 0) out.emplace_back("centers", &s.centers);
  return out;
}

namespace detail {

inline Tensor glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::vector<double> vals(static_cast<std::size_t>(rows) * cols);
  for (auto& v : vals) v = rng.uniform(-limit, limit);
  return Tensor(rows, cols, std::move(vals));
}

inline std::vector<int> layer_dims(const ModelConfig& cfg) {
  std::vector<int> dims;
  dims.push_back(cfg.input_dim);
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(cfg.latent_dim);
  return dims;
}

}  // namespace detail

/// Fresh model with Glorot-uniform weights, zero biases, and the documented
/// fusion initialization. Hidden layers use cfg.hidden_act; the final layer
/// of every stack is linear.
inline ModelState init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelState s;
  const auto dims = detail::layer_dims(cfg);
  const int n_layers = static_cast<int>(dims.size()) - 1;
  for (int l = 0; l < n_layers; ++l) {
    const Activation act = l + 1 < n_layers ? cfg.hidden_act : Activation::kLinear;
    s.ae.encoder.push_back(DenseLayer{detail::glorot_uniform(dims[l], dims[l + 1], rng),
                                      Tensor::zeros(1, dims[l + 1]), act});
  }
  for (int l = n_layers - 1; l >= 0; --l) {
    const Activation act = l > 0 ? cfg.hidden_act : Activation::kLinear;
    s.ae.decoder.push_back(DenseLayer{detail::glorot_uniform(dims[l + 1], dims[l], rng),
                                      Tensor::zeros(1, dims[l]), act});
  }
  for (int l = 0; l < n_layers; ++l) {
    const Activation act = l + 1 < n_layers ? cfg.hidden_act : Activation::kLinear;
    s.gae.encoder.push_back(GcnLayer{detail::glorot_uniform(dims[l], dims[l + 1], rng), act});
  }
  for (int l = n_layers - 1; l >= 0; --l) {
    const Activation act = l > 0 ? cfg.hidden_act : Activation::kLinear;
    s.gae.decoder.push_back(GcnLayer{detail::glorot_uniform(dims[l + 1], dims[l], rng), act});
  }
  s.fusion = init_fusion_params();
  return s;
}

/// Which parameter groups receive gradients in the current phase.
struct TrainFlags {
  bool ae = false;
  bool gae = false;
  bool fusion = false;
  bool centers = false;

  [[nodiscard]] bool wants(const std::string& name) const {
    if (name.rfind("ae.", 0) == 0) return ae;
    if (name.rfind("gae.", 0) == 0) return gae;
    if (name.rfind("fusion.", 0) == 0) return fusion;
    if (name == "centers") return centers;
    return false;
  }
};

/// Copy of the model whose selected parameters are leaves on `tape`. A
/// frozen lambda2 never becomes a leaf regardless of the fusion flag.
inline ModelState make_taped(const ModelState& state, Tape& tape, const TrainFlags& flags) {
  ModelState taped = state;
  for (auto& [name, tensor] : parameters(taped)) {
    if (!flags.wants(name)) continue;
    if (name == "fusion.lambda2" && taped.fusion.lambda2_frozen) continue;
    *tensor = tape.leaf(*tensor);
  }
  return taped;
}

}  // namespace cgcn
