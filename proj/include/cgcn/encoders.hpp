#pragma once

#include <string>
#include <vector>

#include "cgcn/errors.hpp"
#include "cgcn/graph.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// One fully-connected layer of the attribute autoencoder.
struct DenseLayer {
  Tensor w;  // in x out
  Tensor b;  // 1 x out
  Activation act = Activation::kLinear;
};

/// One graph-convolution layer: sigma(A_tilde Z W). No bias term.
struct GcnLayer {
  Tensor w;  // in x out
  Activation act = Activation::kLinear;
};

/// Attribute autoencoder parameters: encoder D -> hidden... -> d', decoder
/// mirrored back to D.
struct AEParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
};

/// Graph autoencoder parameters; latent dim must equal the AE latent dim so
/// the two embeddings can be fused and share cluster centers.
struct GAEParams {
  std::vector<GcnLayer> encoder;
  std::vector<GcnLayer> decoder;
};

struct AEOutput {
  Tensor latent;          // N x d'
  Tensor recon_features;  // N x D
};

struct GAEOutput {
  Tensor latent;           // N x d'
  Tensor recon_features;   // N x D
  Tensor recon_adjacency;  // N x N, latent * latent^T
};

inline AEOutput ae_forward(const AEParams& params, const Tensor& x) {
  if (params.encoder.empty() || params.decoder.empty()) throw ConfigError("ae_forward: empty layer stack");
  if (x.cols() != params.encoder.front().w.rows()) {
    throw ConfigError("ae_forward: input has " + std::to_string(x.cols()) + " features, first layer expects " +
                      std::to_string(params.encoder.front().w.rows()));
  }
  Tensor h = x;
  for (const auto& layer : params.encoder) h = activation(add_row_vector(matmul(h, layer.w), layer.b), layer.act);
  Tensor out = h;
  for (const auto& layer : params.decoder) out = activation(add_row_vector(matmul(out, layer.w), layer.b), layer.act);
  return AEOutput{std::move(h), std::move(out)};
}

inline GAEOutput gae_forward(const GAEParams& params, const Tensor& x, const NormalizedAdjacency& adj) {
  if (params.encoder.empty() || params.decoder.empty()) throw ConfigError("gae_forward: empty layer stack");
  if (adj.a_tilde.rows() != x.rows()) {
    throw ConfigError("gae_forward: adjacency is " + adj.a_tilde.shape_string() + " but x has " +
                      std::to_string(x.rows()) + " rows");
  }
  if (x.cols() != params.encoder.front().w.rows()) {
    throw ConfigError("gae_forward: input has " + std::to_string(x.cols()) + " features, first layer expects " +
                      std::to_string(params.encoder.front().w.rows()));
  }
  Tensor z = x;
  for (const auto& layer : params.encoder) z = activation(matmul(matmul(adj.a_tilde, z), layer.w), layer.act);
  Tensor latent = z;
  for (const auto& layer : params.decoder) z = activation(matmul(matmul(adj.a_tilde, z), layer.w), layer.act);
  Tensor a_hat = matmul(latent, transpose(latent));
  return GAEOutput{std::move(latent), std::move(z), std::move(a_hat)};
}

}  // namespace cgcn
