#pragma once

#include "cgcn/errors.hpp"
#include "cgcn/graph.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// Learnable fusion coefficients. delta is stored unconstrained and squashed
/// through a sigmoid so the effective blend stays strictly inside (0,1);
/// lambda1/lambda2/lambda_b are free scalars. lambda2_frozen pins the
/// second-order term to zero (the multi-order-off ablation) while leaving
/// parameter shapes untouched.
struct FusionParams {
  Tensor delta_raw;  // 1x1
  Tensor lambda1;    // 1x1
  Tensor lambda2;    // 1x1
  Tensor lambda_b;   // 1x1
  bool lambda2_frozen = false;
};

/// Documented initialization: effective delta 0.5, lambda1 = lambda2 = 0.5,
/// lambda_b = 0.1.
inline FusionParams init_fusion_params() {
  return FusionParams{Tensor::scalar(0.0), Tensor::scalar(0.5), Tensor::scalar(0.5), Tensor::scalar(0.1), false};
}

struct FusionOutput {
  Tensor z_i;      // N x d'  convex AE/GAE blend
  Tensor z1;       // N x d'  first-order propagation
  Tensor z2;       // N x d'  second-order propagation
  Tensor z_l;      // N x d'  learnable multi-order mix
  Tensor s;        // N x N   row-stochastic self-correlation
  Tensor z_g;      // N x d'  global recombination
  Tensor z_final;  // N x d'  scaled skip connection output
};

struct FusionCoefficients {
  double delta = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_b = 0.0;
};

/// Current effective coefficient values after reparameterization.
inline FusionCoefficients effective_coefficients(const FusionParams& p) {
  const double delta = 1.0 / (1.0 + std::exp(-p.delta_raw.data()[0]));
  const double l2 = p.lambda2_frozen ? 0.0 : p.lambda2.data()[0];
  return FusionCoefficients{delta, p.lambda1.data()[0], l2, p.lambda_b.data()[0]};
}

/// Full fusion pipeline:
///   z_i = delta z_ae + (1-delta) z_gae
///   z1 = A~ z_i, z2 = A~^2 z_i, z_l = lambda1 z1 + lambda2 z2
///   s = row_softmax(z_l z_l^T), z_g = s z_l
///   z_final = lambda_b z_g + z_l
inline FusionOutput fuse(const FusionParams& params, const Tensor& z_ae, const Tensor& z_gae,
                         const NormalizedAdjacency& adj) {
  if (!z_ae.same_shape(z_gae)) {
    throw ContractError("fuse: embedding shapes differ: " + z_ae.shape_string() + " vs " + z_gae.shape_string());
  }
  if (adj.a_tilde.rows() != z_ae.rows()) {
    throw ContractError("fuse: adjacency " + adj.a_tilde.shape_string() + " does not match N=" +
                        std::to_string(z_ae.rows()));
  }
  const Tensor delta = activation(params.delta_raw, Activation::kSigmoid);
  const Tensor one_minus_delta = sub(Tensor::scalar(1.0), delta);
  Tensor z_i = add(scalar_mul(delta, z_ae), scalar_mul(one_minus_delta, z_gae));
  Tensor z1 = matmul(adj.a_tilde, z_i);
  Tensor z2 = matmul(adj.a_tilde_sq, z_i);
  Tensor second = params.lambda2_frozen ? Tensor::zeros(z2.rows(), z2.cols()) : scalar_mul(params.lambda2, z2);
  Tensor z_l = add(scalar_mul(params.lambda1, z1), second);
  Tensor s = row_softmax(matmul(z_l, transpose(z_l)));
  Tensor z_g = matmul(s, z_l);
  Tensor z_final = add(scalar_mul(params.lambda_b, z_g), z_l);
  return FusionOutput{std::move(z_i), std::move(z1), std::move(z2), std::move(z_l),
                      std::move(s), std::move(z_g), std::move(z_final)};
}

}  // namespace cgcn
