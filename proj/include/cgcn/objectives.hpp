#pragma once

#include "cgcn/errors.hpp"
#include "cgcn/graph.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// Weights of the composite objective: gamma scales the structure
/// reconstruction inside the graph autoencoder loss, lambda_kl the
/// clustering loss, alpha/beta the two alignment terms.
struct LossWeights {
  double gamma = 0.1;
  double lambda_kl = 10.0;
  double alpha = 0.5;
  double beta = 0.5;

  void validate() const {
    if (gamma < 0.0 || lambda_kl < 0.0 || alpha < 0.0 || beta < 0.0) {
      throw ConfigError("loss weights must be >= 0");
    }
  }
};

/// Per-step scalar values of every loss term, for logging and the CSV trace.
struct LossBreakdown {
  double l_ae = 0.0;
  double l_f = 0.0;
  double l_s = 0.0;
  double l_igae = 0.0;
  double l_pre = 0.0;
  double l_train = 0.0;
  double l_c = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
};

enum class Phase { kPretrain, kTrain };

/// Attribute reconstruction: sum of squared deviations from the input.
inline Tensor loss_ae(const Tensor& recon, const Tensor& x) {
  return frobenius_sq(recon, x);
}

struct IgaeLoss {
  Tensor l_f;
  Tensor l_s;
  Tensor l_igae;
};

/// Graph autoencoder loss. The feature target is the smoothed input A~X;
/// both parts carry the 1/(2N) factor.
inline IgaeLoss loss_igae(const Tensor& recon_feat, const Tensor& recon_adj, const Tensor& x,
                          const NormalizedAdjacency& adj, double gamma) {
  const int n = x.rows();
  const Tensor ax = detail::matmul_plain(adj.a_tilde, x);  // constant target
  Tensor l_f = scale(frobenius_sq(ax, recon_feat), 1.0 / (2.0 * n));
  Tensor l_s = scale(frobenius_sq(adj.a_tilde, recon_adj), 1.0 / (2.0 * n));
  Tensor total = add(l_f, scale(l_s, gamma));
  return IgaeLoss{std::move(l_f), std::move(l_s), std::move(total)};
}

struct ContrastiveLoss {
  Tensor l_pre;
  Tensor l_train;
  Tensor l_c;
};

/// Alignment terms between module embeddings (squared distances; no negative
/// pairs). In the pretrain phase the z_final term is absent and l_train is 0.
inline ContrastiveLoss loss_contrastive(const Tensor& z_gae_lat, const Tensor& z_ae_lat, const Tensor& z_final,
                                        double alpha, double beta, Phase phase) {
  Tensor l_pre = frobenius_sq(z_gae_lat, z_ae_lat);
  Tensor l_train = phase == Phase::kTrain ? frobenius_sq(z_final, z_ae_lat) : Tensor::scalar(0.0);
  Tensor l_c = add(scale(l_pre, alpha), scale(l_train, beta));
  return ContrastiveLoss{std::move(l_pre), std::move(l_train), std::move(l_c)};
}

struct TotalLoss {
  Tensor total;
  LossBreakdown breakdown;
};

/// Weighted sum of all four parts: l_ae + l_igae + l_c + lambda * l_kl.
inline TotalLoss total_loss(const Tensor& l_ae, const IgaeLoss& igae, const ContrastiveLoss& contrastive,
                            const Tensor& l_kl, const LossWeights& weights) {
  Tensor total = add(add(l_ae, igae.l_igae), add(contrastive.l_c, scale(l_kl, weights.lambda_kl)));
  LossBreakdown b;
  b.l_ae = l_ae.value();
  b.l_f = igae.l_f.value();
  b.l_s = igae.l_s.value();
  b.l_igae = igae.l_igae.value();
  b.l_pre = contrastive.l_pre.value();
  b.l_train = contrastive.l_train.value();
  b.l_c = contrastive.l_c.value();
  b.l_kl = l_kl.value();
  b.total = total.value();
  return TotalLoss{std::move(total), b};
}

}  // namespace cgcn
