#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cgcn/errors.hpp"
#include "cgcn/rng.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// Learnable cluster centers plus the Student-t degree of freedom.
struct ClusterCenters {
  Tensor centers;  // K x d'
  double v = 1.0;
};

struct KMeansResult {
  Tensor centers;           // k x d
  std::vector<int> labels;  // size N
  int iterations = 0;
};

namespace detail {

inline double sq_dist_row(std::span<const double> a, std::size_t ao,
                          std::span<const double> b, std::size_t bo, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double diff = a[ao + j] - b[bo + j];
    s += diff * diff;
  }
  return s;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed seed;
/// stops when the largest center shift drops below 1e-6 or after 300 rounds.
inline KMeansResult kmeans(const Tensor& x, int k, std::uint64_t seed) {
  const int n = x.rows(), d = x.cols();
  if (k < 1) throw ConfigError("kmeans requires k >= 1, got " + std::to_string(k));
  if (n < k) {
    throw ConfigError("kmeans requires at least k points: n=" + std::to_string(n) + ", k=" + std::to_string(k));
  }
  Rng rng(seed);
  const auto xv = x.data();

  // k-means++ seeding.
  std::vector<double> centers(static_cast<std::size_t>(k) * d);
  std::vector<double> mindist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  std::copy_n(xv.begin() + static_cast<std::size_t>(first) * d, d, centers.begin());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dist = detail::sq_dist_row(xv, static_cast<std::size_t>(i) * d,
                                              {centers.data(), centers.size()},
                                              static_cast<std::size_t>(c - 1) * d, d);
      mindist[static_cast<std::size_t>(i)] = std::min(mindist[static_cast<std::size_t>(i)], dist);
      total += mindist[static_cast<std::size_t>(i)];
    }
    int pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double cum = 0.0;
      for (int i = 0; i < n; ++i) {
        cum += mindist[static_cast<std::size_t>(i)];
        if (cum >= target) { pick = i; break; }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // All points coincide with existing centers; fall back to index order.
      pick = c % n;
    }
    std::copy_n(xv.begin() + static_cast<std::size_t>(pick) * d, d,
                centers.begin() + static_cast<std::size_t>(c) * d);
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::vector<double> next(static_cast<std::size_t>(k) * d);
  std::vector<int> counts(static_cast<std::size_t>(k));
  int iter = 0;
  for (; iter < 300; ++iter) {
    // Assignment step; ties break toward the lower center index.
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int bestc = 0;
      for (int c = 0; c < k; ++c) {
        const double dist = detail::sq_dist_row(xv, static_cast<std::size_t>(i) * d,
                                                {centers.data(), centers.size()},
                                                static_cast<std::size_t>(c) * d, d);
        if (dist < best) { best = dist; bestc = c; }
      }
      labels[static_cast<std::size_t>(i)] = bestc;
    }
    // Update step.
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(c)];
      for (int j = 0; j < d; ++j) next[static_cast<std::size_t>(c) * d + j] += xv[static_cast<std::size_t>(i) * d + j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        for (int j = 0; j < d; ++j) next[static_cast<std::size_t>(c) * d + j] /= counts[static_cast<std::size_t>(c)];
      } else {
        // Empty cluster: grab the point farthest from its own center.
        double far = -1.0;
        int fari = 0;
        for (int i = 0; i < n; ++i) {
          const int ci = labels[static_cast<std::size_t>(i)];
          const double dist = detail::sq_dist_row(xv, static_cast<std::size_t>(i) * d,
                                                  {centers.data(), centers.size()},
                                                  static_cast<std::size_t>(ci) * d, d);
          if (dist > far) { far = dist; fari = i; }
        }
        std::copy_n(xv.begin() + static_cast<std::size_t>(fari) * d, d,
                    next.begin() + static_cast<std::size_t>(c) * d);
        labels[static_cast<std::size_t>(fari)] = c;
      }
    }
    double shift = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) shift = std::max(shift, std::abs(next[i] - centers[i]));
    centers = next;
    if (shift < 1e-6) { ++iter; break; }
  }
  // Final assignment against the converged centers.
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int bestc = 0;
    for (int c = 0; c < k; ++c) {
      const double dist = detail::sq_dist_row(xv, static_cast<std::size_t>(i) * d,
                                              {centers.data(), centers.size()},
                                              static_cast<std::size_t>(c) * d, d);
      if (dist < best) { best = dist; bestc = c; }
    }
    labels[static_cast<std::size_t>(i)] = bestc;
  }
  return KMeansResult{Tensor(k, d, std::move(centers)), std::move(labels), iter};
}

/// Student-t soft assignment: q_ij = (1 + ||z_i - u_j||^2 / v)^(-(v+1)/2),
/// row-normalized. Differentiable in both the embeddings and the centers.
inline Tensor soft_assign(const Tensor& z, const ClusterCenters& cc) {
  const Tensor& u = cc.centers;
  const double v = cc.v;
  if (z.cols() != u.cols()) {
    throw DimensionError("soft_assign dim mismatch: z " + z.shape_string() + " vs centers " + u.shape_string());
  }
  if (v <= 0.0) throw ConfigError("soft_assign requires v > 0");
  const int n = z.rows(), k = u.rows(), d = z.cols();
  const auto zv = z.data(), uv = u.data();
  std::vector<double> dist(static_cast<std::size_t>(n) * k);
  std::vector<double> q(static_cast<std::size_t>(n) * k);
  std::vector<double> rowsum(static_cast<std::size_t>(n), 0.0);
  const double expo = -(v + 1.0) / 2.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      const double dd = detail::sq_dist_row(zv, static_cast<std::size_t>(i) * d, uv, static_cast<std::size_t>(j) * d, d);
      dist[static_cast<std::size_t>(i) * k + j] = dd;
      const double t = std::pow(1.0 + dd / v, expo);
      q[static_cast<std::size_t>(i) * k + j] = t;
      rowsum[static_cast<std::size_t>(i)] += t;
    }
    for (int j = 0; j < k; ++j) q[static_cast<std::size_t>(i) * k + j] /= rowsum[static_cast<std::size_t>(i)];
  }
  Tensor out(n, k, std::move(q));
  Tape* tape = detail::tape_of(z, u);
  if (!tape) return out;
  const Tensor zc = z, uc = u, qc = out;
  auto dist_c = std::make_shared<std::vector<double>>(std::move(dist));
  auto rowsum_c = std::make_shared<std::vector<double>>(std::move(rowsum));
  return tape->record(std::move(out), [zc, uc, qc, dist_c, rowsum_c, v, n, k, d](const Tensor& g, GradAccumulator& acc) {
    const auto gd = g.data(), qd = qc.data(), zd = zc.data(), ud = uc.data();
    std::vector<double> gz(zc.size(), 0.0), gu(uc.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      double gq_dot = 0.0;
      for (int j = 0; j < k; ++j) gq_dot += gd[static_cast<std::size_t>(i) * k + j] * qd[static_cast<std::size_t>(i) * k + j];
      for (int j = 0; j < k; ++j) {
        const std::size_t ij = static_cast<std::size_t>(i) * k + j;
        // dL/dt through the row normalization, then dt/ddist.
        const double dl_dt = (gd[ij] - gq_dot) / (*rowsum_c)[static_cast<std::size_t>(i)];
        const double base = 1.0 + (*dist_c)[ij] / v;
        const double dt_dd = -(v + 1.0) / (2.0 * v) * qd[ij] * (*rowsum_c)[static_cast<std::size_t>(i)] / base;
        const double dl_dd = dl_dt * dt_dd;
        for (int c = 0; c < d; ++c) {
          const double diff = zd[static_cast<std::size_t>(i) * d + c] - ud[static_cast<std::size_t>(j) * d + c];
          gz[static_cast<std::size_t>(i) * d + c] += dl_dd * 2.0 * diff;
          gu[static_cast<std::size_t>(j) * d + c] -= dl_dd * 2.0 * diff;
        }
      }
    }
    if (zc.requires_grad()) acc.add(zc.node(), Tensor(n, d, std::move(gz)));
    if (uc.requires_grad()) acc.add(uc.node(), Tensor(k, d, std::move(gu)));
  });
}

/// Sharpened target distribution p_ij = (q_ij^2 / f_j) / sum_j'(q_ij'^2 / f_j')
/// with f_j the soft cluster frequency. Always detached from the tape: the
/// result is treated as a constant by every consumer.
inline Tensor target_distribution(const Tensor& q) {
  constexpr double kEps = 1e-12;
  const int n = q.rows(), k = q.cols();
  const auto qv = q.data();
  std::vector<double> freq(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) freq[static_cast<std::size_t>(j)] += qv[static_cast<std::size_t>(i) * k + j];
  std::vector<double> p(static_cast<std::size_t>(n) * k);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < k; ++j) {
      const std::size_t ij = static_cast<std::size_t>(i) * k + j;
      p[ij] = qv[ij] * qv[ij] / std::max(freq[static_cast<std::size_t>(j)], kEps);
      rowsum += p[ij];
    }
    rowsum = std::max(rowsum, kEps);
    for (int j = 0; j < k; ++j) p[static_cast<std::size_t>(i) * k + j] /= rowsum;
  }
  return Tensor(n, k, std::move(p));
}

/// Triplet clustering loss: KL(p || (q + q' + q'')/3), summed over all
/// entries, with a 1e-12 floor inside the log arguments. p is treated as a
/// constant; gradients flow only into the three soft assignments.
inline Tensor kl_triplet_loss(const Tensor& p, const Tensor& q_fused, const Tensor& q_ae, const Tensor& q_gae) {
  constexpr double kEps = 1e-12;
  if (!p.same_shape(q_fused) || !p.same_shape(q_ae) || !p.same_shape(q_gae)) {
    throw ContractError("kl_triplet_loss shape mismatch: p " + p.shape_string() +
                        ", q " + q_fused.shape_string() + ", q' " + q_ae.shape_string() +
                        ", q'' " + q_gae.shape_string());
  }
  const auto pv = p.data(), qv = q_fused.data(), av = q_ae.data(), gv = q_gae.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (pv[i] <= 0.0) continue;
    const double m = (qv[i] + av[i] + gv[i]) / 3.0;
    loss += pv[i] * std::log(std::max(pv[i], kEps) / std::max(m, kEps));
  }
  Tensor out = Tensor::scalar(loss);
  Tape* tape = detail::tape_of(q_fused, q_ae);
  Tape* tape2 = detail::tape_of(q_gae);
  if (tape && tape2 && tape != tape2) throw ContractError("operands recorded on different tapes");
  if (!tape) tape = tape2;
  if (!tape) return out;
  const Tensor pc = p.detach(), qc = q_fused, ac = q_ae, gc = q_gae;
  return tape->record(std::move(out), [pc, qc, ac, gc](const Tensor& g, GradAccumulator& acc) {
    const double g0 = g.data()[0];
    const auto pd = pc.data(), qd = qc.data(), ad = ac.data(), gd2 = gc.data();
    std::vector<double> gm(pc.size(), 0.0);
    for (std::size_t i = 0; i < gm.size(); ++i) {
      if (pd[i] <= 0.0) continue;
      const double m = (qd[i] + ad[i] + gd2[i]) / 3.0;
      if (m < kEps) continue;  // inside the floored region the loss is locally flat in m
      gm[i] = -g0 * pd[i] / m / 3.0;
    }
    if (qc.requires_grad()) acc.add(qc.node(), Tensor(pc.rows(), pc.cols(), gm));
    if (ac.requires_grad()) acc.add(ac.node(), Tensor(pc.rows(), pc.cols(), gm));
    if (gc.requires_grad()) acc.add(gc.node(), Tensor(pc.rows(), pc.cols(), std::move(gm)));
  });
}

/// Hard labels: per-row argmax (ties break toward the lower cluster index).
inline std::vector<int> argmax_labels(const Tensor& q) {
  std::vector<int> labels(static_cast<std::size_t>(q.rows()));
  const auto qv = q.data();
  for (int i = 0; i < q.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    int bestj = 0;
    for (int j = 0; j < q.cols(); ++j) {
      const double val = qv[static_cast<std::size_t>(i) * q.cols() + j];
      if (val > best) { best = val; bestj = j; }
    }
    labels[static_cast<std::size_t>(i)] = bestj;
  }
  return labels;
}

}  // namespace cgcn
