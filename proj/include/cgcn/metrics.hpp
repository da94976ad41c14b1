#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cgcn/errors.hpp"

namespace cgcn {

/// Joint count matrix of two labelings plus marginals. Shared substrate for
/// the four clustering metrics.
struct Contingency {
  int k_true = 0;
  int k_pred = 0;
  int n = 0;
  std::vector<std::vector<long>> counts;  // k_true x k_pred
  std::vector<long> row_marginals;        // per true cluster
  std::vector<long> col_marginals;        // per predicted cluster
};

inline Contingency make_contingency(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
  if (true_labels.size() != pred_labels.size()) {
    throw ContractError("label vectors differ in length: " + std::to_string(true_labels.size()) + " vs " +
                        std::to_string(pred_labels.size()));
  }
  if (true_labels.empty()) throw ContractError("empty labelings");
  Contingency c;
  c.n = static_cast<int>(true_labels.size());
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    if (true_labels[i] < 0 || pred_labels[i] < 0) throw ValidationError("negative cluster id");
    c.k_true = std::max(c.k_true, true_labels[i] + 1);
    c.k_pred = std::max(c.k_pred, pred_labels[i] + 1);
  }
  c.counts.assign(static_cast<std::size_t>(c.k_true), std::vector<long>(static_cast<std::size_t>(c.k_pred), 0));
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    ++c.counts[static_cast<std::size_t>(true_labels[i])][static_cast<std::size_t>(pred_labels[i])];
  }
  c.row_marginals.assign(static_cast<std::size_t>(c.k_true), 0);
  c.col_marginals.assign(static_cast<std::size_t>(c.k_pred), 0);
  for (int i = 0; i < c.k_true; ++i)
    for (int j = 0; j < c.k_pred; ++j) {
      c.row_marginals[static_cast<std::size_t>(i)] += c.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      c.col_marginals[static_cast<std::size_t>(j)] += c.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  return c;
}

namespace detail {

/// Hungarian algorithm (potentials + augmenting paths) for the square
/// min-cost assignment problem. Returns, per row, the assigned column.
inline std::vector<int> solve_assignment_min(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return row_to_col;
}

inline double log_or_zero(double x) { return x > 0.0 ? std::log(x) : 0.0; }

inline double choose2(long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); }

}  // namespace detail

/// Optimal predicted-cluster -> true-cluster mapping maximizing the matched
/// count. The contingency is zero-padded to square when k_true != k_pred;
/// mapped indices can therefore exceed k_true - 1 for surplus predicted
/// clusters.
inline std::vector<int> hungarian_match(const Contingency& c) {
  const int m = std::max(c.k_true, c.k_pred);
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), 0.0));
  for (int t = 0; t < c.k_true; ++t)
    for (int p = 0; p < c.k_pred; ++p)
      cost[static_cast<std::size_t>(p)][static_cast<std::size_t>(t)] =
          -static_cast<double>(c.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
  auto assign = detail::solve_assignment_min(cost);
  assign.resize(static_cast<std::size_t>(c.k_pred));
  return assign;  // assign[pred] = true cluster
}

/// Clustering accuracy: fraction matched under the optimal cluster mapping.
inline double accuracy(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
  const Contingency c = make_contingency(true_labels, pred_labels);
  const auto mapping = hungarian_match(c);
  long matched = 0;
  for (int p = 0; p < c.k_pred; ++p) {
    const int t = mapping[static_cast<std::size_t>(p)];
    if (t < c.k_true) matched += c.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return static_cast<double>(matched) / static_cast<double>(c.n);
}

/// Normalized mutual information, normalized by the arithmetic mean of the
/// two label entropies; 0 when either partition carries no information.
inline double nmi(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
  const Contingency c = make_contingency(true_labels, pred_labels);
  const double n = static_cast<double>(c.n);
  double h_true = 0.0, h_pred = 0.0, mi = 0.0;
  for (const long a : c.row_marginals) {
    const double pa = static_cast<double>(a) / n;
    if (pa > 0.0) h_true -= pa * std::log(pa);
  }
  for (const long b : c.col_marginals) {
    const double pb = static_cast<double>(b) / n;
    if (pb > 0.0) h_pred -= pb * std::log(pb);
  }
  if (h_true <= 0.0 || h_pred <= 0.0) return 0.0;
  for (int i = 0; i < c.k_true; ++i) {
    for (int j = 0; j < c.k_pred; ++j) {
      const long nij = c.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (nij == 0) continue;
      const double pij = static_cast<double>(nij) / n;
      mi += pij * std::log(n * static_cast<double>(nij) /
                           (static_cast<double>(c.row_marginals[static_cast<std::size_t>(i)]) *
                            static_cast<double>(c.col_marginals[static_cast<std::size_t>(j)])));
    }
  }
  return mi / (0.5 * (h_true + h_pred));
}

/// Adjusted Rand index via pair counting; 1.0 when the adjustment is
/// degenerate (e.g. both partitions trivial and identical).
inline double ari(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
  const Contingency c = make_contingency(true_labels, pred_labels);
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < c.k_true; ++i)
    for (int j = 0; j < c.k_pred; ++j) index += detail::choose2(c.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  for (const long a : c.row_marginals) sum_a += detail::choose2(a);
  for (const long b : c.col_marginals) sum_b += detail::choose2(b);
  const double total_pairs = detail::choose2(c.n);
  const double expected = total_pairs > 0.0 ? sum_a * sum_b / total_pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

/// Macro-averaged F1 after remapping predicted clusters through the optimal
/// matching. Classes left without predictions contribute an F1 of 0.
inline double macro_f1(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
  const Contingency c = make_contingency(true_labels, pred_labels);
  const auto mapping = hungarian_match(c);
  std::vector<int> remapped(pred_labels.size());
  for (std::size_t i = 0; i < pred_labels.size(); ++i) remapped[i] = mapping[static_cast<std::size_t>(pred_labels[i])];
  double f1_sum = 0.0;
  for (int cls = 0; cls < c.k_true; ++cls) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
      const bool is_true = true_labels[i] == cls;
      const bool is_pred = remapped[i] == cls;
      tp += is_true && is_pred;
      fp += !is_true && is_pred;
      fn += is_true && !is_pred;
    }
    const long denom = 2 * tp + fp + fn;
    f1_sum += denom > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
  }
  return f1_sum / static_cast<double>(c.k_true);
}

struct ClusteringScores {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double f1 = 0.0;
};

inline ClusteringScores score_clustering(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
  return ClusteringScores{accuracy(true_labels, pred_labels), nmi(true_labels, pred_labels),
                          ari(true_labels, pred_labels), macro_f1(true_labels, pred_labels)};
}

}  // namespace cgcn
