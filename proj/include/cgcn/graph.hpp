#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cgcn/errors.hpp"
#include "cgcn/rng.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// Attribute graph: node features, an undirected edge list (no self-loops;
/// those enter during normalization), optional ground-truth labels, and the
/// cluster count k.
struct GraphDataset {
  int n_nodes = 0;
  int n_features = 0;
  Tensor features;  // N x D
  std::vector<std::pair<int, int>> edges;  // canonical (min,max), sorted
  std::optional<std::vector<int>> labels;
  int k = 0;
};

/// Symmetric degree-normalized adjacency with self-loops, plus its square
/// (the second-order propagation operator).
struct NormalizedAdjacency {
  Tensor a_tilde;     // N x N
  Tensor a_tilde_sq;  // N x N
};

namespace detail {

inline double parse_double(std::string_view field, const std::string& file, int line_no) {
  double out = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(file + ":" + std::to_string(line_no) + ": cannot parse real number '" + std::string(field) + "'");
  }
  return out;
}

inline long parse_int(std::string_view field, const std::string& file, int line_no) {
  long out = 0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(file + ":" + std::to_string(line_no) + ": cannot parse integer '" + std::string(field) + "'");
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  return in;
}

}  // namespace detail

/// Loads the three-file text format: features (comma-separated reals, one
/// node per line), edges ("u,v" 0-based), optional labels (one integer per
/// line). Duplicate, reversed, and self-loop edge lines are dropped with a
/// count logged to stderr.
inline GraphDataset load_dataset(const std::string& features_path, const std::string& edges_path,
                                 const std::optional<std::string>& labels_path, int k) {
  GraphDataset ds;
  ds.k = k;
  if (k < 1) throw ValidationError("cluster count k must be >= 1, got " + std::to_string(k));

  // Features.
  {
    auto in = detail::open_text(features_path);
    std::string line;
    std::vector<double> values;
    int line_no = 0, cols = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      const auto fields = detail::split_commas(line);
      if (cols == -1) cols = static_cast<int>(fields.size());
      if (static_cast<int>(fields.size()) != cols) {
        throw FormatError(features_path + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                          " columns, got " + std::to_string(fields.size()));
      }
      for (const auto f : fields) values.push_back(detail::parse_double(f, features_path, line_no));
      ++ds.n_nodes;
    }
    if (ds.n_nodes == 0) throw FormatError(features_path + ": empty features file");
    ds.n_features = cols;
    ds.features = Tensor(ds.n_nodes, ds.n_features, std::move(values));
    if (!ds.features.all_finite()) throw ValidationError(features_path + ": non-finite feature value");
  }

  // Edges.
  {
    auto in = detail::open_text(edges_path);
    std::string line;
    int line_no = 0, dup = 0, self_loops = 0;
    std::set<std::pair<int, int>> seen;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      const auto fields = detail::split_commas(line);
      if (fields.size() != 2) {
        throw FormatError(edges_path + ":" + std::to_string(line_no) + ": expected 'u,v', got '" + line + "'");
      }
      const long u = detail::parse_int(fields[0], edges_path, line_no);
      const long v = detail::parse_int(fields[1], edges_path, line_no);
      if (u < 0 || u >= ds.n_nodes || v < 0 || v >= ds.n_nodes) {
        throw ValidationError(edges_path + ":" + std::to_string(line_no) + ": edge endpoint out of range [0," +
                              std::to_string(ds.n_nodes) + "): " + std::to_string(u) + "," + std::to_string(v));
      }
      if (u == v) { ++self_loops; continue; }
      const auto e = std::minmax(static_cast<int>(u), static_cast<int>(v));
      if (!seen.insert({e.first, e.second}).second) ++dup;
    }
    ds.edges.assign(seen.begin(), seen.end());
    if (dup > 0 || self_loops > 0) {
      std::clog << "load_dataset: dropped " << dup << " duplicate and " << self_loops
                << " self-loop edge lines from " << edges_path << "\n";
    }
  }

  // Labels.
  if (labels_path) {
    auto in = detail::open_text(*labels_path);
    std::string line;
    std::vector<int> labels;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      const long v = detail::parse_int(detail::trim(line), *labels_path, line_no);
      if (v < 0 || v >= k) {
        throw ValidationError(*labels_path + ":" + std::to_string(line_no) + ": label " + std::to_string(v) +
                              " outside [0," + std::to_string(k) + ")");
      }
      labels.push_back(static_cast<int>(v));
    }
    if (static_cast<int>(labels.size()) != ds.n_nodes) {
      throw ValidationError(*labels_path + ": expected " + std::to_string(ds.n_nodes) + " labels, got " +
                            std::to_string(labels.size()));
    }
    ds.labels = std::move(labels);
  }
  return ds;
}

/// Writes a dataset back in the three-file ingestion format.
inline void save_dataset(const GraphDataset& ds, const std::string& features_path,
                         const std::string& edges_path, const std::optional<std::string>& labels_path) {
  char buf[64];
  {
    std::ofstream out(features_path);
    if (!out) throw IoError("cannot write file: " + features_path);
    const auto fv = ds.features.data();
    for (int i = 0; i < ds.n_nodes; ++i) {
      for (int j = 0; j < ds.n_features; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", fv[static_cast<std::size_t>(i) * ds.n_features + j]);
        out << (j ? "," : "") << buf;
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(edges_path);
    if (!out) throw IoError("cannot write file: " + edges_path);
    for (const auto& [u, v] : ds.edges) out << u << "," << v << "\n";
  }
  if (labels_path) {
    if (!ds.labels) throw ContractError("save_dataset: labels path given but dataset has no labels");
    std::ofstream out(*labels_path);
    if (!out) throw IoError("cannot write file: " + *labels_path);
    for (const int l : *ds.labels) out << l << "\n";
  }
}

/// A_tilde = D^{-1/2} (A + I) D^{-1/2}, with D the degree matrix of A + I.
/// The square is precomputed for the second-order propagation term.
inline NormalizedAdjacency normalize_adjacency(const GraphDataset& ds) {
  const int n = ds.n_nodes;
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] = 1.0;
  for (const auto& [u, v] : ds.edges) {
    a[static_cast<std::size_t>(u) * n + v] = 1.0;
    a[static_cast<std::size_t>(v) * n + u] = 1.0;
  }
  std::vector<double> dinv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += a[static_cast<std::size_t>(i) * n + j];
    dinv[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);  // self-loop keeps deg >= 1
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a[static_cast<std::size_t>(i) * n + j] *= dinv[static_cast<std::size_t>(i)] * dinv[static_cast<std::size_t>(j)];
  Tensor a_tilde(n, n, std::move(a));
  Tensor a_sq = detail::matmul_plain(a_tilde, a_tilde);
  return NormalizedAdjacency{std::move(a_tilde), std::move(a_sq)};
}

/// Stochastic block model with Gaussian features around per-cluster means
/// (axis-aligned unit vectors scaled by `sep`; random unit vectors once the
/// cluster index exceeds the feature dimension). Deterministic per seed.
inline GraphDataset generate_sbm(int k, int nodes_per_cluster, double p_in, double p_out,
                                 int d, double sep, std::uint64_t seed) {
  if (k < 1 || nodes_per_cluster < 1 || d < 1) {
    throw ConfigError("generate_sbm requires k, nodes_per_cluster, d >= 1");
  }
  if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) {
    throw ConfigError("generate_sbm requires 0 <= p_out <= p_in <= 1, got p_in=" + std::to_string(p_in) +
                      ", p_out=" + std::to_string(p_out));
  }
  if (sep < 0.0) throw ConfigError("generate_sbm requires sep >= 0");
  const int n = k * nodes_per_cluster;
  Rng rng(seed);

  std::vector<double> means(static_cast<std::size_t>(k) * d, 0.0);
  for (int c = 0; c < k; ++c) {
    if (c < d) {
      means[static_cast<std::size_t>(c) * d + c] = sep;
    } else {
      double norm = 0.0;
      for (int j = 0; j < d; ++j) {
        const double g = rng.normal();
        means[static_cast<std::size_t>(c) * d + j] = g;
        norm += g * g;
      }
      norm = std::sqrt(std::max(norm, 1e-300));
      for (int j = 0; j < d; ++j) means[static_cast<std::size_t>(c) * d + j] *= sep / norm;
    }
  }

  GraphDataset ds;
  ds.k = k;
  ds.n_nodes = n;
  ds.n_features = d;
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<double> feats(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    const int c = i / nodes_per_cluster;
    labels[static_cast<std::size_t>(i)] = c;
    for (int j = 0; j < d; ++j) {
      feats[static_cast<std::size_t>(i) * d + j] = means[static_cast<std::size_t>(c) * d + j] + rng.normal();
    }
  }
  ds.features = Tensor(n, d, std::move(feats));
  ds.labels = std::move(labels);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = ((*ds.labels)[static_cast<std::size_t>(i)] == (*ds.labels)[static_cast<std::size_t>(j)]) ? p_in : p_out;
      if (rng.uniform01() < p) ds.edges.emplace_back(i, j);
    }
  }
  return ds;
}

/// Reads a bare labels file (one non-negative integer per line).
inline std::vector<int> read_label_file(const std::string& path) {
  auto in = detail::open_text(path);
  std::string line;
  std::vector<int> labels;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const long v = detail::parse_int(detail::trim(line), path, line_no);
    if (v < 0) throw ValidationError(path + ":" + std::to_string(line_no) + ": negative label " + std::to_string(v));
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) throw FormatError(path + ": empty labels file");
  return labels;
}

/// Optional per-feature standardization (zero mean, unit variance per
/// column). Off by default; exposed as a config flag.
inline GraphDataset standardize_features(const GraphDataset& ds) {
  const int n = ds.n_nodes, d = ds.n_features;
  const auto fv = ds.features.data();
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0), var(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += fv[static_cast<std::size_t>(i) * d + j];
  for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] /= n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      const double diff = fv[static_cast<std::size_t>(i) * d + j] - mean[static_cast<std::size_t>(j)];
      var[static_cast<std::size_t>(j)] += diff * diff;
    }
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  for (int j = 0; j < d; ++j) var[static_cast<std::size_t>(j)] = std::sqrt(std::max(var[static_cast<std::size_t>(j)] / n, 1e-12));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      out[static_cast<std::size_t>(i) * d + j] =
          (fv[static_cast<std::size_t>(i) * d + j] - mean[static_cast<std::size_t>(j)]) / var[static_cast<std::size_t>(j)];
    }
  GraphDataset res = ds;
  res.features = Tensor(n, d, std::move(out));
  return res;
}

}  // namespace cgcn
