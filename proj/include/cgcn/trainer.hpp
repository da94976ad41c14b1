#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgcn/checkpoint.hpp"
#include "cgcn/clustering.hpp"
#include "cgcn/config.hpp"
#include "cgcn/encoders.hpp"
#include "cgcn/errors.hpp"
#include "cgcn/fusion.hpp"
#include "cgcn/graph.hpp"
#include "cgcn/metrics.hpp"
#include "cgcn/model.hpp"
#include "cgcn/objectives.hpp"
#include "cgcn/optimizer.hpp"
#include "cgcn/svg.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// Loads the configured dataset (files or synthetic) and applies optional
/// feature standardization.
inline GraphDataset resolve_dataset(const RunConfig& cfg) {
  GraphDataset ds;
  if (cfg.synth) {
    ds = generate_sbm(cfg.synth_k, cfg.synth_nodes_per_cluster, cfg.synth_p_in, cfg.synth_p_out,
                      cfg.synth_dim, cfg.synth_sep, cfg.effective_synth_seed());
  } else {
    std::optional<std::string> labels;
    if (!cfg.labels_path.empty()) labels = cfg.labels_path;
    ds = load_dataset(cfg.features_path, cfg.edges_path, labels, cfg.k);
  }
  if (cfg.standardize) ds = standardize_features(ds);
  return ds;
}

inline ModelConfig make_model_config(const RunConfig& cfg, const GraphDataset& ds) {
  ModelConfig mc;
  mc.input_dim = ds.n_features;
  mc.hidden_dims = cfg.hidden_dims;
  mc.latent_dim = cfg.latent_dim;
  mc.hidden_act = parse_activation(cfg.activation);
  mc.k = ds.k;
  mc.v = cfg.v;
  mc.validate();
  return mc;
}

namespace detail {

inline void check_finite(const LossBreakdown& b, const char* phase, int epoch) {
  const std::pair<const char*, double> terms[] = {
      {"l_ae", b.l_ae}, {"l_f", b.l_f},       {"l_s", b.l_s},   {"l_igae", b.l_igae}, {"l_pre", b.l_pre},
      {"l_train", b.l_train}, {"l_c", b.l_c}, {"l_kl", b.l_kl}, {"total", b.total}};
  for (const auto& [name, v] : terms) {
    if (!std::isfinite(v)) {
      throw DivergenceError(std::string(phase) + " diverged at epoch " + std::to_string(epoch) +
                            ": non-finite " + name);
    }
  }
}

}  // namespace detail

struct PretrainResult {
  ModelState state;
  std::vector<LossBreakdown> trace;
};

/// Phases 1 and 2: the attribute autoencoder trains alone on its
/// reconstruction loss, then the graph autoencoder trains on L_igae plus the
/// alpha-weighted alignment to the AE latent, with the AE continuing to
/// receive gradients through the alignment term.
inline PretrainResult run_pretrain(const RunConfig& cfg, const GraphDataset& ds) {
  cfg.validate();
  const ModelConfig mc = make_model_config(cfg, ds);
  const NormalizedAdjacency adj = normalize_adjacency(ds);
  const LossWeights w = cfg.weights();
  const Tensor& x = ds.features;
  const double ae_norm =
      cfg.normalize_losses ? 1.0 / (static_cast<double>(ds.n_nodes) * ds.n_features) : 1.0;
  const double align_norm =
      cfg.normalize_losses ? 1.0 / (static_cast<double>(ds.n_nodes) * cfg.latent_dim) : 1.0;

  PretrainResult result{init_model(mc, cfg.seed), {}};
  ModelState& state = result.state;

  Adam adam_ae(cfg.lr_for_ae());
  for (int epoch = 1; epoch <= cfg.epochs_ae; ++epoch) {
    Tape tape;
    ModelState taped = make_taped(state, tape, TrainFlags{.ae = true});
    const AEOutput out = ae_forward(taped.ae, x);
    const Tensor objective = scale(loss_ae(out.recon_features, x), ae_norm);
    LossBreakdown b;
    b.l_ae = objective.value();
    b.total = b.l_ae;
    detail::check_finite(b, "ae-pretrain", epoch);
    const GradientMap grads = tape.backward(objective);
    adam_ae.step(state, taped, grads);
    result.trace.push_back(b);
  }

  Adam adam_gae(cfg.lr_for_gae());
  for (int epoch = 1; epoch <= cfg.epochs_gae; ++epoch) {
    Tape tape;
    ModelState taped = make_taped(state, tape, TrainFlags{.ae = true, .gae = true});
    const AEOutput ae_out = ae_forward(taped.ae, x);
    const GAEOutput gae_out = gae_forward(taped.gae, x, adj);
    const IgaeLoss igae = loss_igae(gae_out.recon_features, gae_out.recon_adjacency, x, adj, w.gamma);
    const Tensor l_pre = scale(frobenius_sq(gae_out.latent, ae_out.latent), align_norm);
    const Tensor objective = add(igae.l_igae, scale(l_pre, w.alpha));
    LossBreakdown b;
    b.l_f = igae.l_f.value();
    b.l_s = igae.l_s.value();
    b.l_igae = igae.l_igae.value();
    b.l_pre = l_pre.value();
    b.l_c = w.alpha * b.l_pre;
    b.total = objective.value();
    detail::check_finite(b, "gae-pretrain", epoch);
    const GradientMap grads = tape.backward(objective);
    adam_gae.step(state, taped, grads);
    result.trace.push_back(b);
  }
  return result;
}

struct TrainResult {
  std::vector<int> labels;
  std::optional<ClusteringScores> scores;
  std::vector<LossBreakdown> trace;
  FusionCoefficients coefficients;
  LossBreakdown final_losses;
};

namespace detail {

struct FusedForward {
  AEOutput ae;
  GAEOutput gae;
  FusionOutput fusion;
};

inline FusedForward forward_all(const ModelState& state, const Tensor& x, const NormalizedAdjacency& adj) {
  FusedForward f{ae_forward(state.ae, x), {}, {}};
  f.gae = gae_forward(state.gae, x, adj);
  f.fusion = fuse(state.fusion, f.ae.latent, f.gae.latent, adj);
  return f;
}

}  // namespace detail

/// Phase 3: joint self-supervised training. Cluster centers are initialized
/// by k-means on the fused embedding, the target distribution is refreshed
/// on the configured cadence, and every module trains against the total
/// objective. Final hard labels are the row argmax of the fused soft
/// assignment; with the clustering loss disabled (lambda_kl = 0) the centers
/// receive no gradient, so labels come from a fresh k-means on the final
/// fused embedding instead.
inline TrainResult run_train(const RunConfig& cfg, const GraphDataset& ds, ModelState& state) {
  cfg.validate();
  const ModelConfig mc = make_model_config(cfg, ds);
  const NormalizedAdjacency adj = normalize_adjacency(ds);
  const LossWeights w = cfg.weights();
  const Tensor& x = ds.features;
  const int n = ds.n_nodes;
  const double ae_norm = cfg.normalize_losses ? 1.0 / (static_cast<double>(n) * ds.n_features) : 1.0;
  const double align_norm = cfg.normalize_losses ? 1.0 / (static_cast<double>(n) * cfg.latent_dim) : 1.0;

  if (ds.n_nodes < ds.k) {
    throw ConfigError("dataset has fewer nodes than clusters: n=" + std::to_string(ds.n_nodes) +
                      ", k=" + std::to_string(ds.k));
  }
  if (!cfg.enable_multi_order) {
    state.fusion.lambda2 = Tensor::scalar(0.0);
    state.fusion.lambda2_frozen = true;
  }

  // Center initialization on the pre-trained fused embedding.
  {
    const auto f = detail::forward_all(state, x, adj);
    state.centers = kmeans(f.fusion.z_final, ds.k, cfg.seed).centers;
  }

  TrainResult result;
  Adam adam(cfg.lr_for_train());
  Tensor p;  // target distribution, refreshed per cadence
  for (int epoch = 1; epoch <= cfg.epochs_train; ++epoch) {
    Tape tape;
    ModelState taped = make_taped(state, tape, TrainFlags{.ae = true, .gae = true, .fusion = true, .centers = true});
    const AEOutput ae_out = ae_forward(taped.ae, x);
    const GAEOutput gae_out = gae_forward(taped.gae, x, adj);
    const FusionOutput fused = fuse(taped.fusion, ae_out.latent, gae_out.latent, adj);
    const ClusterCenters centers{taped.centers, cfg.v};
    const Tensor q_fused = soft_assign(fused.z_final, centers);
    const Tensor q_ae = soft_assign(ae_out.latent, centers);
    const Tensor q_gae = soft_assign(gae_out.latent, centers);
    if ((epoch - 1) % cfg.p_update_interval == 0) p = target_distribution(q_fused.detach());
    const Tensor l_kl = kl_triplet_loss(p, q_fused, q_ae, q_gae);
    const Tensor l_ae = scale(loss_ae(ae_out.recon_features, x), ae_norm);
    const IgaeLoss igae = loss_igae(gae_out.recon_features, gae_out.recon_adjacency, x, adj, w.gamma);
    ContrastiveLoss contrastive = loss_contrastive(gae_out.latent, ae_out.latent, fused.z_final,
                                                   w.alpha, w.beta, Phase::kTrain);
    if (cfg.normalize_losses) {
      contrastive.l_pre = scale(contrastive.l_pre, align_norm);
      contrastive.l_train = scale(contrastive.l_train, align_norm);
      contrastive.l_c = add(scale(contrastive.l_pre, w.alpha), scale(contrastive.l_train, w.beta));
    }
    const TotalLoss total = total_loss(l_ae, igae, contrastive, l_kl, w);
    detail::check_finite(total.breakdown, "train", epoch);
    const GradientMap grads = tape.backward(total.total);
    adam.step(state, taped, grads);
    result.trace.push_back(total.breakdown);
  }

  // Final evaluation pass (no gradients).
  const auto f = detail::forward_all(state, x, adj);
  const ClusterCenters centers{state.centers, cfg.v};
  const Tensor q_fused = soft_assign(f.fusion.z_final, centers);
  const Tensor q_ae = soft_assign(f.ae.latent, centers);
  const Tensor q_gae = soft_assign(f.gae.latent, centers);
  if (p.size() == 0) p = target_distribution(q_fused);
  {
    const Tensor l_kl = kl_triplet_loss(p, q_fused, q_ae, q_gae);
    const Tensor l_ae = scale(loss_ae(f.ae.recon_features, x), ae_norm);
    const IgaeLoss igae = loss_igae(f.gae.recon_features, f.gae.recon_adjacency, x, adj, w.gamma);
    ContrastiveLoss contrastive = loss_contrastive(f.gae.latent, f.ae.latent, f.fusion.z_final,
                                                   w.alpha, w.beta, Phase::kTrain);
    if (cfg.normalize_losses) {
      contrastive.l_pre = scale(contrastive.l_pre, align_norm);
      contrastive.l_train = scale(contrastive.l_train, align_norm);
      contrastive.l_c = add(scale(contrastive.l_pre, w.alpha), scale(contrastive.l_train, w.beta));
    }
    result.final_losses = total_loss(l_ae, igae, contrastive, l_kl, w).breakdown;
  }
  result.labels = w.lambda_kl == 0.0 ? kmeans(f.fusion.z_final, ds.k, cfg.seed).labels
                                     : argmax_labels(q_fused);
  result.coefficients = effective_coefficients(state.fusion);
  if (ds.labels) result.scores = score_clustering(*ds.labels, result.labels);
  return result;
}

// ---------------------------------------------------------------------------
// Ablation matrix and hyperparameter sweep.
// ---------------------------------------------------------------------------

struct AblateRow {
  std::string variant;
  bool contrastive = false;
  bool multi_order = false;
  ClusteringScores scores;
};

struct AblateResult {
  std::vector<AblateRow> rows;  // base, +C, +S, +C+S in this order
};

/// Runs the 2x2 switch matrix with identical seeds: base (both mechanisms
/// off), contrastive only, multi-order only, and both.
inline AblateResult run_ablate(const RunConfig& cfg, const GraphDataset& ds) {
  if (!ds.labels) throw ConfigError("ablate requires ground-truth labels");
  const std::vector<std::tuple<std::string, bool, bool>> variants = {
      {"base", false, false}, {"+C", true, false}, {"+S", false, true}, {"+C+S", true, true}};
  AblateResult result;
  for (const auto& [name, contrastive, multi] : variants) {
    RunConfig vcfg = cfg;
    vcfg.enable_contrastive = contrastive;
    vcfg.enable_multi_order = multi;
    PretrainResult pre = run_pretrain(vcfg, ds);
    const TrainResult tr = run_train(vcfg, ds, pre.state);
    result.rows.push_back(AblateRow{name, contrastive, multi, *tr.scores});
  }
  return result;
}

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  ClusteringScores scores;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // alpha-major grid order
};

/// Cross product of the alpha/beta grids. All cells share one pretrain
/// checkpoint (computed with the base config) and differ only in the
/// training-phase loss weights.
inline SweepResult run_sweep(const RunConfig& cfg, const GraphDataset& ds) {
  if (!ds.labels) throw ConfigError("sweep requires ground-truth labels");
  const PretrainResult pre = run_pretrain(cfg, ds);
  SweepResult result;
  for (const double alpha : cfg.sweep_alpha_grid) {
    for (const double beta : cfg.sweep_beta_grid) {
      RunConfig cell = cfg;
      cell.alpha = alpha;
      cell.beta = beta;
      ModelState state = pre.state;
      const TrainResult tr = run_train(cell, ds, state);
      result.rows.push_back(SweepRow{alpha, beta, *tr.scores});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output writers. All emission uses fixed formatting so identical runs
// produce byte-identical files.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  return out;
}

}  // namespace detail

inline void write_losses_csv(const std::string& path, const std::vector<LossBreakdown>& trace) {
  auto out = detail::open_out(path);
  out << "epoch,l_ae,l_f,l_s,l_pre,l_train,l_kl,total\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& b = trace[i];
    out << (i + 1) << "," << detail::fmt_full(b.l_ae) << "," << detail::fmt_full(b.l_f) << ","
        << detail::fmt_full(b.l_s) << "," << detail::fmt_full(b.l_pre) << "," << detail::fmt_full(b.l_train)
        << "," << detail::fmt_full(b.l_kl) << "," << detail::fmt_full(b.total) << "\n";
  }
}

inline void write_labels_file(const std::string& path, const std::vector<int>& labels) {
  auto out = detail::open_out(path);
  for (const int l : labels) out << l << "\n";
}

inline nlohmann::ordered_json losses_json(const LossBreakdown& b) {
  nlohmann::ordered_json j;
  j["l_ae"] = b.l_ae;
  j["l_f"] = b.l_f;
  j["l_s"] = b.l_s;
  j["l_igae"] = b.l_igae;
  j["l_pre"] = b.l_pre;
  j["l_train"] = b.l_train;
  j["l_c"] = b.l_c;
  j["l_kl"] = b.l_kl;
  j["total"] = b.total;
  return j;
}

inline nlohmann::ordered_json scores_json(const ClusteringScores& s) {
  nlohmann::ordered_json j;
  j["acc"] = s.acc;
  j["nmi"] = s.nmi;
  j["ari"] = s.ari;
  j["f1"] = s.f1;
  return j;
}

/// Deterministic run report. Wall-clock time deliberately lives in a
/// separate timing.json so the report stays byte-identical across repeated
/// runs of the same config and seed.
inline nlohmann::ordered_json train_report_json(const RunConfig& cfg, const GraphDataset& ds,
                                                const TrainResult& tr, const std::string& command) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["dataset"] = {{"n_nodes", ds.n_nodes}, {"n_features", ds.n_features}, {"k", ds.k},
                  {"has_labels", ds.labels.has_value()}};
  j["metrics"] = tr.scores ? scores_json(*tr.scores) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json coeff;
  coeff["delta"] = tr.coefficients.delta;
  coeff["lambda1"] = tr.coefficients.lambda1;
  coeff["lambda2"] = tr.coefficients.lambda2;
  coeff["lambda_b"] = tr.coefficients.lambda_b;
  j["fusion_coefficients"] = coeff;
  j["final_losses"] = losses_json(tr.final_losses);
  j["epochs_run"] = {{"ae", cfg.epochs_ae}, {"gae", cfg.epochs_gae}, {"train", static_cast<int>(tr.trace.size())}};
  j["config"] = config_json(cfg);
  return j;
}

inline void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << "\n";
}

inline void write_timing_file(const std::string& path, double wall_clock_sec) {
  nlohmann::ordered_json j;
  j["wall_clock_sec"] = wall_clock_sec;
  write_json_file(path, j);
}

inline void write_ablation_csv(const std::string& path, const AblateResult& res) {
  auto out = detail::open_out(path);
  out << "variant,contrastive,multi_order,acc,nmi,ari,f1,delta_acc,delta_nmi,delta_ari,delta_f1\n";
  const ClusteringScores& base = res.rows.front().scores;
  for (const auto& row : res.rows) {
    out << row.variant << "," << (row.contrastive ? "true" : "false") << ","
        << (row.multi_order ? "true" : "false") << "," << detail::fmt_metric(row.scores.acc) << ","
        << detail::fmt_metric(row.scores.nmi) << "," << detail::fmt_metric(row.scores.ari) << ","
        << detail::fmt_metric(row.scores.f1) << "," << detail::fmt_metric(row.scores.acc - base.acc) << ","
        << detail::fmt_metric(row.scores.nmi - base.nmi) << "," << detail::fmt_metric(row.scores.ari - base.ari)
        << "," << detail::fmt_metric(row.scores.f1 - base.f1) << "\n";
  }
}

inline void write_sweep_csv(const std::string& path, const SweepResult& res) {
  auto out = detail::open_out(path);
  out << "alpha,beta,acc,nmi,ari,f1\n";
  for (const auto& row : res.rows) {
    out << detail::fmt_metric(row.alpha) << "," << detail::fmt_metric(row.beta) << ","
        << detail::fmt_metric(row.scores.acc) << "," << detail::fmt_metric(row.scores.nmi) << ","
        << detail::fmt_metric(row.scores.ari) << "," << detail::fmt_metric(row.scores.f1) << "\n";
  }
}

namespace detail {

inline double metric_of(const ClusteringScores& s, const std::string& name) {
  if (name == "acc") return s.acc;
  if (name == "nmi") return s.nmi;
  if (name == "ari") return s.ari;
  if (name == "f1") return s.f1;
  throw ConfigError("unknown sweep_metric: '" + name + "'");
}

}  // namespace detail

/// Two charts: the chosen metric against alpha (one polyline per beta) and
/// against beta (one polyline per alpha).
inline void write_sweep_svgs(const std::string& alpha_path, const std::string& beta_path,
                             const SweepResult& res, const RunConfig& cfg) {
  const std::string metric = cfg.sweep_metric;
  std::vector<SvgSeries> by_beta;
  for (std::size_t bi = 0; bi < cfg.sweep_beta_grid.size(); ++bi) {
    SvgSeries s;
    s.label = "beta=" + detail::fmt_tick(cfg.sweep_beta_grid[bi]);
    for (std::size_t ai = 0; ai < cfg.sweep_alpha_grid.size(); ++ai) {
      const auto& row = res.rows[ai * cfg.sweep_beta_grid.size() + bi];
      s.x.push_back(row.alpha);
      s.y.push_back(detail::metric_of(row.scores, metric));
    }
    by_beta.push_back(std::move(s));
  }
  std::vector<SvgSeries> by_alpha;
  for (std::size_t ai = 0; ai < cfg.sweep_alpha_grid.size(); ++ai) {
    SvgSeries s;
    s.label = "alpha=" + detail::fmt_tick(cfg.sweep_alpha_grid[ai]);
    for (std::size_t bi = 0; bi < cfg.sweep_beta_grid.size(); ++bi) {
      const auto& row = res.rows[ai * cfg.sweep_beta_grid.size() + bi];
      s.x.push_back(row.beta);
      s.y.push_back(detail::metric_of(row.scores, metric));
    }
    by_alpha.push_back(std::move(s));
  }
  {
    auto out = detail::open_out(alpha_path);
    out << line_chart_svg(metric + " vs alpha", "alpha", metric, by_beta);
  }
  {
    auto out = detail::open_out(beta_path);
    out << line_chart_svg(metric + " vs beta", "beta", metric, by_alpha);
  }
}

}  // namespace cgcn
