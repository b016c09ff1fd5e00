// Outer loop: unconstrained SGD steps, ordering projection, masked SGD
// steps, repeated until the stop rule fires or the iteration cap is hit.
// Also the fixed-ordering baseline and run reporting.
#pragma once

#include "psidag/metrics.hpp"
#include "psidag/optimizer.hpp"
#include "psidag/projection.hpp"

#include <chrono>
#include <optional>

namespace psidag {

struct PsiDagConfig {
  std::int64_t outer_iterations = 25;  // cap on K
  std::int64_t tau1 = 0;               // 0: one epoch-equivalent
  std::int64_t tau2 = 0;               // 0: one epoch-equivalent
  Eigen::Index epoch_hint = 5000;      // epoch size for streaming sources
  SgdConfig sgd;
  bool use_weighted_projection = false;
  double threshold = 0.3;              // applied once, at the end
  StopRule stop = StopRule::never();   // checked after each masked phase
};

struct OuterRecord {
  std::int64_t k = 0;
  Ordering ordering;
  double mass_removed = 0.0;
  double loss_start = 0.0;
  double loss_after_unconstrained = 0.0;
  double loss_after_projection = 0.0;
  double loss_after_masked = 0.0;
};

struct RunDiagnostics {
  double L1_hat = 0.0;      // smoothness estimate backing the auto step size
  double sigma1_hat = 0.0;  // gradient-noise level of the minibatch gradient
  double R_hat = 0.0;       // ||W_final - W_0||_F
};

struct RunTotals {
  std::int64_t grad_evals = 0;
  double wall_s = 0.0;
};

// Ground truth plus a held-out validation batch; enables validation losses,
// the reference stop rule, and the metrics block.
struct TruthInfo {
  Matrix W_star;
  SampleBatch validation;
};

struct RunReport {
  Eigen::Index d = 0;
  std::vector<OuterRecord> outer;
  Matrix W_pre;    // final iterate, acyclic by construction
  Matrix W_post;   // thresholded copy
  double threshold = 0.0;
  Ordering final_ordering;
  Trace trace;
  RunTotals totals;
  RunDiagnostics diagnostics;
  std::optional<StructureMetrics> metrics;
};

namespace detail {

inline std::int64_t resolve_tau(std::int64_t tau, const SampleSource& source,
                                const PsiDagConfig& cfg) {
  if (tau > 0) return tau;
  const Eigen::Index epoch =
      source.is_fixed() ? source.sample_count() : cfg.epoch_hint;
  return std::max<std::int64_t>(1, epoch / cfg.sgd.batch_size);
}

inline void append_trace(Trace& global, const Trace& segment) {
  const std::int64_t step0 = global.empty() ? 0 : global.back().step;
  const std::int64_t ge0 = global.empty() ? 0 : global.back().grad_evals;
  const double el0 = global.empty() ? 0.0 : global.back().elapsed_s;
  for (const TraceRow& row : segment) {
    global.push_back({row.step + step0, row.loss, row.grad_evals + ge0,
                      row.elapsed_s + el0, row.grad_norm});
  }
}

// Validation loss when the truth is known, else the smoothed training loss.
inline double eval_loss(const Matrix& W, const TruthInfo* truth,
                        const Trace& trace) {
  if (truth != nullptr) return loss(W, truth->validation);
  return trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : smoothed_loss(trace);
}

// Sample standard deviation of the minibatch-mean gradient at W0, from one
// probe batch of per-sample gradients.
inline double estimate_sigma1(const Matrix& W0, SampleSource& source,
                              Eigen::Index b) {
  const Eigen::Index probe = std::max<Eigen::Index>(b, 2);
  SampleBatch X = source.next_batch(probe);
  if (X.rows() < 2) return 0.0;  // epoch tail too short to estimate variance
  Matrix mean = stoch_grad(W0, X);
  double sq = 0.0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    sq += (stoch_grad(W0, X.row(r)) - mean).squaredNorm();
  }
  const double row_var = sq / static_cast<double>(X.rows() - 1);
  return std::sqrt(row_var / static_cast<double>(X.rows()));
}

inline void finalize(RunReport& report, Matrix W, Ordering pi,
                     const PsiDagConfig& cfg, const TruthInfo* truth,
                     const std::chrono::steady_clock::time_point& t0) {
  report.W_pre = std::move(W);
  if (!is_dag(support(report.W_pre))) {
    throw std::logic_error("run produced a cyclic weight matrix");
  }
  report.W_post = threshold_weights(report.W_pre, cfg.threshold);
  report.threshold = cfg.threshold;
  report.final_ordering = std::move(pi);
  report.diagnostics.R_hat = report.W_pre.norm();  // W_0 = 0
  report.totals.grad_evals =
      report.trace.empty() ? 0 : report.trace.back().grad_evals;
  report.totals.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (truth != nullptr) {
    report.metrics =
        structural_metrics(support(report.W_post), support(truth->W_star));
  }
}

}  // namespace detail

// One full run: for each outer iteration, tau1 unconstrained steps, the
// ordering projection (optionally weighted by running column statistics),
// masking, then tau2 order-preserving steps. Thresholding happens once at
// the very end.
inline RunReport run_psidag(SampleSource& source, const PsiDagConfig& cfg,
                            const TruthInfo* truth = nullptr) {
  const Eigen::Index d = source.dim();
  if (truth != nullptr &&
      (truth->W_star.rows() != d || truth->validation.cols() != d)) {
    throw std::invalid_argument("run_psidag: truth dimension mismatch");
  }
  const auto t0 = std::chrono::steady_clock::now();

  SgdConfig inner = cfg.sgd;
  if (inner.h0 <= 0.0) {
    inner.h0 = auto_step_size(source, inner.batch_size, 16);
  }

  RunReport report;
  report.d = d;
  report.diagnostics.L1_hat = 1.0 / inner.h0;

  Matrix W = Matrix::Zero(d, d);
  report.diagnostics.sigma1_hat =
      detail::estimate_sigma1(W, source, inner.batch_size);

  const std::int64_t tau1 = detail::resolve_tau(cfg.tau1, source, cfg);
  const std::int64_t tau2 = detail::resolve_tau(cfg.tau2, source, cfg);

  ColumnWeights colw = ColumnWeights::zeros(d);
  std::function<void(const SampleBatch&)> observe;
  if (cfg.use_weighted_projection) {
    observe = [&colw](const SampleBatch& X) { colw = update_weights(colw, X); };
  }

  Ordering pi = Ordering::identity(static_cast<int>(d));
  for (std::int64_t k = 0; k < cfg.outer_iterations; ++k) {
    OuterRecord rec;
    rec.k = k;
    rec.loss_start = detail::eval_loss(W, truth, report.trace);

    inner.max_steps = tau1;
    SgdResult free_phase =
        sgd_run(std::move(W), source, inner, StopRule::never(), nullptr, observe);
    W = std::move(free_phase.W);
    detail::append_trace(report.trace, free_phase.trace);
    rec.loss_after_unconstrained = detail::eval_loss(W, truth, report.trace);

    pi = cfg.use_weighted_projection ? project_ordering(W, colw)
                                     : project_ordering(W);
    OrderMask mask = ordering_to_mask(pi);
    rec.ordering = pi;
    rec.mass_removed = mask_removed_mass(W, mask);
    W = apply_mask(W, mask);
    rec.loss_after_projection = detail::eval_loss(W, truth, report.trace);

    inner.max_steps = tau2;
    SgdResult masked_phase =
        sgd_run(std::move(W), source, inner, StopRule::never(), &mask, observe);
    W = std::move(masked_phase.W);
    detail::append_trace(report.trace, masked_phase.trace);
    rec.loss_after_masked = detail::eval_loss(W, truth, report.trace);

    report.outer.push_back(std::move(rec));
    if (check_stop(report.trace, cfg.stop)) break;
  }

  detail::finalize(report, std::move(W), std::move(pi), cfg, truth, t0);
  return report;
}

// Fixed-ordering baseline: masked SGD only, under the full-DAG mask of the
// given ordering, in rounds of tau2 steps with the stop rule checked after
// each round.
inline RunReport run_fixed_order(SampleSource& source, const Ordering& pi,
                                 const PsiDagConfig& cfg,
                                 const TruthInfo* truth = nullptr) {
  const Eigen::Index d = source.dim();
  if (pi.size() != static_cast<int>(d)) {
    throw std::invalid_argument("run_fixed_order: ordering dimension mismatch");
  }
  const auto t0 = std::chrono::steady_clock::now();

  SgdConfig inner = cfg.sgd;
  if (inner.h0 <= 0.0) {
    inner.h0 = auto_step_size(source, inner.batch_size, 16);
  }

  RunReport report;
  report.d = d;
  report.diagnostics.L1_hat = 1.0 / inner.h0;

  Matrix W = Matrix::Zero(d, d);
  report.diagnostics.sigma1_hat =
      detail::estimate_sigma1(W, source, inner.batch_size);

  const std::int64_t tau2 = detail::resolve_tau(cfg.tau2, source, cfg);
  OrderMask mask = ordering_to_mask(pi);

  for (std::int64_t k = 0; k < cfg.outer_iterations; ++k) {
    OuterRecord rec;
    rec.k = k;
    rec.ordering = pi;
    rec.loss_start = detail::eval_loss(W, truth, report.trace);
    rec.loss_after_unconstrained = rec.loss_start;
    rec.loss_after_projection = rec.loss_start;

    inner.max_steps = tau2;
    SgdResult phase =
        sgd_run(std::move(W), source, inner, StopRule::never(), &mask);
    W = std::move(phase.W);
    detail::append_trace(report.trace, phase.trace);
    rec.loss_after_masked = detail::eval_loss(W, truth, report.trace);

    report.outer.push_back(std::move(rec));
    if (check_stop(report.trace, cfg.stop)) break;
  }

  detail::finalize(report, std::move(W), pi, cfg, truth, t0);
  return report;
}

}  // namespace psidag
