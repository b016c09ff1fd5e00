// SGD engine: step-size schedules, plain and mask-preserving steps, uniform
// tail averaging, stop rules, and a power-iteration step-size estimator.
#pragma once

#include "psidag/model.hpp"
#include "psidag/semdata.hpp"
#include "psidag/types.hpp"

#include <chrono>
#include <functional>
#include <limits>

namespace psidag {

enum class StepSchedule { Constant, InvSqrt, AdaptivePolyakBounded };

struct SgdConfig {
  Eigen::Index batch_size = 64;
  StepSchedule schedule = StepSchedule::InvSqrt;
  double h0 = 0.0;            // <= 0: estimate 1/L from the source
  double polyak_floor = 0.0;  // loss lower bound for AdaptivePolyakBounded
  bool averaging = true;      // uniform average over the last half of the budget
  std::int64_t max_steps = 0; // step budget for one run
  double l1 = 0.0;            // optional proximal shrinkage per step, 0 = off
  std::uint64_t seed = 0;     // reserved for randomized schedule variants
};

struct StopRule {
  enum class Kind { RelativeToReference, GradNorm, MaxSteps };
  Kind kind = Kind::MaxSteps;
  double ref_loss = 0.0;  // reference value for RelativeToReference
  double factor = 0.1;
  double eps = 0.0;       // for GradNorm
  std::int64_t max_steps = std::numeric_limits<std::int64_t>::max();

  static StopRule relative(double ref, double factor = 0.1) {
    StopRule r;
    r.kind = Kind::RelativeToReference;
    r.ref_loss = ref;
    r.factor = factor;
    return r;
  }
  static StopRule grad_norm(double eps) {
    StopRule r;
    r.kind = Kind::GradNorm;
    r.eps = eps;
    return r;
  }
  static StopRule max_of(std::int64_t steps) {
    StopRule r;
    r.kind = Kind::MaxSteps;
    r.max_steps = steps;
    return r;
  }
  // Fires only when the caller's step budget runs out.
  static StopRule never() { return StopRule{}; }
};

struct TraceRow {
  std::int64_t step;        // 1-based, cumulative across a run
  double loss;              // batch loss at the pre-step iterate
  std::int64_t grad_evals;  // cumulative per-sample gradient count
  double elapsed_s;
  double grad_norm;         // Frobenius norm of the step's gradient
};
using Trace = std::vector<TraceRow>;

inline constexpr int kStopWindow = 50;

inline double smoothed_loss(const Trace& trace, int window = kStopWindow) {
  if (trace.empty()) throw std::invalid_argument("smoothed_loss: empty trace");
  const std::size_t n = std::min<std::size_t>(window, trace.size());
  double sum = 0.0;
  for (std::size_t i = trace.size() - n; i < trace.size(); ++i) {
    sum += trace[i].loss;
  }
  return sum / static_cast<double>(n);
}

inline double smoothed_grad_norm(const Trace& trace, int window = kStopWindow) {
  if (trace.empty()) throw std::invalid_argument("smoothed_grad_norm: empty trace");
  const std::size_t n = std::min<std::size_t>(window, trace.size());
  double sum = 0.0;
  for (std::size_t i = trace.size() - n; i < trace.size(); ++i) {
    sum += trace[i].grad_norm;
  }
  return sum / static_cast<double>(n);
}

inline bool check_stop(const Trace& trace, const StopRule& rule) {
  if (trace.empty()) throw std::invalid_argument("check_stop: empty trace");
  switch (rule.kind) {
    case StopRule::Kind::RelativeToReference:
      return smoothed_loss(trace) <= (1.0 + rule.factor) * rule.ref_loss;
    case StopRule::Kind::GradNorm:
      return smoothed_grad_norm(trace) <= rule.eps;
    case StopRule::Kind::MaxSteps:
      return trace.back().step >= rule.max_steps;
  }
  throw std::invalid_argument("check_stop: unknown rule");
}

// h0 = 1 / lambda_max of the empirical second-moment matrix (1/m) X^T X,
// with lambda_max from `trials` power iterations on b*trials drawn samples.
// The quadratic loss is exactly lambda_max-smooth per column.
inline double auto_step_size(SampleSource& source, Eigen::Index b, int trials) {
  if (b < 1 || trials < 1) {
    throw std::invalid_argument("auto_step_size: b and trials must be >= 1");
  }
  const Eigen::Index d = source.dim();
  SampleBatch X(b * trials, d);
  // Fixed sources may serve short batches at epoch tails, so fill by rows.
  Eigen::Index got = 0;
  while (got < X.rows()) {
    SampleBatch batch = source.next_batch(std::min(b, X.rows() - got));
    X.middleRows(got, batch.rows()) = batch;
    got += batch.rows();
  }
  if (X.squaredNorm() == 0.0) {
    throw std::invalid_argument("auto_step_size: source yields all-zero data");
  }
  const double m = static_cast<double>(X.rows());
  const int iters = std::max(trials, 2);

  // Power iteration via matvecs v -> X^T (X v) / m; if a start vector lands
  // in the null space, fall back to basis vectors (tr > 0 so one works).
  Vector v = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  for (Eigen::Index fallback = -1; fallback < d; ++fallback) {
    if (fallback >= 0) {
      v = Vector::Unit(d, fallback);
    }
    double lambda = 0.0;
    bool dead = false;
    for (int it = 0; it < iters; ++it) {
      Vector u = X.transpose() * (X * v) / m;
      lambda = u.norm();
      if (lambda == 0.0) {
        dead = true;
        break;
      }
      v = u / lambda;
    }
    if (!dead) return 1.0 / lambda;
  }
  throw std::invalid_argument("auto_step_size: degenerate second moment");
}

struct SgdResult {
  Matrix W;
  Trace trace;
};

// Iterates W <- W - h_t g_t with g_t the (optionally mask-projected) batch
// gradient; the diagonal is forced to zero after every step. Returns the
// uniform average of the last half of the budget when averaging is on,
// otherwise the last iterate. `on_batch` observes every consumed batch.
inline SgdResult sgd_run(
    Matrix W0, SampleSource& source, const SgdConfig& cfg, const StopRule& stop,
    const OrderMask* mask = nullptr,
    const std::function<void(const SampleBatch&)>& on_batch = {}) {
  const Eigen::Index d = source.dim();
  if (W0.rows() != d || W0.cols() != d) {
    throw std::invalid_argument("sgd_run: W0 does not match the source dimension");
  }
  if (cfg.max_steps < 1) {
    throw std::invalid_argument("sgd_run: max_steps must be >= 1");
  }
  if (mask != nullptr && ((W0.array() != 0.0) && !mask->allowed).any()) {
    throw std::invalid_argument("sgd_run: W0 has support outside the mask");
  }

  const double h0 =
      cfg.h0 > 0.0 ? cfg.h0 : auto_step_size(source, cfg.batch_size, 16);

  Matrix W = std::move(W0);
  W.diagonal().setZero();
  Matrix G(d, d);

  const std::int64_t avg_from = cfg.max_steps / 2;  // steps avg_from..max-1
  Matrix W_sum = Matrix::Zero(d, d);
  std::int64_t averaged = 0;

  Trace trace;
  trace.reserve(static_cast<std::size_t>(cfg.max_steps));
  double initial_smoothed = 0.0;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::int64_t t = 0; t < cfg.max_steps; ++t) {
    SampleBatch X = source.next_batch(cfg.batch_size);
    if (on_batch) on_batch(X);

    const double f = loss_and_grad(W, X, mask, G);
    const double gnorm = G.norm();
    if (!std::isfinite(f) || !std::isfinite(gnorm)) {
      throw DivergenceError("sgd_run: non-finite loss or gradient at step " +
                            std::to_string(t + 1));
    }

    double h = h0;
    switch (cfg.schedule) {
      case StepSchedule::Constant:
        break;
      case StepSchedule::InvSqrt:
        h = h0 / std::sqrt(static_cast<double>(t + 1));
        break;
      case StepSchedule::AdaptivePolyakBounded: {
        const double gsq = gnorm * gnorm;
        h = gsq > 0.0 ? std::min(h0, std::max(0.0, f - cfg.polyak_floor) / gsq)
                      : 0.0;
        break;
      }
    }

    W.noalias() -= h * G;
    W.diagonal().setZero();
    if (cfg.l1 > 0.0) {
      const double shrink = h * cfg.l1;
      W = W.unaryExpr([shrink](double w) {
        return w > shrink ? w - shrink : (w < -shrink ? w + shrink : 0.0);
      });
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    trace.push_back({t + 1, f, (t + 1) * cfg.batch_size, elapsed, gnorm});

    const double sm = smoothed_loss(trace);
    if (t == 0) initial_smoothed = sm;
    if (initial_smoothed > 0.0 && sm > 1e3 * initial_smoothed) {
      throw DivergenceError("sgd_run: smoothed loss exceeded 1000x its initial value");
    }

    if (t >= avg_from) {
      W_sum += W;
      ++averaged;
    }

    if (check_stop(trace, stop)) break;
  }

  SgdResult out;
  out.W = (cfg.averaging && averaged > 0) ? Matrix(W_sum / averaged) : W;
  out.trace = std::move(trace);
  return out;
}

}  // namespace psidag
