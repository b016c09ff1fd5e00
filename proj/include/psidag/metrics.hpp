// Structure-recovery metrics, final thresholding, and the two acyclicity
// diagnostics (trace-exponential and log-determinant) used as oracles.
#pragma once

#include "psidag/graphgen.hpp"
#include "psidag/types.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace psidag {

struct StructureMetrics {
  std::int64_t shd = 0;
  double tpr = 0.0;
  double fpr = 0.0;
  std::int64_t predicted_edges = 0;
  std::int64_t true_edges = 0;
};

// Zeroes entries with |w| < tau; the surviving support is the reported graph.
inline Matrix threshold_weights(const Matrix& W, double tau) {
  if (tau < 0.0) throw std::invalid_argument("threshold_weights: tau < 0");
  return (W.cwiseAbs().array() >= tau).select(W, 0.0);
}

// Classifies every vertex pair as true positive, reversal, false positive or
// false negative. SHD counts a reversal once. FPR = (FP + reversals) over
// pairs absent in the truth; a zero denominator yields 0 by convention.
inline StructureMetrics structural_metrics(const BoolMatrix& pred,
                                           const BoolMatrix& truth) {
  const Eigen::Index d = truth.rows();
  if (pred.rows() != d || pred.cols() != d || truth.cols() != d) {
    throw std::invalid_argument("structural_metrics: dimension mismatch");
  }
  if (!is_dag(pred) || !is_dag(truth)) {
    throw std::invalid_argument("structural_metrics: inputs must be acyclic");
  }

  std::int64_t tp = 0, fp = 0, fn = 0, reversed = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const bool t_ij = truth(i, j), t_ji = truth(j, i);
      const bool p_ij = pred(i, j), p_ji = pred(j, i);
      const bool t_any = t_ij || t_ji;
      const bool p_any = p_ij || p_ji;
      if (t_any && p_any) {
        if (t_ij == p_ij) {
          ++tp;
        } else {
          ++reversed;
        }
      } else if (p_any) {
        ++fp;
      } else if (t_any) {
        ++fn;
      }
    }
  }

  StructureMetrics m;
  m.true_edges = edge_count(truth);
  m.predicted_edges = edge_count(pred);
  m.shd = fp + fn + reversed;
  m.tpr = m.true_edges > 0 ? static_cast<double>(tp) / m.true_edges : 0.0;
  const std::int64_t absent = d * (d - 1) / 2 - m.true_edges;
  m.fpr = absent > 0 ? static_cast<double>(fp + reversed) / absent : 0.0;
  return m;
}

// Upper bound on the spectral radius of W .* W: the smaller of its max row
// and column sums (the matrix is entrywise nonnegative).
inline double spectral_radius_ub(const Matrix& W) {
  Matrix B = W.cwiseProduct(W);
  const double row = B.rowwise().sum().maxCoeff();
  const double col = B.colwise().sum().maxCoeff();
  return std::min(row, col);
}

namespace detail {

// Power-iteration estimate of the spectral radius of a nonnegative matrix.
inline double spectral_radius_estimate(const Matrix& B, int iters = 100) {
  const Eigen::Index d = B.rows();
  Vector v = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector u = B * v;
    lambda = u.norm();
    if (lambda == 0.0) return 0.0;  // nilpotent direction exhausted
    v = u / lambda;
  }
  return lambda;
}

}  // namespace detail

// tr(e^(W .* W)) - d; zero exactly on DAGs. O(d^3) diagnostic, guarded.
inline double h_expm(const Matrix& W) {
  const Eigen::Index d = W.rows();
  if (W.cols() != d) throw std::invalid_argument("h_expm: W must be square");
  if (d > 512) throw std::invalid_argument("h_expm: guarded to d <= 512");
  Matrix B = W.cwiseProduct(W);
  return B.exp().trace() - static_cast<double>(d);
}

// -log det(sI - W .* W) + d log s; zero iff W is a DAG, defined only for
// s above the spectral radius of W .* W.
inline double h_ldet(const Matrix& W, double s) {
  const Eigen::Index d = W.rows();
  if (W.cols() != d) throw std::invalid_argument("h_ldet: W must be square");
  if (d > 2048) throw std::invalid_argument("h_ldet: guarded to d <= 2048");
  if (s <= 0.0) throw std::domain_error("h_ldet: s must be positive");

  Matrix B = W.cwiseProduct(W);
  const double rho = detail::spectral_radius_estimate(B);
  if (!(s > rho)) {
    throw std::domain_error("h_ldet: s is not above the spectral radius");
  }

  Eigen::PartialPivLU<Matrix> lu(s * Matrix::Identity(d, d) - B);
  const Matrix& U = lu.matrixLU();
  double logdet = 0.0;
  double sign = static_cast<double>(lu.permutationP().determinant());
  for (Eigen::Index i = 0; i < d; ++i) {
    const double u = U(i, i);
    if (u == 0.0 || !std::isfinite(u)) {
      throw std::domain_error("h_ldet: sI - W.*W is singular");
    }
    if (u < 0.0) sign = -sign;
    logdet += std::log(std::abs(u));
  }
  if (sign <= 0.0) {
    throw std::domain_error("h_ldet: sI - W.*W is not positive-stable");
  }
  return -logdet + static_cast<double>(d) * std::log(s);
}

}  // namespace psidag
