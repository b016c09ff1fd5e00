// Vertex-ordering projection: peels a "closest" topological ordering off an
// arbitrary weight matrix, builds the full-DAG mask of an ordering, and
// applies it. Also the running column weights for the weighted variant.
#pragma once

#include "psidag/types.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace psidag {

// Per-column running mean of squared sample values; used to weight matrix
// entries before the projection measures row/column masses.
struct ColumnWeights {
  Vector w;
  std::int64_t count = 0;

  static ColumnWeights zeros(Eigen::Index d) {
    return ColumnWeights{Vector::Zero(d), 0};
  }
};

// Absorbs a batch into the running mean: w[j] = (1/k) sum_t x_t[j]^2 over all
// k samples seen.
inline ColumnWeights update_weights(const ColumnWeights& weights,
                                    const SampleBatch& X) {
  if (weights.w.size() != X.cols()) {
    throw std::invalid_argument("update_weights: dimension mismatch");
  }
  const std::int64_t m = X.rows();
  ColumnWeights out;
  out.count = weights.count + m;
  Vector batch_sq = X.array().square().colwise().sum();
  out.w = (weights.w * static_cast<double>(weights.count) + batch_sq) /
          static_cast<double>(out.count);
  return out;
}

namespace detail {

// Iterative peeling. Masses are squared row/column norms of W (elementwise
// weighted when column weights are given) over the still-active vertices.
// Each round compares the smallest row mass with the smallest column mass:
// the row winner is a near-sink and fills the ordering from the back, the
// column winner is a near-source and fills it from the front. Removing the
// placed vertex updates the remaining masses in O(active), giving O(d^2)
// total. Ties: the smaller vertex index wins an argmin; a row-vs-column tie
// takes the row branch.
inline Ordering project_ordering_impl(const Matrix& W, const Vector* colw) {
  const Eigen::Index d = W.rows();
  if (W.cols() != d) {
    throw std::invalid_argument("project_ordering: W must be square");
  }
  if (colw != nullptr && colw->size() != d) {
    throw std::invalid_argument("project_ordering: weights length != d");
  }
  if (d == 0) return Ordering{};

  // S(i,j) = (W(i,j) * m_j)^2; T = S^T so both the column slice (row-mass
  // updates) and the row slice (column-mass updates) stay contiguous. The
  // transpose is tiled and the initial masses are column sums, keeping the
  // whole setup at streaming bandwidth for large d.
  Matrix S(d, d);
  Vector c(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double m = colw ? (*colw)(j) : 1.0;
    S.col(j) = (W.col(j) * m).array().square();
    c(j) = S.col(j).sum();
  }
  Matrix T(d, d);
  constexpr Eigen::Index kTile = 64;
  for (Eigen::Index jb = 0; jb < d; jb += kTile) {
    const Eigen::Index jn = std::min(kTile, d - jb);
    for (Eigen::Index ib = 0; ib < d; ib += kTile) {
      const Eigen::Index in = std::min(kTile, d - ib);
      T.block(jb, ib, jn, in) = S.block(ib, jb, in, jn).transpose();
    }
  }
  Vector r(d);
  for (Eigen::Index i = 0; i < d; ++i) r(i) = T.col(i).sum();

  std::vector<char> active(static_cast<std::size_t>(d), 1);
  std::vector<int> perm(static_cast<std::size_t>(d), -1);
  Eigen::Index head = 0;
  Eigen::Index tail = d - 1;

  for (Eigen::Index round = 0; round < d; ++round) {
    Eigen::Index ir = -1, ic = -1;
    for (Eigen::Index v = 0; v < d; ++v) {
      if (!active[static_cast<std::size_t>(v)]) continue;
      if (ir < 0 || r(v) < r(ir)) ir = v;
      if (ic < 0 || c(v) < c(ic)) ic = v;
    }
    Eigen::Index placed;
    if (r(ir) <= c(ic)) {
      placed = ir;
      perm[static_cast<std::size_t>(tail--)] = static_cast<int>(placed);
    } else {
      placed = ic;
      perm[static_cast<std::size_t>(head++)] = static_cast<int>(placed);
    }
    active[static_cast<std::size_t>(placed)] = 0;
    const auto scol = S.col(placed);
    const auto tcol = T.col(placed);
    for (Eigen::Index v = 0; v < d; ++v) {
      if (!active[static_cast<std::size_t>(v)]) continue;
      r(v) -= scol(v);
      c(v) -= tcol(v);
    }
  }
  return Ordering(std::move(perm));
}

}  // namespace detail

inline Ordering project_ordering(const Matrix& W) {
  return detail::project_ordering_impl(W, nullptr);
}

inline Ordering project_ordering(const Matrix& W, const ColumnWeights& weights) {
  return detail::project_ordering_impl(W, &weights.w);
}

// Full-DAG mask of an ordering: allowed(i,j) iff i precedes j.
inline OrderMask ordering_to_mask(const Ordering& pi) {
  const int d = pi.size();
  BoolMatrix allowed = BoolMatrix::Constant(d, d, false);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      allowed(i, j) = pi.position[i] < pi.position[j];
    }
  }
  return OrderMask{std::move(allowed)};
}

// Entrywise product with the mask; the result is acyclic by construction.
inline Matrix apply_mask(const Matrix& W, const OrderMask& mask) {
  if (mask.allowed.rows() != W.rows() || mask.allowed.cols() != W.cols()) {
    throw std::invalid_argument("apply_mask: shape mismatch");
  }
  return mask.allowed.select(W, 0.0);
}

// Squared mass the mask would zero out; the quantity the projection tries to
// keep small.
inline double mask_removed_mass(const Matrix& W, const OrderMask& mask) {
  return (!mask.allowed).select(W, 0.0).squaredNorm();
}

}  // namespace psidag
