// Least-squares SEM objective: batch loss, stochastic gradients, and the
// mask-projected variant used while an ordering is being preserved.
#pragma once

#include "psidag/types.hpp"

#include <cmath>

namespace psidag {

namespace detail {

inline void check_shapes(const Matrix& W, const SampleBatch& X) {
  if (W.rows() != W.cols()) {
    throw std::invalid_argument("model: W must be square");
  }
  if (X.cols() != W.rows()) {
    throw std::invalid_argument("model: batch width does not match W");
  }
  if (X.rows() < 1) {
    throw std::invalid_argument("model: batch is empty");
  }
}

}  // namespace detail

// (1/2b) sum_rows ||x - W^T x||^2, i.e. (1/2b) ||X - XW||_F^2.
inline double loss(const Matrix& W, const SampleBatch& X) {
  detail::check_shapes(W, X);
  return (X - X * W).squaredNorm() / (2.0 * static_cast<double>(X.rows()));
}

// Batch-mean gradient: G = (1/b) X^T (XW - X).
inline Matrix stoch_grad(const Matrix& W, const SampleBatch& X) {
  detail::check_shapes(W, X);
  return X.transpose() * (X * W - X) / static_cast<double>(X.rows());
}

// Gradient of the masked objective l(W .* A; x). Requires W to already live
// on the mask, so inside the mask it coincides with the plain gradient and
// outside it is exactly zero.
inline Matrix masked_grad(const Matrix& W, const SampleBatch& X,
                          const OrderMask& mask) {
  detail::check_shapes(W, X);
  if (mask.allowed.rows() != W.rows() || mask.allowed.cols() != W.cols()) {
    throw std::invalid_argument("masked_grad: mask shape does not match W");
  }
  if (((W.array() != 0.0) && !mask.allowed).any()) {
    throw std::invalid_argument("masked_grad: W has support outside the mask");
  }
  Matrix G = stoch_grad(W, X);
  return mask.allowed.select(G, 0.0);
}

// Fused loss + gradient sharing one residual pass; what the optimizer calls
// every step. Equals (loss, stoch_grad) or their masked counterparts.
inline double loss_and_grad(const Matrix& W, const SampleBatch& X,
                            const OrderMask* mask, Matrix& G) {
  detail::check_shapes(W, X);
  const double b = static_cast<double>(X.rows());
  Matrix R = X * W - X;
  const double f = R.squaredNorm() / (2.0 * b);
  G.noalias() = X.transpose() * R;
  G /= b;
  if (mask != nullptr) {
    if (((W.array() != 0.0) && !mask->allowed).any()) {
      throw std::invalid_argument("masked_grad: W has support outside the mask");
    }
    G = mask->allowed.select(G, 0.0);
  }
  return f;
}

}  // namespace psidag
