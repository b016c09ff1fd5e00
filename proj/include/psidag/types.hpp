// Shared dense-matrix aliases and small domain types.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace psidag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// One block of observations, one sample per row (b x d).
using SampleBatch = Eigen::MatrixXd;

// Vertex permutation. perm[r] is the vertex at rank r; position[v] is the
// rank of vertex v. The two arrays are mutual inverses.
struct Ordering {
  std::vector<int> perm;
  std::vector<int> position;

  Ordering() = default;

  explicit Ordering(std::vector<int> p) : perm(std::move(p)) {
    const int d = static_cast<int>(perm.size());
    position.assign(d, -1);
    for (int r = 0; r < d; ++r) {
      const int v = perm[r];
      if (v < 0 || v >= d || position[v] != -1) {
        throw std::invalid_argument("Ordering: not a permutation of 0.." +
                                    std::to_string(d - 1));
      }
      position[v] = r;
    }
  }

  static Ordering identity(int d) {
    std::vector<int> p(d);
    for (int i = 0; i < d; ++i) p[i] = i;
    return Ordering(std::move(p));
  }

  int size() const { return static_cast<int>(perm.size()); }
};

// Boolean matrix of entries permitted under an ordering. allowed(i, j) is
// true iff i precedes j, so the diagonal is always false.
struct OrderMask {
  BoolMatrix allowed;

  Eigen::Index dim() const { return allowed.rows(); }
};

inline BoolMatrix support(const Matrix& W) {
  return W.array() != 0.0;
}

inline std::int64_t edge_count(const BoolMatrix& A) {
  return static_cast<std::int64_t>(A.count());
}

// CSV/file-format failure carrying a 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::int64_t line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_(line) {}

  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

// Raised when the optimizer's smoothed loss blows past the divergence guard.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psidag
