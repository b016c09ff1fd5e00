#include "psidag/metrics.hpp"

#include "psidag/projection.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace psidag;

namespace {

// Random DAG adjacency: Bernoulli edges forward along a random ordering.
BoolMatrix random_dag_adj(int d, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> perm(d);
  for (int i = 0; i < d; ++i) perm[i] = i;
  rng.shuffle(perm);
  Ordering ord(perm);
  BoolMatrix adj = BoolMatrix::Constant(d, d, false);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j && ord.position[i] < ord.position[j] && rng.bernoulli(p)) {
        adj(i, j) = true;
      }
    }
  }
  return adj;
}

Matrix weights_on(const BoolMatrix& adj, std::uint64_t seed) {
  Rng rng(seed);
  Matrix W = Matrix::Zero(adj.rows(), adj.cols());
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    for (Eigen::Index j = 0; j < adj.cols(); ++j) {
      if (adj(i, j)) {
        W(i, j) = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.3, 1.0);
      }
    }
  }
  return W;
}

}  // namespace

TEST_CASE("threshold_weights", "[metrics]") {
  Matrix W = Matrix::Zero(2, 3);  // shape-agnostic entrywise op
  W(0, 0) = 0.29;
  W(0, 1) = 0.31;
  W(0, 2) = -0.5;
  Matrix t = threshold_weights(W, 0.3);
  CHECK(t(0, 0) == 0.0);
  CHECK(t(0, 1) == 0.31);
  CHECK(t(0, 2) == -0.5);

  CHECK(threshold_weights(W, 0.0) == W);
  CHECK(threshold_weights(Matrix::Zero(3, 3), 0.3).isZero(0.0));
  CHECK_THROWS_AS(threshold_weights(W, -1.0), std::invalid_argument);
}

TEST_CASE("structural_metrics worked examples", "[metrics]") {
  SECTION("identical graphs") {
    BoolMatrix g = random_dag_adj(6, 0.4, 3);
    StructureMetrics m = structural_metrics(g, g);
    CHECK(m.shd == 0);
    CHECK(m.tpr == 1.0);
    CHECK(m.fpr == 0.0);
    CHECK(m.predicted_edges == m.true_edges);
  }

  SECTION("single reversal with degenerate FPR denominator") {
    BoolMatrix truth = BoolMatrix::Constant(2, 2, false);
    truth(0, 1) = true;
    BoolMatrix pred = BoolMatrix::Constant(2, 2, false);
    pred(1, 0) = true;
    StructureMetrics m = structural_metrics(pred, truth);
    CHECK(m.shd == 1);
    CHECK(m.tpr == 0.0);
    CHECK(m.fpr == 0.0);  // no absent pairs
  }

  SECTION("one hit plus one spurious edge") {
    BoolMatrix truth = BoolMatrix::Constant(3, 3, false);
    truth(0, 1) = true;
    BoolMatrix pred = BoolMatrix::Constant(3, 3, false);
    pred(0, 1) = true;
    pred(1, 2) = true;
    StructureMetrics m = structural_metrics(pred, truth);
    CHECK(m.shd == 1);
    CHECK(m.tpr == 1.0);
    CHECK(m.fpr == Catch::Approx(0.5));
    CHECK(m.predicted_edges == 2);
    CHECK(m.true_edges == 1);
  }

  SECTION("cyclic input is rejected") {
    BoolMatrix cyc = BoolMatrix::Constant(2, 2, false);
    cyc(0, 1) = cyc(1, 0) = true;
    CHECK_THROWS_AS(structural_metrics(cyc, BoolMatrix::Constant(2, 2, false)),
                    std::invalid_argument);
  }
}

TEST_CASE("structural_metrics is relabeling-invariant", "[metrics]") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const int d = 7;
    BoolMatrix pred = random_dag_adj(d, 0.35, seed);
    BoolMatrix truth = random_dag_adj(d, 0.35, seed + 100);
    Rng rng(seed + 200);
    std::vector<int> sigma(d);
    for (int i = 0; i < d; ++i) sigma[i] = i;
    rng.shuffle(sigma);

    BoolMatrix pred2 = BoolMatrix::Constant(d, d, false);
    BoolMatrix truth2 = BoolMatrix::Constant(d, d, false);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        pred2(sigma[i], sigma[j]) = pred(i, j);
        truth2(sigma[i], sigma[j]) = truth(i, j);
      }
    }
    StructureMetrics a = structural_metrics(pred, truth);
    StructureMetrics b = structural_metrics(pred2, truth2);
    CHECK(a.shd == b.shd);
    CHECK(a.tpr == b.tpr);
    CHECK(a.fpr == b.fpr);
  }
}

TEST_CASE("SHD satisfies the triangle inequality", "[metrics]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int d = 6;
    BoolMatrix A = random_dag_adj(d, 0.4, 3 * seed);
    BoolMatrix B = random_dag_adj(d, 0.4, 3 * seed + 1);
    BoolMatrix C = random_dag_adj(d, 0.4, 3 * seed + 2);
    const auto ab = structural_metrics(A, B).shd;
    const auto bc = structural_metrics(B, C).shd;
    const auto ac = structural_metrics(A, C).shd;
    CHECK(ac <= ab + bc);
  }
}

TEST_CASE("h_expm closed forms and guard", "[metrics]") {
  CHECK(h_expm(Matrix::Zero(4, 4)) == Catch::Approx(0.0).margin(1e-12));

  Matrix two_cycle = Matrix::Zero(2, 2);
  two_cycle(0, 1) = two_cycle(1, 0) = 1.0;
  CHECK(std::abs(h_expm(two_cycle) - (2.0 * std::cosh(1.0) - 2.0)) < 1e-9);

  CHECK_THROWS_AS(h_expm(Matrix::Zero(513, 513)), std::invalid_argument);
}

TEST_CASE("h_ldet closed forms and domain errors", "[metrics]") {
  CHECK(h_ldet(Matrix::Zero(5, 5), 0.7) == Catch::Approx(0.0).margin(1e-12));

  Matrix two_cycle = Matrix::Zero(2, 2);
  two_cycle(0, 1) = two_cycle(1, 0) = 1.0;
  CHECK(std::abs(h_ldet(two_cycle, 2.0) -
                 (-std::log(3.0) + 2.0 * std::log(2.0))) < 1e-9);
  CHECK_THROWS_AS(h_ldet(two_cycle, 0.5), std::domain_error);
  CHECK_THROWS_AS(h_ldet(two_cycle, 1.0), std::domain_error);
}

TEST_CASE("masked matrices are exact zeros of both diagnostics", "[metrics]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int d = 8;
    Rng rng(seed);
    Matrix W(d, d);
    for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = rng.normal();
    Matrix masked = apply_mask(W, ordering_to_mask(project_ordering(W)));
    CHECK(std::abs(h_expm(masked)) <= 1e-8);
    CHECK(std::abs(h_ldet(masked, 1.0)) <= 1e-8);
  }
}

TEST_CASE("h_expm is nonnegative and zero exactly on DAGs", "[metrics]") {
  SECTION("all 3-vertex digraphs by brute force") {
    for (int bits = 0; bits < 64; ++bits) {
      const int pairs[6][2] = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
      BoolMatrix adj = BoolMatrix::Constant(3, 3, false);
      Matrix W = Matrix::Zero(3, 3);
      for (int e = 0; e < 6; ++e) {
        if (bits & (1 << e)) {
          adj(pairs[e][0], pairs[e][1]) = true;
          W(pairs[e][0], pairs[e][1]) = 1.0;
        }
      }
      const double h = h_expm(W);
      CHECK(h >= -1e-12);
      CHECK((h <= 1e-8) == is_dag(adj).has_value());
    }
  }

  SECTION("random weighted instances agree across both diagnostics") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const int d = 3 + static_cast<int>(seed % 6);
      Rng rng(seed + 60);
      BoolMatrix adj = BoolMatrix::Constant(d, d, false);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          if (i != j && rng.bernoulli(0.3)) adj(i, j) = true;
        }
      }
      Matrix W = weights_on(adj, seed + 90);
      const double he = h_expm(W);
      const double hl = h_ldet(W, 1.0 + spectral_radius_ub(W));
      const bool acyclic = is_dag(adj).has_value();
      if (acyclic) {
        CHECK(he <= 1e-8);
        CHECK(hl <= 1e-8);
      } else {
        CHECK(he > 1e-6);
        CHECK(hl > 1e-6);
      }
    }
  }
}
