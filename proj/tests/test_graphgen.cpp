#include "psidag/graphgen.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace psidag;

namespace {

// Certificate check: every edge must go forward under the ordering.
bool certificate_consistent(const BinaryDag& dag) {
  const int d = static_cast<int>(dag.adjacency.rows());
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (dag.adjacency(i, j) && dag.order.position[i] >= dag.order.position[j]) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("is_dag basics", "[graphgen]") {
  BoolMatrix zero = BoolMatrix::Constant(3, 3, false);
  auto ord = is_dag(zero);
  REQUIRE(ord.has_value());
  CHECK(ord->size() == 3);

  BoolMatrix two_cycle = BoolMatrix::Constant(2, 2, false);
  two_cycle(0, 1) = two_cycle(1, 0) = true;
  CHECK_FALSE(is_dag(two_cycle).has_value());

  BoolMatrix chain = BoolMatrix::Constant(3, 3, false);
  chain(0, 1) = chain(1, 2) = true;
  auto chain_ord = is_dag(chain);
  REQUIRE(chain_ord.has_value());
  CHECK(chain_ord->perm == std::vector<int>{0, 1, 2});
}

TEST_CASE("ER generation density and feasibility", "[graphgen]") {
  SECTION("infeasible specs are rejected") {
    CHECK_THROWS_AS(gen_er_dag({.d = 1, .model = GraphModel::ER, .k = 1, .seed = 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(gen_er_dag({.d = 4, .model = GraphModel::ER, .k = 3, .seed = 0}),
                    std::invalid_argument);
  }

  SECTION("expected edge count is k*d") {
    const int seeds = 1000;
    const double expected = 2.0 * 10;
    double total = 0.0;
    double total_sq = 0.0;
    for (int s = 0; s < seeds; ++s) {
      BinaryDag dag = gen_er_dag(
          {.d = 10, .model = GraphModel::ER, .k = 2, .seed = static_cast<std::uint64_t>(s)});
      const double e = static_cast<double>(edge_count(dag.adjacency));
      total += e;
      total_sq += e * e;
    }
    const double mean = total / seeds;
    const double var = total_sq / seeds - mean * mean;
    const double se = std::sqrt(var / seeds);
    CHECK(std::abs(mean - expected) <= 1.0);
    CHECK(std::abs(mean - expected) <= 3.0 * se);
  }
}

TEST_CASE("SF generation", "[graphgen]") {
  SECTION("d <= k is rejected") {
    CHECK_THROWS_AS(gen_sf_dag({.d = 2, .model = GraphModel::SF, .k = 2, .seed = 0}),
                    std::invalid_argument);
  }

  SECTION("d=3 k=2 attaches the first arrival to both seed vertices") {
    BinaryDag dag = gen_sf_dag({.d = 3, .model = GraphModel::SF, .k = 2, .seed = 7});
    CHECK(edge_count(dag.adjacency) == 2);  // k*(d-k)
    CHECK(dag.adjacency(0, 2));
    CHECK(dag.adjacency(1, 2));
  }

  SECTION("certificate validates for d=50 k=2") {
    BinaryDag dag = gen_sf_dag({.d = 50, .model = GraphModel::SF, .k = 2, .seed = 3});
    CHECK(edge_count(dag.adjacency) == 2 * (50 - 2));
    CHECK(certificate_consistent(dag));
    CHECK(is_dag(dag.adjacency).has_value());
  }
}

TEST_CASE("generated DAGs are acyclic with consistent certificates", "[graphgen]") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    BinaryDag er = gen_er_dag({.d = 20, .model = GraphModel::ER, .k = 3, .seed = seed});
    CHECK(certificate_consistent(er));
    CHECK(is_dag(er.adjacency).has_value());

    BinaryDag sf = gen_sf_dag({.d = 20, .model = GraphModel::SF, .k = 3, .seed = seed});
    CHECK(certificate_consistent(sf));
    CHECK(is_dag(sf.adjacency).has_value());
  }
}

TEST_CASE("assign_weights respects the support and interval", "[graphgen]") {
  SECTION("empty graph gives the zero matrix") {
    BinaryDag empty{BoolMatrix::Constant(4, 4, false), Ordering::identity(4)};
    CHECK(assign_weights(empty, 11).isZero(0.0));
  }

  SECTION("weights land in [-1,-0.05] u [0.05,1], zeros off support") {
    BinaryDag dag = gen_er_dag({.d = 30, .model = GraphModel::ER, .k = 4, .seed = 5});
    Matrix W = assign_weights(dag, 6);
    for (int i = 0; i < 30; ++i) {
      for (int j = 0; j < 30; ++j) {
        if (dag.adjacency(i, j)) {
          CHECK(std::abs(W(i, j)) >= 0.05);
          CHECK(std::abs(W(i, j)) <= 1.0);
        } else {
          CHECK(W(i, j) == 0.0);
        }
      }
    }
  }

  SECTION("mean magnitude matches the two-interval uniform") {
    // |w| ~ Unif[0.05, 1], so E|w| = 0.525.
    BoolMatrix full = BoolMatrix::Constant(100, 100, true);
    for (int i = 0; i < 100; ++i) full(i, i) = false;
    BinaryDag dag{full, Ordering::identity(100)};  // certificate unused here
    Matrix W = assign_weights(dag, 99);
    const double mean_abs = W.cwiseAbs().sum() / (100.0 * 99.0);
    CHECK(std::abs(mean_abs - 0.525) <= 0.02);
  }
}

TEST_CASE("generation is deterministic in the seed", "[graphgen]") {
  GraphSpec spec{.d = 15, .model = GraphModel::ER, .k = 2, .seed = 42};
  BinaryDag a = gen_er_dag(spec);
  BinaryDag b = gen_er_dag(spec);
  CHECK((a.adjacency == b.adjacency).all());
  CHECK(a.order.perm == b.order.perm);
  Matrix wa = assign_weights(a, 17);
  Matrix wb = assign_weights(b, 17);
  CHECK(wa == wb);

  GraphSpec sf{.d = 15, .model = GraphModel::SF, .k = 2, .seed = 42};
  CHECK((gen_sf_dag(sf).adjacency == gen_sf_dag(sf).adjacency).all());
}
