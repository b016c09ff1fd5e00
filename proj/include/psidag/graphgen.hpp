// Ground-truth random DAGs (Erdos-Renyi, scale-free) and seeded edge weights.
#pragma once

#include "psidag/rng.hpp"
#include "psidag/types.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

namespace psidag {

enum class GraphModel { ER, SF };

struct GraphSpec {
  int d = 0;
  GraphModel model = GraphModel::ER;
  int k = 1;
  std::uint64_t seed = 0;
};

// Binary DAG plus a topological certificate witnessing acyclicity.
struct BinaryDag {
  BoolMatrix adjacency;  // adjacency(i, j): edge i -> j
  Ordering order;
};

// Kahn's algorithm. Returns a topological ordering when the graph is
// acyclic, nothing otherwise. Vertices become eligible in index order, so
// the result is deterministic.
inline std::optional<Ordering> is_dag(const BoolMatrix& adjacency) {
  const int d = static_cast<int>(adjacency.rows());
  if (adjacency.cols() != d) {
    throw std::invalid_argument("is_dag: adjacency must be square");
  }
  std::vector<int> indeg(d, 0);
  for (int j = 0; j < d; ++j) {
    if (d > 0 && adjacency(j, j)) {
      throw std::invalid_argument("is_dag: diagonal must be false");
    }
    for (int i = 0; i < d; ++i) {
      if (adjacency(i, j)) ++indeg[j];
    }
  }
  std::vector<int> queue;
  queue.reserve(d);
  for (int v = 0; v < d; ++v) {
    if (indeg[v] == 0) queue.push_back(v);
  }
  std::vector<int> order;
  order.reserve(d);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    order.push_back(u);
    for (int v = 0; v < d; ++v) {
      if (adjacency(u, v) && --indeg[v] == 0) queue.push_back(v);
    }
  }
  if (static_cast<int>(order.size()) != d) return std::nullopt;
  return Ordering(std::move(order));
}

// G(n, p) with p = kd / C(d, 2); edges oriented along a uniformly random
// vertex permutation, which doubles as the certificate.
inline BinaryDag gen_er_dag(const GraphSpec& spec) {
  if (spec.model != GraphModel::ER) {
    throw std::invalid_argument("gen_er_dag: spec.model must be ER");
  }
  if (spec.d < 1 || spec.k < 1) {
    throw std::invalid_argument("gen_er_dag: d and k must be positive");
  }
  const double max_edges = 0.5 * spec.d * (spec.d - 1);
  const double want = static_cast<double>(spec.k) * spec.d;
  if (want > max_edges) {
    throw std::invalid_argument(
        "gen_er_dag: expected edge count k*d exceeds d(d-1)/2");
  }
  const double p = want / max_edges;

  Rng rng(spec.seed);
  std::vector<int> perm(spec.d);
  for (int i = 0; i < spec.d; ++i) perm[i] = i;
  rng.shuffle(perm);
  Ordering order(std::move(perm));

  BoolMatrix adj = BoolMatrix::Constant(spec.d, spec.d, false);
  for (int i = 0; i < spec.d; ++i) {
    for (int j = i + 1; j < spec.d; ++j) {
      if (!rng.bernoulli(p)) continue;
      if (order.position[i] < order.position[j]) {
        adj(i, j) = true;
      } else {
        adj(j, i) = true;
      }
    }
  }
  return BinaryDag{std::move(adj), std::move(order)};
}

// Preferential attachment (Price's model): k initial isolated vertices, then
// every arriving vertex receives k edges from distinct existing vertices,
// sampled proportionally to degree. Edges run earlier -> new, so arrival
// order certifies acyclicity.
inline BinaryDag gen_sf_dag(const GraphSpec& spec) {
  if (spec.model != GraphModel::SF) {
    throw std::invalid_argument("gen_sf_dag: spec.model must be SF");
  }
  if (spec.k < 1) {
    throw std::invalid_argument("gen_sf_dag: k must be positive");
  }
  if (spec.d <= spec.k) {
    throw std::invalid_argument("gen_sf_dag: requires d > k");
  }

  Rng rng(spec.seed);
  BoolMatrix adj = BoolMatrix::Constant(spec.d, spec.d, false);
  // Degree-weighted endpoint pool; the first arrival attaches to all k
  // seed vertices since none has degree yet.
  std::vector<int> pool;
  std::vector<int> targets(spec.k);
  for (int t = 0; t < spec.k; ++t) targets[t] = t;
  for (int v = spec.k; v < spec.d; ++v) {
    for (int t : targets) {
      adj(t, v) = true;
      pool.push_back(t);
    }
    pool.insert(pool.end(), spec.k, v);
    if (v + 1 >= spec.d) break;
    std::set<int> picked;
    while (static_cast<int>(picked.size()) < spec.k) {
      picked.insert(pool[rng.uniform_int(static_cast<std::int64_t>(pool.size()))]);
    }
    targets.assign(picked.begin(), picked.end());
  }
  return BinaryDag{std::move(adj), Ordering::identity(spec.d)};
}

inline BinaryDag gen_dag(const GraphSpec& spec) {
  return spec.model == GraphModel::ER ? gen_er_dag(spec) : gen_sf_dag(spec);
}

// Independent Unif[-1,-0.05] u [0.05,1] weight per edge, zero elsewhere.
// Draws scan the adjacency row-major so a seed pins the full matrix.
inline Matrix assign_weights(const BinaryDag& dag, std::uint64_t seed) {
  const int d = static_cast<int>(dag.adjacency.rows());
  Rng rng(seed);
  Matrix W = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (!dag.adjacency(i, j)) continue;
      const double mag = rng.uniform(0.05, 1.0);
      W(i, j) = rng.bernoulli(0.5) ? mag : -mag;
    }
  }
  return W;
}

}  // namespace psidag
