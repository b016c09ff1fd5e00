#include "psidag/optimizer.hpp"

#include "psidag/graphgen.hpp"
#include "psidag/projection.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace psidag;

namespace {

// Exact population loss F(W) = 1/2 tr((I - W)(I - W^T) Sigma) for data from
// an acyclic truth with unit-variance noise; the optimization-free oracle.
double population_loss(const Matrix& W, const Matrix& W_star) {
  const Eigen::Index d = W.rows();
  Matrix IminusWstarT = Matrix::Identity(d, d) - W_star.transpose();
  Matrix inv = IminusWstarT.inverse();
  Matrix sigma = inv * inv.transpose();
  Matrix A = Matrix::Identity(d, d) - W;
  return 0.5 * (A * A.transpose() * sigma).trace();
}

Trace flat_trace(double loss_value, int n, double grad_norm = 1.0) {
  Trace t;
  for (int i = 0; i < n; ++i) {
    t.push_back({i + 1, loss_value, (i + 1) * 64, 0.0, grad_norm});
  }
  return t;
}

}  // namespace

TEST_CASE("check_stop rules", "[optimizer]") {
  StopRule rel = StopRule::relative(10.0);
  CHECK(check_stop(flat_trace(10.9, 60), rel));
  CHECK_FALSE(check_stop(flat_trace(11.1, 60), rel));

  CHECK(check_stop(flat_trace(5.0, 3, 1e-7), StopRule::grad_norm(1e-6)));
  CHECK_FALSE(check_stop(flat_trace(5.0, 3, 1e-3), StopRule::grad_norm(1e-6)));

  CHECK(check_stop(flat_trace(1.0, 10), StopRule::max_of(10)));
  CHECK_FALSE(check_stop(flat_trace(1.0, 9), StopRule::max_of(10)));

  CHECK_THROWS_AS(check_stop(Trace{}, rel), std::invalid_argument);
}

TEST_CASE("auto_step_size closed forms", "[optimizer]") {
  SECTION("rank-one data on a basis vector") {
    Matrix data = Matrix::Zero(32, 3);
    data.col(0).setOnes();  // every row is e_1
    auto src = SampleSource::fixed(data, 0);
    CHECK(auto_step_size(src, 8, 4) == Catch::Approx(1.0));
  }

  SECTION("scaling data by 10 scales the step by 1/100") {
    Matrix data(64, 4);
    Rng rng(5);
    for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = rng.normal();
    auto a = SampleSource::fixed(data, 0);
    auto b = SampleSource::fixed(Matrix(10.0 * data), 0);
    const double ha = auto_step_size(a, 64, 6);
    const double hb = auto_step_size(b, 64, 6);
    CHECK(hb == Catch::Approx(ha / 100.0));
  }

  SECTION("matches a dense eigensolver within 10%") {
    const int d = 50;
    BinaryDag dag = gen_er_dag({.d = d, .model = GraphModel::ER, .k = 2, .seed = 8});
    Matrix W = assign_weights(dag, 9);
    const Eigen::Index b = 64;
    const int trials = 30;

    auto src = SampleSource::streaming(W, {NoiseKind::Gaussian, 1.0}, 10);
    const double h = auto_step_size(src, b, trials);

    auto replay = SampleSource::streaming(W, {NoiseKind::Gaussian, 1.0}, 10);
    SampleBatch X(b * trials, d);
    for (int t = 0; t < trials; ++t) X.middleRows(b * t, b) = replay.next_batch(b);
    Matrix M = X.transpose() * X / static_cast<double>(X.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    const double lmax = es.eigenvalues().maxCoeff();
    CHECK(std::abs(1.0 / h - lmax) <= 0.1 * lmax);
  }

  SECTION("all-zero data is rejected") {
    auto src = SampleSource::fixed(Matrix::Zero(8, 3), 0);
    CHECK_THROWS_AS(auto_step_size(src, 4, 2), std::invalid_argument);
  }
}

TEST_CASE("zero-gradient stream is a fixed point", "[optimizer]") {
  BinaryDag dag = gen_er_dag({.d = 5, .model = GraphModel::ER, .k = 2, .seed = 2});
  Matrix W_star = assign_weights(dag, 3);
  // Noise-free dataset: every row satisfies the SEM exactly, so the gradient
  // at W_star vanishes identically.
  SampleBatch X = sem_transform(W_star, dag.order, SampleBatch::Zero(16, 5));
  auto src = SampleSource::fixed(X, 1);

  SgdConfig cfg;
  cfg.batch_size = 8;
  cfg.schedule = StepSchedule::Constant;
  cfg.h0 = 0.1;
  cfg.averaging = false;
  cfg.max_steps = 25;
  SgdResult res = sgd_run(W_star, src, cfg, StopRule::never());
  CHECK(res.W == W_star);
}

TEST_CASE("full-batch descent reaches the closed-form OLS coefficient",
          "[optimizer]") {
  const Eigen::Index n = 200;
  Rng rng(11);
  Matrix data(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = rng.normal();
    data(i, 0) = x;
    data(i, 1) = 0.8 * x + 0.5 * rng.normal();
  }
  const double ols = (data.col(0).dot(data.col(1))) / data.col(0).squaredNorm();

  auto src = SampleSource::fixed(data, 2);
  OrderMask mask = ordering_to_mask(Ordering::identity(2));
  SgdConfig cfg;
  cfg.batch_size = n;  // deterministic full-batch steps
  cfg.schedule = StepSchedule::Constant;
  cfg.averaging = false;
  cfg.max_steps = 500;
  SgdResult res = sgd_run(Matrix::Zero(2, 2), src, cfg, StopRule::never(), &mask);

  CHECK(std::abs(res.W(0, 1) - ols) < 1e-8);
  CHECK(res.W(1, 0) == 0.0);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].loss <= res.trace[i - 1].loss + 1e-12);
  }
}

TEST_CASE("masked run under the true ordering approaches the truth",
          "[optimizer]") {
  const int d = 10;
  BinaryDag dag = gen_er_dag({.d = d, .model = GraphModel::ER, .k = 2, .seed = 21});
  Matrix W_star = assign_weights(dag, 22);
  auto src = SampleSource::streaming(W_star, {NoiseKind::Gaussian, 1.0}, 23);

  OrderMask mask = ordering_to_mask(dag.order);
  SgdConfig cfg;
  cfg.batch_size = 64;
  cfg.schedule = StepSchedule::Constant;
  cfg.averaging = true;
  cfg.max_steps = 1000;
  SgdResult res = sgd_run(Matrix::Zero(d, d), src, cfg, StopRule::never(), &mask);

  const double f_star = population_loss(W_star, W_star);  // = d/2
  CHECK(population_loss(res.W, W_star) <= 1.1 * f_star);
}

TEST_CASE("masked iterates never leave the mask", "[optimizer]") {
  const int d = 8;
  BinaryDag dag = gen_er_dag({.d = d, .model = GraphModel::ER, .k = 2, .seed = 31});
  Matrix W_star = assign_weights(dag, 32);
  auto src = SampleSource::streaming(W_star, {NoiseKind::Exponential, 1.0}, 33);

  Rng rng(34);
  std::vector<int> p(d);
  for (int i = 0; i < d; ++i) p[i] = i;
  rng.shuffle(p);
  OrderMask mask = ordering_to_mask(Ordering(p));

  SgdConfig cfg;
  cfg.batch_size = 16;
  cfg.max_steps = 300;
  SgdResult res = sgd_run(Matrix::Zero(d, d), src, cfg, StopRule::never(), &mask);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (!mask.allowed(i, j)) CHECK(res.W(i, j) == 0.0);
    }
  }
}

TEST_CASE("runs are bitwise deterministic", "[optimizer]") {
  const int d = 6;
  BinaryDag dag = gen_er_dag({.d = d, .model = GraphModel::ER, .k = 2, .seed = 41});
  Matrix W_star = assign_weights(dag, 42);

  SgdConfig cfg;
  cfg.batch_size = 32;
  cfg.max_steps = 200;
  auto run = [&] {
    auto src = SampleSource::streaming(W_star, {NoiseKind::Gumbel, 1.0}, 43);
    return sgd_run(Matrix::Zero(d, d), src, cfg, StopRule::never()).W;
  };
  CHECK(run() == run());
}

TEST_CASE("divergence guard aborts runaway runs", "[optimizer]") {
  Matrix data(8, 2);
  Rng rng(51);
  for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = rng.normal();
  auto src = SampleSource::fixed(data, 5);

  SgdConfig cfg;
  cfg.batch_size = 8;
  cfg.schedule = StepSchedule::Constant;
  cfg.h0 = 50.0;  // far beyond 2/L
  cfg.max_steps = 5000;
  CHECK_THROWS_AS(sgd_run(Matrix::Zero(2, 2), src, cfg, StopRule::never()),
                  DivergenceError);
}

TEST_CASE("l1 shrinkage drives pure-noise coefficients to zero", "[optimizer]") {
  const int d = 4;
  auto src = SampleSource::streaming(Matrix::Zero(d, d),
                                     {NoiseKind::Gaussian, 1.0}, 61);
  SgdConfig cfg;
  cfg.batch_size = 32;
  cfg.max_steps = 400;
  cfg.l1 = 5.0;
  cfg.averaging = false;
  SgdResult res = sgd_run(Matrix::Zero(d, d), src, cfg, StopRule::never());
  CHECK(res.W.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("quadrupling the budget shrinks the optimality gap", "[optimizer]") {
  const int d = 6;
  BinaryDag dag = gen_er_dag({.d = d, .model = GraphModel::ER, .k = 2, .seed = 71});
  Matrix W_star = assign_weights(dag, 72);
  OrderMask mask = ordering_to_mask(dag.order);
  const double f_star = population_loss(W_star, W_star);

  auto mean_gap = [&](std::int64_t steps) {
    double total = 0.0;
    const int seeds = 6;
    for (int s = 0; s < seeds; ++s) {
      auto src = SampleSource::streaming(W_star, {NoiseKind::Gaussian, 1.0},
                                         1000 + static_cast<std::uint64_t>(s));
      SgdConfig cfg;
      cfg.batch_size = 8;
      cfg.schedule = StepSchedule::InvSqrt;
      cfg.averaging = true;
      cfg.max_steps = steps;
      SgdResult res =
          sgd_run(Matrix::Zero(d, d), src, cfg, StopRule::never(), &mask);
      total += population_loss(res.W, W_star) - f_star;
    }
    return total / seeds;
  };

  const double g1 = mean_gap(1500);
  const double g4 = mean_gap(6000);
  CHECK(g4 > 0.0);
  CHECK(g4 <= 0.9 * g1);
}
