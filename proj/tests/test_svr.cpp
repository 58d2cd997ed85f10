#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ksf/rng.hpp"
#include "ksf/svr.hpp"

using namespace ksf;

namespace {

// Generic box-and-hyperplane QP reference: minimize 1/2 a'Qa + p'a over
// 0 <= a <= C, z'a = 0, by projected gradient. The projection onto the
// box-hyperplane intersection shifts by t*z with t found by bisection.
Eigen::VectorXd projected_gradient_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& z, double C, int iters) {
  const Eigen::Index n = p.size();
  const auto project = [&](const Eigen::VectorXd& v) {
    double lo = -1e6, hi = 1e6;
    for (int k = 0; k < 200; ++k) {
      const double t = 0.5 * (lo + hi);
      const double g = z.dot((v + t * z).cwiseMax(0.0).cwiseMin(C));
      if (g > 0.0)
        hi = t;
      else
        lo = t;
    }
    return (v + 0.5 * (lo + hi) * z).cwiseMax(0.0).cwiseMin(C).eval();
  };

  // step size from the spectral norm bound
  const double lip = Q.operatorNorm() + 1e-12;
  const double step = 1.0 / lip;
  Eigen::VectorXd a = project(Eigen::VectorXd::Zero(n));
  for (int it = 0; it < iters; ++it) a = project(a - step * (Q * a + p));
  return a;
}

double dual_objective_signed(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double eps,
                             const Eigen::VectorXd& beta) {
  return -0.5 * beta.dot(K * beta) - eps * beta.lpNorm<1>() + y.dot(beta);
}

LagMatrix toy_problem(int n, Rng& rng, double slope = 0.5, double intercept = 0.1,
                      double noise = 0.0) {
  std::vector<double> series;
  double x = 1.0;
  for (int i = 0; i < n + 1; ++i) {
    series.push_back(x);
    x = slope * x + intercept + (noise > 0.0 ? rng.gaussian(0.0, noise) : 0.0);
    x = std::max(0.0, x);
  }
  return build_lag_matrix(series, 1);
}

}  // namespace

TEST_SUITE("svr") {

TEST_CASE("lag matrix construction") {
  const LagMatrix lm = build_lag_matrix({1.0, 2.0, 3.0, 4.0}, 2);
  REQUIRE(lm.rows() == 2);
  CHECK(lm.inputs(0, 0) == 1.0);
  CHECK(lm.inputs(0, 1) == 2.0);
  CHECK(lm.targets(0) == 3.0);
  CHECK(lm.inputs(1, 0) == 2.0);
  CHECK(lm.inputs(1, 1) == 3.0);
  CHECK(lm.targets(1) == 4.0);

  SUBCASE("row count is n - p_max") {
    std::vector<double> series(40, 0.0);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = static_cast<double>(i % 7);
    CHECK(build_lag_matrix(series, 5).rows() == 35);
  }

  SUBCASE("targets reconstruct the series tail") {
    const std::vector<double> series = {3.0, 1.0, 4.0, 1.0, 5.0, 9.0};
    const LagMatrix lm2 = build_lag_matrix(series, 2);
    for (Eigen::Index r = 0; r < lm2.rows(); ++r)
      CHECK(lm2.targets(r) == series[static_cast<std::size_t>(r) + 2]);
  }

  SUBCASE("p_max >= length is rejected") {
    CHECK_THROWS_AS(build_lag_matrix({1.0, 2.0}, 2), Error);
    CHECK_THROWS_AS(build_lag_matrix({1.0, 2.0}, 0), Error);
  }
}

TEST_CASE("single training row is fit exactly by the bias") {
  LagMatrix lm;
  lm.inputs.resize(1, 1);
  lm.inputs << 2.0;
  lm.targets.resize(1);
  lm.targets << 7.5;
  KernelConfig cfg;
  cfg.bandwidth = 1.0;
  const SvrModel m = svr_train(lm, cfg, 10.0, 0.01);
  CHECK(m.coeffs(0) == 0.0);
  CHECK(svr_predict(m, Eigen::VectorXd::Constant(1, 2.0)) == doctest::Approx(7.5).epsilon(1e-12));
}

TEST_CASE("zero duals predict the bias everywhere") {
  SvrModel m;
  m.kernel.bandwidth = 1.0;
  m.bias = 1.25;
  m.coeffs = Eigen::VectorXd::Zero(3);
  m.support_inputs = Eigen::MatrixXd::Random(3, 2);
  CHECK(svr_predict(m, Eigen::Vector2d(0.3, 0.4)) == 1.25);
  CHECK(svr_predict(m, Eigen::Vector2d(5.0, -2.0)) == 1.25);
}

TEST_CASE("separable fixture is fit within the tube") {
  Rng rng(21);
  const LagMatrix lm = toy_problem(60, rng);
  KernelConfig cfg;
  cfg.bandwidth = 5.0;
  const SvrModel m = svr_train(lm, cfg, 10.0, 0.01);

  CHECK(m.coeffs.cwiseAbs().maxCoeff() <= 10.0 + 1e-9);
  for (Eigen::Index r = 0; r < lm.rows(); ++r) {
    const double pred = svr_predict(m, lm.inputs.row(r).transpose());
    CHECK(std::abs(pred - lm.targets(r)) < 0.01 + 0.05);
  }
}

TEST_CASE("dual solution matches a projected-gradient QP reference") {
  Rng rng(22);
  const int n = 20;
  const LagMatrix lm = toy_problem(n, rng, 0.6, 0.5, 0.3);
  KernelConfig cfg;
  cfg.bandwidth = 1.5;
  const double C = 2.0, eps = 0.1;
  const SvrModel m = svr_train(lm, cfg, C, eps);

  // assemble the 2n-variable QP exactly as the dual defines it
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K(i, j) = kernel_evaluate(cfg, lm.inputs.row(i).transpose().eval(),
                                lm.inputs.row(j).transpose().eval());
  Eigen::MatrixXd Q(2 * n, 2 * n);
  Q << K, -K, -K, K;
  Eigen::VectorXd p(2 * n), z(2 * n);
  for (int i = 0; i < n; ++i) {
    p(i) = eps - lm.targets(i);
    p(n + i) = eps + lm.targets(i);
    z(i) = 1.0;
    z(n + i) = -1.0;
  }
  const Eigen::VectorXd a = projected_gradient_qp(Q, p, z, C, 200000);
  const Eigen::VectorXd beta_ref = a.head(n) - a.tail(n);

  const double obj_ref = dual_objective_signed(K, lm.targets, eps, beta_ref);
  const double obj_smo = dual_objective_signed(K, lm.targets, eps, m.coeffs);
  CHECK(std::abs(obj_smo - obj_ref) < 1e-4 * std::max(1.0, std::abs(obj_ref)));
  CHECK(obj_smo >= obj_ref - 1e-4);  // SMO must not be worse than the reference

  SUBCASE("box constraints and equality constraint hold") {
    CHECK(m.coeffs.cwiseAbs().maxCoeff() <= C + 1e-9);
    CHECK(std::abs(m.coeffs.sum()) < 1e-9);
  }
}

TEST_CASE("invalid hyperparameters are rejected") {
  Rng rng(23);
  const LagMatrix lm = toy_problem(10, rng);
  KernelConfig cfg;
  cfg.bandwidth = 1.0;
  CHECK_THROWS_AS(svr_train(lm, cfg, 0.0, 0.1), Error);
  CHECK_THROWS_AS(svr_train(lm, cfg, -1.0, 0.1), Error);
  CHECK_THROWS_AS(svr_train(lm, cfg, 1.0, -0.1), Error);
}

TEST_CASE("grid selection enumerates all 48 combinations in order") {
  int calls = 0;
  const SvrGridResult res = svr_grid_select([&](double sigma, double C) {
    ++calls;
    // strict minimum at (0.1, 1)
    return (sigma == 0.1 && C == 1.0) ? 0.5 : 1.0 + sigma + C * 1e-3;
  });
  CHECK(calls == 48);
  CHECK(res.table.size() == 48);
  CHECK(res.sigma == 0.1);
  CHECK(res.C == 1.0);
  CHECK(res.cv_rmse == 0.5);

  SUBCASE("grid values are exactly the configured sets in row-major order") {
    std::size_t idx = 0;
    for (int si = 0; si <= 7; ++si)
      for (int ci = -1; ci <= 4; ++ci) {
        CHECK(res.table[idx].sigma == doctest::Approx(std::pow(10.0, -si)).epsilon(1e-15));
        CHECK(res.table[idx].C == doctest::Approx(std::pow(10.0, -ci)).epsilon(1e-15));
        ++idx;
      }
  }

  SUBCASE("ties keep the first combination in grid order") {
    const SvrGridResult tied = svr_grid_select([](double, double) { return 1.0; });
    CHECK(tied.sigma == 1.0);   // 10^0 is first
    CHECK(tied.C == 10.0);      // 10^1 is first
  }

  SUBCASE("all-infinite scores raise a search error") {
    CHECK_THROWS_AS(
        svr_grid_select([](double, double) { return std::numeric_limits<double>::infinity(); }),
        Error);
  }
}

TEST_CASE("grid search returns the cv argmin, verified by re-scoring") {
  Rng rng(24);
  const std::vector<double> series = [&] {
    std::vector<double> s;
    double x = 2.0;
    for (int i = 0; i < 80; ++i) {
      s.push_back(x);
      x = std::max(0.0, 0.7 * x + 0.6 + rng.gaussian(0.0, 0.2));
    }
    return s;
  }();

  const SvrGridResult res = svr_grid_search(series, 2, 0.1);
  REQUIRE(res.table.size() == 48);
  for (const SvrGridPoint& pt : res.table)
    if (std::isfinite(pt.cv_rmse)) CHECK(res.cv_rmse <= pt.cv_rmse);

  // the final model is refit on all rows with the winning combination
  CHECK(res.model.kernel.bandwidth == res.sigma);
  CHECK(res.model.C == res.C);
  CHECK(res.model.support_inputs.rows() == 78);
}

TEST_CASE("prediction is deterministic") {
  Rng rng(25);
  const LagMatrix lm = toy_problem(30, rng, 0.5, 0.4, 0.1);
  KernelConfig cfg;
  cfg.bandwidth = 2.0;
  const SvrModel m = svr_train(lm, cfg, 1.0, 0.1);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, 1.7);
  const double a = svr_predict(m, q);
  const double b = svr_predict(m, q);
  CHECK(a == b);
}

}  // TEST_SUITE
