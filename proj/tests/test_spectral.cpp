#include <Eigen/Dense>
#include <vector>

#include "doctest.h"
#include "ksf/rng.hpp"
#include "ksf/spectral_discrete.hpp"
#include "test_helpers.hpp"

using namespace ksf;
using namespace ksf_test;

namespace {

DiscreteHmm two_state_hmm() {
  DiscreteHmm hmm;
  hmm.T.resize(2, 2);
  hmm.T << 0.9, 0.2, 0.1, 0.8;
  hmm.O = Eigen::MatrixXd::Identity(2, 2);
  hmm.pi.resize(2);
  hmm.pi << 0.5, 0.5;
  return hmm;
}

double linf(const Eigen::VectorXd& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a(i) - b[static_cast<std::size_t>(i)]));
  return worst;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("observation operator hand case") {
  const DiscreteHmm hmm = two_state_hmm();
  const Eigen::MatrixXd A1 = observation_operator(hmm, 1);
  CHECK(A1(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(A1(1, 0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(A1(0, 1) == 0.0);
  CHECK(A1(1, 1) == 0.0);
  CHECK_THROWS_AS(observation_operator(hmm, 3), Error);
  CHECK_THROWS_AS(observation_operator(hmm, 0), Error);
}

TEST_CASE("operators sum to T and match the elementwise definition") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const DiscreteHmm hmm = random_ergodic_hmm(rng, 3, 4);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
    for (int x = 1; x <= 4; ++x) {
      const Eigen::MatrixXd Ax = observation_operator(hmm, x);
      sum += Ax;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          CHECK(Ax(i, j) == doctest::Approx(hmm.T(i, j) * hmm.O(x - 1, j)).epsilon(1e-14));
    }
    CHECK((sum - hmm.T).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward_predict basics") {
  SUBCASE("deterministic chain stays put") {
    DiscreteHmm hmm;
    hmm.T = Eigen::MatrixXd::Identity(2, 2);
    hmm.O = Eigen::MatrixXd::Identity(2, 2);
    hmm.pi.resize(2);
    hmm.pi << 1.0, 0.0;
    const Eigen::VectorXd p = forward_predict(hmm, {1});
    CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p(1) == 0.0);
  }

  SUBCASE("empty observation sequence, uniform start") {
    DiscreteHmm hmm;
    hmm.T = Eigen::MatrixXd::Identity(3, 3);
    hmm.O = Eigen::MatrixXd::Identity(3, 3);
    hmm.pi = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    const Eigen::VectorXd p = forward_predict(hmm, {});
    for (int i = 0; i < 3; ++i) CHECK(p(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  SUBCASE("impossible evidence raises") {
    DiscreteHmm hmm;
    hmm.T = Eigen::MatrixXd::Identity(2, 2);
    hmm.O = Eigen::MatrixXd::Identity(2, 2);
    hmm.pi.resize(2);
    hmm.pi << 1.0, 0.0;
    CHECK_THROWS_AS(forward_predict(hmm, {2}), Error);  // symbol 2 unreachable
  }
}

TEST_CASE("forward_predict equals the alpha-recursion oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const DiscreteHmm hmm = random_ergodic_hmm(rng, 3, 4);
    std::vector<int> obs;
    for (int t = 0; t < 5; ++t) {
      obs.push_back(static_cast<int>(rng.index(4)) + 1);
      const Eigen::VectorXd p = forward_predict(hmm, obs);
      CHECK(std::abs(p.sum() - 1.0) < 1e-12);
      CHECK(linf(p, forward_algorithm_oracle(hmm, obs)) < 1e-12);
    }
  }
}

TEST_CASE("population moments") {
  SUBCASE("identity transition is rejected") {
    DiscreteHmm hmm;
    hmm.T = Eigen::MatrixXd::Identity(2, 2);
    hmm.O = Eigen::MatrixXd::Identity(2, 2);
    hmm.pi = Eigen::VectorXd::Constant(2, 0.5);
    CHECK_THROWS_AS(population_moments(hmm), Error);
  }

  SUBCASE("totals are 1 for an ergodic chain") {
    const ObservableMoments mom = population_moments(two_state_hmm());
    CHECK(mom.u.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mom.C21.sum() == doctest::Approx(1.0).epsilon(1e-12));
    double total = 0.0;
    for (const auto& C : mom.C3x1) total += C.sum();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("matches Monte-Carlo frequencies within 3 standard errors") {
    Rng rng(5);
    const DiscreteHmm hmm = random_ergodic_hmm(rng, 3, 4);
    const ObservableMoments pop = population_moments(hmm);
    const std::size_t steps = 1000000;
    const std::vector<int> obs = simulate_hmm(hmm, steps, rng);
    const ObservableMoments emp = empirical_moments(obs, 4);

    const auto se = [&](double p, double n) {
      return std::sqrt(std::max(p * (1.0 - p), 1e-8) / n);
    };
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(emp.u(i) - pop.u(i)) < 3.0 * se(pop.u(i), static_cast<double>(steps)));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(std::abs(emp.C21(i, j) - pop.C21(i, j)) <
              3.0 * se(pop.C21(i, j), static_cast<double>(steps - 1)));
    for (int x = 0; x < 4; ++x)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          CHECK(std::abs(emp.C3x1[static_cast<std::size_t>(x)](i, j) - pop.C3x1[static_cast<std::size_t>(x)](i, j)) <
                3.0 * se(pop.C3x1[static_cast<std::size_t>(x)](i, j), static_cast<double>(steps - 2)));
  }
}

TEST_CASE("empirical moments hand cases") {
  SUBCASE("constant sequence") {
    const ObservableMoments mom = empirical_moments({1, 1, 1, 1}, 2);
    CHECK(mom.u(0) == 1.0);
    CHECK(mom.u(1) == 0.0);
    CHECK(mom.C21(0, 0) == 1.0);
    CHECK(mom.C21.sum() == 1.0);
  }

  SUBCASE("alternating sequence concentrates off-diagonal") {
    std::vector<int> obs;
    for (int t = 0; t < 100; ++t) obs.push_back(t % 2 == 0 ? 1 : 2);
    const ObservableMoments mom = empirical_moments(obs, 2);
    CHECK(mom.C21(0, 0) == 0.0);
    CHECK(mom.C21(1, 1) == 0.0);
    CHECK(mom.C21(0, 1) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(mom.C21(1, 0) == doctest::Approx(0.5).epsilon(0.02));
  }

  SUBCASE("too short") { CHECK_THROWS_AS(empirical_moments({1, 2}, 2), Error); }

  SUBCASE("converges toward population moments as the sample grows") {
    Rng rng(17);
    const DiscreteHmm hmm = random_ergodic_hmm(rng, 3, 4);
    const ObservableMoments pop = population_moments(hmm);
    const ObservableMoments emp_short = empirical_moments(simulate_hmm(hmm, 1000, rng), 4);
    const ObservableMoments emp_long = empirical_moments(simulate_hmm(hmm, 100000, rng), 4);
    const double err_short = (emp_short.C21 - pop.C21).cwiseAbs().maxCoeff();
    const double err_long = (emp_long.C21 - pop.C21).cwiseAbs().maxCoeff();
    CHECK(err_long < err_short);
    CHECK(err_long < 0.01);
  }
}

TEST_CASE("spectral_train basics") {
  SUBCASE("single-state single-symbol chain") {
    DiscreteHmm hmm;
    hmm.T = Eigen::MatrixXd::Constant(1, 1, 1.0);
    hmm.O = Eigen::MatrixXd::Constant(1, 1, 1.0);
    hmm.pi = Eigen::VectorXd::Constant(1, 1.0);
    const SpectralModel sm = spectral_train(population_moments(hmm, hmm.pi), 1);
    const Eigen::VectorXd p = spectral_predict(sm, {1, 1, 1});
    CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("U columns are orthonormal") {
    Rng rng(29);
    const DiscreteHmm hmm = random_ergodic_hmm(rng, 3, 4);
    const SpectralModel sm = spectral_train(population_moments(hmm), 3);
    const Eigen::MatrixXd UtU = sm.U.transpose() * sm.U;
    CHECK((UtU - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("rank above the numerical rank of C21 is rejected") {
    // identity-emission 2-state chain: C21 is 2x2 with rank 2, ask for 3
    const ObservableMoments mom = population_moments(two_state_hmm());
    CHECK_THROWS_AS(spectral_train(mom, 3), Error);
  }

  SUBCASE("empty sequence reproduces the stationary observable marginal") {
    const DiscreteHmm hmm = two_state_hmm();
    const SpectralModel sm = spectral_train(population_moments(hmm), 2);
    const Eigen::VectorXd p = spectral_predict(sm, {});
    // no operators applied: normalize(O pi_stationary)
    Eigen::VectorXd expect = hmm.O * stationary_distribution(hmm.T);
    expect /= expect.sum();
    CHECK((p - expect).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("nonpositive normalizer raises a collapse error") {
    SpectralModel broken;
    broken.b1 = Eigen::Vector2d(1.0, 1.0);
    broken.b_inf.resize(2, 2);
    broken.b_inf << 1.0, 0.0, -1.0, 0.0;  // readout sums to zero
    broken.Bx.assign(2, Eigen::MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(spectral_predict(broken, {1}), Error);
  }
}

TEST_CASE("spectral_predict equals forward_predict on population moments") {
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    const DiscreteHmm hmm = random_ergodic_hmm(rng, 3, 4);
    const SpectralModel sm = spectral_train(population_moments(hmm), 3);
    std::vector<int> obs;
    for (int t = 0; t < 10; ++t) {
      obs.push_back(static_cast<int>(rng.index(4)) + 1);
      const Eigen::VectorXd ps = spectral_predict(sm, obs);
      const Eigen::VectorXd pf = forward_predict(hmm, obs);
      CHECK((ps - pf).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("spectral_predict from a long empirical sample is close to exact") {
  // well-conditioned instance: sampling noise through the pseudoinverse
  // scales with cond(O)^2
  Rng rng(45);
  const DiscreteHmm hmm = random_ergodic_hmm(rng, 3, 4, 25.0);
  const ObservableMoments emp = empirical_moments(simulate_hmm(hmm, 100000, rng), 4);
  const SpectralModel sm = spectral_train(emp, 3);
  std::vector<int> obs;
  for (int t = 0; t < 8; ++t) {
    obs.push_back(static_cast<int>(rng.index(4)) + 1);
    const Eigen::VectorXd ps = spectral_predict(sm, obs);
    const Eigen::VectorXd pf = forward_predict(hmm, obs);
    CHECK((ps - pf).cwiseAbs().maxCoeff() < 0.05);
  }
}

TEST_CASE("predictions are invariant under rotation of the internal basis") {
  Rng rng(41);
  const DiscreteHmm hmm = random_ergodic_hmm(rng, 3, 4);
  const SpectralModel sm = spectral_train(population_moments(hmm), 3);

  // random orthogonal matrix from the QR of a Gaussian draw
  Eigen::MatrixXd Gm(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) Gm(i, j) = rng.gaussian();
  const Eigen::MatrixXd R = Eigen::HouseholderQR<Eigen::MatrixXd>(Gm).householderQ();

  SpectralModel rotated = sm;
  rotated.b1 = R * sm.b1;
  rotated.b_inf = sm.b_inf * R.transpose();
  for (std::size_t x = 0; x < sm.Bx.size(); ++x) rotated.Bx[x] = R * sm.Bx[x] * R.transpose();

  std::vector<int> obs;
  for (int t = 0; t < 10; ++t) {
    obs.push_back(static_cast<int>(rng.index(4)) + 1);
    const Eigen::VectorXd a = spectral_predict(sm, obs);
    const Eigen::VectorXd b = spectral_predict(rotated, obs);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
  }
}

}  // TEST_SUITE
