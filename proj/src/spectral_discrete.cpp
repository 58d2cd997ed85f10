#include "ksf/spectral_discrete.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

namespace ksf {

namespace {

constexpr double kStochasticTol = 1e-9;

void check_symbol(const DiscreteHmm& hmm, int symbol) {
  if (symbol < 1 || symbol > hmm.num_symbols())
    throw Error(errc::invalid_input, "observation symbol out of range");
}

// Deterministic SVD basis: flip each left singular vector so its
// largest-magnitude entry is positive (first occurrence on ties).
void fix_svd_signs(Eigen::MatrixXd& U) {
  for (Eigen::Index c = 0; c < U.cols(); ++c) {
    Eigen::Index imax = 0;
    U.col(c).cwiseAbs().maxCoeff(&imax);
    if (U(imax, c) < 0.0) U.col(c) = -U.col(c);
  }
}

}  // namespace

void DiscreteHmm::validate() const {
  const Eigen::Index N = T.rows();
  const Eigen::Index M = O.rows();
  if (T.cols() != N || O.cols() != N || pi.size() != N)
    throw Error(errc::invalid_input, "hmm: inconsistent dimensions");
  if (T.minCoeff() < 0.0 || O.minCoeff() < 0.0 || pi.minCoeff() < 0.0)
    throw Error(errc::invalid_input, "hmm: negative probability entry");
  for (Eigen::Index j = 0; j < N; ++j) {
    if (std::abs(T.col(j).sum() - 1.0) > kStochasticTol)
      throw Error(errc::invalid_input, "hmm: T column does not sum to 1");
    if (std::abs(O.col(j).sum() - 1.0) > kStochasticTol)
      throw Error(errc::invalid_input, "hmm: O column does not sum to 1");
  }
  if (std::abs(pi.sum() - 1.0) > kStochasticTol)
    throw Error(errc::invalid_input, "hmm: pi does not sum to 1");
}

Eigen::MatrixXd observation_operator(const DiscreteHmm& hmm, int symbol) {
  check_symbol(hmm, symbol);
  return hmm.T * hmm.O.row(symbol - 1).asDiagonal();
}

Eigen::VectorXd forward_predict(const DiscreteHmm& hmm, const std::vector<int>& obs) {
  Eigen::VectorXd state = hmm.pi;
  for (int x : obs) {
    check_symbol(hmm, x);
    state = (hmm.T * (hmm.O.row(x - 1).transpose().array() * state.array()).matrix()).eval();
  }
  Eigen::VectorXd pred = hmm.O * state;
  const double z = pred.sum();
  if (z <= 0.0)
    throw Error(errc::impossible_evidence, "forward_predict: evidence has zero probability");
  return pred / z;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& T) {
  const Eigen::Index N = T.rows();
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(N, N) - T;
  // Unique stationary distribution iff eigenvalue 1 has geometric
  // multiplicity 1, i.e. rank(I - T) = N - 1.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < N - 1)
    throw Error(errc::non_ergodic, "stationary distribution is not unique");

  Eigen::MatrixXd sys(N + 1, N);
  sys.topRows(N) = A;
  sys.row(N).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
  rhs(N) = 1.0;
  Eigen::VectorXd pi = sys.colPivHouseholderQr().solve(rhs);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

namespace {

ObservableMoments moments_from_marginal(const DiscreteHmm& hmm, const Eigen::VectorXd& marginal) {
  const Eigen::Index M = hmm.num_symbols();
  ObservableMoments mom;
  mom.u = hmm.O * marginal;
  const Eigen::MatrixXd TPO = hmm.T * marginal.asDiagonal() * hmm.O.transpose();  // N x M
  mom.C21 = hmm.O * TPO;
  mom.C3x1.reserve(static_cast<std::size_t>(M));
  for (int x = 1; x <= M; ++x)
    mom.C3x1.push_back(hmm.O * observation_operator(hmm, x) * TPO);
  return mom;
}

}  // namespace

ObservableMoments population_moments(const DiscreteHmm& hmm) {
  hmm.validate();
  return moments_from_marginal(hmm, stationary_distribution(hmm.T));
}

ObservableMoments population_moments(const DiscreteHmm& hmm, const Eigen::VectorXd& state_marginal) {
  hmm.validate();
  if (state_marginal.size() != hmm.num_states())
    throw Error(errc::invalid_input, "population_moments: marginal dimension mismatch");
  return moments_from_marginal(hmm, state_marginal);
}

ObservableMoments empirical_moments(const std::vector<int>& obs, int num_symbols) {
  const std::size_t n = obs.size();
  if (n < 3) throw Error(errc::insufficient_data, "empirical_moments: need at least 3 observations");
  const Eigen::Index M = num_symbols;
  for (int x : obs)
    if (x < 1 || x > M) throw Error(errc::invalid_input, "empirical_moments: symbol out of range");

  ObservableMoments mom;
  mom.u = Eigen::VectorXd::Zero(M);
  mom.C21 = Eigen::MatrixXd::Zero(M, M);
  mom.C3x1.assign(static_cast<std::size_t>(M), Eigen::MatrixXd::Zero(M, M));

  for (std::size_t t = 0; t < n; ++t) mom.u(obs[t] - 1) += 1.0;
  mom.u /= static_cast<double>(n);

  for (std::size_t t = 0; t + 1 < n; ++t) mom.C21(obs[t + 1] - 1, obs[t] - 1) += 1.0;
  mom.C21 /= static_cast<double>(n - 1);

  for (std::size_t t = 0; t + 2 < n; ++t)
    mom.C3x1[static_cast<std::size_t>(obs[t + 1] - 1)](obs[t + 2] - 1, obs[t] - 1) += 1.0;
  for (auto& C : mom.C3x1) C /= static_cast<double>(n - 2);

  return mom;
}

SpectralModel spectral_train(const ObservableMoments& moments, int rank) {
  const Eigen::Index M = moments.u.size();
  if (moments.C21.rows() != M || moments.C21.cols() != M ||
      moments.C3x1.size() != static_cast<std::size_t>(M))
    throw Error(errc::invalid_input, "spectral_train: inconsistent moment dimensions");
  if (rank < 1 || rank > M) throw Error(errc::invalid_input, "spectral_train: bad rank");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(moments.C21, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = 1e-12 * sv(0);
  Eigen::Index numerical_rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++numerical_rank;
  if (rank > numerical_rank)
    throw Error(errc::rank_deficient, "spectral_train: rank exceeds numerical rank of C21");

  Eigen::MatrixXd U = svd.matrixU().leftCols(rank);
  fix_svd_signs(U);

  const Eigen::MatrixXd UC = U.transpose() * moments.C21;  // N x M
  // Moore-Penrose pseudoinverse with relative singular-value cutoff.
  Eigen::JacobiSVD<Eigen::MatrixXd> psvd(UC, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& ps = psvd.singularValues();
  const double pcut = 1e-12 * ps(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ps.size());
  for (Eigen::Index i = 0; i < ps.size(); ++i)
    if (ps(i) > pcut) inv(i) = 1.0 / ps(i);
  const Eigen::MatrixXd UC_pinv = psvd.matrixV() * inv.asDiagonal() * psvd.matrixU().transpose();  // M x N

  SpectralModel model;
  model.U = U;
  model.b1 = U.transpose() * moments.u;
  model.b_inf = moments.C21 * UC_pinv;
  model.Bx.reserve(static_cast<std::size_t>(M));
  for (const auto& C3 : moments.C3x1)
    model.Bx.push_back((U.transpose() * C3) * UC_pinv);
  return model;
}

Eigen::VectorXd spectral_predict(const SpectralModel& model, const std::vector<int>& obs) {
  Eigen::VectorXd state = model.b1;
  for (int x : obs) {
    if (x < 1 || x > static_cast<int>(model.Bx.size()))
      throw Error(errc::invalid_input, "spectral_predict: symbol out of range");
    state = (model.Bx[static_cast<std::size_t>(x - 1)] * state).eval();
  }
  Eigen::VectorXd pred = model.b_inf * state;
  const double z = pred.sum();
  if (z <= 0.0)
    throw Error(errc::unstable, "spectral_predict: normalizer is not positive");
  return pred / z;
}

}  // namespace ksf
