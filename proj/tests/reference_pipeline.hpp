// Test-only straight-line transcription of the kernelized training and
// filtering pipeline. Every quantity is built with direct loops and dense
// Eigen calls (GeneralizedSelfAdjointEigenSolver, LDLT) rather than the
// production code path, so agreement between the two routes is meaningful.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

namespace ksf_test {

struct ReferencePipeline {
  double sigma = 1.0;
  double lambda = 0.0;
  int rank = 0;
  std::vector<double> x2;
  Eigen::MatrixXd K, L, G, F;
  Eigen::MatrixXd A;      // m x N
  Eigen::VectorXd omega;  // N
  Eigen::VectorXd dvec;   // N
  Eigen::VectorXd beta1;  // N
  Eigen::MatrixXd Q;      // m x N
};

inline Eigen::MatrixXd ref_gram(const std::vector<double>& a, const std::vector<double>& b,
                                double sigma) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)];
      M(i, j) = std::exp(-d * d / (2.0 * sigma * sigma));
    }
  return M;
}

inline Eigen::VectorXd ref_normalize(const Eigen::VectorXd& w) { return w / w.sum(); }

inline ReferencePipeline reference_train(const std::vector<double>& series, double sigma,
                                         int rank, double lambda) {
  const std::size_t m = series.size() - 2;
  ReferencePipeline rp;
  rp.sigma = sigma;
  rp.lambda = lambda;
  rp.rank = rank;
  std::vector<double> x1(m), x3(m);
  rp.x2.resize(m);
  for (std::size_t l = 0; l < m; ++l) {
    x1[l] = series[l];
    rp.x2[l] = series[l + 1];
    x3[l] = series[l + 2];
  }

  rp.K = ref_gram(x1, x1, sigma);
  rp.L = ref_gram(rp.x2, rp.x2, sigma);
  rp.G = ref_gram(rp.x2, x1, sigma);
  rp.F = ref_gram(rp.x2, x3, sigma);

  const Eigen::Index mi = static_cast<Eigen::Index>(m);
  const double delta = 1e-10 * rp.L.trace() / static_cast<double>(m);
  Eigen::MatrixXd Lr = rp.L;
  Lr.diagonal().array() += delta;
  const Eigen::MatrixXd LKL = rp.L * rp.K * rp.L;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(LKL, Lr);
  const Eigen::VectorXd evals = es.eigenvalues();

  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(evals(a)) > std::abs(evals(b));
  });

  rp.A.resize(mi, rank);
  rp.omega.resize(rank);
  rp.dvec.resize(rank);
  for (int i = 0; i < rank; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    rp.omega(i) = std::abs(evals(src));
    Eigen::VectorXd alpha = es.eigenvectors().col(src);
    Eigen::Index imax = 0;
    alpha.cwiseAbs().maxCoeff(&imax);
    if (alpha(imax) < 0.0) alpha = -alpha;
    rp.A.col(i) = alpha;
    rp.dvec(i) = 1.0 / std::sqrt(alpha.dot(rp.L * alpha));
  }

  const Eigen::MatrixXd D = rp.dvec.asDiagonal();
  const Eigen::MatrixXd Omega_inv = rp.omega.cwiseInverse().asDiagonal();
  rp.beta1 = (1.0 / static_cast<double>(m)) * D.transpose() * rp.A.transpose() * rp.G *
             Eigen::VectorXd::Ones(mi);
  rp.Q = rp.K * rp.L * rp.A * D * Omega_inv;
  return rp;
}

// (1/m) D' A' F diag(n((L + lambda I)^{-1} n(k2(x)))) Q with the solve done
// by LDLT, not the production Cholesky-factor reuse.
inline Eigen::MatrixXd reference_operator(const ReferencePipeline& rp, double x) {
  const Eigen::Index m = static_cast<Eigen::Index>(rp.x2.size());
  Eigen::VectorXd k2(m);
  for (Eigen::Index l = 0; l < m; ++l) {
    const double d = rp.x2[static_cast<std::size_t>(l)] - x;
    k2(l) = std::exp(-d * d / (2.0 * rp.sigma * rp.sigma));
  }
  Eigen::MatrixXd Lreg = rp.L;
  Lreg.diagonal().array() += rp.lambda;
  const Eigen::VectorXd w = ref_normalize(Lreg.ldlt().solve(ref_normalize(k2)));
  const Eigen::MatrixXd D = rp.dvec.asDiagonal();
  return (1.0 / static_cast<double>(m)) * D.transpose() * rp.A.transpose() * rp.F *
         w.asDiagonal() * rp.Q;
}

// Monolithic weight-vector chain eta = n(Q n(B_t ... n(B_1 n(beta1)))).
inline Eigen::VectorXd reference_eta(const ReferencePipeline& rp, const std::vector<double>& obs) {
  Eigen::VectorXd v = ref_normalize(rp.beta1);
  for (double x : obs) v = ref_normalize(reference_operator(rp, x) * v);
  return ref_normalize(rp.Q * v);
}

}  // namespace ksf_test
