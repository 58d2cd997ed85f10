#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "ksf/errors.hpp"
#include "ksf/kernels.hpp"

namespace ksf {

// Sliding-window training corpus: aligned lists (x1[l], x2[l], x3[l]) of
// consecutive observations, l = 0..m-1, built from a series of length n
// with m = n - 2.
struct TrainingTriples {
  std::vector<double> x1, x2, x3;

  std::size_t size() const { return x1.size(); }
  void validate() const;
};

TrainingTriples reshape_sliding(const std::vector<double>& series);

// Sum-normalization n(w) = w / sum(w). Preserves the sign pattern; throws
// UnstableError when the sum is numerically zero or non-finite.
Eigen::VectorXd normalize_weights(const Eigen::VectorXd& w);

// Learned finite-sample representation. A holds the top generalized
// eigenvectors of the pencil (LKL, L), Omega their eigenvalue magnitudes,
// D the scalings (a' L a)^{-1/2}, Q the propagation matrix K L A D Omega^-1,
// and beta1 the initial weight vector. F and the Cholesky factor of
// (L + lambda I) are retained for the per-query operator construction.
class KshmmModel {
 public:
  KshmmModel() = default;

  const KernelConfig& kernel() const { return kernel_; }
  double lambda() const { return lambda_; }
  int rank() const { return rank_; }
  Eigen::Index m() const { return static_cast<Eigen::Index>(x2_.size()); }
  const std::vector<double>& x2() const { return x2_; }
  double last_training_value() const { return x_last_; }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& omega() const { return omega_; }
  const Eigen::VectorXd& d() const { return d_; }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::VectorXd& beta1() const { return beta1_; }
  const Eigen::MatrixXd& F() const { return F_; }
  const Eigen::MatrixXd& proj_F() const { return proj_F_; }

  // Solves (L + lambda I) y = v via the retained Cholesky factor.
  Eigen::VectorXd ridge_solve(const Eigen::VectorXd& v) const;

  friend KshmmModel train(const TrainingTriples&, const KernelConfig&, int, double);
  friend KshmmModel load_model(const std::string&);
  friend void save_model(const KshmmModel&, const std::string&);

 private:
  void rebuild_caches();

  KernelConfig kernel_;
  double lambda_ = 0.0;
  int rank_ = 0;
  std::vector<double> x2_;
  double x_last_ = 0.0;
  Eigen::MatrixXd A_;       // m x N
  Eigen::VectorXd omega_;   // N, magnitudes, descending
  Eigen::VectorXd d_;       // N
  Eigen::MatrixXd Q_;       // m x N
  Eigen::VectorXd beta1_;   // N
  Eigen::MatrixXd F_;       // m x m
  Eigen::MatrixXd chol_;    // m x m lower factor of (L + lambda I)
  Eigen::MatrixXd proj_F_;  // N x m cache of (1/m) D A' F
};

// Normalized internal state propagated through the observation-operator
// matrices during filtering.
struct BeliefState {
  Eigen::VectorXd b;
};

struct ModeResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Predictive kernel-mean weights over the training midpoints plus derived
// statistics. Entries of eta may be negative; variance may be negative.
struct ForecastDistribution {
  Eigen::VectorXd eta;
  double mean = 0.0;
  double variance = 0.0;
  double mode = 0.0;
  bool mode_converged = false;
  bool stable = false;  // filled by the switching layer
};

// Training: kernel matrices, generalized eigenproblem LKL a = w L a
// (L ridged by 1e-10 tr(L)/m for the Cholesky reduction), beta1 and Q.
// Default lambda is 0.01/sqrt(m) when the caller passes <= 0.
KshmmModel train(const TrainingTriples& triples, const KernelConfig& kernel, int rank, double lambda);

// Per-query observation operator
//   B(x) = (1/m) D A' F diag(n((L + lambda I)^{-1} n(k2(x)))) Q
// with both inner weight normalizations.
Eigen::MatrixXd observation_operator_matrix(const KshmmModel& model, double x);

BeliefState filter_init(const KshmmModel& model);
BeliefState filter_update(const KshmmModel& model, const BeliefState& belief, double x);

// eta = n(Q b); length m, sums to 1, entries may be negative.
Eigen::VectorXd predictive_weights(const KshmmModel& model, const BeliefState& belief);

double predictive_mean(const Eigen::VectorXd& eta, const std::vector<double>& x2);
double predictive_variance(const Eigen::VectorXd& eta, const std::vector<double>& x2, double mean);

// Fixed-point iteration for the kernel-mean pre-image, started at the
// training midpoint with the largest weight (first index on ties).
ModeResult mode_estimate(const KshmmModel& model, const Eigen::VectorXd& eta);

// Full readout of the predictive distribution for the current belief.
ForecastDistribution forecast_distribution(const KshmmModel& model, const BeliefState& belief);

// Versioned binary model artifact; round-trips are bit-exact.
void save_model(const KshmmModel& model, const std::string& path);
KshmmModel load_model(const std::string& path);

// Incremental filtering over a test sequence. A collapsed update resets the
// belief to the initial state and flags the next forecast as unstable; the
// observation sequence itself is always tracked for persistence fallback.
class KshmmFilter {
 public:
  explicit KshmmFilter(std::shared_ptr<const KshmmModel> model);

  // Incorporates an observed value. Returns false when the update was
  // unstable and the belief was reset.
  bool observe(double x);

  // Readout for the next step; throws UnstableError when the pending
  // collapse flag is set or the readout itself collapses.
  ForecastDistribution distribution();

  bool pending_unstable() const { return pending_unstable_; }
  double last_observation() const { return last_obs_; }
  const KshmmModel& model() const { return *model_; }

 private:
  std::shared_ptr<const KshmmModel> model_;
  BeliefState belief_;
  double last_obs_;
  bool pending_unstable_ = false;
};

}  // namespace ksf
