#pragma once

#include <Eigen/Core>
#include <vector>

#include "ksf/errors.hpp"

namespace ksf {

enum class KernelFamily { GaussianRBF };

// Positive-definite kernel configuration. bandwidth is the Gaussian sigma,
// in the same units as the data (m/s for wind speed).
struct KernelConfig {
  KernelFamily family = KernelFamily::GaussianRBF;
  double bandwidth = 1.0;

  void validate() const;
};

// k(x, y) = exp(-(x - y)^2 / (2 sigma^2)); in (0, 1], 1 iff x == y.
double kernel_evaluate(const KernelConfig& cfg, double x, double y);

// Multi-dimensional product form: exp(-|x - y|^2 / (2 sigma^2)).
double kernel_evaluate(const KernelConfig& cfg, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Exact median of the pairwise absolute distances {|x_i - x_j| : i < j}.
// Even pair counts take the mean of the two middle order statistics.
// Throws degenerate_data when the median is zero (constant-heavy data).
double median_heuristic(const std::vector<double>& data);

// Gram matrix: entry (i, j) = k(X_i, Y_j).
Eigen::MatrixXd gram_matrix(const KernelConfig& cfg, const std::vector<double>& X, const std::vector<double>& Y);

// Similarity vector: entry l = k(X_l, query).
Eigen::VectorXd kernel_vector(const KernelConfig& cfg, const std::vector<double>& X, double query);

}  // namespace ksf
