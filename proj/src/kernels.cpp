#include "ksf/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace ksf {

void KernelConfig::validate() const {
  if (family != KernelFamily::GaussianRBF)
    throw Error(errc::invalid_input, "kernel: unsupported family");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw Error(errc::invalid_input, "kernel: bandwidth must be positive and finite");
}

double kernel_evaluate(const KernelConfig& cfg, double x, double y) {
  cfg.validate();
  if (!std::isfinite(x) || !std::isfinite(y))
    throw Error(errc::invalid_input, "kernel: non-finite input");
  const double d = x - y;
  return std::exp(-(d * d) / (2.0 * cfg.bandwidth * cfg.bandwidth));
}

double kernel_evaluate(const KernelConfig& cfg, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  cfg.validate();
  if (x.size() != y.size())
    throw Error(errc::invalid_input, "kernel: dimension mismatch");
  if (!x.allFinite() || !y.allFinite())
    throw Error(errc::invalid_input, "kernel: non-finite input");
  const double d2 = (x - y).squaredNorm();
  return std::exp(-d2 / (2.0 * cfg.bandwidth * cfg.bandwidth));
}

double median_heuristic(const std::vector<double>& data) {
  const std::size_t n = data.size();
  if (n < 2) throw Error(errc::invalid_input, "median_heuristic: need at least 2 points");
  for (double v : data)
    if (!std::isfinite(v)) throw Error(errc::invalid_input, "median_heuristic: non-finite input");

  std::vector<double> dist;
  dist.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist.push_back(std::abs(data[i] - data[j]));

  const std::size_t p = dist.size();
  const std::size_t mid = p / 2;
  std::nth_element(dist.begin(), dist.begin() + mid, dist.end());
  double med = dist[mid];
  if (p % 2 == 0) {
    // mean of the two middle order statistics
    const double hi = med;
    std::nth_element(dist.begin(), dist.begin() + (mid - 1), dist.begin() + mid);
    med = 0.5 * (dist[mid - 1] + hi);
  }
  if (med <= 0.0)
    throw Error(errc::degenerate_data, "median_heuristic: zero median distance (constant data)");
  return med;
}

Eigen::MatrixXd gram_matrix(const KernelConfig& cfg, const std::vector<double>& X, const std::vector<double>& Y) {
  cfg.validate();
  if (X.empty() || Y.empty()) throw Error(errc::invalid_input, "gram_matrix: empty input");
  for (double v : X)
    if (!std::isfinite(v)) throw Error(errc::invalid_input, "gram_matrix: non-finite input");
  for (double v : Y)
    if (!std::isfinite(v)) throw Error(errc::invalid_input, "gram_matrix: non-finite input");

  const double inv = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
  Eigen::MatrixXd G(static_cast<Eigen::Index>(X.size()), static_cast<Eigen::Index>(Y.size()));
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    const double xi = X[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < G.cols(); ++j) {
      const double d = xi - Y[static_cast<std::size_t>(j)];
      G(i, j) = std::exp(-d * d * inv);
    }
  }
  return G;
}

Eigen::VectorXd kernel_vector(const KernelConfig& cfg, const std::vector<double>& X, double query) {
  cfg.validate();
  if (X.empty()) throw Error(errc::invalid_input, "kernel_vector: empty input");
  if (!std::isfinite(query)) throw Error(errc::invalid_input, "kernel_vector: non-finite query");

  const double inv = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
  Eigen::VectorXd v(static_cast<Eigen::Index>(X.size()));
  for (Eigen::Index l = 0; l < v.size(); ++l) {
    const double x = X[static_cast<std::size_t>(l)];
    if (!std::isfinite(x)) throw Error(errc::invalid_input, "kernel_vector: non-finite input");
    const double d = x - query;
    v(l) = std::exp(-d * d * inv);
  }
  return v;
}

}  // namespace ksf
