#include "ksf/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ksf {

LagMatrix build_lag_matrix(const std::vector<double>& series, int p_max) {
  const std::size_t n = series.size();
  if (p_max < 1) throw Error(errc::invalid_input, "build_lag_matrix: p_max must be >= 1");
  if (n <= static_cast<std::size_t>(p_max))
    throw Error(errc::invalid_input, "build_lag_matrix: series not longer than p_max");

  const Eigen::Index rows = static_cast<Eigen::Index>(n) - p_max;
  LagMatrix lm;
  lm.inputs.resize(rows, p_max);
  lm.targets.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int c = 0; c < p_max; ++c)
      lm.inputs(r, c) = series[static_cast<std::size_t>(r) + static_cast<std::size_t>(c)];
    lm.targets(r) = series[static_cast<std::size_t>(r) + static_cast<std::size_t>(p_max)];
  }
  return lm;
}

namespace {

constexpr double kKktTol = 1e-3;

Eigen::MatrixXd kernel_gram(const Eigen::MatrixXd& X, const KernelConfig& cfg) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  const double inv = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (X.row(i) - X.row(j)).squaredNorm();
      K(i, j) = K(j, i) = std::exp(-d2 * inv);
    }
  }
  return K;
}

}  // namespace

// SMO over the 2n-variable dual: a = [alpha; alpha*], labels z = [+1; -1],
// Qbar(s,t) = z_s z_t K(s%n, t%n), p = [eps - y; eps + y], constraint
// z'a = 0, 0 <= a <= C. Maximal violating pair, first-order step.
SvrModel svr_train(const LagMatrix& lags, const KernelConfig& kernel, double C, double epsilon) {
  kernel.validate();
  if (!(C > 0.0)) throw Error(errc::invalid_input, "svr_train: C must be positive");
  if (epsilon < 0.0) throw Error(errc::invalid_input, "svr_train: epsilon must be >= 0");
  const Eigen::Index n = lags.rows();
  if (n < 1) throw Error(errc::invalid_input, "svr_train: empty training set");

  const Eigen::MatrixXd K = kernel_gram(lags.inputs, kernel);
  const Eigen::Index nn = 2 * n;

  Eigen::VectorXd a = Eigen::VectorXd::Zero(nn);
  Eigen::VectorXd g(nn);  // gradient of 1/2 a'Qa + p'a
  for (Eigen::Index s = 0; s < nn; ++s)
    g(s) = (s < n) ? epsilon - lags.targets(s) : epsilon + lags.targets(s - n);

  const auto z = [&](Eigen::Index s) { return s < n ? 1.0 : -1.0; };

  const long max_iter = std::max<long>(200000, 400 * static_cast<long>(nn));
  double gap = std::numeric_limits<double>::infinity();
  long it = 0;
  for (; it < max_iter; ++it) {
    // maximal violating pair over I_up / I_low
    double up_best = -std::numeric_limits<double>::infinity();
    double low_best = std::numeric_limits<double>::infinity();
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index s = 0; s < nn; ++s) {
      const double zs = z(s);
      const double score = -zs * g(s);
      const bool in_up = (zs > 0.0 && a(s) < C) || (zs < 0.0 && a(s) > 0.0);
      const bool in_low = (zs > 0.0 && a(s) > 0.0) || (zs < 0.0 && a(s) < C);
      if (in_up && score > up_best) {
        up_best = score;
        i = s;
      }
      if (in_low && score < low_best) {
        low_best = score;
        j = s;
      }
    }
    gap = up_best - low_best;
    if (i < 0 || j < 0 || gap <= kKktTol) break;

    const Eigen::Index ri = i % n, rj = j % n;
    const double kappa = std::max(K(ri, ri) + K(rj, rj) - 2.0 * z(i) * z(j) * K(ri, rj), 1e-12);
    double delta = gap / kappa;
    // box limits along the feasible direction (a_i moves by z_i*delta,
    // a_j by -z_j*delta)
    delta = std::min(delta, z(i) > 0.0 ? C - a(i) : a(i));
    delta = std::min(delta, z(j) > 0.0 ? a(j) : C - a(j));
    if (delta <= 0.0) break;

    a(i) += z(i) * delta;
    a(j) -= z(j) * delta;
    const double di = z(i) * delta, dj = -z(j) * delta;
    for (Eigen::Index s = 0; s < nn; ++s) {
      const double zs = z(s);
      g(s) += zs * z(i) * K(s % n, ri) * di + zs * z(j) * K(s % n, rj) * dj;
    }
  }
  if (it >= max_iter && gap > kKktTol)
    throw Error(errc::fit_failure, "svr_train: SMO iteration budget exhausted");

  SvrModel model;
  model.kernel = kernel;
  model.C = C;
  model.epsilon = epsilon;
  model.coeffs = a.head(n) - a.tail(n);
  model.support_inputs = lags.inputs;

  // bias from free (unbounded) variables; fall back to the KKT interval
  // midpoint when every variable sits on a bound
  double sum = 0.0;
  int free_count = 0;
  for (Eigen::Index s = 0; s < nn; ++s) {
    if (a(s) > 1e-12 * C && a(s) < C * (1.0 - 1e-12)) {
      sum += -z(s) * g(s);
      ++free_count;
    }
  }
  if (free_count > 0) {
    model.bias = sum / free_count;
  } else {
    double up_best = -std::numeric_limits<double>::infinity();
    double low_best = std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < nn; ++s) {
      const double zs = z(s);
      const double score = -zs * g(s);
      const bool in_up = (zs > 0.0 && a(s) < C) || (zs < 0.0 && a(s) > 0.0);
      const bool in_low = (zs > 0.0 && a(s) > 0.0) || (zs < 0.0 && a(s) < C);
      if (in_up) up_best = std::max(up_best, score);
      if (in_low) low_best = std::min(low_best, score);
    }
    model.bias = 0.5 * (up_best + low_best);
  }
  return model;
}

double svr_predict(const SvrModel& model, const Eigen::VectorXd& lags) {
  if (lags.size() != model.support_inputs.cols())
    throw Error(errc::invalid_input, "svr_predict: lag vector length mismatch");
  double s = model.bias;
  const double inv = 1.0 / (2.0 * model.kernel.bandwidth * model.kernel.bandwidth);
  for (Eigen::Index l = 0; l < model.coeffs.size(); ++l) {
    if (model.coeffs(l) == 0.0) continue;
    const double d2 = (model.support_inputs.row(l).transpose() - lags).squaredNorm();
    s += model.coeffs(l) * std::exp(-d2 * inv);
  }
  return s;
}

double svr_dual_objective(const SvrModel& model, const LagMatrix& lags) {
  const Eigen::MatrixXd K = kernel_gram(lags.inputs, model.kernel);
  const Eigen::VectorXd& b = model.coeffs;
  return -0.5 * b.dot(K * b) - model.epsilon * b.lpNorm<1>() + lags.targets.dot(b);
}

SvrGridResult svr_grid_select(const std::function<double(double sigma, double C)>& cv_score) {
  SvrGridResult result;
  bool have = false;
  for (int si = 0; si <= 7; ++si) {
    const double sigma = std::pow(10.0, -si);
    for (int ci = -1; ci <= 4; ++ci) {
      const double C = std::pow(10.0, -ci);
      const double score = cv_score(sigma, C);
      result.table.push_back({sigma, C, score});
      if (std::isfinite(score) && (!have || score < result.cv_rmse)) {
        result.sigma = sigma;
        result.C = C;
        result.cv_rmse = score;
        have = true;
      }
    }
  }
  if (!have) throw Error(errc::fit_failure, "svr_grid_search: every combination failed");
  return result;
}

SvrGridResult svr_grid_search(const std::vector<double>& train_series, int p_max,
                              double epsilon) {
  const LagMatrix lm = build_lag_matrix(train_series, p_max);
  const Eigen::Index n = lm.rows();
  if (n < 3) throw Error(errc::insufficient_data, "svr_grid_search: need at least 3 lag rows");

  // three contiguous folds in temporal order
  const Eigen::Index f1 = n / 3, f2 = (2 * n) / 3;
  const Eigen::Index bounds[4] = {0, f1, f2, n};

  const auto cv_score = [&](double sigma, double C) -> double {
    KernelConfig cfg{KernelFamily::GaussianRBF, sigma};
    double rmse_sum = 0.0;
    for (int fold = 0; fold < 3; ++fold) {
      const Eigen::Index lo = bounds[fold], hi = bounds[fold + 1];
      const Eigen::Index ntr = n - (hi - lo);
      if (ntr < 1 || hi - lo < 1) return std::numeric_limits<double>::infinity();
      LagMatrix tr;
      tr.inputs.resize(ntr, lm.inputs.cols());
      tr.targets.resize(ntr);
      Eigen::Index w = 0;
      for (Eigen::Index r = 0; r < n; ++r) {
        if (r >= lo && r < hi) continue;
        tr.inputs.row(w) = lm.inputs.row(r);
        tr.targets(w) = lm.targets(r);
        ++w;
      }
      SvrModel m;
      try {
        m = svr_train(tr, cfg, C, epsilon);
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
      double se = 0.0;
      for (Eigen::Index r = lo; r < hi; ++r) {
        const double e = svr_predict(m, lm.inputs.row(r).transpose()) - lm.targets(r);
        se += e * e;
      }
      rmse_sum += std::sqrt(se / static_cast<double>(hi - lo));
    }
    return rmse_sum / 3.0;
  };

  SvrGridResult result = svr_grid_select(cv_score);
  result.model = svr_train(lm, KernelConfig{KernelFamily::GaussianRBF, result.sigma}, result.C,
                           epsilon);
  return result;
}

}  // namespace ksf
