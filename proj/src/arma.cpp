#include "ksf/arma.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace ksf {

namespace {

double sample_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

}  // namespace

std::vector<double> acf(const std::vector<double>& series, int max_lag) {
  const std::size_t n = series.size();
  if (max_lag < 0) throw Error(errc::invalid_input, "acf: negative max_lag");
  if (n <= static_cast<std::size_t>(max_lag) + 1)
    throw Error(errc::insufficient_data, "acf: series too short for max_lag");
  const double mean = sample_mean(series);
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (denom <= 0.0) throw Error(errc::degenerate_data, "acf: zero-variance series");

  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1);
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < n; ++t)
      s += (series[t] - mean) * (series[t + static_cast<std::size_t>(k)] - mean);
    r[static_cast<std::size_t>(k)] = s / denom;
  }
  return r;
}

std::vector<double> pacf(const std::vector<double>& series, int max_lag) {
  const std::vector<double> r = acf(series, max_lag);
  std::vector<double> out(r.size(), 0.0);
  out[0] = 1.0;
  if (max_lag == 0) return out;

  // Durbin-Levinson: phi[k][k] is the lag-k partial autocorrelation.
  std::vector<double> phi_prev(r.size(), 0.0), phi_cur(r.size(), 0.0);
  phi_prev[1] = r[1];
  out[1] = r[1];
  for (int k = 2; k <= max_lag; ++k) {
    double num = r[static_cast<std::size_t>(k)];
    double den = 1.0;
    for (int j = 1; j < k; ++j) {
      num -= phi_prev[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(k - j)];
      den -= phi_prev[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(j)];
    }
    if (std::abs(den) < 1e-12)
      throw Error(errc::degenerate_data, "pacf: Durbin-Levinson denominator vanished");
    const double phikk = num / den;
    for (int j = 1; j < k; ++j)
      phi_cur[static_cast<std::size_t>(j)] = phi_prev[static_cast<std::size_t>(j)] -
                                             phikk * phi_prev[static_cast<std::size_t>(k - j)];
    phi_cur[static_cast<std::size_t>(k)] = phikk;
    out[static_cast<std::size_t>(k)] = phikk;
    std::swap(phi_prev, phi_cur);
  }
  return out;
}

int cutoff_lag(const std::vector<double>& values, std::size_t n, int cap) {
  const double band = 1.96 / std::sqrt(static_cast<double>(n));
  int last = 0;
  const int limit = std::min<int>(cap, static_cast<int>(values.size()) - 1);
  for (int k = 1; k <= limit; ++k)
    if (std::abs(values[static_cast<std::size_t>(k)]) > band) last = k;
  return last;
}

double companion_spectral_radius(const std::vector<double>& coeffs) {
  const int d = static_cast<int>(coeffs.size());
  if (d == 0) return 0.0;
  for (double c : coeffs)
    if (!std::isfinite(c)) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) comp(0, j) = coeffs[static_cast<std::size_t>(j)];
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  return comp.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

constexpr double kRootMargin = 1e-6;

// Schur-Cohn stability test for the recursion x_t = sum c_i x_{t-i}:
// stable (all companion eigenvalues inside |z| < margin) iff every
// reflection coefficient of the reverse Levinson recursion lies in (-1, 1).
// Allocation-free replacement for the eigenvalue route in hot loops.
bool recursion_stable(const double* coeffs, int d, double margin, double* work) {
  if (d == 0) return true;
  // scale the coefficients so the test checks roots against `margin`
  double scale = 1.0;
  for (int i = 0; i < d; ++i) {
    scale /= margin;
    const double c = coeffs[i] * scale;
    if (!std::isfinite(c)) return false;
    work[i] = c;
  }
  double* cur = work;
  double* next = work + d;
  for (int k = d; k >= 1; --k) {
    const double r = cur[k - 1];
    if (!(std::abs(r) < 1.0)) return false;
    const double denom = 1.0 - r * r;
    for (int i = 0; i < k - 1; ++i) next[i] = (cur[i] + r * cur[k - 2 - i]) / denom;
    std::swap(cur, next);
  }
  return true;
}

struct CssParams {
  double mu = 0.0;
  std::vector<double> phi;
  std::vector<double> theta;
};

CssParams unpack(const Eigen::VectorXd& v, int p, int q) {
  CssParams par;
  par.mu = v(0);
  par.phi.assign(v.data() + 1, v.data() + 1 + p);
  par.theta.assign(v.data() + 1 + p, v.data() + 1 + p + q);
  return par;
}

// MA invertibility maps to stability of the recursion with coefficients
// (-theta_1, ..., -theta_q).
std::vector<double> negated(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
  return out;
}

bool roots_ok(const CssParams& par) {
  return companion_spectral_radius(par.phi) < 1.0 - kRootMargin &&
         companion_spectral_radius(negated(par.theta)) < 1.0 - kRootMargin;
}

// Zero pre-sample residual recursion; returns the sum of squared residuals.
double css_sse(const std::vector<double>& x, const CssParams& par, std::vector<double>& resid) {
  const int p = static_cast<int>(par.phi.size());
  const int q = static_cast<int>(par.theta.size());
  const int n = static_cast<int>(x.size());
  resid.resize(static_cast<std::size_t>(n));
  double sse = 0.0;
  for (int t = 0; t < n; ++t) {
    double e = x[static_cast<std::size_t>(t)] - par.mu;
    for (int i = 1; i <= p; ++i)
      if (t - i >= 0) e -= par.phi[static_cast<std::size_t>(i - 1)] *
                           (x[static_cast<std::size_t>(t - i)] - par.mu);
    for (int j = 1; j <= q; ++j)
      if (t - j >= 0) e -= par.theta[static_cast<std::size_t>(j - 1)] *
                           resid[static_cast<std::size_t>(t - j)];
    resid[static_cast<std::size_t>(t)] = e;
    sse += e * e;
  }
  return sse;
}

// Nelder-Mead on the penalized log-SSE surface.
struct SimplexResult {
  Eigen::VectorXd x;
  double f = 0.0;
  bool converged = false;
};

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                          const Eigen::VectorXd& x0, int max_iter) {
  const int d = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(d) + 1, x0);
  for (int i = 0; i < d; ++i) {
    const double step = std::max(0.05, 0.1 * std::abs(x0(i)));
    xs[static_cast<std::size_t>(i) + 1](i) += step;
  }
  std::vector<double> fs;
  fs.reserve(xs.size());
  for (const auto& x : xs) fs.push_back(f(x));

  std::vector<std::size_t> ord(xs.size());
  const auto sort_ord = [&] {
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
  };

  for (int it = 0; it < max_iter; ++it) {
    sort_ord();
    const std::size_t best = ord.front(), worst = ord.back(), second = ord[ord.size() - 2];

    double spread = 0.0;
    for (int i = 0; i < d; ++i)
      spread = std::max(spread, std::abs(xs[worst](i) - xs[best](i)));
    if (fs[worst] - fs[best] <= 1e-10 * (1.0 + std::abs(fs[best])) || spread <= 1e-9)
      return {xs[best], fs[best], true};

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t k = 0; k < xs.size(); ++k)
      if (k != worst) centroid += xs[k];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd refl = centroid + (centroid - xs[worst]);
    const double frefl = f(refl);
    if (frefl < fs[best]) {
      const Eigen::VectorXd exp_pt = centroid + 2.0 * (centroid - xs[worst]);
      const double fexp = f(exp_pt);
      if (fexp < frefl) {
        xs[worst] = exp_pt;
        fs[worst] = fexp;
      } else {
        xs[worst] = refl;
        fs[worst] = frefl;
      }
    } else if (frefl < fs[second]) {
      xs[worst] = refl;
      fs[worst] = frefl;
    } else {
      const Eigen::VectorXd contr = centroid + 0.5 * (xs[worst] - centroid);
      const double fcontr = f(contr);
      if (fcontr < fs[worst]) {
        xs[worst] = contr;
        fs[worst] = fcontr;
      } else {
        for (std::size_t k = 0; k < xs.size(); ++k) {
          if (k == best) continue;
          xs[k] = xs[best] + 0.5 * (xs[k] - xs[best]);
          fs[k] = f(xs[k]);
        }
      }
    }
  }
  sort_ord();
  return {xs[ord.front()], fs[ord.front()], false};
}

// Long-AR coefficients for the Hannan-Rissanen first stage via
// Durbin-Levinson on the sample autocorrelations.
std::vector<double> yule_walker_ar(const std::vector<double>& series, int order) {
  const std::vector<double> r = acf(series, order);
  std::vector<double> phi(static_cast<std::size_t>(order) + 1, 0.0);
  std::vector<double> prev(phi), cur(phi);
  prev[1] = r[1];
  for (int k = 2; k <= order; ++k) {
    double num = r[static_cast<std::size_t>(k)];
    double den = 1.0;
    for (int j = 1; j < k; ++j) {
      num -= prev[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(k - j)];
      den -= prev[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(j)];
    }
    const double phikk = std::abs(den) < 1e-12 ? 0.0 : num / den;
    for (int j = 1; j < k; ++j)
      cur[static_cast<std::size_t>(j)] =
          prev[static_cast<std::size_t>(j)] - phikk * prev[static_cast<std::size_t>(k - j)];
    cur[static_cast<std::size_t>(k)] = phikk;
    prev = cur;
  }
  return {prev.begin() + 1, prev.end()};
}

void shrink_to_stable(std::vector<double>& coeffs) {
  for (int tries = 0; tries < 200 && companion_spectral_radius(coeffs) >= 1.0 - 10 * kRootMargin;
       ++tries)
    for (double& c : coeffs) c *= 0.9;
}

CssParams hannan_rissanen_init(const std::vector<double>& x, int p, int q, double mean) {
  CssParams par;
  par.mu = mean;
  par.phi.assign(static_cast<std::size_t>(p), 0.0);
  par.theta.assign(static_cast<std::size_t>(q), 0.0);
  if (p + q == 0) return par;

  const int n = static_cast<int>(x.size());
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - mean;

  std::vector<double> eps(z.size(), 0.0);
  if (q > 0) {
    const int h = std::min(n / 4, std::max(10, 2 * (p + q)));
    const std::vector<double> ar = yule_walker_ar(x, h);
    for (int t = h; t < n; ++t) {
      double e = z[static_cast<std::size_t>(t)];
      for (int i = 1; i <= h; ++i)
        e -= ar[static_cast<std::size_t>(i - 1)] * z[static_cast<std::size_t>(t - i)];
      eps[static_cast<std::size_t>(t)] = e;
    }
  }

  const int start = std::max(p, q);
  const int rows = n - start;
  if (rows > p + q) {
    Eigen::MatrixXd X(rows, p + q);
    Eigen::VectorXd y(rows);
    for (int t = start; t < n; ++t) {
      const int r = t - start;
      y(r) = z[static_cast<std::size_t>(t)];
      for (int i = 1; i <= p; ++i) X(r, i - 1) = z[static_cast<std::size_t>(t - i)];
      for (int j = 1; j <= q; ++j) X(r, p + j - 1) = eps[static_cast<std::size_t>(t - j)];
    }
    const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
    for (int i = 0; i < p; ++i) par.phi[static_cast<std::size_t>(i)] = b(i);
    for (int j = 0; j < q; ++j) par.theta[static_cast<std::size_t>(j)] = b(p + j);
  }

  shrink_to_stable(par.phi);
  std::vector<double> neg = negated(par.theta);
  shrink_to_stable(neg);
  par.theta = negated(neg);
  return par;
}

}  // namespace

// Shared fitting core; extra_starts lets order selection warm-start from
// neighboring fits, which both speeds up high-order fits and avoids the
// spurious near-cancellation optima the cold simplex can wander into.
ArmaModel fit_arma_impl(const std::vector<double>& series, int p, int q,
                        const std::vector<CssParams>& extra_starts) {
  if (p < 0 || q < 0) throw Error(errc::invalid_input, "fit_arma: negative order");
  const std::size_t n = series.size();
  if (n < 10 * static_cast<std::size_t>(p + q + 1))
    throw Error(errc::insufficient_data, "fit_arma: series too short for order");
  const double mean = sample_mean(series);
  const double var = sample_variance(series, mean);
  if (var <= 0.0) throw Error(errc::degenerate_data, "fit_arma: zero-variance series");

  ArmaModel model;
  model.p = p;
  model.q = q;
  model.n_eff = static_cast<long>(n);

  std::vector<double> resid;
  const auto finish = [&](const CssParams& par, double sse) {
    model.phi = par.phi;
    model.theta = par.theta;
    model.intercept = par.mu;
    model.sigma2 = sse / static_cast<double>(n);
    model.loglik = -0.5 * static_cast<double>(n) *
                   (std::log(2.0 * 3.14159265358979323846 * model.sigma2) + 1.0);
  };

  if (p + q == 0) {
    CssParams par;
    par.mu = mean;
    finish(par, var * static_cast<double>(n));
    return model;
  }

  std::vector<double> stab(2 * static_cast<std::size_t>(std::max(p, q)) + 2);
  const auto objective = [&](const Eigen::VectorXd& v) {
    const CssParams par = unpack(v, p, q);
    if (!recursion_stable(par.phi.data(), p, 1.0 - kRootMargin, stab.data()) ||
        !recursion_stable(negated(par.theta).data(), q, 1.0 - kRootMargin, stab.data()))
      return 1e10;
    return std::log(css_sse(series, par, resid));
  };

  std::vector<CssParams> starts = extra_starts;
  starts.push_back(hannan_rissanen_init(series, p, q, mean));

  const int dim = 1 + p + q;
  bool have = false;
  SimplexResult best;
  for (const CssParams& start : starts) {
    if (static_cast<int>(start.phi.size()) != p || static_cast<int>(start.theta.size()) != q)
      continue;
    Eigen::VectorXd x0(dim);
    x0(0) = start.mu;
    for (int i = 0; i < p; ++i) x0(1 + i) = start.phi[static_cast<std::size_t>(i)];
    for (int j = 0; j < q; ++j) x0(1 + p + j) = start.theta[static_cast<std::size_t>(j)];
    const SimplexResult res = nelder_mead(objective, x0, 250 * dim + 1000);
    if (res.converged && (!have || res.f < best.f)) {
      best = res;
      have = true;
    }
  }
  if (!have) throw Error(errc::fit_failure, "fit_arma: optimizer did not converge");

  const CssParams par = unpack(best.x, p, q);
  if (!roots_ok(par))
    throw Error(errc::fit_failure, "fit_arma: optimum violates root conditions");
  finish(par, css_sse(series, par, resid));
  return model;
}

ArmaModel fit_arma(const std::vector<double>& series, int p, int q) {
  return fit_arma_impl(series, p, q, {});
}

namespace {

// warm-start parameters from an already-fitted neighbor, padded with zeros
CssParams pad_params(const ArmaModel& m, int p, int q) {
  CssParams par;
  par.mu = m.intercept;
  par.phi = m.phi;
  par.phi.resize(static_cast<std::size_t>(p), 0.0);
  par.theta = m.theta;
  par.theta.resize(static_cast<std::size_t>(q), 0.0);
  return par;
}

}  // namespace

ArmaSelection select_arma(const std::vector<double>& series, int p_max, int q_max,
                          Criterion crit) {
  if (p_max < 0 || q_max < 0) throw Error(errc::invalid_input, "select_arma: negative cap");
  ArmaSelection best;
  bool have = false;
  // fitted models kept for warm starts of the (p+1, q) and (p, q+1) fits
  std::vector<std::vector<ArmaModel>> fitted(static_cast<std::size_t>(p_max) + 1);
  std::vector<std::vector<bool>> fit_ok(static_cast<std::size_t>(p_max) + 1,
                                        std::vector<bool>(static_cast<std::size_t>(q_max) + 1, false));
  for (auto& row : fitted) row.resize(static_cast<std::size_t>(q_max) + 1);

  for (int p = 0; p <= p_max; ++p) {
    for (int q = 0; q <= q_max; ++q) {
      std::vector<CssParams> warm;
      if (p > 0 && fit_ok[static_cast<std::size_t>(p - 1)][static_cast<std::size_t>(q)])
        warm.push_back(pad_params(fitted[static_cast<std::size_t>(p - 1)][static_cast<std::size_t>(q)], p, q));
      if (q > 0 && fit_ok[static_cast<std::size_t>(p)][static_cast<std::size_t>(q - 1)])
        warm.push_back(pad_params(fitted[static_cast<std::size_t>(p)][static_cast<std::size_t>(q - 1)], p, q));

      ArmaModel m;
      try {
        m = fit_arma_impl(series, p, q, warm);
      } catch (const Error& e) {
        if (e.code() == errc::fit_failure || e.code() == errc::insufficient_data) {
          ++best.fits_failed;
          ++best.fits_tried;
          continue;
        }
        throw;
      }
      fitted[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = m;
      fit_ok[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = true;
      ++best.fits_tried;
      const double k = static_cast<double>(p + q + 2);
      const double value = crit == Criterion::AIC
                               ? -2.0 * m.loglik + 2.0 * k
                               : -2.0 * m.loglik + k * std::log(static_cast<double>(m.n_eff));
      const bool better =
          !have || value < best.criterion_value ||
          (value == best.criterion_value &&
           (p + q < best.p + best.q || (p + q == best.p + best.q && p < best.p)));
      if (better) {
        best.p = p;
        best.q = q;
        best.model = m;
        best.criterion_value = value;
        have = true;
      }
    }
  }
  if (!have) throw Error(errc::fit_failure, "select_arma: every candidate fit failed");
  return best;
}

double arma_forecast_one_step(const ArmaModel& model, const std::vector<double>& history) {
  const int p = model.p, q = model.q;
  if (history.size() < static_cast<std::size_t>(p))
    throw Error(errc::insufficient_data, "arma_forecast_one_step: history shorter than p");
  const int n = static_cast<int>(history.size());
  const double mu = model.intercept;

  std::vector<double> resid(history.size(), 0.0);
  for (int t = 0; t < n; ++t) {
    double e = history[static_cast<std::size_t>(t)] - mu;
    for (int i = 1; i <= p; ++i)
      if (t - i >= 0) e -= model.phi[static_cast<std::size_t>(i - 1)] *
                           (history[static_cast<std::size_t>(t - i)] - mu);
    for (int j = 1; j <= q; ++j)
      if (t - j >= 0) e -= model.theta[static_cast<std::size_t>(j - 1)] *
                           resid[static_cast<std::size_t>(t - j)];
    resid[static_cast<std::size_t>(t)] = e;
  }

  double pred = mu;
  for (int i = 1; i <= p; ++i)
    if (n - i >= 0) pred += model.phi[static_cast<std::size_t>(i - 1)] *
                            (history[static_cast<std::size_t>(n - i)] - mu);
  for (int j = 1; j <= q; ++j)
    if (n - j >= 0) pred += model.theta[static_cast<std::size_t>(j - 1)] *
                            resid[static_cast<std::size_t>(n - j)];
  return pred;
}

ArmaFilter::ArmaFilter(const ArmaModel& model, const std::vector<double>& history)
    : model_(model) {
  if (history.size() < static_cast<std::size_t>(model.p))
    throw Error(errc::insufficient_data, "ArmaFilter: history shorter than p");
  // Replay the zero-pre-sample recursion so the rolling state matches a
  // from-scratch recomputation exactly.
  std::vector<double> resid(history.size(), 0.0);
  const double mu = model_.intercept;
  for (std::size_t t = 0; t < history.size(); ++t) {
    double e = history[t] - mu;
    for (int i = 1; i <= model_.p; ++i)
      if (static_cast<int>(t) - i >= 0)
        e -= model_.phi[static_cast<std::size_t>(i - 1)] * (history[t - static_cast<std::size_t>(i)] - mu);
    for (int j = 1; j <= model_.q; ++j)
      if (static_cast<int>(t) - j >= 0)
        e -= model_.theta[static_cast<std::size_t>(j - 1)] * resid[t - static_cast<std::size_t>(j)];
    resid[t] = e;
  }
  for (int i = 0; i < model_.p && i < static_cast<int>(history.size()); ++i)
    recent_demeaned_.push_back(history[history.size() - 1 - static_cast<std::size_t>(i)] - mu);
  for (int j = 0; j < model_.q && j < static_cast<int>(resid.size()); ++j)
    recent_resid_.push_back(resid[resid.size() - 1 - static_cast<std::size_t>(j)]);
  while (static_cast<int>(recent_demeaned_.size()) < model_.p) recent_demeaned_.push_back(0.0);
  while (static_cast<int>(recent_resid_.size()) < model_.q) recent_resid_.push_back(0.0);
}

double ArmaFilter::forecast_next() const {
  double pred = model_.intercept;
  for (int i = 0; i < model_.p; ++i)
    pred += model_.phi[static_cast<std::size_t>(i)] * recent_demeaned_[static_cast<std::size_t>(i)];
  for (int j = 0; j < model_.q; ++j)
    pred += model_.theta[static_cast<std::size_t>(j)] * recent_resid_[static_cast<std::size_t>(j)];
  return pred;
}

void ArmaFilter::observe(double x) {
  const double e = x - forecast_next();
  if (model_.p > 0) {
    recent_demeaned_.push_front(x - model_.intercept);
    recent_demeaned_.pop_back();
  }
  if (model_.q > 0) {
    recent_resid_.push_front(e);
    recent_resid_.pop_back();
  }
}

}  // namespace ksf
