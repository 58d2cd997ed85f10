#pragma once

#include <deque>
#include <vector>

#include "ksf/errors.hpp"

namespace ksf {

// ARMA(p, q) in mean form:
//   (x_t - mu) = sum phi_i (x_{t-i} - mu) + e_t + sum theta_j e_{t-j}
// intercept stores the fitted process mean mu. loglik is the conditional
// (zero pre-sample) Gaussian log-likelihood.
struct ArmaModel {
  int p = 0;
  int q = 0;
  std::vector<double> phi;
  std::vector<double> theta;
  double intercept = 0.0;
  double sigma2 = 0.0;
  double loglik = 0.0;
  long n_eff = 0;
};

enum class Criterion { AIC, BIC };

// Biased sample autocorrelation; acf[0] = 1.
std::vector<double> acf(const std::vector<double>& series, int max_lag);

// Partial autocorrelation via the Durbin-Levinson recursion; pacf[0] = 1.
std::vector<double> pacf(const std::vector<double>& series, int max_lag);

// Largest lag k <= cap with |values[k]| > 1.96/sqrt(n); 0 when none.
int cutoff_lag(const std::vector<double>& values, std::size_t n, int cap = 24);

// Conditional-sum-of-squares fit: zero pre-sample recursion from t = 0,
// Hannan-Rissanen start, Nelder-Mead refinement, stationarity and
// invertibility enforced by penalty. Throws fit_failure on non-convergence.
ArmaModel fit_arma(const std::vector<double>& series, int p, int q);

struct ArmaSelection {
  int p = 0;
  int q = 0;
  ArmaModel model;
  double criterion_value = 0.0;
  int fits_tried = 0;
  int fits_failed = 0;
};

// Exhaustive (p, q) grid up to the caps; AIC = -2l + 2k, BIC = -2l + k ln n,
// k = p + q + 2. Ties prefer smaller p + q, then smaller p.
ArmaSelection select_arma(const std::vector<double>& series, int p_max, int q_max, Criterion crit);

// One-step conditional expectation after running the residual recursion over
// the full history (zero pre-sample values).
double arma_forecast_one_step(const ArmaModel& model, const std::vector<double>& history);

// Incremental residual state for rolling forecasts: equivalent to re-running
// arma_forecast_one_step on the growing history.
class ArmaFilter {
 public:
  ArmaFilter(const ArmaModel& model, const std::vector<double>& history);

  void observe(double x);
  double forecast_next() const;

 private:
  ArmaModel model_;
  std::deque<double> recent_demeaned_;  // newest in front, length p
  std::deque<double> recent_resid_;     // newest in front, length q
};

// Spectral radius of the lag-polynomial companion matrix; < 1 means the
// corresponding AR (or inverted MA) recursion is stable.
double companion_spectral_radius(const std::vector<double>& coeffs);

}  // namespace ksf
