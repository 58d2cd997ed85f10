#include "ksf/switching.hpp"

#include <algorithm>
#include <cmath>

namespace ksf {

StabilityEnvelope envelope(const std::vector<double>& x2) {
  if (x2.size() < 2) throw Error(errc::insufficient_data, "envelope: need at least 2 points");
  StabilityEnvelope env;
  const auto [lo, hi] = std::minmax_element(x2.begin(), x2.end());
  env.min_x2 = *lo;
  env.max_x2 = *hi;
  double mean = 0.0;
  for (double v : x2) mean += v;
  mean /= static_cast<double>(x2.size());
  double ss = 0.0;
  for (double v : x2) ss += (v - mean) * (v - mean);
  env.var_x2 = ss / static_cast<double>(x2.size());
  return env;
}

bool is_stable(double mean, double variance, const StabilityEnvelope& env) {
  if (!std::isfinite(mean) || !std::isfinite(variance)) return false;
  if (!(env.min_x2 < mean && mean < env.max_x2)) return false;
  if (variance < 0.0) return false;
  return variance < env.var_x2;
}

double kshmm_pst_forecast(const ForecastDistribution& forecast, double last_obs,
                          const StabilityEnvelope& env) {
  if (is_stable(forecast.mean, forecast.variance, env) && forecast.mode_converged &&
      std::isfinite(forecast.mode))
    return forecast.mode;
  return last_obs;
}

GuardedStep guarded_forecast(KshmmFilter& filter, const StabilityEnvelope& env) {
  GuardedStep step;
  const double last_obs = filter.last_observation();
  try {
    step.dist = filter.distribution();
    step.dist.stable =
        is_stable(step.dist.mean, step.dist.variance, env) && step.dist.mode_converged;
    step.point = kshmm_pst_forecast(step.dist, last_obs, env);
    step.switched = !step.dist.stable;
  } catch (const Error&) {
    step.failed = true;
    step.switched = true;
    step.point = last_obs;
  }
  return step;
}

}  // namespace ksf
