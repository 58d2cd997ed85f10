#pragma once

#include <vector>

#include "ksf/kshmm.hpp"

namespace ksf {

// Range and dispersion of the training midpoints; the stability test
// compares each forecast against these.
struct StabilityEnvelope {
  double min_x2 = 0.0;
  double max_x2 = 0.0;
  double var_x2 = 0.0;  // population variance, divisor m
};

StabilityEnvelope envelope(const std::vector<double>& x2);

// Stable iff min < mean < max (strict) and 0 <= variance < var_x2
// (strict). Negative predictive variance counts as unstable.
bool is_stable(double mean, double variance, const StabilityEnvelope& env);

// Persistence switch: the KSHMM mode when the forecast is stable and the
// mode iteration converged, the previous observation otherwise. Total.
double kshmm_pst_forecast(const ForecastDistribution& forecast, double last_obs,
                          const StabilityEnvelope& env);

// One guarded filtering step: readout plus switch decision, never throws.
struct GuardedStep {
  double point = 0.0;    // persistence-switched point forecast
  bool switched = false; // persistence replaced the KSHMM mode
  bool failed = false;   // pipeline raised unstable; dist is not meaningful
  ForecastDistribution dist;
};

GuardedStep guarded_forecast(KshmmFilter& filter, const StabilityEnvelope& env);

}  // namespace ksf
