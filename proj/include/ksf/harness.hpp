#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ksf/dataset.hpp"
#include "ksf/errors.hpp"

namespace ksf {

// Point forecast plus per-step diagnostics. Methods without a predictive
// distribution report their point value as pred_mean and NaN variance.
struct ForecastStep {
  double value = 0.0;
  double pred_mean = std::numeric_limits<double>::quiet_NaN();
  double pred_var = std::numeric_limits<double>::quiet_NaN();
  bool switched = false;
  bool mode_converged = true;
  bool failed = false;
};

// Rolling one-step forecaster. The harness calls forecast() strictly before
// revealing the realized value through step(), so a forecast at test time t
// can only depend on the training series and the first t test observations.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  virtual void init(const WindSeries& train) = 0;
  virtual ForecastStep forecast() = 0;
  virtual void step(double observed) = 0;
};

struct EvalResult {
  std::string method;
  std::string series_id;
  std::vector<double> predictions;
  std::vector<double> actuals;
  std::vector<double> rmse_curve;  // RMSE(t), t = 1..T
  double final_rmse = 0.0;
  std::vector<ForecastStep> steps;
};

EvalResult rolling_evaluate(Forecaster& f, const WindSeries& train, const WindSeries& test);

using ForecasterFactory = std::function<std::unique_ptr<Forecaster>()>;

struct MethodSpec {
  std::string name;
  ForecasterFactory make;
};

struct BenchmarkOptions {
  int kshmm_rank = 6;
  double kshmm_sigma = 0.0;   // <= 0: median heuristic
  double kshmm_lambda = 0.0;  // <= 0: 0.01/sqrt(m)
  double svr_epsilon = 0.1;
  int arma_cutoff_cap = 24;
  int jobs = 0;  // <= 0: hardware concurrency
};

// Factories for the six standard methods; names: pst, arma-aic, arma-bic,
// svr, kshmm, kshmm-pst.
MethodSpec make_method(const std::string& name, const BenchmarkOptions& opts);
std::vector<std::string> standard_method_names();

struct Comparison {
  std::vector<std::string> methods;
  std::vector<std::string> series_ids;
  std::vector<std::vector<EvalResult>> results;  // [series][method]

  double final_rmse(std::size_t series, std::size_t method) const {
    return results[series][method].final_rmse;
  }
  // first index attaining the row minimum
  std::size_t best_method(std::size_t series) const;
};

// Evaluates every (series, method) pair; pairs run in parallel, assembly
// order is fixed so results are deterministic regardless of jobs.
Comparison compare(const std::vector<MethodSpec>& methods,
                   const std::vector<std::pair<WindSeries, WindSeries>>& pairs, int jobs = 0);

enum class ReportFormat { Csv, Markdown };

// Csv: <base>_<series>_<method>.csv per pair (columns t, actual, predicted,
// rmse_t, switched, mode_converged, pred_mean, pred_var) plus
// <base>_summary.csv. Markdown: <base>.md, one row per series, one column
// per method, minimum bolded once per row.
void emit_report(const Comparison& comparison, ReportFormat format, const std::string& base_path);

}  // namespace ksf
