#include "ksf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "ksf/arma.hpp"
#include "ksf/kshmm.hpp"
#include "ksf/svr.hpp"
#include "ksf/switching.hpp"

namespace ksf {

EvalResult rolling_evaluate(Forecaster& f, const WindSeries& train, const WindSeries& test) {
  if (train.size() == 0 || test.size() == 0)
    throw Error(errc::invalid_input, "rolling_evaluate: empty series");
  f.init(train);

  EvalResult res;
  res.method = f.name();
  res.series_id = test.turbine_id;
  const std::size_t T = test.size();
  res.predictions.reserve(T);
  res.actuals.reserve(T);
  res.rmse_curve.reserve(T);
  res.steps.reserve(T);

  double sse = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const ForecastStep step = f.forecast();
    const double actual = test.values[t];
    f.step(actual);

    res.steps.push_back(step);
    res.predictions.push_back(step.value);
    res.actuals.push_back(actual);
    const double err = actual - step.value;
    sse += err * err;
    res.rmse_curve.push_back(std::sqrt(sse / static_cast<double>(t + 1)));
  }
  res.final_rmse = res.rmse_curve.empty() ? 0.0 : res.rmse_curve.back();
  return res;
}

// ---------------------------------------------------------------------------
// Standard forecasters

namespace {

class PstForecaster final : public Forecaster {
 public:
  std::string name() const override { return "pst"; }
  void init(const WindSeries& train) override {
    if (train.size() == 0) throw Error(errc::invalid_input, "pst: empty training series");
    last_ = train.values.back();
  }
  ForecastStep forecast() override {
    ForecastStep s;
    s.value = last_;
    s.pred_mean = last_;
    return s;
  }
  void step(double observed) override { last_ = observed; }

 private:
  double last_ = 0.0;
};

class ArmaForecaster final : public Forecaster {
 public:
  ArmaForecaster(Criterion crit, int cap) : crit_(crit), cap_(cap) {}
  std::string name() const override { return crit_ == Criterion::AIC ? "arma-aic" : "arma-bic"; }

  void init(const WindSeries& train) override {
    const std::vector<double>& x = train.values;
    const int max_lag = std::min<int>(cap_, static_cast<int>(x.size()) - 2);
    const int p_max = cutoff_lag(pacf(x, max_lag), x.size(), cap_);
    const int q_max = cutoff_lag(acf(x, max_lag), x.size(), cap_);
    selection_ = select_arma(x, p_max, q_max, crit_);
    filter_ = std::make_unique<ArmaFilter>(selection_.model, x);
  }

  ForecastStep forecast() override {
    ForecastStep s;
    s.value = filter_->forecast_next();
    s.pred_mean = s.value;
    return s;
  }
  void step(double observed) override { filter_->observe(observed); }

 private:
  Criterion crit_;
  int cap_;
  ArmaSelection selection_;
  std::unique_ptr<ArmaFilter> filter_;
};

class SvrForecaster final : public Forecaster {
 public:
  SvrForecaster(double epsilon, int cap) : epsilon_(epsilon), cap_(cap) {}
  std::string name() const override { return "svr"; }

  void init(const WindSeries& train) override {
    const std::vector<double>& x = train.values;
    const int max_lag = std::min<int>(cap_, static_cast<int>(x.size()) - 2);
    // at least one lag even when the pacf never leaves the band
    p_max_ = std::max(1, cutoff_lag(pacf(x, max_lag), x.size(), cap_));
    grid_ = svr_grid_search(x, p_max_, epsilon_);
    window_.assign(x.end() - p_max_, x.end());
  }

  ForecastStep forecast() override {
    Eigen::VectorXd lags(p_max_);
    for (int i = 0; i < p_max_; ++i) lags(i) = window_[static_cast<std::size_t>(i)];
    ForecastStep s;
    s.value = svr_predict(grid_.model, lags);
    s.pred_mean = s.value;
    return s;
  }

  void step(double observed) override {
    window_.erase(window_.begin());
    window_.push_back(observed);
  }

 private:
  double epsilon_;
  int cap_;
  int p_max_ = 1;
  SvrGridResult grid_;
  std::vector<double> window_;
};

class KshmmForecasterBase : public Forecaster {
 public:
  KshmmForecasterBase(int rank, double sigma, double lambda)
      : rank_(rank), sigma_(sigma), lambda_(lambda) {}

  void init(const WindSeries& train) override {
    const std::vector<double>& x = train.values;
    KernelConfig cfg;
    cfg.bandwidth = sigma_ > 0.0 ? sigma_ : median_heuristic(x);
    model_ = std::make_shared<const KshmmModel>(ksf::train(reshape_sliding(x), cfg, rank_, lambda_));
    env_ = envelope(model_->x2());
    filter_ = std::make_unique<KshmmFilter>(model_);
  }

  void step(double observed) override { filter_->observe(observed); }

 protected:
  int rank_;
  double sigma_, lambda_;
  std::shared_ptr<const KshmmModel> model_;
  StabilityEnvelope env_;
  std::unique_ptr<KshmmFilter> filter_;
};

// Unswitched KSHMM: the point forecast is the mode. A hard unstable step is
// recorded as failed and falls back to the previous observation so the
// evaluation stays defined.
class KshmmForecaster final : public KshmmForecasterBase {
 public:
  using KshmmForecasterBase::KshmmForecasterBase;
  std::string name() const override { return "kshmm"; }

  ForecastStep forecast() override {
    ForecastStep s;
    try {
      const ForecastDistribution fd = filter_->distribution();
      s.value = fd.mode;
      s.pred_mean = fd.mean;
      s.pred_var = fd.variance;
      s.mode_converged = fd.mode_converged;
    } catch (const Error&) {
      s.failed = true;
      s.value = filter_->last_observation();
    }
    return s;
  }
};

class KshmmPstForecaster final : public KshmmForecasterBase {
 public:
  using KshmmForecasterBase::KshmmForecasterBase;
  std::string name() const override { return "kshmm-pst"; }

  ForecastStep forecast() override {
    const GuardedStep gs = guarded_forecast(*filter_, env_);
    ForecastStep s;
    s.value = gs.point;
    s.switched = gs.switched;
    s.failed = gs.failed;
    if (!gs.failed) {
      s.pred_mean = gs.dist.mean;
      s.pred_var = gs.dist.variance;
      s.mode_converged = gs.dist.mode_converged;
    }
    return s;
  }
};

}  // namespace

std::vector<std::string> standard_method_names() {
  return {"pst", "arma-aic", "arma-bic", "svr", "kshmm", "kshmm-pst"};
}

MethodSpec make_method(const std::string& name, const BenchmarkOptions& opts) {
  if (name == "pst")
    return {name, [] { return std::make_unique<PstForecaster>(); }};
  if (name == "arma-aic")
    return {name, [opts] { return std::make_unique<ArmaForecaster>(Criterion::AIC, opts.arma_cutoff_cap); }};
  if (name == "arma-bic")
    return {name, [opts] { return std::make_unique<ArmaForecaster>(Criterion::BIC, opts.arma_cutoff_cap); }};
  if (name == "svr")
    return {name, [opts] { return std::make_unique<SvrForecaster>(opts.svr_epsilon, opts.arma_cutoff_cap); }};
  if (name == "kshmm")
    return {name, [opts] {
              return std::make_unique<KshmmForecaster>(opts.kshmm_rank, opts.kshmm_sigma,
                                                       opts.kshmm_lambda);
            }};
  if (name == "kshmm-pst")
    return {name, [opts] {
              return std::make_unique<KshmmPstForecaster>(opts.kshmm_rank, opts.kshmm_sigma,
                                                          opts.kshmm_lambda);
            }};
  throw Error(errc::invalid_input, "unknown method: " + name);
}

std::size_t Comparison::best_method(std::size_t series) const {
  const auto& row = results[series];
  std::size_t best = 0;
  for (std::size_t m = 1; m < row.size(); ++m)
    if (row[m].final_rmse < row[best].final_rmse) best = m;
  return best;
}

Comparison compare(const std::vector<MethodSpec>& methods,
                   const std::vector<std::pair<WindSeries, WindSeries>>& pairs, int jobs) {
  if (methods.empty()) throw Error(errc::invalid_input, "compare: no methods");
  if (pairs.empty()) throw Error(errc::invalid_input, "compare: no series");

  Comparison cmp;
  for (const auto& m : methods) cmp.methods.push_back(m.name);
  for (const auto& p : pairs) cmp.series_ids.push_back(p.second.turbine_id);
  cmp.results.assign(pairs.size(), std::vector<EvalResult>(methods.size()));

  struct Task {
    std::size_t series, method;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < pairs.size(); ++s)
    for (std::size_t m = 0; m < methods.size(); ++m) tasks.push_back({s, m});

  int nthreads = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min<int>(nthreads, static_cast<int>(tasks.size())));

  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(tasks.size());
  const auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      const Task& task = tasks[k];
      try {
        auto f = methods[task.method].make();
        cmp.results[task.series][task.method] =
            rolling_evaluate(*f, pairs[task.series].first, pairs[task.series].second);
      } catch (const std::exception& e) {
        errors[k] = std::string(methods[task.method].name) + " on " +
                    pairs[task.series].second.turbine_id + ": " + e.what();
      }
    }
  };

  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (const auto& err : errors)
    if (!err.empty()) throw Error(errc::fit_failure, "compare: " + err);
  return cmp;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void write_step_csv(const EvalResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(errc::io_error, "cannot open for writing: " + path);
  out << "t,actual,predicted,rmse_t,switched,mode_converged,pred_mean,pred_var\n";
  for (std::size_t t = 0; t < r.predictions.size(); ++t) {
    const ForecastStep& s = r.steps[t];
    out << (t + 1) << ',' << fmt17(r.actuals[t]) << ',' << fmt17(r.predictions[t]) << ','
        << fmt17(r.rmse_curve[t]) << ',' << (s.switched ? 1 : 0) << ','
        << (s.mode_converged ? 1 : 0) << ',' << fmt17(s.pred_mean) << ',' << fmt17(s.pred_var)
        << '\n';
  }
  if (!out) throw Error(errc::io_error, "write failed: " + path);
}

}  // namespace

void emit_report(const Comparison& cmp, ReportFormat format, const std::string& base_path) {
  if (format == ReportFormat::Csv) {
    for (std::size_t s = 0; s < cmp.series_ids.size(); ++s)
      for (std::size_t m = 0; m < cmp.methods.size(); ++m)
        write_step_csv(cmp.results[s][m],
                       base_path + "_" + cmp.series_ids[s] + "_" + cmp.methods[m] + ".csv");

    const std::string summary = base_path + "_summary.csv";
    std::ofstream out(summary);
    if (!out) throw Error(errc::io_error, "cannot open for writing: " + summary);
    out << "series";
    for (const auto& m : cmp.methods) out << ',' << m;
    out << ",best\n";
    for (std::size_t s = 0; s < cmp.series_ids.size(); ++s) {
      out << cmp.series_ids[s];
      for (std::size_t m = 0; m < cmp.methods.size(); ++m)
        out << ',' << fmt17(cmp.final_rmse(s, m));
      out << ',' << cmp.methods[cmp.best_method(s)] << '\n';
    }
    if (!out) throw Error(errc::io_error, "write failed: " + summary);
    return;
  }

  const std::string path = base_path + ".md";
  std::ofstream out(path);
  if (!out) throw Error(errc::io_error, "cannot open for writing: " + path);
  out << "| Series |";
  for (const auto& m : cmp.methods) out << ' ' << m << " |";
  out << "\n|---|";
  for (std::size_t m = 0; m < cmp.methods.size(); ++m) out << "---|";
  out << '\n';
  for (std::size_t s = 0; s < cmp.series_ids.size(); ++s) {
    const std::size_t best = cmp.best_method(s);
    out << "| " << cmp.series_ids[s] << " |";
    for (std::size_t m = 0; m < cmp.methods.size(); ++m) {
      const std::string v = fmt3(cmp.final_rmse(s, m));
      out << ' ' << (m == best ? "**" + v + "**" : v) << " |";
    }
    out << '\n';
  }
  if (!out) throw Error(errc::io_error, "write failed: " + path);
}

}  // namespace ksf
