#include "ksf.h"

#include <algorithm>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ksf/arma.hpp"
#include "ksf/dataset.hpp"
#include "ksf/harness.hpp"
#include "ksf/kernels.hpp"
#include "ksf/kshmm.hpp"
#include "ksf/switching.hpp"

namespace {

thread_local std::string g_last_error;

ksf_status status_of(const ksf::Error& e) {
  switch (e.code()) {
    case ksf::errc::invalid_input:
      return KSF_ERR_INVALID;
    case ksf::errc::insufficient_data:
    case ksf::errc::degenerate_data:
    case ksf::errc::parse_error:
      return KSF_ERR_DATA;
    case ksf::errc::io_error:
      return KSF_ERR_IO;
    default:
      return KSF_ERR_COMPUTE;
  }
}

template <typename Fn>
ksf_status guard(Fn&& fn) {
  try {
    fn();
    return KSF_OK;
  } catch (const ksf::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KSF_ERR_COMPUTE;
  } catch (...) {
    g_last_error = "unknown error";
    return KSF_ERR_COMPUTE;
  }
}

ksf_status fail_invalid(const char* msg) {
  g_last_error = msg;
  return KSF_ERR_INVALID;
}

}  // namespace

struct ksf_series {
  ksf::WindSeries data;
};

struct ksf_model {
  std::shared_ptr<const ksf::KshmmModel> model;
};

struct ksf_filter {
  ksf::KshmmFilter filter;
  ksf::StabilityEnvelope env;
};

struct ksf_benchmark {
  std::vector<std::pair<ksf::WindSeries, ksf::WindSeries>> pairs;
  std::vector<std::string> methods = ksf::standard_method_names();
  ksf::BenchmarkOptions opts;
  ksf::Comparison comparison;
  bool ran = false;
};

extern "C" {

const char* ksf_last_error(void) { return g_last_error.c_str(); }

const char* ksf_version(void) { return "1.0.0"; }

/* ----- series ----- */

ksf_status ksf_series_load_csv(const char* path, const char* missing_policy, ksf_series** out) {
  if (!path || !out) return fail_invalid("load_csv: null argument");
  return guard([&] {
    ksf::CsvSchema schema;
    if (missing_policy && *missing_policy) {
      const std::string p = missing_policy;
      if (p == "error")
        schema.missing = ksf::MissingPolicy::Error;
      else if (p == "forward-fill")
        schema.missing = ksf::MissingPolicy::ForwardFill;
      else
        throw ksf::Error(ksf::errc::invalid_input, "unknown missing policy: " + p);
    }
    *out = new ksf_series{ksf::load_csv(path, schema)};
  });
}

ksf_status ksf_series_write_csv(const ksf_series* s, const char* path) {
  if (!s || !path) return fail_invalid("write_csv: null argument");
  return guard([&] { ksf::write_csv(s->data, path); });
}

ksf_status ksf_series_synth(const char* spec_json, int64_t length, uint64_t seed,
                            ksf_series** out) {
  if (!out) return fail_invalid("synth: null output");
  if (length < 1) return fail_invalid("synth: length must be positive");
  return guard([&] {
    const ksf::SynthSpec spec =
        spec_json && *spec_json ? ksf::parse_synth_spec_json(spec_json) : ksf::default_synth_spec();
    *out = new ksf_series{ksf::synth_hmm_series(spec, static_cast<std::size_t>(length), seed)};
  });
}

ksf_status ksf_series_split(const ksf_series* s, int64_t train_start, int64_t train_len,
                            int64_t test_start, int64_t test_len, ksf_series** train_out,
                            ksf_series** test_out) {
  if (!s || !train_out || !test_out) return fail_invalid("split: null argument");
  if (train_start < 0 || train_len < 0 || test_start < 0 || test_len < 0)
    return fail_invalid("split: negative window");
  return guard([&] {
    ksf::SplitSpec spec;
    spec.train_start = static_cast<std::size_t>(train_start);
    spec.train_len = static_cast<std::size_t>(train_len);
    spec.test_start = static_cast<std::size_t>(test_start);
    spec.test_len = static_cast<std::size_t>(test_len);
    auto [train, test] = ksf::split(s->data, spec);
    *train_out = new ksf_series{std::move(train)};
    *test_out = new ksf_series{std::move(test)};
  });
}

int64_t ksf_series_length(const ksf_series* s) {
  return s ? static_cast<int64_t>(s->data.size()) : 0;
}

ksf_status ksf_series_values(const ksf_series* s, double* buf, int64_t buflen) {
  if (!s || !buf) return fail_invalid("values: null argument");
  if (buflen < static_cast<int64_t>(s->data.size()))
    return fail_invalid("values: buffer too small");
  std::memcpy(buf, s->data.values.data(), sizeof(double) * s->data.size());
  return KSF_OK;
}

const char* ksf_series_id(const ksf_series* s) { return s ? s->data.turbine_id.c_str() : ""; }

ksf_status ksf_series_set_id(ksf_series* s, const char* id) {
  if (!s || !id) return fail_invalid("set_id: null argument");
  s->data.turbine_id = id;
  return KSF_OK;
}

void ksf_series_free(ksf_series* s) { delete s; }

/* ----- model ----- */

ksf_status ksf_model_train(const ksf_series* train, int rank, double sigma, double lambda,
                           ksf_model** out) {
  if (!train || !out) return fail_invalid("train: null argument");
  return guard([&] {
    ksf::KernelConfig cfg;
    cfg.bandwidth = sigma > 0.0 ? sigma : ksf::median_heuristic(train->data.values);
    auto model = std::make_shared<const ksf::KshmmModel>(
        ksf::train(ksf::reshape_sliding(train->data.values), cfg, rank, lambda));
    *out = new ksf_model{std::move(model)};
  });
}

ksf_status ksf_model_save(const ksf_model* m, const char* path) {
  if (!m || !path) return fail_invalid("model_save: null argument");
  return guard([&] { ksf::save_model(*m->model, path); });
}

ksf_status ksf_model_load(const char* path, ksf_model** out) {
  if (!path || !out) return fail_invalid("model_load: null argument");
  return guard([&] {
    *out = new ksf_model{std::make_shared<const ksf::KshmmModel>(ksf::load_model(path))};
  });
}

double ksf_model_sigma(const ksf_model* m) { return m ? m->model->kernel().bandwidth : 0.0; }
double ksf_model_lambda(const ksf_model* m) { return m ? m->model->lambda() : 0.0; }
int ksf_model_rank(const ksf_model* m) { return m ? m->model->rank() : 0; }
int64_t ksf_model_train_size(const ksf_model* m) { return m ? m->model->m() : 0; }

ksf_status ksf_model_eigenvalues(const ksf_model* m, double* buf, int buflen) {
  if (!m || !buf) return fail_invalid("eigenvalues: null argument");
  if (buflen < m->model->rank()) return fail_invalid("eigenvalues: buffer too small");
  for (int i = 0; i < m->model->rank(); ++i) buf[i] = m->model->omega()(i);
  return KSF_OK;
}

void ksf_model_free(ksf_model* m) { delete m; }

/* ----- filter ----- */

ksf_status ksf_filter_new(const ksf_model* m, ksf_filter** out) {
  if (!m || !out) return fail_invalid("filter_new: null argument");
  return guard([&] {
    *out = new ksf_filter{ksf::KshmmFilter(m->model), ksf::envelope(m->model->x2())};
  });
}

ksf_status ksf_filter_observe(ksf_filter* f, double x) {
  if (!f) return fail_invalid("filter_observe: null filter");
  return guard([&] { f->filter.observe(x); });
}

ksf_status ksf_filter_forecast(ksf_filter* f, ksf_forecast* out) {
  if (!f || !out) return fail_invalid("filter_forecast: null argument");
  return guard([&] {
    const ksf::GuardedStep gs = ksf::guarded_forecast(f->filter, f->env);
    out->point = gs.point;
    out->switched = gs.switched ? 1 : 0;
    if (gs.failed) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out->mean = nan;
      out->variance = nan;
      out->mode = nan;
      out->mode_converged = 0;
      out->stable = 0;
    } else {
      out->mean = gs.dist.mean;
      out->variance = gs.dist.variance;
      out->mode = gs.dist.mode;
      out->mode_converged = gs.dist.mode_converged ? 1 : 0;
      out->stable = gs.dist.stable ? 1 : 0;
    }
  });
}

void ksf_filter_free(ksf_filter* f) { delete f; }

/* ----- diagnostics ----- */

ksf_status ksf_diagnose_bandwidth(const ksf_series* s, double* sigma_out) {
  if (!s || !sigma_out) return fail_invalid("diagnose: null argument");
  return guard([&] { *sigma_out = ksf::median_heuristic(s->data.values); });
}

ksf_status ksf_diagnose_cutoffs(const ksf_series* s, int cap, int* pacf_cutoff_out,
                                int* acf_cutoff_out) {
  if (!s || !pacf_cutoff_out || !acf_cutoff_out) return fail_invalid("diagnose: null argument");
  if (cap <= 0) cap = 24;
  return guard([&] {
    const auto& x = s->data.values;
    const int max_lag = std::min<int>(cap, static_cast<int>(x.size()) - 2);
    if (max_lag < 1)
      throw ksf::Error(ksf::errc::insufficient_data, "diagnose: series too short");
    *pacf_cutoff_out = ksf::cutoff_lag(ksf::pacf(x, max_lag), x.size(), cap);
    *acf_cutoff_out = ksf::cutoff_lag(ksf::acf(x, max_lag), x.size(), cap);
  });
}

/* ----- benchmark ----- */

ksf_benchmark* ksf_benchmark_new(void) { return new ksf_benchmark; }

ksf_status ksf_benchmark_add_pair(ksf_benchmark* b, const ksf_series* train,
                                  const ksf_series* test) {
  if (!b || !train || !test) return fail_invalid("benchmark: null argument");
  return guard([&] { b->pairs.emplace_back(train->data, test->data); });
}

ksf_status ksf_benchmark_set_methods(ksf_benchmark* b, const char* methods_csv) {
  if (!b) return fail_invalid("benchmark: null handle");
  return guard([&] {
    if (!methods_csv || !*methods_csv) {
      b->methods = ksf::standard_method_names();
      return;
    }
    std::vector<std::string> names;
    std::string cur;
    for (const char* p = methods_csv;; ++p) {
      if (*p == ',' || *p == '\0') {
        if (!cur.empty()) names.push_back(cur);
        cur.clear();
        if (*p == '\0') break;
      } else {
        cur.push_back(*p);
      }
    }
    if (names.empty()) throw ksf::Error(ksf::errc::invalid_input, "benchmark: empty method list");
    for (const auto& n : names) ksf::make_method(n, b->opts);  // validates names
    b->methods = names;
  });
}

ksf_status ksf_benchmark_set_kshmm(ksf_benchmark* b, int rank, double sigma, double lambda) {
  if (!b) return fail_invalid("benchmark: null handle");
  if (rank < 1) return fail_invalid("benchmark: rank must be >= 1");
  b->opts.kshmm_rank = rank;
  b->opts.kshmm_sigma = sigma;
  b->opts.kshmm_lambda = lambda;
  return KSF_OK;
}

ksf_status ksf_benchmark_set_svr_epsilon(ksf_benchmark* b, double epsilon) {
  if (!b) return fail_invalid("benchmark: null handle");
  if (epsilon < 0.0) return fail_invalid("benchmark: epsilon must be >= 0");
  b->opts.svr_epsilon = epsilon;
  return KSF_OK;
}

ksf_status ksf_benchmark_set_arma_cap(ksf_benchmark* b, int cap) {
  if (!b) return fail_invalid("benchmark: null handle");
  if (cap < 0) return fail_invalid("benchmark: cap must be >= 0");
  b->opts.arma_cutoff_cap = cap;
  return KSF_OK;
}

ksf_status ksf_benchmark_set_jobs(ksf_benchmark* b, int jobs) {
  if (!b) return fail_invalid("benchmark: null handle");
  b->opts.jobs = jobs;
  return KSF_OK;
}

ksf_status ksf_benchmark_run(ksf_benchmark* b) {
  if (!b) return fail_invalid("benchmark: null handle");
  return guard([&] {
    std::vector<ksf::MethodSpec> specs;
    for (const auto& name : b->methods) specs.push_back(ksf::make_method(name, b->opts));
    b->comparison = ksf::compare(specs, b->pairs, b->opts.jobs);
    b->ran = true;
  });
}

int ksf_benchmark_num_methods(const ksf_benchmark* b) {
  return b ? static_cast<int>(b->methods.size()) : 0;
}

int ksf_benchmark_num_series(const ksf_benchmark* b) {
  return b ? static_cast<int>(b->pairs.size()) : 0;
}

const char* ksf_benchmark_method_name(const ksf_benchmark* b, int method) {
  if (!b || method < 0 || method >= static_cast<int>(b->methods.size())) return "";
  return b->methods[static_cast<std::size_t>(method)].c_str();
}

const char* ksf_benchmark_series_id(const ksf_benchmark* b, int series) {
  if (!b || series < 0 || series >= static_cast<int>(b->pairs.size())) return "";
  return b->pairs[static_cast<std::size_t>(series)].second.turbine_id.c_str();
}

ksf_status ksf_benchmark_final_rmse(const ksf_benchmark* b, int series, int method, double* out) {
  if (!b || !out) return fail_invalid("benchmark: null argument");
  if (!b->ran) return fail_invalid("benchmark: run it first");
  if (series < 0 || series >= static_cast<int>(b->pairs.size()) || method < 0 ||
      method >= static_cast<int>(b->methods.size()))
    return fail_invalid("benchmark: index out of range");
  *out = b->comparison.final_rmse(static_cast<std::size_t>(series),
                                  static_cast<std::size_t>(method));
  return KSF_OK;
}

ksf_status ksf_benchmark_write_reports(const ksf_benchmark* b, const char* base_path,
                                       const char* format) {
  if (!b || !base_path) return fail_invalid("benchmark: null argument");
  if (!b->ran) return fail_invalid("benchmark: run it first");
  const std::string fmt = format ? format : "both";
  return guard([&] {
    if (fmt == "csv" || fmt == "both")
      ksf::emit_report(b->comparison, ksf::ReportFormat::Csv, base_path);
    if (fmt == "markdown" || fmt == "both")
      ksf::emit_report(b->comparison, ksf::ReportFormat::Markdown, base_path);
    if (fmt != "csv" && fmt != "markdown" && fmt != "both")
      throw ksf::Error(ksf::errc::invalid_input, "benchmark: unknown report format " + fmt);
  });
}

void ksf_benchmark_free(ksf_benchmark* b) { delete b; }

}  // extern "C"
