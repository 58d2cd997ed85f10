// ksf command-line driver. Talks to the core exclusively through the C API
// in ksf.h, the same surface external bindings would use.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ksf.h"

namespace {

// Exit codes: 0 success, 1 config error, 2 data error, 3 compute error.
int exit_code(ksf_status st) {
  switch (st) {
    case KSF_OK:
      return 0;
    case KSF_ERR_INVALID:
      return 1;
    case KSF_ERR_DATA:
    case KSF_ERR_IO:
      return 2;
    default:
      return 3;
  }
}

[[noreturn]] void die(ksf_status st, const std::string& context) {
  std::fprintf(stderr, "error: %s: %s\n", context.c_str(), ksf_last_error());
  std::exit(exit_code(st));
}

void check(ksf_status st, const std::string& context) {
  if (st != KSF_OK) die(st, context);
}

struct SeriesGuard {
  ksf_series* s = nullptr;
  ~SeriesGuard() { ksf_series_free(s); }
};

struct ModelGuard {
  ksf_model* m = nullptr;
  ~ModelGuard() { ksf_model_free(m); }
};

ksf_series* load_series(const std::string& path, const std::string& missing_policy) {
  ksf_series* s = nullptr;
  check(ksf_series_load_csv(path.c_str(), missing_policy.c_str(), &s), "loading " + path);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "error: cannot open %s\n", path.c_str());
    std::exit(2);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonOpts {
  int rank = 6;
  double sigma = 0.0;
  double lambda = 0.0;
  double epsilon = 0.1;
  int arma_cap = 24;
  std::string missing_policy = "error";
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind-speed forecasting benchmark: kernel spectral HMM with persistence "
               "switching, plus persistence, ARMA, and SVR baselines"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file (flags win)");

  CommonOpts opts;

  // --- benchmark ---
  auto* bench = app.add_subcommand("benchmark", "Rolling one-step evaluation of several methods");
  bench->configurable();
  std::vector<std::string> train_paths, test_paths;
  std::string methods = "pst,arma-aic,arma-bic,svr,kshmm,kshmm-pst";
  std::string out_base = "report";
  std::string format = "both";
  int jobs = 0;
  bench->add_option("--train-csv", train_paths, "Training series CSV (repeatable)")->required();
  bench->add_option("--test-csv", test_paths, "Test series CSV (repeatable, paired in order)")
      ->required();
  bench->add_option("--methods", methods, "Comma-separated method list");
  bench->add_option("--rank", opts.rank, "KSHMM rank N");
  bench->add_option("--sigma", opts.sigma, "Kernel bandwidth (<=0: median heuristic)");
  bench->add_option("--lambda", opts.lambda, "Regularization (<=0: 0.01/sqrt(m))");
  bench->add_option("--epsilon", opts.epsilon, "SVR tube width");
  bench->add_option("--arma-cap", opts.arma_cap, "ACF/PACF cutoff cap");
  bench->add_option("--missing", opts.missing_policy, "Missing-data policy: error|forward-fill");
  bench->add_option("--out", out_base, "Report base path");
  bench->add_option("--format", format, "Report format: csv|markdown|both");
  bench->add_option("--jobs", jobs, "Parallel (series, method) evaluations (0: all cores)");

  // --- forecast ---
  auto* fc = app.add_subcommand("forecast", "One-step forecast from a model or training data");
  fc->configurable();
  std::string fc_model_path, fc_train_path, fc_obs_path, fc_save_model;
  fc->add_option("--model", fc_model_path, "Serialized model artifact");
  fc->add_option("--train-csv", fc_train_path, "Training series CSV (trains a fresh model)");
  fc->add_option("--obs-csv", fc_obs_path, "Observed test prefix to filter through");
  fc->add_option("--save-model", fc_save_model, "Write the trained model here");
  fc->add_option("--rank", opts.rank, "KSHMM rank N");
  fc->add_option("--sigma", opts.sigma, "Kernel bandwidth (<=0: median heuristic)");
  fc->add_option("--lambda", opts.lambda, "Regularization (<=0: 0.01/sqrt(m))");
  fc->add_option("--missing", opts.missing_policy, "Missing-data policy: error|forward-fill");

  // --- diagnose ---
  auto* diag = app.add_subcommand("diagnose", "Print bandwidth, lambda, spectrum, ACF/PACF cutoffs");
  diag->configurable();
  std::string diag_train_path;
  diag->add_option("--train-csv", diag_train_path, "Training series CSV")->required();
  diag->add_option("--rank", opts.rank, "KSHMM rank N");
  diag->add_option("--sigma", opts.sigma, "Kernel bandwidth (<=0: median heuristic)");
  diag->add_option("--lambda", opts.lambda, "Regularization (<=0: 0.01/sqrt(m))");
  diag->add_option("--arma-cap", opts.arma_cap, "ACF/PACF cutoff cap");
  diag->add_option("--missing", opts.missing_policy, "Missing-data policy: error|forward-fill");

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "Emit a synthetic hidden-Markov fixture CSV");
  synth->configurable();
  std::string synth_out, synth_spec_path;
  long long synth_length = 700;
  unsigned long long seed = 1;
  synth->add_option("--out", synth_out, "Output CSV path")->required();
  synth->add_option("--length", synth_length, "Series length");
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--spec", synth_spec_path, "JSON spec (default: built-in two-state chain)");

  CLI11_PARSE(app, argc, argv);

  if (bench->parsed()) {
    if (train_paths.size() != test_paths.size()) {
      std::fprintf(stderr, "error: --train-csv and --test-csv counts differ\n");
      return 1;
    }
    ksf_benchmark* b = ksf_benchmark_new();
    check(ksf_benchmark_set_methods(b, methods.c_str()), "configuring methods");
    check(ksf_benchmark_set_kshmm(b, opts.rank, opts.sigma, opts.lambda), "configuring kshmm");
    check(ksf_benchmark_set_svr_epsilon(b, opts.epsilon), "configuring svr");
    check(ksf_benchmark_set_arma_cap(b, opts.arma_cap), "configuring arma");
    check(ksf_benchmark_set_jobs(b, jobs), "configuring jobs");
    for (std::size_t i = 0; i < train_paths.size(); ++i) {
      SeriesGuard train{load_series(train_paths[i], opts.missing_policy)};
      SeriesGuard test{load_series(test_paths[i], opts.missing_policy)};
      check(ksf_benchmark_add_pair(b, train.s, test.s), "adding series pair");
    }
    check(ksf_benchmark_run(b), "running benchmark");
    check(ksf_benchmark_write_reports(b, out_base.c_str(), format.c_str()), "writing reports");
    const int ns = ksf_benchmark_num_series(b), nm = ksf_benchmark_num_methods(b);
    for (int s = 0; s < ns; ++s) {
      for (int m = 0; m < nm; ++m) {
        double rmse = 0.0;
        check(ksf_benchmark_final_rmse(b, s, m, &rmse), "reading results");
        std::printf("%s %s final_rmse %.6f\n", ksf_benchmark_series_id(b, s),
                    ksf_benchmark_method_name(b, m), rmse);
      }
    }
    ksf_benchmark_free(b);
    return 0;
  }

  if (fc->parsed()) {
    ModelGuard model;
    if (!fc_model_path.empty()) {
      check(ksf_model_load(fc_model_path.c_str(), &model.m), "loading model");
    } else if (!fc_train_path.empty()) {
      SeriesGuard train{load_series(fc_train_path, opts.missing_policy)};
      check(ksf_model_train(train.s, opts.rank, opts.sigma, opts.lambda, &model.m),
            "training model");
    } else {
      std::fprintf(stderr, "error: forecast needs --model or --train-csv\n");
      return 1;
    }
    if (!fc_save_model.empty())
      check(ksf_model_save(model.m, fc_save_model.c_str()), "saving model");

    ksf_filter* filter = nullptr;
    check(ksf_filter_new(model.m, &filter), "creating filter");
    if (!fc_obs_path.empty()) {
      SeriesGuard obs{load_series(fc_obs_path, opts.missing_policy)};
      const int64_t n = ksf_series_length(obs.s);
      std::vector<double> vals(static_cast<std::size_t>(n));
      check(ksf_series_values(obs.s, vals.data(), n), "reading observations");
      for (double v : vals) check(ksf_filter_observe(filter, v), "filtering observation");
    }
    ksf_forecast f;
    check(ksf_filter_forecast(filter, &f), "forecasting");
    std::printf("point %.17g\nmean %.17g\nvariance %.17g\nmode %.17g\nstable %d\nswitched %d\n",
                f.point, f.mean, f.variance, f.mode, f.stable, f.switched);
    ksf_filter_free(filter);
    return 0;
  }

  if (diag->parsed()) {
    SeriesGuard train{load_series(diag_train_path, opts.missing_policy)};
    double sigma = opts.sigma;
    if (sigma <= 0.0) check(ksf_diagnose_bandwidth(train.s, &sigma), "bandwidth");
    ModelGuard model;
    check(ksf_model_train(train.s, opts.rank, sigma, opts.lambda, &model.m), "training model");
    std::vector<double> spectrum(static_cast<std::size_t>(ksf_model_rank(model.m)));
    check(ksf_model_eigenvalues(model.m, spectrum.data(), static_cast<int>(spectrum.size())),
          "reading spectrum");
    int p_cut = 0, q_cut = 0;
    check(ksf_diagnose_cutoffs(train.s, opts.arma_cap, &p_cut, &q_cut), "cutoffs");

    std::printf("sigma %.17g\nlambda %.17g\nrank %d\nm %lld\n", ksf_model_sigma(model.m),
                ksf_model_lambda(model.m), ksf_model_rank(model.m),
                static_cast<long long>(ksf_model_train_size(model.m)));
    std::printf("eigenvalues");
    for (double w : spectrum) std::printf(" %.17g", w);
    std::printf("\npacf_cutoff %d\nacf_cutoff %d\n", p_cut, q_cut);
    return 0;
  }

  if (synth->parsed()) {
    std::string spec_json;
    if (!synth_spec_path.empty()) spec_json = read_file(synth_spec_path);
    ksf_series* s = nullptr;
    check(ksf_series_synth(spec_json.empty() ? nullptr : spec_json.c_str(), synth_length, seed, &s),
          "generating series");
    SeriesGuard guard{s};
    check(ksf_series_write_csv(s, synth_out.c_str()), "writing " + synth_out);
    std::printf("wrote %lld rows to %s\n", static_cast<long long>(ksf_series_length(s)),
                synth_out.c_str());
    return 0;
  }

  return 1;
}
