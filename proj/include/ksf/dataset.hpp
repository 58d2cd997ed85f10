#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ksf/errors.hpp"

namespace ksf {

// Hourly wind-speed series. Timestamps are UTC unix seconds, strictly
// increasing with exactly 3600 s spacing; values are finite and >= 0.
struct WindSeries {
  std::string turbine_id;
  std::vector<std::int64_t> timestamps;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  void validate() const;
};

enum class MissingPolicy { Error, ForwardFill };

struct CsvSchema {
  std::string timestamp_column = "timestamp";
  std::string value_column = "wind_speed";
  MissingPolicy missing = MissingPolicy::Error;
};

// Index-based train/test windows; train must precede test without overlap.
struct SplitSpec {
  std::size_t train_start = 0;
  std::size_t train_len = 0;
  std::size_t test_start = 0;
  std::size_t test_len = 0;
};

// Gaussian-emission state machine used to generate test fixtures.
struct SynthSpec {
  std::vector<std::vector<double>> transition;  // column-stochastic, T[i][j] = P(next=i | cur=j)
  std::vector<double> means;
  std::vector<double> variances;
  std::vector<double> initial;  // empty -> uniform
};

std::int64_t parse_iso8601_utc(const std::string& s);
std::string format_iso8601_utc(std::int64_t t);

WindSeries load_csv(const std::string& path, const CsvSchema& schema = {});
void write_csv(const WindSeries& series, const std::string& path, const CsvSchema& schema = {});

std::pair<WindSeries, WindSeries> split(const WindSeries& series, const SplitSpec& spec);

// Reproducible synthetic series: hidden chain sampled from the transition
// matrix, observations Gaussian per state, negative draws clamped at 0.
WindSeries synth_hmm_series(const SynthSpec& spec, std::size_t length, std::uint64_t seed);

// Two-state fixture spec used by the CLI and the test suite.
SynthSpec default_synth_spec();

// Parses a SynthSpec from JSON: {"transition": [[..]..], "means": [..],
// "variances": [..], "initial": [..]?}.
SynthSpec parse_synth_spec_json(const std::string& json_text);

}  // namespace ksf
