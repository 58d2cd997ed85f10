#include "ksf/dataset.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ksf/rng.hpp"

namespace ksf {

namespace {

constexpr std::int64_t kHour = 3600;

// days_from_civil (Howard Hinnant); avoids timezone-dependent libc calls.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

std::int64_t parse_iso8601_utc(const std::string& s) {
  int y, mo, d, h, mi, sec;
  char tz = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &sec, &tz) != 7 ||
      tz != 'Z')
    throw Error(errc::parse_error, "bad timestamp (want YYYY-MM-DDTHH:MM:SSZ): " + s);
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 ||
      sec > 60)
    throw Error(errc::parse_error, "timestamp field out of range: " + s);
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

std::string format_iso8601_utc(std::int64_t t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02lld:%02lld:%02lldZ", y, m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

void WindSeries::validate() const {
  if (timestamps.size() != values.size())
    throw Error(errc::invalid_input, "series: timestamp/value length mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0)
      throw Error(errc::invalid_input, "series: invalid wind speed at index " + std::to_string(i));
    if (i > 0 && timestamps[i] - timestamps[i - 1] != kHour)
      throw Error(errc::invalid_input, "series: non-hourly spacing at index " + std::to_string(i));
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

WindSeries load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open: " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(errc::parse_error, path + ": empty file");
  const auto header = split_line(line);
  std::size_t ts_col = header.size(), val_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema.timestamp_column) ts_col = i;
    if (header[i] == schema.value_column) val_col = i;
  }
  if (ts_col == header.size() || val_col == header.size())
    throw Error(errc::parse_error, path + ": header lacks required columns '" +
                                       schema.timestamp_column + "','" + schema.value_column + "'");

  WindSeries s;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size())
      throw Error(errc::parse_error,
                  path + ":" + std::to_string(lineno) + ": wrong field count");

    std::int64_t ts;
    try {
      ts = parse_iso8601_utc(fields[ts_col]);
    } catch (const Error& e) {
      throw Error(errc::parse_error, path + ":" + std::to_string(lineno) + ": " + e.what());
    }

    if (!s.timestamps.empty()) {
      const std::int64_t gap = ts - s.timestamps.back();
      if (gap <= 0)
        throw Error(errc::parse_error,
                    path + ":" + std::to_string(lineno) + ": timestamps not increasing");
      if (gap != kHour) {
        if (schema.missing == MissingPolicy::Error)
          throw Error(errc::parse_error, path + ":" + std::to_string(lineno) +
                                             ": gap before " + format_iso8601_utc(ts));
        for (std::int64_t t = s.timestamps.back() + kHour; t < ts; t += kHour) {
          s.timestamps.push_back(t);
          s.values.push_back(s.values.back());
        }
      }
    }

    const std::string& raw = fields[val_col];
    double v;
    if (raw.empty()) {
      if (schema.missing == MissingPolicy::Error || s.values.empty())
        throw Error(errc::parse_error,
                    path + ":" + std::to_string(lineno) + ": missing wind speed");
      v = s.values.back();
    } else {
      std::size_t pos = 0;
      try {
        v = std::stod(raw, &pos);
      } catch (...) {
        throw Error(errc::parse_error,
                    path + ":" + std::to_string(lineno) + ": bad wind speed '" + raw + "'");
      }
      if (pos != raw.size())
        throw Error(errc::parse_error,
                    path + ":" + std::to_string(lineno) + ": bad wind speed '" + raw + "'");
    }
    if (!std::isfinite(v) || v < 0.0)
      throw Error(errc::parse_error,
                  path + ":" + std::to_string(lineno) + ": negative or non-finite wind speed");

    s.timestamps.push_back(ts);
    s.values.push_back(v);
  }
  s.turbine_id = path;
  if (const auto slash = s.turbine_id.find_last_of('/'); slash != std::string::npos)
    s.turbine_id = s.turbine_id.substr(slash + 1);
  if (const auto dot = s.turbine_id.find_last_of('.'); dot != std::string::npos)
    s.turbine_id = s.turbine_id.substr(0, dot);
  s.validate();
  return s;
}

void write_csv(const WindSeries& series, const std::string& path, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw Error(errc::io_error, "cannot open for writing: " + path);
  out << schema.timestamp_column << ',' << schema.value_column << '\n';
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", series.values[i]);
    out << format_iso8601_utc(series.timestamps[i]) << ',' << buf << '\n';
  }
  if (!out) throw Error(errc::io_error, "write failed: " + path);
}

std::pair<WindSeries, WindSeries> split(const WindSeries& series, const SplitSpec& spec) {
  const std::size_t n = series.size();
  if (spec.train_len < 4 || spec.test_len < 4)
    throw Error(errc::invalid_input, "split: window lengths must be >= 4");
  if (spec.train_start + spec.train_len > n || spec.test_start + spec.test_len > n)
    throw Error(errc::invalid_input, "split: window out of bounds");
  if (spec.train_start + spec.train_len > spec.test_start)
    throw Error(errc::invalid_input, "split: train window must precede test window");

  auto slice = [&](std::size_t start, std::size_t len, const char* tag) {
    WindSeries w;
    w.turbine_id = series.turbine_id.empty() ? tag : series.turbine_id;
    w.timestamps.assign(series.timestamps.begin() + static_cast<std::ptrdiff_t>(start),
                        series.timestamps.begin() + static_cast<std::ptrdiff_t>(start + len));
    w.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(start),
                    series.values.begin() + static_cast<std::ptrdiff_t>(start + len));
    return w;
  };
  return {slice(spec.train_start, spec.train_len, "train"),
          slice(spec.test_start, spec.test_len, "test")};
}

WindSeries synth_hmm_series(const SynthSpec& spec, std::size_t length, std::uint64_t seed) {
  const std::size_t ns = spec.transition.size();
  if (ns == 0 || spec.means.size() != ns || spec.variances.size() != ns)
    throw Error(errc::invalid_input, "synth: inconsistent spec dimensions");
  for (const auto& row : spec.transition)
    if (row.size() != ns) throw Error(errc::invalid_input, "synth: transition not square");
  for (std::size_t j = 0; j < ns; ++j) {
    double colsum = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      if (spec.transition[i][j] < 0.0)
        throw Error(errc::invalid_input, "synth: negative transition probability");
      colsum += spec.transition[i][j];
    }
    if (std::abs(colsum - 1.0) > 1e-9)
      throw Error(errc::invalid_input, "synth: transition column does not sum to 1");
  }
  for (double v : spec.variances)
    if (v < 0.0) throw Error(errc::invalid_input, "synth: negative variance");

  std::vector<double> init = spec.initial;
  if (init.empty()) init.assign(ns, 1.0 / static_cast<double>(ns));
  if (init.size() != ns) throw Error(errc::invalid_input, "synth: bad initial distribution");

  Rng rng(seed);
  WindSeries s;
  s.turbine_id = "synthetic";
  s.timestamps.reserve(length);
  s.values.reserve(length);
  const std::int64_t t0 = parse_iso8601_utc("2007-01-01T00:00:00Z");

  std::size_t state = rng.categorical(init);
  std::vector<double> col(ns);
  for (std::size_t t = 0; t < length; ++t) {
    const double draw = rng.gaussian(spec.means[state], std::sqrt(spec.variances[state]));
    s.values.push_back(std::max(0.0, draw));
    s.timestamps.push_back(t0 + static_cast<std::int64_t>(t) * kHour);
    for (std::size_t i = 0; i < ns; ++i) col[i] = spec.transition[i][state];
    state = rng.categorical(col);
  }
  return s;
}

SynthSpec default_synth_spec() {
  SynthSpec spec;
  spec.transition = {{0.95, 0.05}, {0.05, 0.95}};
  spec.means = {4.0, 9.0};
  spec.variances = {1.0, 2.25};
  return spec;
}

SynthSpec parse_synth_spec_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw Error(errc::parse_error, std::string("synth spec: bad JSON: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.transition = j.at("transition").get<std::vector<std::vector<double>>>();
    spec.means = j.at("means").get<std::vector<double>>();
    spec.variances = j.at("variances").get<std::vector<double>>();
    if (j.contains("initial")) spec.initial = j.at("initial").get<std::vector<double>>();
  } catch (const std::exception& e) {
    throw Error(errc::parse_error, std::string("synth spec: ") + e.what());
  }
  return spec;
}

}  // namespace ksf
