#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ksf/dataset.hpp"
#include "ksf/rng.hpp"

using namespace ksf;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out);
  out << text;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("benchmark windows cover 3000 hourly points each") {
  // training Jan 1 2007 0:00 .. May 5 2007 23:00; test Jan 1 2008 0:00 ..
  // May 4 2008 23:00 (leap year): both spans hold exactly 3000 hours
  const std::int64_t train_hours =
      (parse_iso8601_utc("2007-05-05T23:00:00Z") - parse_iso8601_utc("2007-01-01T00:00:00Z")) /
          3600 +
      1;
  const std::int64_t test_hours =
      (parse_iso8601_utc("2008-05-04T23:00:00Z") - parse_iso8601_utc("2008-01-01T00:00:00Z")) /
          3600 +
      1;
  CHECK(train_hours == 3000);
  CHECK(test_hours == 3000);
}

TEST_CASE("iso8601 round trip") {
  const std::int64_t t = parse_iso8601_utc("2007-01-01T00:00:00Z");
  CHECK(format_iso8601_utc(t) == "2007-01-01T00:00:00Z");
  CHECK(parse_iso8601_utc("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_iso8601_utc("1970-01-02T03:04:05Z") == 86400 + 3 * 3600 + 4 * 60 + 5);
  // 2008 was a leap year
  CHECK(parse_iso8601_utc("2008-03-01T00:00:00Z") - parse_iso8601_utc("2008-02-28T00:00:00Z") ==
        2 * 86400);
  CHECK_THROWS_AS(parse_iso8601_utc("2007-01-01 00:00:00"), Error);
  CHECK_THROWS_AS(parse_iso8601_utc("2007-13-01T00:00:00Z"), Error);
}

TEST_CASE("load_csv basics") {
  SUBCASE("two valid rows") {
    write_text("ds_ok.csv",
               "timestamp,wind_speed\n"
               "2007-01-01T00:00:00Z,5.5\n"
               "2007-01-01T01:00:00Z,6.25\n");
    const WindSeries s = load_csv("ds_ok.csv");
    REQUIRE(s.size() == 2);
    CHECK(s.values[0] == 5.5);
    CHECK(s.values[1] == 6.25);
    CHECK(s.turbine_id == "ds_ok");
  }

  SUBCASE("gap with error policy names the timestamp") {
    write_text("ds_gap.csv",
               "timestamp,wind_speed\n"
               "2007-01-01T00:00:00Z,5.5\n"
               "2007-01-01T02:00:00Z,6.0\n");
    try {
      load_csv("ds_gap.csv");
      FAIL("expected gap error");
    } catch (const Error& e) {
      CHECK(e.code() == errc::parse_error);
      CHECK(std::string(e.what()).find("2007-01-01T02:00:00Z") != std::string::npos);
    }
  }

  SUBCASE("gap with forward-fill policy copies the previous value") {
    write_text("ds_fill.csv",
               "timestamp,wind_speed\n"
               "2007-01-01T00:00:00Z,5.5\n"
               "2007-01-01T03:00:00Z,6.0\n");
    CsvSchema schema;
    schema.missing = MissingPolicy::ForwardFill;
    const WindSeries s = load_csv("ds_fill.csv", schema);
    REQUIRE(s.size() == 4);
    CHECK(s.values[1] == 5.5);
    CHECK(s.values[2] == 5.5);
    CHECK(s.values[3] == 6.0);
  }

  SUBCASE("empty speed field follows the missing policy") {
    write_text("ds_miss.csv",
               "timestamp,wind_speed\n"
               "2007-01-01T00:00:00Z,5.5\n"
               "2007-01-01T01:00:00Z,\n"
               "2007-01-01T02:00:00Z,6.0\n");
    CHECK_THROWS_AS(load_csv("ds_miss.csv"), Error);
    CsvSchema schema;
    schema.missing = MissingPolicy::ForwardFill;
    const WindSeries s = load_csv("ds_miss.csv", schema);
    REQUIRE(s.size() == 3);
    CHECK(s.values[1] == 5.5);
  }

  SUBCASE("negative speed is rejected with line number") {
    write_text("ds_neg.csv",
               "timestamp,wind_speed\n"
               "2007-01-01T00:00:00Z,-1.0\n");
    try {
      load_csv("ds_neg.csv");
      FAIL("expected validation error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }

  SUBCASE("malformed value is rejected with line number") {
    write_text("ds_bad.csv",
               "timestamp,wind_speed\n"
               "2007-01-01T00:00:00Z,abc\n");
    CHECK_THROWS_AS(load_csv("ds_bad.csv"), Error);
  }

  SUBCASE("missing header column") {
    write_text("ds_hdr.csv", "time,speed\n2007-01-01T00:00:00Z,5\n");
    CHECK_THROWS_AS(load_csv("ds_hdr.csv"), Error);
  }

  SUBCASE("missing file") { CHECK_THROWS_AS(load_csv("no_such_file.csv"), Error); }
}

TEST_CASE("csv round trip is bit exact") {
  Rng rng(8);
  WindSeries s;
  s.turbine_id = "rt";
  const std::int64_t t0 = parse_iso8601_utc("2007-06-01T00:00:00Z");
  for (int i = 0; i < 64; ++i) {
    s.timestamps.push_back(t0 + i * 3600);
    s.values.push_back(rng.uniform(0.0, 30.0));
  }
  write_csv(s, "rt.csv");
  const WindSeries r = load_csv("rt.csv");
  REQUIRE(r.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(r.values[i] == s.values[i]);
    CHECK(r.timestamps[i] == s.timestamps[i]);
  }
}

TEST_CASE("split") {
  WindSeries s;
  s.turbine_id = "sp";
  const std::int64_t t0 = parse_iso8601_utc("2007-01-01T00:00:00Z");
  for (int i = 0; i < 20; ++i) {
    s.timestamps.push_back(t0 + i * 3600);
    s.values.push_back(static_cast<double>(i));
  }

  SUBCASE("exact lengths, adjacent windows partition the range") {
    const auto [train, test] = split(s, SplitSpec{0, 10, 10, 10});
    REQUIRE(train.size() == 10);
    REQUIRE(test.size() == 10);
    CHECK(train.values.front() == 0.0);
    CHECK(train.values.back() == 9.0);
    CHECK(test.values.front() == 10.0);
    CHECK(test.values.back() == 19.0);
  }

  SUBCASE("overlap is rejected") {
    CHECK_THROWS_AS(split(s, SplitSpec{0, 10, 9, 10}), Error);
  }

  SUBCASE("out of bounds is rejected") {
    CHECK_THROWS_AS(split(s, SplitSpec{0, 10, 10, 11}), Error);
  }
}

TEST_CASE("synthetic series") {
  SUBCASE("single state, zero variance gives a constant series") {
    SynthSpec spec;
    spec.transition = {{1.0}};
    spec.means = {5.0};
    spec.variances = {0.0};
    const WindSeries s = synth_hmm_series(spec, 16, 3);
    for (double v : s.values) CHECK(v == 5.0);
    s.validate();
  }

  SUBCASE("same seed twice gives identical series") {
    const WindSeries a = synth_hmm_series(default_synth_spec(), 200, 42);
    const WindSeries b = synth_hmm_series(default_synth_spec(), 200, 42);
    CHECK(a.values == b.values);
    const WindSeries c = synth_hmm_series(default_synth_spec(), 200, 43);
    CHECK(a.values != c.values);
  }

  SUBCASE("state occupancy matches the stationary distribution within 1%") {
    SynthSpec spec;
    spec.transition = {{0.9, 0.3}, {0.1, 0.7}};  // stationary (0.75, 0.25)
    spec.means = {0.0, 100.0};
    spec.variances = {0.0, 0.0};
    const WindSeries s = synth_hmm_series(spec, 100000, 7);
    double hi = 0.0;
    for (double v : s.values)
      if (v > 50.0) hi += 1.0;
    CHECK(hi / 100000.0 == doctest::Approx(0.25).epsilon(0.04));
  }

  SUBCASE("negative draws are clamped to zero") {
    SynthSpec spec;
    spec.transition = {{1.0}};
    spec.means = {-10.0};
    spec.variances = {1.0};
    const WindSeries s = synth_hmm_series(spec, 50, 1);
    for (double v : s.values) CHECK(v == 0.0);
  }

  SUBCASE("bad transition matrix is rejected") {
    SynthSpec spec;
    spec.transition = {{0.5, 0.2}, {0.2, 0.8}};
    spec.means = {0.0, 1.0};
    spec.variances = {1.0, 1.0};
    CHECK_THROWS_AS(synth_hmm_series(spec, 10, 1), Error);
  }
}

TEST_CASE("synth spec json parsing") {
  const SynthSpec spec = parse_synth_spec_json(
      R"({"transition": [[0.8, 0.4], [0.2, 0.6]], "means": [3, 8], "variances": [1, 2]})");
  CHECK(spec.transition[1][0] == 0.2);
  CHECK(spec.means[1] == 8.0);
  CHECK_THROWS_AS(parse_synth_spec_json("{"), Error);
  CHECK_THROWS_AS(parse_synth_spec_json(R"({"means": [1]})"), Error);
}

}  // TEST_SUITE
