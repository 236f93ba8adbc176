#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ftkit/data.hpp"
#include "ftkit/errors.hpp"

using namespace ftkit;

namespace {

std::filesystem::path write_temp(const std::string &name, const std::string &body) {
  const auto dir = std::filesystem::temp_directory_path() / "ftkit_test_data";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << body;
  return path;
}

TimeSeries series_of(const Vector &v) { return make_series({v}, {"x"}); }

}  // namespace

TEST_CASE("generate_mixture") {
  SUBCASE("no noise gives the clean signal") {
    MixtureConfig cfg;
    cfg.noise_min = cfg.noise_max = 0.0;
    const auto m = generate_mixture(cfg);
    CHECK(m.noisy.values == m.clean.values);
  }
  SUBCASE("single period-3 component") {
    MixtureConfig cfg;
    cfg.num_components = 1;
    cfg.period_min = cfg.period_max = 3.0;
    cfg.noise_min = cfg.noise_max = 0.0;
    const auto m = generate_mixture(cfg);
    CHECK(m.clean.values(0, 0) == 1.0);
    CHECK(m.clean.values(3, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.clean.values(1, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  }
  SUBCASE("periods, components and bounds") {
    MixtureConfig cfg;
    cfg.seed = 11;
    const auto m = generate_mixture(cfg);
    CHECK(m.periods == std::vector<double>{3, 4, 5, 6, 7});
    REQUIRE(m.noise_amplitudes.size() == 5);
    double amp = 0.0;
    for (double a : m.noise_amplitudes) {
      CHECK(a >= 0.15);
      CHECK(a <= 0.30);
      amp += a;
    }
    CHECK(m.clean.length() == 900);
    CHECK(m.components.width() == 5);
    const double pi = 3.141592653589793;
    for (std::size_t t = 0; t < 900; ++t) {
      double sum = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        CHECK(m.components.values(t, k) ==
              doctest::Approx(std::cos(2 * pi * t / m.periods[k])).epsilon(1e-12));
        sum += m.components.values(t, k);
      }
      CHECK(m.clean.values(t, 0) == doctest::Approx(sum).epsilon(1e-12));
      CHECK(std::abs(m.clean.values(t, 0)) <= 5.0);
      CHECK(std::abs(m.noisy.values(t, 0)) <= 5.0 + amp + 1e-12);
      CHECK(std::abs(m.noisy.values(t, 0) - m.clean.values(t, 0)) <= amp + 1e-12);
    }
  }
  SUBCASE("deterministic under seed") {
    MixtureConfig cfg;
    const auto x = generate_mixture(cfg), y = generate_mixture(cfg);
    CHECK(x.noisy.values == y.noisy.values);
    cfg.seed = 1;
    CHECK_FALSE(generate_mixture(cfg).noisy.values == x.noisy.values);
  }
  SUBCASE("invalid configs") {
    MixtureConfig cfg;
    cfg.period_min = 8;
    CHECK_THROWS_AS(generate_mixture(cfg), std::invalid_argument);
    cfg = {};
    cfg.noise_min = 0.5;
    CHECK_THROWS_AS(generate_mixture(cfg), std::invalid_argument);
    cfg = {};
    cfg.noise_min = -0.1;
    CHECK_THROWS_AS(generate_mixture(cfg), std::invalid_argument);
    cfg = {};
    cfg.length = 1;
    CHECK_THROWS_AS(generate_mixture(cfg), std::invalid_argument);
  }
}

TEST_CASE("sliding_window") {
  const auto one = sliding_window(series_of({1, 2, 3}), 1, 0);
  REQUIRE(one.size() == 2);
  CHECK(one[0].features == Vector{1});
  CHECK(one[0].target == 2);
  CHECK(one[1].features == Vector{2});
  CHECK(one[1].target == 3);

  const auto two = sliding_window(series_of({1, 2, 3, 4}), 2, 0);
  REQUIRE(two.size() == 2);
  CHECK(two[0].features == Vector{1, 2});
  CHECK(two[0].target == 3);
  CHECK(two[1].features == Vector{2, 3});
  CHECK(two[1].target == 4);

  const auto ahead = sliding_window(series_of({1, 2, 3, 4, 5}), 2, 0, 2);
  REQUIRE(ahead.size() == 2);
  CHECK(ahead[0].target == 4);

  std::vector<Vector> cols(4, Vector(20));
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t t = 0; t < 20; ++t) cols[c][t] = 100.0 * c + t;
  const auto wide = make_series(cols, {"a", "b", "c", "d"});
  const auto w = sliding_window(wide, 8, 2);
  CHECK(w.size() == 20 - 8 - 1 + 1);
  CHECK(w[0].features.size() == 32);
  CHECK(w[0].features[4] == 1.0);  // row 1, column 0
  CHECK(w[0].target == 208.0);
  CHECK(sliding_window(wide, 3, 0, 4, {1}).size() == 20 - 3 - 4 + 1);
  CHECK(sliding_window(wide, 3, 0, 1, {1})[0].features == Vector{100, 101, 102});

  CHECK_THROWS_AS(sliding_window(series_of({1, 2}), 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(sliding_window(series_of({1, 2}), 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(sliding_window(series_of({1, 2, 3}), 1, 1), std::invalid_argument);
}

TEST_CASE("normalize") {
  const auto mm = normalize(series_of({0, 5, 10}), NormMethod::MinMax);
  CHECK(mm.values.flat()[0] == 0.0);
  CHECK(mm.values.flat()[1] == 0.5);
  CHECK(mm.values.flat()[2] == 1.0);

  const auto z = normalize(series_of({-1, 1}), NormMethod::ZScore);
  CHECK(z.values.flat()[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(z.values.flat()[1] == doctest::Approx(1.0).epsilon(1e-15));

  const auto fit = normalize(series_of({0, 10, 20}), NormMethod::MinMax, 2);
  CHECK(fit.values.flat()[2] == 2.0);

  Vector a(50), b(50);
  for (std::size_t i = 0; i < 50; ++i) {
    a[i] = std::sin(0.37 * i) * 1e3 + 7;
    b[i] = 1e-4 * i * i - 3;
  }
  const auto s = make_series({a, b}, {"a", "b"});
  for (auto method : {NormMethod::MinMax, NormMethod::ZScore}) {
    const auto back = denormalize(normalize(s, method));
    CHECK(back.norm_params.empty());
    for (std::size_t i = 0; i < s.values.size(); ++i)
      CHECK(std::abs(back.values.flat()[i] - s.values.flat()[i]) <=
            1e-12 * std::max(1.0, std::abs(s.values.flat()[i])));
  }
  const auto n = normalize(s, NormMethod::ZScore);
  CHECK(denormalize_value(n.norm_params[0], n.values(3, 0)) == doctest::Approx(a[3]).epsilon(1e-12));

  try {
    normalize(make_series({a, Vector(50, 2.0)}, {"a", "flat"}), NormMethod::MinMax);
    FAIL("expected DegenerateColumnError");
  } catch (const DegenerateColumnError &e) {
    CHECK(e.column() == 1);
  }
  CHECK_THROWS_AS(normalize(series_of({3, 3}), NormMethod::ZScore), DegenerateColumnError);
  CHECK(parse_norm_method("z-score") == NormMethod::ZScore);
  CHECK(parse_norm_method("min-max") == NormMethod::MinMax);
  CHECK_THROWS(parse_norm_method("robust"));
}

TEST_CASE("load_csv") {
  SUBCASE("plain numeric file") {
    const auto s = load_csv(write_temp("plain.csv", "1,2\n3,4\n"), false);
    CHECK(s.length() == 2);
    CHECK(s.width() == 2);
    CHECK(s.values(1, 0) == 3.0);
    CHECK(s.column_names == std::vector<std::string>{"col1", "col2"});
  }
  SUBCASE("header names") {
    const auto s = load_csv(write_temp("header.csv", "flow,speed\n1.5,2\r\n-3e2,4\n\n"));
    CHECK(s.column_names == std::vector<std::string>{"flow", "speed"});
    CHECK(s.values(1, 0) == -300.0);
    CHECK(s.length() == 2);
  }
  SUBCASE("delimiter and BOM") {
    const auto s = load_csv(write_temp("semi.csv", "\xEF\xBB\xBF" "a;b\n1;2\n"), true, ';');
    CHECK(s.column_names[0] == "a");
    CHECK(s.values(0, 1) == 2.0);
  }
  SUBCASE("non-numeric cell") {
    try {
      load_csv(write_temp("bad.csv", "flow,speed\n1,2\n3,abc\n"));
      FAIL("expected CsvParseError");
    } catch (const CsvParseError &e) {
      CHECK(e.row() == 3);
      CHECK(e.column() == 2);
      CHECK(std::string(e.what()).find("(3,2)") != std::string::npos);
    }
  }
  SUBCASE("ragged row") {
    try {
      load_csv(write_temp("ragged.csv", "1,2\n3\n"), false);
      FAIL("expected CsvRaggedRowError");
    } catch (const CsvRaggedRowError &e) {
      CHECK(e.row() == 2);
    }
  }
  SUBCASE("empty file") {
    CHECK_THROWS_AS(load_csv(write_temp("empty.csv", "")), CsvEmptyError);
    CHECK_THROWS_AS(load_csv(write_temp("header_only.csv", "a,b\n")), CsvEmptyError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS(load_csv("/nonexistent/ftkit.csv"));
  }
}

TEST_CASE("mse and confusion accuracy") {
  const Vector p{0.9, 0.2, 0.8, 0.1}, t{1, 0, 1, 0};
  CHECK(mse(t, t) == 0.0);
  CHECK(mse(Vector{0, 1}, Vector{1, 0}) == 1.0);
  CHECK(mse(std::vector<Vector>{{0.0}, {2.0}}, std::vector<Vector>{{0.0}, {0.0}}) == 2.0);
  CHECK_THROWS_AS(mse(Vector{1}, Vector{1, 2}), std::invalid_argument);

  const auto same = confusion_accuracy(t, t, 0.5);
  CHECK(same.tpr == 1.0);
  CHECK(same.tnr == 1.0);
  const auto c = confusion_accuracy(p, t, 0.5);
  CHECK(c.tpr == 1.0);
  CHECK(c.tnr == 1.0);
  const auto half = confusion_accuracy(Vector{0.9, 0.6, 0.4, 0.1}, t, 0.5);
  CHECK(half.tpr == 0.5);
  CHECK(half.tnr == 0.5);
  CHECK(confusion_accuracy(Vector{0.5, 0.0}, Vector{0.5, 0.0}, 0.5).tpr == 1.0);
  CHECK_THROWS_AS(confusion_accuracy(p, Vector{1, 1, 1, 1}, 0.5), ClassAbsentError);
  CHECK_THROWS_AS(confusion_accuracy(p, Vector{0, 0, 0, 0}, 0.5), ClassAbsentError);

  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("time series validation") {
  auto s = series_of({1, 2, 3});
  s.split_index = 3;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.split_index = 2;
  CHECK_NOTHROW(s.validate());
  s.norm_params = {NormParams{0.0, 0.0}};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_series({{1, 2}, {1}}, {"a", "b"}), std::invalid_argument);
  CHECK(s.column(0) == Vector{1, 2, 3});
}
