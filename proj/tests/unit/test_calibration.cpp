#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "error_kind.hpp"
#include "loopdyn/backends.hpp"
#include "loopdyn/calibration.hpp"
#include "loopdyn/calibration_dataset.hpp"
#include "loopdyn/error.hpp"
#include "oracles.hpp"

using namespace loopdyn;
using testutil::kind_of;

namespace {

std::vector<CalibrationPair> pairs_of(std::vector<double> raw, std::vector<double> target) {
  std::vector<CalibrationPair> out;
  for (std::size_t i = 0; i < raw.size(); ++i) out.push_back({raw[i], target[i]});
  return out;
}

std::vector<double> fitted_at(const CalibrationMap& m, const std::vector<double>& xs) {
  std::vector<double> out;
  for (double x : xs) out.push_back(m.apply(x));
  return out;
}

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("loopdyn_test_" + name);
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

}  // namespace

TEST_CASE("fit_isotonic on already-monotone data is the identity on targets") {
  const auto m = fit_isotonic(pairs_of({0.1, 0.2, 0.3}, {0.2, 0.5, 0.9}));
  CHECK(fitted_at(m, {0.1, 0.2, 0.3}) == std::vector<double>{0.2, 0.5, 0.9});
}

TEST_CASE("fit_isotonic pools a violating pair") {
  const auto oracle_fit =
      oracle::isotonic_by_partitions({{0.1, 0.2}, {0.2, 0.9}, {0.3, 0.5}});
  REQUIRE(oracle_fit.size() == 3);
  CHECK(oracle_fit[0] == doctest::Approx(0.2));
  CHECK(oracle_fit[1] == doctest::Approx(0.7));
  CHECK(oracle_fit[2] == doctest::Approx(0.7));

  const auto m = fit_isotonic(pairs_of({0.1, 0.2, 0.3}, {0.2, 0.9, 0.5}));
  const auto got = fitted_at(m, {0.1, 0.2, 0.3});
  CHECK(got[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(got[1] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(got[2] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("fit_isotonic pools ties before fitting") {
  const auto m = fit_isotonic(pairs_of({0.5, 0.5, 0.9}, {0.0, 1.0, 1.0}));
  REQUIRE(m.knots().size() == 2);
  CHECK(m.knots()[0] == Knot{0.5, 0.5});
  CHECK(m.knots()[1] == Knot{0.9, 1.0});
  CHECK(fitted_at(m, {0.5, 0.5, 0.9}) == std::vector<double>{0.5, 0.5, 1.0});
}

TEST_CASE("fit_isotonic errors") {
  CHECK(kind_of([] { fit_isotonic(pairs_of({0.3}, {0.4})); }) == ErrorKind::InsufficientData);
  CHECK(kind_of([] { fit_isotonic(pairs_of({0.3, 0.3}, {0.4, 0.1})); }) ==
        ErrorKind::DegenerateAbscissa);
  CHECK(kind_of([] { fit_isotonic(pairs_of({0.3, 1.5}, {0.4, 0.1})); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([] { fit_isotonic(pairs_of({0.3, 0.5}, {0.4, NAN})); }) == ErrorKind::NonFinite);
}

TEST_CASE("fit_isotonic matches the partition oracle") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> n_dist(2, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = n_dist(rng);
    std::vector<CalibrationPair> pairs;
    std::vector<oracle::XY> pts;
    for (int i = 0; i < n; ++i) {
      // Coarse raw grid so ties show up regularly.
      const double raw = -0.5 + 0.25 * grid(rng);
      const double target = u(rng);
      pairs.push_back({raw, target});
      pts.push_back({raw, target});
    }
    bool all_same = std::all_of(pairs.begin(), pairs.end(),
                                [&](const auto& p) { return p.raw == pairs[0].raw; });
    if (all_same) continue;
    const auto expected = oracle::isotonic_by_partitions(pts);
    const auto m = fit_isotonic(pairs);
    REQUIRE(m.knots().size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(std::abs(m.knots()[i].calibrated - expected[i]) <= 1e-9);
    }
  }
}

TEST_CASE("fit_isotonic is idempotent on its own knots") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> r(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CalibrationPair> pairs;
    for (int i = 0; i < 20; ++i) pairs.push_back({r(rng), u(rng)});
    const auto m = fit_isotonic(pairs);
    std::vector<CalibrationPair> refit;
    for (const auto& k : m.knots()) refit.push_back({k.raw, k.calibrated});
    if (refit.size() < 2) continue;
    CHECK(fit_isotonic(refit).knots() == m.knots());
  }
}

TEST_CASE("apply interpolates and extrapolates flat") {
  CHECK(Similarity::identity().calibrate(0.37) == 0.37);
  const auto m = CalibrationMap::from_knots({{0.0, 0.1}, {1.0, 0.9}});
  CHECK(m.apply(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.apply(-0.5) == 0.1);
  CHECK(m.apply(1.0) == 0.9);
  CHECK(m.apply(0.0) == 0.1);
}

TEST_CASE("apply is monotone and preserves rankings") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> r(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CalibrationPair> pairs;
    for (int i = 0; i < 30; ++i) pairs.push_back({r(rng), u(rng)});
    const auto m = fit_isotonic(pairs);
    std::vector<double> xs;
    for (int i = 0; i < 200; ++i) xs.push_back(r(rng));
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) CHECK(m.apply(xs[i - 1]) <= m.apply(xs[i]));
  }

  // A strictly increasing map never reorders raw cosines.
  const auto g = CalibrationMap::from_knots({{-1.0, 0.0}, {0.0, 0.3}, {0.5, 0.35}, {1.0, 1.0}});
  std::vector<double> xs;
  for (int i = 0; i < 100; ++i) xs.push_back(r(rng));
  auto by_raw = xs;
  std::sort(by_raw.begin(), by_raw.end());
  auto by_cal = xs;
  std::sort(by_cal.begin(), by_cal.end(), [&](double a, double b) { return g.apply(a) < g.apply(b); });
  CHECK(by_raw == by_cal);
}

TEST_CASE("from_knots validates invariants") {
  CHECK(kind_of([] { CalibrationMap::from_knots({}); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([] { CalibrationMap::from_knots({{0.5, 0.1}, {0.5, 0.2}}); }) ==
        ErrorKind::InvalidParams);
  CHECK(kind_of([] { CalibrationMap::from_knots({{0.1, 0.5}, {0.5, 0.2}}); }) ==
        ErrorKind::InvalidParams);
  CHECK(kind_of([] { CalibrationMap::from_knots({{0.1, 1.5}}); }) == ErrorKind::InvalidParams);
}

TEST_CASE("hcs_threshold") {
  const auto id_map = CalibrationMap::from_knots({{0.0, 0.0}, {1.0, 1.0}});
  CHECK(hcs_threshold(pairs_of({0.8, 0.8, 0.8}, {0.9, 0.95, 1.0}), id_map) == 0.8);

  const std::vector<double> values{0.9, 0.6, 1.0, 0.8, 0.7};
  CHECK(oracle::lower_quantile(values, 0.05) == 0.6);
  CHECK(hcs_threshold(pairs_of(values, {1, 1, 1, 1, 1}), id_map, 0.8, 0.05) == 0.6);
  // Pairs below the cut are ignored.
  CHECK(hcs_threshold(pairs_of({0.1, 0.9}, {0.2, 0.9}), id_map, 0.8, 0.05) == 0.9);

  CHECK(kind_of([&] { hcs_threshold(pairs_of({0.1}, {0.2}), id_map); }) ==
        ErrorKind::NoHighSimilarityPairs);
  CHECK(kind_of([&] { hcs_threshold(pairs_of({0.1}, {0.9}), id_map, 0.8, 1.0); }) ==
        ErrorKind::InvalidParams);
}

TEST_CASE("calibration map JSON round-trips bit-exactly") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> r(-1.0, 1.0);
  std::vector<CalibrationPair> pairs;
  for (int i = 0; i < 40; ++i) pairs.push_back({r(rng), u(rng)});
  const auto m = fit_isotonic(pairs).with_tau_hcs(0.123456789012345678);
  CHECK(calibration_from_json(calibration_to_json(m)) == m);

  const auto path = std::filesystem::temp_directory_path() / "loopdyn_test_map.json";
  save_calibration(m, path.string());
  CHECK(load_calibration(path.string()) == m);
  CHECK(kind_of([] { calibration_from_json("{not json"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { load_calibration("/nonexistent/map.json"); }) == ErrorKind::Io);
}

TEST_CASE("calibration TSV: raw cosine rows") {
  const auto path = write_temp("raw.tsv", "raw_cosine\thuman_score\n0.1\t1\n0.2\t3\n0.3\t5\n");
  const auto ds = read_calibration_tsv(path);
  CHECK_FALSE(ds.sentence_pairs);
  REQUIRE(ds.pairs.size() == 3);
  CHECK(ds.pairs[0].target == 0.0);
  CHECK(ds.pairs[1].target == 0.5);
  CHECK(ds.pairs[2].target == 1.0);
  CHECK(ds.pairs[1].raw == 0.2);
}

TEST_CASE("calibration TSV: sentence rows need an embedder") {
  const auto path = write_temp("sent.tsv",
                               "sentence_a\tsentence_b\tscore\n"
                               "a cat\ta cat\t5\n"
                               "a cat\ta dog\t2\n"
                               "a cat\tthe stock market\t0\n");
  CHECK(kind_of([&] { read_calibration_tsv(path); }) == ErrorKind::InvalidConfig);
  StubEmbeddingBackend stub(64, 1);
  const auto ds = read_calibration_tsv(path, &stub);
  CHECK(ds.sentence_pairs);
  REQUIRE(ds.pairs.size() == 3);
  CHECK(ds.pairs[0].raw == doctest::Approx(1.0));
  CHECK(ds.pairs[0].target == 1.0);
  CHECK(ds.pairs[2].target == 0.0);
}

TEST_CASE("calibration TSV: errors carry line numbers") {
  const auto bad = write_temp("bad.tsv", "raw\tscore\n0.1\t1\n0.2\tabc\n");
  try {
    read_calibration_tsv(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  const auto ragged = write_temp("ragged.tsv", "raw\tscore\n0.1\t1\t7\n");
  CHECK(kind_of([&] { read_calibration_tsv(ragged); }) == ErrorKind::Parse);
  const auto range = write_temp("range.tsv", "raw\tscore\n1.7\t1\n");
  CHECK(kind_of([&] { read_calibration_tsv(range); }) == ErrorKind::Parse);
  CHECK(kind_of([] { read_calibration_tsv("/nonexistent/file.tsv"); }) == ErrorKind::Io);
}
