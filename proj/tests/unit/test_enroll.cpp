#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "turnprint/enroll.hpp"
#include "turnprint/experiments.hpp"
#include "turnprint/rng.hpp"

using namespace turnprint;
using namespace turnprint::enroll;

namespace {

std::vector<std::vector<double>> cloud(std::size_t n, const std::vector<double>& centre, double sd,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> out(n, centre);
  for (auto& v : out) {
    for (double& x : v) x += rng.normal(0.0, sd);
  }
  return out;
}

// Per-driver list of per-trip feature vectors for a synthetic panel.
std::map<std::string, std::vector<TripVectors>> panel_trips(const std::vector<simgen::DriverProfile>& panel,
                                                            std::size_t trips, std::uint64_t seed) {
  eval::CorpusSpec spec;
  spec.drivers = panel.size();
  spec.trips_per_driver = trips;
  spec.seed = seed;
  const auto records = eval::extract_corpus(eval::synthetic_corpus(spec, panel), eval::RunConfig{});
  std::map<std::string, std::map<std::size_t, TripVectors>> by;
  for (const auto& r : records) by[r.driver][r.trip].push_back(r.features.values);
  std::map<std::string, std::vector<TripVectors>> out;
  for (auto& [d, m] : by) {
    for (auto& [t, v] : m) out[d].push_back(std::move(v));
  }
  return out;
}

TripVectors concat(const std::vector<TripVectors>& trips, std::size_t n) {
  TripVectors out;
  for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), trips[i].begin(), trips[i].end());
  return out;
}

}  // namespace

TEST_SUITE("fit_gmm") {
  TEST_CASE("K=1 is the sample mean and variance") {
    const auto v = cloud(50, {1.0, -2.0, 0.5}, 0.7, 4);
    const auto g = fit_gmm(v, 1, 0);
    for (std::size_t j = 0; j < 3; ++j) {
      double m = 0.0, s = 0.0;
      for (const auto& x : v) m += x[j];
      m /= 50.0;
      for (const auto& x : v) s += (x[j] - m) * (x[j] - m);
      CHECK(g.means[0][j] == doctest::Approx(m).epsilon(1e-12));
      CHECK(g.variances[0][j] == doctest::Approx(s / 50.0).epsilon(1e-12));
    }
    CHECK(g.weights[0] == 1.0);
    CHECK(g.iterations <= 2);
  }

  TEST_CASE("two separated clusters are found") {
    auto v = cloud(80, {0.0, 0.0, 0.0, 0.0}, 1.0, 1);
    const auto w = cloud(80, {12.0, -12.0, 12.0, -12.0}, 1.0, 2);
    v.insert(v.end(), w.begin(), w.end());
    const auto g = fit_gmm(v, 2, 11);
    const std::size_t hi = g.means[0][0] > g.means[1][0] ? 0 : 1;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(g.means[1 - hi][j]) < 0.1 * 3.0);
      CHECK(std::abs(std::abs(g.means[hi][j]) - 12.0) < 0.1 * 3.0);
    }
    CHECK(g.weights[0] == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("constant data floors every variance") {
    const std::vector<std::vector<double>> v(10, std::vector<double>{3.0, 3.0});
    const auto g = fit_gmm(v, 2, 0);
    for (const auto& row : g.variances) {
      for (double x : row) CHECK(x == kGmmVarianceFloor);
    }
    CHECK(std::isfinite(g.log_likelihood));
    CHECK(std::isfinite(trip_loglikelihood(g, v)));
  }

  TEST_CASE("refit with the same seed is identical") {
    const auto v = cloud(40, {0.0, 1.0, 2.0}, 1.0, 6);
    CHECK(fit_gmm(v, 2, 9).to_json() == fit_gmm(v, 2, 9).to_json());
  }

  TEST_CASE("preconditions") {
    const auto v = cloud(3, {0.0, 1.0}, 1.0, 6);
    CHECK_THROWS_AS(fit_gmm(v, 4, 0), InputError);
    CHECK_THROWS_AS(fit_gmm(v, 0, 0), ConfigError);
    const auto g = fit_gmm(v, 1, 0);
    const std::vector<std::vector<double>> wrong{{1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(trip_loglikelihood(g, wrong), InputError);
  }
}

TEST_SUITE("trip likelihood") {
  TEST_CASE("training vectors outscore a 10 sigma shift") {
    const auto v = cloud(30, {0.0, 0.0, 0.0}, 0.5, 12);
    const auto g = fit_gmm(v, 2, 0);
    auto shifted = v;
    for (auto& x : shifted) {
      for (double& e : x) e += 10.0 * 0.5;
    }
    CHECK(trip_loglikelihood(g, v) >= trip_loglikelihood(g, shifted));
  }

  TEST_CASE("mean per vector, so duplicating a trip changes nothing") {
    const auto v = cloud(20, {1.0, 1.0}, 0.3, 2);
    const auto g = fit_gmm(v, 1, 0);
    auto twice = v;
    twice.insert(twice.end(), v.begin(), v.end());
    CHECK(trip_loglikelihood(g, twice) == doctest::Approx(trip_loglikelihood(g, v)).epsilon(1e-12));
  }

  TEST_CASE("held-out same-driver trips outscore other drivers") {
    const auto panel = simgen::make_driver_panel(12, 301);
    const auto trips = panel_trips(panel, 6, 302);
    std::vector<std::string> labels;
    for (const auto& [d, t] : trips) labels.push_back(d);
    int wins = 0;
    for (std::uint64_t p = 0; p < 100; ++p) {
      Rng rng(derive_seed(303, "pair", p));
      const std::size_t a = rng.below(labels.size());
      const std::size_t b = (a + 1 + rng.below(labels.size() - 1)) % labels.size();
      const auto& ta = trips.at(labels[a]);
      const auto g = fit_gmm(concat(ta, 4), 2, p);
      wins += trip_loglikelihood(g, ta[4]) > trip_loglikelihood(g, trips.at(labels[b])[5]) ? 1 : 0;
    }
    CHECK(wins >= 95);
  }
}

TEST_SUITE("gate") {
  // Tight clouds give positive log densities, so threshold 0 separates them.
  const std::vector<double> kHome{0.0, 0.0, 0.0, 0.0};
  const std::vector<double> kAway{5.0, 5.0, -5.0, 5.0};

  TEST_CASE("empty table creates D1") {
    ProfileTable table;
    const auto a = assign_or_new_driver(table, cloud(12, kHome, 0.05, 1));
    CHECK(a.created);
    CHECK(a.label == "D1");
    CHECK_FALSE(a.best_loglikelihood.has_value());
    CHECK(table.size() == 1);
  }

  TEST_CASE("a matching trip is appended and an unseen one creates D2") {
    ProfileTable table;
    assign_or_new_driver(table, cloud(12, kHome, 0.05, 1));
    const auto same = assign_or_new_driver(table, cloud(8, kHome, 0.05, 2));
    CHECK_FALSE(same.created);
    CHECK(same.label == "D1");
    CHECK(*same.best_loglikelihood >= 0.0);
    CHECK(table.find("D1")->vectors.size() == 20);

    const auto other = assign_or_new_driver(table, cloud(8, kAway, 0.05, 3));
    CHECK(other.created);
    CHECK(other.label == "D2");
    CHECK(*other.best_loglikelihood < 0.0);
    CHECK(table.size() == 2);
  }

  TEST_CASE("synthetic drivers: enrolled trip joins, distinct driver does not") {
    simgen::DriverProfile calm{0.45, 0.45, 1.6, 0.35, 0.35, 0.02, 0.03, 0.06};
    simgen::DriverProfile brisk{0.12, 0.85, 3.9, 1.45, 0.65, 0.03, 0.09, 0.06};
    const auto trips = panel_trips({calm, brisk}, 6, 44);
    const auto& a = trips.at(eval::driver_label(0));
    const auto& b = trips.at(eval::driver_label(1));
    ProfileTable table;
    assign_or_new_driver(table, concat(a, 5));
    const auto joined = assign_or_new_driver(table, a[5]);
    CHECK_FALSE(joined.created);
    CHECK(joined.label == "D1");
    const auto fresh = assign_or_new_driver(table, b[5]);
    CHECK(fresh.created);
    CHECK(fresh.label == "D2");
  }

  TEST_CASE("appending to one entry leaves the others untouched") {
    ProfileTable table;
    assign_or_new_driver(table, cloud(12, kHome, 0.05, 1));
    assign_or_new_driver(table, cloud(12, kAway, 0.05, 2));
    const auto before = table.find("D2")->gmm.to_json();
    const auto before_vectors = table.find("D2")->vectors;
    assign_or_new_driver(table, cloud(6, kHome, 0.05, 3));
    CHECK(table.find("D1")->vectors.size() == 18);
    CHECK(table.find("D2")->gmm.to_json() == before);
    CHECK(table.find("D2")->vectors == before_vectors);
  }

  TEST_CASE("table JSON lines round trip is lossless") {
    ProfileTable table;
    assign_or_new_driver(table, cloud(12, kHome, 0.05, 1));
    assign_or_new_driver(table, cloud(12, kAway, 0.05, 2));
    std::stringstream ss;
    table.write_jsonl(ss);
    const auto back = ProfileTable::read_jsonl(ss);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(back.entries()[i].label == table.entries()[i].label);
      CHECK(back.entries()[i].vectors == table.entries()[i].vectors);
      CHECK(back.entries()[i].gmm.to_json() == table.entries()[i].gmm.to_json());
    }
    CHECK(back.next_label() == "D3");
  }

  TEST_CASE("calibration separates distinct clouds") {
    std::vector<std::vector<TripVectors>> drivers;
    for (std::size_t d = 0; d < 3; ++d) {
      std::vector<TripVectors> trips;
      for (std::size_t t = 0; t < 3; ++t) {
        trips.push_back(cloud(6, std::vector<double>(3, 4.0 * static_cast<double>(d)), 0.3, d * 10 + t));
      }
      drivers.push_back(trips);
    }
    const auto c = calibrate_gate(drivers, 1, 5);
    CHECK(c.balanced_accuracy == 1.0);
    CHECK(c.same_scores.size() == 9);
    CHECK(c.cross_scores.size() == 18);
    for (double s : c.same_scores) CHECK(s >= c.threshold);
    for (double s : c.cross_scores) CHECK(s < c.threshold);
    CHECK_THROWS_AS(calibrate_gate({drivers[0]}, 1, 5), InputError);
  }
}

TEST_SUITE("label corruption") {
  std::vector<classify::Sample> rows(std::size_t n) {
    std::vector<classify::Sample> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({{static_cast<double>(i)}, "D" + std::to_string(i % 5)});
    return out;
  }

  TEST_CASE("p_err 0 is the identity") {
    const auto data = rows(50);
    const auto out = corrupt_labels(data, 0.0, 3);
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(out[i].label == data[i].label);
  }

  TEST_CASE("20 percent of 100 rows selects exactly 20") {
    CHECK(corrupted_count(100, 20.0) == 20);
    CHECK(corrupted_count(7, 10.0) == 1);
    CHECK(corrupted_count(10, 100.0) == 10);
    const auto data = rows(100);
    const auto out = corrupt_labels(data, 20.0, 8);
    std::size_t changed = 0;
    std::set<std::string> labels;
    for (std::size_t i = 0; i < data.size(); ++i) {
      changed += out[i].label != data[i].label ? 1 : 0;
      CHECK(out[i].features == data[i].features);
      labels.insert(out[i].label);
    }
    CHECK(changed <= 20);
    CHECK(changed > 0);
    CHECK(labels.size() == 5);
  }

  TEST_CASE("seeded and validated") {
    const auto data = rows(60);
    const auto a = corrupt_labels(data, 30.0, 4);
    const auto b = corrupt_labels(data, 30.0, 4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].label == b[i].label);
    CHECK_THROWS_AS(corrupt_labels(data, 101.0, 0), ConfigError);
    CHECK_THROWS_AS(corrupt_labels(data, -1.0, 0), ConfigError);
  }
}
