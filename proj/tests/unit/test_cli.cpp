#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using turnprint::cli::run;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "turnprint");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(TURNPRINT_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({}).code == 3);
    CHECK(invoke({"frobnicate"}).code == 3);
    CHECK(invoke({"extract", "--trace", "/nonexistent/trace.csv"}).code == 2);
    CHECK(invoke({"--epsilon", "0.9", "extract", "--trace", "/nonexistent/trace.csv"}).code == 3);
    const auto r = invoke({"simulate", "-o", "-"});
    CHECK(r.code == 3);
    CHECK(r.err.find("config error") != std::string::npos);
  }

  TEST_CASE("simulate, extract, featurize, train, identify and enroll") {
    const fs::path dir = scratch("pipeline");
    const auto sim = invoke({"--seed", "7", "simulate", "--drivers", "3", "--trips", "3", "-o", (dir / "corpus").string()});
    REQUIRE(sim.code == 0);

    std::vector<std::pair<std::string, std::string>> trips;  // driver, trace path
    {
      std::ifstream manifest(dir / "corpus" / "manifest.jsonl");
      std::string line;
      while (std::getline(manifest, line)) {
        const auto j = nlohmann::json::parse(line);
        trips.emplace_back(j.at("driver").get<std::string>(), (dir / "corpus" / j.at("trace").get<std::string>()).string());
      }
    }
    REQUIRE(trips.size() == 9);

    std::vector<std::string> feature_files;
    for (std::size_t i = 0; i < trips.size(); ++i) {
      const auto turns = (dir / ("t" + std::to_string(i) + ".jsonl")).string();
      const auto feats = (dir / ("f" + std::to_string(i) + ".csv")).string();
      REQUIRE(invoke({"extract", "--trace", trips[i].second, "--label", trips[i].first, "-o", turns}).code == 0);
      REQUIRE(invoke({"featurize", "--turns", turns, "-o", feats}).code == 0);
      feature_files.push_back(feats);
    }
    const auto first_header = slurp(feature_files[0]).substr(0, 40);
    CHECK(first_header.find("f1_s1_p10") != std::string::npos);

    std::vector<std::string> train_args{"--seed", "3", "train", "--kind", "nb", "-o", (dir / "nb.json").string(), "--features"};
    for (std::size_t i = 0; i < trips.size(); ++i) {
      if (i % 3 != 2) train_args.push_back(feature_files[i]);
    }
    REQUIRE(invoke(train_args).code == 0);

    // Trip-level identification on each driver's held-out third trip.
    std::size_t correct = 0;
    for (std::size_t i = 2; i < trips.size(); i += 3) {
      const auto r = invoke({"identify", "--model", (dir / "nb.json").string(), "--turns",
                                (dir / ("t" + std::to_string(i) + ".jsonl")).string(), "--trip"});
      REQUIRE(r.code == 0);
      const auto j = nlohmann::json::parse(r.out);
      CHECK(j.at("n_turns").get<std::size_t>() > 0);
      correct += j.at("label").get<std::string>() == trips[i].first ? 1 : 0;
    }
    CHECK(correct >= 2);

    // Per-turn CSV output from the same model.
    const auto per_turn = invoke({"identify", "--model", (dir / "nb.json").string(), "--turns", feature_files[2]});
    REQUIRE(per_turn.code == 0);
    CHECK(per_turn.out.rfind("turn,direction,predicted", 0) == 0);

    train_args[4] = "svm";
    CHECK(invoke(train_args).code == 3);

    // Trip mode needs naive Bayes.
    train_args[4] = "rf";
    train_args[6] = (dir / "rf.json").string();
    REQUIRE(invoke(train_args).code == 0);
    CHECK(invoke({"identify", "--model", (dir / "rf.json").string(), "--turns", feature_files[2], "--trip"}).code == 3);

    const auto table = (dir / "table.jsonl").string();
    const auto e1 = invoke({"enroll", "--table", table, "--trip", feature_files[0]});
    REQUIRE(e1.code == 0);
    const auto a1 = nlohmann::json::parse(e1.out);
    CHECK(a1.at("label") == "D1");
    CHECK(a1.at("created") == true);
    CHECK(fs::exists(table));
  }

  TEST_CASE("config file values reach the run") {
    const fs::path dir = scratch("config");
    {
      std::ofstream cfg(dir / "run.toml");
      cfg << "seed = 11\ndelta_bump = 0.2\nepsilon = 0.03\n";
    }
    const auto r = invoke({"--config", (dir / "run.toml").string(), "eval", "--synthetic", "--drivers", "3", "--trips",
                              "3", "--trip-draws", "10", "--perr", "0,20", "--folds", "3", "-o", (dir / "report").string()});
    REQUIRE(r.code == 0);
    const auto summary = slurp(dir / "report" / "summary.txt");
    CHECK(summary.find("\"delta_bump\": 0.2") != std::string::npos);
    CHECK(summary.find("\"seed\": 11") != std::string::npos);
    CHECK(fs::exists(dir / "report" / "trip_curve.csv"));
    CHECK(fs::exists(dir / "report" / "perr.csv"));
  }

  TEST_CASE("perturb with zero noise reproduces the trace") {
    const fs::path dir = scratch("perturb");
    {
      std::ofstream(dir / "profile.json") << R"({"onset_frac": 0.3, "peak_yaw": 0.6, "yaw_jerk": 2.5})";
      std::ofstream(dir / "route.json") << R"({"initial_heading_deg": 30, "segments": [
        {"type": "straight", "duration": 4, "speed": 8}, {"type": "right", "radius": 10},
        {"type": "straight", "duration": 4, "speed": 8}]})";
    }
    const auto sim = invoke({"simulate", "--profile", (dir / "profile.json").string(), "--route",
                             (dir / "route.json").string(), "-o", (dir / "trip.csv").string(), "--truth",
                             (dir / "truth.json").string()});
    INFO(sim.err);
    REQUIRE(sim.code == 0);
    const auto truth = nlohmann::json::parse(slurp(dir / "truth.json"));
    CHECK(truth.size() == 3);
    REQUIRE(invoke({"perturb", "--trace", (dir / "trip.csv").string(), "--noise-sd", "0", "-o",
                       (dir / "same.csv").string()})
                .code == 0);
    CHECK(slurp(dir / "trip.csv") == slurp(dir / "same.csv"));
    CHECK(invoke({"perturb", "--trace", (dir / "trip.csv").string(), "--noise-sd", "-1"}).code == 3);
  }
}
