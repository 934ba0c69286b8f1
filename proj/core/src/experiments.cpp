#include "turnprint/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "turnprint/enroll.hpp"
#include "turnprint/rng.hpp"

namespace turnprint::eval {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
  if (!(epsilon > 0.0) || !(epsilon < delta_bump)) throw ConfigError("need 0 < epsilon < delta_bump");
  if (!(cutoff_hz > 0.0)) throw ConfigError("cutoff_hz must be positive");
  if (length < 20 || length % 5 != 0) throw ConfigError("L must be >= 20 and divisible by 5");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (gmm_components < 1) throw ConfigError("gmm_K must be at least 1");
  if (!std::isfinite(gate_threshold)) throw ConfigError("gate threshold must be finite");
  if (!priors.empty()) {
    double sum = 0.0;
    for (double p : priors) {
      if (!(p > 0.0)) throw ConfigError("priors must be strictly positive");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("priors must sum to 1");
  }
}

turns::ExtractOptions RunConfig::extract_options(bool interpolate) const {
  turns::ExtractOptions o;
  o.preprocess.cutoff_hz = cutoff_hz;
  o.delta_bump = delta_bump;
  o.epsilon = epsilon;
  o.length = length;
  o.interpolate = interpolate;
  return o;
}

nlohmann::json RunConfig::to_json() const {
  return {{"delta_bump", delta_bump}, {"epsilon", epsilon},   {"cutoff_hz", cutoff_hz},
          {"L", length},              {"seed", seed},         {"folds", folds},
          {"gmm_K", gmm_components},  {"threshold", gate_threshold}, {"priors", priors}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.delta_bump = j.value("delta_bump", c.delta_bump);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.cutoff_hz = j.value("cutoff_hz", c.cutoff_hz);
    c.length = j.value("L", c.length);
    c.seed = j.value("seed", c.seed);
    c.folds = j.value("folds", c.folds);
    c.gmm_components = j.value("gmm_K", c.gmm_components);
    c.gate_threshold = j.value("threshold", c.gate_threshold);
    c.priors = j.value("priors", c.priors);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run configuration: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Corpora

std::string driver_label(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "driver%02zu", index + 1);
  return buf;
}

std::vector<CorpusTrip> synthetic_corpus(const CorpusSpec& spec) {
  return synthetic_corpus(spec, simgen::make_driver_panel(spec.drivers, derive_seed(spec.seed, "panel"), spec.ranges));
}

std::vector<CorpusTrip> synthetic_corpus(const CorpusSpec& spec, const std::vector<simgen::DriverProfile>& panel) {
  std::vector<CorpusTrip> trips;
  simgen::SensorModel sensor = spec.sensor;
  if (spec.noise_free) {
    sensor.gyro_noise_sd = 0.0;
    sensor.accel_noise_sd = 0.0;
  }
  for (std::size_t d = 0; d < panel.size(); ++d) {
    simgen::DriverProfile profile = panel[d];
    if (spec.noise_free) {
      profile.steering_jitter_sd = 0.0;
      profile.accel_noise_sd = 0.0;
    }
    for (std::size_t t = 0; t < spec.trips_per_driver; ++t) {
      const std::uint64_t key = d * 1000 + t;
      const simgen::RouteScript route = simgen::random_route(spec.style, derive_seed(spec.seed, "route", key));
      simgen::SimulatedTrip sim =
          simgen::generate_trip(profile, route, spec.sample_period, derive_seed(spec.seed, "trip", key), sensor);
      CorpusTrip trip;
      trip.driver = driver_label(d);
      char id[48];
      std::snprintf(id, sizeof id, "%s_trip%03zu", trip.driver.c_str(), t + 1);
      trip.id = id;
      trip.trace = std::move(sim.trace);
      trip.truth = std::move(sim.annotations);
      trips.push_back(std::move(trip));
    }
  }
  return trips;
}

namespace {

std::vector<simgen::Annotation> annotations_from_json(const nlohmann::json& arr) {
  std::vector<simgen::Annotation> out;
  for (const nlohmann::json& j : arr) {
    simgen::Annotation a;
    a.kind = simgen::segment_kind_from_string(j.at("kind").get<std::string>());
    a.start_index = j.at("start_index").get<std::size_t>();
    a.end_index = j.at("end_index").get<std::size_t>();
    a.start_time = j.at("start_s").get<double>();
    a.end_time = j.at("end_s").get<double>();
    a.heading_change_deg = j.at("heading_change_deg").get<double>();
    out.push_back(a);
  }
  return out;
}

}  // namespace

std::vector<CorpusTrip> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw InputError("cannot open manifest " + manifest.string());
  const fs::path base = manifest.parent_path();
  std::vector<CorpusTrip> trips;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      CorpusTrip trip;
      trip.driver = j.at("driver").get<std::string>();
      const fs::path trace_path = base / j.at("trace").get<std::string>();
      trip.id = j.value("id", trace_path.stem().string());
      std::optional<bool> aligned;
      if (j.contains("aligned")) aligned = j.at("aligned").get<bool>();
      trip.trace = trace::read_trace_csv_file(trace_path.string(), aligned);
      if (j.contains("truth")) {
        std::ifstream tin(base / j.at("truth").get<std::string>());
        if (!tin) throw InputError("cannot open truth file for " + trip.id);
        trip.truth = annotations_from_json(nlohmann::json::parse(tin));
      }
      if (trip.driver.empty()) throw InputError("empty driver label");
      trips.push_back(std::move(trip));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (trips.empty()) throw InputError("manifest lists no trips");
  return trips;
}

void write_corpus(const fs::path& dir, const std::vector<CorpusTrip>& trips) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw InputError("cannot write manifest in " + dir.string());
  for (const CorpusTrip& trip : trips) {
    const std::string csv = trip.id + ".csv";
    trace::write_trace_csv_file((dir / csv).string(), trip.trace);
    nlohmann::json j{{"driver", trip.driver}, {"id", trip.id}, {"trace", csv}};
    if (!trip.truth.empty()) {
      const std::string truth = trip.id + ".truth.json";
      std::ofstream tout(dir / truth);
      tout << simgen::annotations_to_json(trip.truth).dump(1) << '\n';
      j["truth"] = truth;
    }
    manifest << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Turn extraction over a corpus

features::FeatureVector uninterpolated_features(const turns::TurnSegment& turn) {
  const std::size_t keep = turn.length() / features::kStages * features::kStages;
  turns::TurnSegment cut = turn;
  cut.yaw.resize(keep);
  cut.yaw_raw.resize(keep);
  cut.accel.resize(keep);
  cut.heading.resize(keep);
  return features::build_feature_vector(cut);
}

std::vector<TurnRecord> extract_corpus(const std::vector<CorpusTrip>& trips, const RunConfig& config,
                                       bool with_native) {
  config.validate();
  const turns::ExtractOptions opts = config.extract_options(false);
  std::vector<TurnRecord> out;
  for (std::size_t i = 0; i < trips.size(); ++i) {
    const turns::Extraction ex = turns::extract_turns(trips[i].trace, opts);
    for (const turns::TurnSegment& turn : ex.turns) {
      TurnRecord r;
      r.driver = trips[i].driver;
      r.trip = i;
      r.direction = turn.direction;
      r.native_length = turn.length();
      r.features = features::build_feature_vector(turns::interpolate_turn(turn, config.length));
      r.features.label = r.driver;
      if (with_native) {
        try {
          r.native = uninterpolated_features(turn);
          r.native->label = r.driver;
        } catch (const InputError&) {
          r.native.reset();  // too short at this sample rate
        }
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<classify::Sample> samples_of(const std::vector<TurnRecord>& records, bool native) {
  std::vector<classify::Sample> out;
  out.reserve(records.size());
  for (const TurnRecord& r : records) {
    if (native) {
      if (!r.native) throw InputError("turn record has no native-length features");
      out.push_back({r.native->values, r.driver});
    } else {
      out.push_back({r.features.values, r.driver});
    }
  }
  return out;
}

std::vector<TurnRecord> first_drivers(const std::vector<TurnRecord>& records, std::size_t n) {
  std::set<std::string> labels;
  for (const TurnRecord& r : records) labels.insert(r.driver);
  std::set<std::string> keep;
  for (const std::string& l : labels) {
    if (keep.size() == n) break;
    keep.insert(l);
  }
  std::vector<TurnRecord> out;
  for (const TurnRecord& r : records) {
    if (keep.count(r.driver)) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

std::vector<double> trip_accuracy_curve(const std::vector<classify::Sample>& data, std::size_t max_turns,
                                        std::size_t draws, std::uint64_t seed, const std::vector<double>& priors) {
  if (max_turns == 0 || draws == 0) throw ConfigError("trip curve needs max_turns and draws > 0");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].label].push_back(i);
  if (by_class.size() < 2) throw InputError("trip curve needs at least two drivers");
  for (const auto& [label, idx] : by_class) {
    if (idx.size() <= max_turns) {
      throw InputError("driver '" + label + "' has too few turns for " + std::to_string(max_turns) + "-turn trips");
    }
  }
  std::vector<std::string> classes;
  for (const auto& kv : by_class) classes.push_back(kv.first);

  std::vector<double> correct(max_turns, 0.0);
  std::vector<char> held(data.size(), 0);
  for (std::size_t d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, "trip-draw", d));
    const std::string& driver = classes[rng.below(classes.size())];
    std::vector<std::size_t> idx = by_class[driver];
    for (std::size_t i = 0; i < max_turns; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    std::fill(held.begin(), held.end(), 0);
    for (std::size_t i = 0; i < max_turns; ++i) held[idx[i]] = 1;
    std::vector<classify::Sample> train;
    train.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!held[i]) train.push_back(data[i]);
    }
    const classify::GaussianNaiveBayes nb = classify::GaussianNaiveBayes::fit(train);
    std::vector<std::vector<double>> trip;
    for (std::size_t n = 1; n <= max_turns; ++n) {
      trip.push_back(data[idx[n - 1]].features);
      const classify::TripPrediction p = classify::predict_trip_map(nb, trip, priors);
      if (p.label == driver) correct[n - 1] += 1.0;
    }
  }
  for (double& c : correct) c /= static_cast<double>(draws);
  return correct;
}

AblationResult interpolation_ablation(const std::vector<TurnRecord>& records, classify::ModelKind kind,
                                      std::size_t folds, std::uint64_t seed) {
  AblationResult res;
  res.kind = kind;
  double correct_with = 0.0;
  double correct_without = 0.0;
  for (Direction dir : {Direction::Left, Direction::Right}) {
    std::vector<TurnRecord> subset;
    for (const TurnRecord& r : records) {
      if (r.native && r.direction == dir) subset.push_back(r);
    }
    if (subset.empty()) continue;
    const std::uint64_t s = derive_seed(seed, to_string(dir));
    const double with = classify::kfold_eval(samples_of(subset, false), kind, folds, s).accuracy;
    const double without = classify::kfold_eval(samples_of(subset, true), kind, folds, s).accuracy;
    const auto n = static_cast<double>(subset.size());
    correct_with += with * n;
    correct_without += without * n;
    if (dir == Direction::Left) {
      res.left_turns = subset.size();
      res.left_with = with;
      res.left_without = without;
    } else {
      res.right_turns = subset.size();
      res.right_with = with;
      res.right_without = without;
    }
  }
  const auto total = static_cast<double>(res.left_turns + res.right_turns);
  if (total == 0.0) throw InputError("no turns with native-length features");
  res.with_interp = correct_with / total;
  res.without_interp = correct_without / total;
  return res;
}

std::vector<SweepPoint> label_noise_sweep(const std::vector<classify::Sample>& data, const std::vector<double>& levels,
                                          classify::ModelKind kind, std::size_t folds, std::uint64_t seed) {
  std::vector<SweepPoint> out;
  for (double p : levels) {
    const auto report = classify::kfold_eval(
        data, kind, folds, seed, [&](std::vector<classify::Sample> train, std::size_t fold) {
          return enroll::corrupt_labels(train, p, derive_seed(seed, "perr", fold));
        });
    out.push_back({p, report.accuracy});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Perturbation

Trigger trigger_from_string(const std::string& s) {
  if (s == "always") return Trigger::Always;
  if (s == "on_bump") return Trigger::OnBump;
  throw ConfigError("unknown trigger '" + s + "' (expected always or on_bump)");
}

const char* to_string(Trigger t) { return t == Trigger::Always ? "always" : "on_bump"; }

trace::RawTrace perturb(const trace::RawTrace& trace, double noise_sd, Trigger trigger, double delta_bump,
                        std::uint64_t seed) {
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be non-negative");
  trace::RawTrace out = trace;
  if (noise_sd == 0.0) return out;
  Rng rng(derive_seed(seed, "perturb"));
  for (trace::ImuSample& s : out.samples) {
    if (trigger == Trigger::OnBump) {
      const double rate = trace.already_aligned ? std::abs(s.gyro[2]) : norm(s.gyro);
      if (!(rate > delta_bump)) continue;
    }
    for (double& g : s.gyro) g += noise_sd * rng.normal();
    for (double& a : s.accel) a += noise_sd * rng.normal();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Factor analysis

const std::vector<FactorCase>& factor_cases() {
  static const std::vector<FactorCase> cases{
      {"T1", "same driver, same car, different route", true, false, true},
      {"T2", "same driver, different car, same route", true, true, false},
      {"T3", "different driver, same car, same route", false, true, true},
      {"T4", "different driver, same car, different route", false, false, true},
      {"T5", "different driver, different car, same route", false, true, false},
      {"T6", "different driver, different car, different route", false, false, false},
  };
  return cases;
}

namespace {

simgen::SensorModel car_model(int which) {
  simgen::SensorModel car;
  if (which == 0) {
    car.gyro_noise_sd = 0.004;
    car.accel_noise_sd = 0.02;
  } else {
    car.gyro_noise_sd = 0.005;
    car.accel_noise_sd = 0.025;
    car.mount_rpy_deg = Vec3{4.0, -8.0, 35.0};
  }
  return car;
}

}  // namespace

std::vector<FactorResult> factor_analysis(const RunConfig& config, const std::vector<simgen::DriverProfile>& panel,
                                          const FactorOptions& options) {
  if (panel.size() < 2) throw ConfigError("factor analysis needs at least two drivers");
  config.validate();
  simgen::RouteStyle style;
  style.turns = options.turns_per_route;
  style.lane_change_prob = 0.0;
  style.u_turn_prob = 0.0;
  style.stop_prob = 0.0;

  std::vector<FactorResult> results;
  const auto& cases = factor_cases();
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const FactorCase& fc = cases[c];
    FactorResult res;
    res.factor = fc;
    double acc_sum = 0.0;
    for (std::size_t rep = 0; rep < options.repetitions; ++rep) {
      const std::uint64_t rep_seed = derive_seed(config.seed, "factor", c * 1000 + rep);
      const std::size_t a = rep % panel.size();
      const std::size_t b = fc.same_driver ? a : (a + 1 + rep) % panel.size();
      const simgen::RouteScript route_a = simgen::random_route(style, derive_seed(rep_seed, "route", 0));
      const simgen::RouteScript route_b =
          fc.same_route ? route_a : simgen::random_route(style, derive_seed(rep_seed, "route", 1));
      const simgen::SensorModel car_a = car_model(0);
      const simgen::SensorModel car_b = car_model(fc.same_car ? 0 : 1);

      std::vector<CorpusTrip> trips;
      for (int side = 0; side < 2; ++side) {
        for (std::size_t i = 0; i < options.trips_per_side; ++i) {
          const auto sim = simgen::generate_trip(panel[side == 0 ? a : b], side == 0 ? route_a : route_b,
                                                 options.sample_period,
                                                 derive_seed(rep_seed, "trip", static_cast<std::uint64_t>(side) * 1000 + i),
                                                 side == 0 ? car_a : car_b);
          CorpusTrip trip;
          trip.driver = side == 0 ? "A" : "B";
          trip.trace = sim.trace;
          trips.push_back(std::move(trip));
        }
      }
      const auto records = extract_corpus(trips, config);
      const auto report = classify::kfold_eval(samples_of(records), classify::ModelKind::RandomForest, config.folds,
                                               derive_seed(rep_seed, "kfold"));
      acc_sum += report.accuracy;
      res.turns = records.size();
    }
    res.accuracy = acc_sum / static_cast<double>(options.repetitions);
    results.push_back(res);
  }
  return results;
}

// ---------------------------------------------------------------------------
// Suite

SuiteReport run_eval_suite(const RunConfig& config, const std::vector<CorpusTrip>& corpus,
                           const SuiteOptions& options) {
  config.validate();
  if (corpus.empty()) throw InputError("corpus is empty");
  SuiteReport rep;
  rep.config = config;
  rep.trips = corpus.size();
  const std::vector<TurnRecord> records = extract_corpus(corpus, config, true);
  rep.turns = records.size();
  const std::vector<classify::Sample> data = samples_of(records);
  {
    std::set<std::string> labels;
    for (const auto& s : data) labels.insert(s.label);
    rep.drivers.assign(labels.begin(), labels.end());
  }
  if (rep.drivers.size() < 2) throw InputError("corpus needs at least two drivers");
  if (!config.priors.empty() && config.priors.size() != rep.drivers.size()) {
    throw ConfigError("prior count does not match the number of drivers");
  }

  rep.random_forest =
      classify::kfold_eval(data, classify::ModelKind::RandomForest, config.folds, derive_seed(config.seed, "rf"));
  rep.naive_bayes =
      classify::kfold_eval(data, classify::ModelKind::GaussianNB, config.folds, derive_seed(config.seed, "nb"));
  rep.trip_curve = trip_accuracy_curve(data, options.max_trip_turns, options.trip_draws,
                                       derive_seed(config.seed, "trip-curve"), config.priors);
  for (classify::ModelKind kind : {classify::ModelKind::GaussianNB, classify::ModelKind::RandomForest}) {
    rep.ablation.push_back(
        interpolation_ablation(records, kind, config.folds, derive_seed(config.seed, "ablation")));
  }
  const std::vector<TurnRecord> subset =
      options.perr_drivers ? first_drivers(records, options.perr_drivers) : records;
  rep.perr = label_noise_sweep(samples_of(subset), options.perr_levels, classify::ModelKind::RandomForest,
                               config.folds, derive_seed(config.seed, "perr"));
  return rep;
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

}  // namespace

std::string summary_text(const SuiteReport& r) {
  std::ostringstream s;
  char buf[160];
  s << "turnprint evaluation report\n";
  s << "trips: " << r.trips << "  turns: " << r.turns << "  drivers: " << r.drivers.size() << "\n\n";
  s << "maneuver-based " << r.config.folds << "-fold accuracy\n";
  std::snprintf(buf, sizeof buf, "  random forest: %.4f\n  naive Bayes:   %.4f\n", r.random_forest.accuracy,
                r.naive_bayes.accuracy);
  s << buf << "\ntrip-based accuracy vs number of turns\n";
  for (std::size_t n = 0; n < r.trip_curve.size(); ++n) {
    std::snprintf(buf, sizeof buf, "  %2zu turns: %.4f\n", n + 1, r.trip_curve[n]);
    s << buf;
  }
  for (const AblationResult& a : r.ablation) {
    s << "\ninterpolation ablation (" << (a.kind == classify::ModelKind::GaussianNB ? "naive Bayes" : "random forest")
      << ", per-direction models)\n";
    std::snprintf(buf, sizeof buf,
                  "  all:   with %.4f  without %.4f\n  left:  with %.4f  without %.4f  (%zu turns)\n", a.with_interp,
                  a.without_interp, a.left_with, a.left_without, a.left_turns);
    s << buf;
    std::snprintf(buf, sizeof buf, "  right: with %.4f  without %.4f  (%zu turns)\n", a.right_with, a.right_without,
                  a.right_turns);
    s << buf;
  }
  s << "\nerroneous-label sweep (random forest)\n";
  for (const SweepPoint& p : r.perr) {
    std::snprintf(buf, sizeof buf, "  p_err %5.1f%%: %.4f\n", p.p_err, p.accuracy);
    s << buf;
  }
  if (!r.factors.empty()) {
    s << "\nfactor analysis (binary random forest)\n";
    for (const FactorResult& f : r.factors) {
      std::snprintf(buf, sizeof buf, "  %s %-50s %.4f\n", f.factor.name.c_str(), f.factor.description.c_str(),
                    f.accuracy);
      s << buf;
    }
  }
  s << "\neffective configuration\n" << r.config.to_json().dump(2) << '\n';
  return s.str();
}

void write_report(const fs::path& dir, const SuiteReport& r) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "kfold.csv");
    out << "classifier,accuracy,mean_fold_accuracy\n";
    out << "rf," << r.random_forest.accuracy << ',' << r.random_forest.mean_accuracy << '\n';
    out << "nb," << r.naive_bayes.accuracy << ',' << r.naive_bayes.mean_accuracy << '\n';
  }
  {
    auto out = open_out(dir / "trip_curve.csv");
    out << "turns,accuracy\n";
    for (std::size_t n = 0; n < r.trip_curve.size(); ++n) out << n + 1 << ',' << r.trip_curve[n] << '\n';
  }
  {
    auto out = open_out(dir / "interpolation.csv");
    out << "classifier,direction,turns,with_interpolation,without_interpolation\n";
    for (const AblationResult& a : r.ablation) {
      const char* k = classify::to_string(a.kind);
      out << k << ",all," << a.left_turns + a.right_turns << ',' << a.with_interp << ',' << a.without_interp << '\n';
      out << k << ",left," << a.left_turns << ',' << a.left_with << ',' << a.left_without << '\n';
      out << k << ",right," << a.right_turns << ',' << a.right_with << ',' << a.right_without << '\n';
    }
  }
  {
    auto out = open_out(dir / "perr.csv");
    out << "p_err,accuracy\n";
    for (const SweepPoint& p : r.perr) out << p.p_err << ',' << p.accuracy << '\n';
  }
  {
    auto out = open_out(dir / "confusion_rf.csv");
    out << "true\\predicted";
    for (const auto& c : r.random_forest.classes) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < r.random_forest.classes.size(); ++i) {
      out << r.random_forest.classes[i];
      for (std::size_t v : r.random_forest.confusion[i]) out << ',' << v;
      out << '\n';
    }
  }
  if (!r.factors.empty()) {
    auto out = open_out(dir / "factors.csv");
    out << "case,description,same_driver,accuracy,turns\n";
    for (const FactorResult& f : r.factors) {
      out << f.factor.name << ",\"" << f.factor.description << "\"," << (f.factor.same_driver ? 1 : 0) << ','
          << f.accuracy << ',' << f.turns << '\n';
    }
  }
  auto out = open_out(dir / "summary.txt");
  out << summary_text(r);
}

}  // namespace turnprint::eval
