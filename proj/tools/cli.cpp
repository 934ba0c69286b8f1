#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "turnprint/classify.hpp"
#include "turnprint/enroll.hpp"
#include "turnprint/experiments.hpp"
#include "turnprint/features.hpp"
#include "turnprint/rng.hpp"
#include "turnprint/simgen.hpp"
#include "turnprint/trace.hpp"
#include "turnprint/turns.hpp"

namespace turnprint::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

json read_json_file(const std::string& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

/// Writes to the named file, or to `fallback` when the path is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InputError("cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::optional<bool> parse_aligned(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("--aligned takes true or false");
}

bool has_extension(const std::string& path, const std::string& ext) { return fs::path(path).extension() == ext; }

/// Feature vectors from a feature CSV or a turn JSON-lines file.
std::vector<features::FeatureVector> load_vectors(const std::string& path) {
  std::ifstream in = open_in(path);
  if (has_extension(path, ".csv")) return features::read_feature_csv(in);
  std::vector<features::FeatureVector> out;
  for (const turns::LabeledTurn& t : turns::read_turns_jsonl(in)) {
    features::FeatureVector v = features::build_feature_vector(t.turn);
    v.label = t.label;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> values_of(const std::vector<features::FeatureVector>& vectors) {
  std::vector<std::vector<double>> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(v.values);
  return out;
}

json to_json(const enroll::Assignment& a) {
  json j;
  j["label"] = a.label;
  j["created"] = a.created;
  j["best_loglikelihood"] = a.best_loglikelihood ? json(*a.best_loglikelihood) : json(nullptr);
  j["loglikelihoods"] = a.loglikelihoods;
  return j;
}

// Per-subcommand option storage. Everything is bound before parsing.
struct SimulateArgs {
  std::string profile, route, sensor, output, truth;
  double sample_period = 0.01;
  std::size_t drivers = 0;
  std::size_t trips = 8;
  bool noise_free = false;
};

struct ExtractArgs {
  std::string trace, aligned, label, output;
};

struct FeaturizeArgs {
  std::vector<std::string> turns;
  std::string label, output;
};

struct TrainArgs {
  std::vector<std::string> features;
  std::string kind = "rf";
  std::string output;
};

struct IdentifyArgs {
  std::string model, turns, output;
  bool trip = false;
};

struct EnrollArgs {
  std::string table, trip;
};

struct CalibrateArgs {
  std::string manifest;
};

struct EvalArgs {
  std::string manifest, output;
  bool synthetic = false;
  std::size_t drivers = 12;
  std::size_t trips = 8;
  bool factors = false;
  eval::SuiteOptions suite;
};

struct PerturbArgs {
  std::string trace, aligned, output;
  double noise_sd = 0.0;
  std::string trigger = "always";
};

void simulate(const SimulateArgs& a, const eval::RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (a.output.empty()) throw ConfigError("simulate needs -o");
  if (a.drivers > 0) {
    eval::CorpusSpec spec;
    spec.drivers = a.drivers;
    spec.trips_per_driver = a.trips;
    spec.sample_period = a.sample_period;
    spec.seed = cfg.seed;
    spec.noise_free = a.noise_free;
    if (!a.sensor.empty()) spec.sensor = simgen::SensorModel::from_json(read_json_file(a.sensor));
    const auto corpus = eval::synthetic_corpus(spec);
    eval::write_corpus(a.output, corpus);
    err << "wrote " << corpus.size() << " trips to " << (fs::path(a.output) / "manifest.jsonl").string() << "\n";
    return;
  }
  if (a.profile.empty() || a.route.empty()) throw ConfigError("simulate needs --profile and --route, or --drivers");
  const auto profile = simgen::DriverProfile::from_json(read_json_file(a.profile));
  const auto route = simgen::RouteScript::from_json(read_json_file(a.route));
  simgen::SensorModel sensor;
  if (!a.sensor.empty()) sensor = simgen::SensorModel::from_json(read_json_file(a.sensor));
  const auto trip = simgen::generate_trip(profile, route, a.sample_period, cfg.seed, sensor);
  {
    Sink sink(a.output, out);
    trace::write_trace_csv(*sink, trip.trace);
  }
  if (!a.truth.empty()) {
    Sink sink(a.truth, out);
    *sink << simgen::annotations_to_json(trip.annotations).dump(2) << "\n";
  }
}

void extract(const ExtractArgs& a, const eval::RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const trace::RawTrace raw = trace::read_trace_csv_file(a.trace, parse_aligned(a.aligned));
  const turns::Extraction ex = turns::extract_turns(raw, cfg.extract_options());
  std::vector<turns::LabeledTurn> labeled;
  for (const auto& t : ex.turns) {
    labeled.push_back({t, a.label.empty() ? std::nullopt : std::optional<std::string>(a.label)});
  }
  Sink sink(a.output, out);
  turns::write_turns_jsonl(*sink, labeled);
  err << ex.turns.size() << " turns from " << ex.events << " steering events\n";
}

void featurize(const FeaturizeArgs& a, std::ostream& out) {
  std::vector<features::FeatureVector> all;
  for (const auto& path : a.turns) {
    for (auto& v : load_vectors(path)) {
      if (!a.label.empty()) v.label = a.label;
      all.push_back(std::move(v));
    }
  }
  Sink sink(a.output, out);
  features::write_feature_csv(*sink, all);
}

void train(const TrainArgs& a, const eval::RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<features::FeatureVector> all;
  for (const auto& path : a.features) {
    auto v = load_vectors(path);
    all.insert(all.end(), v.begin(), v.end());
  }
  const auto data = classify::to_samples(all);
  const auto model = classify::train(data, classify::model_kind_from_string(a.kind), cfg.seed);
  Sink sink(a.output, out);
  *sink << model.serialize() << "\n";
  err << "trained " << classify::to_string(model.kind()) << " on " << data.size() << " turns, "
      << model.classes().size() << " drivers\n";
}

void identify(const IdentifyArgs& a, const eval::RunConfig& cfg, std::ostream& out) {
  std::ifstream min = open_in(a.model);
  std::stringstream text;
  text << min.rdbuf();
  classify::TrainedModel model = [&] {
    try {
      return classify::TrainedModel::deserialize(text.str());
    } catch (const json::exception& e) {
      throw InputError(a.model + ": " + e.what());
    }
  }();
  const auto vectors = load_vectors(a.turns);
  Sink sink(a.output, out);
  if (a.trip) {
    const classify::GaussianNaiveBayes* nb = model.naive_bayes();
    if (!nb) throw ConfigError("trip-level identification needs a naive Bayes model");
    const auto pred = classify::predict_trip_map(*nb, values_of(vectors), cfg.priors);
    json j;
    j["label"] = pred.label;
    j["n_turns"] = pred.n_turns;
    for (std::size_t k = 0; k < model.classes().size(); ++k) j["log_scores"][model.classes()[k]] = pred.log_scores[k];
    *sink << j.dump(2) << "\n";
    return;
  }
  *sink << "turn,direction,predicted";
  for (const auto& c : model.classes()) *sink << ",score_" << c;
  *sink << "\n";
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto pred = classify::predict_turn(model, vectors[i]);
    *sink << i << "," << to_string(vectors[i].direction) << "," << pred.label;
    for (double s : pred.scores) *sink << "," << s;
    *sink << "\n";
  }
}

void enroll_trip(const EnrollArgs& a, const eval::RunConfig& cfg, std::ostream& out) {
  enroll::ProfileTable table;
  if (fs::exists(a.table)) {
    std::ifstream in = open_in(a.table);
    table = enroll::ProfileTable::read_jsonl(in);
  }
  const auto trip = values_of(load_vectors(a.trip));
  if (trip.empty()) throw InputError(a.trip + " holds no turns");
  enroll::GateOptions opt;
  opt.threshold = cfg.gate_threshold;
  opt.components = cfg.gmm_components;
  opt.root_seed = cfg.seed;
  const enroll::Assignment as = enroll::assign_or_new_driver(table, trip, opt);
  {
    std::ofstream t(a.table);
    if (!t) throw InputError("cannot write " + a.table);
    table.write_jsonl(t);
  }
  out << to_json(as).dump(2) << "\n";
}

void calibrate(const CalibrateArgs& a, const eval::RunConfig& cfg, std::ostream& out) {
  const auto corpus = eval::read_manifest(a.manifest);
  const auto records = eval::extract_corpus(corpus, cfg);
  std::map<std::string, std::map<std::size_t, enroll::TripVectors>> by_driver;
  for (const auto& r : records) by_driver[r.driver][r.trip].push_back(r.features.values);
  std::vector<std::vector<enroll::TripVectors>> drivers;
  for (auto& [label, trips] : by_driver) {
    std::vector<enroll::TripVectors> t;
    for (auto& [id, v] : trips) t.push_back(std::move(v));
    drivers.push_back(std::move(t));
  }
  const auto cal = enroll::calibrate_gate(drivers, cfg.gmm_components, derive_seed(cfg.seed, "gate-calibration"));
  json j;
  j["threshold"] = cal.threshold;
  j["balanced_accuracy"] = cal.balanced_accuracy;
  j["same_pairs"] = cal.same_scores.size();
  j["cross_pairs"] = cal.cross_scores.size();
  out << j.dump(2) << "\n";
}

void evaluate(const EvalArgs& a, const eval::RunConfig& cfg, std::ostream& out) {
  if (a.output.empty()) throw ConfigError("eval needs -o <report dir>");
  std::vector<eval::CorpusTrip> corpus;
  if (!a.manifest.empty()) {
    corpus = eval::read_manifest(a.manifest);
  } else if (a.synthetic) {
    eval::CorpusSpec spec;
    spec.drivers = a.drivers;
    spec.trips_per_driver = a.trips;
    spec.seed = cfg.seed;
    corpus = eval::synthetic_corpus(spec);
  } else {
    throw ConfigError("eval needs --manifest or --synthetic");
  }
  eval::SuiteReport report = eval::run_eval_suite(cfg, corpus, a.suite);
  if (a.factors) {
    const auto panel = simgen::make_driver_panel(a.drivers, derive_seed(cfg.seed, "factor-panel"));
    report.factors = eval::factor_analysis(cfg, panel);
  }
  eval::write_report(a.output, report);
  out << eval::summary_text(report);
}

void perturb_trace(const PerturbArgs& a, const eval::RunConfig& cfg, std::ostream& out) {
  if (!(a.noise_sd >= 0.0)) throw ConfigError("--noise-sd must be non-negative");
  const trace::RawTrace raw = trace::read_trace_csv_file(a.trace, parse_aligned(a.aligned));
  const trace::RawTrace noisy =
      eval::perturb(raw, a.noise_sd, eval::trigger_from_string(a.trigger), cfg.delta_bump, cfg.seed);
  Sink sink(a.output, out);
  trace::write_trace_csv(*sink, noisy);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Driver fingerprinting from vehicle IMU turns", "turnprint"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML file (keys match the long option names)");

  eval::RunConfig cfg;
  app.add_option("--seed", cfg.seed, "Root seed for every randomized step");
  app.add_option("--delta-bump,--delta_bump", cfg.delta_bump, "Yaw-rate threshold that opens a steering event (rad/s)");
  app.add_option("--epsilon", cfg.epsilon, "Yaw-rate level treated as zero at event edges (rad/s)");
  app.add_option("--cutoff-hz,--cutoff_hz", cfg.cutoff_hz, "Low-pass cutoff (Hz)");
  app.add_option("--length,-L", cfg.length, "Samples per interpolated turn");
  app.add_option("--folds", cfg.folds, "Cross-validation folds");
  app.add_option("--gmm-k,--gmm_k", cfg.gmm_components, "Mixture components per enrolled driver");
  app.add_option("--threshold", cfg.gate_threshold, "Gate threshold on the mean per-turn log density");
  app.add_option("--priors", cfg.priors, "Driver priors in sorted label order (default uniform)")->delimiter(',');

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic trip, or a labeled corpus with --drivers");
  c_sim->add_option("--profile", sim.profile, "Driver profile JSON");
  c_sim->add_option("--route", sim.route, "Route script JSON");
  c_sim->add_option("--sensor", sim.sensor, "Sensor model JSON");
  c_sim->add_option("-o,--output", sim.output, "Trace CSV, or corpus directory with --drivers");
  c_sim->add_option("--truth", sim.truth, "Ground-truth annotation JSON");
  c_sim->add_option("--sample-period", sim.sample_period, "Seconds between samples");
  c_sim->add_option("--drivers", sim.drivers, "Generate a corpus for a panel of this many drivers");
  c_sim->add_option("--trips", sim.trips, "Trips per driver in corpus mode");
  c_sim->add_flag("--noise-free", sim.noise_free, "Zero every noise source in corpus mode");

  ExtractArgs ext;
  auto* c_ext = app.add_subcommand("extract", "Detect turns in a trace and write them as JSON lines");
  c_ext->add_option("--trace", ext.trace, "Trace CSV")->required();
  c_ext->add_option("--aligned", ext.aligned, "Override the trace's aligned marker (true|false)");
  c_ext->add_option("--label", ext.label, "Driver label attached to every turn");
  c_ext->add_option("-o,--output", ext.output, "Output file (default stdout)");

  FeaturizeArgs fea;
  auto* c_fea = app.add_subcommand("featurize", "Turn JSON lines to a feature CSV");
  c_fea->add_option("--turns", fea.turns, "Turn JSON-lines files")->required();
  c_fea->add_option("--label", fea.label, "Override the driver label");
  c_fea->add_option("-o,--output", fea.output, "Output file (default stdout)");

  TrainArgs trn;
  auto* c_trn = app.add_subcommand("train", "Train a driver classifier");
  c_trn->add_option("--features", trn.features, "Labeled feature CSV or turn JSON-lines files")->required();
  c_trn->add_option("--kind", trn.kind, "nb or rf");
  c_trn->add_option("-o,--output", trn.output, "Model JSON (default stdout)");

  IdentifyArgs idn;
  auto* c_idn = app.add_subcommand("identify", "Identify the driver of turns or of a whole trip");
  c_idn->add_option("--model", idn.model, "Model JSON")->required();
  c_idn->add_option("--turns", idn.turns, "Turn JSON lines or feature CSV")->required();
  c_idn->add_flag("--trip", idn.trip, "Fuse all turns into one trip-level decision (naive Bayes)");
  c_idn->add_option("-o,--output", idn.output, "Output file (default stdout)");

  EnrollArgs enr;
  auto* c_enr = app.add_subcommand("enroll", "Gate a trip against the profile table, enrolling a new driver if needed");
  c_enr->add_option("--table", enr.table, "Profile table (JSON lines); created when missing")->required();
  c_enr->add_option("--trip", enr.trip, "Turn JSON lines or feature CSV of one trip")->required();

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "Choose a gate threshold from a labeled corpus");
  c_cal->add_option("--manifest", cal.manifest, "Corpus manifest")->required();

  EvalArgs evl;
  auto* c_evl = app.add_subcommand("eval", "Run the evaluation suite and write a report directory");
  c_evl->add_option("--manifest", evl.manifest, "Corpus manifest");
  c_evl->add_flag("--synthetic", evl.synthetic, "Evaluate on a freshly generated synthetic corpus");
  c_evl->add_option("--drivers", evl.drivers, "Panel size for --synthetic and --factors");
  c_evl->add_option("--trips", evl.trips, "Trips per driver for --synthetic");
  c_evl->add_flag("--factors", evl.factors, "Also run the driver/route/car factor analysis");
  c_evl->add_option("--trip-draws", evl.suite.trip_draws, "Random trips per point of the accuracy curve");
  c_evl->add_option("--max-turns", evl.suite.max_trip_turns, "Longest trip on the accuracy curve");
  c_evl->add_option("--perr", evl.suite.perr_levels, "Label error percentages")->delimiter(',');
  c_evl->add_option("--perr-drivers", evl.suite.perr_drivers, "Drivers in the label-noise sweep (0 = all)");
  c_evl->add_option("-o,--output", evl.output, "Report directory");

  PerturbArgs per;
  auto* c_per = app.add_subcommand("perturb", "Add seeded sensor noise to a trace");
  c_per->add_option("--trace", per.trace, "Trace CSV")->required();
  c_per->add_option("--aligned", per.aligned, "Override the trace's aligned marker (true|false)");
  c_per->add_option("--noise-sd", per.noise_sd, "Noise standard deviation")->required();
  c_per->add_option("--trigger", per.trigger, "always or on_bump");
  c_per->add_option("-o,--output", per.output, "Output file (default stdout)");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    cfg.validate();
    if (*c_sim) simulate(sim, cfg, out, err);
    else if (*c_ext) extract(ext, cfg, out, err);
    else if (*c_fea) featurize(fea, out);
    else if (*c_trn) train(trn, cfg, out, err);
    else if (*c_idn) identify(idn, cfg, out);
    else if (*c_enr) enroll_trip(enr, cfg, out);
    else if (*c_cal) calibrate(cal, cfg, out);
    else if (*c_evl) evaluate(evl, cfg, out);
    else if (*c_per) perturb_trace(per, cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kSuccess;
}

}  // namespace turnprint::cli
