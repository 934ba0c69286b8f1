#pragma once

// Evaluation harness: run configuration, labeled trip corpora (synthetic or
// loaded from a manifest), turn extraction over a corpus and the experiment
// suite (maneuver k-fold, trip-length curve, interpolation ablation, label
// noise sweep, factor analysis, sensor perturbation).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "turnprint/classify.hpp"
#include "turnprint/features.hpp"
#include "turnprint/simgen.hpp"
#include "turnprint/trace.hpp"
#include "turnprint/turns.hpp"

namespace turnprint::eval {

struct RunConfig {
  double delta_bump = turns::kDefaultDeltaBump;
  double epsilon = turns::kDefaultEpsilon;
  double cutoff_hz = 2.0;
  std::size_t length = turns::kDefaultLength;
  std::uint64_t seed = 0;
  std::size_t folds = 10;
  std::size_t gmm_components = 2;
  double gate_threshold = 0.0;
  std::vector<double> priors;  // empty = uniform

  /// Throws ConfigError when a value leaves its documented range.
  void validate() const;
  turns::ExtractOptions extract_options(bool interpolate = true) const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

/// One labeled trip.
struct CorpusTrip {
  std::string driver;
  std::string id;
  trace::RawTrace trace;
  std::vector<simgen::Annotation> truth;  // empty for recorded data
};

struct CorpusSpec {
  std::size_t drivers = 12;
  std::size_t trips_per_driver = 8;
  simgen::RouteStyle style;
  double sample_period = 0.01;
  std::uint64_t seed = 0;
  simgen::PanelRanges ranges;
  simgen::SensorModel sensor;
  /// Zero every noise source (driver jitter, accel noise, sensor noise).
  bool noise_free = false;
};

/// Driver label for panel index i: "driver01", "driver02", ...
std::string driver_label(std::size_t index);

/// Generates trips_per_driver random-route trips for every panel driver.
std::vector<CorpusTrip> synthetic_corpus(const CorpusSpec& spec);
std::vector<CorpusTrip> synthetic_corpus(const CorpusSpec& spec, const std::vector<simgen::DriverProfile>& panel);

/// Manifest: JSON lines {"driver": ..., "trace": <csv path>, "id": ...,
/// "truth": <optional json path>}; paths are relative to the manifest.
std::vector<CorpusTrip> read_manifest(const std::filesystem::path& manifest);
void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusTrip>& trips);

struct TurnRecord {
  std::string driver;
  std::size_t trip = 0;  // index into the corpus
  Direction direction = Direction::Right;
  std::size_t native_length = 0;
  features::FeatureVector features;                // from the interpolated turn
  std::optional<features::FeatureVector> native;  // uninterpolated, when requested
};

/// Features of the native-rate turn truncated to a multiple of 5 samples.
features::FeatureVector uninterpolated_features(const turns::TurnSegment& turn);

std::vector<TurnRecord> extract_corpus(const std::vector<CorpusTrip>& trips, const RunConfig& config,
                                       bool with_native = false);

std::vector<classify::Sample> samples_of(const std::vector<TurnRecord>& records, bool native = false);

/// Keeps the records of the first n drivers in sorted label order.
std::vector<TurnRecord> first_drivers(const std::vector<TurnRecord>& records, std::size_t n);

// ---------------------------------------------------------------------------

/// Accuracy of trip-level MAP identification against the number of turns in
/// the trip. Each draw picks a driver, holds out max_turns random turns of
/// that driver, trains naive Bayes on the rest and scores prefixes of the
/// held-out turns. Entry n-1 is the mean accuracy with n turns.
std::vector<double> trip_accuracy_curve(const std::vector<classify::Sample>& data, std::size_t max_turns,
                                        std::size_t draws, std::uint64_t seed,
                                        const std::vector<double>& priors = {});

struct AblationResult {
  classify::ModelKind kind = classify::ModelKind::GaussianNB;
  double with_interp = 0.0;
  double without_interp = 0.0;
  double left_with = 0.0;
  double left_without = 0.0;
  double right_with = 0.0;
  double right_without = 0.0;
  std::size_t left_turns = 0;
  std::size_t right_turns = 0;
};

/// k-fold accuracy with interpolated and with native-length features. Left
/// and right turns are evaluated separately (one model family per
/// direction) and the same fold assignment is used for both feature sets.
/// Records without native features are skipped.
AblationResult interpolation_ablation(const std::vector<TurnRecord>& records, classify::ModelKind kind,
                                      std::size_t folds, std::uint64_t seed);

struct SweepPoint {
  double p_err = 0.0;
  double accuracy = 0.0;
};

/// k-fold accuracy when p_err percent of every training fold is relabeled.
std::vector<SweepPoint> label_noise_sweep(const std::vector<classify::Sample>& data,
                                          const std::vector<double>& levels, classify::ModelKind kind,
                                          std::size_t folds, std::uint64_t seed);

// ---------------------------------------------------------------------------

enum class Trigger { Always, OnBump };
Trigger trigger_from_string(const std::string& s);
const char* to_string(Trigger t);

/// Adds seeded Gaussian noise (noise_sd in rad/s for gyro axes and m/s^2 for
/// accel axes) to every sample, or only to samples whose yaw-rate magnitude
/// exceeds delta_bump. For device-frame traces the gyro norm is used.
trace::RawTrace perturb(const trace::RawTrace& trace, double noise_sd, Trigger trigger, double delta_bump,
                        std::uint64_t seed);

// ---------------------------------------------------------------------------

struct FactorCase {
  std::string name;
  std::string description;
  bool same_driver = false;
  bool same_route = false;
  bool same_car = false;
};

/// The six driver/route/car combinations of the factor analysis.
const std::vector<FactorCase>& factor_cases();

struct FactorOptions {
  std::size_t trips_per_side = 6;
  std::size_t turns_per_route = 8;
  std::size_t repetitions = 5;  // driver picks averaged per case
  double sample_period = 0.01;
};

struct FactorResult {
  FactorCase factor;
  double accuracy = 0.0;  // mean binary k-fold accuracy over repetitions
  std::size_t turns = 0;  // turns used in the last repetition
};

/// Binary Random Forest k-fold accuracy between two synthetic trip sets that
/// differ only in the factors each case varies.
std::vector<FactorResult> factor_analysis(const RunConfig& config, const std::vector<simgen::DriverProfile>& panel,
                                          const FactorOptions& options = {});

// ---------------------------------------------------------------------------

struct SuiteOptions {
  std::size_t trip_draws = 500;
  std::size_t max_trip_turns = 8;
  std::vector<double> perr_levels{0.0, 5.0, 10.0, 15.0, 20.0};
  std::size_t perr_drivers = 5;  // 0 = all drivers
};

struct SuiteReport {
  RunConfig config;
  std::size_t trips = 0;
  std::size_t turns = 0;
  std::vector<std::string> drivers;
  classify::KFoldReport random_forest;
  classify::KFoldReport naive_bayes;
  std::vector<double> trip_curve;
  std::vector<AblationResult> ablation;  // naive Bayes, then Random Forest
  std::vector<SweepPoint> perr;
  std::vector<FactorResult> factors;
};

SuiteReport run_eval_suite(const RunConfig& config, const std::vector<CorpusTrip>& corpus,
                           const SuiteOptions& options = {});

/// Writes kfold.csv, trip_curve.csv, interpolation.csv, perr.csv,
/// factors.csv (when present), confusion_rf.csv and summary.txt.
void write_report(const std::filesystem::path& dir, const SuiteReport& report);
std::string summary_text(const SuiteReport& report);

}  // namespace turnprint::eval
