#pragma once

// Driver enrollment: per-driver diagonal Gaussian mixtures, trip gating
// against the profile table, and label corruption for robustness sweeps.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "turnprint/classify.hpp"
#include "turnprint/features.hpp"

namespace turnprint::enroll {

inline constexpr std::size_t kDefaultComponents = 2;
inline constexpr double kGmmVarianceFloor = 1e-6;
inline constexpr double kGmmTolerance = 1e-6;
inline constexpr std::size_t kGmmMaxIterations = 200;
inline constexpr double kDefaultGateThreshold = 0.0;

struct GmmModel {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> variances;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double log_likelihood = 0.0;  // total over the training vectors

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }

  /// log p(x) under the mixture.
  double log_density(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static GmmModel from_json(const nlohmann::json& j);
};

/// EM for a diagonal-covariance mixture with k-means++ style seeding.
/// Needs at least K vectors of equal nonzero dimension.
GmmModel fit_gmm(std::span<const std::vector<double>> vectors, std::size_t components, std::uint64_t seed);

/// Mean per-vector log density, so gate thresholds do not depend on trip length.
double trip_loglikelihood(const GmmModel& model, std::span<const std::vector<double>> vectors);

struct ProfileEntry {
  std::string label;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> vectors;
  GmmModel gmm;
};

class ProfileTable {
 public:
  const std::vector<ProfileEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const ProfileEntry* find(const std::string& label) const;
  ProfileEntry* find(const std::string& label);

  /// Label the next created driver receives ("D1", "D2", ...).
  std::string next_label() const;

  void insert(ProfileEntry entry);

  void write_jsonl(std::ostream& out) const;
  static ProfileTable read_jsonl(std::istream& in);

 private:
  std::vector<ProfileEntry> entries_;
};

struct GateOptions {
  double threshold = kDefaultGateThreshold;
  std::size_t components = kDefaultComponents;
  std::uint64_t root_seed = 0;
};

struct Assignment {
  std::string label;
  bool created = false;
  std::optional<double> best_loglikelihood;  // empty when the table was empty
  std::vector<double> loglikelihoods;         // per entry, table order before insertion
};

/// Appends the trip to the best-matching entry when its gate statistic
/// reaches the threshold, otherwise enrolls a new driver.
Assignment assign_or_new_driver(ProfileTable& table, std::span<const std::vector<double>> trip,
                                const GateOptions& options = {});

/// Feature vectors of one trip.
using TripVectors = std::vector<std::vector<double>>;

struct GateCalibration {
  double threshold = 0.0;
  double balanced_accuracy = 0.0;
  std::vector<double> same_scores;   // held-out trip against its own driver
  std::vector<double> cross_scores;  // held-out trip against every other driver
};

/// Picks a gate threshold from labeled calibration trips. Each trip of each
/// driver is held out in turn and a mixture is fitted to the rest; the threshold is
/// the score midpoint that maximizes balanced accuracy between same-driver
/// and cross-driver held-out scores. Needs two drivers with two trips each.
GateCalibration calibrate_gate(const std::vector<std::vector<TripVectors>>& drivers,
                               std::size_t components = kDefaultComponents, std::uint64_t seed = 0);

/// Number of rows relabelled for a given error percentage.
std::size_t corrupted_count(std::size_t n, double p_err);

/// Relabels a seeded uniformly random subset of ceil(p_err/100 * n) rows with
/// labels drawn uniformly from the sorted set of labels present.
std::vector<classify::Sample> corrupt_labels(std::span<const classify::Sample> data, double p_err,
                                             std::uint64_t seed);
std::vector<features::FeatureVector> corrupt_labels(std::span<const features::FeatureVector> data, double p_err,
                                                    std::uint64_t seed);

}  // namespace turnprint::enroll
