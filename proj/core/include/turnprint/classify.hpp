#pragma once

// Driver classifiers: Gaussian naive Bayes and a Random Forest, per-turn
// prediction, trip-level MAP fusion and stratified k-fold evaluation.
//
// Class lists are always sorted lexicographically; every argmax breaks ties
// toward the lexicographically smallest label.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "turnprint/features.hpp"

namespace turnprint::classify {

struct Sample {
  std::vector<double> features;
  std::string label;
};

/// Labeled samples from feature vectors; throws if any vector is unlabeled.
std::vector<Sample> to_samples(std::span<const features::FeatureVector> vectors);

enum class ModelKind { GaussianNB, RandomForest };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

inline constexpr double kNbVarianceFloor = 1e-9;

class GaussianNaiveBayes {
 public:
  /// Fits per-class per-feature Gaussians (MLE variance, floored) and
  /// frequency priors. Accepts a single sample per class.
  static GaussianNaiveBayes fit(std::span<const Sample> data, double variance_floor = kNbVarianceFloor);

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t n_features() const { return n_features_; }

  /// log p(x | class) for every class.
  std::vector<double> class_log_likelihoods(std::span<const double> x) const;
  /// log p(x | class) + log prior for every class.
  std::vector<double> scores(std::span<const double> x) const;

  const std::vector<std::vector<double>>& means() const { return means_; }
  const std::vector<std::vector<double>>& variances() const { return variances_; }
  const std::vector<double>& log_priors() const { return log_priors_; }

  nlohmann::json to_json() const;
  static GaussianNaiveBayes from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> classes_;
  std::size_t n_features_ = 0;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> variances_;
  std::vector<double> log_priors_;
};

struct RandomForestParams {
  std::size_t n_trees = 100;
  std::uint64_t seed = 0;
  /// Features tried per split; 0 means floor(sqrt(n_features)).
  std::size_t max_features = 0;
  std::size_t min_leaf = 1;
};

class RandomForest {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = -1;  // class index at leaves
  };
  using Tree = std::vector<Node>;

  /// Bootstrap-aggregated Gini trees grown to purity (or min_leaf). Rows
  /// are put in a canonical order first, so the fitted forest depends only
  /// on the multiset of rows and the seed.
  static RandomForest fit(std::span<const Sample> data, const RandomForestParams& params);

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t n_features() const { return n_features_; }
  const std::vector<Tree>& trees() const { return trees_; }
  std::uint64_t seed() const { return seed_; }

  /// Fraction of trees voting for each class.
  std::vector<double> vote_fractions(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> classes_;
  std::size_t n_features_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Tree> trees_;
};

/// Immutable trained classifier of either kind.
class TrainedModel {
 public:
  explicit TrainedModel(GaussianNaiveBayes nb, std::uint64_t seed = 0) : model_(std::move(nb)), seed_(seed) {}
  explicit TrainedModel(RandomForest rf) : model_(std::move(rf)), seed_(std::get<RandomForest>(model_).seed()) {}

  ModelKind kind() const;
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& classes() const;
  std::size_t n_features() const;

  const GaussianNaiveBayes* naive_bayes() const { return std::get_if<GaussianNaiveBayes>(&model_); }
  const RandomForest* random_forest() const { return std::get_if<RandomForest>(&model_); }

  /// Versioned JSON document: format, version, kind, classes, seed, params.
  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
  std::string serialize() const;
  static TrainedModel deserialize(const std::string& text);

 private:
  std::variant<GaussianNaiveBayes, RandomForest> model_;
  std::uint64_t seed_ = 0;
};

/// Validated training entry point: >= 2 classes, >= 2 samples per class,
/// equal dimensions.
TrainedModel train(std::span<const Sample> data, ModelKind kind, std::uint64_t seed);

/// Same as train() without the per-class count precondition (used inside
/// cross-validation folds).
TrainedModel fit_model(std::span<const Sample> data, ModelKind kind, std::uint64_t seed);

struct TurnPrediction {
  std::string label;
  std::vector<double> scores;  // aligned with model classes
};

TurnPrediction predict_turn(const TrainedModel& model, std::span<const double> x);
TurnPrediction predict_turn(const TrainedModel& model, const features::FeatureVector& v);

/// Index of the largest score, ties to the smallest index.
std::size_t argmax_first(std::span<const double> scores);

struct TripPrediction {
  std::string label;
  std::vector<double> log_scores;  // aligned with classes
  std::size_t n_turns = 0;
};

/// argmax_k [log prior_k + sum_i per_turn[i][k]] over classes.
TripPrediction fuse_trip(const std::vector<std::string>& classes,
                         std::span<const std::vector<double>> per_turn_log_likelihoods,
                         std::span<const double> priors);

/// Trip-level MAP decision with naive Bayes class-conditional likelihoods.
/// `priors` is aligned with model.classes(); empty means uniform.
TripPrediction predict_trip_map(const GaussianNaiveBayes& model, std::span<const std::vector<double>> turns,
                                std::span<const double> priors = {});

struct KFoldReport {
  std::vector<std::string> classes;
  std::vector<std::size_t> fold_of;  // per input sample
  std::vector<std::string> predicted;  // per input sample
  std::vector<double> fold_accuracy;
  double accuracy = 0.0;       // pooled correct / total
  double mean_accuracy = 0.0;  // mean over non-empty folds
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped.
std::vector<std::size_t> stratified_folds(std::span<const std::string> labels, std::size_t folds,
                                          std::uint64_t seed);

KFoldReport kfold_eval(std::span<const Sample> data, ModelKind kind, std::size_t folds, std::uint64_t seed);

/// Same as kfold_eval, but the training part of every fold is passed through
/// `prepare` first (test samples keep their labels). Used for label-noise
/// experiments.
KFoldReport kfold_eval(std::span<const Sample> data, ModelKind kind, std::size_t folds, std::uint64_t seed,
                       const std::function<std::vector<Sample>(std::vector<Sample>, std::size_t fold)>& prepare);

}  // namespace turnprint::classify
