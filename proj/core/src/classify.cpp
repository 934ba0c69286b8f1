#include "turnprint/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "turnprint/rng.hpp"

namespace turnprint::classify {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr const char* kModelFormat = "turnprint-model";
constexpr int kModelVersion = 1;

std::vector<std::string> sorted_classes(std::span<const Sample> data) {
  std::vector<std::string> classes;
  classes.reserve(data.size());
  for (const Sample& s : data) classes.push_back(s.label);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

std::size_t common_dimension(std::span<const Sample> data) {
  if (data.empty()) throw InputError("training data is empty");
  const std::size_t d = data.front().features.size();
  if (d == 0) throw InputError("samples have no features");
  for (const Sample& s : data) {
    if (s.features.size() != d) throw InputError("samples have inconsistent dimensions");
    if (s.label.empty()) throw InputError("sample label is empty");
  }
  return d;
}

std::size_t class_index(const std::vector<std::string>& classes, const std::string& label) {
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  return static_cast<std::size_t>(it - classes.begin());
}

void check_dimension(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw InputError("feature dimension mismatch: model expects " + std::to_string(expected) + ", got " +
                     std::to_string(got));
  }
}

}  // namespace

std::vector<Sample> to_samples(std::span<const features::FeatureVector> vectors) {
  std::vector<Sample> out;
  out.reserve(vectors.size());
  for (const features::FeatureVector& v : vectors) {
    if (!v.label) throw InputError("feature vector has no label");
    out.push_back({v.values, *v.label});
  }
  return out;
}

const char* to_string(ModelKind kind) { return kind == ModelKind::GaussianNB ? "nb" : "rf"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "nb") return ModelKind::GaussianNB;
  if (s == "rf") return ModelKind::RandomForest;
  throw ConfigError("unknown model kind '" + s + "' (expected nb or rf)");
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

GaussianNaiveBayes GaussianNaiveBayes::fit(std::span<const Sample> data, double variance_floor) {
  const std::size_t d = common_dimension(data);
  GaussianNaiveBayes nb;
  nb.classes_ = sorted_classes(data);
  nb.n_features_ = d;
  const std::size_t k = nb.classes_.size();
  nb.means_.assign(k, std::vector<double>(d, 0.0));
  nb.variances_.assign(k, std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (const Sample& s : data) {
    const std::size_t c = class_index(nb.classes_, s.label);
    ++counts[c];
    for (std::size_t j = 0; j < d; ++j) nb.means_[c][j] += s.features[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (double& m : nb.means_[c]) m /= static_cast<double>(counts[c]);
  }
  for (const Sample& s : data) {
    const std::size_t c = class_index(nb.classes_, s.label);
    for (std::size_t j = 0; j < d; ++j) {
      const double r = s.features[j] - nb.means_[c][j];
      nb.variances_[c][j] += r * r;
    }
  }
  nb.log_priors_.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (double& v : nb.variances_[c]) v = std::max(v / static_cast<double>(counts[c]), variance_floor);
    nb.log_priors_[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(data.size()));
  }
  return nb;
}

std::vector<double> GaussianNaiveBayes::class_log_likelihoods(std::span<const double> x) const {
  check_dimension(n_features_, x.size());
  std::vector<double> out(classes_.size(), 0.0);
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    double ll = 0.0;
    for (std::size_t j = 0; j < n_features_; ++j) {
      const double v = variances_[c][j];
      const double r = x[j] - means_[c][j];
      ll -= 0.5 * (kLog2Pi + std::log(v) + r * r / v);
    }
    out[c] = ll;
  }
  return out;
}

std::vector<double> GaussianNaiveBayes::scores(std::span<const double> x) const {
  std::vector<double> s = class_log_likelihoods(x);
  for (std::size_t c = 0; c < s.size(); ++c) s[c] += log_priors_[c];
  return s;
}

nlohmann::json GaussianNaiveBayes::to_json() const {
  return {{"n_features", n_features_}, {"classes", classes_}, {"means", means_},
          {"variances", variances_}, {"log_priors", log_priors_}};
}

GaussianNaiveBayes GaussianNaiveBayes::from_json(const nlohmann::json& j) {
  GaussianNaiveBayes nb;
  nb.n_features_ = j.at("n_features").get<std::size_t>();
  nb.classes_ = j.at("classes").get<std::vector<std::string>>();
  nb.means_ = j.at("means").get<std::vector<std::vector<double>>>();
  nb.variances_ = j.at("variances").get<std::vector<std::vector<double>>>();
  nb.log_priors_ = j.at("log_priors").get<std::vector<double>>();
  const std::size_t k = nb.classes_.size();
  if (nb.means_.size() != k || nb.variances_.size() != k || nb.log_priors_.size() != k) {
    throw InputError("naive Bayes tables disagree with class count");
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (nb.means_[c].size() != nb.n_features_ || nb.variances_[c].size() != nb.n_features_) {
      throw InputError("naive Bayes tables disagree with feature count");
    }
  }
  return nb;
}

// ---------------------------------------------------------------------------
// Random Forest

namespace {

struct ForestData {
  std::vector<double> x;  // row-major, canonical order
  std::vector<int> y;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t n_classes = 0;

  double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const ForestData& data, const RandomForestParams& params, std::size_t max_features, Rng& rng)
      : data_(data), params_(params), max_features_(max_features), rng_(rng) {
    feature_order_.resize(data.cols);
    class_counts_.resize(data.n_classes);
  }

  RandomForest::Tree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    RandomForest::Tree tree;
    struct Task {
      int node;
      std::size_t begin, end;
    };
    tree.push_back({});
    std::vector<Task> stack{{0, 0, rows_.size()}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      const int majority = count_classes(task.begin, task.end);
      const std::size_t n = task.end - task.begin;
      const bool pure = class_counts_[static_cast<std::size_t>(majority)] == n;
      SplitChoice split;
      if (!pure && n >= 2 * params_.min_leaf) split = find_split(task.begin, task.end);
      if (split.feature < 0) {
        tree[static_cast<std::size_t>(task.node)].label = majority;
        continue;
      }
      const auto mid_it = std::partition(
          rows_.begin() + static_cast<std::ptrdiff_t>(task.begin), rows_.begin() + static_cast<std::ptrdiff_t>(task.end),
          [&](std::size_t r) { return data_.at(r, static_cast<std::size_t>(split.feature)) <= split.threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
      const int left = static_cast<int>(tree.size());
      tree.push_back({});
      const int right = static_cast<int>(tree.size());
      tree.push_back({});
      RandomForest::Node& node = tree[static_cast<std::size_t>(task.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = right;
      node.label = majority;
      stack.push_back({right, mid, task.end});
      stack.push_back({left, task.begin, mid});
    }
    return tree;
  }

 private:
  int count_classes(std::size_t begin, std::size_t end) {
    std::fill(class_counts_.begin(), class_counts_.end(), 0);
    for (std::size_t i = begin; i < end; ++i) ++class_counts_[static_cast<std::size_t>(data_.y[rows_[i]])];
    std::size_t best = 0;
    for (std::size_t c = 1; c < class_counts_.size(); ++c) {
      if (class_counts_[c] > class_counts_[best]) best = c;
    }
    return static_cast<int>(best);
  }

  SplitChoice find_split(std::size_t begin, std::size_t end) {
    std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
    SplitChoice best;
    const std::size_t d = feature_order_.size();
    for (std::size_t k = 0; k < d; ++k) {
      // Lazily extend the Fisher-Yates shuffle one position at a time.
      const std::size_t pick = k + rng_.below(d - k);
      std::swap(feature_order_[k], feature_order_[pick]);
      evaluate_feature(feature_order_[k], begin, end, best);
      // Keep drawing past max_features only while no valid split exists.
      if (k + 1 >= max_features_ && best.feature >= 0) break;
    }
    return best;
  }

  void evaluate_feature(std::size_t f, std::size_t begin, std::size_t end, SplitChoice& best) {
    const std::size_t n = end - begin;
    column_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = rows_[begin + i];
      column_[i] = {data_.at(r, f), data_.y[r]};
    }
    std::sort(column_.begin(), column_.end());
    if (column_.front().first == column_.back().first) return;

    left_.assign(data_.n_classes, 0);
    right_.assign(data_.n_classes, 0);
    for (const auto& [v, c] : column_) ++right_[static_cast<std::size_t>(c)];
    double sq_left = 0.0;
    double sq_right = 0.0;
    for (double c : right_) sq_right += c * c;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const auto c = static_cast<std::size_t>(column_[k].second);
      sq_left += 2.0 * left_[c] + 1.0;
      sq_right -= 2.0 * right_[c] - 1.0;
      left_[c] += 1.0;
      right_[c] -= 1.0;
      const double lo = column_[k].first;
      const double hi = column_[k + 1].first;
      if (!(lo < hi)) continue;
      const std::size_t n_left = k + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < params_.min_leaf || n_right < params_.min_leaf) continue;
      // Minimising weighted Gini == maximising sum(c^2)/n over both sides.
      const double score = sq_left / static_cast<double>(n_left) + sq_right / static_cast<double>(n_right);
      if (score > best.score) {
        best.score = score;
        best.feature = static_cast<int>(f);
        double thr = 0.5 * (lo + hi);
        if (!(thr < hi)) thr = lo;
        best.threshold = thr;
      }
    }
  }

  const ForestData& data_;
  const RandomForestParams& params_;
  std::size_t max_features_;
  Rng& rng_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> feature_order_;
  std::vector<std::size_t> class_counts_;
  std::vector<std::pair<double, int>> column_;
  std::vector<double> left_;
  std::vector<double> right_;
};

}  // namespace

RandomForest RandomForest::fit(std::span<const Sample> data, const RandomForestParams& params) {
  const std::size_t d = common_dimension(data);
  if (params.n_trees == 0) throw ConfigError("random forest needs at least one tree");
  if (params.min_leaf == 0) throw ConfigError("min_leaf must be positive");

  RandomForest rf;
  rf.classes_ = sorted_classes(data);
  rf.n_features_ = d;
  rf.seed_ = params.seed;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (data[a].label != data[b].label) return data[a].label < data[b].label;
    return data[a].features < data[b].features;
  });
  ForestData fd;
  fd.rows = data.size();
  fd.cols = d;
  fd.n_classes = rf.classes_.size();
  fd.x.reserve(fd.rows * d);
  fd.y.reserve(fd.rows);
  for (std::size_t i : order) {
    fd.x.insert(fd.x.end(), data[i].features.begin(), data[i].features.end());
    fd.y.push_back(static_cast<int>(class_index(rf.classes_, data[i].label)));
  }

  const std::size_t mtry =
      params.max_features > 0
          ? std::min(params.max_features, d)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
  rf.trees_.reserve(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, "tree", t));
    std::vector<std::size_t> boot(fd.rows);
    for (std::size_t& b : boot) b = rng.below(fd.rows);
    TreeBuilder builder(fd, params, mtry, rng);
    rf.trees_.push_back(builder.build(std::move(boot)));
  }
  return rf;
}

std::vector<double> RandomForest::vote_fractions(std::span<const double> x) const {
  check_dimension(n_features_, x.size());
  std::vector<double> votes(classes_.size(), 0.0);
  for (const Tree& tree : trees_) {
    std::size_t node = 0;
    while (tree[node].feature >= 0) {
      const Node& nd = tree[node];
      node = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
    }
    votes[static_cast<std::size_t>(tree[node].label)] += 1.0;
  }
  for (double& v : votes) v /= static_cast<double>(trees_.size());
  return votes;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& n : tree) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
    trees.push_back(std::move(nodes));
  }
  return {{"n_features", n_features_}, {"classes", classes_}, {"seed", seed_}, {"trees", std::move(trees)}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest rf;
  rf.n_features_ = j.at("n_features").get<std::size_t>();
  rf.classes_ = j.at("classes").get<std::vector<std::string>>();
  rf.seed_ = j.at("seed").get<std::uint64_t>();
  for (const nlohmann::json& tj : j.at("trees")) {
    Tree tree;
    for (const nlohmann::json& nj : tj) {
      Node n;
      n.feature = nj.at(0).get<int>();
      n.threshold = nj.at(1).get<double>();
      n.left = nj.at(2).get<int>();
      n.right = nj.at(3).get<int>();
      n.label = nj.at(4).get<int>();
      tree.push_back(n);
    }
    const auto size = static_cast<int>(tree.size());
    for (const Node& n : tree) {
      const bool leaf_ok = n.feature < 0 && n.label >= 0 && n.label < static_cast<int>(rf.classes_.size());
      const bool split_ok = n.feature >= 0 && n.feature < static_cast<int>(rf.n_features_) && n.left > 0 &&
                            n.left < size && n.right > 0 && n.right < size;
      if (!leaf_ok && !split_ok) throw InputError("malformed random forest node");
    }
    if (tree.empty()) throw InputError("empty random forest tree");
    rf.trees_.push_back(std::move(tree));
  }
  if (rf.trees_.empty()) throw InputError("random forest has no trees");
  return rf;
}

// ---------------------------------------------------------------------------
// TrainedModel

ModelKind TrainedModel::kind() const {
  return std::holds_alternative<GaussianNaiveBayes>(model_) ? ModelKind::GaussianNB : ModelKind::RandomForest;
}

const std::vector<std::string>& TrainedModel::classes() const {
  return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.classes(); }, model_);
}

std::size_t TrainedModel::n_features() const {
  return std::visit([](const auto& m) { return m.n_features(); }, model_);
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["kind"] = to_string(kind());
  j["seed"] = seed_;
  j["classes"] = classes();
  j["params"] = std::visit([](const auto& m) { return m.to_json(); }, model_);
  return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw InputError("not a turnprint model");
    if (j.at("version").get<int>() != kModelVersion) throw InputError("unsupported model version");
    const ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
    const auto seed = j.at("seed").get<std::uint64_t>();
    if (kind == ModelKind::GaussianNB) return TrainedModel(GaussianNaiveBayes::from_json(j.at("params")), seed);
    return TrainedModel(RandomForest::from_json(j.at("params")));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model: ") + e.what());
  }
}

std::string TrainedModel::serialize() const { return to_json().dump(); }

TrainedModel TrainedModel::deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

TrainedModel fit_model(std::span<const Sample> data, ModelKind kind, std::uint64_t seed) {
  if (kind == ModelKind::GaussianNB) return TrainedModel(GaussianNaiveBayes::fit(data), seed);
  RandomForestParams params;
  params.seed = seed;
  return TrainedModel(RandomForest::fit(data, params));
}

TrainedModel train(std::span<const Sample> data, ModelKind kind, std::uint64_t seed) {
  common_dimension(data);
  std::map<std::string, std::size_t> counts;
  for (const Sample& s : data) ++counts[s.label];
  if (counts.size() < 2) throw InputError("training needs at least two classes");
  for (const auto& [label, n] : counts) {
    if (n < 2) throw InputError("class '" + label + "' has fewer than two training samples");
  }
  return fit_model(data, kind, seed);
}

std::size_t argmax_first(std::span<const double> scores) {
  if (scores.empty()) throw InputError("argmax over no classes");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

TurnPrediction predict_turn(const TrainedModel& model, std::span<const double> x) {
  TurnPrediction p;
  if (const auto* nb = model.naive_bayes()) {
    p.scores = nb->scores(x);
  } else {
    p.scores = model.random_forest()->vote_fractions(x);
  }
  p.label = model.classes()[argmax_first(p.scores)];
  return p;
}

TurnPrediction predict_turn(const TrainedModel& model, const features::FeatureVector& v) {
  return predict_turn(model, std::span<const double>(v.values));
}

TripPrediction fuse_trip(const std::vector<std::string>& classes,
                         std::span<const std::vector<double>> per_turn_log_likelihoods,
                         std::span<const double> priors) {
  if (per_turn_log_likelihoods.empty()) throw InputError("trip has no turns");
  const std::size_t k = classes.size();
  if (priors.size() != k) throw ConfigError("prior count does not match class count");
  double total = 0.0;
  for (double p : priors) {
    if (!(p > 0.0)) throw ConfigError("priors must be strictly positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("priors must sum to 1");
  TripPrediction out;
  out.log_scores.resize(k);
  for (std::size_t c = 0; c < k; ++c) out.log_scores[c] = std::log(priors[c]);
  for (const std::vector<double>& turn : per_turn_log_likelihoods) {
    if (turn.size() != k) throw InputError("per-turn likelihood count does not match class count");
    for (std::size_t c = 0; c < k; ++c) out.log_scores[c] += turn[c];
  }
  out.n_turns = per_turn_log_likelihoods.size();
  out.label = classes[argmax_first(out.log_scores)];
  return out;
}

TripPrediction predict_trip_map(const GaussianNaiveBayes& model, std::span<const std::vector<double>> turns,
                                std::span<const double> priors) {
  if (turns.empty()) throw InputError("trip has no turns");
  std::vector<double> uniform;
  if (priors.empty()) {
    uniform.assign(model.classes().size(), 1.0 / static_cast<double>(model.classes().size()));
    priors = uniform;
  }
  std::vector<std::vector<double>> per_turn;
  per_turn.reserve(turns.size());
  for (const std::vector<double>& t : turns) per_turn.push_back(model.class_log_likelihoods(t));
  return fuse_trip(model.classes(), per_turn, priors);
}

std::vector<std::size_t> stratified_folds(std::span<const std::string> labels, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw ConfigError("k-fold evaluation needs at least 2 folds");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(derive_seed(seed, "kfold"));
  std::vector<std::size_t> fold_of(labels.size(), 0);
  std::size_t next = 0;
  for (auto& [label, idx] : by_class) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    for (std::size_t i : idx) fold_of[i] = next++ % folds;
  }
  return fold_of;
}

KFoldReport kfold_eval(std::span<const Sample> data, ModelKind kind, std::size_t folds, std::uint64_t seed) {
  return kfold_eval(data, kind, folds, seed, nullptr);
}

KFoldReport kfold_eval(std::span<const Sample> data, ModelKind kind, std::size_t folds, std::uint64_t seed,
                       const std::function<std::vector<Sample>(std::vector<Sample>, std::size_t fold)>& prepare) {
  if (data.size() < folds) throw InputError("fewer samples than folds");
  common_dimension(data);
  KFoldReport report;
  report.classes = sorted_classes(data);
  std::vector<std::string> labels;
  labels.reserve(data.size());
  for (const Sample& s : data) labels.push_back(s.label);
  report.fold_of = stratified_folds(labels, folds, seed);
  const std::size_t k = report.classes.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  report.predicted.assign(data.size(), std::string());

  std::size_t correct_total = 0;
  double acc_sum = 0.0;
  std::size_t nonempty = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Sample> train_set;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (report.fold_of[i] == f) {
        test_idx.push_back(i);
      } else {
        train_set.push_back(data[i]);
      }
    }
    if (test_idx.empty()) {
      report.fold_accuracy.push_back(0.0);
      continue;
    }
    if (prepare) train_set = prepare(std::move(train_set), f);
    const TrainedModel model = fit_model(train_set, kind, derive_seed(seed, "fold", f));
    std::size_t correct = 0;
    for (std::size_t i : test_idx) {
      const TurnPrediction p = predict_turn(model, data[i].features);
      const std::size_t truth = class_index(report.classes, data[i].label);
      const std::size_t pred = class_index(report.classes, p.label);
      report.predicted[i] = p.label;
      ++report.confusion[truth][pred];
      if (truth == pred) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(test_idx.size());
    report.fold_accuracy.push_back(acc);
    acc_sum += acc;
    ++nonempty;
    correct_total += correct;
  }
  report.accuracy = static_cast<double>(correct_total) / static_cast<double>(data.size());
  report.mean_accuracy = nonempty ? acc_sum / static_cast<double>(nonempty) : 0.0;
  return report;
}

}  // namespace turnprint::classify
