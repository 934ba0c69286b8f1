#include "turnprint/enroll.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "turnprint/rng.hpp"

namespace turnprint::enroll {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double component_log_density(const GmmModel& g, std::size_t k, std::span<const double> x) {
  double ll = std::log(g.weights[k]);
  const std::vector<double>& mu = g.means[k];
  const std::vector<double>& var = g.variances[k];
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = x[j] - mu[j];
    ll -= 0.5 * (kLog2Pi + std::log(var[j]) + r * r / var[j]);
  }
  return ll;
}

std::size_t checked_dimension(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw InputError("no vectors supplied");
  const std::size_t d = vectors.front().size();
  if (d == 0) throw InputError("vectors have no entries");
  for (const auto& v : vectors) {
    if (v.size() != d) throw InputError("vectors have inconsistent dimensions");
  }
  return d;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

std::vector<double> pooled_variance(std::span<const std::vector<double>> vectors) {
  const std::size_t d = vectors.front().size();
  const auto n = static_cast<double>(vectors.size());
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& v : vectors) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += v[j];
  }
  for (double& m : mean) m /= n;
  for (const auto& v : vectors) {
    for (std::size_t j = 0; j < d; ++j) var[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
  }
  for (double& x : var) x = std::max(x / n, kGmmVarianceFloor);
  return var;
}

std::vector<std::size_t> kmeanspp_centers(std::span<const std::vector<double>> vectors, std::size_t k, Rng& rng) {
  const std::size_t n = vectors.size();
  std::vector<std::size_t> centers{static_cast<std::size_t>(rng.below(n))};
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(vectors[i], vectors[centers.back()]));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    centers.push_back(pick);
  }
  return centers;
}

}  // namespace

double GmmModel::log_density(std::span<const double> x) const {
  if (components() == 0) throw InputError("mixture has no components");
  if (x.size() != dim()) throw InputError("vector dimension does not match the mixture");
  std::vector<double> parts(components());
  for (std::size_t k = 0; k < parts.size(); ++k) parts[k] = component_log_density(*this, k, x);
  return log_sum_exp(parts);
}

nlohmann::json GmmModel::to_json() const {
  return {{"weights", weights}, {"means", means}, {"variances", variances}, {"seed", seed},
          {"iterations", iterations}, {"log_likelihood", log_likelihood}};
}

GmmModel GmmModel::from_json(const nlohmann::json& j) {
  GmmModel g;
  g.weights = j.at("weights").get<std::vector<double>>();
  g.means = j.at("means").get<std::vector<std::vector<double>>>();
  g.variances = j.at("variances").get<std::vector<std::vector<double>>>();
  g.seed = j.at("seed").get<std::uint64_t>();
  g.iterations = j.value("iterations", std::size_t{0});
  g.log_likelihood = j.value("log_likelihood", 0.0);
  if (g.weights.empty() || g.means.size() != g.weights.size() || g.variances.size() != g.weights.size()) {
    throw InputError("mixture tables disagree with the component count");
  }
  for (std::size_t k = 0; k < g.weights.size(); ++k) {
    if (!(g.weights[k] > 0.0)) throw InputError("mixture weights must be positive");
    if (g.means[k].size() != g.dim() || g.variances[k].size() != g.dim()) {
      throw InputError("mixture tables disagree with the dimension");
    }
    for (double v : g.variances[k]) {
      if (!(v > 0.0)) throw InputError("mixture variances must be positive");
    }
  }
  return g;
}

GmmModel fit_gmm(std::span<const std::vector<double>> vectors, std::size_t components, std::uint64_t seed) {
  if (components == 0) throw ConfigError("mixture needs at least one component");
  if (vectors.size() < components) throw InputError("fewer vectors than mixture components");
  const std::size_t d = checked_dimension(vectors);
  const std::size_t n = vectors.size();

  Rng rng(derive_seed(seed, "gmm-init"));
  const std::vector<double> base_var = pooled_variance(vectors);
  GmmModel g;
  g.seed = seed;
  g.weights.assign(components, 1.0 / static_cast<double>(components));
  g.variances.assign(components, base_var);
  for (std::size_t c : kmeanspp_centers(vectors, components, rng)) g.means.push_back(vectors[c]);

  std::vector<std::vector<double>> resp(n, std::vector<double>(components));
  std::vector<double> point_ll(n);
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0;; ++iter) {
    // E-step
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < components; ++k) resp[i][k] = component_log_density(g, k, vectors[i]);
      point_ll[i] = log_sum_exp(resp[i]);
      for (double& r : resp[i]) r = std::exp(r - point_ll[i]);
      total += point_ll[i];
    }
    g.log_likelihood = total;
    g.iterations = iter;
    if (iter > 0 && total - prev < kGmmTolerance) break;
    if (iter >= kGmmMaxIterations) break;
    prev = total;

    // M-step
    for (std::size_t k = 0; k < components; ++k) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += resp[i][k];
      if (nk < 1e-8) {
        // Collapsed component: restart it on the worst-explained vector.
        const auto worst = static_cast<std::size_t>(
            std::min_element(point_ll.begin(), point_ll.end()) - point_ll.begin());
        g.means[k] = vectors[worst];
        g.variances[k] = base_var;
        g.weights[k] = 1.0 / static_cast<double>(n);
        point_ll[worst] = std::numeric_limits<double>::infinity();
        continue;
      }
      std::vector<double> mu(d, 0.0), var(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i][k];
        if (r == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) mu[j] += r * vectors[i][j];
      }
      for (double& m : mu) m /= nk;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resp[i][k];
        if (r == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) {
          const double e = vectors[i][j] - mu[j];
          var[j] += r * e * e;
        }
      }
      for (double& v : var) v = std::max(v / nk, kGmmVarianceFloor);
      g.means[k] = std::move(mu);
      g.variances[k] = std::move(var);
      g.weights[k] = nk / static_cast<double>(n);
    }
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    for (double& w : g.weights) w /= wsum;
  }
  return g;
}

double trip_loglikelihood(const GmmModel& model, std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw InputError("trip has no vectors");
  double s = 0.0;
  for (const auto& v : vectors) s += model.log_density(v);
  return s / static_cast<double>(vectors.size());
}

// ---------------------------------------------------------------------------

const ProfileEntry* ProfileTable::find(const std::string& label) const {
  for (const ProfileEntry& e : entries_) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

ProfileEntry* ProfileTable::find(const std::string& label) {
  for (ProfileEntry& e : entries_) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

std::string ProfileTable::next_label() const {
  std::size_t n = entries_.size() + 1;
  while (find("D" + std::to_string(n))) ++n;
  return "D" + std::to_string(n);
}

void ProfileTable::insert(ProfileEntry entry) {
  if (entry.label.empty()) throw InputError("profile label is empty");
  if (find(entry.label)) throw InputError("duplicate profile label '" + entry.label + "'");
  entries_.push_back(std::move(entry));
}

void ProfileTable::write_jsonl(std::ostream& out) const {
  for (const ProfileEntry& e : entries_) {
    const nlohmann::json j = {{"label", e.label}, {"seed", e.seed}, {"vectors", e.vectors}, {"gmm", e.gmm.to_json()}};
    out << j.dump() << '\n';
  }
}

ProfileTable ProfileTable::read_jsonl(std::istream& in) {
  ProfileTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      ProfileEntry e;
      e.label = j.at("label").get<std::string>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
      e.gmm = GmmModel::from_json(j.at("gmm"));
      if (!e.vectors.empty() && checked_dimension(e.vectors) != e.gmm.dim()) {
        throw InputError("stored vectors do not match the mixture dimension");
      }
      table.insert(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("profile record on line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("profile record on line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

namespace {

GmmModel fit_entry(const ProfileEntry& e, std::size_t components) {
  return fit_gmm(e.vectors, std::min(components, e.vectors.size()), e.seed);
}

}  // namespace

Assignment assign_or_new_driver(ProfileTable& table, std::span<const std::vector<double>> trip,
                                const GateOptions& options) {
  checked_dimension(trip);
  Assignment out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < table.entries().size(); ++i) {
    out.loglikelihoods.push_back(trip_loglikelihood(table.entries()[i].gmm, trip));
    if (out.loglikelihoods[i] > out.loglikelihoods[best]) best = i;
  }
  if (!out.loglikelihoods.empty()) out.best_loglikelihood = out.loglikelihoods[best];

  if (out.best_loglikelihood && *out.best_loglikelihood >= options.threshold) {
    ProfileEntry* e = table.find(table.entries()[best].label);
    e->vectors.insert(e->vectors.end(), trip.begin(), trip.end());
    e->gmm = fit_entry(*e, options.components);
    out.label = e->label;
    out.created = false;
    return out;
  }
  ProfileEntry e;
  e.label = table.next_label();
  e.seed = derive_seed(options.root_seed, e.label);
  e.vectors.assign(trip.begin(), trip.end());
  e.gmm = fit_entry(e, options.components);
  out.label = e.label;
  out.created = true;
  table.insert(std::move(e));
  return out;
}

GateCalibration calibrate_gate(const std::vector<std::vector<TripVectors>>& drivers, std::size_t components,
                               std::uint64_t seed) {
  if (drivers.size() < 2) throw InputError("gate calibration needs at least two drivers");
  for (const auto& trips : drivers) {
    if (trips.size() < 2) throw InputError("gate calibration needs at least two trips per driver");
  }
  GateCalibration out;
  // Every trip takes a turn as the held-out one, so the threshold rests on
  // all trips rather than on whichever came last.
  for (std::size_t d = 0; d < drivers.size(); ++d) {
    for (std::size_t h = 0; h < drivers[d].size(); ++h) {
      TripVectors train;
      for (std::size_t t = 0; t < drivers[d].size(); ++t) {
        if (t != h) train.insert(train.end(), drivers[d][t].begin(), drivers[d][t].end());
      }
      const GmmModel gmm =
          fit_gmm(train, std::min(components, train.size()), derive_seed(seed, "calibrate", d * 1000 + h));
      for (std::size_t o = 0; o < drivers.size(); ++o) {
        if (h >= drivers[o].size()) continue;
        const double score = trip_loglikelihood(gmm, drivers[o][h]);
        (o == d ? out.same_scores : out.cross_scores).push_back(score);
      }
    }
  }

  std::vector<double> all = out.same_scores;
  all.insert(all.end(), out.cross_scores.begin(), out.cross_scores.end());
  std::sort(all.begin(), all.end());
  auto balanced = [&](double thr) {
    double accept = 0.0, reject = 0.0;
    for (double s : out.same_scores) accept += s >= thr ? 1.0 : 0.0;
    for (double s : out.cross_scores) reject += s < thr ? 1.0 : 0.0;
    return 0.5 * (accept / static_cast<double>(out.same_scores.size()) +
                  reject / static_cast<double>(out.cross_scores.size()));
  };
  out.threshold = all.front();
  out.balanced_accuracy = balanced(out.threshold);
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    const double thr = 0.5 * (all[i] + all[i + 1]);
    const double ba = balanced(thr);
    if (ba > out.balanced_accuracy) {
      out.balanced_accuracy = ba;
      out.threshold = thr;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t corrupted_count(std::size_t n, double p_err) {
  if (!(p_err >= 0.0 && p_err <= 100.0)) throw ConfigError("p_err must lie in [0, 100]");
  // The small slack keeps exact products such as 20% of 100 from rounding up.
  const double m = std::ceil(p_err * static_cast<double>(n) / 100.0 - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, m)));
}

namespace {

template <typename Row, typename GetLabel, typename SetLabel>
std::vector<Row> corrupt_rows(std::span<const Row> data, double p_err, std::uint64_t seed, GetLabel get,
                              SetLabel set) {
  const std::size_t m = corrupted_count(data.size(), p_err);
  std::vector<Row> out(data.begin(), data.end());
  if (m == 0) return out;
  std::vector<std::string> labels;
  for (const Row& r : data) labels.push_back(get(r));
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

  Rng rng(derive_seed(seed, "corrupt-labels"));
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    set(out[idx[i]], labels[rng.below(labels.size())]);
  }
  return out;
}

}  // namespace

std::vector<classify::Sample> corrupt_labels(std::span<const classify::Sample> data, double p_err,
                                             std::uint64_t seed) {
  return corrupt_rows(
      data, p_err, seed, [](const classify::Sample& s) { return s.label; },
      [](classify::Sample& s, const std::string& l) { s.label = l; });
}

std::vector<features::FeatureVector> corrupt_labels(std::span<const features::FeatureVector> data, double p_err,
                                                    std::uint64_t seed) {
  for (const auto& v : data) {
    if (!v.label) throw InputError("feature vector has no label");
  }
  return corrupt_rows(
      data, p_err, seed, [](const features::FeatureVector& v) { return *v.label; },
      [](features::FeatureVector& v, const std::string& l) { v.label = l; });
}

}  // namespace turnprint::enroll
