#pragma once

// Per-turn features and the 225-value turn feature vector.
//
//   F1  A_eot[n]   = A[n] * sin(theta[n]), A = acceleration along the heading
//   F2  dA_eot[n]  = A_eot[n+1] - A_eot[n]
//   F3  dYraw[n]   = yaw_raw[n+1] - yaw_raw[n]
//
// Each feature is split into 5 equal stages; every (feature, stage) block
// holds the 10/25/50/75/90th percentiles followed by autocorrelations at
// lags 1..10. Layout: index = (feature * 5 + stage) * 15 + statistic.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "turnprint/common.hpp"
#include "turnprint/turns.hpp"

namespace turnprint::features {

inline constexpr std::size_t kFeatureKinds = 3;
inline constexpr std::size_t kStages = 5;
inline constexpr std::array<double, 5> kPercentileLevels{10.0, 25.0, 50.0, 75.0, 90.0};
inline constexpr std::size_t kMaxLag = 10;
inline constexpr std::size_t kBlockSize = kPercentileLevels.size() + kMaxLag;
inline constexpr std::size_t kVectorSize = kFeatureKinds * kStages * kBlockSize;
static_assert(kVectorSize == 225);

/// Denominators below this make the autocorrelation 0.
inline constexpr double kDegenerateVariance = 1e-12;

struct TurnFeatureSeries {
  std::vector<double> a_eot;      // length L
  std::vector<double> d_a_eot;    // length L - 1
  std::vector<double> d_yaw_raw;  // length L - 1
};

struct FeatureVector {
  std::vector<double> values;  // always kVectorSize entries
  Direction direction = Direction::Right;
  std::optional<std::string> label;
};

/// A[n]: acceleration projected on the heading sot_heading + theta[n].
std::vector<double> heading_accel(const turns::TurnSegment& turn);
std::vector<double> a_eot(const turns::TurnSegment& turn);
std::vector<double> deltas(std::span<const double> x);
TurnFeatureSeries feature_series(const turns::TurnSegment& turn);

/// Linear interpolation between order statistics at rank p/100 * (n - 1).
double percentile(std::span<const double> x, double p);

/// Biased autocorrelation estimator; 0 when the series is (numerically)
/// constant.
double autocorr(std::span<const double> x, std::size_t lag);

/// Builds the vector from a turn whose length is a multiple of 5 and whose
/// stages are longer than the largest lag plus one.
FeatureVector build_feature_vector(const turns::TurnSegment& turn);

/// Name of entry `index`, e.g. "f2_s3_p75" or "f1_s1_ac4".
std::string feature_name(std::size_t index);
const std::vector<std::string>& feature_names();
std::size_t feature_index(std::size_t feature, std::size_t stage, std::size_t statistic);

// Feature CSV: 225 named columns then `direction,label`. Values are written
// with 17 significant digits so parsing restores them bit-for-bit.
void write_feature_csv(std::ostream& out, std::span<const FeatureVector> vectors);
std::vector<FeatureVector> read_feature_csv(std::istream& in);

}  // namespace turnprint::features
