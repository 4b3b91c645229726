#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "asrsplit/corpus.hpp"
#include "asrsplit/wav.hpp"

namespace asrsplit {

struct PitchConfig {
  double window_s = 0.040;
  double hop_s = 0.010;
  double min_hz = 50.0;
  double max_hz = 500.0;
  double voicing_threshold = 0.3;
  // Among local autocorrelation maxima, the shortest lag within this fraction
  // of the best peak wins. Guards against picking a multiple of the period.
  double octave_tolerance = 0.9;
};

constexpr double kIntensityReference = 4e-10;  // (20 uPa)^2
constexpr double kIntensityFloorDb = -20.0;

/// Normalized autocorrelation of `frame` at integer lag:
/// sum x[n]x[n+lag] / sqrt(sum x[n]^2 * sum x[n+lag]^2) over the overlap.
template <typename Derived>
typename Derived::Scalar normalized_autocorrelation(const Eigen::ArrayBase<Derived>& frame,
                                                    Eigen::Index lag) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = frame.size() - lag;
  const auto head = frame.head(n);
  const auto tail = frame.segment(lag, n);
  const Scalar denom = std::sqrt(head.square().sum() * tail.square().sum());
  if (denom <= Scalar(0)) return Scalar(0);
  return (head * tail).sum() / denom;
}

/// Normalized autocorrelation for every lag in [0, max_lag], computed through
/// the FFT. Matches normalized_autocorrelation lag by lag.
Eigen::ArrayXd normalized_autocorrelation_curve(const Eigen::Ref<const Eigen::ArrayXd>& frame,
                                                Eigen::Index max_lag);

/// F0 of one frame in Hz, or nullopt when the frame is unvoiced.
std::optional<double> frame_pitch(const Eigen::Ref<const Eigen::ArrayXd>& frame, double sample_rate,
                                  const PitchConfig& cfg = {});

/// Mean F0 over voiced frames, nullopt when no frame is voiced. Throws
/// DataError when the buffer is shorter than one analysis window.
std::optional<double> estimate_pitch(const AudioBuffer& buf, const PitchConfig& cfg = {});

/// 10 log10(mean(x^2) / 4e-10), floored at -20 dB.
template <typename Derived>
double intensity_db(const Eigen::ArrayBase<Derived>& samples) {
  const double power = static_cast<double>(samples.square().mean());
  if (!(power > 0.0)) return kIntensityFloorDb;
  return std::max(kIntensityFloorDb, 10.0 * std::log10(power / kIntensityReference));
}

double estimate_intensity(const AudioBuffer& buf);

struct AcousticFeatures {
  double duration_s = 0.0;
  std::optional<double> avg_pitch_hz;
  double avg_intensity_db = kIntensityFloorDb;
};

AcousticFeatures acoustic_features(const AudioBuffer& buf, const PitchConfig& cfg = {});

/// Feature sidecar: JSON Lines, one object per utterance id with the
/// FeatureVector fields (absent values written as null), sorted by id.
using FeatureTable = std::map<std::string, FeatureVector>;

void write_feature_sidecar(const FeatureTable& table, std::ostream& out);
FeatureTable read_feature_sidecar(std::istream& in);

}  // namespace asrsplit
