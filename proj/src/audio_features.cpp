#include "asrsplit/audio_features.hpp"

#include <complex>
#include <istream>
#include <ostream>
#include <vector>

#include <unsupported/Eigen/FFT>
#include <json.hpp>

#include "asrsplit/error.hpp"

namespace asrsplit {

using nlohmann::json;

Eigen::ArrayXd normalized_autocorrelation_curve(const Eigen::Ref<const Eigen::ArrayXd>& frame,
                                                Eigen::Index max_lag) {
  const Eigen::Index w = frame.size();
  max_lag = std::min(max_lag, w - 1);
  Eigen::Index n = 1;
  while (n < w + max_lag + 1) n <<= 1;

  // Plans and scratch buffers are reused across frames of the same size.
  thread_local Eigen::FFT<double> fft;
  thread_local std::vector<double> padded, raw;
  thread_local std::vector<std::complex<double>> spectrum;
  padded.assign(static_cast<std::size_t>(n), 0.0);
  std::copy(frame.begin(), frame.end(), padded.begin());
  fft.fwd(spectrum, padded);
  for (auto& z : spectrum) z = std::norm(z);
  fft.inv(raw, spectrum);

  Eigen::ArrayXd prefix(w + 1);
  prefix[0] = 0.0;
  for (Eigen::Index i = 0; i < w; ++i) prefix[i + 1] = prefix[i] + frame[i] * frame[i];
  const double total = prefix[w];

  Eigen::ArrayXd r = Eigen::ArrayXd::Zero(max_lag + 1);
  for (Eigen::Index lag = 0; lag <= max_lag; ++lag) {
    const double head = prefix[w - lag];
    const double tail = total - prefix[lag];
    const double denom = std::sqrt(head * tail);
    // FFT round-off is relative to the frame energy; overlaps holding almost
    // none of it carry no usable correlation.
    if (denom <= 1e-9 * total) continue;
    r[lag] = std::clamp(raw[static_cast<std::size_t>(lag)] / denom, -1.0, 1.0);
  }
  return r;
}

std::optional<double> frame_pitch(const Eigen::Ref<const Eigen::ArrayXd>& frame, double sample_rate,
                                  const PitchConfig& cfg) {
  const auto min_lag = static_cast<Eigen::Index>(std::floor(sample_rate / cfg.max_hz));
  const auto max_lag = static_cast<Eigen::Index>(std::ceil(sample_rate / cfg.min_hz));
  if (max_lag + 2 >= frame.size() || min_lag < 2) return std::nullopt;
  if (!(frame.square().sum() > 0.0)) return std::nullopt;

  const Eigen::ArrayXd r = normalized_autocorrelation_curve(frame, max_lag + 1);
  auto is_peak = [&](Eigen::Index lag) { return r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]; };

  double best = -1.0;
  for (Eigen::Index lag = min_lag; lag <= max_lag; ++lag) {
    if (is_peak(lag)) best = std::max(best, r[lag]);
  }
  if (best < cfg.voicing_threshold) return std::nullopt;

  for (Eigen::Index lag = min_lag; lag <= max_lag; ++lag) {
    if (!is_peak(lag) || r[lag] < cfg.octave_tolerance * best) continue;
    const double a = r[lag - 1], b = r[lag], c = r[lag + 1];
    const double curvature = a - 2.0 * b + c;
    const double offset = curvature < 0.0 ? 0.5 * (a - c) / curvature : 0.0;
    return std::clamp(sample_rate / (static_cast<double>(lag) + offset), cfg.min_hz, cfg.max_hz);
  }
  return std::nullopt;
}

std::optional<double> estimate_pitch(const AudioBuffer& buf, const PitchConfig& cfg) {
  const auto window = static_cast<Eigen::Index>(std::lround(cfg.window_s * buf.sample_rate));
  const auto hop = std::max<Eigen::Index>(1, std::lround(cfg.hop_s * buf.sample_rate));
  if (buf.samples.size() < window || window <= 0) {
    throw DataError("audio shorter than one pitch analysis window (" + std::to_string(window) + " samples)");
  }
  double sum = 0.0;
  int voiced = 0;
  for (Eigen::Index start = 0; start + window <= buf.samples.size(); start += hop) {
    if (auto f0 = frame_pitch(buf.samples.segment(start, window), buf.sample_rate, cfg)) {
      sum += *f0;
      ++voiced;
    }
  }
  if (voiced == 0) return std::nullopt;
  return sum / voiced;
}

double estimate_intensity(const AudioBuffer& buf) {
  if (buf.samples.size() == 0) throw DataError("estimate_intensity on an empty buffer");
  return intensity_db(buf.samples);
}

AcousticFeatures acoustic_features(const AudioBuffer& buf, const PitchConfig& cfg) {
  AcousticFeatures f;
  f.duration_s = buf.duration_s();
  f.avg_pitch_hz = estimate_pitch(buf, cfg);
  f.avg_intensity_db = estimate_intensity(buf);
  return f;
}

namespace {

template <typename T>
json nullable(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DataError(std::string("feature '") + key + "' must be a number");
  return it->get<T>();
}

}  // namespace

void write_feature_sidecar(const FeatureTable& table, std::ostream& out) {
  for (const auto& [id, f] : table) {
    json j;
    j["id"] = id;
    j["duration_s"] = nullable(f.duration_s);
    j["avg_pitch_hz"] = nullable(f.avg_pitch_hz);
    j["avg_intensity_db"] = nullable(f.avg_intensity_db);
    j["n_tokens"] = nullable(f.n_tokens);
    j["n_types"] = nullable(f.n_types);
    j["oov_rate"] = nullable(f.oov_rate);
    j["perplexity"] = nullable(f.perplexity);
    out << j.dump() << '\n';
  }
}

FeatureTable read_feature_sidecar(std::istream& in) {
  FeatureTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      FeatureVector f;
      f.duration_s = get_opt<double>(j, "duration_s");
      f.avg_pitch_hz = get_opt<double>(j, "avg_pitch_hz");
      f.avg_intensity_db = get_opt<double>(j, "avg_intensity_db");
      f.n_tokens = get_opt<int>(j, "n_tokens");
      f.n_types = get_opt<int>(j, "n_types");
      f.oov_rate = get_opt<double>(j, "oov_rate");
      f.perplexity = get_opt<double>(j, "perplexity");
      const auto id = j.at("id").get<std::string>();
      if (!table.emplace(id, f).second) throw DataError("duplicate id '" + id + "'");
    } catch (const json::exception& e) {
      throw DataError("feature sidecar line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("feature sidecar line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

}  // namespace asrsplit
