#pragma once

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "asrsplit/corpus.hpp"
#include "asrsplit/text_features.hpp"
#include "asrsplit/wav.hpp"

namespace testsupport {

struct Row {
  std::string id;
  double duration;
  std::string transcript;
  std::string speaker = {};
  std::string session = {};
};

inline asrsplit::Corpus make_corpus(const std::vector<Row>& rows) {
  std::vector<asrsplit::Utterance> us;
  for (const auto& r : rows) {
    asrsplit::Utterance u;
    u.id = r.id;
    u.duration_s = r.duration;
    u.transcript = asrsplit::tokenize(r.transcript);
    if (!r.speaker.empty()) u.speaker_id = r.speaker;
    if (!r.session.empty()) u.session_id = r.session;
    us.push_back(std::move(u));
  }
  return asrsplit::Corpus(std::move(us));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("asrsplit_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline asrsplit::AudioBuffer sine(double hz, double amplitude, double seconds, double rate) {
  asrsplit::AudioBuffer b;
  b.sample_rate = rate;
  const auto n = static_cast<Eigen::Index>(std::lround(seconds * rate));
  b.samples = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  b.samples = amplitude * (2.0 * std::numbers::pi * hz / rate * b.samples).sin();
  return b;
}

}  // namespace testsupport
