#include "asrsplit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "asrsplit/error.hpp"
#include "asrsplit/text_features.hpp"
#include "asrsplit/wav.hpp"

namespace asrsplit {

using nlohmann::json;

namespace {

constexpr double kAudioDurationTolerance = 0.01;

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<double> opt_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DataError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

FeatureVector parse_features(const json& j) {
  FeatureVector f;
  f.duration_s = opt_number(j, "duration_s");
  f.avg_pitch_hz = opt_number(j, "avg_pitch_hz");
  f.avg_intensity_db = opt_number(j, "avg_intensity_db");
  f.perplexity = opt_number(j, "perplexity");
  f.oov_rate = opt_number(j, "oov_rate");
  if (auto v = opt_number(j, "n_tokens")) f.n_tokens = static_cast<int>(*v);
  if (auto v = opt_number(j, "n_types")) f.n_types = static_cast<int>(*v);
  return f;
}

json features_to_json(const FeatureVector& f) {
  json j = json::object();
  auto put = [&](const char* k, const auto& v) {
    if (v) j[k] = *v;
  };
  put("duration_s", f.duration_s);
  put("avg_pitch_hz", f.avg_pitch_hz);
  put("avg_intensity_db", f.avg_intensity_db);
  put("perplexity", f.perplexity);
  put("oov_rate", f.oov_rate);
  put("n_tokens", f.n_tokens);
  put("n_types", f.n_types);
  return j;
}

}  // namespace

const char* to_string(GroupBy g) { return g == GroupBy::speaker ? "speaker" : "session"; }

GroupBy parse_group_by(const std::string& s) {
  if (s == "speaker") return GroupBy::speaker;
  if (s == "session") return GroupBy::session;
  throw ConfigError("unknown grouping '" + s + "' (expected speaker or session)");
}

Corpus::Corpus(std::vector<Utterance> utterances, std::filesystem::path base_dir,
               std::optional<std::string> lm_text_ref)
    : utterances_(std::move(utterances)),
      base_dir_(std::move(base_dir)),
      lm_text_ref_(std::move(lm_text_ref)) {
  index_.reserve(utterances_.size());
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const Utterance& u = utterances_[i];
    if (u.id.empty()) throw DataError("utterance at position " + std::to_string(i) + " has an empty id");
    if (!(u.duration_s > 0.0) || !std::isfinite(u.duration_s)) {
      throw DataError("utterance '" + u.id + "': duration_s must be > 0");
    }
    if (u.transcript.empty()) throw DataError("utterance '" + u.id + "': empty transcript");
    if (!index_.emplace(u.id, i).second) throw DataError("duplicate utterance id '" + u.id + "'");
  }
}

const Utterance& Corpus::at(const std::string& id) const { return utterances_[index_of(id)]; }

std::size_t Corpus::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown utterance id '" + id + "'");
  return it->second;
}

double Corpus::total_duration() const {
  // Kahan summation keeps group sums and the corpus total consistent.
  double sum = 0.0, c = 0.0;
  for (const auto& u : utterances_) {
    const double y = u.duration_s - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

bool Corpus::has_grouping(GroupBy g) const {
  if (utterances_.empty()) return false;
  return std::all_of(utterances_.begin(), utterances_.end(),
                     [&](const Utterance& u) { return group_of(u, g).has_value(); });
}

const std::optional<std::string>& Corpus::group_of(const Utterance& u, GroupBy g) const {
  return g == GroupBy::speaker ? u.speaker_id : u.session_id;
}

std::filesystem::path Corpus::resolve(const std::string& ref) const {
  std::filesystem::path p(ref);
  return p.is_absolute() ? p : base_dir_ / p;
}

Corpus parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<Utterance> utts;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw DataError(where + "record must be a JSON object");
    try {
      Utterance u;
      auto id = opt_string(j, "id");
      if (!id || id->empty()) throw DataError("missing id");
      u.id = *id;
      if (!seen.insert(u.id).second) throw DataError("duplicate utterance id '" + u.id + "'");
      u.speaker_id = opt_string(j, "speaker");
      u.session_id = opt_string(j, "session");
      u.audio_ref = opt_string(j, "audio");

      auto tr = j.find("transcript");
      if (tr == j.end() || tr->is_null()) throw DataError("missing transcript");
      if (tr->is_string()) {
        u.transcript = tokenize(tr->get<std::string>());
      } else if (tr->is_array()) {
        std::string joined;
        for (const auto& t : *tr) {
          if (!t.is_string()) throw DataError("transcript array must hold strings");
          joined += t.get<std::string>();
          joined += ' ';
        }
        u.transcript = tokenize(joined);
      } else {
        throw DataError("transcript must be a string or an array of strings");
      }

      auto duration = opt_number(j, "duration_s");
      if (u.audio_ref) {
        const auto path = base_dir.empty() || std::filesystem::path(*u.audio_ref).is_absolute()
                              ? std::filesystem::path(*u.audio_ref)
                              : base_dir / *u.audio_ref;
        const double audio_duration = read_wav_info(path).duration_s();
        if (duration && std::abs(*duration - audio_duration) > kAudioDurationTolerance) {
          std::ostringstream msg;
          msg << "duration_s " << *duration << " disagrees with audio length " << audio_duration;
          throw DataError(msg.str());
        }
        if (!duration) duration = audio_duration;
      }
      if (!duration) throw DataError("needs duration_s or audio");
      u.duration_s = *duration;
      if (!(u.duration_s > 0.0)) throw DataError("duration_s must be > 0");

      if (auto f = j.find("features"); f != j.end() && f->is_object()) {
        u.precomputed = parse_features(*f);
      }
      utts.push_back(std::move(u));
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return Corpus(std::move(utts), base_dir);
}

Corpus load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.parent_path());
}

void write_manifest(const Corpus& corpus, std::ostream& out) {
  for (const auto& u : corpus.utterances()) {
    json j;
    j["id"] = u.id;
    if (u.speaker_id) j["speaker"] = *u.speaker_id;
    if (u.session_id) j["session"] = *u.session_id;
    if (u.audio_ref) j["audio"] = *u.audio_ref;
    j["duration_s"] = u.duration_s;
    j["transcript"] = join_tokens(u.transcript);
    if (u.precomputed != FeatureVector{}) j["features"] = features_to_json(u.precomputed);
    out << j.dump() << '\n';
  }
}

std::vector<std::pair<std::string, double>> group_durations(const Corpus& corpus, GroupBy g) {
  std::vector<std::string> missing;
  std::vector<std::pair<std::string, double>> totals;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& u : corpus.utterances()) {
    const auto& key = corpus.group_of(u, g);
    if (!key) {
      missing.push_back(u.id);
      continue;
    }
    auto [it, inserted] = slot.emplace(*key, totals.size());
    if (inserted) totals.emplace_back(*key, 0.0);
    totals[it->second].second += u.duration_s;
  }
  if (!missing.empty()) {
    std::string msg = std::string("utterances without a ") + to_string(g) + " key:";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
  }
  return totals;
}

DescriptiveStats corpus_stats(const Corpus& corpus, GroupBy g) {
  const auto totals = group_durations(corpus, g);
  DescriptiveStats s;
  s.n_groups = totals.size();
  if (totals.empty()) return s;

  double sum = 0.0, lo = totals.front().second, hi = lo;
  for (const auto& [_, d] : totals) {
    sum += d;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double n = static_cast<double>(totals.size());
  s.mean_duration_per_group = sum / n;
  s.range_duration_per_group = hi - lo;
  if (totals.size() > 1) {
    double ss = 0.0;
    for (const auto& [_, d] : totals) ss += (d - s.mean_duration_per_group) * (d - s.mean_duration_per_group);
    s.std_duration_per_group = std::sqrt(ss / (n - 1.0));
    s.std_defined = true;
  }

  std::set<std::string_view> types;
  for (const auto& u : corpus.utterances()) {
    s.n_words += u.transcript.size();
    for (const auto& t : u.transcript) types.insert(t);
  }
  s.n_types = types.size();
  return s;
}

}  // namespace asrsplit
