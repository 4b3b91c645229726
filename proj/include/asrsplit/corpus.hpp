#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace asrsplit {

/// Per-utterance features used by heuristic splits and regression. Every field
/// is optional: a manifest may carry a partial set, and extraction fills the
/// rest.
struct FeatureVector {
  std::optional<double> duration_s;
  std::optional<double> avg_pitch_hz;
  std::optional<double> avg_intensity_db;
  std::optional<double> perplexity;
  std::optional<double> oov_rate;
  std::optional<int> n_tokens;
  std::optional<int> n_types;

  bool operator==(const FeatureVector&) const = default;
};

struct Utterance {
  std::string id;
  std::optional<std::string> speaker_id;
  std::optional<std::string> session_id;
  double duration_s = 0.0;
  std::vector<std::string> transcript;
  std::optional<std::string> audio_ref;  // as written in the manifest
  FeatureVector precomputed;

  bool operator==(const Utterance&) const = default;
};

enum class GroupBy { speaker, session };

const char* to_string(GroupBy g);
GroupBy parse_group_by(const std::string& s);

/// Immutable, validated collection of utterances in manifest order.
class Corpus {
 public:
  Corpus() = default;
  /// Validates ids, durations and transcripts; throws DataError on violation.
  explicit Corpus(std::vector<Utterance> utterances,
                  std::filesystem::path base_dir = {},
                  std::optional<std::string> lm_text_ref = std::nullopt);

  const std::vector<Utterance>& utterances() const { return utterances_; }
  std::size_t size() const { return utterances_.size(); }
  const Utterance& at(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.contains(id); }
  std::size_t index_of(const std::string& id) const;

  double total_duration() const;
  /// True when every utterance carries the given grouping key.
  bool has_grouping(GroupBy g) const;
  /// Neither grouping key is complete: only random, heuristic and adversarial
  /// splits apply.
  bool ungrouped_only() const {
    return !has_grouping(GroupBy::speaker) && !has_grouping(GroupBy::session);
  }
  /// Group key for an utterance, if present.
  const std::optional<std::string>& group_of(const Utterance& u, GroupBy g) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::filesystem::path resolve(const std::string& ref) const;
  const std::optional<std::string>& lm_text_ref() const { return lm_text_ref_; }

  bool operator==(const Corpus& o) const { return utterances_ == o.utterances_; }

 private:
  std::vector<Utterance> utterances_;
  std::unordered_map<std::string, std::size_t> index_;
  std::filesystem::path base_dir_;
  std::optional<std::string> lm_text_ref_;
};

/// Parses a JSON Lines manifest. Fields: id, speaker, session, audio,
/// duration_s, transcript (string or token array), optional features object.
/// Unknown fields are ignored. Audio paths resolve against `base_dir`; when
/// audio is given its header supplies or checks duration_s.
Corpus parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
Corpus load_manifest(const std::filesystem::path& path);

void write_manifest(const Corpus& corpus, std::ostream& out);

struct DescriptiveStats {
  std::size_t n_groups = 0;
  double mean_duration_per_group = 0.0;
  double std_duration_per_group = 0.0;  // sample std; 0 when undefined
  bool std_defined = false;              // false for a single group
  double range_duration_per_group = 0.0;
  std::size_t n_words = 0;
  std::size_t n_types = 0;
};

/// Per-group duration totals, keyed by group id, in first-appearance order.
std::vector<std::pair<std::string, double>> group_durations(const Corpus& corpus, GroupBy g);

DescriptiveStats corpus_stats(const Corpus& corpus, GroupBy g);

}  // namespace asrsplit
