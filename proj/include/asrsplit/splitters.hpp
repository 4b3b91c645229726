#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asrsplit/audio_features.hpp"
#include "asrsplit/corpus.hpp"

namespace asrsplit {

enum class SplitMethod { held_out_group, random, heuristic, adversarial };
enum class HeuristicFeature { duration, pitch, intensity, n_tokens, n_types, perplexity };

const char* to_string(SplitMethod m);
const char* to_string(HeuristicFeature f);
SplitMethod parse_split_method(std::string_view s);
HeuristicFeature parse_heuristic_feature(std::string_view s);
inline constexpr HeuristicFeature kAllHeuristicFeatures[] = {
    HeuristicFeature::duration, HeuristicFeature::pitch,   HeuristicFeature::intensity,
    HeuristicFeature::n_tokens, HeuristicFeature::n_types, HeuristicFeature::perplexity};

struct SplitParams {
  std::optional<GroupBy> group_by;
  std::optional<std::string> group_id;
  std::optional<HeuristicFeature> feature;
  std::optional<double> threshold;
  std::optional<double> target_fraction;
  std::optional<double> achieved_distance;
  std::optional<double> initial_distance;
  std::optional<int> index;

  bool operator==(const SplitParams&) const = default;
};

/// One train/test partition. Id lists keep corpus order.
struct Split {
  std::string name;
  SplitMethod method = SplitMethod::random;
  SplitParams params;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::string> excluded_ids;
  std::vector<std::string> warnings;

  bool operator==(const Split&) const = default;
};

/// Strategy family used for summaries: held_out_speaker, held_out_session,
/// random, heuristic_<feature>, adversarial.
std::string strategy_name(const Split& s);

/// Share of the non-excluded duration that lies in the test set.
double test_fraction(const Corpus& corpus, const Split& s);

/// Empty when the split is a partition of the corpus ids minus exclusions;
/// otherwise a description of the first violation.
std::optional<std::string> partition_violation(const Corpus& corpus, const Split& s);

std::vector<Split> split_held_out_group(const Corpus& corpus, GroupBy g);

struct RandomSplitConfig {
  std::size_t n_splits = 1;
  std::uint64_t seed = 0;
  double target_fraction = 0.20;
  double warn_fraction = 0.25;
};

/// Shuffles with a per-split child seed and fills the test side until its
/// duration first reaches the target fraction.
std::vector<Split> split_random(const Corpus& corpus, const RandomSplitConfig& cfg);

/// Feature value of one utterance, nullopt when missing.
std::optional<double> feature_value(const Utterance& u, const FeatureVector& f, HeuristicFeature which);

/// Test = all utterances whose feature is >= a threshold chosen so the test
/// side first reaches `target_fraction` of the duration (ties included).
/// Utterances lacking the feature are excluded.
Split split_heuristic(const Corpus& corpus, const FeatureTable& features, HeuristicFeature which,
                      double target_fraction = 0.20);

/// Relative token frequencies.
class TokenDistribution {
 public:
  TokenDistribution() = default;
  explicit TokenDistribution(const std::map<std::string, double>& counts);
  static TokenDistribution of(const Corpus& corpus, const std::vector<std::string>& ids);

  const std::map<std::string, double>& probs() const { return probs_; }
  double operator[](const std::string& t) const;

 private:
  std::map<std::string, double> probs_;
};

/// Wasserstein-1 under the 0/1 ground metric, i.e. total variation
/// 0.5 * sum |p(t) - q(t)|.
double token_tv_distance(const TokenDistribution& p, const TokenDistribution& q);

struct AdversarialConfig {
  std::size_t n_splits = 5;
  std::uint64_t seed = 0;
  std::size_t max_stall = 2000;
  double target_fraction = 0.20;
  double band_low = 0.18;
  double band_high = 0.22;
  // Full-neighbourhood polishing runs when (moves + swaps) * vocab is below this.
  double polish_budget = 5e7;
  std::size_t workers = 0;  // 0 = hardware concurrency
};

struct AdversarialRun {
  Split split;
  double initial_distance = 0.0;
  double achieved_distance = 0.0;
  std::vector<double> accepted;  // objective after each accepted move, first entry = initial
  bool no_feasible_move = false;
};

/// Local search maximizing the train/test token TV distance under a test
/// duration band, one restart per split.
std::vector<AdversarialRun> adversarial_search(const Corpus& corpus, const AdversarialConfig& cfg);
std::vector<Split> split_adversarial(const Corpus& corpus, const AdversarialConfig& cfg);

/// |test(reference) & test(other)| / |test(reference)|. Throws DataError
/// when the splits cover different utterance sets.
double overlap_ratio(const Split& reference, const Split& other);

void write_split(const Split& s, std::ostream& out);
Split read_split(std::istream& in);

}  // namespace asrsplit
