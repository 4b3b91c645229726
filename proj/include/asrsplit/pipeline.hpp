#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "asrsplit/audio_features.hpp"
#include "asrsplit/corpus.hpp"
#include "asrsplit/ngram_lm.hpp"
#include "asrsplit/regression.hpp"
#include "asrsplit/scoring.hpp"
#include "asrsplit/splitters.hpp"

namespace asrsplit {

/// Canonical strategy order used in reports and plots.
const std::vector<std::string>& all_strategies();

/// Expands "all" and validates names; order follows all_strategies().
std::vector<std::string> parse_strategies(const std::string& csv);

struct ExperimentConfig {
  std::filesystem::path manifest;
  std::filesystem::path lm_text;
  std::vector<std::string> strategies = all_strategies();
  std::optional<std::filesystem::path> hyp_dir;
  std::optional<std::filesystem::path> mock_asr;  // ground-truth file from `simulate`
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  double target_fraction = 0.20;
  std::size_t adversarial_restarts = 5;
  std::size_t adversarial_max_stall = 2000;
  std::optional<std::size_t> random_splits;  // default: number of speakers/sessions
  double alpha = 0.05;
  bool plot = false;
  std::size_t workers = 0;  // 0 = hardware concurrency

  /// Throws ConfigError for missing paths, an empty strategy list, or not
  /// exactly one hypothesis source.
  void validate() const;
};

/// Raised when a pipeline stage fails; carries the stage and the artifact
/// being read or written.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string artifact, const std::string& what, int exit_code)
      : std::runtime_error("stage '" + stage + "' (" + artifact + "): " + what),
        stage_(std::move(stage)),
        artifact_(std::move(artifact)),
        exit_code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  const std::string& artifact() const { return artifact_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  std::string artifact_;
  int exit_code_;
};

struct SplitOutcome {
  std::string name;
  std::string strategy;
  double wer = 0.0;
  double test_fraction = 0.0;
  std::size_t n_test = 0;
  std::optional<double> threshold;
  std::optional<double> achieved_distance;
};

struct StrategyReport {
  StrategySummary summary;
  std::vector<SplitOutcome> splits;
};

struct GroupDurationFit {
  std::string strategy;
  std::size_t n_groups = 0;
  double slope = 0.0;
  double p_value = 1.0;
};

struct ExperimentReport {
  std::size_t n_utterances = 0;
  double total_duration_s = 0.0;
  std::map<std::string, DescriptiveStats> descriptive;  // keyed by grouping
  std::vector<StrategyReport> strategies;
  std::optional<std::string> overlap_reference;
  std::map<std::string, double> overlap;  // split name -> ratio vs reference
  std::optional<double> max_overlap;
  std::optional<RegressionResult> regression;
  std::vector<GroupDurationFit> group_duration;
  std::vector<std::string> notes;
};

nlohmann::json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);

/// Whole chain: ingest, LM, features, splits, hypotheses, scoring, summaries,
/// overlap, regression, report. Every intermediate lands in out_dir; the
/// same config and seed give byte-identical files.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Stage helpers shared with the CLI subcommands.

/// Copy whose audio references are absolute, so a written manifest can be
/// read back from any directory.
Corpus with_absolute_audio(const Corpus& corpus);

std::vector<std::vector<std::string>> read_lm_text(const std::filesystem::path& path);

/// Acoustic, lexical and LM features for every utterance. Audio is read when
/// referenced; otherwise precomputed manifest values are used.
FeatureTable compute_features(const Corpus& corpus, const TrigramLM& lm, std::size_t workers = 0);

struct StrategyOptions {
  std::uint64_t seed = 0;
  double target_fraction = 0.20;
  std::size_t adversarial_restarts = 5;
  std::size_t adversarial_max_stall = 2000;
  std::optional<std::size_t> random_splits;
  std::size_t workers = 0;
};

/// Splits for one strategy. Seeds derive from the strategy name, so adding a
/// strategy never changes another's splits.
std::vector<Split> make_splits(const Corpus& corpus, const FeatureTable& features, const std::string& strategy,
                               const StrategyOptions& opt);

/// Deterministic SVG strip plot: one column per strategy, one small circle per
/// split WER, one large black circle at the mean.
std::string render_strip_plot(const ExperimentReport& report, const std::string& title = "WER by partitioning strategy");

/// Writes the strip plot to out_dir/figure.svg and returns the path. Throws
/// DataError when the report holds no WER values.
std::filesystem::path emit_plots(const ExperimentReport& report, const std::filesystem::path& out_dir);

}  // namespace asrsplit
