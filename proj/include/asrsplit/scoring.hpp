#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asrsplit/splitters.hpp"

namespace asrsplit {

struct WerBreakdown {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int ref_len = 0;

  int errors() const { return substitutions + deletions + insertions; }
  double wer_percent() const { return ref_len > 0 ? 100.0 * errors() / ref_len : 0.0; }
  WerBreakdown& operator+=(const WerBreakdown& o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_len += o.ref_len;
    return *this;
  }
};

/// Minimal unit-cost edit alignment. Backtrace prefers substitution (or
/// match), then insertion, then deletion. Throws DataError on an empty
/// reference.
WerBreakdown wer(std::span<const std::string> reference, std::span<const std::string> hypothesis);

using TokenMap = std::map<std::string, std::vector<std::string>>;

struct SplitWer {
  double pooled_percent = 0.0;
  WerBreakdown pooled;
  std::map<std::string, WerBreakdown> per_utterance;
};

/// Pools counts over the split's test utterances:
/// 100 * sum(S + D + I) / sum(ref_len). Missing hypotheses raise DataError
/// listing every missing id.
SplitWer split_wer(const Split& split, const TokenMap& refs, const TokenMap& hyps);

struct StrategySummary {
  std::string method;
  std::optional<double> threshold;
  std::size_t n_splits = 0;
  double wer_mean = 0.0;
  std::optional<double> wer_std;  // sample std; absent for a single split
  double wer_range = 0.0;
};

StrategySummary summarize_strategy(std::span<const double> wers, std::string method = {},
                                   std::optional<double> threshold = std::nullopt);

/// Hypothesis file: JSON Lines {id, hypothesis}; hypotheses go through the
/// shared tokenizer and may be empty.
TokenMap read_hypotheses(std::istream& in);
void write_hypotheses(const TokenMap& hyps, std::ostream& out);

TokenMap reference_map(const Corpus& corpus);

}  // namespace asrsplit
