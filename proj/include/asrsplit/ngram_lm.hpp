#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asrsplit/text_features.hpp"

namespace asrsplit {

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknown = "<unk>";

/// Trigram model with Witten-Bell smoothing:
///   P(w|h) = (c(h,w) + T(h) P(w|h')) / (c(h) + T(h))
/// where T(h) is the number of distinct words seen after h and h' drops the
/// oldest history word. Unseen contexts defer to h'. The recursion ends in a
/// uniform distribution over the vocabulary (training types, </s>, <unk>).
class TrigramLM {
 public:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<std::string, std::uint64_t> next;
  };

  /// Model with no counts: every probability is 1/|vocab|.
  explicit TrigramLM(const Vocabulary& training_types);

  /// Trains on tokenized sentences. Each sentence is padded with two <s> and
  /// terminated with </s>. Throws DataError on an empty stream.
  static TrigramLM train(std::span<const std::vector<std::string>> sentences);

  /// Reads the count file produced by write_counts.
  static TrigramLM read_counts(std::istream& in);

  /// Sorted "order<TAB>context<TAB>word<TAB>count" lines; byte-identical for
  /// identical training text.
  void write_counts(std::ostream& out) const;

  /// P(word | history), history being up to the two preceding tokens (oldest
  /// first). Words outside the vocabulary are scored as <unk>.
  double prob(std::string_view word, std::span<const std::string> history) const;
  double prob(std::string_view word, std::string_view h1, std::string_view h2) const;

  /// Closed vocabulary: training types plus </s> and <unk>.
  const Vocabulary& vocab() const { return vocab_; }
  bool in_vocab(std::string_view w) const;

  /// Counts of a context given as space-joined tokens ("" is the unigram
  /// context), or nullptr when never observed.
  const ContextCounts* context(int order, std::string_view key) const;
  std::vector<std::string> contexts(int order) const;

 private:
  TrigramLM() = default;
  void add(int order, const std::string& key, const std::string& word, std::uint64_t n);
  void finalize_vocab();

  Vocabulary vocab_;
  // Index k holds contexts of length k (order k + 1).
  std::array<std::unordered_map<std::string, ContextCounts>, 3> counts_;
};

struct PerplexityResult {
  std::optional<double> perplexity;  // absent when every token was OOV
  int n_events = 0;
  int n_oov = 0;
  double log10_prob = 0.0;
};

/// Scores tokens plus </s>. OOV tokens are skipped from the sum and the event
/// count; they still enter later histories as <unk>. PPL = 10^(-sum/N).
PerplexityResult score_perplexity(const TrigramLM& lm, std::span<const std::string> tokens);

inline std::optional<double> perplexity(const TrigramLM& lm, std::span<const std::string> tokens) {
  return score_perplexity(lm, tokens).perplexity;
}

}  // namespace asrsplit
