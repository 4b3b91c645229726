#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace asrsplit {

using Vocabulary = std::set<std::string, std::less<>>;

/// NFC-normalizes and lowercases, splits on Unicode whitespace and drops tokens
/// made only of punctuation. Throws DataError when nothing is left.
std::vector<std::string> tokenize(std::string_view text);

/// Same as tokenize but an empty result is allowed (ASR hypotheses may be
/// empty).
std::vector<std::string> tokenize_lenient(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

struct LexicalProfile {
  int n_tokens = 0;
  int n_types = 0;
  double oov_rate = 0.0;
};

LexicalProfile lexical_profile(std::span<const std::string> tokens, const Vocabulary& vocab);

}  // namespace asrsplit
