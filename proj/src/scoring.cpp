#include "asrsplit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "asrsplit/error.hpp"
#include "asrsplit/text_features.hpp"

namespace asrsplit {

using nlohmann::json;

WerBreakdown wer(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  if (reference.empty()) throw DataError("WER needs a non-empty reference");
  const std::size_t n = reference.size(), m = hypothesis.size();
  // cost[i][j]: edits to turn reference[0, i) into hypothesis[0, j).
  std::vector<int> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }

  WerBreakdown b;
  b.ref_len = static_cast<int>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        b.substitutions += !same;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++b.insertions;
      --j;
    } else {
      ++b.deletions;
      --i;
    }
  }
  return b;
}

SplitWer split_wer(const Split& split, const TokenMap& refs, const TokenMap& hyps) {
  std::vector<std::string> missing;
  for (const auto& id : split.test_ids) {
    if (!hyps.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string msg = "split '" + split.name + "': missing hypotheses for";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
  }
  if (split.test_ids.empty()) throw DataError("split '" + split.name + "' has an empty test set");
  SplitWer out;
  for (const auto& id : split.test_ids) {
    auto ref = refs.find(id);
    if (ref == refs.end()) throw DataError("no reference transcript for '" + id + "'");
    const WerBreakdown b = wer(ref->second, hyps.at(id));
    out.pooled += b;
    out.per_utterance.emplace(id, b);
  }
  out.pooled_percent = out.pooled.wer_percent();
  return out;
}

StrategySummary summarize_strategy(std::span<const double> wers, std::string method,
                                   std::optional<double> threshold) {
  if (wers.empty()) throw DataError("summarize_strategy needs at least one WER");
  StrategySummary s;
  s.method = std::move(method);
  s.threshold = threshold;
  s.n_splits = wers.size();
  const double n = static_cast<double>(wers.size());
  s.wer_mean = std::accumulate(wers.begin(), wers.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(wers.begin(), wers.end());
  s.wer_range = *hi - *lo;
  if (wers.size() > 1) {
    double ss = 0.0;
    for (double w : wers) ss += (w - s.wer_mean) * (w - s.wer_mean);
    s.wer_std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

TokenMap read_hypotheses(std::istream& in) {
  TokenMap hyps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto id = j.at("id").get<std::string>();
      const json& h = j.at("hypothesis");
      std::vector<std::string> tokens;
      if (h.is_string()) {
        tokens = tokenize_lenient(h.get<std::string>());
      } else if (h.is_array()) {
        tokens = tokenize_lenient(join_tokens(h.get<std::vector<std::string>>()));
      } else if (!h.is_null()) {
        throw DataError("hypothesis must be a string or an array of strings");
      }
      if (!hyps.emplace(id, std::move(tokens)).second) throw DataError("duplicate hypothesis id '" + id + "'");
    } catch (const json::exception& e) {
      throw DataError("hypothesis line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("hypothesis line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return hyps;
}

void write_hypotheses(const TokenMap& hyps, std::ostream& out) {
  for (const auto& [id, tokens] : hyps) {
    json j;
    j["id"] = id;
    j["hypothesis"] = join_tokens(tokens);
    out << j.dump() << '\n';
  }
}

TokenMap reference_map(const Corpus& corpus) {
  TokenMap refs;
  for (const auto& u : corpus.utterances()) refs.emplace(u.id, u.transcript);
  return refs;
}

}  // namespace asrsplit
