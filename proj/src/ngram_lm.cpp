#include "asrsplit/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "asrsplit/error.hpp"

namespace asrsplit {

namespace {

std::string ctx_key(std::string_view a, std::string_view b) {
  std::string k(a);
  k += ' ';
  k += b;
  return k;
}

}  // namespace

TrigramLM::TrigramLM(const Vocabulary& training_types) : vocab_(training_types) { finalize_vocab(); }

void TrigramLM::finalize_vocab() {
  vocab_.erase(std::string(kSentenceStart));
  vocab_.emplace(kSentenceEnd);
  vocab_.emplace(kUnknown);
}

void TrigramLM::add(int order, const std::string& key, const std::string& word, std::uint64_t n) {
  auto& c = counts_[static_cast<std::size_t>(order - 1)][key];
  c.total += n;
  c.next[word] += n;
}

TrigramLM TrigramLM::train(std::span<const std::vector<std::string>> sentences) {
  TrigramLM lm;
  const std::string bos(kSentenceStart), eos(kSentenceEnd);
  std::size_t used = 0;
  for (const auto& sentence : sentences) {
    if (sentence.empty()) continue;
    ++used;
    std::string h1 = bos, h2 = bos;
    auto observe = [&](const std::string& w) {
      lm.add(1, "", w, 1);
      lm.add(2, h2, w, 1);
      lm.add(3, ctx_key(h1, h2), w, 1);
      h1 = std::move(h2);
      h2 = w;
    };
    for (const auto& w : sentence) {
      lm.vocab_.insert(w);
      observe(w);
    }
    observe(eos);
  }
  if (used == 0) throw DataError("language model training text has no sentences");
  lm.finalize_vocab();
  return lm;
}

bool TrigramLM::in_vocab(std::string_view w) const { return vocab_.contains(w); }

const TrigramLM::ContextCounts* TrigramLM::context(int order, std::string_view key) const {
  const auto& table = counts_.at(static_cast<std::size_t>(order - 1));
  auto it = table.find(std::string(key));
  return it == table.end() ? nullptr : &it->second;
}

std::vector<std::string> TrigramLM::contexts(int order) const {
  std::vector<std::string> keys;
  for (const auto& [k, _] : counts_.at(static_cast<std::size_t>(order - 1))) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  return keys;
}

double TrigramLM::prob(std::string_view word, std::string_view h1, std::string_view h2) const {
  const std::string w(in_vocab(word) ? word : kUnknown);
  auto smooth = [&](const ContextCounts* c, double lower) {
    if (!c) return lower;
    const auto t = static_cast<double>(c->next.size());
    auto it = c->next.find(w);
    const double hits = it == c->next.end() ? 0.0 : static_cast<double>(it->second);
    return (hits + t * lower) / (static_cast<double>(c->total) + t);
  };
  auto known = [&](std::string_view h) -> std::string_view {
    return h == kSentenceStart || in_vocab(h) ? h : kUnknown;
  };
  const double base = 1.0 / static_cast<double>(vocab_.size());
  const double p1 = smooth(context(1, ""), base);
  const double p2 = smooth(context(2, known(h2)), p1);
  return smooth(context(3, ctx_key(known(h1), known(h2))), p2);
}

double TrigramLM::prob(std::string_view word, std::span<const std::string> history) const {
  const std::string_view h2 = history.empty() ? kSentenceStart : std::string_view(history.back());
  const std::string_view h1 =
      history.size() < 2 ? kSentenceStart : std::string_view(history[history.size() - 2]);
  return prob(word, h1, h2);
}

void TrigramLM::write_counts(std::ostream& out) const {
  std::vector<std::tuple<int, std::string, std::string, std::uint64_t>> rows;
  for (int order = 1; order <= 3; ++order) {
    for (const auto& [key, c] : counts_[static_cast<std::size_t>(order - 1)]) {
      for (const auto& [w, n] : c.next) rows.emplace_back(order, key, w, n);
    }
  }
  std::sort(rows.begin(), rows.end());
  out << "#order\tcontext\tword\tcount\n";
  for (const auto& [order, key, w, n] : rows) out << order << '\t' << key << '\t' << w << '\t' << n << '\n';
}

TrigramLM TrigramLM::read_counts(std::istream& in) {
  TrigramLM lm;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string order_s, key, word, count_s;
    if (!std::getline(fields, order_s, '\t') || !std::getline(fields, key, '\t') ||
        !std::getline(fields, word, '\t') || !std::getline(fields, count_s)) {
      throw DataError("count file line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    int order = 0;
    std::uint64_t n = 0;
    try {
      order = std::stoi(order_s);
      n = std::stoull(count_s);
    } catch (const std::exception&) {
      throw DataError("count file line " + std::to_string(line_no) + ": bad number");
    }
    if (order < 1 || order > 3) throw DataError("count file line " + std::to_string(line_no) + ": order must be 1-3");
    lm.add(order, key, word, n);
    if (order == 1) lm.vocab_.insert(word);
  }
  if (!lm.context(1, "")) throw DataError("count file has no unigram counts");
  lm.finalize_vocab();
  return lm;
}

PerplexityResult score_perplexity(const TrigramLM& lm, std::span<const std::string> tokens) {
  if (tokens.empty()) throw DataError("perplexity needs at least one token");
  PerplexityResult r;
  std::string h1(kSentenceStart), h2(kSentenceStart);
  auto score = [&](std::string_view w) {
    if (lm.in_vocab(w) && w != kUnknown) {
      r.log10_prob += std::log10(lm.prob(w, h1, h2));
      ++r.n_events;
    } else {
      ++r.n_oov;
    }
    h1 = std::move(h2);
    h2 = std::string(w);
  };
  for (const auto& t : tokens) score(t);
  const bool all_oov = r.n_events == 0;
  score(kSentenceEnd);
  if (!all_oov) r.perplexity = std::pow(10.0, -r.log10_prob / r.n_events);
  return r;
}

}  // namespace asrsplit
