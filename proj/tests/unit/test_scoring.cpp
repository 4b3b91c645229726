#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "asrsplit/error.hpp"
#include "asrsplit/rng.hpp"
#include "asrsplit/scoring.hpp"
#include "support.hpp"

using namespace asrsplit;
using Tokens = std::vector<std::string>;

namespace {

// Memoized recursion over suffixes; shares nothing with the DP table.
int brute_edit_distance(const Tokens& a, const Tokens& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
    const int best = std::min({go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1), go(i + 1, j) + 1, go(i, j + 1) + 1});
    memo[{i, j}] = best;
    return best;
  };
  return go(0, 0);
}

Split split_of(const std::vector<std::string>& test) {
  Split s;
  s.name = "t";
  s.test_ids = test;
  return s;
}

}  // namespace

TEST_SUITE("scoring") {

TEST_CASE("identical sequences have zero WER") {
  const Tokens t{"a", "b", "c"};
  const WerBreakdown w = wer(t, t);
  CHECK(w.errors() == 0);
  CHECK(w.wer_percent() == 0.0);
}

TEST_CASE("one deletion out of three") {
  const WerBreakdown w = wer(Tokens{"the", "cat", "sat"}, Tokens{"the", "cat"});
  CHECK(w.deletions == 1);
  CHECK(w.substitutions == 0);
  CHECK(w.insertions == 0);
  CHECK(w.wer_percent() == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("WER can exceed 100 percent") {
  const WerBreakdown w = wer(Tokens{"a", "b"}, Tokens{"v", "w", "x", "y", "z"});
  CHECK(w.substitutions == 2);
  CHECK(w.insertions == 3);
  CHECK(w.deletions == 0);
  CHECK(w.wer_percent() == doctest::Approx(250.0));
}

TEST_CASE("empty hypothesis and empty reference") {
  const WerBreakdown w = wer(Tokens{"a", "b"}, Tokens{});
  CHECK(w.deletions == 2);
  CHECK(w.wer_percent() == 100.0);
  CHECK_THROWS_AS(wer(Tokens{}, Tokens{"a"}), DataError);
}

TEST_CASE("DP equals brute-force edit distance on all short pairs") {
  const char* alphabet[] = {"a", "b", "c"};
  std::vector<Tokens> seqs{{}};
  for (std::size_t len = 1; len <= 4; ++len) {
    std::vector<Tokens> next;
    for (const auto& s : seqs) {
      if (s.size() != len - 1) continue;
      for (const char* c : alphabet) {
        Tokens t = s;
        t.push_back(c);
        next.push_back(t);
      }
    }
    seqs.insert(seqs.end(), next.begin(), next.end());
  }
  // Lengths up to 4 keep this unit test quick; the acceptance suite runs to 6.
  for (const auto& ref : seqs) {
    if (ref.empty()) continue;
    for (const auto& hyp : seqs) {
      const WerBreakdown w = wer(ref, hyp);
      REQUIRE(w.errors() == brute_edit_distance(ref, hyp));
      CHECK(w.ref_len == static_cast<int>(ref.size()));
      // Every reference token is matched, substituted or deleted.
      CHECK(static_cast<int>(hyp.size()) - w.insertions + w.deletions == w.ref_len);
    }
  }
}

TEST_CASE("pooled split WER") {
  const TokenMap refs{{"u1", {"a", "b", "c"}}, {"u2", {"d", "e", "f"}}};
  const TokenMap hyps{{"u1", {"a", "x", "c"}}, {"u2", {"d", "e", "f"}}};
  const SplitWer w = split_wer(split_of({"u1", "u2"}), refs, hyps);
  CHECK(w.pooled_percent == doctest::Approx(100.0 / 6.0));
  CHECK(w.per_utterance.at("u1").wer_percent() == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("pooled WER weights by tokens, not utterances") {
  const TokenMap refs{{"short", {"a"}}, {"long", {"a", "b", "c", "d", "e", "f", "g", "h", "i"}}};
  const TokenMap hyps{{"short", {"z"}}, {"long", refs.at("long")}};
  const SplitWer w = split_wer(split_of({"short", "long"}), refs, hyps);
  CHECK(w.pooled_percent == doctest::Approx(10.0));
  double mean = 0;
  for (const auto& [_, b] : w.per_utterance) mean += b.wer_percent() / 2.0;
  CHECK(mean == doctest::Approx(50.0));
}

TEST_CASE("all-correct split and missing hypotheses") {
  const TokenMap refs{{"u1", {"a"}}, {"u2", {"b"}}, {"u3", {"c"}}};
  CHECK(split_wer(split_of({"u1", "u2"}), refs, refs).pooled_percent == 0.0);
  const TokenMap partial{{"u1", {"a"}}};
  try {
    split_wer(split_of({"u1", "u2", "u3"}), refs, partial);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("u2") != std::string::npos);
    CHECK(msg.find("u3") != std::string::npos);
  }
}

TEST_CASE("pooled WER is invariant under re-chunking") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    // Substitutions only, so each error stays inside whichever chunk holds its position.
    Tokens ref, hyp;
    for (int i = 0; i < 40; ++i) {
      ref.push_back("w" + std::to_string(rng.below(5)));
      hyp.push_back(rng.bernoulli(0.3) ? "err" : ref.back());
    }
    auto chunk = [&](std::size_t pieces) {
      TokenMap r, h;
      std::vector<std::string> ids;
      const std::size_t step = ref.size() / pieces;
      for (std::size_t p = 0; p < pieces; ++p) {
        const std::string id = "c" + std::to_string(p);
        const auto lo = static_cast<std::ptrdiff_t>(p * step);
        const auto hi = static_cast<std::ptrdiff_t>(p + 1 == pieces ? ref.size() : (p + 1) * step);
        r[id] = Tokens(ref.begin() + lo, ref.begin() + hi);
        h[id] = Tokens(hyp.begin() + lo, hyp.begin() + hi);
        ids.push_back(id);
      }
      return split_wer(split_of(ids), r, h).pooled_percent;
    };
    const double whole = chunk(1);
    CHECK(chunk(4) == doctest::Approx(whole).epsilon(1e-12));
    CHECK(chunk(8) == doctest::Approx(whole).epsilon(1e-12));
  }
}

TEST_CASE("strategy summaries") {
  const double three[] = {10, 20, 30};
  const StrategySummary s = summarize_strategy(three, "random");
  CHECK(s.n_splits == 3);
  CHECK(s.wer_mean == doctest::Approx(20));
  CHECK(s.wer_range == doctest::Approx(20));
  REQUIRE(s.wer_std);
  CHECK(*s.wer_std == doctest::Approx(10));

  const double one[] = {42.0};
  const StrategySummary single = summarize_strategy(one, "heuristic_pitch", 180.0);
  CHECK_FALSE(single.wer_std.has_value());
  CHECK(single.wer_range == 0.0);
  CHECK(single.threshold == 180.0);
  CHECK_THROWS_AS(summarize_strategy(std::span<const double>{}), DataError);
}

TEST_CASE("summary of 27 values matches a two-pass recomputation") {
  Rng rng(27);
  std::vector<double> v(27);
  for (auto& x : v) x = rng.uniform(5.0, 60.0);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 27.0;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const StrategySummary s = summarize_strategy(v);
  CHECK(s.wer_mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(*s.wer_std == doctest::Approx(std::sqrt(ss / 26.0)).epsilon(1e-12));
  CHECK(s.wer_range == doctest::Approx(*std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end())));
}

TEST_CASE("hypothesis file round-trip") {
  const TokenMap h{{"u1", {"a", "b"}}, {"u2", {}}, {"u3", {"\u00e9t\u00e9"}}};
  std::ostringstream out;
  write_hypotheses(h, out);
  std::istringstream in(out.str());
  CHECK(read_hypotheses(in) == h);
  std::istringstream dup(R"({"id":"u1","hypothesis":"a"}
{"id":"u1","hypothesis":"b"})");
  CHECK_THROWS_AS(read_hypotheses(dup), DataError);
}

}
