#include <doctest.h>

#include <sstream>

#include "asrsplit/corpus.hpp"
#include "asrsplit/error.hpp"
#include "asrsplit/rng.hpp"
#include "support.hpp"

using namespace asrsplit;

TEST_SUITE("corpus") {

TEST_CASE("three valid lines parse into three utterances") {
  std::istringstream in(R"({"id":"u1","speaker":"s1","duration_s":1.5,"transcript":"a b"}
{"id":"u2","speaker":"s1","session":"x","duration_s":2.0,"transcript":["c","d"]}
{"id":"u3","speaker":"s2","duration_s":0.5,"transcript":"E","extra":42}
)");
  const Corpus c = parse_manifest(in);
  REQUIRE(c.size() == 3);
  CHECK(c.at("u2").transcript == std::vector<std::string>{"c", "d"});
  CHECK(c.at("u3").transcript == std::vector<std::string>{"e"});
  CHECK(c.at("u2").session_id == "x");
  CHECK_FALSE(c.at("u1").session_id.has_value());
  CHECK(c.has_grouping(GroupBy::speaker));
  CHECK_FALSE(c.has_grouping(GroupBy::session));
  CHECK(c.total_duration() == doctest::Approx(4.0));
}

TEST_CASE("duplicate id is rejected and named") {
  std::istringstream in(R"({"id":"u1","duration_s":1,"transcript":"a"}
{"id":"u1","duration_s":2,"transcript":"b"}
)");
  try {
    parse_manifest(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("u1") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
}

TEST_CASE("non-positive duration is rejected") {
  std::istringstream zero(R"({"id":"u1","duration_s":0,"transcript":"a"})");
  CHECK_THROWS_AS(parse_manifest(zero), DataError);
  std::istringstream neg(R"({"id":"u1","duration_s":-1,"transcript":"a"})");
  CHECK_THROWS_AS(parse_manifest(neg), DataError);
}

TEST_CASE("malformed records name their line") {
  std::istringstream bad("{\"id\":\"u1\",\"duration_s\":1,\"transcript\":\"a\"}\n{not json}\n");
  CHECK_THROWS_WITH_AS(parse_manifest(bad), doctest::Contains("line 2"), DataError);
  std::istringstream no_dur(R"({"id":"u1","transcript":"a"})");
  CHECK_THROWS_AS(parse_manifest(no_dur), DataError);
  std::istringstream punct(R"({"id":"u1","duration_s":1,"transcript":"... !"})");
  CHECK_THROWS_AS(parse_manifest(punct), DataError);
}

TEST_CASE("manifest round-trip is identity") {
  Rng rng(11);
  std::vector<testsupport::Row> rows;
  for (int i = 0; i < 40; ++i) {
    std::string words;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int k = 0; k < n; ++k) words += "w" + std::to_string(rng.below(9)) + " ";
    rows.push_back({"u" + std::to_string(i), 0.25 + rng.uniform() * 7.0, words,
                    i % 3 ? "spk" + std::to_string(i % 5) : "", "ses" + std::to_string(i % 7)});
  }
  const Corpus c = testsupport::make_corpus(rows);
  std::ostringstream out;
  write_manifest(c, out);
  std::istringstream in(out.str());
  const Corpus back = parse_manifest(in);
  CHECK(back == c);
  std::ostringstream again;
  write_manifest(back, again);
  CHECK(again.str() == out.str());
}

TEST_CASE("group stats: totals 10, 20, 30 minutes") {
  const Corpus c = testsupport::make_corpus({{"a1", 600, "x", "A"}, {"b1", 500, "x y", "B"}, {"b2", 700, "z", "B"},
                                             {"c1", 1800, "x", "C"}});
  const auto s = corpus_stats(c, GroupBy::speaker);
  CHECK(s.n_groups == 3);
  CHECK(s.mean_duration_per_group == doctest::Approx(1200));
  CHECK(s.range_duration_per_group == doctest::Approx(1200));
  CHECK(s.std_defined);
  CHECK(s.std_duration_per_group == doctest::Approx(600));  // sample std of {600, 1200, 1800}
  CHECK(s.n_words == 5);
  CHECK(s.n_types == 3);
}

TEST_CASE("single group has undefined std") {
  const Corpus c = testsupport::make_corpus({{"a1", 3, "x", "A"}, {"a2", 4, "y", "A"}});
  const auto s = corpus_stats(c, GroupBy::speaker);
  CHECK(s.n_groups == 1);
  CHECK_FALSE(s.std_defined);
  CHECK(s.std_duration_per_group == 0.0);
  CHECK(s.range_duration_per_group == 0.0);
}

TEST_CASE("five-group stats match a direct recomputation") {
  Rng rng(5);
  std::vector<testsupport::Row> rows;
  double sums[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < 60; ++i) {
    const int g = static_cast<int>(rng.below(5));
    const double d = 0.5 + 10.0 * rng.uniform();
    sums[g] += d;
    rows.push_back({"u" + std::to_string(i), d, "a", "g" + std::to_string(g)});
  }
  const std::vector<double> totals(std::begin(sums), std::end(sums));
  double mean = 0;
  for (double t : totals) mean += t / 5.0;
  double ss = 0;
  for (double t : totals) ss += (t - mean) * (t - mean);
  const auto [lo, hi] = std::minmax_element(totals.begin(), totals.end());

  const Corpus c = testsupport::make_corpus(rows);
  const auto s = corpus_stats(c, GroupBy::speaker);
  CHECK(s.n_groups == 5);
  CHECK(s.mean_duration_per_group == doctest::Approx(mean).epsilon(1e-12));
  CHECK(s.std_duration_per_group == doctest::Approx(std::sqrt(ss / 4.0)).epsilon(1e-12));
  CHECK(s.range_duration_per_group == doctest::Approx(*hi - *lo).epsilon(1e-12));

  double group_total = 0;
  for (const auto& [_, d] : group_durations(c, GroupBy::speaker)) group_total += d;
  CHECK(std::abs(group_total - c.total_duration()) < 1e-9);
}

TEST_CASE("grouping with missing keys is an error listing the ids") {
  const Corpus c = testsupport::make_corpus({{"a1", 1, "x", "A"}, {"n1", 1, "y"}});
  CHECK_THROWS_WITH_AS(corpus_stats(c, GroupBy::speaker), doctest::Contains("n1"), DataError);
}

TEST_CASE("group_by parsing") {
  CHECK(parse_group_by("speaker") == GroupBy::speaker);
  CHECK(parse_group_by("session") == GroupBy::session);
  CHECK_THROWS_AS(parse_group_by("room"), ConfigError);
}

}
