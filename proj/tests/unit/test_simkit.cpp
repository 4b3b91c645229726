#include <doctest.h>

#include <set>
#include <sstream>

#include "asrsplit/audio_features.hpp"
#include "asrsplit/error.hpp"
#include "asrsplit/scoring.hpp"
#include "asrsplit/simkit.hpp"
#include "asrsplit/splitters.hpp"
#include "support.hpp"

using namespace asrsplit;

namespace {

Split everything_in_test(const Corpus& c) {
  Split s;
  s.name = "all";
  for (const auto& u : c.utterances()) s.test_ids.push_back(u.id);
  return s;
}

}  // namespace

TEST_SUITE("simkit") {

TEST_CASE("same seed, same corpus") {
  SimConfig cfg;
  cfg.n_speakers = 5;
  cfg.seed = 4;
  const SimCorpus a = generate_corpus(cfg);
  const SimCorpus b = generate_corpus(cfg);
  CHECK(a.corpus == b.corpus);
  CHECK(a.lm_text == b.lm_text);
  std::ostringstream ta, tb;
  write_ground_truth(a.truth, ta);
  write_ground_truth(b.truth, tb);
  CHECK(ta.str() == tb.str());
  cfg.seed = 5;
  CHECK_FALSE(generate_corpus(cfg).corpus == a.corpus);
}

TEST_CASE("corpus shape follows the config") {
  SimConfig cfg;
  cfg.n_speakers = 7;
  cfg.sessions_per_speaker = 3;
  const SimCorpus sim = generate_corpus(cfg);
  CHECK(sim.truth.speakers.size() == 7);
  CHECK(corpus_stats(sim.corpus, GroupBy::speaker).n_groups == 7);
  CHECK(corpus_stats(sim.corpus, GroupBy::session).n_groups == 21);
  std::map<std::string, int> per_speaker;
  for (const auto& u : sim.corpus.utterances()) {
    ++per_speaker[*u.speaker_id];
    CHECK(static_cast<int>(u.transcript.size()) >= cfg.min_tokens);
    CHECK(static_cast<int>(u.transcript.size()) <= cfg.max_tokens);
    CHECK(u.duration_s > 0.0);
  }
  for (const auto& [_, n] : per_speaker) {
    CHECK(n >= cfg.min_utterances_per_speaker);
    CHECK(n <= cfg.max_utterances_per_speaker);
  }
  CHECK(sim.lm_text.size() == static_cast<std::size_t>(cfg.lm_sentences));
}

TEST_CASE("LM text omits the hidden words so transcripts see OOVs") {
  SimConfig cfg;
  cfg.n_speakers = 10;
  const SimCorpus sim = generate_corpus(cfg);
  std::set<std::string> lm_words;
  for (const auto& s : sim.lm_text) lm_words.insert(s.begin(), s.end());
  std::size_t oov = 0, total = 0;
  for (const auto& u : sim.corpus.utterances()) {
    for (const auto& t : u.transcript) {
      oov += !lm_words.contains(t);
      ++total;
    }
  }
  CHECK(oov > 0);
  CHECK(static_cast<double>(oov) / static_cast<double>(total) < 0.5);
}

TEST_CASE("invalid configs are rejected") {
  SimConfig cfg;
  cfg.n_speakers = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SimConfig{};
  cfg.min_tokens = 10;
  cfg.max_tokens = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("mock ASR at rate zero reproduces the references") {
  SimConfig cfg;
  cfg.n_speakers = 4;
  SimCorpus sim = generate_corpus(cfg);
  for (auto& [_, t] : sim.truth.speakers) t.error_rate = 0.0;
  const Split s = everything_in_test(sim.corpus);
  const TokenMap hyps = mock_asr(sim.corpus, s, sim.truth, 1);
  CHECK(hyps == reference_map(sim.corpus));
  CHECK(split_wer(s, reference_map(sim.corpus), hyps).pooled_percent == 0.0);
}

TEST_CASE("mock ASR at rate 0.30 over 10k tokens") {
  SimConfig cfg;
  cfg.n_speakers = 20;
  cfg.min_utterances_per_speaker = 30;
  cfg.max_utterances_per_speaker = 30;
  SimCorpus sim = generate_corpus(cfg);
  for (auto& [_, t] : sim.truth.speakers) t.error_rate = 0.30;
  const Split s = everything_in_test(sim.corpus);
  const SplitWer w = split_wer(s, reference_map(sim.corpus), mock_asr(sim.corpus, s, sim.truth, 77));
  REQUIRE(w.pooled.ref_len >= 10000);
  CHECK(std::abs(w.pooled_percent - 30.0) <= 2.0);
}

TEST_CASE("two speakers at 0.1 and 0.5 show up in held-out WER") {
  SimConfig cfg;
  cfg.n_speakers = 2;
  cfg.min_utterances_per_speaker = 60;
  cfg.max_utterances_per_speaker = 60;
  SimCorpus sim = generate_corpus(cfg);
  sim.truth.speakers.at("spk01").error_rate = 0.1;
  sim.truth.speakers.at("spk02").error_rate = 0.5;
  const TokenMap refs = reference_map(sim.corpus);
  for (const auto& s : split_held_out_group(sim.corpus, GroupBy::speaker)) {
    const double w = split_wer(s, refs, mock_asr(sim.corpus, s, sim.truth, 3)).pooled_percent;
    const double planted = sim.truth.speakers.at(*s.params.group_id).error_rate * 100.0;
    CHECK(std::abs(w - planted) <= 3.0);
  }
}

TEST_CASE("mock ASR needs a rate for every test speaker") {
  SimConfig cfg;
  cfg.n_speakers = 3;
  SimCorpus sim = generate_corpus(cfg);
  sim.truth.speakers.erase("spk02");
  CHECK_THROWS_AS(mock_asr(sim.corpus, everything_in_test(sim.corpus), sim.truth, 1), DataError);
}

TEST_CASE("ground truth round-trip") {
  SimConfig cfg;
  cfg.n_speakers = 3;
  cfg.session_effect_std = 0.05;
  const GroundTruth g = generate_corpus(cfg).truth;
  std::ostringstream out;
  write_ground_truth(g, out);
  std::istringstream in(out.str());
  const GroundTruth back = read_ground_truth(in);
  CHECK(back.seed == g.seed);
  CHECK(back.session_offsets == g.session_offsets);
  REQUIRE(back.speakers.size() == g.speakers.size());
  for (const auto& [id, t] : g.speakers) {
    CHECK(back.speakers.at(id).error_rate == t.error_rate);
    CHECK(back.speakers.at(id).f0_hz == t.f0_hz);
  }
}

TEST_CASE("written audio carries the planted pitch") {
  testsupport::TempDir dir("sim");
  SimConfig cfg;
  cfg.n_speakers = 3;
  cfg.min_utterances_per_speaker = 3;
  cfg.max_utterances_per_speaker = 3;
  cfg.write_audio = true;
  cfg.f0_jitter = 0.0;
  const SimCorpus sim = generate_corpus(cfg, dir.path());
  for (const auto& u : sim.corpus.utterances()) {
    REQUIRE(u.audio_ref);
    const AudioBuffer b = read_wav(sim.corpus.resolve(*u.audio_ref));
    CHECK(b.duration_s() == doctest::Approx(u.duration_s).epsilon(1e-9));
    const auto f0 = estimate_pitch(b);
    REQUIRE(f0);
    CHECK(std::abs(*f0 - sim.truth.speakers.at(*u.speaker_id).f0_hz) <= 3.0);
  }
}

TEST_CASE("a 220 Hz speaker is measured at 220 +- 3 Hz") {
  testsupport::TempDir dir("sim");
  SimConfig cfg;
  cfg.n_speakers = 2;
  cfg.min_utterances_per_speaker = 2;
  cfg.max_utterances_per_speaker = 2;
  cfg.sessions_per_speaker = 1;
  cfg.write_audio = true;
  cfg.min_f0_hz = 220.0;
  cfg.max_f0_hz = 220.0;
  cfg.f0_jitter = 0.0;
  const SimCorpus sim = generate_corpus(cfg, dir.path());
  double sum = 0;
  for (const auto& u : sim.corpus.utterances()) sum += *estimate_pitch(read_wav(sim.corpus.resolve(*u.audio_ref)));
  CHECK(std::abs(sum / 4.0 - 220.0) <= 3.0);
}

}
