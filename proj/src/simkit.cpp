#include "asrsplit/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>

#include <json.hpp>

#include "asrsplit/error.hpp"
#include "asrsplit/rng.hpp"
#include "asrsplit/wav.hpp"

namespace asrsplit {

using nlohmann::json;

void SimConfig::validate() const {
  if (n_speakers < 2) throw ConfigError("simulation needs at least 2 speakers");
  if (min_utterances_per_speaker < 1 || max_utterances_per_speaker < min_utterances_per_speaker) {
    throw ConfigError("simulation needs at least one utterance per speaker");
  }
  if (min_tokens < 1 || max_tokens < min_tokens) throw ConfigError("invalid token count range");
  if (vocab_size < 2 || topic_size < 1 || topic_size > vocab_size) throw ConfigError("invalid vocabulary sizes");
  if (base_error_rate < 0.0 || base_error_rate > 1.0 || error_rate_std < 0.0) {
    throw ConfigError("error rates must lie in [0, 1]");
  }
  if (topic_weight < 0.0 || topic_weight > 1.0) throw ConfigError("topic_weight must lie in [0, 1]");
  if (lm_oov_fraction < 0.0 || lm_oov_fraction >= 1.0) throw ConfigError("lm_oov_fraction must lie in [0, 1)");
  if (write_audio && !(sample_rate > 2.0 * max_f0_hz * 2.0)) throw ConfigError("sample rate too low for F0 range");
}

namespace {

const char* const kOnsets[] = {"k", "n", "t", "m", "s", "l", "h", "w", "ng", "d", "b", "f"};
const char* const kVowels[] = {"a", "e", "i", "o", "u"};
constexpr int kSyllables = 12 * 5;

std::string word_for(int index) {
  // Two or more syllables, a bijective base-60 spelling of the index.
  std::string w;
  int v = index + kSyllables;
  while (v > 0) {
    const int s = v % kSyllables;
    w = std::string(kOnsets[s / 5]) + kVowels[s % 5] + w;
    v /= kSyllables;
  }
  return w;
}

class Lexicon {
 public:
  explicit Lexicon(const SimConfig& cfg) {
    words_.reserve(static_cast<std::size_t>(cfg.vocab_size));
    for (int i = 0; i < cfg.vocab_size; ++i) words_.push_back(word_for(i));
    Rng rng(derive_seed(cfg.seed, "lexicon"));
    double acc = 0.0;
    for (int r = 1; r <= cfg.vocab_size; ++r) {
      acc += 1.0 / std::pow(static_cast<double>(r), cfg.zipf_exponent);
      cdf_.push_back(acc);
    }
    for (auto& c : cdf_) c /= acc;
    for (int t = 0; t < cfg.n_speakers; ++t) {
      std::vector<int> all(static_cast<std::size_t>(cfg.vocab_size));
      for (int i = 0; i < cfg.vocab_size; ++i) all[static_cast<std::size_t>(i)] = i;
      rng.shuffle(std::span(all));
      all.resize(static_cast<std::size_t>(cfg.topic_size));
      topics_.push_back(std::move(all));
    }
    std::vector<int> pool(static_cast<std::size_t>(cfg.vocab_size));
    for (int i = 0; i < cfg.vocab_size; ++i) pool[static_cast<std::size_t>(i)] = i;
    rng.shuffle(std::span(pool));
    const auto n_hidden = static_cast<std::size_t>(std::floor(cfg.lm_oov_fraction * cfg.vocab_size));
    hidden_.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_hidden));
  }

  int zipf(Rng& rng) const {
    const double u = rng.uniform();
    return static_cast<int>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin()) %
           static_cast<int>(cdf_.size());
  }

  int draw(Rng& rng, int topic, double topic_weight) const {
    if (rng.bernoulli(topic_weight)) {
      const auto& words = topics_[static_cast<std::size_t>(topic)];
      return words[rng.below(words.size())];
    }
    return zipf(rng);
  }

  bool hidden(int w) const { return std::find(hidden_.begin(), hidden_.end(), w) != hidden_.end(); }
  const std::string& word(int i) const { return words_[static_cast<std::size_t>(i)]; }
  std::size_t n_topics() const { return topics_.size(); }

 private:
  std::vector<std::string> words_;
  std::vector<double> cdf_;
  std::vector<std::vector<int>> topics_;
  std::vector<int> hidden_;
};

std::string padded(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
  return buf;
}

Eigen::ArrayXd tone(Eigen::Index n, double sample_rate, double f0, double amplitude, Rng& rng) {
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) / sample_rate;
  const Eigen::ArrayXd w = 2.0 * std::numbers::pi * f0 * t + phase;
  return amplitude * (w.sin() + 0.3 * (2.0 * w).sin()) / 1.0440306508910551;  // sqrt(1 + 0.3^2)
}

}  // namespace

std::vector<std::vector<std::string>> generate_text(const SimConfig& cfg, int n_sentences, std::uint64_t seed) {
  cfg.validate();
  const Lexicon lex(cfg);
  Rng rng(derive_seed(seed, "lm-text"));
  std::vector<std::vector<std::string>> out;
  out.reserve(static_cast<std::size_t>(n_sentences));
  for (int s = 0; s < n_sentences; ++s) {
    const int topic = static_cast<int>(rng.below(lex.n_topics()));
    const int len = cfg.min_tokens + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_tokens - cfg.min_tokens + 1)));
    std::vector<std::string> sentence;
    while (static_cast<int>(sentence.size()) < len) {
      const int w = lex.draw(rng, topic, cfg.topic_weight);
      if (!lex.hidden(w)) sentence.push_back(lex.word(w));
    }
    out.push_back(std::move(sentence));
  }
  return out;
}

SimCorpus generate_corpus(const SimConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  if (cfg.write_audio && !out_dir) throw ConfigError("writing audio needs an output directory");
  const Lexicon lex(cfg);
  Rng speaker_rng(derive_seed(cfg.seed, "speakers"));
  Rng utt_rng(derive_seed(cfg.seed, "utterances"));
  Rng audio_rng(derive_seed(cfg.seed, "audio"));
  if (cfg.write_audio) std::filesystem::create_directories(*out_dir / "audio");

  SimCorpus sim;
  sim.truth.seed = cfg.seed;
  std::vector<Utterance> utts;
  for (int s = 0; s < cfg.n_speakers; ++s) {
    const std::string speaker = padded("spk", s + 1, 2);
    SpeakerTruth truth;
    truth.error_rate = std::clamp(speaker_rng.normal(cfg.base_error_rate, cfg.error_rate_std), 0.0, 1.0);
    truth.f0_hz = speaker_rng.uniform(cfg.min_f0_hz, cfg.max_f0_hz);
    truth.amplitude = speaker_rng.uniform(cfg.min_amplitude, cfg.max_amplitude);
    truth.topic = s;
    sim.truth.speakers.emplace(speaker, truth);
    for (int k = 0; k < cfg.sessions_per_speaker; ++k) {
      const double offset = cfg.session_effect_std > 0 ? speaker_rng.normal(0.0, cfg.session_effect_std) : 0.0;
      sim.truth.session_offsets.emplace(speaker + "_" + padded("s", k + 1, 1), offset);
    }

    const int n_utts = cfg.min_utterances_per_speaker +
                       static_cast<int>(utt_rng.below(static_cast<std::uint64_t>(
                           cfg.max_utterances_per_speaker - cfg.min_utterances_per_speaker + 1)));
    for (int i = 0; i < n_utts; ++i) {
      Utterance u;
      u.id = speaker + "_" + padded("u", i + 1, 4);
      u.speaker_id = speaker;
      if (cfg.sessions_per_speaker > 0) {
        const int k = static_cast<int>(utt_rng.below(static_cast<std::uint64_t>(cfg.sessions_per_speaker)));
        u.session_id = speaker + "_" + padded("s", k + 1, 1);
      }
      const int len = cfg.min_tokens +
                      static_cast<int>(utt_rng.below(static_cast<std::uint64_t>(cfg.max_tokens - cfg.min_tokens + 1)));
      for (int t = 0; t < len; ++t) u.transcript.push_back(lex.word(lex.draw(utt_rng, truth.topic, cfg.topic_weight)));
      const double per_token = cfg.write_audio && cfg.audio_seconds_per_token > 0 ? cfg.audio_seconds_per_token
                                                                                   : cfg.seconds_per_token;
      u.duration_s = std::max(0.3, len * per_token + std::abs(utt_rng.normal(0.0, cfg.duration_noise_s)));

      if (cfg.write_audio) {
        const auto n = static_cast<Eigen::Index>(std::lround(u.duration_s * cfg.sample_rate));
        u.duration_s = static_cast<double>(n) / cfg.sample_rate;
        const double f0 = truth.f0_hz * std::max(0.5, 1.0 + cfg.f0_jitter * audio_rng.normal());
        const double amp = truth.amplitude * std::max(0.1, 1.0 + cfg.amplitude_jitter * audio_rng.normal());
        AudioBuffer buf{tone(n, cfg.sample_rate, f0, amp, audio_rng), cfg.sample_rate};
        const std::string rel = "audio/" + u.id + ".wav";
        write_wav(*out_dir / rel, buf);
        u.audio_ref = rel;
      }
      utts.push_back(std::move(u));
    }
  }
  sim.corpus = Corpus(std::move(utts), out_dir.value_or(std::filesystem::path{}));
  sim.lm_text = generate_text(cfg, cfg.lm_sentences, cfg.seed);
  return sim;
}

void write_ground_truth(const GroundTruth& truth, std::ostream& out) {
  json j;
  j["seed"] = truth.seed;
  json speakers = json::object();
  for (const auto& [id, s] : truth.speakers) {
    speakers[id] = {{"error_rate", s.error_rate}, {"f0_hz", s.f0_hz}, {"amplitude", s.amplitude}, {"topic", s.topic}};
  }
  j["speakers"] = speakers;
  j["session_offsets"] = truth.session_offsets;
  out << j.dump(1) << '\n';
}

GroundTruth read_ground_truth(std::istream& in) {
  try {
    const json j = json::parse(in);
    GroundTruth t;
    t.seed = j.value("seed", std::uint64_t{0});
    for (const auto& [id, s] : j.at("speakers").items()) {
      t.speakers.emplace(id, SpeakerTruth{s.at("error_rate").get<double>(), s.value("f0_hz", 0.0),
                                          s.value("amplitude", 0.0), s.value("topic", 0)});
    }
    if (j.contains("session_offsets")) t.session_offsets = j["session_offsets"].get<std::map<std::string, double>>();
    return t;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed ground truth: ") + e.what());
  }
}

TokenMap mock_asr(const Corpus& corpus, const Split& split, const GroundTruth& truth, std::uint64_t seed) {
  std::set<std::string> vocab_set;
  for (const auto& u : corpus.utterances()) vocab_set.insert(u.transcript.begin(), u.transcript.end());
  const std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());

  TokenMap hyps;
  for (const auto& id : split.test_ids) {
    const Utterance& u = corpus.at(id);
    if (!u.speaker_id) throw DataError("mock ASR: utterance '" + id + "' has no speaker");
    auto it = truth.speakers.find(*u.speaker_id);
    if (it == truth.speakers.end()) throw DataError("mock ASR: no error rate for speaker '" + *u.speaker_id + "'");
    double rate = it->second.error_rate;
    if (u.session_id) {
      if (auto s = truth.session_offsets.find(*u.session_id); s != truth.session_offsets.end()) rate += s->second;
    }
    rate = std::clamp(rate, 0.0, 1.0);

    Rng rng(derive_seed(seed, split.name + "/" + id));
    auto other_than = [&](const std::string& w) {
      if (vocab.size() < 2) return w + "'";
      std::string pick;
      do {
        pick = vocab[rng.below(vocab.size())];
      } while (pick == w);
      return pick;
    };
    std::vector<std::string> hyp;
    for (const auto& tok : u.transcript) {
      if (!rng.bernoulli(rate)) {
        hyp.push_back(tok);
        continue;
      }
      const double kind = rng.uniform();
      if (kind < 0.4) {
        hyp.push_back(other_than(tok));
      } else if (kind < 0.7) {
        // deletion
      } else {
        hyp.push_back(tok);
        hyp.push_back(vocab[rng.below(vocab.size())]);
      }
    }
    hyps.emplace(id, std::move(hyp));
  }
  return hyps;
}

}  // namespace asrsplit
