#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asrsplit/corpus.hpp"
#include "asrsplit/scoring.hpp"
#include "asrsplit/splitters.hpp"

namespace asrsplit {

struct SimConfig {
  int n_speakers = 20;
  int min_utterances_per_speaker = 20;
  int max_utterances_per_speaker = 40;
  int sessions_per_speaker = 2;
  int min_tokens = 3;
  int max_tokens = 40;
  double seconds_per_token = 0.35;
  double duration_noise_s = 0.4;  // std of additive duration noise
  int vocab_size = 800;
  double zipf_exponent = 1.0;
  // Share of each speaker's tokens drawn from that speaker's own topic words.
  double topic_weight = 0.35;
  int topic_size = 30;
  double base_error_rate = 0.30;
  double error_rate_std = 0.10;
  double session_effect_std = 0.0;
  int lm_sentences = 2000;
  // Share of the vocabulary never emitted into LM text, so transcripts see OOVs.
  double lm_oov_fraction = 0.10;

  bool write_audio = false;
  double sample_rate = 8000.0;
  double min_f0_hz = 90.0;
  double max_f0_hz = 260.0;
  double f0_jitter = 0.02;          // relative per-utterance std
  double min_amplitude = 0.02;
  double max_amplitude = 0.15;
  double amplitude_jitter = 0.10;   // relative per-utterance std
  double audio_seconds_per_token = 0.0;  // > 0 overrides seconds_per_token when writing audio

  std::uint64_t seed = 1;

  void validate() const;
};

struct SpeakerTruth {
  double error_rate = 0.0;
  double f0_hz = 0.0;
  double amplitude = 0.0;
  int topic = 0;
};

struct GroundTruth {
  std::map<std::string, SpeakerTruth> speakers;
  std::map<std::string, double> session_offsets;
  std::uint64_t seed = 0;
};

struct SimCorpus {
  Corpus corpus;
  GroundTruth truth;
  std::vector<std::vector<std::string>> lm_text;  // tokenized LM sentences
};

/// Draws a corpus from a speaker-tilted Zipf unigram mixture. With
/// write_audio, one 16-bit WAV per utterance (harmonic tone at the speaker's
/// F0 and amplitude) is written to out_dir/audio and referenced relative to
/// out_dir, which becomes the corpus base directory.
SimCorpus generate_corpus(const SimConfig& cfg, const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Tokenized sentences from the unbiased topic mixture.
std::vector<std::vector<std::string>> generate_text(const SimConfig& cfg, int n_sentences, std::uint64_t seed);

void write_ground_truth(const GroundTruth& truth, std::ostream& out);
GroundTruth read_ground_truth(std::istream& in);

/// Per-token error injection at each test speaker's rate (plus session
/// offset): 40% substitution, 30% deletion, 30% insertion after the token.
TokenMap mock_asr(const Corpus& corpus, const Split& split, const GroundTruth& truth, std::uint64_t seed);

}  // namespace asrsplit
