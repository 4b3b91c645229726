#include <doctest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "asrsplit/error.hpp"
#include "asrsplit/pipeline.hpp"
#include "asrsplit/simkit.hpp"
#include "support.hpp"

using namespace asrsplit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct SimFiles {
  fs::path manifest, lm_text, truth;
};

SimFiles write_sim(const fs::path& dir, SimConfig cfg) {
  const SimCorpus sim = generate_corpus(cfg, dir);
  std::ofstream m(dir / "manifest.jsonl"), t(dir / "lm.txt"), g(dir / "truth.json");
  write_manifest(sim.corpus, m);
  for (const auto& s : sim.lm_text) t << join_tokens(s) << '\n';
  write_ground_truth(sim.truth, g);
  return {dir / "manifest.jsonl", dir / "lm.txt", dir / "truth.json"};
}

SimConfig small_sim(bool audio) {
  SimConfig cfg;
  cfg.n_speakers = 6;
  cfg.min_utterances_per_speaker = 10;
  cfg.max_utterances_per_speaker = 14;
  cfg.lm_sentences = 400;
  cfg.write_audio = audio;
  cfg.seed = 21;
  return cfg;
}

ExperimentConfig config_for(const SimFiles& f, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.manifest = f.manifest;
  cfg.lm_text = f.lm_text;
  cfg.mock_asr = f.truth;
  cfg.out_dir = out;
  cfg.seed = 5;
  cfg.adversarial_max_stall = 400;
  cfg.plot = true;
  return cfg;
}

StrategyReport fake_strategy(const std::string& name, std::vector<double> wers) {
  StrategyReport r;
  for (std::size_t i = 0; i < wers.size(); ++i) {
    r.splits.push_back({name + "_" + std::to_string(i), name, wers[i], 0.2, 10, std::nullopt, std::nullopt});
  }
  r.summary = summarize_strategy(wers, name);
  return r;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("strategy parsing") {
  CHECK(parse_strategies("all") == all_strategies());
  CHECK(all_strategies().size() == 10);
  CHECK(parse_strategies("adversarial, random") == std::vector<std::string>{"random", "adversarial"});
  CHECK(parse_strategies("heuristic").size() == 6);
  CHECK_THROWS_AS(parse_strategies("bogus"), ConfigError);
  CHECK_THROWS_AS(parse_strategies(""), ConfigError);
}

TEST_CASE("config validation") {
  testsupport::TempDir dir("cfg");
  const SimFiles f = write_sim(dir.path(), small_sim(false));
  ExperimentConfig cfg = config_for(f, dir / "out");
  CHECK_NOTHROW(cfg.validate());
  ExperimentConfig both = cfg;
  both.hyp_dir = dir.path();
  CHECK_THROWS_AS(both.validate(), ConfigError);
  ExperimentConfig none = cfg;
  none.mock_asr.reset();
  CHECK_THROWS_AS(none.validate(), ConfigError);
  ExperimentConfig missing = cfg;
  missing.manifest = dir / "nope.jsonl";
  CHECK_THROWS_AS(missing.validate(), ConfigError);
  ExperimentConfig empty = cfg;
  empty.strategies.clear();
  CHECK_THROWS_AS(empty.validate(), ConfigError);
}

TEST_CASE("full matrix with audio: ten strategies, all artifacts re-readable") {
  testsupport::TempDir dir("run");
  const SimFiles f = write_sim(dir.path(), small_sim(true));
  const ExperimentConfig cfg = config_for(f, dir / "out");
  const ExperimentReport report = run_experiment(cfg);

  REQUIRE(report.strategies.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(report.strategies[i].summary.method == all_strategies()[i]);
  const auto& spk = report.strategies[0].summary;
  CHECK(spk.n_splits == 6);
  CHECK(report.strategies[2].summary.n_splits == 6);  // random count follows the speaker count
  for (std::size_t i = 3; i < 9; ++i) {
    CHECK(report.strategies[i].summary.n_splits == 1);
    CHECK(report.strategies[i].summary.threshold.has_value());
    CHECK_FALSE(report.strategies[i].summary.wer_std.has_value());
  }
  CHECK(report.strategies[9].summary.n_splits == 5);
  CHECK(report.overlap_reference == "random_01");
  CHECK(report.max_overlap.has_value());
  REQUIRE(report.regression.has_value());

  const fs::path out = cfg.out_dir;
  for (const char* name : {"corpus.jsonl", "lm.counts", "features.jsonl", "scores.csv", "summary.csv",
                           "utterance_wer.jsonl", "regression.csv", "report.json", "stages.json", "figure.svg"}) {
    CHECK_MESSAGE(fs::exists(out / name), name);
  }

  {
    // Read back from the output directory, so audio must resolve without the original base.
    const Corpus back = load_manifest(out / "corpus.jsonl");
    CHECK(back == with_absolute_audio(load_manifest(cfg.manifest)));
    for (const auto& u : back.utterances()) CHECK(fs::path(*u.audio_ref).is_absolute());
  }
  {
    std::ifstream in(out / "lm.counts");
    std::ostringstream again;
    TrigramLM::read_counts(in).write_counts(again);
    CHECK(again.str() == slurp(out / "lm.counts"));
  }
  {
    std::ifstream in(out / "features.jsonl");
    const FeatureTable ft = read_feature_sidecar(in);
    CHECK(ft.size() == report.n_utterances);
    for (const auto& [_, fv] : ft) {
      CHECK(fv.avg_pitch_hz.has_value());
      CHECK(fv.avg_intensity_db.has_value());
      CHECK(fv.perplexity.has_value());
    }
  }
  std::size_t n_split_files = 0;
  for (const auto& e : fs::directory_iterator(out / "splits")) {
    std::ifstream in(e.path());
    const Split s = read_split(in);
    CHECK(e.path().stem().string() == s.name);
    std::ifstream hin(out / "hyps" / (s.name + ".jsonl"));
    REQUIRE(hin);
    CHECK(read_hypotheses(hin).size() == s.test_ids.size());
    ++n_split_files;
  }
  std::size_t n_outcomes = 0;
  for (const auto& s : report.strategies) n_outcomes += s.splits.size();
  CHECK(n_split_files == n_outcomes);
  {
    std::ifstream in(out / "regression.csv");
    const RegressionResult back = read_regression_csv(in);
    CHECK(back.terms.size() == report.regression->terms.size());
    CHECK(back.n_rows == report.regression->n_rows);
  }
  {
    const auto j = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(to_json(report_from_json(j)) == j);
    CHECK(j == to_json(report));
  }
  const std::string summary = slurp(out / "summary.csv");
  CHECK(summary.rfind("method,threshold,n_splits,wer,wer_std,wer_range\n", 0) == 0);
  CHECK(count(summary, "\n") == 11);
  render_strip_plot(report);  // must not throw
  CHECK(slurp(out / "figure.svg") == render_strip_plot(report));
}

TEST_CASE("random-only run gives one summary row") {
  testsupport::TempDir dir("run");
  const SimFiles f = write_sim(dir.path(), small_sim(false));
  ExperimentConfig cfg = config_for(f, dir / "out");
  cfg.strategies = {"random"};
  const ExperimentReport r = run_experiment(cfg);
  REQUIRE(r.strategies.size() == 1);
  CHECK(r.strategies[0].summary.method == "random");
}

TEST_CASE("strategies a corpus cannot support are skipped with a note") {
  testsupport::TempDir dir("run");
  const SimFiles f = write_sim(dir.path(), small_sim(false));
  const ExperimentReport r = run_experiment(config_for(f, dir / "out"));
  // No audio: pitch and intensity are unavailable.
  std::vector<std::string> methods;
  for (const auto& s : r.strategies) methods.push_back(s.summary.method);
  CHECK(std::find(methods.begin(), methods.end(), "heuristic_pitch") == methods.end());
  CHECK(std::find(methods.begin(), methods.end(), "heuristic_intensity") == methods.end());
  CHECK(methods.size() == 8);
  bool noted = false;
  for (const auto& n : r.notes) noted |= n.find("skipped heuristic_pitch") != std::string::npos;
  CHECK(noted);
}

TEST_CASE("reruns are byte-identical and independent of worker count") {
  testsupport::TempDir dir("run");
  const SimFiles f = write_sim(dir.path(), small_sim(false));
  ExperimentConfig a = config_for(f, dir / "a");
  ExperimentConfig b = config_for(f, dir / "b");
  a.workers = 1;
  b.workers = 3;
  run_experiment(a);
  run_experiment(b);
  for (const char* name : {"report.json", "figure.svg", "scores.csv", "regression.csv", "features.jsonl"}) {
    CHECK_MESSAGE(slurp(dir / "a" / name) == slurp(dir / "b" / name), name);
  }
}

TEST_CASE("adding a strategy leaves the others untouched") {
  testsupport::TempDir dir("run");
  const SimFiles f = write_sim(dir.path(), small_sim(false));
  ExperimentConfig a = config_for(f, dir / "a");
  a.strategies = {"random"};
  ExperimentConfig b = config_for(f, dir / "b");
  b.strategies = {"random", "adversarial"};
  run_experiment(a);
  run_experiment(b);
  for (const auto& e : fs::directory_iterator(dir / "a" / "splits")) {
    CHECK(slurp(e.path()) == slurp(dir / "b" / "splits" / e.path().filename()));
  }
}

TEST_CASE("a missing hypothesis file aborts with the stage and path") {
  testsupport::TempDir dir("run");
  const SimFiles f = write_sim(dir.path(), small_sim(false));
  ExperimentConfig cfg = config_for(f, dir / "first");
  cfg.strategies = {"held_out_speaker"};
  run_experiment(cfg);
  fs::remove(dir / "first" / "hyps" / "held_out_speaker_spk03.jsonl");

  ExperimentConfig second = cfg;
  second.mock_asr.reset();
  second.hyp_dir = dir / "first" / "hyps";
  second.out_dir = dir / "second";
  try {
    run_experiment(second);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "hypotheses");
    CHECK(e.exit_code() == 3);
    CHECK(std::string(e.what()).find("held_out_speaker_spk03.jsonl") != std::string::npos);
  }
  const auto stages = nlohmann::json::parse(slurp(dir / "second" / "stages.json"));
  CHECK(stages["completed"] == nlohmann::json({"ingest", "lm", "features", "split"}));
  CHECK(stages["failed"] == "hypotheses");
}

TEST_CASE("hypotheses from a directory score like mock ASR") {
  testsupport::TempDir dir("run");
  const SimFiles f = write_sim(dir.path(), small_sim(false));
  ExperimentConfig mock = config_for(f, dir / "mock");
  mock.strategies = {"random", "heuristic_n_tokens"};
  const ExperimentReport a = run_experiment(mock);
  ExperimentConfig files = mock;
  files.mock_asr.reset();
  files.hyp_dir = dir / "mock" / "hyps";
  files.out_dir = dir / "files";
  const ExperimentReport b = run_experiment(files);
  CHECK(to_json(a)["strategies"] == to_json(b)["strategies"]);
}

TEST_CASE("strip plot element counts") {
  ExperimentReport r;
  r.strategies = {fake_strategy("held_out_speaker", {10, 20, 30, 25, 15}), fake_strategy("random", {19, 20, 21, 20, 20}),
                  fake_strategy("adversarial", {30, 35, 40, 38, 33})};
  const std::string svg = render_strip_plot(r);
  CHECK(count(svg, "class=\"point\"") == 15);
  CHECK(count(svg, "class=\"mean\"") == 3);
  CHECK(render_strip_plot(r) == svg);
}

TEST_CASE("a single split sits on its mean marker") {
  ExperimentReport r;
  r.strategies = {fake_strategy("heuristic_pitch", {27.5})};
  const std::string svg = render_strip_plot(r);
  const std::regex circle("<circle class=\"(point|mean)\" cx=\"([0-9.]+)\" cy=\"([0-9.]+)\"");
  std::vector<std::pair<std::string, std::string>> centres;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), circle); it != std::sregex_iterator(); ++it) {
    centres.emplace_back((*it)[2], (*it)[3]);
  }
  REQUIRE(centres.size() == 2);
  CHECK(centres[0] == centres[1]);
}

TEST_CASE("plotting an empty report is an error") {
  CHECK_THROWS_AS(render_strip_plot(ExperimentReport{}), DataError);
  ExperimentReport r;
  r.strategies.push_back(StrategyReport{});
  CHECK_THROWS_AS(render_strip_plot(r), DataError);
}

TEST_CASE("strip plot matches the golden render") {
  ExperimentReport r;
  r.strategies = {fake_strategy("held_out_speaker", {12.5, 31.0, 22.25, 18.0}), fake_strategy("random", {20.5, 21.0, 19.75}),
                  fake_strategy("heuristic_duration", {26.0}), fake_strategy("adversarial", {35.5, 41.0})};
  const std::string svg = render_strip_plot(r);
  const fs::path golden = fs::path(ASRSPLIT_TEST_DATA) / "strip_plot_golden.svg";
  if (std::getenv("ASRSPLIT_UPDATE_GOLDEN")) {
    std::ofstream(golden, std::ios::binary) << svg;
  }
  CHECK(svg == slurp(golden));
}

}
