// asrsplit: data-split evaluation for speech corpora.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "asrsplit/error.hpp"
#include "asrsplit/pipeline.hpp"
#include "asrsplit/simkit.hpp"

namespace fs = std::filesystem;
using namespace asrsplit;

namespace {

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  return in;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out << text;
}

TrigramLM load_lm(const std::string& lm_text, const std::string& lm_counts) {
  if (!lm_counts.empty()) {
    auto in = open_in(lm_counts);
    return TrigramLM::read_counts(in);
  }
  if (lm_text.empty()) throw ConfigError("give --lm-text or --lm-counts");
  return TrigramLM::train(read_lm_text(lm_text));
}

std::vector<Split> load_splits(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("split directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Split> out;
  for (const auto& f : files) {
    auto in = open_in(f);
    try {
      out.push_back(read_split(in));
    } catch (const DataError& e) {
      throw DataError(f.string() + ": " + e.what());
    }
  }
  if (out.empty()) throw DataError("no split files in '" + dir.string() + "'");
  return out;
}

std::map<std::string, SplitWer> score_splits(const Corpus& corpus, const std::vector<Split>& splits,
                                             const fs::path& hyp_dir) {
  const TokenMap refs = reference_map(corpus);
  std::map<std::string, SplitWer> out;
  for (const auto& s : splits) {
    const fs::path p = hyp_dir / (s.name + ".jsonl");
    std::ifstream in(p);
    if (!in) throw DataError("missing hypothesis file '" + p.string() + "'");
    out.emplace(s.name, split_wer(s, refs, read_hypotheses(in)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate ASR test-set construction strategies on a speech corpus."};
  app.require_subcommand(1);

  std::string manifest, lm_text, lm_counts, features_path, splits_dir, hyp_dir, mock_asr, out, strategies = "all",
                                                                                                report_path;
  std::uint64_t seed = 0;
  double target_fraction = 0.20;
  std::size_t restarts = 5, max_stall = 2000, workers = 0;
  bool plot = false;

  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and print corpus statistics.");
  ingest->add_option("--manifest", manifest, "JSONL manifest")->required();
  ingest->add_option("--out", out, "Directory for the normalized manifest and stats");

  auto* lm = app.add_subcommand("lm", "Train the trigram LM and write its count file.");
  lm->add_option("--lm-text", lm_text, "One sentence per line")->required();
  lm->add_option("--out", out, "Count file path")->required();

  auto* feat = app.add_subcommand("features", "Compute per-utterance features.");
  feat->add_option("--manifest", manifest)->required();
  feat->add_option("--lm-text", lm_text);
  feat->add_option("--lm-counts", lm_counts, "Count file from `lm`");
  feat->add_option("--out", out, "Feature sidecar (JSONL)")->required();
  feat->add_option("--workers", workers);

  auto* split = app.add_subcommand("split", "Generate splits for the chosen strategies.");
  split->add_option("--manifest", manifest)->required();
  split->add_option("--features", features_path, "Feature sidecar; required for heuristic strategies");
  split->add_option("--strategies", strategies, "Comma list or 'all'");
  split->add_option("--seed", seed);
  split->add_option("--target-fraction", target_fraction);
  split->add_option("--adversarial-restarts", restarts);
  split->add_option("--out", out, "Directory for split files")->required();
  split->add_option("--workers", workers);

  auto* score = app.add_subcommand("score", "Score hypotheses for each split.");
  score->add_option("--manifest", manifest)->required();
  score->add_option("--splits", splits_dir, "Directory of split files")->required();
  score->add_option("--hyp-dir", hyp_dir, "Directory of <split>.jsonl hypothesis files")->required();

  auto* regress = app.add_subcommand("regress", "Backward stepwise regression of utterance WER on feature ratios.");
  regress->add_option("--manifest", manifest)->required();
  regress->add_option("--features", features_path)->required();
  regress->add_option("--splits", splits_dir)->required();
  regress->add_option("--hyp-dir", hyp_dir)->required();
  regress->add_option("--out", out, "CSV path; stdout when omitted");

  int n_speakers = 20;
  bool audio = false;
  double error_std = 0.10;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic corpus, LM text and ground truth.");
  simulate->add_option("--out", out)->required();
  simulate->add_option("--seed", seed);
  simulate->add_option("--speakers", n_speakers);
  simulate->add_option("--speaker-error-std", error_std);
  simulate->add_flag("--audio", audio, "Write one WAV per utterance");

  auto* run = app.add_subcommand("run", "Run the whole experiment.");
  run->add_option("--manifest", manifest)->required();
  run->add_option("--lm-text", lm_text)->required();
  run->add_option("--strategies", strategies);
  auto* hyp_opt = run->add_option("--hyp-dir", hyp_dir);
  auto* mock_opt = run->add_option("--mock-asr", mock_asr, "Ground-truth file from `simulate`");
  hyp_opt->excludes(mock_opt);
  run->add_option("--seed", seed);
  run->add_option("--out", out)->required();
  run->add_option("--target-fraction", target_fraction);
  run->add_option("--adversarial-restarts", restarts);
  run->add_option("--adversarial-max-stall", max_stall);
  run->add_option("--workers", workers);
  run->add_flag("--plot", plot, "Write figure.svg");

  auto* plot_cmd = app.add_subcommand("plot", "Render the strip plot from report.json.");
  plot_cmd->add_option("--report", report_path)->required();
  plot_cmd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*ingest) {
      const Corpus corpus = load_manifest(manifest);
      nlohmann::json stats = {{"n_utterances", corpus.size()}, {"total_duration_s", corpus.total_duration()}};
      for (auto g : {GroupBy::speaker, GroupBy::session}) {
        if (!corpus.has_grouping(g)) continue;
        const auto s = corpus_stats(corpus, g);
        stats[to_string(g)] = {{"n_groups", s.n_groups},
                               {"mean_duration_per_group_s", s.mean_duration_per_group},
                               {"std_duration_per_group_s",
                                s.std_defined ? nlohmann::json(s.std_duration_per_group) : nlohmann::json(nullptr)},
                               {"range_duration_per_group_s", s.range_duration_per_group},
                               {"n_words", s.n_words},
                               {"n_types", s.n_types}};
      }
      if (!out.empty()) {
        std::ostringstream m;
        write_manifest(with_absolute_audio(corpus), m);
        write_file(fs::path(out) / "corpus.jsonl", m.str());
        write_file(fs::path(out) / "corpus_stats.json", stats.dump(1) + "\n");
      }
      std::cout << stats.dump(1) << '\n';
    } else if (*lm) {
      const TrigramLM model = TrigramLM::train(read_lm_text(lm_text));
      std::ostringstream os;
      model.write_counts(os);
      write_file(out, os.str());
    } else if (*feat) {
      const Corpus corpus = load_manifest(manifest);
      const TrigramLM model = load_lm(lm_text, lm_counts);
      std::ostringstream os;
      write_feature_sidecar(compute_features(corpus, model, workers), os);
      write_file(out, os.str());
    } else if (*split) {
      const Corpus corpus = load_manifest(manifest);
      FeatureTable features;
      if (!features_path.empty()) {
        auto in = open_in(features_path);
        features = read_feature_sidecar(in);
      }
      const StrategyOptions opt{seed, target_fraction, restarts, max_stall, std::nullopt, workers};
      for (const auto& strategy : parse_strategies(strategies)) {
        for (const auto& s : make_splits(corpus, features, strategy, opt)) {
          std::ostringstream os;
          write_split(s, os);
          write_file(fs::path(out) / (s.name + ".json"), os.str());
          std::cout << s.name << '\t' << test_fraction(corpus, s) << '\n';
        }
      }
    } else if (*score) {
      const Corpus corpus = load_manifest(manifest);
      const auto splits = load_splits(splits_dir);
      const auto wers = score_splits(corpus, splits, hyp_dir);
      std::cout << "split,method,wer,n_test\n";
      for (const auto& s : splits) {
        std::cout << s.name << ',' << strategy_name(s) << ',' << wers.at(s.name).pooled_percent << ','
                  << s.test_ids.size() << '\n';
      }
    } else if (*regress) {
      const Corpus corpus = load_manifest(manifest);
      auto fin = open_in(features_path);
      const FeatureTable features = read_feature_sidecar(fin);
      const auto splits = load_splits(splits_dir);
      const RowSet rows = build_rows(corpus, splits, features, score_splits(corpus, splits, hyp_dir));
      for (const auto& n : rows.notes) std::cerr << "note: " << n << '\n';
      std::vector<Predictor> preds(std::begin(kAllPredictors), std::end(kAllPredictors));
      const RegressionResult result = backward_stepwise(rows.rows, preds);
      std::ostringstream os;
      write_regression_csv(result, os);
      if (out.empty()) {
        std::cout << os.str();
      } else {
        write_file(out, os.str());
      }
    } else if (*simulate) {
      SimConfig cfg;
      cfg.seed = seed;
      cfg.n_speakers = n_speakers;
      cfg.error_rate_std = error_std;
      cfg.write_audio = audio;
      cfg.validate();
      fs::create_directories(out);
      const SimCorpus sim = generate_corpus(cfg, fs::path(out));
      std::ostringstream m, t, g;
      write_manifest(sim.corpus, m);
      for (const auto& sentence : sim.lm_text) {
        for (std::size_t i = 0; i < sentence.size(); ++i) t << (i ? " " : "") << sentence[i];
        t << '\n';
      }
      write_ground_truth(sim.truth, g);
      write_file(fs::path(out) / "manifest.jsonl", m.str());
      write_file(fs::path(out) / "lm.txt", t.str());
      write_file(fs::path(out) / "truth.json", g.str());
    } else if (*run) {
      ExperimentConfig cfg;
      cfg.manifest = manifest;
      cfg.lm_text = lm_text;
      cfg.strategies = parse_strategies(strategies);
      if (!hyp_dir.empty()) cfg.hyp_dir = hyp_dir;
      if (!mock_asr.empty()) cfg.mock_asr = mock_asr;
      cfg.out_dir = out;
      cfg.seed = seed;
      cfg.target_fraction = target_fraction;
      cfg.adversarial_restarts = restarts;
      cfg.adversarial_max_stall = max_stall;
      cfg.workers = workers;
      cfg.plot = plot;
      const ExperimentReport report = run_experiment(cfg);
      std::cout << "method,threshold,n_splits,wer,wer_std,wer_range\n";
      for (const auto& s : report.strategies) {
        const auto& m = s.summary;
        std::cout << m.method << ',' << (m.threshold ? std::to_string(*m.threshold) : "-") << ',' << m.n_splits << ','
                  << m.wer_mean << ',' << (m.wer_std ? std::to_string(*m.wer_std) : "-") << ','
                  << (m.n_splits > 1 ? std::to_string(m.wer_range) : "-") << '\n';
      }
      for (const auto& n : report.notes) std::cerr << "note: " << n << '\n';
    } else if (*plot_cmd) {
      auto in = open_in(report_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("report is not valid JSON: ") + e.what());
      }
      std::cout << emit_plots(report_from_json(j), out).string() << '\n';
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
