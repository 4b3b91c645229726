#include "asrsplit/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "asrsplit/error.hpp"
#include "asrsplit/parallel.hpp"
#include "asrsplit/rng.hpp"
#include "asrsplit/simkit.hpp"
#include "asrsplit/text_features.hpp"

namespace asrsplit {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& all_strategies() {
  static const std::vector<std::string> names = {
      "held_out_speaker",    "held_out_session",   "random",
      "heuristic_duration",  "heuristic_pitch",    "heuristic_intensity",
      "heuristic_n_tokens",  "heuristic_n_types",  "heuristic_perplexity",
      "adversarial"};
  return names;
}

std::vector<std::string> parse_strategies(const std::string& csv) {
  std::set<std::string> wanted;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (item.empty()) continue;
    if (item == "all") {
      wanted.insert(all_strategies().begin(), all_strategies().end());
    } else if (item == "heuristic") {
      for (auto f : kAllHeuristicFeatures) wanted.insert(std::string("heuristic_") + to_string(f));
    } else if (std::find(all_strategies().begin(), all_strategies().end(), item) != all_strategies().end()) {
      wanted.insert(item);
    } else {
      throw ConfigError("unknown strategy '" + item + "'");
    }
  }
  std::vector<std::string> out;
  for (const auto& s : all_strategies()) {
    if (wanted.contains(s)) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("no strategies selected");
  return out;
}

void ExperimentConfig::validate() const {
  if (!fs::exists(manifest)) throw ConfigError("manifest '" + manifest.string() + "' does not exist");
  if (!fs::exists(lm_text)) throw ConfigError("LM text '" + lm_text.string() + "' does not exist");
  if (strategies.empty()) throw ConfigError("no strategies selected");
  if (hyp_dir.has_value() == mock_asr.has_value()) {
    throw ConfigError("give exactly one hypothesis source: --hyp-dir or --mock-asr");
  }
  if (hyp_dir && !fs::is_directory(*hyp_dir)) throw ConfigError("hypothesis directory '" + hyp_dir->string() + "' does not exist");
  if (mock_asr && !fs::exists(*mock_asr)) throw ConfigError("ground-truth file '" + mock_asr->string() + "' does not exist");
  if (out_dir.empty()) throw ConfigError("an output directory is required");
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) throw ConfigError("target fraction must lie in (0, 1)");
  if (adversarial_restarts == 0) throw ConfigError("adversarial restarts must be >= 1");
}

std::vector<std::vector<std::string>> read_lm_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open LM text '" + path.string() + "'");
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize_lenient(line);
    if (!tokens.empty()) sentences.push_back(std::move(tokens));
  }
  return sentences;
}

FeatureTable compute_features(const Corpus& corpus, const TrigramLM& lm, std::size_t workers) {
  std::vector<FeatureVector> out(corpus.size());
  parallel_for(
      corpus.size(),
      [&](std::size_t i) {
        const Utterance& u = corpus.utterances()[i];
        FeatureVector f = u.precomputed;
        f.duration_s = u.duration_s;
        const LexicalProfile lex = lexical_profile(u.transcript, lm.vocab());
        f.n_tokens = lex.n_tokens;
        f.n_types = lex.n_types;
        f.oov_rate = lex.oov_rate;
        f.perplexity = perplexity(lm, u.transcript);
        if (u.audio_ref) {
          const AudioBuffer buf = read_wav(corpus.resolve(*u.audio_ref));
          f.avg_pitch_hz = estimate_pitch(buf);
          f.avg_intensity_db = estimate_intensity(buf);
        }
        out[i] = std::move(f);
      },
      workers == 0 ? default_workers() : workers);
  FeatureTable table;
  for (std::size_t i = 0; i < corpus.size(); ++i) table.emplace(corpus.utterances()[i].id, std::move(out[i]));
  return table;
}

namespace {

std::optional<HeuristicFeature> heuristic_of(const std::string& strategy) {
  const std::string prefix = "heuristic_";
  if (strategy.rfind(prefix, 0) != 0) return std::nullopt;
  return parse_heuristic_feature(strategy.substr(prefix.size()));
}

std::size_t default_random_count(const Corpus& corpus) {
  for (auto g : {GroupBy::speaker, GroupBy::session}) {
    if (corpus.has_grouping(g)) {
      const auto n = group_durations(corpus, g).size();
      if (n >= 2) return n;
    }
  }
  return 10;
}

// Why a strategy cannot run on this corpus, if it cannot.
std::optional<std::string> unsupported(const Corpus& corpus, const FeatureTable& features, const std::string& strategy) {
  if (strategy == "held_out_speaker" || strategy == "held_out_session") {
    const GroupBy g = strategy == "held_out_speaker" ? GroupBy::speaker : GroupBy::session;
    if (!corpus.has_grouping(g)) return std::string("not every utterance has a ") + to_string(g) + " id";
    if (group_durations(corpus, g).size() < 2) return std::string("fewer than 2 ") + to_string(g) + "s";
  }
  if (auto f = heuristic_of(strategy)) {
    std::size_t have = 0;
    static const FeatureVector kNone;
    for (const auto& u : corpus.utterances()) {
      auto it = features.find(u.id);
      have += feature_value(u, it == features.end() ? kNone : it->second, *f).has_value();
    }
    if (have < 2) return std::string("feature ") + to_string(*f) + " is unavailable";
  }
  if (strategy == "adversarial" && corpus.size() < 10) return std::string("fewer than 10 utterances");
  return std::nullopt;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string params_string(const Split& s) {
  std::string out;
  auto add = [&](const std::string& kv) { out += (out.empty() ? "" : ";") + kv; };
  if (s.params.group_by) add(std::string("group_by=") + to_string(*s.params.group_by));
  if (s.params.group_id) add("group=" + *s.params.group_id);
  if (s.params.feature) add(std::string("feature=") + to_string(*s.params.feature));
  if (s.params.threshold) add("threshold=" + fmt(*s.params.threshold));
  if (s.seed) add("seed=" + std::to_string(*s.seed));
  if (s.params.achieved_distance) add("distance=" + fmt(*s.params.achieved_distance));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

class StageRunner {
 public:
  explicit StageRunner(fs::path out_dir) : out_dir_(std::move(out_dir)) {}

  template <typename Fn>
  auto run(const std::string& stage, const std::string& artifact, Fn&& fn) {
    try {
      auto result = fn();
      completed_.push_back(stage);
      record(std::nullopt);
      return result;
    } catch (const StageError&) {
      throw;
    } catch (const ConfigError& e) {
      record(stage);
      throw StageError(stage, artifact, e.what(), 2);
    } catch (const DataError& e) {
      record(stage);
      throw StageError(stage, artifact, e.what(), 3);
    } catch (const std::exception& e) {
      record(stage);
      throw StageError(stage, artifact, e.what(), 4);
    }
  }

 private:
  void record(const std::optional<std::string>& failed) {
    json j;
    j["completed"] = completed_;
    j["failed"] = failed ? json(*failed) : json(nullptr);
    std::ofstream(out_dir_ / "stages.json") << j.dump(1) << '\n';
  }

  fs::path out_dir_;
  std::vector<std::string> completed_;
};

}  // namespace

std::vector<Split> make_splits(const Corpus& corpus, const FeatureTable& features, const std::string& strategy,
                               const StrategyOptions& opt) {
  if (strategy == "held_out_speaker") return split_held_out_group(corpus, GroupBy::speaker);
  if (strategy == "held_out_session") return split_held_out_group(corpus, GroupBy::session);
  if (strategy == "random") {
    RandomSplitConfig rc;
    rc.n_splits = opt.random_splits.value_or(default_random_count(corpus));
    rc.seed = opt.seed;
    rc.target_fraction = opt.target_fraction;
    return split_random(corpus, rc);
  }
  if (auto f = heuristic_of(strategy)) return {split_heuristic(corpus, features, *f, opt.target_fraction)};
  if (strategy == "adversarial") {
    AdversarialConfig ac;
    ac.n_splits = opt.adversarial_restarts;
    ac.seed = opt.seed;
    ac.max_stall = opt.adversarial_max_stall;
    ac.target_fraction = opt.target_fraction;
    ac.workers = opt.workers;
    return split_adversarial(corpus, ac);
  }
  throw ConfigError("unknown strategy '" + strategy + "'");
}

json to_json(const ExperimentReport& r) {
  json j;
  j["n_utterances"] = r.n_utterances;
  j["total_duration_s"] = r.total_duration_s;
  json desc = json::object();
  for (const auto& [g, s] : r.descriptive) {
    desc[g] = {{"n_groups", s.n_groups},
               {"mean_duration_per_group_s", s.mean_duration_per_group},
               {"std_duration_per_group_s", s.std_defined ? json(s.std_duration_per_group) : json(nullptr)},
               {"range_duration_per_group_s", s.range_duration_per_group},
               {"n_words", s.n_words},
               {"n_types", s.n_types}};
  }
  j["descriptive"] = desc;
  json strategies = json::array();
  for (const auto& sr : r.strategies) {
    json splits = json::array();
    for (const auto& o : sr.splits) {
      splits.push_back({{"name", o.name},
                        {"wer", o.wer},
                        {"test_fraction", o.test_fraction},
                        {"n_test", o.n_test},
                        {"threshold", opt_json(o.threshold)},
                        {"achieved_distance", opt_json(o.achieved_distance)}});
    }
    strategies.push_back({{"method", sr.summary.method},
                          {"threshold", opt_json(sr.summary.threshold)},
                          {"n_splits", sr.summary.n_splits},
                          {"wer", sr.summary.wer_mean},
                          {"wer_std", opt_json(sr.summary.wer_std)},
                          {"wer_range", sr.summary.wer_range},
                          {"splits", splits}});
  }
  j["strategies"] = strategies;
  j["overlap"] = {{"reference", r.overlap_reference ? json(*r.overlap_reference) : json(nullptr)},
                  {"ratios", r.overlap},
                  {"max_ratio", opt_json(r.max_overlap)}};
  if (r.regression) {
    const auto& reg = *r.regression;
    json terms = json::array();
    for (const auto& t : reg.terms) {
      terms.push_back({{"name", t.name},
                       {"control", t.control},
                       {"coefficient", t.coef},
                       {"ci_low", t.ci_low},
                       {"ci_high", t.ci_high},
                       {"p", t.p_value},
                       {"stars", significance_stars(t.p_value)}});
    }
    j["regression"] = {{"model", "fixed-effects OLS with speaker and method dummies (approximates mixed-effects random slopes)"},
                       {"r_squared", reg.r_squared},
                       {"n_rows", reg.n_rows},
                       {"n_excluded", reg.n_excluded},
                       {"eliminated", reg.eliminated},
                       {"dropped_constant", reg.dropped_constant},
                       {"terms", terms}};
  } else {
    j["regression"] = nullptr;
  }
  json gd = json::array();
  for (const auto& g : r.group_duration) {
    gd.push_back({{"strategy", g.strategy}, {"n_groups", g.n_groups}, {"slope", g.slope}, {"p", g.p_value}});
  }
  j["group_duration"] = gd;
  j["notes"] = r.notes;
  return j;
}

ExperimentReport report_from_json(const json& j) {
  try {
    ExperimentReport r;
    r.n_utterances = j.at("n_utterances").get<std::size_t>();
    r.total_duration_s = j.at("total_duration_s").get<double>();
    for (const auto& [g, s] : j.at("descriptive").items()) {
      DescriptiveStats d;
      d.n_groups = s.at("n_groups").get<std::size_t>();
      d.mean_duration_per_group = s.at("mean_duration_per_group_s").get<double>();
      auto sd = opt_from(s, "std_duration_per_group_s");
      d.std_defined = sd.has_value();
      d.std_duration_per_group = sd.value_or(0.0);
      d.range_duration_per_group = s.at("range_duration_per_group_s").get<double>();
      d.n_words = s.at("n_words").get<std::size_t>();
      d.n_types = s.at("n_types").get<std::size_t>();
      r.descriptive.emplace(g, d);
    }
    for (const auto& s : j.at("strategies")) {
      StrategyReport sr;
      sr.summary.method = s.at("method").get<std::string>();
      sr.summary.threshold = opt_from(s, "threshold");
      sr.summary.n_splits = s.at("n_splits").get<std::size_t>();
      sr.summary.wer_mean = s.at("wer").get<double>();
      sr.summary.wer_std = opt_from(s, "wer_std");
      sr.summary.wer_range = s.at("wer_range").get<double>();
      for (const auto& o : s.at("splits")) {
        sr.splits.push_back({o.at("name").get<std::string>(), sr.summary.method, o.at("wer").get<double>(),
                             o.at("test_fraction").get<double>(), o.at("n_test").get<std::size_t>(),
                             opt_from(o, "threshold"), opt_from(o, "achieved_distance")});
      }
      r.strategies.push_back(std::move(sr));
    }
    const json& ov = j.at("overlap");
    if (!ov.at("reference").is_null()) r.overlap_reference = ov["reference"].get<std::string>();
    r.overlap = ov.at("ratios").get<std::map<std::string, double>>();
    r.max_overlap = opt_from(ov, "max_ratio");
    if (!j.at("regression").is_null()) {
      const json& reg = j["regression"];
      RegressionResult res;
      res.r_squared = reg.at("r_squared").get<double>();
      res.n_rows = reg.at("n_rows").get<std::size_t>();
      res.n_excluded = reg.at("n_excluded").get<std::size_t>();
      res.eliminated = reg.at("eliminated").get<std::vector<std::string>>();
      res.dropped_constant = reg.at("dropped_constant").get<std::vector<std::string>>();
      for (const auto& t : reg.at("terms")) {
        res.terms.push_back({t.at("name").get<std::string>(), t.at("control").get<bool>(),
                             t.at("coefficient").get<double>(), t.at("ci_low").get<double>(),
                             t.at("ci_high").get<double>(), t.at("p").get<double>()});
      }
      r.regression = std::move(res);
    }
    for (const auto& g : j.at("group_duration")) {
      r.group_duration.push_back({g.at("strategy").get<std::string>(), g.at("n_groups").get<std::size_t>(),
                                  g.at("slope").get<double>(), g.at("p").get<double>()});
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

Corpus with_absolute_audio(const Corpus& corpus) {
  std::vector<Utterance> utts = corpus.utterances();
  for (auto& u : utts) {
    if (u.audio_ref) u.audio_ref = fs::absolute(corpus.resolve(*u.audio_ref)).lexically_normal().string();
  }
  return Corpus(std::move(utts), corpus.base_dir(), corpus.lm_text_ref());
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  StageRunner stages(cfg.out_dir);
  const fs::path out = cfg.out_dir;
  const std::size_t workers = cfg.workers == 0 ? default_workers() : cfg.workers;
  ExperimentReport report;

  const Corpus corpus = stages.run("ingest", cfg.manifest.string(), [&] {
    Corpus c = load_manifest(cfg.manifest);
    std::ostringstream manifest;
    write_manifest(with_absolute_audio(c), manifest);
    write_text(out / "corpus.jsonl", manifest.str());
    report.n_utterances = c.size();
    report.total_duration_s = c.total_duration();
    json stats = json::object();
    for (auto g : {GroupBy::speaker, GroupBy::session}) {
      if (!c.has_grouping(g)) continue;
      const auto s = corpus_stats(c, g);
      report.descriptive.emplace(to_string(g), s);
    }
    if (c.ungrouped_only()) report.notes.push_back("corpus has no complete speaker or session grouping");
    return c;
  });

  // One LM per corpus, trained before any split.
  const TrigramLM lm = stages.run("lm", cfg.lm_text.string(), [&] {
    const auto text = read_lm_text(cfg.lm_text);
    TrigramLM model = TrigramLM::train(text);
    std::ostringstream counts;
    model.write_counts(counts);
    write_text(out / "lm.counts", counts.str());
    return model;
  });

  const FeatureTable features = stages.run("features", (out / "features.jsonl").string(), [&] {
    FeatureTable table = compute_features(corpus, lm, workers);
    std::ostringstream sidecar;
    write_feature_sidecar(table, sidecar);
    write_text(out / "features.jsonl", sidecar.str());
    return table;
  });

  const StrategyOptions sopt{cfg.seed, cfg.target_fraction, cfg.adversarial_restarts, cfg.adversarial_max_stall,
                             cfg.random_splits, workers};
  const auto splits_by_strategy = stages.run("split", (out / "splits").string(), [&] {
    fs::create_directories(out / "splits");
    std::vector<std::pair<std::string, std::vector<Split>>> all;
    for (const auto& strategy : cfg.strategies) {
      if (auto why = unsupported(corpus, features, strategy)) {
        report.notes.push_back("skipped " + strategy + ": " + *why);
        continue;
      }
      auto splits = make_splits(corpus, features, strategy, sopt);
      for (const auto& s : splits) {
        if (auto bad = partition_violation(corpus, s)) throw std::logic_error("split " + s.name + ": " + *bad);
        std::ostringstream os;
        write_split(s, os);
        write_text(out / "splits" / (s.name + ".json"), os.str());
        for (const auto& w : s.warnings) report.notes.push_back(s.name + ": " + w);
      }
      all.emplace_back(strategy, std::move(splits));
    }
    if (all.empty()) throw DataError("no requested strategy applies to this corpus");
    return all;
  });

  const std::string hyp_artifact = cfg.hyp_dir ? cfg.hyp_dir->string() : cfg.mock_asr->string();
  const auto hypotheses = stages.run("hypotheses", hyp_artifact, [&] {
    std::map<std::string, TokenMap> hyps;
    std::optional<GroundTruth> truth;
    if (cfg.mock_asr) {
      std::ifstream in(*cfg.mock_asr);
      truth = read_ground_truth(in);
      fs::create_directories(out / "hyps");
    }
    for (const auto& [strategy, splits] : splits_by_strategy) {
      for (const auto& s : splits) {
        if (truth) {
          TokenMap h = mock_asr(corpus, s, *truth, derive_seed(cfg.seed, "mock-asr"));
          std::ostringstream os;
          write_hypotheses(h, os);
          write_text(out / "hyps" / (s.name + ".jsonl"), os.str());
          hyps.emplace(s.name, std::move(h));
        } else {
          const fs::path path = *cfg.hyp_dir / (s.name + ".jsonl");
          std::ifstream in(path);
          if (!in) throw DataError("missing hypothesis file '" + path.string() + "'");
          try {
            hyps.emplace(s.name, read_hypotheses(in));
          } catch (const DataError& e) {
            throw DataError(path.string() + ": " + e.what());
          }
        }
      }
    }
    return hyps;
  });

  const auto wers = stages.run("score", (out / "scores.csv").string(), [&] {
    const TokenMap refs = reference_map(corpus);
    std::map<std::string, SplitWer> results;
    std::ostringstream scores, per_utt, summary;
    scores << "split,method,params,wer,n_test,test_fraction\n";
    summary << "method,threshold,n_splits,wer,wer_std,wer_range\n";
    for (const auto& [strategy, splits] : splits_by_strategy) {
      StrategyReport sr;
      std::vector<double> values;
      for (const auto& s : splits) {
        SplitWer w = split_wer(s, refs, hypotheses.at(s.name));
        SplitOutcome o{s.name, strategy, w.pooled_percent, test_fraction(corpus, s), s.test_ids.size(),
                       s.params.threshold, s.params.achieved_distance};
        scores << s.name << ',' << strategy << ',' << params_string(s) << ',' << fmt(o.wer, "%.4f") << ','
               << o.n_test << ',' << fmt(o.test_fraction, "%.4f") << '\n';
        for (const auto& [id, b] : w.per_utterance) {
          json row = {{"split", s.name}, {"id", id},          {"substitutions", b.substitutions},
                      {"deletions", b.deletions}, {"insertions", b.insertions}, {"ref_len", b.ref_len}};
          per_utt << row.dump() << '\n';
        }
        values.push_back(o.wer);
        sr.splits.push_back(std::move(o));
        results.emplace(s.name, std::move(w));
      }
      const std::optional<double> threshold =
          splits.size() == 1 ? splits.front().params.threshold : std::optional<double>();
      sr.summary = summarize_strategy(values, strategy, threshold);
      const auto& sm = sr.summary;
      summary << sm.method << ',' << (sm.threshold ? fmt(*sm.threshold) : "-") << ',' << sm.n_splits << ','
              << fmt(sm.wer_mean, "%.2f") << ',' << (sm.wer_std ? fmt(*sm.wer_std, "%.2f") : "-") << ','
              << (sm.n_splits > 1 ? fmt(sm.wer_range, "%.2f") : "-") << '\n';
      report.strategies.push_back(std::move(sr));
    }
    write_text(out / "scores.csv", scores.str());
    write_text(out / "summary.csv", summary.str());
    write_text(out / "utterance_wer.jsonl", per_utt.str());
    return results;
  });

  stages.run("overlap", (out / "report.json").string(), [&] {
    const Split* reference = nullptr;
    for (const auto& [strategy, splits] : splits_by_strategy) {
      if (strategy == "random" && !splits.empty()) reference = &splits.front();
    }
    if (!reference) return 0;
    report.overlap_reference = reference->name;
    for (const auto& [strategy, splits] : splits_by_strategy) {
      if (strategy.rfind("held_out_", 0) == 0) continue;
      for (const auto& s : splits) {
        if (&s == reference) continue;
        const double ratio = overlap_ratio(*reference, s);
        report.overlap[s.name] = ratio;
        report.max_overlap = std::max(report.max_overlap.value_or(0.0), ratio);
      }
    }
    return 0;
  });

  stages.run("regression", (out / "regression.csv").string(), [&] {
    std::vector<Split> all;
    for (const auto& [_, splits] : splits_by_strategy) all.insert(all.end(), splits.begin(), splits.end());
    RowSet rows = build_rows(corpus, all, features, wers);
    for (const auto& n : rows.notes) report.notes.push_back("regression: " + n);
    if (rows.winsorized) report.notes.push_back("regression: " + std::to_string(rows.winsorized) + " rows capped at 500% WER");

    std::vector<Predictor> predictors;
    for (auto p : kAllPredictors) {
      const auto have = std::count_if(rows.rows.begin(), rows.rows.end(), [&](const auto& r) { return r.ratios.contains(p); });
      if (2 * static_cast<std::size_t>(have) >= rows.rows.size() && have > 0) {
        predictors.push_back(p);
      } else {
        report.notes.push_back(std::string("regression: ") + to_string(p) + " unavailable for most rows, not fitted");
      }
    }
    if (predictors.empty()) {
      report.notes.push_back("regression: no predictor available");
      return 0;
    }
    RegressionResult result = backward_stepwise(rows.rows, predictors, cfg.alpha);
    std::ostringstream csv;
    write_regression_csv(result, csv);
    write_text(out / "regression.csv", csv.str());
    report.regression = std::move(result);

    // Group-level check: WER of each held-out group against its total duration.
    for (const auto& [strategy, splits] : splits_by_strategy) {
      if (strategy.rfind("held_out_", 0) != 0 || splits.size() < 3) continue;
      Eigen::MatrixXd x(static_cast<Eigen::Index>(splits.size()), 2);
      Eigen::VectorXd y(x.rows());
      for (std::size_t i = 0; i < splits.size(); ++i) {
        double d = 0.0;
        for (const auto& id : splits[i].test_ids) d += corpus.at(id).duration_s;
        x(static_cast<Eigen::Index>(i), 0) = 1.0;
        x(static_cast<Eigen::Index>(i), 1) = d;
        y[static_cast<Eigen::Index>(i)] = wers.at(splits[i].name).pooled_percent;
      }
      if ((x.col(1).array() == x(0, 1)).all()) continue;
      const auto fit = least_squares(x, y, {"intercept", "group_duration_s"});
      report.group_duration.push_back({strategy, splits.size(), fit.coef[1], fit.p_value[1]});
    }
    return 0;
  });

  stages.run("report", (out / "report.json").string(), [&] {
    write_text(out / "report.json", to_json(report).dump(1) + "\n");
    if (cfg.plot) emit_plots(report, out);
    return 0;
  });
  return report;
}

}  // namespace asrsplit
