#include "asrsplit/splitters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "asrsplit/error.hpp"
#include "asrsplit/parallel.hpp"
#include "asrsplit/rng.hpp"

namespace asrsplit {

using nlohmann::json;

const char* to_string(SplitMethod m) {
  switch (m) {
    case SplitMethod::held_out_group: return "held_out_group";
    case SplitMethod::random: return "random";
    case SplitMethod::heuristic: return "heuristic";
    case SplitMethod::adversarial: return "adversarial";
  }
  return "?";
}

const char* to_string(HeuristicFeature f) {
  switch (f) {
    case HeuristicFeature::duration: return "duration";
    case HeuristicFeature::pitch: return "pitch";
    case HeuristicFeature::intensity: return "intensity";
    case HeuristicFeature::n_tokens: return "n_tokens";
    case HeuristicFeature::n_types: return "n_types";
    case HeuristicFeature::perplexity: return "perplexity";
  }
  return "?";
}

SplitMethod parse_split_method(std::string_view s) {
  for (auto m : {SplitMethod::held_out_group, SplitMethod::random, SplitMethod::heuristic,
                 SplitMethod::adversarial}) {
    if (s == to_string(m)) return m;
  }
  throw DataError("unknown split method '" + std::string(s) + "'");
}

HeuristicFeature parse_heuristic_feature(std::string_view s) {
  for (auto f : kAllHeuristicFeatures) {
    if (s == to_string(f)) return f;
  }
  throw ConfigError("unknown heuristic feature '" + std::string(s) + "'");
}

std::string strategy_name(const Split& s) {
  switch (s.method) {
    case SplitMethod::held_out_group:
      return std::string("held_out_") + to_string(s.params.group_by.value_or(GroupBy::speaker));
    case SplitMethod::heuristic:
      return std::string("heuristic_") + to_string(s.params.feature.value_or(HeuristicFeature::duration));
    default:
      return to_string(s.method);
  }
}

namespace {

double duration_of(const Corpus& corpus, const std::vector<std::string>& ids) {
  double d = 0.0;
  for (const auto& id : ids) d += corpus.at(id).duration_s;
  return d;
}

std::string numbered(std::string_view prefix, std::size_t i, std::size_t n) {
  const int width = std::max(2, static_cast<int>(std::to_string(n).size()));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, i + 1);
  return std::string(prefix) + "_" + buf;
}

}  // namespace

double test_fraction(const Corpus& corpus, const Split& s) {
  const double test = duration_of(corpus, s.test_ids);
  const double total = test + duration_of(corpus, s.train_ids);
  return total > 0.0 ? test / total : 0.0;
}

std::optional<std::string> partition_violation(const Corpus& corpus, const Split& s) {
  std::unordered_map<std::string, int> side;
  auto mark = [&](const std::vector<std::string>& ids, int tag) -> std::optional<std::string> {
    for (const auto& id : ids) {
      if (!corpus.contains(id)) return "id '" + id + "' is not in the corpus";
      if (!side.emplace(id, tag).second) return "id '" + id + "' appears more than once";
    }
    return std::nullopt;
  };
  if (auto v = mark(s.train_ids, 0)) return v;
  if (auto v = mark(s.test_ids, 1)) return v;
  if (auto v = mark(s.excluded_ids, 2)) return v;
  for (const auto& u : corpus.utterances()) {
    if (!side.contains(u.id)) return "id '" + u.id + "' is in neither train, test nor excluded";
  }
  return std::nullopt;
}

std::vector<Split> split_held_out_group(const Corpus& corpus, GroupBy g) {
  const auto groups = group_durations(corpus, g);
  if (groups.size() < 2) {
    throw DataError(std::string("held-out ") + to_string(g) + " splitting needs at least 2 groups, found " +
                    std::to_string(groups.size()));
  }
  std::vector<Split> out;
  out.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    Split s;
    s.method = SplitMethod::held_out_group;
    s.name = std::string("held_out_") + to_string(g) + "_" + groups[i].first;
    s.params.group_by = g;
    s.params.group_id = groups[i].first;
    s.params.index = static_cast<int>(i);
    for (const auto& u : corpus.utterances()) {
      (*corpus.group_of(u, g) == groups[i].first ? s.test_ids : s.train_ids).push_back(u.id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Split> split_random(const Corpus& corpus, const RandomSplitConfig& cfg) {
  if (corpus.size() < 2) throw DataError("random splitting needs at least 2 utterances");
  const double total = corpus.total_duration();
  std::vector<Split> out;
  out.reserve(cfg.n_splits);
  for (std::size_t i = 0; i < cfg.n_splits; ++i) {
    Split s;
    s.method = SplitMethod::random;
    s.name = numbered("random", i, cfg.n_splits);
    s.seed = derive_seed(cfg.seed, "random", i);
    s.params.index = static_cast<int>(i);
    s.params.target_fraction = cfg.target_fraction;

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(*s.seed);
    rng.shuffle(std::span(order));

    std::vector<bool> in_test(corpus.size(), false);
    double test = 0.0;
    for (std::size_t k = 0; k < order.size() && test < cfg.target_fraction * total; ++k) {
      const auto& u = corpus.utterances()[order[k]];
      if (u.duration_s > cfg.warn_fraction * total) {
        s.warnings.push_back("utterance '" + u.id + "' alone exceeds " +
                             std::to_string(static_cast<int>(cfg.warn_fraction * 100)) +
                             "% of the corpus duration");
      }
      in_test[order[k]] = true;
      test += u.duration_s;
    }
    for (std::size_t k = 0; k < corpus.size(); ++k) {
      (in_test[k] ? s.test_ids : s.train_ids).push_back(corpus.utterances()[k].id);
    }
    if (s.train_ids.empty()) throw DataError("random split left the training side empty");
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<double> feature_value(const Utterance& u, const FeatureVector& f, HeuristicFeature which) {
  const FeatureVector& p = u.precomputed;
  switch (which) {
    case HeuristicFeature::duration:
      return f.duration_s ? f.duration_s : std::optional<double>(u.duration_s);
    case HeuristicFeature::pitch:
      return f.avg_pitch_hz ? f.avg_pitch_hz : p.avg_pitch_hz;
    case HeuristicFeature::intensity:
      return f.avg_intensity_db ? f.avg_intensity_db : p.avg_intensity_db;
    case HeuristicFeature::perplexity:
      return f.perplexity ? f.perplexity : p.perplexity;
    case HeuristicFeature::n_tokens:
      if (f.n_tokens) return *f.n_tokens;
      return static_cast<double>(u.transcript.size());
    case HeuristicFeature::n_types: {
      if (f.n_types) return *f.n_types;
      std::set<std::string_view> types(u.transcript.begin(), u.transcript.end());
      return static_cast<double>(types.size());
    }
  }
  return std::nullopt;
}

Split split_heuristic(const Corpus& corpus, const FeatureTable& features, HeuristicFeature which,
                      double target_fraction) {
  Split s;
  s.method = SplitMethod::heuristic;
  s.name = std::string("heuristic_") + to_string(which);
  s.params.feature = which;
  s.params.target_fraction = target_fraction;

  static const FeatureVector kNone;
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& u = corpus.utterances()[i];
    auto it = features.find(u.id);
    const auto v = feature_value(u, it == features.end() ? kNone : it->second, which);
    if (v && std::isfinite(*v)) {
      ranked.emplace_back(*v, i);
    } else {
      s.excluded_ids.push_back(u.id);
    }
  }
  if (ranked.size() < 2) {
    throw DataError(std::string("heuristic ") + to_string(which) + ": fewer than 2 utterances carry the feature");
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (ranked.front().first == ranked.back().first) {
    throw DataError(std::string("heuristic ") + to_string(which) + ": feature is constant across the corpus");
  }

  double total = 0.0;
  for (const auto& [_, i] : ranked) total += corpus.utterances()[i].duration_s;
  double acc = 0.0;
  double threshold = ranked.back().first;
  for (const auto& [v, i] : ranked) {
    acc += corpus.utterances()[i].duration_s;
    if (acc >= target_fraction * total) {
      threshold = v;
      break;
    }
  }
  s.params.threshold = threshold;

  std::vector<int> side(corpus.size(), -1);
  for (const auto& [v, i] : ranked) side[i] = v >= threshold ? 1 : 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (side[i] == 1) s.test_ids.push_back(corpus.utterances()[i].id);
    if (side[i] == 0) s.train_ids.push_back(corpus.utterances()[i].id);
  }
  if (s.train_ids.empty()) {
    throw DataError(std::string("heuristic ") + to_string(which) + ": threshold puts every utterance in test");
  }
  if (!s.excluded_ids.empty()) {
    s.warnings.push_back(std::to_string(s.excluded_ids.size()) + " utterances lack the " + to_string(which) +
                         " feature and were excluded");
  }
  return s;
}

TokenDistribution::TokenDistribution(const std::map<std::string, double>& counts) {
  double total = 0.0;
  for (const auto& [t, c] : counts) {
    if (c < 0.0) throw DataError("negative token count for '" + t + "'");
    total += c;
  }
  if (total <= 0.0) throw DataError("token distribution needs a positive total count");
  for (const auto& [t, c] : counts) {
    if (c > 0.0) probs_.emplace(t, c / total);
  }
}

TokenDistribution TokenDistribution::of(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::map<std::string, double> counts;
  for (const auto& id : ids) {
    for (const auto& t : corpus.at(id).transcript) counts[t] += 1.0;
  }
  return TokenDistribution(counts);
}

double TokenDistribution::operator[](const std::string& t) const {
  auto it = probs_.find(t);
  return it == probs_.end() ? 0.0 : it->second;
}

double token_tv_distance(const TokenDistribution& p, const TokenDistribution& q) {
  // Merge the two sorted maps over the union vocabulary.
  double sum = 0.0;
  auto a = p.probs().begin(), b = q.probs().begin();
  while (a != p.probs().end() || b != q.probs().end()) {
    if (b == q.probs().end() || (a != p.probs().end() && a->first < b->first)) {
      sum += a->second;
      ++a;
    } else if (a == p.probs().end() || b->first < a->first) {
      sum += b->second;
      ++b;
    } else {
      sum += std::abs(a->second - b->second);
      ++a;
      ++b;
    }
  }
  return std::min(1.0, 0.5 * sum);
}

namespace {

// Dense token-count state for one restart of the adversarial search.
class SearchState {
 public:
  SearchState(const Corpus& corpus, const std::vector<std::vector<std::pair<int, double>>>& bags, int vocab,
              std::vector<bool> in_test)
      : corpus_(corpus), bags_(bags), in_test_(std::move(in_test)), train_(vocab, 0.0), test_(vocab, 0.0) {
    total_ = corpus.total_duration();
    for (std::size_t i = 0; i < bags_.size(); ++i) add(i, in_test_[i], +1.0);
  }

  double objective() const {
    if (n_train_ <= 0.0 || n_test_ <= 0.0) return 0.0;
    double sum = 0.0;
    for (std::size_t t = 0; t < train_.size(); ++t) sum += std::abs(train_[t] / n_train_ - test_[t] / n_test_);
    return 0.5 * sum;
  }

  double fraction_after(std::size_t flip_a, std::optional<std::size_t> flip_b = std::nullopt) const {
    double d = test_duration_;
    auto delta = [&](std::size_t i) {
      const double dur = corpus_.utterances()[i].duration_s;
      return in_test_[i] ? -dur : dur;
    };
    d += delta(flip_a);
    if (flip_b) d += delta(*flip_b);
    return d / total_;
  }

  void flip(std::size_t i) {
    add(i, in_test_[i], -1.0);
    in_test_[i] = !in_test_[i];
    add(i, in_test_[i], +1.0);
  }

  bool in_test(std::size_t i) const { return in_test_[i]; }
  const std::vector<bool>& membership() const { return in_test_; }
  double fraction() const { return test_duration_ / total_; }

 private:
  void add(std::size_t i, bool test, double sign) {
    auto& side = test ? test_ : train_;
    double& n = test ? n_test_ : n_train_;
    for (const auto& [tok, c] : bags_[i]) {
      side[static_cast<std::size_t>(tok)] += sign * c;
      n += sign * c;
    }
    if (test) test_duration_ += sign * corpus_.utterances()[i].duration_s;
  }

  const Corpus& corpus_;
  const std::vector<std::vector<std::pair<int, double>>>& bags_;
  std::vector<bool> in_test_;
  std::vector<double> train_, test_;
  double n_train_ = 0.0, n_test_ = 0.0;
  double test_duration_ = 0.0;
  double total_ = 0.0;
};

constexpr double kImprovementEps = 1e-12;
constexpr int kInitialAttempts = 1000;

AdversarialRun run_restart(const Corpus& corpus, const std::vector<std::vector<std::pair<int, double>>>& bags,
                           int vocab, const AdversarialConfig& cfg, std::size_t index) {
  const std::size_t n = corpus.size();
  const double total = corpus.total_duration();
  AdversarialRun run;
  Split& s = run.split;
  s.method = SplitMethod::adversarial;
  s.name = numbered("adversarial", index, cfg.n_splits);
  s.seed = derive_seed(cfg.seed, "adversarial", index);
  s.params.index = static_cast<int>(index);
  s.params.target_fraction = cfg.target_fraction;
  Rng rng(*s.seed);

  // Seeded initial split: walk a shuffled order, taking utterances that keep
  // the test side under the band ceiling until it reaches the band floor.
  // On small corpora one walk often overshoots the narrow band, so reshuffle.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<bool> in_test(n, false);
  double test = 0.0;
  for (int attempt = 0; attempt < kInitialAttempts && test < cfg.band_low * total; ++attempt) {
    rng.shuffle(std::span(order));
    std::fill(in_test.begin(), in_test.end(), false);
    test = 0.0;
    for (std::size_t k = 0; k < n && test < cfg.band_low * total; ++k) {
      const double d = corpus.utterances()[order[k]].duration_s;
      if (test + d <= cfg.band_high * total) {
        in_test[order[k]] = true;
        test += d;
      }
    }
  }
  if (test < cfg.band_low * total) {
    std::fill(in_test.begin(), in_test.end(), false);
    test = 0.0;
    for (std::size_t k = 0; k < n && test < cfg.target_fraction * total; ++k) {
      in_test[order[k]] = true;
      test += corpus.utterances()[order[k]].duration_s;
    }
    s.warnings.push_back("initial split could not be placed inside the duration band");
  }

  SearchState state(corpus, bags, vocab, std::move(in_test));
  double current = state.objective();
  run.initial_distance = current;
  run.accepted.push_back(current);
  bool any_feasible = false;
  auto feasible = [&](double f) { return f >= cfg.band_low && f <= cfg.band_high; };

  auto try_move = [&](std::size_t a, std::optional<std::size_t> b) {
    if (!feasible(state.fraction_after(a, b))) return false;
    any_feasible = true;
    state.flip(a);
    if (b) state.flip(*b);
    const double value = state.objective();
    if (value > current + kImprovementEps) {
      current = value;
      run.accepted.push_back(current);
      return true;
    }
    if (b) state.flip(*b);
    state.flip(a);
    return false;
  };

  // Stochastic ascent: random single moves and swaps, first improvement wins.
  for (std::size_t stall = 0; stall < cfg.max_stall;) {
    const std::size_t a = rng.below(n);
    bool improved;
    if (rng.bernoulli(0.5)) {
      improved = try_move(a, std::nullopt);
    } else {
      std::size_t b = rng.below(n);
      for (int tries = 0; state.in_test(b) == state.in_test(a) && tries < 64; ++tries) b = rng.below(n);
      improved = state.in_test(b) != state.in_test(a) && try_move(a, b);
    }
    stall = improved ? 0 : stall + 1;
  }

  // Steepest-ascent polish over the full neighbourhood when affordable.
  std::size_t n_test = 0;
  for (std::size_t i = 0; i < n; ++i) n_test += state.in_test(i);
  const double neighbourhood = static_cast<double>(n) + static_cast<double>(n_test) * static_cast<double>(n - n_test);
  if (neighbourhood * vocab <= cfg.polish_budget) {
    while (true) {
      double best = current + kImprovementEps;
      std::optional<std::pair<std::size_t, std::optional<std::size_t>>> best_move;
      auto probe = [&](std::size_t a, std::optional<std::size_t> b) {
        if (!feasible(state.fraction_after(a, b))) return;
        any_feasible = true;
        state.flip(a);
        if (b) state.flip(*b);
        const double value = state.objective();
        if (value > best) {
          best = value;
          best_move.emplace(a, b);
        }
        if (b) state.flip(*b);
        state.flip(a);
      };
      for (std::size_t a = 0; a < n; ++a) probe(a, std::nullopt);
      for (std::size_t a = 0; a < n; ++a) {
        if (!state.in_test(a)) continue;
        for (std::size_t b = 0; b < n; ++b) {
          if (!state.in_test(b)) probe(a, b);
        }
      }
      if (!best_move) break;
      state.flip(best_move->first);
      if (best_move->second) state.flip(*best_move->second);
      current = state.objective();
      run.accepted.push_back(current);
    }
  }

  run.no_feasible_move = !any_feasible;
  if (run.no_feasible_move) s.warnings.push_back("no feasible move from the initial split");
  run.achieved_distance = current;
  s.params.initial_distance = run.initial_distance;
  s.params.achieved_distance = run.achieved_distance;
  for (std::size_t i = 0; i < n; ++i) {
    (state.in_test(i) ? s.test_ids : s.train_ids).push_back(corpus.utterances()[i].id);
  }
  return run;
}

}  // namespace

std::vector<AdversarialRun> adversarial_search(const Corpus& corpus, const AdversarialConfig& cfg) {
  if (corpus.size() < 10) throw DataError("adversarial splitting needs at least 10 utterances");
  if (!(cfg.band_low < cfg.band_high)) throw ConfigError("adversarial duration band is empty");

  std::map<std::string, int> ids;
  for (const auto& u : corpus.utterances()) {
    for (const auto& t : u.transcript) ids.emplace(t, 0);
  }
  int next = 0;
  for (auto& [_, id] : ids) id = next++;
  std::vector<std::vector<std::pair<int, double>>> bags(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::map<int, double> c;
    for (const auto& t : corpus.utterances()[i].transcript) c[ids.at(t)] += 1.0;
    bags[i].assign(c.begin(), c.end());
  }

  std::vector<AdversarialRun> runs(cfg.n_splits);
  parallel_for(
      cfg.n_splits, [&](std::size_t i) { runs[i] = run_restart(corpus, bags, next, cfg, i); },
      cfg.workers == 0 ? default_workers() : cfg.workers);
  return runs;
}

std::vector<Split> split_adversarial(const Corpus& corpus, const AdversarialConfig& cfg) {
  std::vector<Split> out;
  for (auto& r : adversarial_search(corpus, cfg)) out.push_back(std::move(r.split));
  return out;
}

double overlap_ratio(const Split& reference, const Split& other) {
  auto universe = [](const Split& s) {
    std::set<std::string> u(s.train_ids.begin(), s.train_ids.end());
    u.insert(s.test_ids.begin(), s.test_ids.end());
    u.insert(s.excluded_ids.begin(), s.excluded_ids.end());
    return u;
  };
  if (universe(reference) != universe(other)) {
    throw DataError("overlap_ratio: splits '" + reference.name + "' and '" + other.name +
                    "' come from different corpora");
  }
  if (reference.test_ids.empty()) throw DataError("overlap_ratio: reference split has an empty test set");
  const std::unordered_set<std::string> ref(reference.test_ids.begin(), reference.test_ids.end());
  std::size_t shared = 0;
  for (const auto& id : other.test_ids) shared += ref.contains(id);
  return static_cast<double>(shared) / static_cast<double>(ref.size());
}

void write_split(const Split& s, std::ostream& out) {
  json j;
  j["name"] = s.name;
  j["method"] = to_string(s.method);
  json p = json::object();
  if (s.params.group_by) p["group_by"] = to_string(*s.params.group_by);
  if (s.params.group_id) p["group_id"] = *s.params.group_id;
  if (s.params.feature) p["feature"] = to_string(*s.params.feature);
  if (s.params.target_fraction) p["target_fraction"] = *s.params.target_fraction;
  if (s.params.initial_distance) p["initial_distance"] = *s.params.initial_distance;
  if (s.params.index) p["index"] = *s.params.index;
  j["params"] = p;
  j["seed"] = s.seed ? json(*s.seed) : json(nullptr);
  if (s.params.achieved_distance) j["achieved_distance"] = *s.params.achieved_distance;
  if (s.params.threshold) j["threshold"] = *s.params.threshold;
  j["train"] = s.train_ids;
  j["test"] = s.test_ids;
  j["excluded"] = s.excluded_ids;
  if (!s.warnings.empty()) j["warnings"] = s.warnings;
  out << j.dump(1) << '\n';
}

Split read_split(std::istream& in) {
  try {
    const json j = json::parse(in);
    Split s;
    s.name = j.value("name", std::string());
    s.method = parse_split_method(j.at("method").get<std::string>());
    const json& p = j.at("params");
    if (p.contains("group_by")) s.params.group_by = parse_group_by(p["group_by"].get<std::string>());
    if (p.contains("group_id")) s.params.group_id = p["group_id"].get<std::string>();
    if (p.contains("feature")) s.params.feature = parse_heuristic_feature(p["feature"].get<std::string>());
    if (p.contains("target_fraction")) s.params.target_fraction = p["target_fraction"].get<double>();
    if (p.contains("initial_distance")) s.params.initial_distance = p["initial_distance"].get<double>();
    if (p.contains("index")) s.params.index = p["index"].get<int>();
    if (j.contains("seed") && !j["seed"].is_null()) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("achieved_distance")) s.params.achieved_distance = j["achieved_distance"].get<double>();
    if (j.contains("threshold")) s.params.threshold = j["threshold"].get<double>();
    s.train_ids = j.at("train").get<std::vector<std::string>>();
    s.test_ids = j.at("test").get<std::vector<std::string>>();
    s.excluded_ids = j.value("excluded", std::vector<std::string>{});
    s.warnings = j.value("warnings", std::vector<std::string>{});
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
}

}  // namespace asrsplit
