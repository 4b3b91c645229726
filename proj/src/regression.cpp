#include "asrsplit/regression.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace asrsplit {

const char* to_string(Predictor p) {
  switch (p) {
    case Predictor::duration_ratio: return "duration_ratio";
    case Predictor::pitch_ratio: return "pitch_ratio";
    case Predictor::intensity_ratio: return "intensity_ratio";
    case Predictor::perplexity_ratio: return "perplexity_ratio";
    case Predictor::oov_ratio: return "oov_ratio";
  }
  return "?";
}

Predictor parse_predictor(const std::string& s) {
  for (auto p : kAllPredictors) {
    if (s == to_string(p)) return p;
  }
  throw ConfigError("unknown predictor '" + s + "'");
}

const char* significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

const TermEstimate* RegressionResult::term(const std::string& name) const {
  for (const auto& t : terms) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

namespace {

std::optional<double> predictor_source(const Utterance& u, const FeatureVector& f, Predictor p) {
  switch (p) {
    case Predictor::duration_ratio: return feature_value(u, f, HeuristicFeature::duration);
    case Predictor::pitch_ratio: return feature_value(u, f, HeuristicFeature::pitch);
    case Predictor::intensity_ratio: return feature_value(u, f, HeuristicFeature::intensity);
    case Predictor::perplexity_ratio: return feature_value(u, f, HeuristicFeature::perplexity);
    case Predictor::oov_ratio: return f.oov_rate ? f.oov_rate : u.precomputed.oov_rate;
  }
  return std::nullopt;
}

// OOV rate is legitimately zero for most utterances; the other ratios must be
// strictly positive to be meaningful.
bool usable_ratio(Predictor p, double v) {
  if (!std::isfinite(v)) return false;
  return p == Predictor::oov_ratio ? v >= 0.0 : v > 0.0;
}

}  // namespace

RowSet build_rows(const Corpus& corpus, const std::vector<Split>& splits, const FeatureTable& features,
                  const std::map<std::string, SplitWer>& wers) {
  static const FeatureVector kNone;
  auto features_of = [&](const std::string& id) -> const FeatureVector& {
    auto it = features.find(id);
    return it == features.end() ? kNone : it->second;
  };

  RowSet out;
  for (const auto& split : splits) {
    if (split.train_ids.empty()) throw DataError("split '" + split.name + "' has an empty training set");
    auto w = wers.find(split.name);
    if (w == wers.end()) throw DataError("no WER results for split '" + split.name + "'");

    std::map<Predictor, double> train_mean;
    for (auto p : kAllPredictors) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& id : split.train_ids) {
        if (auto v = predictor_source(corpus.at(id), features_of(id), p); v && std::isfinite(*v)) {
          sum += *v;
          ++n;
        }
      }
      if (n == 0) {
        out.notes.push_back(split.name + ": " + to_string(p) + " absent (no train values)");
      } else if (sum / static_cast<double>(n) == 0.0) {
        out.notes.push_back(split.name + ": " + to_string(p) + " absent (train mean is zero)");
      } else {
        train_mean[p] = sum / static_cast<double>(n);
      }
    }

    const std::string method = strategy_name(split);
    for (const auto& id : split.test_ids) {
      auto b = w->second.per_utterance.find(id);
      if (b == w->second.per_utterance.end()) throw DataError("no WER for '" + id + "' in split '" + split.name + "'");
      const Utterance& u = corpus.at(id);
      const FeatureVector& f = features_of(id);
      RegressionRow row;
      row.utterance_id = id;
      row.split_id = split.name;
      row.wer = b->second.wer_percent();
      if (row.wer > kWerCap) {
        row.wer = kWerCap;
        ++out.winsorized;
      }
      for (const auto& [p, mean] : train_mean) {
        if (auto v = predictor_source(u, f, p)) row.ratios[p] = *v / mean;
      }
      row.n_tokens = static_cast<int>(*feature_value(u, f, HeuristicFeature::n_tokens));
      row.n_types = static_cast<int>(*feature_value(u, f, HeuristicFeature::n_types));
      row.method = method;
      row.speaker_id = u.speaker_id;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

namespace {

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::vector<bool> control;
  std::vector<std::string> dropped_constant;
};

std::vector<std::size_t> usable_rows(const std::vector<RegressionRow>& rows, const std::vector<Predictor>& predictors) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    bool ok = std::isfinite(rows[i].wer);
    for (auto p : predictors) {
      auto it = rows[i].ratios.find(p);
      ok = ok && it != rows[i].ratios.end() && usable_ratio(p, it->second);
    }
    if (ok) keep.push_back(i);
  }
  return keep;
}

Design build_design(const std::vector<RegressionRow>& rows, const std::vector<std::size_t>& keep,
                    const std::vector<Predictor>& predictors, const RegressionOptions& opt) {
  const auto n = static_cast<Eigen::Index>(keep.size());
  std::vector<Eigen::VectorXd> cols;
  Design d;
  auto add = [&](std::string name, Eigen::VectorXd col, bool control) {
    if (control && n > 0 && (col.array() == col[0]).all()) {
      d.dropped_constant.push_back(name);
      return;
    }
    cols.push_back(std::move(col));
    d.names.push_back(std::move(name));
    d.control.push_back(control);
  };

  add("intercept", Eigen::VectorXd::Ones(n), false);
  for (auto p : predictors) {
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c[i] = rows[keep[i]].ratios.at(p);
    add(to_string(p), std::move(c), false);
  }
  if (opt.control_counts) {
    Eigen::VectorXd tokens(n), types(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      tokens[i] = rows[keep[i]].n_tokens;
      types[i] = rows[keep[i]].n_types;
    }
    add("n_tokens", std::move(tokens), true);
    add("n_types", std::move(types), true);
  }
  auto dummies = [&](const std::string& prefix, auto level_of) {
    std::set<std::string> levels;
    for (auto i : keep) levels.insert(level_of(rows[i]));
    if (levels.size() < 2) return;
    for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
      Eigen::VectorXd c(n);
      for (Eigen::Index i = 0; i < n; ++i) c[i] = level_of(rows[keep[i]]) == *it ? 1.0 : 0.0;
      add(prefix + *it, std::move(c), true);
    }
  };
  if (opt.control_method) dummies("method:", [](const RegressionRow& r) { return r.method; });
  if (opt.control_speaker) {
    const bool all = std::all_of(keep.begin(), keep.end(), [&](auto i) { return rows[i].speaker_id.has_value(); });
    if (all) dummies("speaker:", [](const RegressionRow& r) { return *r.speaker_id; });
  }

  d.x.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) d.x.col(static_cast<Eigen::Index>(k)) = cols[k];
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) d.y[i] = rows[keep[i]].wer;
  return d;
}

RegressionResult fit_kept(const std::vector<RegressionRow>& rows, const std::vector<std::size_t>& keep,
                          const std::vector<Predictor>& predictors, const RegressionOptions& opt) {
  const Design d = build_design(rows, keep, predictors, opt);
  const auto fit = least_squares(d.x, d.y, d.names, opt.level);
  RegressionResult r;
  r.r_squared = fit.r_squared;
  r.n_rows = keep.size();
  r.n_excluded = rows.size() - keep.size();
  r.dropped_constant = d.dropped_constant;
  for (std::size_t k = 0; k < d.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    r.terms.push_back({d.names[k], d.control[k], fit.coef[i], fit.ci_low[i], fit.ci_high[i], fit.p_value[i]});
  }
  return r;
}

}  // namespace

RegressionResult fit_ols(const std::vector<RegressionRow>& rows, const std::vector<Predictor>& predictors,
                         const RegressionOptions& opt) {
  return fit_kept(rows, usable_rows(rows, predictors), predictors, opt);
}

RegressionResult backward_stepwise(const std::vector<RegressionRow>& rows, const std::vector<Predictor>& predictors,
                                   double alpha, const RegressionOptions& opt) {
  const auto keep = usable_rows(rows, predictors);
  std::vector<Predictor> active = predictors;
  std::vector<std::string> eliminated;
  while (true) {
    RegressionResult r = fit_kept(rows, keep, active, opt);
    std::optional<std::size_t> worst;
    double worst_p = alpha;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const double p = r.term(to_string(active[k]))->p_value;
      if (p > worst_p) {
        worst_p = p;
        worst = k;
      }
    }
    if (!worst) {
      r.eliminated = std::move(eliminated);
      return r;
    }
    eliminated.push_back(to_string(active[*worst]));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(*worst));
  }
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const std::vector<std::string>& xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void write_regression_csv(const RegressionResult& r, std::ostream& out) {
  out << "# model: fixed-effects OLS with speaker and method dummies; "
         "approximates a mixed-effects model with random slopes\n";
  out << "# r2=" << fmt(r.r_squared) << " n_rows=" << r.n_rows << " n_excluded=" << r.n_excluded
      << " eliminated=" << join(r.eliminated, ';') << " dropped_constant=" << join(r.dropped_constant, ';') << '\n';
  out << "# stars: * p < 0.05, ** p < 0.01, *** p < 0.001\n";
  out << "predictor,control,coefficient,ci_low,ci_high,p,stars\n";
  for (const auto& t : r.terms) {
    out << t.name << ',' << (t.control ? 1 : 0) << ',' << fmt(t.coef) << ',' << fmt(t.ci_low) << ','
        << fmt(t.ci_high) << ',' << fmt(t.p_value) << ',' << significance_stars(t.p_value) << '\n';
  }
}

RegressionResult read_regression_csv(std::istream& in) {
  RegressionResult r;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# r2=", 0) == 0) {
      std::istringstream meta(line.substr(2));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "r2") r.r_squared = std::stod(value);
        if (key == "n_rows") r.n_rows = std::stoull(value);
        if (key == "n_excluded") r.n_excluded = std::stoull(value);
        if (key == "eliminated") r.eliminated = split_on(value, ';');
        if (key == "dropped_constant") r.dropped_constant = split_on(value, ';');
      }
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto f = split_on(line, ',');
    if (f.size() < 6) throw DataError("regression CSV: short row '" + line + "'");
    r.terms.push_back({f[0], f[1] == "1", std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])});
  }
  return r;
}

}  // namespace asrsplit
