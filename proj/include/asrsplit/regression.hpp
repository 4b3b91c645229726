#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asrsplit/audio_features.hpp"
#include "asrsplit/error.hpp"
#include "asrsplit/scoring.hpp"
#include "asrsplit/splitters.hpp"

namespace asrsplit {

template <typename Scalar>
struct OlsFit {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector coef;
  Vector std_error;
  Vector t_stat;
  Vector p_value;
  Vector ci_low;
  Vector ci_high;
  Vector residuals;
  Scalar r_squared = 0;
  Eigen::Index n_obs = 0;
  Eigen::Index dof = 0;
};

/// Least squares through column-pivoting Householder QR. X must already hold
/// an intercept column if one is wanted; columns named in `names` are used in
/// the rank-deficiency message. Confidence intervals are two-sided at `level`
/// with Student-t quantiles on n - p degrees of freedom.
template <typename DerivedX, typename DerivedY>
OlsFit<typename DerivedX::Scalar> least_squares(const Eigen::MatrixBase<DerivedX>& X,
                                                const Eigen::MatrixBase<DerivedY>& y,
                                                const std::vector<std::string>& names = {},
                                                double level = 0.95) {
  using Scalar = typename DerivedX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const Eigen::Index n = X.rows(), p = X.cols();
  if (y.size() != n) throw DataError("least_squares: X and y disagree on the number of rows");
  if (n <= p) {
    throw DataError("least_squares: need more rows than columns (" + std::to_string(n) + " rows, " +
                    std::to_string(p) + " columns)");
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < p) {
    std::string msg = "rank-deficient design (rank " + std::to_string(qr.rank()) + " of " + std::to_string(p) +
                      "); collinear columns:";
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      const auto col = qr.colsPermutation().indices()[k];
      msg += " " + (static_cast<std::size_t>(col) < names.size() ? names[col] : "col" + std::to_string(col));
    }
    throw RankDeficientError(msg);
  }

  OlsFit<Scalar> fit;
  fit.n_obs = n;
  fit.dof = n - p;
  fit.coef = qr.solve(y.derived());
  fit.residuals = y - X * fit.coef;

  const Scalar rss = fit.residuals.squaredNorm();
  const Scalar tss = (y.array() - y.mean()).square().sum();
  fit.r_squared = tss > Scalar(0) ? std::clamp(Scalar(1) - rss / tss, Scalar(0), Scalar(1)) : Scalar(0);

  // cov(beta) = sigma^2 (X'X)^-1 = sigma^2 P R^-1 R^-T P'.
  const Matrix r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Matrix r_inv = r.template triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
  const Matrix cov_perm = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  const Matrix cov = perm * cov_perm * perm.transpose();
  const Scalar sigma2 = rss / static_cast<Scalar>(fit.dof);
  fit.std_error = (cov.diagonal().array() * sigma2).sqrt().matrix();

  const boost::math::students_t_distribution<double> t_dist(static_cast<double>(fit.dof));
  const double q = boost::math::quantile(t_dist, 0.5 + level / 2.0);
  fit.t_stat.resize(p);
  fit.p_value.resize(p);
  fit.ci_low.resize(p);
  fit.ci_high.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double se = static_cast<double>(fit.std_error[k]);
    const double b = static_cast<double>(fit.coef[k]);
    double t = 0.0, pv = 1.0;
    if (se > 0.0) {
      t = b / se;
      pv = 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::abs(t)));
    } else if (b != 0.0) {
      t = std::copysign(std::numeric_limits<double>::infinity(), b);
      pv = 0.0;
    }
    fit.t_stat[k] = static_cast<Scalar>(t);
    fit.p_value[k] = static_cast<Scalar>(std::clamp(pv, std::numeric_limits<double>::min(), 1.0));
    fit.ci_low[k] = static_cast<Scalar>(b - q * se);
    fit.ci_high[k] = static_cast<Scalar>(b + q * se);
  }
  return fit;
}

enum class Predictor { duration_ratio, pitch_ratio, intensity_ratio, perplexity_ratio, oov_ratio };

inline constexpr Predictor kAllPredictors[] = {Predictor::duration_ratio, Predictor::pitch_ratio,
                                               Predictor::intensity_ratio, Predictor::perplexity_ratio,
                                               Predictor::oov_ratio};

const char* to_string(Predictor p);
Predictor parse_predictor(const std::string& s);

struct RegressionRow {
  std::string utterance_id;
  std::string split_id;
  double wer = 0.0;  // percent
  std::map<Predictor, double> ratios;  // test value / train-set mean
  int n_tokens = 0;
  int n_types = 0;
  std::string method;
  std::optional<std::string> speaker_id;
};

struct RowSet {
  std::vector<RegressionRow> rows;
  std::size_t winsorized = 0;
  std::vector<std::string> notes;
};

inline constexpr double kWerCap = 500.0;

/// One row per (split, test utterance). Each ratio divides the test value by
/// the split's train-set mean; a zero or missing train mean drops that ratio
/// for the split (with a note). WER above 500% is capped.
RowSet build_rows(const Corpus& corpus, const std::vector<Split>& splits, const FeatureTable& features,
                  const std::map<std::string, SplitWer>& wers);

struct RegressionOptions {
  bool control_counts = true;    // n_tokens, n_types
  bool control_method = true;    // split-method dummies
  bool control_speaker = true;   // speaker dummies when every row has one
  double level = 0.95;
};

struct TermEstimate {
  std::string name;
  bool control = false;
  double coef = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

struct RegressionResult {
  std::vector<TermEstimate> terms;  // intercept first, then predictors, then controls
  double r_squared = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_excluded = 0;  // rows lacking a usable ratio
  std::vector<std::string> eliminated;  // in elimination order
  std::vector<std::string> dropped_constant;  // controls that were constant in the data

  const TermEstimate* term(const std::string& name) const;
};

/// Fixed-effects OLS on the ratio predictors plus controls. Rows where any of
/// `predictors` is missing or non-finite are excluded and counted.
RegressionResult fit_ols(const std::vector<RegressionRow>& rows, const std::vector<Predictor>& predictors,
                         const RegressionOptions& opt = {});

/// Removes the predictor with the largest p-value above alpha and refits,
/// until every remaining predictor has p <= alpha. Controls stay. The row set
/// is fixed by the full predictor list.
RegressionResult backward_stepwise(const std::vector<RegressionRow>& rows, const std::vector<Predictor>& predictors,
                                   double alpha = 0.05, const RegressionOptions& opt = {});

/// "***" for p < 0.001, "**" for p < 0.01, "*" for p < 0.05.
const char* significance_stars(double p);

void write_regression_csv(const RegressionResult& r, std::ostream& out);
RegressionResult read_regression_csv(std::istream& in);

}  // namespace asrsplit
