#pragma once

// Least-squares building blocks for the structure learners: intercept-aware
// OLS with a ridge fallback, per-node R-squared against all other columns,
// and an l1 path with BIC model selection for pruning predecessor sets.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "causalbench/scm.hpp"

namespace causalbench {

struct OlsFit {
  Eigen::VectorXd coef;  // one entry per predictor column
  double intercept = 0.0;
  double rss = 0.0;
};

namespace detail {

// Solves (G + maybe-jitter) x = rhs for a symmetric PSD Gram matrix. The
// jitter path is the documented near-singularity fallback: 1e-6 * trace/p
// added to the diagonal.
inline Eigen::MatrixXd solve_gram(const Eigen::MatrixXd& gram,
                                  const Eigen::MatrixXd& rhs) {
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd x = llt.solve(rhs);
    if (x.allFinite()) return x;
  }
  double jitter = 1e-6 * gram.trace() / gram.rows();
  if (!(jitter > 0.0)) jitter = 1e-6;
  Eigen::MatrixXd damped = gram;
  damped.diagonal().array() += jitter;
  Eigen::MatrixXd x = Eigen::LDLT<Eigen::MatrixXd>(damped).solve(rhs);
  if (!x.allFinite())
    throw std::runtime_error("solve_gram: system unsolvable after jitter");
  return x;
}

}  // namespace detail

// OLS of y on the given columns of X, with intercept (data centered
// internally). Empty predictor set yields the mean-only fit.
inline OlsFit ols(const Eigen::MatrixXd& X, const std::vector<int>& cols,
                  const Eigen::VectorXd& y) {
  const auto n = X.rows();
  if (y.size() != n) throw std::invalid_argument("ols: size mismatch");
  OlsFit fit;
  double y_mean = y.mean();
  Eigen::VectorXd yc = y.array() - y_mean;
  if (cols.empty()) {
    fit.intercept = y_mean;
    fit.rss = yc.squaredNorm();
    fit.coef.resize(0);
    return fit;
  }
  const int p = static_cast<int>(cols.size());
  Eigen::MatrixXd A(n, p);
  Eigen::VectorXd col_mean(p);
  for (int k = 0; k < p; ++k) {
    col_mean[k] = X.col(cols[k]).mean();
    A.col(k) = X.col(cols[k]).array() - col_mean[k];
  }
  Eigen::MatrixXd gram = A.transpose() * A;
  Eigen::VectorXd beta = detail::solve_gram(gram, A.transpose() * yc);
  fit.coef = beta;
  fit.intercept = y_mean;
  for (int k = 0; k < p; ++k) fit.intercept -= beta[k] * col_mean[k];
  fit.rss = (yc - A * beta).squaredNorm();
  return fit;
}

// R-squared of each column regressed on all other columns, from the inverse
// correlation matrix: R2_i = 1 - 1/(C^-1)_ii. Both directions of a pair read
// the same stored correlation, so two-variable cases tie exactly.
inline std::vector<double> r2_all_others(const Dataset& ds) {
  const int d = ds.d();
  const auto n = ds.values.rows();
  if (n < 2) throw std::invalid_argument("r2_all_others: need n >= 2");
  if (d == 1) return {0.0};
  Eigen::MatrixXd centered = ds.values.rowwise() - ds.values.colwise().mean();
  Eigen::VectorXd sd(d);
  for (int i = 0; i < d; ++i) {
    sd[i] = std::sqrt(centered.col(i).squaredNorm() / (n - 1));
    if (sd[i] < 1e-12)
      throw DegenerateColumnError("r2_all_others: column " + node_label(i) +
                                  " is constant");
  }
  Eigen::MatrixXd corr = centered.transpose() * centered / double(n - 1);
  corr = sd.cwiseInverse().asDiagonal() * corr * sd.cwiseInverse().asDiagonal();
  Eigen::MatrixXd inv =
      detail::solve_gram(corr, Eigen::MatrixXd::Identity(d, d));
  std::vector<double> r2(d);
  for (int i = 0; i < d; ++i) {
    double v = 1.0 - 1.0 / inv(i, i);
    r2[i] = std::clamp(v, 0.0, 1.0);
  }
  return r2;
}

struct LassoSelection {
  std::vector<int> support;  // indices into `cols`
  double lambda = 0.0;       // penalty picked by BIC
  double bic = std::numeric_limits<double>::infinity();
};

// l1-penalized selection of y's predictors among the given columns.
// Predictors are centered and scaled to unit variance for the penalized fit;
// the path runs 30 penalties geometrically from lambda_max (smallest penalty
// with an all-zero solution) down by a factor of 1000; BIC(n*log(RSS/n) +
// k*log n) picks the penalty, ties resolved toward the stronger penalty.
inline LassoSelection lasso_bic_select(const Eigen::MatrixXd& X,
                                       const std::vector<int>& cols,
                                       const Eigen::VectorXd& y) {
  LassoSelection sel;
  if (cols.empty()) return sel;
  const auto n = X.rows();
  if (n < 2) throw std::invalid_argument("lasso_bic_select: need n >= 2");

  Eigen::VectorXd yc = y.array() - y.mean();
  // Constant predictors cannot be scaled; they never enter the support.
  std::vector<int> active;
  for (int k = 0; k < static_cast<int>(cols.size()); ++k) {
    double mean = X.col(cols[k]).mean();
    double sd = std::sqrt((X.col(cols[k]).array() - mean).square().sum() /
                          double(n - 1));
    if (sd >= 1e-12) active.push_back(k);
  }
  if (active.empty()) return sel;
  const int p = static_cast<int>(active.size());
  Eigen::MatrixXd Z(n, p);
  for (int k = 0; k < p; ++k) {
    const auto& col = X.col(cols[active[k]]);
    double mean = col.mean();
    double sd =
        std::sqrt((col.array() - mean).square().sum() / double(n - 1));
    Z.col(k) = (col.array() - mean) / sd;
  }

  // Covariance-form coordinate descent on (1/(2n))||yc - Z b||^2 + l*||b||_1.
  Eigen::MatrixXd G = Z.transpose() * Z / double(n);
  Eigen::VectorXd c = Z.transpose() * yc / double(n);
  double y_var = yc.squaredNorm() / double(n);
  double lambda_max = c.cwiseAbs().maxCoeff();
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) return sel;

  const int path_len = 30;
  const double decay = std::pow(1e-3, 1.0 / (path_len - 1));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  double best_bic = std::numeric_limits<double>::infinity();
  double best_lambda = lambda_max;
  Eigen::VectorXd best_b = b;

  double lambda = lambda_max;
  for (int t = 0; t < path_len; ++t) {
    for (int sweep = 0; sweep < 10000; ++sweep) {
      double max_delta = 0.0;
      for (int j = 0; j < p; ++j) {
        double gj = c[j] - G.row(j).dot(b) + G(j, j) * b[j];
        double bj = 0.0;
        if (gj > lambda) bj = (gj - lambda) / G(j, j);
        else if (gj < -lambda) bj = (gj + lambda) / G(j, j);
        max_delta = std::max(max_delta, std::abs(bj - b[j]));
        b[j] = bj;
      }
      if (max_delta < 1e-8) break;
    }
    int k = 0;
    for (int j = 0; j < p; ++j)
      if (b[j] != 0.0) ++k;
    double rss_over_n =
        std::max(y_var - 2.0 * c.dot(b) + b.dot(G * b), 1e-300);
    double bic = double(n) * std::log(rss_over_n) +
                 k * std::log(static_cast<double>(n));
    if (bic < best_bic) {  // strict: ties keep the earlier, larger penalty
      best_bic = bic;
      best_lambda = lambda;
      best_b = b;
    }
    lambda *= decay;
  }

  sel.lambda = best_lambda;
  sel.bic = best_bic;
  for (int k = 0; k < p; ++k)
    if (best_b[k] != 0.0) sel.support.push_back(active[k]);
  return sel;
}

}  // namespace causalbench
