#pragma once

// Lasso regression by cyclical coordinate descent with soft-thresholding:
//   argmin_beta (1/2D) * sum_i (y_i - x_i'beta - b)^2 + lambda * ||beta||_1
// The intercept b is unpenalized and fixed to mean(y) (columns enter the
// model already row-normalized, not centered). Lambda selection is k-fold
// cross-validation over a geometric grid descending from lambda_max.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "ngramcal/featurizer.hpp"
#include "ngramcal/util.hpp"

namespace ngramcal {

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

struct LassoFit {
  int n = 0;  // n-gram size this fit belongs to, 0 when standalone
  double lambda = 0.0;
  std::vector<double> coefficients;
  double intercept = 0.0;
  double cv_mse = std::numeric_limits<double>::quiet_NaN();
  int sweeps_used = 0;
  bool converged = false;
  std::vector<double> objective_per_sweep;  // objective after each full sweep
};

struct LassoOptions {
  bool fit_intercept = true;
  double tol = 1e-4;      // on max coefficient change per sweep
  int max_sweeps = 1000;
  bool record_objective = false;
};

namespace detail {

// Column-major view of a row-sparse matrix.
struct CscMatrix {
  std::vector<std::vector<std::pair<std::size_t, double>>> cols;  // (row, val)
  std::vector<double> col_sq;  // sum_i x_ij^2

  explicit CscMatrix(const FeatureMatrix& m)
      : cols(m.cols), col_sq(m.cols, 0.0) {
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      for (const auto& [j, v] : m.rows[i].entries) {
        cols[j].emplace_back(i, v);
        col_sq[j] += v * v;
      }
    }
  }
};

}  // namespace detail

inline void validate_regression_inputs(const FeatureMatrix& X,
                                       std::size_t y_size) {
  if (X.row_count() == 0 || X.cols == 0) throw Error("empty design matrix");
  if (y_size != X.row_count())
    throw Error("target length does not match design row count");
}

inline double predict_one(const SparseRow& row, const std::vector<double>& beta,
                          double intercept) {
  double z = intercept;
  for (const auto& [j, v] : row.entries) z += v * beta[j];
  return z;
}

inline std::vector<double> lasso_predict(const FeatureMatrix& X,
                                         const LassoFit& fit) {
  std::vector<double> out(X.row_count());
  for (std::size_t i = 0; i < X.row_count(); ++i)
    out[i] = predict_one(X.rows[i], fit.coefficients, fit.intercept);
  return out;
}

inline double lasso_objective(const FeatureMatrix& X,
                              const std::vector<double>& y, const LassoFit& fit,
                              double lambda) {
  validate_regression_inputs(X, y.size());
  double rss = 0.0;
  for (std::size_t i = 0; i < X.row_count(); ++i) {
    double r = y[i] - predict_one(X.rows[i], fit.coefficients, fit.intercept);
    rss += r * r;
  }
  double l1 = 0.0;
  for (double b : fit.coefficients) l1 += std::abs(b);
  return rss / (2.0 * static_cast<double>(X.row_count())) + lambda * l1;
}

// Smallest lambda at which all coefficients are zero:
//   lambda_max = max_j |x_j'(y - ybar)| / D
inline double lasso_lambda_max(const FeatureMatrix& X,
                               const std::vector<double>& y,
                               bool fit_intercept = true) {
  validate_regression_inputs(X, y.size());
  double ybar = 0.0;
  if (fit_intercept)
    ybar = std::accumulate(y.begin(), y.end(), 0.0) /
           static_cast<double>(y.size());
  std::vector<double> dot(X.cols, 0.0);
  for (std::size_t i = 0; i < X.row_count(); ++i)
    for (const auto& [j, v] : X.rows[i].entries) dot[j] += v * (y[i] - ybar);
  double mx = 0.0;
  for (double d : dot) mx = std::max(mx, std::abs(d));
  return mx / static_cast<double>(X.row_count());
}

inline LassoFit fit_lasso(const FeatureMatrix& X, const std::vector<double>& y,
                          double lambda, const LassoOptions& opts = {},
                          const std::vector<double>* warm_start = nullptr) {
  validate_regression_inputs(X, y.size());
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw Error("lambda must be finite and >= 0");
  for (double v : y)
    if (!std::isfinite(v)) throw Error("non-finite regression target");

  const std::size_t D = X.row_count();
  const std::size_t d = X.cols;
  detail::CscMatrix csc(X);

  LassoFit fit;
  fit.lambda = lambda;
  fit.coefficients.assign(d, 0.0);
  if (warm_start) {
    if (warm_start->size() != d) throw Error("warm start size mismatch");
    fit.coefficients = *warm_start;
  }
  double ybar = 0.0;
  if (opts.fit_intercept)
    ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(D);
  fit.intercept = ybar;

  // residual r = (y - ybar) - X beta, maintained across coordinate updates
  std::vector<double> r(D);
  for (std::size_t i = 0; i < D; ++i) r[i] = y[i] - ybar;
  if (warm_start)
    for (std::size_t j = 0; j < d; ++j) {
      double b = fit.coefficients[j];
      if (b != 0.0)
        for (const auto& [i, v] : csc.cols[j]) r[i] -= v * b;
    }

  const double invD = 1.0 / static_cast<double>(D);
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    double max_beta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double a = csc.col_sq[j] * invD;
      if (a == 0.0) continue;
      double dot = 0.0;
      for (const auto& [i, v] : csc.cols[j]) dot += v * r[i];
      double rho = dot * invD + a * fit.coefficients[j];
      double bnew = soft_threshold(rho, lambda) / a;
      double delta = bnew - fit.coefficients[j];
      if (delta != 0.0) {
        fit.coefficients[j] = bnew;
        for (const auto& [i, v] : csc.cols[j]) r[i] -= v * delta;
      }
      max_change = std::max(max_change, std::abs(delta));
      max_beta = std::max(max_beta, std::abs(bnew));
    }
    fit.sweeps_used = sweep + 1;
    if (opts.record_objective)
      fit.objective_per_sweep.push_back(lasso_objective(X, y, fit, lambda));
    if (max_change < opts.tol * std::max(1.0, max_beta)) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

// Max KKT violation at the fitted point; near zero at an exact optimum.
// For beta_j != 0: |x_j'r / D - lambda sign(beta_j)|.
// For beta_j == 0: max(0, |x_j'r / D| - lambda).
inline double lasso_kkt_residual(const FeatureMatrix& X,
                                 const std::vector<double>& y,
                                 const LassoFit& fit) {
  validate_regression_inputs(X, y.size());
  std::vector<double> r(X.row_count());
  for (std::size_t i = 0; i < X.row_count(); ++i)
    r[i] = y[i] - predict_one(X.rows[i], fit.coefficients, fit.intercept);
  std::vector<double> dot(X.cols, 0.0);
  for (std::size_t i = 0; i < X.row_count(); ++i)
    for (const auto& [j, v] : X.rows[i].entries) dot[j] += v * r[i];
  const double invD = 1.0 / static_cast<double>(X.row_count());
  double worst = 0.0;
  for (std::size_t j = 0; j < X.cols; ++j) {
    double g = dot[j] * invD;
    double b = fit.coefficients[j];
    double viol = b != 0.0 ? std::abs(g - fit.lambda * (b > 0 ? 1.0 : -1.0))
                           : std::max(0.0, std::abs(g) - fit.lambda);
    worst = std::max(worst, viol);
  }
  return worst;
}

inline FeatureMatrix subset_rows(const FeatureMatrix& X,
                                 const std::vector<std::size_t>& rows) {
  FeatureMatrix out;
  out.n = X.n;
  out.cols = X.cols;
  out.weighting = X.weighting;
  out.normalized = X.normalized;
  out.rows.reserve(rows.size());
  for (std::size_t i : rows) {
    out.rows.push_back(X.rows[i]);
    if (!X.row_ids.empty()) out.row_ids.push_back(X.row_ids[i]);
    if (X.rows[i].entries.empty()) out.zero_rows.push_back(out.rows.size() - 1);
  }
  return out;
}

struct CvResult {
  double lambda = 0.0;
  double cv_mse = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> grid;      // descending
  std::vector<double> mean_mse;  // parallel to grid
};

// K-fold CV over a geometric grid from lambda_max down to lambda_max * 1e-3.
// Folds are a seeded shuffle cut into contiguous blocks; the first
// (N mod folds) blocks take the extra row. Ties in MSE keep the larger lambda.
inline CvResult select_lambda_cv(const FeatureMatrix& X,
                                 const std::vector<double>& y, int folds = 3,
                                 int grid_size = 100, std::uint64_t seed = 42,
                                 const LassoOptions& opts = {}) {
  validate_regression_inputs(X, y.size());
  const std::size_t N = X.row_count();
  if (folds < 2) throw Error("cv needs at least 2 folds");
  if (N < static_cast<std::size_t>(folds))
    throw Error("cv needs at least as many rows as folds");
  if (grid_size < 1) throw Error("cv grid must be non-empty");

  CvResult res;
  double lmax = lasso_lambda_max(X, y, opts.fit_intercept);
  if (lmax <= 0.0) {
    // y is constant (or signal-free): every lambda gives the null model
    res.lambda = 0.0;
    res.grid = {0.0};
  } else {
    res.grid.resize(grid_size);
    for (int g = 0; g < grid_size; ++g) {
      double t = grid_size == 1
                     ? 0.0
                     : static_cast<double>(g) / static_cast<double>(grid_size - 1);
      res.grid[g] = lmax * std::pow(1e-3, t);
    }
  }

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<double>> fold_mse(
      res.grid.size(), std::vector<double>(folds, 0.0));
  std::size_t base = N / folds, extra = N % folds, at = 0;
  for (int f = 0; f < folds; ++f) {
    std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    std::vector<std::size_t> val(order.begin() + at, order.begin() + at + size);
    std::vector<std::size_t> train;
    train.reserve(N - size);
    train.insert(train.end(), order.begin(), order.begin() + at);
    train.insert(train.end(), order.begin() + at + size, order.end());
    at += size;

    FeatureMatrix Xtr = subset_rows(X, train);
    std::vector<double> ytr;
    ytr.reserve(train.size());
    for (std::size_t i : train) ytr.push_back(y[i]);

    std::vector<double> warm(X.cols, 0.0);
    for (std::size_t g = 0; g < res.grid.size(); ++g) {
      LassoFit fit = fit_lasso(Xtr, ytr, res.grid[g], opts, &warm);
      warm = fit.coefficients;
      double sse = 0.0;
      for (std::size_t i : val) {
        double e = y[i] - predict_one(X.rows[i], fit.coefficients, fit.intercept);
        sse += e * e;
      }
      fold_mse[g][f] = sse / static_cast<double>(size);
    }
  }

  res.mean_mse.resize(res.grid.size());
  std::size_t best = 0;
  for (std::size_t g = 0; g < res.grid.size(); ++g) {
    double m = std::accumulate(fold_mse[g].begin(), fold_mse[g].end(), 0.0) /
               static_cast<double>(folds);
    res.mean_mse[g] = m;
    if (m < res.mean_mse[best]) best = g;  // strict: ties keep larger lambda
  }
  res.lambda = res.grid[best];
  res.cv_mse = res.mean_mse[best];
  return res;
}

// CV selection followed by a full-data fit at the chosen lambda.
inline LassoFit fit_lasso_cv(const FeatureMatrix& X,
                             const std::vector<double>& y, int folds = 3,
                             int grid_size = 100, std::uint64_t seed = 42,
                             const LassoOptions& opts = {}) {
  CvResult cv = select_lambda_cv(X, y, folds, grid_size, seed, opts);
  LassoFit fit = fit_lasso(X, y, cv.lambda, opts);
  fit.cv_mse = cv.cv_mse;
  return fit;
}

}  // namespace ngramcal
