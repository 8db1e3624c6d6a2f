#pragma once

// L2-penalized logistic regression for correctness prediction:
//   argmin_w,b  (1/D) sum_i log(1 + exp(-s_i (x_i'w + b))) + (C/2) ||w||^2
// written below with labels a_i in {0,1}; the bias is unpenalized and
// C defaults to 1/D. Solved by L-BFGS with Armijo backtracking.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "ngramcal/featurizer.hpp"
#include "ngramcal/lasso.hpp"
#include "ngramcal/util.hpp"

namespace ngramcal {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

struct LogisticFit {
  int n = 0;  // n-gram size this fit belongs to, 0 when standalone
  std::vector<double> weights;
  double bias = 0.0;
  double penalty_strength = 0.0;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  double final_grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

struct LogisticOptions {
  double penalty_strength = -1.0;  // < 0 selects the 1/D default
  double gtol = 1e-6;              // on the gradient euclidean norm
  int max_iter = 2000;
  int lbfgs_memory = 10;
};

namespace detail {

// loss_i = max(z,0) - a z + log(1 + exp(-|z|)), the overflow-safe form of
// log(1 + e^z) - a z.
inline double logistic_term(double z, int a) {
  return std::max(z, 0.0) - static_cast<double>(a) * z +
         std::log1p(std::exp(-std::abs(z)));
}

}  // namespace detail

inline double logistic_loss(const FeatureMatrix& X, const std::vector<int>& a,
                            const std::vector<double>& w, double b,
                            double penalty) {
  validate_regression_inputs(X, a.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < X.row_count(); ++i)
    loss += detail::logistic_term(predict_one(X.rows[i], w, b), a[i]);
  loss /= static_cast<double>(X.row_count());
  double sq = 0.0;
  for (double v : w) sq += v * v;
  return loss + 0.5 * penalty * sq;
}

// Gradient of the loss above; the bias derivative is the last entry.
inline std::vector<double> logistic_gradient(const FeatureMatrix& X,
                                             const std::vector<int>& a,
                                             const std::vector<double>& w,
                                             double b, double penalty) {
  const double invD = 1.0 / static_cast<double>(X.row_count());
  std::vector<double> g(X.cols + 1, 0.0);
  for (std::size_t i = 0; i < X.row_count(); ++i) {
    double err = sigmoid(predict_one(X.rows[i], w, b)) -
                 static_cast<double>(a[i]);
    for (const auto& [j, v] : X.rows[i].entries) g[j] += v * err * invD;
    g[X.cols] += err * invD;
  }
  for (std::size_t j = 0; j < X.cols; ++j) g[j] += penalty * w[j];
  return g;
}

inline std::vector<double> logistic_predict(const FeatureMatrix& X,
                                            const LogisticFit& fit) {
  std::vector<double> p(X.row_count());
  for (std::size_t i = 0; i < X.row_count(); ++i)
    p[i] = sigmoid(predict_one(X.rows[i], fit.weights, fit.bias));
  return p;
}

inline LogisticFit fit_logistic(const FeatureMatrix& X,
                                const std::vector<int>& a,
                                const LogisticOptions& opts = {}) {
  validate_regression_inputs(X, a.size());
  bool has0 = false, has1 = false;
  for (int v : a) {
    if (v == 0)
      has0 = true;
    else if (v == 1)
      has1 = true;
    else
      throw Error("labels must be 0 or 1");
  }
  if (!has0 || !has1) throw Error("labels contain a single class");

  const std::size_t d = X.cols;
  const double penalty = opts.penalty_strength < 0.0
                             ? 1.0 / static_cast<double>(X.row_count())
                             : opts.penalty_strength;

  // parameter vector theta = [w ; b]
  std::vector<double> theta(d + 1, 0.0);
  auto eval = [&](const std::vector<double>& th) {
    std::vector<double> w(th.begin(), th.begin() + d);
    return logistic_loss(X, a, w, th[d], penalty);
  };
  auto grad = [&](const std::vector<double>& th) {
    std::vector<double> w(th.begin(), th.begin() + d);
    return logistic_gradient(X, a, w, th[d], penalty);
  };
  auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  auto dot = [](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
  };

  double f = eval(theta);
  std::vector<double> g = grad(theta);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> history;
  std::deque<double> rho_hist;

  LogisticFit fit;
  fit.penalty_strength = penalty;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    double gnorm = norm2(g);
    if (gnorm <= opts.gtol) {
      fit.converged = true;
      break;
    }
    // two-loop recursion
    std::vector<double> q = g;
    std::vector<double> alpha(history.size());
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(history[k].first, q);
      for (std::size_t i = 0; i < q.size(); ++i)
        q[i] -= alpha[k] * history[k].second[i];
    }
    if (!history.empty()) {
      const auto& [s, yv] = history.back();
      double gamma = dot(s, yv) / dot(yv, yv);
      for (auto& v : q) v *= gamma;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      double beta = rho_hist[k] * dot(history[k].second, q);
      for (std::size_t i = 0; i < q.size(); ++i)
        q[i] += (alpha[k] - beta) * history[k].first[i];
    }
    std::vector<double> dir(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) dir[i] = -q[i];
    double descent = dot(g, dir);
    if (!(descent < 0.0)) {  // fall back to steepest descent
      for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -g[i];
      descent = -gnorm * gnorm;
    }

    // Armijo backtracking
    double step = 1.0;
    std::vector<double> trial(theta.size());
    double ftrial = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < theta.size(); ++i)
        trial[i] = theta[i] + step * dir[i];
      ftrial = eval(trial);
      if (ftrial <= f + 1e-4 * step * descent) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress at machine precision

    std::vector<double> gnew = grad(trial);
    std::vector<double> s(theta.size()), yv(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      s[i] = trial[i] - theta[i];
      yv[i] = gnew[i] - g[i];
    }
    double sy = dot(s, yv);
    if (sy > 1e-12) {
      history.emplace_back(std::move(s), std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (history.size() > static_cast<std::size_t>(opts.lbfgs_memory)) {
        history.pop_front();
        rho_hist.pop_front();
      }
    }
    theta = std::move(trial);
    f = ftrial;
    g = std::move(gnew);
  }

  fit.weights.assign(theta.begin(), theta.begin() + d);
  fit.bias = theta[d];
  fit.final_loss = f;
  fit.final_grad_norm = norm2(g);
  fit.iterations = it;
  if (fit.final_grad_norm <= opts.gtol) fit.converged = true;
  return fit;
}

}  // namespace ngramcal
