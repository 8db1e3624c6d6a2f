#include "ngramcal/lasso.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace ngramcal;
using Catch::Matchers::WithinAbs;

namespace {

FeatureMatrix make_matrix(const std::vector<std::vector<double>>& dense) {
  FeatureMatrix m;
  m.cols = dense.empty() ? 0 : dense[0].size();
  for (const auto& row : dense) {
    SparseRow r;
    for (std::size_t j = 0; j < row.size(); ++j)
      if (row[j] != 0.0) r.entries.emplace_back(j, row[j]);
    m.rows.push_back(std::move(r));
  }
  return m;
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols,
                            std::uint64_t seed, bool normalize = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> dense(rows, std::vector<double>(cols));
  for (auto& r : dense)
    for (auto& v : r) v = gauss(rng);
  auto m = make_matrix(dense);
  return normalize ? l2_normalize_rows(std::move(m)) : m;
}

}  // namespace

TEST_CASE("soft threshold operator") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(1.0, 1.0) == 0.0);
  CHECK(soft_threshold(0.7, 0.0) == 0.7);
}

TEST_CASE("orthogonal design matches the closed-form solution") {
  // columns [1,1,-1,-1] and [1,-1,1,-1]: X'X = D*I and both are
  // orthogonal to the intercept, so beta_j = S(x_j'y / D, lambda).
  auto X = make_matrix({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
  std::vector<double> y = {2.0, 1.0, -0.5, 0.5};
  // x_0'y = 3.0 -> rho_0 = 0.75 ; x_1'y = 0 -> rho_1 = 0
  SECTION("lambda below the threshold shrinks by exactly lambda") {
    auto fit = fit_lasso(X, y, 0.25);
    CHECK_THAT(fit.coefficients[0], WithinAbs(0.5, 1e-12));
    CHECK_THAT(fit.coefficients[1], WithinAbs(0.0, 1e-12));
    CHECK_THAT(fit.intercept, WithinAbs(0.75, 1e-15));
    CHECK(fit.converged);
    CHECK(lasso_kkt_residual(X, y, fit) < 1e-12);
  }
  SECTION("lambda above the threshold zeroes everything") {
    auto fit = fit_lasso(X, y, 0.8);
    CHECK(fit.coefficients == std::vector<double>{0.0, 0.0});
  }
  SECTION("lambda zero recovers the projection") {
    auto fit = fit_lasso(X, y, 0.0);
    CHECK_THAT(fit.coefficients[0], WithinAbs(0.75, 1e-12));
    CHECK_THAT(fit.coefficients[1], WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("lambda zero matches ordinary least squares on a 2-feature problem") {
  auto X = make_matrix({{0.9, 0.1}, {0.4, 0.7}, {0.2, 0.95}, {0.8, 0.3},
                        {0.5, 0.5}, {0.1, 0.6}});
  std::vector<double> y = {1.1, 0.8, 0.4, 1.0, 0.75, 0.3};
  auto fit = fit_lasso(X, y, 0.0, {.tol = 1e-12, .max_sweeps = 100000});

  // normal equations on centered data, solved directly
  std::size_t D = y.size();
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(D);
  double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0;
  std::vector<std::vector<double>> dense = {{0.9, 0.1}, {0.4, 0.7}, {0.2, 0.95},
                                            {0.8, 0.3}, {0.5, 0.5}, {0.1, 0.6}};
  for (std::size_t i = 0; i < D; ++i) {
    a00 += dense[i][0] * dense[i][0];
    a01 += dense[i][0] * dense[i][1];
    a11 += dense[i][1] * dense[i][1];
    b0 += dense[i][0] * (y[i] - ybar);
    b1 += dense[i][1] * (y[i] - ybar);
  }
  double det = a00 * a11 - a01 * a01;
  double beta0 = (a11 * b0 - a01 * b1) / det;
  double beta1 = (a00 * b1 - a01 * b0) / det;
  CHECK_THAT(fit.coefficients[0], WithinAbs(beta0, 1e-9));
  CHECK_THAT(fit.coefficients[1], WithinAbs(beta1, 1e-9));
}

TEST_CASE("objective is monotonically nonincreasing across sweeps") {
  auto X = random_matrix(60, 12, 101);
  std::mt19937_64 rng(202);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> y(60);
  for (auto& v : y) v = gauss(rng);
  double lmax = lasso_lambda_max(X, y);
  for (double frac : {0.5, 0.1, 0.01}) {
    auto fit = fit_lasso(X, y, frac * lmax,
                         {.tol = 1e-10, .record_objective = true});
    REQUIRE(fit.objective_per_sweep.size() >= 1);
    for (std::size_t s = 1; s < fit.objective_per_sweep.size(); ++s)
      CHECK(fit.objective_per_sweep[s] <=
            fit.objective_per_sweep[s - 1] + 1e-12);
    CHECK(fit.converged);
  }
}

TEST_CASE("kkt conditions hold at convergence on random problems") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto X = random_matrix(80, 20, seed);
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> y(80);
    for (auto& v : y) v = gauss(rng);
    double lmax = lasso_lambda_max(X, y);
    auto fit =
        fit_lasso(X, y, 0.1 * lmax, {.tol = 1e-10, .max_sweeps = 20000});
    REQUIRE(fit.converged);
    CHECK(lasso_kkt_residual(X, y, fit) < 1e-8);
  }
}

TEST_CASE("lambda at or above lambda_max yields the all-zero solution") {
  auto X = random_matrix(50, 8, 7);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> y(50);
  for (auto& v : y) v = unif(rng);
  double lmax = lasso_lambda_max(X, y);
  for (double l : {lmax, 1.5 * lmax}) {
    auto fit = fit_lasso(X, y, l);
    for (double b : fit.coefficients) CHECK(b == 0.0);
    CHECK(fit.sweeps_used <= 2);
  }
  SECTION("slightly below lambda_max activates at least one coefficient") {
    auto fit = fit_lasso(X, y, 0.99 * lmax, {.tol = 1e-10});
    int nonzero = 0;
    for (double b : fit.coefficients)
      if (b != 0.0) ++nonzero;
    CHECK(nonzero >= 1);
  }
}

TEST_CASE("warm starts converge to the same solution") {
  auto X = random_matrix(70, 15, 33);
  std::mt19937_64 rng(34);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> y(70);
  for (auto& v : y) v = gauss(rng);
  double lmax = lasso_lambda_max(X, y);
  double lambda = 0.05 * lmax;
  LassoOptions tight{.tol = 1e-10, .max_sweeps = 50000};
  auto cold = fit_lasso(X, y, lambda, tight);
  auto other = fit_lasso(X, y, 0.5 * lmax, tight);
  auto warm = fit_lasso(X, y, lambda, tight, &other.coefficients);
  for (std::size_t j = 0; j < X.cols; ++j)
    CHECK_THAT(warm.coefficients[j], WithinAbs(cold.coefficients[j], 1e-7));
}

TEST_CASE("cross-validation recovers a planted sparse signal") {
  auto X = random_matrix(120, 10, 55);
  std::mt19937_64 rng(56);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> y(120);
  for (std::size_t i = 0; i < y.size(); ++i) {
    double x3 = 0, x7 = 0;
    for (const auto& [j, v] : X.rows[i].entries) {
      if (j == 3) x3 = v;
      if (j == 7) x7 = v;
    }
    y[i] = 0.3 + 2.0 * x3 - 1.5 * x7 + noise(rng);
  }
  auto fit = fit_lasso_cv(X, y, 3, 60, 42);
  CHECK(fit.coefficients[3] > 1.0);
  CHECK(fit.coefficients[7] < -0.5);
  CHECK(std::isfinite(fit.cv_mse));
  CHECK(fit.cv_mse < 0.05);  // far below var(y)
  int spurious = 0;
  for (std::size_t j = 0; j < X.cols; ++j)
    if (j != 3 && j != 7 && std::abs(fit.coefficients[j]) > 0.2) ++spurious;
  CHECK(spurious == 0);
}

TEST_CASE("cross-validation is deterministic for a fixed seed") {
  auto X = random_matrix(45, 9, 77);
  std::mt19937_64 rng(78);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> y(45);
  for (auto& v : y) v = gauss(rng);
  auto a = select_lambda_cv(X, y, 3, 40, 42);
  auto b = select_lambda_cv(X, y, 3, 40, 42);
  CHECK(a.lambda == b.lambda);
  CHECK(a.cv_mse == b.cv_mse);
  CHECK(a.mean_mse == b.mean_mse);

  SECTION("grid is geometric and descending from lambda_max") {
    double lmax = lasso_lambda_max(X, y);
    REQUIRE(a.grid.size() == 40);
    CHECK_THAT(a.grid.front(), WithinAbs(lmax, 1e-12));
    CHECK_THAT(a.grid.back(), WithinAbs(lmax * 1e-3, 1e-12));
    for (std::size_t g = 1; g < a.grid.size(); ++g) {
      CHECK(a.grid[g] < a.grid[g - 1]);
      double ratio = a.grid[g] / a.grid[g - 1];
      CHECK_THAT(ratio, WithinAbs(a.grid[1] / a.grid[0], 1e-9));
    }
  }
  SECTION("mse ties resolve to the largest lambda") {
    std::size_t first_argmin = 0;
    for (std::size_t g = 1; g < a.mean_mse.size(); ++g)
      if (a.mean_mse[g] < a.mean_mse[first_argmin]) first_argmin = g;
    CHECK(a.lambda == a.grid[first_argmin]);
    for (std::size_t g = 0; g < first_argmin; ++g)
      CHECK(a.mean_mse[g] > a.mean_mse[first_argmin]);
  }
}

TEST_CASE("pure-noise targets select a strongly regularized model") {
  auto X = random_matrix(40, 30, 91);
  std::mt19937_64 rng(92);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> y(40);
  for (auto& v : y) v = gauss(rng);
  auto fit = fit_lasso_cv(X, y, 3, 50, 42);
  int nonzero = 0;
  for (double b : fit.coefficients)
    if (b != 0.0) ++nonzero;
  // with no signal, cv keeps the model near-null
  CHECK(nonzero <= 6);
}

TEST_CASE("lasso input validation") {
  auto X = make_matrix({{1.0, 0.5}, {0.5, 1.0}});
  std::vector<double> y = {1.0, 2.0};
  CHECK_THROWS_AS(fit_lasso(X, {1.0}, 0.1), Error);
  CHECK_THROWS_AS(fit_lasso(X, y, -0.1), Error);
  CHECK_THROWS_AS(
      fit_lasso(X, {1.0, std::numeric_limits<double>::quiet_NaN()}, 0.1),
      Error);
  CHECK_THROWS_AS(select_lambda_cv(X, y, 3), Error);  // folds > rows
  FeatureMatrix empty;
  CHECK_THROWS_AS(fit_lasso(empty, {}, 0.1), Error);
}

TEST_CASE("constant targets produce the null model through cv") {
  auto X = random_matrix(12, 4, 13);
  std::vector<double> y(12, 0.4);
  auto fit = fit_lasso_cv(X, y, 3, 20, 42);
  for (double b : fit.coefficients) CHECK(b == 0.0);
  CHECK_THAT(fit.intercept, WithinAbs(0.4, 1e-15));
}
