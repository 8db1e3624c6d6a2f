#include "ngramcal/coefficients.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace ngramcal;
using Catch::Matchers::WithinAbs;

TEST_CASE("zscores use the population standard deviation") {
  // mean 5, population std 2
  std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  auto z = zscores(v);
  std::vector<double> want = {-1.5, -0.5, -0.5, -0.5, 0.0, 0.0, 1.0, 2.0};
  REQUIRE(z.size() == want.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    CHECK_THAT(z[i], WithinAbs(want[i], 1e-15));

  CHECK(zscores({3.0, 3.0, 3.0}) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(zscores({}).empty());
  SECTION("result has mean 0 and population std 1") {
    double m = 0, sq = 0;
    for (double x : z) m += x;
    m /= z.size();
    for (double x : z) sq += (x - m) * (x - m);
    CHECK_THAT(m, WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::sqrt(sq / z.size()), WithinAbs(1.0, 1e-15));
  }
}

TEST_CASE("standardized table carries flags, sizes, and frequencies") {
  std::vector<TokenList> corpus = {
      tokenize("alpha beta gamma"),
      tokenize("alpha beta delta"),
      tokenize("alpha gamma delta"),
  };
  auto vocab = build_vocabulary(corpus, 1, 2);
  // columns: alpha=0 beta=1 delta=2 gamma=3
  REQUIRE(vocab.size() == 4);
  auto freqs = total_frequencies(corpus, vocab);
  std::vector<double> conf = {0.8, 0.0, -0.4, 0.1};
  std::vector<double> acc = {0.5, -0.1, 0.0, 0.2};
  auto rows = standardized_table(vocab, conf, acc, freqs);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].ngram == "alpha");
  CHECK(rows[0].n == 1);
  CHECK(rows[0].corpus_freq == 3);
  CHECK(!rows[0].was_zero);
  CHECK(rows[1].ngram == "beta");
  CHECK(rows[1].was_zero);  // lasso coefficient exactly zero
  CHECK(!rows[2].was_zero);
  auto zc = zscores(conf);
  auto za = zscores(acc);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(rows[j].z_conf == zc[j]);
    CHECK(rows[j].z_acc == za[j]);
  }
  CHECK_THROWS_AS(standardized_table(vocab, {0.1}, acc, freqs), Error);
}

TEST_CASE("top-k extraction excludes dagger rows and breaks ties by ngram") {
  std::vector<StandardizedCoefficient> rows;
  auto add = [&](const std::string& g, double z, bool wz) {
    StandardizedCoefficient r;
    r.ngram = g;
    r.z_conf = z;
    r.was_zero = wz;
    rows.push_back(r);
  };
  add("delta", 2.0, false);
  add("alpha", 1.0, false);
  add("beta", 1.0, false);
  add("gamma", 3.0, true);   // excluded despite the largest z
  add("omega", -2.5, false);
  add("sigma", -2.5, false);
  add("zeta", 0.5, false);

  auto top_pos = top_k_ngrams(rows, 3, CoefficientSign::positive);
  REQUIRE(top_pos.size() == 3);
  CHECK(top_pos[0].ngram == "delta");
  CHECK(top_pos[1].ngram == "alpha");  // tie with beta, lexicographic
  CHECK(top_pos[2].ngram == "beta");

  auto top_neg = top_k_ngrams(rows, 2, CoefficientSign::negative);
  REQUIRE(top_neg.size() == 2);
  CHECK(top_neg[0].ngram == "omega");  // tie with sigma, lexicographic
  CHECK(top_neg[1].ngram == "sigma");

  CHECK(top_k_ngrams(rows, 100, CoefficientSign::positive).size() == 6);
}

TEST_CASE("average ranks share tied positions") {
  auto r = average_ranks({10.0, 20.0, 20.0, 30.0});
  CHECK(r == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  CHECK(average_ranks({5.0}) == std::vector<double>{1.0});
}

TEST_CASE("spearman rho on tie-free data uses the exact d^2 identity") {
  // ranks [4,2,1,5,3] vs [4,1,3,5,2]: sum d^2 = 6, m = 5
  std::vector<double> a = {3.1, 0.2, -1.5, 4.0, 2.2};
  std::vector<double> b = {2.9, 0.1, 1.5, 5.0, 1.0};
  double expected = 1.0 - 6.0 * 6.0 / (5.0 * (25.0 - 1.0));
  CHECK(spearman_rho(a, b) == expected);  // bitwise: same formula, 0.7

  CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == 1.0);
  CHECK(spearman_rho({1, 2, 3, 4}, {4, 3, 2, 1}) == -1.0);
}

TEST_CASE("spearman rho with ties matches pearson on average ranks") {
  std::vector<double> a = {1.0, 2.0, 2.0, 3.0};
  std::vector<double> b = {1.0, 3.0, 2.0, 4.0};
  CHECK_THAT(spearman_rho(a, b), WithinAbs(0.9486832980505139, 1e-12));
  SECTION("constant input has no defined rank correlation") {
    CHECK(std::isnan(spearman_rho({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0})));
  }
  SECTION("length mismatch and short inputs throw") {
    CHECK_THROWS_AS(spearman_rho({1.0}, {1.0, 2.0}), Error);
    CHECK_THROWS_AS(spearman_rho({1.0}, {1.0}), Error);
  }
}

TEST_CASE("jaccard overlap of top |z| sets") {
  std::vector<double> va = {5.0, -3.0, 0.5, 0.1, -0.2, 2.0};
  std::vector<double> vb = {4.8, 0.2, -3.1, 0.3, -0.1, 1.9};
  auto res = representation_agreement(va, vb, {2, 3});
  // top-2 sets {0,1} vs {0,2} -> 1/3 ; top-3 {0,1,5} vs {0,2,5} -> 2/4
  CHECK_THAT(res.jaccard_at.at(2), WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(res.jaccard_at.at(3), WithinAbs(0.5, 1e-15));

  SECTION("ties on |z| go to the smaller index") {
    // +3 and -3 have equal |z|; index 0 must win the top-1 slot
    auto idx = top_indices_by_abs_z({3.0, -3.0, 0.0, 0.0}, 1);
    CHECK(idx == std::vector<std::size_t>{0});
  }
  SECTION("k larger than the vector is clamped") {
    auto r2 = representation_agreement(va, vb, {100});
    CHECK(r2.jaccard_at.at(100) == 1.0);
  }
  SECTION("identical vectors agree perfectly") {
    auto r3 = representation_agreement(va, va, {2, 4});
    CHECK(r3.spearman == 1.0);
    CHECK(r3.jaccard_at.at(2) == 1.0);
    CHECK(r3.jaccard_at.at(4) == 1.0);
  }
}
