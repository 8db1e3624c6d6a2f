#pragma once

// Standardized coefficient tables: per-target z-scoring of regression
// coefficients, top-k extraction, and agreement measures between the
// confidence and correctness representations (Spearman rho, Jaccard@k).

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ngramcal/featurizer.hpp"
#include "ngramcal/util.hpp"

namespace ngramcal {

// (v - mean) / population_std; a constant vector maps to all zeros.
inline std::vector<double> zscores(const std::vector<double>& v) {
  if (v.empty()) return {};
  double mean = std::accumulate(v.begin(), v.end(), 0.0) /
                static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  double sd = std::sqrt(sq / static_cast<double>(v.size()));
  std::vector<double> out(v.size());
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
  return out;
}

struct StandardizedCoefficient {
  std::string ngram;
  int n = 1;
  double z_conf = 0.0;   // z-scored lasso (confidence) coefficient
  double z_acc = 0.0;    // z-scored logistic (correctness) coefficient
  long long corpus_freq = 0;
  bool was_zero = false;  // lasso coefficient exactly zero (dagger rows)
};

// Rows follow vocabulary (lexicographic) order. Each coefficient vector is
// z-scored within this n-gram size, per target.
inline std::vector<StandardizedCoefficient> standardized_table(
    const Vocabulary& vocab, const std::vector<double>& conf_coefs,
    const std::vector<double>& acc_coefs,
    const std::vector<long long>& corpus_freqs) {
  if (conf_coefs.size() != vocab.size() || acc_coefs.size() != vocab.size() ||
      corpus_freqs.size() != vocab.size())
    throw Error("coefficient table inputs must match vocabulary size");
  auto zc = zscores(conf_coefs);
  auto za = zscores(acc_coefs);
  std::vector<StandardizedCoefficient> rows(vocab.size());
  for (const auto& [g, j] : vocab.entries) {
    rows[j].ngram = g;
    rows[j].n = vocab.n;
    rows[j].z_conf = zc[j];
    rows[j].z_acc = za[j];
    rows[j].corpus_freq = corpus_freqs[j];
    rows[j].was_zero = conf_coefs[j] == 0.0;
  }
  return rows;
}

enum class CoefficientSign { positive, negative };

// Top-k rows by z_conf (descending for positive, ascending for negative),
// dagger rows excluded, ties broken lexicographically by ngram.
inline std::vector<StandardizedCoefficient> top_k_ngrams(
    const std::vector<StandardizedCoefficient>& rows, std::size_t k,
    CoefficientSign sign) {
  std::vector<StandardizedCoefficient> kept;
  for (const auto& r : rows)
    if (!r.was_zero) kept.push_back(r);
  std::sort(kept.begin(), kept.end(),
            [sign](const StandardizedCoefficient& a,
                   const StandardizedCoefficient& b) {
              if (a.z_conf != b.z_conf)
                return sign == CoefficientSign::positive
                           ? a.z_conf > b.z_conf
                           : a.z_conf < b.z_conf;
              return a.ngram < b.ngram;
            });
  if (kept.size() > k) kept.resize(k);
  return kept;
}

// Average ranks (1-based), ties sharing the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation. Tie-free inputs use the exact d^2 identity
//   rho = 1 - 6 sum d_i^2 / (m(m^2-1));
// ties fall back to Pearson on average ranks.
inline double spearman_rho(const std::vector<double>& a,
                           const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("spearman inputs differ in length");
  const std::size_t m = a.size();
  if (m < 2) throw Error("spearman needs at least 2 observations");
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  auto has_tie = [](const std::vector<double>& r) {
    for (double x : r)
      if (x != std::floor(x)) return true;
    std::vector<double> s = r;
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) != s.end();
  };
  if (!has_tie(ra) && !has_tie(rb)) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double d = ra[i] - rb[i];
      d2 += d * d;
    }
    double mm = static_cast<double>(m);
    return 1.0 - 6.0 * d2 / (mm * (mm * mm - 1.0));
  }
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / m;
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / m;
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0)
    return std::numeric_limits<double>::quiet_NaN();  // ranks are constant
  return num / std::sqrt(va * vb);
}

// Indices of the k largest |z-score| entries, ties to the smaller index.
inline std::vector<std::size_t> top_indices_by_abs_z(
    const std::vector<double>& v, std::size_t k) {
  auto z = zscores(v);
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double za = std::abs(z[a]), zb = std::abs(z[b]);
    if (za != zb) return za > zb;
    return a < b;
  });
  if (order.size() > k) order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

inline double jaccard(const std::vector<std::size_t>& a,
                      const std::vector<std::size_t>& b) {
  std::vector<std::size_t> inter, uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(uni));
  if (uni.empty()) return 1.0;
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

struct AgreementResult {
  double spearman = 0.0;
  std::map<int, double> jaccard_at;  // k -> overlap of top-k |z| sets
};

// How similarly the two regressions rank the same vocabulary: rank
// correlation of the z-scored coefficient vectors plus top-k set overlap.
inline AgreementResult representation_agreement(
    const std::vector<double>& conf_coefs, const std::vector<double>& acc_coefs,
    const std::vector<int>& ks) {
  if (conf_coefs.size() != acc_coefs.size())
    throw Error("agreement inputs differ in length");
  AgreementResult out;
  out.spearman = spearman_rho(zscores(conf_coefs), zscores(acc_coefs));
  for (int k : ks) {
    if (k < 1) throw Error("jaccard k must be >= 1");
    std::size_t kk = std::min<std::size_t>(k, conf_coefs.size());
    out.jaccard_at[k] = jaccard(top_indices_by_abs_z(conf_coefs, kk),
                                top_indices_by_abs_z(acc_coefs, kk));
  }
  return out;
}

}  // namespace ngramcal
