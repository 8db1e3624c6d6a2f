#pragma once

// N-gram featurization: tokenizer, vocabulary with a minimum corpus count,
// sparse count / TF-IDF matrices, L2 row normalization, and the text/JSON
// serializations for both.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ngramcal/util.hpp"

namespace ngramcal {

using TokenList = std::vector<std::string>;

// Lowercased maximal ASCII letter runs; runs shorter than 2 chars are dropped.
inline TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2) tokens.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    if (ch >= 'A' && ch <= 'Z')
      cur += static_cast<char>(ch - 'A' + 'a');
    else if (ch >= 'a' && ch <= 'z')
      cur += ch;
    else
      flush();
  }
  flush();
  return tokens;
}

// Space-joined sliding windows of n consecutive tokens.
inline std::vector<std::string> ngrams_of(const TokenList& tokens, int n) {
  std::vector<std::string> out;
  if (n < 1 || tokens.size() < static_cast<std::size_t>(n)) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (int k = 1; k < n; ++k) {
      g += ' ';
      g += tokens[i + k];
    }
    out.push_back(std::move(g));
  }
  return out;
}

struct Vocabulary {
  int n = 1;
  // ngram -> column index; indices are the lexicographic rank, so map order
  // and column order coincide.
  std::map<std::string, std::size_t> entries;
  std::map<std::string, long long> doc_frequency;

  std::size_t size() const { return entries.size(); }
};

// Keeps n-grams whose total corpus occurrence count is >= min_count.
inline Vocabulary build_vocabulary(const std::vector<TokenList>& corpus, int n,
                                   long long min_count = 2) {
  if (n < 1) throw Error("ngram size must be >= 1");
  if (min_count < 1) throw Error("min_count must be >= 1");
  std::map<std::string, long long> totals;
  std::map<std::string, long long> docs;
  for (const auto& tokens : corpus) {
    auto grams = ngrams_of(tokens, n);
    std::map<std::string, long long> local;
    for (auto& g : grams) ++local[g];
    for (auto& [g, c] : local) {
      totals[g] += c;
      ++docs[g];
    }
  }
  Vocabulary vocab;
  vocab.n = n;
  std::size_t idx = 0;
  for (const auto& [g, c] : totals) {
    if (c < min_count) continue;
    vocab.entries.emplace(g, idx++);
    vocab.doc_frequency.emplace(g, docs[g]);
  }
  return vocab;
}

// Total corpus occurrences per vocabulary n-gram, in column order.
inline std::vector<long long> total_frequencies(
    const std::vector<TokenList>& corpus, const Vocabulary& vocab) {
  std::vector<long long> freq(vocab.size(), 0);
  for (const auto& tokens : corpus) {
    for (const auto& g : ngrams_of(tokens, vocab.n)) {
      auto it = vocab.entries.find(g);
      if (it != vocab.entries.end()) ++freq[it->second];
    }
  }
  return freq;
}

enum class Weighting { count, tfidf };

inline std::string to_string(Weighting w) {
  return w == Weighting::count ? "count" : "tfidf";
}

inline std::optional<Weighting> weighting_from_string(const std::string& s) {
  if (s == "count") return Weighting::count;
  if (s == "tfidf") return Weighting::tfidf;
  return std::nullopt;
}

struct SparseRow {
  // (column, value), sorted by column, no duplicates, no explicit zeros.
  std::vector<std::pair<std::size_t, double>> entries;
};

struct FeatureMatrix {
  int n = 1;
  std::size_t cols = 0;
  Weighting weighting = Weighting::count;
  bool normalized = false;
  std::vector<SparseRow> rows;
  std::vector<std::string> row_ids;       // optional, parallel to rows
  std::vector<std::size_t> zero_rows;     // rows with no in-vocabulary n-grams

  std::size_t row_count() const { return rows.size(); }
};

// Smoothed IDF: ln((1 + D) / (1 + df)) + 1, with D the corpus size passed in.
inline double idf_weight(std::size_t doc_count, long long doc_frequency) {
  return std::log((1.0 + static_cast<double>(doc_count)) /
                  (1.0 + static_cast<double>(doc_frequency))) +
         1.0;
}

inline FeatureMatrix vectorize(const std::vector<TokenList>& corpus,
                               const Vocabulary& vocab, Weighting weighting,
                               std::vector<std::string> row_ids = {}) {
  if (!row_ids.empty() && row_ids.size() != corpus.size())
    throw Error("row id count does not match corpus size");
  FeatureMatrix m;
  m.n = vocab.n;
  m.cols = vocab.size();
  m.weighting = weighting;
  m.row_ids = std::move(row_ids);
  m.rows.reserve(corpus.size());
  std::vector<double> idf;
  if (weighting == Weighting::tfidf) {
    idf.resize(vocab.size());
    for (const auto& [g, j] : vocab.entries)
      idf[j] = idf_weight(corpus.size(), vocab.doc_frequency.at(g));
  }
  for (const auto& tokens : corpus) {
    std::map<std::size_t, double> counts;
    for (const auto& g : ngrams_of(tokens, vocab.n)) {
      auto it = vocab.entries.find(g);
      if (it != vocab.entries.end()) counts[it->second] += 1.0;
    }
    SparseRow row;
    row.entries.reserve(counts.size());
    for (auto& [j, c] : counts)
      row.entries.emplace_back(j, weighting == Weighting::tfidf ? c * idf[j] : c);
    if (row.entries.empty()) m.zero_rows.push_back(m.rows.size());
    m.rows.push_back(std::move(row));
  }
  return m;
}

// Scales every nonzero row to unit L2 norm; zero rows are left as-is and
// recorded in zero_rows.
inline FeatureMatrix l2_normalize_rows(FeatureMatrix m) {
  m.zero_rows.clear();
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    double sq = 0.0;
    for (auto& [j, v] : m.rows[i].entries) sq += v * v;
    if (sq <= 0.0) {
      m.zero_rows.push_back(i);
      continue;
    }
    double inv = 1.0 / std::sqrt(sq);
    for (auto& [j, v] : m.rows[i].entries) v *= inv;
  }
  m.normalized = true;
  return m;
}

inline double row_l2_norm(const SparseRow& row) {
  double sq = 0.0;
  for (auto& [j, v] : row.entries) sq += v * v;
  return std::sqrt(sq);
}

// Vocabulary JSON: array of [ngram, index, doc_frequency], in column order.
inline std::string vocabulary_to_json(const Vocabulary& vocab) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [g, j] : vocab.entries)
    arr.push_back({g, j, vocab.doc_frequency.at(g)});
  nlohmann::json out;
  out["n"] = vocab.n;
  out["entries"] = arr;
  return out.dump(2) + "\n";
}

inline Vocabulary vocabulary_from_json(const std::string& text) {
  Vocabulary vocab;
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    vocab.n = j.at("n").get<int>();
    for (const auto& row : j.at("entries")) {
      std::string g = row.at(0).get<std::string>();
      std::size_t idx = row.at(1).get<std::size_t>();
      long long df = row.at(2).get<long long>();
      vocab.entries[g] = idx;
      vocab.doc_frequency[g] = df;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad vocabulary json: ") + e.what());
  }
  std::size_t want = 0;
  for (const auto& [g, j2] : vocab.entries)
    if (j2 != want++) throw Error("vocabulary indices are not lexicographic");
  return vocab;
}

// Sparse triplet text: one header line
//   D=<rows> d=<cols> n=<n> weighting=<count|tfidf> normalized=<0|1>
// then one "row col value" line per nonzero, row-major.
inline std::string matrix_to_text(const FeatureMatrix& m) {
  std::string out = "D=" + std::to_string(m.rows.size()) +
                    " d=" + std::to_string(m.cols) + " n=" + std::to_string(m.n) +
                    " weighting=" + to_string(m.weighting) +
                    " normalized=" + (m.normalized ? "1" : "0") + "\n";
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    for (const auto& [j, v] : m.rows[i].entries)
      out += std::to_string(i) + " " + std::to_string(j) + " " + fmt_double(v) +
             "\n";
  return out;
}

inline FeatureMatrix matrix_from_text(const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty()) throw Error("empty matrix file");
  FeatureMatrix m;
  std::size_t rows = 0;
  {
    std::map<std::string, std::string> kv;
    std::istringstream head(lines[0]);
    std::string tok;
    while (head >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) throw Error("bad matrix header");
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    try {
      rows = std::stoull(kv.at("D"));
      m.cols = std::stoull(kv.at("d"));
      m.n = std::stoi(kv.at("n"));
      auto w = weighting_from_string(kv.at("weighting"));
      if (!w) throw Error("bad matrix header");
      m.weighting = *w;
      m.normalized = kv.at("normalized") == "1";
    } catch (const std::exception&) {
      throw Error("bad matrix header");
    }
  }
  m.rows.resize(rows);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    std::istringstream is(lines[li]);
    std::size_t r, c;
    double v;
    if (!(is >> r >> c >> v)) throw Error("bad matrix triplet line");
    if (r >= rows || c >= m.cols) throw Error("matrix triplet out of range");
    m.rows[r].entries.emplace_back(c, v);
  }
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    auto& e = m.rows[i].entries;
    if (!std::is_sorted(e.begin(), e.end(),
                        [](auto& a, auto& b) { return a.first < b.first; }))
      std::sort(e.begin(), e.end());
    if (e.empty()) m.zero_rows.push_back(i);
  }
  return m;
}

inline void write_matrix(const std::string& path, const FeatureMatrix& m) {
  write_text_file(path, matrix_to_text(m));
}

inline FeatureMatrix read_matrix(const std::string& path) {
  return matrix_from_text(read_text_file(path));
}

}  // namespace ngramcal
