#pragma once

// Calibration metrics over (confidence, correctness) records: ECE on
// equal-width bins, ACE on equal-count bins, Brier score, rank-based AUROC,
// and the reliability curve with its JSON/CSV serializations.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ngramcal/trace.hpp"
#include "ngramcal/util.hpp"

namespace ngramcal {

// Equal-width bin over [0,1]; confidence 1.0 lands in the top bin.
inline int bin_index(double confidence, int bins) {
  return std::min(static_cast<int>(std::floor(confidence * bins)), bins - 1);
}

namespace detail {

inline void validate_records(const std::vector<ConfidenceRecord>& records,
                             int bins) {
  if (records.empty()) throw Error("no confidence records");
  if (bins < 1) throw Error("bin count must be >= 1");
  for (const auto& r : records)
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
      throw Error("confidence outside [0,1] for trace " + r.trace_id);
}

}  // namespace detail

inline double accuracy(const std::vector<ConfidenceRecord>& records) {
  if (records.empty()) throw Error("no confidence records");
  double s = 0.0;
  for (const auto& r : records) s += r.correctness;
  return s / static_cast<double>(records.size());
}

// ECE = sum_m |B_m|/N * |acc(B_m) - conf(B_m)| over equal-width bins.
inline double expected_calibration_error(
    const std::vector<ConfidenceRecord>& records, int bins = 10) {
  detail::validate_records(records, bins);
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (const auto& r : records) {
    int b = bin_index(r.confidence, bins);
    conf_sum[b] += r.confidence;
    acc_sum[b] += r.correctness;
    ++count[b];
  }
  double total = 0.0;
  const double N = static_cast<double>(records.size());
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    double c = static_cast<double>(count[b]);
    total += c / N * std::abs(acc_sum[b] / c - conf_sum[b] / c);
  }
  return total;
}

// ACE: sort by (confidence, trace_id), cut into `bins` contiguous groups
// with the first N mod bins groups one element larger, then average
// |acc - conf| over the non-empty groups.
inline double adaptive_calibration_error(
    const std::vector<ConfidenceRecord>& records, int bins = 10) {
  detail::validate_records(records, bins);
  std::vector<const ConfidenceRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ConfidenceRecord* a, const ConfidenceRecord* b) {
                     if (a->confidence != b->confidence)
                       return a->confidence < b->confidence;
                     return a->trace_id < b->trace_id;
                   });
  const std::size_t N = sorted.size();
  std::size_t base = N / bins, extra = N % bins, at = 0;
  double total = 0.0;
  int nonempty = 0;
  for (int b = 0; b < bins; ++b) {
    std::size_t size = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
    if (size == 0) continue;
    double conf = 0.0, acc = 0.0;
    for (std::size_t i = at; i < at + size; ++i) {
      conf += sorted[i]->confidence;
      acc += sorted[i]->correctness;
    }
    at += size;
    total += std::abs(acc / size - conf / size);
    ++nonempty;
  }
  return total / nonempty;
}

inline double brier_score(const std::vector<ConfidenceRecord>& records) {
  detail::validate_records(records, 1);
  double s = 0.0;
  for (const auto& r : records) {
    double d = r.confidence - r.correctness;
    s += d * d;
  }
  return s / static_cast<double>(records.size());
}

// Mann-Whitney AUROC with half credit for ties, computed from average ranks:
//   AUC = (R_pos - n_pos(n_pos+1)/2) / (n_pos * n_neg).
// Returns nullopt when either class is absent.
inline std::optional<double> auroc(
    const std::vector<ConfidenceRecord>& records) {
  detail::validate_records(records, 1);
  std::vector<std::pair<double, int>> scored;
  scored.reserve(records.size());
  for (const auto& r : records) scored.emplace_back(r.confidence, r.correctness);
  std::sort(scored.begin(), scored.end());
  std::size_t n_pos = 0;
  for (auto& [c, a] : scored) n_pos += a;
  std::size_t n_neg = scored.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j + 1 < scored.size() && scored[j + 1].first == scored[i].first) ++j;
    double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (scored[k].second) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

struct CurvePoint {
  double lo = 0.0, hi = 0.0;                  // bin edges, [lo, hi)
  std::optional<double> conf, acc;            // absent for empty bins
  std::size_t count = 0;
};

inline std::vector<CurvePoint> calibration_curve(
    const std::vector<ConfidenceRecord>& records, int bins = 10) {
  detail::validate_records(records, bins);
  std::vector<CurvePoint> curve(bins);
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  for (const auto& r : records) {
    int b = bin_index(r.confidence, bins);
    conf_sum[b] += r.confidence;
    acc_sum[b] += r.correctness;
    ++curve[b].count;
  }
  for (int b = 0; b < bins; ++b) {
    curve[b].lo = static_cast<double>(b) / bins;
    curve[b].hi = static_cast<double>(b + 1) / bins;
    if (curve[b].count) {
      curve[b].conf = conf_sum[b] / curve[b].count;
      curve[b].acc = acc_sum[b] / curve[b].count;
    }
  }
  return curve;
}

struct CalibrationReport {
  double ece = 0.0;
  double ace = 0.0;
  double brier = 0.0;
  std::optional<double> auroc;
  double accuracy = 0.0;
  std::size_t n_samples = 0;
  std::vector<CurvePoint> curve;
};

inline CalibrationReport calibration_report(
    const std::vector<ConfidenceRecord>& records, int bins = 10) {
  CalibrationReport rep;
  rep.ece = expected_calibration_error(records, bins);
  rep.ace = adaptive_calibration_error(records, bins);
  rep.brier = brier_score(records);
  rep.auroc = auroc(records);
  rep.accuracy = accuracy(records);
  rep.n_samples = records.size();
  rep.curve = calibration_curve(records, bins);
  return rep;
}

inline nlohmann::json report_to_json(const CalibrationReport& rep) {
  nlohmann::json j;
  j["ece"] = rep.ece;
  j["ace"] = rep.ace;
  j["brier"] = rep.brier;
  if (rep.auroc)
    j["auroc"] = *rep.auroc;
  else
    j["auroc"] = nullptr;
  j["accuracy"] = rep.accuracy;
  j["n_samples"] = rep.n_samples;
  j["curve"] = nlohmann::json::array();
  for (const auto& p : rep.curve) {
    nlohmann::json q;
    q["lo"] = p.lo;
    q["hi"] = p.hi;
    q["conf"] = p.conf ? nlohmann::json(*p.conf) : nlohmann::json(nullptr);
    q["acc"] = p.acc ? nlohmann::json(*p.acc) : nlohmann::json(nullptr);
    q["count"] = p.count;
    j["curve"].push_back(q);
  }
  return j;
}

inline std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "lo,hi,conf,acc,count\n";
  for (const auto& p : curve) {
    out += fmt_double(p.lo) + "," + fmt_double(p.hi) + ",";
    out += (p.conf ? fmt_double(*p.conf) : "") + ",";
    out += (p.acc ? fmt_double(*p.acc) : "") + ",";
    out += std::to_string(p.count) + "\n";
  }
  return out;
}

}  // namespace ngramcal
