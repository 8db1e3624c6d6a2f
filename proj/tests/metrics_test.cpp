#include "ngramcal/metrics.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace ngramcal;
using Catch::Matchers::WithinAbs;

namespace {

ConfidenceRecord rec(const std::string& id, double conf, int correct) {
  ConfidenceRecord r;
  r.trace_id = id;
  r.confidence = conf;
  r.correctness = correct;
  return r;
}

// The 6-record hand fixture used for every frozen value below.
std::vector<ConfidenceRecord> hand_fixture() {
  return {rec("t1", 0.95, 1), rec("t2", 0.80, 1), rec("t3", 0.72, 0),
          rec("t4", 0.55, 1), rec("t5", 0.30, 0), rec("t6", 1.00, 1)};
}

// Pair-enumeration AUROC: P(conf_pos > conf_neg) + 0.5 P(equal).
double auroc_by_pairs(const std::vector<ConfidenceRecord>& rs) {
  double s = 0.0;
  std::size_t np = 0, nn = 0;
  for (const auto& p : rs) {
    if (!p.correctness) continue;
    ++np;
    for (const auto& n : rs) {
      if (n.correctness) continue;
      if (p.confidence > n.confidence)
        s += 1.0;
      else if (p.confidence == n.confidence)
        s += 0.5;
    }
  }
  for (const auto& n : rs) nn += 1 - n.correctness;
  return s / (static_cast<double>(np) * static_cast<double>(nn));
}

}  // namespace

TEST_CASE("equal-width binning puts confidence 1.0 in the top bin") {
  CHECK(bin_index(0.0, 10) == 0);
  CHECK(bin_index(0.09999, 10) == 0);
  CHECK(bin_index(0.1, 10) == 1);
  CHECK(bin_index(0.9999, 10) == 9);
  CHECK(bin_index(1.0, 10) == 9);
  CHECK(bin_index(1.0, 4) == 3);
  CHECK(bin_index(0.5, 1) == 0);
}

TEST_CASE("ece matches hand-enumerated values") {
  auto rs = hand_fixture();
  CHECK_THAT(expected_calibration_error(rs, 4),
             WithinAbs(0.1366666666666667, 1e-12));
  CHECK_THAT(expected_calibration_error(rs, 10),
             WithinAbs(0.2866666666666666, 1e-12));
  SECTION("perfectly calibrated degenerate case") {
    std::vector<ConfidenceRecord> perfect = {rec("a", 1.0, 1), rec("b", 1.0, 1)};
    CHECK(expected_calibration_error(perfect, 10) == 0.0);
  }
}

TEST_CASE("ace matches hand-enumerated values") {
  auto rs = hand_fixture();
  CHECK_THAT(adaptive_calibration_error(rs, 3), WithinAbs(0.12, 1e-12));
  CHECK_THAT(adaptive_calibration_error(rs, 4), WithinAbs(0.09625, 1e-12));
  // more bins than records: every record becomes its own group
  CHECK_THAT(adaptive_calibration_error(rs, 10),
             WithinAbs(0.2866666666666667, 1e-12));
  SECTION("equal confidences group by trace id deterministically") {
    std::vector<ConfidenceRecord> tied = {rec("b", 0.5, 1), rec("a", 0.5, 0),
                                          rec("c", 0.5, 1)};
    // sorted by (conf, id): a0 b1 | c1 -> groups (a,b) and (c) with bins=2
    double want = (std::abs(0.5 - 0.5) + std::abs(1.0 - 0.5)) / 2.0;
    CHECK_THAT(adaptive_calibration_error(tied, 2), WithinAbs(want, 1e-15));
  }
}

TEST_CASE("brier score matches the hand fixture") {
  CHECK_THAT(brier_score(hand_fixture()),
             WithinAbs(0.1422333333333333, 1e-12));
  CHECK(brier_score({rec("a", 1.0, 1)}) == 0.0);
  CHECK(brier_score({rec("a", 0.0, 1)}) == 1.0);
}

TEST_CASE("auroc matches hand values and handles ties") {
  auto rs = hand_fixture();
  auto a = auroc(rs);
  REQUIRE(a.has_value());
  CHECK_THAT(*a, WithinAbs(0.875, 1e-15));
  SECTION("a cross-class tie earns half credit") {
    rs.push_back(rec("t7", 0.72, 1));
    CHECK_THAT(*auroc(rs), WithinAbs(0.85, 1e-15));
  }
  SECTION("single-class inputs have no auroc") {
    CHECK(!auroc({rec("a", 0.9, 1), rec("b", 0.8, 1)}).has_value());
    CHECK(!auroc({rec("a", 0.9, 0)}).has_value());
  }
}

TEST_CASE("rank-based auroc equals pair enumeration exactly") {
  std::mt19937_64 rng(2024);
  std::vector<ConfidenceRecord> rs;
  for (int i = 0; i < 200; ++i) {
    // quantized confidences force plenty of ties
    double c = static_cast<double>(rng() % 21) / 20.0;
    rs.push_back(rec("r" + std::to_string(i), c, rng() % 3 ? 1 : 0));
  }
  auto fast = auroc(rs);
  REQUIRE(fast.has_value());
  CHECK(*fast == auroc_by_pairs(rs));  // bitwise equal
}

TEST_CASE("calibration curve covers [0,1] with empty bins as nulls") {
  auto rs = hand_fixture();
  auto curve = calibration_curve(rs, 10);
  REQUIRE(curve.size() == 10);
  std::size_t total = 0;
  for (int b = 0; b < 10; ++b) {
    CHECK_THAT(curve[b].lo, WithinAbs(b / 10.0, 1e-15));
    CHECK_THAT(curve[b].hi, WithinAbs((b + 1) / 10.0, 1e-15));
    total += curve[b].count;
    CHECK(curve[b].conf.has_value() == (curve[b].count > 0));
  }
  CHECK(total == rs.size());
  CHECK(curve[0].count == 0);
  CHECK(curve[9].count == 2);  // 0.95 and 1.00
  REQUIRE(curve[9].conf.has_value());
  CHECK_THAT(*curve[9].conf, WithinAbs(0.975, 1e-12));
  CHECK_THAT(*curve[9].acc, WithinAbs(1.0, 1e-15));
}

TEST_CASE("full report assembles every metric") {
  auto rep = calibration_report(hand_fixture(), 4);
  CHECK_THAT(rep.ece, WithinAbs(0.1366666666666667, 1e-12));
  CHECK_THAT(rep.ace, WithinAbs(0.09625, 1e-12));
  CHECK_THAT(rep.brier, WithinAbs(0.1422333333333333, 1e-12));
  REQUIRE(rep.auroc.has_value());
  CHECK_THAT(*rep.auroc, WithinAbs(0.875, 1e-15));
  CHECK_THAT(rep.accuracy, WithinAbs(2.0 / 3.0, 1e-15));
  CHECK(rep.n_samples == 6);
  CHECK(rep.curve.size() == 4);

  auto j = report_to_json(rep);
  for (const char* key :
       {"ece", "ace", "brier", "auroc", "accuracy", "n_samples", "curve"})
    CHECK(j.contains(key));
  CHECK(j["curve"].size() == 4);
  CHECK(j["curve"][0].contains("lo"));
  CHECK(j["curve"][0].contains("count"));

  SECTION("auroc serializes as null when undefined") {
    auto rep1 = calibration_report({rec("a", 0.9, 1), rec("b", 0.7, 1)}, 2);
    auto j1 = report_to_json(rep1);
    CHECK(j1["auroc"].is_null());
  }
}

TEST_CASE("curve csv formatting") {
  std::vector<ConfidenceRecord> rs = {rec("a", 0.25, 0), rec("b", 0.75, 1)};
  std::string csv = curve_to_csv(calibration_curve(rs, 2));
  CHECK(csv ==
        "lo,hi,conf,acc,count\n"
        "0.0,0.5,0.25,0.0,1\n"
        "0.5,1.0,0.75,1.0,1\n");
}

TEST_CASE("metric input validation") {
  CHECK_THROWS_AS(expected_calibration_error({}, 10), Error);
  CHECK_THROWS_AS(brier_score({}), Error);
  CHECK_THROWS_AS(expected_calibration_error({rec("a", 1.2, 1)}, 10), Error);
  CHECK_THROWS_AS(expected_calibration_error({rec("a", -0.1, 0)}, 10), Error);
  CHECK_THROWS_AS(expected_calibration_error({rec("a", 0.5, 1)}, 0), Error);
}
