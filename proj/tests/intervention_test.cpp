#include "ngramcal/intervention.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace ngramcal;
using Catch::Matchers::WithinAbs;

namespace {

std::string golden(const std::string& name) {
  return read_text_file(std::string(NGRAMCAL_TEST_DATA_DIR) + "/golden/" + name);
}

}  // namespace

TEST_CASE("constraint blocks match the goldens byte for byte") {
  CHECK(render_constraint_block(InterventionMode::suppress,
                                {"wait", "seems", "maybe check"}) ==
        golden("suppression_block.txt"));
  CHECK(render_constraint_block(InterventionMode::inject,
                                {"definitely", "clearly", "certainly the answer"}) ==
        golden("injection_block.txt"));
  CHECK(render_constraint_block(InterventionMode::suppress_plain,
                                {"wait", "seems", "maybe check"}) ==
        golden("suppression_plain_block.txt"));
  CHECK_THROWS_AS(render_constraint_block(InterventionMode::suppress, {}),
                  Error);
}

TEST_CASE("plain suppression omits the overconfidence sentence") {
  auto with = render_constraint_block(InterventionMode::suppress, {"wait"});
  auto without =
      render_constraint_block(InterventionMode::suppress_plain, {"wait"});
  CHECK(with.find("overconfident") != std::string::npos);
  CHECK(without.find("overconfident") == std::string::npos);
}

TEST_CASE("rendered blocks round-trip through the parser") {
  std::vector<std::string> ngrams = {"wait", "let me", "check the options",
                                     "hmm"};
  for (auto mode : {InterventionMode::suppress, InterventionMode::inject,
                    InterventionMode::suppress_plain}) {
    auto block = render_constraint_block(mode, ngrams);
    CHECK(detect_intervention_mode(block) == mode);
    CHECK(parse_block_ngrams(block) == ngrams);
  }
  CHECK_THROWS_AS(parse_block_ngrams("unrelated text"), Error);
}

TEST_CASE("intervention plan json round-trip") {
  auto plan = build_intervention_plan(InterventionMode::inject,
                                      {"clearly", "without doubt"});
  auto j = plan_to_json(plan);
  CHECK(j.at("mode") == "inject");
  CHECK(j.at("ngrams").size() == 2);
  CHECK(j.at("rendered_block").get<std::string>() == plan.rendered_block);
  auto back = plan_from_json(j);
  CHECK(back.mode == plan.mode);
  CHECK(back.ngrams == plan.ngrams);
  CHECK(back.rendered_block == plan.rendered_block);
  CHECK(parse_block_ngrams(back.rendered_block) == plan.ngrams);
}

TEST_CASE("run tags for each mode") {
  CHECK(run_tag_for_mode(InterventionMode::suppress) == RunTag::suppression);
  CHECK(run_tag_for_mode(InterventionMode::inject) == RunTag::injection);
  CHECK(run_tag_for_mode(InterventionMode::suppress_plain) ==
        RunTag::suppression_plain);
}

TEST_CASE("ngram occurrence counting over token windows") {
  std::vector<TokenList> docs = {
      tokenize("wait let me think wait let me"),
      tokenize("no hesitation here"),
      tokenize("wait wait wait"),
  };
  CHECK(count_ngram_occurrences(docs, "wait") == 5);
  CHECK(count_ngram_occurrences(docs, "let me") == 2);
  CHECK(count_ngram_occurrences(docs, "wait wait") == 2);  // overlapping
  CHECK(count_ngram_occurrences(docs, "absent") == 0);
  CHECK(count_ngram_occurrences(docs, "wait let me think") == 1);
}

TEST_CASE("frequency shifts with the floored denominator") {
  std::vector<TokenList> base = {
      tokenize("wait let me think wait"),
      tokenize("seems unclear seems"),
  };
  std::vector<TokenList> regen = {
      tokenize("let me think"),
      tokenize("clear and direct clear"),
  };
  std::vector<std::pair<std::string, double>> watch = {
      {"wait", 2.1}, {"seems", 1.4}, {"clear", -0.5}, {"absent", 0.9}};
  auto shifts = frequency_shifts(base, regen, watch);
  REQUIRE(shifts.size() == 4);
  // change rates: wait (0-2)/2 = -1 ; seems (0-2)/2 = -1 ;
  // clear (2-0)/max(0,1) = 2 ; absent 0/1 = 0
  CHECK(shifts[0].ngram == "clear");
  CHECK_THAT(shifts[0].change_rate, WithinAbs(2.0, 1e-15));
  CHECK(shifts[0].baseline_freq == 0);
  CHECK(shifts[0].regen_freq == 2);
  // |−1| tie between seems and wait: lexicographic
  CHECK(shifts[1].ngram == "seems");
  CHECK(shifts[2].ngram == "wait");
  CHECK_THAT(shifts[2].change_rate, WithinAbs(-1.0, 1e-15));
  CHECK(shifts[3].ngram == "absent");
  CHECK_THAT(shifts[3].change_rate, WithinAbs(0.0, 1e-15));
  CHECK(shifts[3].z_weight == 0.9);
}

TEST_CASE("watchlist takes the most frequent live rows") {
  std::vector<StandardizedCoefficient> rows;
  auto add = [&](const std::string& g, double z, long long freq, bool wz) {
    StandardizedCoefficient r;
    r.ngram = g;
    r.z_conf = z;
    r.corpus_freq = freq;
    r.was_zero = wz;
    rows.push_back(r);
  };
  add("common", 1.0, 500, false);
  add("dagger", 9.9, 900, true);  // excluded: zero lasso weight
  add("mid", -0.5, 200, false);
  add("rare", 2.0, 10, false);
  add("tie_a", 0.1, 200, false);

  auto watch = build_watchlist(rows, 3);
  REQUIRE(watch.size() == 3);
  CHECK(watch[0] == std::pair<std::string, double>{"common", 1.0});
  CHECK(watch[1].first == "mid");  // 200 tie: "mid" < "tie_a"
  CHECK(watch[2].first == "tie_a");
}

TEST_CASE("shift csv formatting") {
  std::vector<FrequencyShift> shifts(1);
  shifts[0].ngram = "let me";
  shifts[0].z_weight = 1.25;
  shifts[0].baseline_freq = 8;
  shifts[0].regen_freq = 2;
  shifts[0].change_rate = -0.75;
  CHECK(shifts_to_csv(shifts) ==
        "ngram,z_weight,baseline_freq,regen_freq,change_rate\n"
        "let me,1.25,8,2,-0.75\n");
}
