#pragma once

// Prompt interventions: rendering the suppression / injection constraint
// blocks from top-k n-grams, parsing them back, and the frequency-shift
// analysis that measures whether a regeneration actually moved usage.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ngramcal/coefficients.hpp"
#include "ngramcal/featurizer.hpp"
#include "ngramcal/trace.hpp"
#include "ngramcal/util.hpp"

namespace ngramcal {

enum class InterventionMode { suppress, inject, suppress_plain };

inline std::string to_string(InterventionMode m) {
  switch (m) {
    case InterventionMode::suppress: return "suppress";
    case InterventionMode::inject: return "inject";
    case InterventionMode::suppress_plain: return "suppress_plain";
  }
  throw Error("invalid intervention mode");
}

inline std::optional<InterventionMode> intervention_mode_from_string(
    const std::string& s) {
  if (s == "suppress") return InterventionMode::suppress;
  if (s == "inject") return InterventionMode::inject;
  if (s == "suppress_plain") return InterventionMode::suppress_plain;
  return std::nullopt;
}

inline RunTag run_tag_for_mode(InterventionMode m) {
  switch (m) {
    case InterventionMode::suppress: return RunTag::suppression;
    case InterventionMode::inject: return RunTag::injection;
    case InterventionMode::suppress_plain: return RunTag::suppression_plain;
  }
  throw Error("invalid intervention mode");
}

namespace detail {

inline constexpr std::string_view kSuppressIntro =
    "To mitigate this, please avoid using the following words or phrases in "
    "your reasoning:";
inline constexpr std::string_view kInjectIntro =
    "In particular, incorporate the following words or phrases naturally in "
    "your reasoning:";
inline constexpr std::string_view kPlainIntro =
    "Please avoid using the following words or phrases in your reasoning.";

}  // namespace detail

// Renders the constraint block for a mode with the n-gram list substituted
// as a comma-joined, period-terminated line. Ends with a newline.
inline std::string render_constraint_block(InterventionMode mode,
                                           const std::vector<std::string>& ngrams) {
  if (ngrams.empty()) throw Error("constraint block needs at least one ngram");
  std::string list = join(ngrams, ", ") + ".";
  std::string b = "IMPORTANT CONSTRAINT:\n";
  switch (mode) {
    case InterventionMode::suppress:
      b += "In your reasoning process, you tend to produce overconfident "
           "answers by using certain words.\n";
      b += std::string(detail::kSuppressIntro) + "\n";
      b += list + "\n";
      b += "If these words would normally appear, please rephrase your "
           "reasoning to avoid them completely.\n";
      break;
    case InterventionMode::inject:
      b += "In your reasoning process, you tend to produce underconfident "
           "answers.\n";
      b += "To counteract this, you should actively use confident and "
           "decisive language.\n";
      b += std::string(detail::kInjectIntro) + "\n";
      b += list + "\n";
      b += "Use them appropriately to express certainty, commitment, and "
           "clear conclusions.\n";
      break;
    case InterventionMode::suppress_plain:
      b += std::string(detail::kPlainIntro) + "\n";
      b += list + "\n";
      b += "If these words would normally appear, please rephrase your "
           "reasoning to avoid them completely.\n";
      break;
  }
  return b;
}

inline std::optional<InterventionMode> detect_intervention_mode(
    const std::string& block) {
  if (block.find(detail::kSuppressIntro) != std::string::npos)
    return InterventionMode::suppress;
  if (block.find(detail::kInjectIntro) != std::string::npos)
    return InterventionMode::inject;
  if (block.find(detail::kPlainIntro) != std::string::npos)
    return InterventionMode::suppress_plain;
  return std::nullopt;
}

// Recovers the n-gram list from a rendered block: the line after the list
// intro, with the trailing period stripped, split on ", ".
inline std::vector<std::string> parse_block_ngrams(const std::string& block) {
  auto mode = detect_intervention_mode(block);
  if (!mode) throw Error("not a recognized constraint block");
  std::string_view intro;
  switch (*mode) {
    case InterventionMode::suppress: intro = detail::kSuppressIntro; break;
    case InterventionMode::inject: intro = detail::kInjectIntro; break;
    case InterventionMode::suppress_plain: intro = detail::kPlainIntro; break;
  }
  auto lines = split_lines(block);
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    if (lines[i] != intro) continue;
    std::string list = lines[i + 1];
    if (list.empty() || list.back() != '.')
      throw Error("constraint list line must end with a period");
    list.pop_back();
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      std::size_t sep = list.find(", ", start);
      if (sep == std::string::npos) {
        out.push_back(list.substr(start));
        break;
      }
      out.push_back(list.substr(start, sep - start));
      start = sep + 2;
    }
    if (out.empty() || out[0].empty())
      throw Error("constraint list line is empty");
    return out;
  }
  throw Error("constraint block has no list line");
}

struct InterventionPlan {
  InterventionMode mode = InterventionMode::suppress;
  std::vector<std::string> ngrams;
  std::string rendered_block;
};

inline InterventionPlan build_intervention_plan(
    InterventionMode mode, const std::vector<std::string>& ngrams) {
  InterventionPlan plan;
  plan.mode = mode;
  plan.ngrams = ngrams;
  plan.rendered_block = render_constraint_block(mode, ngrams);
  return plan;
}

inline nlohmann::json plan_to_json(const InterventionPlan& plan) {
  nlohmann::json j;
  j["mode"] = to_string(plan.mode);
  j["ngrams"] = plan.ngrams;
  j["rendered_block"] = plan.rendered_block;
  return j;
}

inline InterventionPlan plan_from_json(const nlohmann::json& j) {
  InterventionPlan plan;
  try {
    auto mode = intervention_mode_from_string(j.at("mode").get<std::string>());
    if (!mode) throw Error("bad intervention mode");
    plan.mode = *mode;
    plan.ngrams = j.at("ngrams").get<std::vector<std::string>>();
    plan.rendered_block = j.at("rendered_block").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad intervention plan json: ") + e.what());
  }
  return plan;
}

// Occurrences of a space-joined n-gram across tokenized documents.
inline long long count_ngram_occurrences(const std::vector<TokenList>& docs,
                                         const std::string& ngram) {
  TokenList target;
  std::size_t start = 0;
  while (true) {
    std::size_t sep = ngram.find(' ', start);
    if (sep == std::string::npos) {
      target.push_back(ngram.substr(start));
      break;
    }
    target.push_back(ngram.substr(start, sep - start));
    start = sep + 1;
  }
  long long count = 0;
  for (const auto& doc : docs) {
    if (doc.size() < target.size()) continue;
    for (std::size_t i = 0; i + target.size() <= doc.size(); ++i) {
      bool hit = true;
      for (std::size_t k = 0; k < target.size(); ++k)
        if (doc[i + k] != target[k]) {
          hit = false;
          break;
        }
      if (hit) ++count;
    }
  }
  return count;
}

struct FrequencyShift {
  std::string ngram;
  double z_weight = 0.0;
  long long baseline_freq = 0;
  long long regen_freq = 0;
  double change_rate = 0.0;  // (regen - baseline) / max(baseline, 1)
};

// Watchlist entries are (ngram, z-scored weight). Results are sorted by
// |change_rate| descending, ties lexicographically by ngram.
inline std::vector<FrequencyShift> frequency_shifts(
    const std::vector<TokenList>& baseline_docs,
    const std::vector<TokenList>& regen_docs,
    const std::vector<std::pair<std::string, double>>& watchlist) {
  std::vector<FrequencyShift> out;
  out.reserve(watchlist.size());
  for (const auto& [ngram, z] : watchlist) {
    FrequencyShift s;
    s.ngram = ngram;
    s.z_weight = z;
    s.baseline_freq = count_ngram_occurrences(baseline_docs, ngram);
    s.regen_freq = count_ngram_occurrences(regen_docs, ngram);
    s.change_rate = static_cast<double>(s.regen_freq - s.baseline_freq) /
                    static_cast<double>(std::max<long long>(s.baseline_freq, 1));
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(),
            [](const FrequencyShift& a, const FrequencyShift& b) {
              double aa = std::abs(a.change_rate), bb = std::abs(b.change_rate);
              if (aa != bb) return aa > bb;
              return a.ngram < b.ngram;
            });
  return out;
}

// Highest-corpus-frequency rows with a live (non-dagger) weight, as
// (ngram, z_conf) pairs; ties on frequency break lexicographically.
inline std::vector<std::pair<std::string, double>> build_watchlist(
    const std::vector<StandardizedCoefficient>& rows, std::size_t size) {
  std::vector<const StandardizedCoefficient*> live;
  for (const auto& r : rows)
    if (!r.was_zero) live.push_back(&r);
  std::sort(live.begin(), live.end(),
            [](const StandardizedCoefficient* a,
               const StandardizedCoefficient* b) {
              if (a->corpus_freq != b->corpus_freq)
                return a->corpus_freq > b->corpus_freq;
              return a->ngram < b->ngram;
            });
  if (live.size() > size) live.resize(size);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(live.size());
  for (const auto* r : live) out.emplace_back(r->ngram, r->z_conf);
  return out;
}

inline std::string shifts_to_csv(const std::vector<FrequencyShift>& shifts) {
  std::string out = "ngram,z_weight,baseline_freq,regen_freq,change_rate\n";
  for (const auto& s : shifts) {
    out += s.ngram + "," + fmt_double(s.z_weight) + "," +
           std::to_string(s.baseline_freq) + "," + std::to_string(s.regen_freq) +
           "," + fmt_double(s.change_rate) + "\n";
  }
  return out;
}

}  // namespace ngramcal
