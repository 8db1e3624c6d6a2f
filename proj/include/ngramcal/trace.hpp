#pragma once

// Reasoning-trace data model: JSONL ingest with schema validation, reasoning
// segment extraction, final-answer parsing, and forced-decoding confidence.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "ngramcal/util.hpp"

namespace ngramcal {

enum class RunTag { baseline, suppression, injection, suppression_plain };

inline std::string to_string(RunTag tag) {
  switch (tag) {
    case RunTag::baseline: return "baseline";
    case RunTag::suppression: return "suppression";
    case RunTag::injection: return "injection";
    case RunTag::suppression_plain: return "suppression_plain";
  }
  throw Error("invalid run tag");
}

inline std::optional<RunTag> run_tag_from_string(const std::string& s) {
  if (s == "baseline") return RunTag::baseline;
  if (s == "suppression") return RunTag::suppression;
  if (s == "injection") return RunTag::injection;
  if (s == "suppression_plain") return RunTag::suppression_plain;
  return std::nullopt;
}

// reasoning: trace wrapped in <think> tags; instruct: plain step-by-step text.
enum class ModelKind { reasoning, instruct };

inline std::string to_string(ModelKind kind) {
  return kind == ModelKind::reasoning ? "reasoning" : "instruct";
}

inline std::optional<ModelKind> model_kind_from_string(const std::string& s) {
  if (s == "reasoning") return ModelKind::reasoning;
  if (s == "instruct") return ModelKind::instruct;
  return std::nullopt;
}

struct ReasoningTrace {
  std::string trace_id;
  std::string model_id;
  std::string dataset_id;
  std::string question;
  std::vector<std::string> option_labels;  // single uppercase letters, unique
  std::vector<std::string> option_texts;   // same length as option_labels
  std::string raw_output;
  std::string reasoning_text;
  std::map<std::string, double> option_logprobs;  // one finite entry per label
  std::optional<std::string> chosen_label;        // absent when unparseable
  std::string gold_label;
  RunTag run_tag = RunTag::baseline;
};

// Returns the first schema violation as a short reason key, or nullopt if valid.
inline std::optional<std::string> validate_trace(const ReasoningTrace& t) {
  if (t.trace_id.empty() || t.model_id.empty() || t.dataset_id.empty())
    return "missing_field";
  std::size_t j = t.option_labels.size();
  if (j < 2 || j > 26) return "bad_option_count";
  std::set<std::string> seen;
  for (const auto& lab : t.option_labels) {
    if (lab.size() != 1 || lab[0] < 'A' || lab[0] > 'Z') return "bad_option_label";
    if (!seen.insert(lab).second) return "duplicate_option_label";
  }
  if (t.option_texts.size() != j) return "option_texts_mismatch";
  if (!seen.count(t.gold_label)) return "gold_label_not_an_option";
  if (t.chosen_label && !seen.count(*t.chosen_label))
    return "chosen_label_not_an_option";
  if (t.option_logprobs.size() != j) return "logprobs_label_mismatch";
  for (const auto& [lab, lp] : t.option_logprobs) {
    if (!seen.count(lab)) return "logprobs_label_mismatch";
    if (!std::isfinite(lp)) return "nonfinite_logprob";
  }
  return std::nullopt;
}

inline nlohmann::json trace_to_json(const ReasoningTrace& t) {
  nlohmann::json j;
  j["trace_id"] = t.trace_id;
  j["model_id"] = t.model_id;
  j["dataset_id"] = t.dataset_id;
  j["question"] = t.question;
  j["option_labels"] = t.option_labels;
  j["option_texts"] = t.option_texts;
  j["raw_output"] = t.raw_output;
  j["reasoning_text"] = t.reasoning_text;
  j["option_logprobs"] = t.option_logprobs;
  if (t.chosen_label)
    j["chosen_label"] = *t.chosen_label;
  else
    j["chosen_label"] = nullptr;
  j["gold_label"] = t.gold_label;
  j["run_tag"] = to_string(t.run_tag);
  return j;
}

inline ReasoningTrace trace_from_json(const nlohmann::json& j) {
  ReasoningTrace t;
  try {
    t.trace_id = j.at("trace_id").get<std::string>();
    t.model_id = j.at("model_id").get<std::string>();
    t.dataset_id = j.at("dataset_id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    t.option_labels = j.at("option_labels").get<std::vector<std::string>>();
    t.option_texts = j.at("option_texts").get<std::vector<std::string>>();
    t.raw_output = j.at("raw_output").get<std::string>();
    t.reasoning_text = j.at("reasoning_text").get<std::string>();
    t.option_logprobs =
        j.at("option_logprobs").get<std::map<std::string, double>>();
    if (j.contains("chosen_label") && !j.at("chosen_label").is_null())
      t.chosen_label = j.at("chosen_label").get<std::string>();
    t.gold_label = j.at("gold_label").get<std::string>();
    auto tag = run_tag_from_string(j.at("run_tag").get<std::string>());
    if (!tag) throw Error("bad_run_tag");
    t.run_tag = *tag;
  } catch (const nlohmann::json::exception&) {
    throw Error("missing_field");
  }
  return t;
}

struct SkipReport {
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> reasons;
};

inline nlohmann::json skip_report_to_json(const SkipReport& r) {
  nlohmann::json j;
  j["skipped"] = r.skipped;
  j["reasons"] = r.reasons;
  return j;
}

struct IngestResult {
  std::vector<ReasoningTrace> traces;
  SkipReport skip;
};

enum class Strictness { strict, lenient };

// Strict: first malformed record throws. Lenient: malformed records are
// counted per reason and skipped. Duplicate trace ids are fatal either way.
inline IngestResult ingest_trace_lines(const std::vector<std::string>& lines,
                                       Strictness strictness,
                                       const std::string& source = "<input>") {
  IngestResult result;
  std::set<std::string> ids;
  std::size_t lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::string reason;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      ReasoningTrace t = trace_from_json(j);
      if (auto bad = validate_trace(t)) {
        reason = *bad;
      } else if (!ids.insert(t.trace_id).second) {
        throw Error(source + ":" + std::to_string(lineno) +
                    ": duplicate trace_id '" + t.trace_id + "'");
      } else {
        result.traces.push_back(std::move(t));
        continue;
      }
    } catch (const nlohmann::json::exception&) {
      reason = "bad_json";
    } catch (const Error& e) {
      std::string what = e.what();
      if (what.find("duplicate trace_id") != std::string::npos) throw;
      reason = what;
    }
    if (strictness == Strictness::strict)
      throw Error(source + ":" + std::to_string(lineno) +
                  ": invalid trace record (" + reason + ")");
    ++result.skip.skipped;
    ++result.skip.reasons[reason];
  }
  return result;
}

inline IngestResult ingest_traces(const std::string& path,
                                  Strictness strictness) {
  return ingest_trace_lines(split_lines(read_text_file(path)), strictness, path);
}

inline std::string traces_to_jsonl(const std::vector<ReasoningTrace>& traces) {
  std::string out;
  for (const auto& t : traces) {
    out += trace_to_json(t).dump();
    out += '\n';
  }
  return out;
}

inline void write_traces_jsonl(const std::string& path,
                               const std::vector<ReasoningTrace>& traces) {
  write_text_file(path, traces_to_jsonl(traces));
}

struct SegmentResult {
  std::string text;
  bool used_fallback = false;  // delimiters missing, whole output (or tail) used
};

namespace detail {

// Matches "Final Answer: X" (optionally "X.") with flexible whitespace.
// The prefix is case sensitive; the letter keeps its case.
inline std::optional<char> match_final_answer_line(std::string_view line) {
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  };
  auto expect = [&](std::string_view word) {
    if (line.substr(i, word.size()) != word) return false;
    i += word.size();
    return true;
  };
  skip_ws();
  if (!expect("Final")) return std::nullopt;
  if (i >= line.size() || (line[i] != ' ' && line[i] != '\t')) return std::nullopt;
  skip_ws();
  if (!expect("Answer")) return std::nullopt;
  skip_ws();
  if (!expect(":")) return std::nullopt;
  skip_ws();
  if (i >= line.size()) return std::nullopt;
  char letter = line[i];
  if (!((letter >= 'A' && letter <= 'Z') || (letter >= 'a' && letter <= 'z')))
    return std::nullopt;
  ++i;
  skip_ws();
  if (i < line.size() && line[i] == '.') {
    ++i;
    skip_ws();
  }
  if (i != line.size()) return std::nullopt;
  return letter;
}

// Byte offset of the start of the last line matching the final-answer format,
// or npos. Also reports the matched letter.
inline std::size_t find_last_final_answer_line(std::string_view text,
                                               char* letter_out = nullptr) {
  std::size_t best = std::string_view::npos;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    std::size_t len =
        (end == std::string_view::npos ? text.size() : end) - start;
    if (auto letter = match_final_answer_line(text.substr(start, len))) {
      best = start;
      if (letter_out) *letter_out = *letter;
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return best;
}

}  // namespace detail

// Reasoning models: text strictly between the first <think> and the first
// </think> after it. Instruct models: text after the step-by-step cue, up to
// the final-answer line. Missing delimiters fall back to the whole output.
inline SegmentResult extract_reasoning_segment(const std::string& raw_output,
                                               ModelKind kind) {
  if (kind == ModelKind::reasoning) {
    static constexpr std::string_view kOpen = "<think>";
    static constexpr std::string_view kClose = "</think>";
    std::size_t open = raw_output.find(kOpen);
    if (open == std::string::npos) return {raw_output, true};
    std::size_t body = open + kOpen.size();
    std::size_t close = raw_output.find(kClose, body);
    if (close == std::string::npos) return {raw_output, true};
    return {raw_output.substr(body, close - body), false};
  }
  static constexpr std::string_view kCue = "Let's think step by step.";
  std::size_t cue = raw_output.find(kCue);
  if (cue == std::string::npos) return {raw_output, true};
  std::size_t body = cue + kCue.size();
  std::string_view tail(raw_output.data() + body, raw_output.size() - body);
  std::size_t fa = detail::find_last_final_answer_line(tail);
  if (fa == std::string_view::npos) return {std::string(tail), true};
  std::string_view segment = tail.substr(0, fa);
  if (!segment.empty() && segment.back() == '\n')
    segment.remove_suffix(1);
  return {std::string(segment), false};
}

// Chosen option: letter from the last "Final Answer: X" line, else a bare
// letter on the last non-empty line. Must be one of the declared labels.
inline std::optional<std::string> parse_final_answer(
    const std::string& raw_output, const std::vector<std::string>& labels) {
  auto is_label = [&](char c) {
    std::string s(1, c);
    return std::find(labels.begin(), labels.end(), s) != labels.end();
  };
  char letter = 0;
  if (detail::find_last_final_answer_line(raw_output, &letter) !=
      std::string::npos) {
    if (is_label(letter)) return std::string(1, letter);
    return std::nullopt;
  }
  auto lines = split_lines(raw_output);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string t = trim(*it);
    if (t.empty()) continue;
    if (t.size() == 2 && t[1] == '.') t.pop_back();
    if (t.size() == 1 && is_label(t[0])) return t;
    return std::nullopt;
  }
  return std::nullopt;
}

// Softmax over the option logprobs restricted to the candidate set:
//   P(x_i) = exp(lp_i) / sum_j exp(lp_j), computed with max subtraction.
inline std::map<std::string, double> forced_decoding_confidence(
    const std::map<std::string, double>& option_logprobs) {
  if (option_logprobs.empty()) throw Error("empty option logprob set");
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& [lab, lp] : option_logprobs) {
    if (!std::isfinite(lp)) throw Error("non-finite logprob for option " + lab);
    mx = std::max(mx, lp);
  }
  std::map<std::string, double> out;
  double sum = 0.0;
  for (const auto& [lab, lp] : option_logprobs) {
    double e = std::exp(lp - mx);
    out[lab] = e;
    sum += e;
  }
  for (auto& [lab, v] : out) v /= sum;
  return out;
}

struct ConfidenceRecord {
  std::string trace_id;
  double confidence = 0.0;
  int correctness = 0;  // 1 iff chosen_label == gold_label
  bool unparsed = false;
};

// Confidence is the softmax mass of the chosen option. Traces without a
// parseable choice score correctness 0 and take the argmax option's mass
// (smallest label on ties), flagged unparsed.
inline ConfidenceRecord label_correctness(const ReasoningTrace& t) {
  auto conf = forced_decoding_confidence(t.option_logprobs);
  ConfidenceRecord rec;
  rec.trace_id = t.trace_id;
  if (t.chosen_label) {
    auto it = conf.find(*t.chosen_label);
    if (it == conf.end()) throw Error("chosen label has no logprob entry");
    rec.confidence = it->second;
    rec.correctness = (*t.chosen_label == t.gold_label) ? 1 : 0;
  } else {
    auto best = conf.begin();
    for (auto it = std::next(conf.begin()); it != conf.end(); ++it)
      if (it->second > best->second) best = it;
    rec.confidence = best->second;
    rec.correctness = 0;
    rec.unparsed = true;
  }
  return rec;
}

inline std::vector<ConfidenceRecord> label_correctness(
    const std::vector<ReasoningTrace>& traces) {
  std::vector<ConfidenceRecord> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(label_correctness(t));
  return out;
}

}  // namespace ngramcal
