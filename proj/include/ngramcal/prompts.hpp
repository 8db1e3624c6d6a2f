#pragma once

// Prompt construction: the baseline QA prompt, the forced-decoding suffix,
// and the generation-based confidence prompt. All renderers are pure
// functions of their inputs; identical inputs give byte-identical prompts.

#include <optional>
#include <string>
#include <vector>

#include "ngramcal/util.hpp"

namespace ngramcal {

// "A, B, C, or D" for 4 options; "A or B" for 2.
inline std::string enumerate_option_letters(std::size_t count) {
  if (count < 2 || count > 26) throw Error("option count must be in [2,26]");
  std::vector<std::string> letters;
  for (std::size_t i = 0; i < count; ++i)
    letters.emplace_back(1, static_cast<char>('A' + i));
  if (count == 2) return letters[0] + " or " + letters[1];
  std::string out;
  for (std::size_t i = 0; i + 1 < count; ++i) out += letters[i] + ", ";
  return out + "or " + letters.back();
}

// Baseline QA prompt; an intervention block, when present, is prepended
// before the question with a blank line separator.
inline std::string build_qa_prompt(
    const std::string& question, const std::vector<std::string>& option_texts,
    const std::optional<std::string>& constraint_block = std::nullopt) {
  std::string en = enumerate_option_letters(option_texts.size());
  std::string p;
  if (constraint_block) {
    p += *constraint_block;
    if (!p.empty() && p.back() != '\n') p += '\n';
    p += '\n';
  }
  p += "You must answer this question by selecting exactly ONE of the options " +
       en + ".\n";
  p += "\n";
  p += "DO NOT:\n";
  p += "- output anything except the required format,\n";
  p += "- include LaTeX commands (bold, emph, etc.),\n";
  p += "- change option letters,\n";
  p += "- add any explanations or additional texts outside the <think> tags.\n";
  p += "\n";
  p += "QUESTION:\n";
  p += question + "\n";
  p += "\n";
  p += "OPTIONS:\n";
  for (std::size_t i = 0; i < option_texts.size(); ++i) {
    p += static_cast<char>('A' + i);
    p += ". " + option_texts[i] + "\n";
  }
  p += "\n";
  p += "REQUIRED OUTPUT FORMAT (must match EXACTLY):\n";
  p += "Final Answer: <OPTION>\n";
  p += "\n";
  p += "Replace <OPTION> with " + en + " ONLY.\n";
  return p;
}

inline constexpr std::string_view kForcedDecodingSuffix = "So, the answer is ";

// The model's own reasoning followed by the answer stem; next-token logprobs
// over the option letters give Eq-style softmax confidences.
inline std::string build_forced_decoding_prompt(const std::string& qa_prompt,
                                                const std::string& reasoning_text) {
  std::string p = qa_prompt;
  if (!p.empty() && p.back() != '\n') p += '\n';
  p += reasoning_text;
  if (!p.empty() && p.back() != '\n') p += '\n';
  p += kForcedDecodingSuffix;
  return p;
}

// Generation-based confidence elicitation for one candidate option.
inline std::string build_confidence_prompt(const std::string& qa_prompt,
                                           const std::string& reasoning_text,
                                           const std::string& candidate_label) {
  std::string p = qa_prompt;
  if (!p.empty() && p.back() != '\n') p += '\n';
  p += reasoning_text;
  if (!p.empty() && p.back() != '\n') p += '\n';
  p += "So, the answer is " + candidate_label +
       ". Now I will rate my confidence on a scale of 1-10. "
       "Please generate only the score. Proposed confidence: ";
  return p;
}

// "7" -> 0.7. Accepts surrounding whitespace and one trailing period;
// anything else (including out-of-range scores) is unparseable.
inline std::optional<double> parse_confidence_score(const std::string& response) {
  std::string t = trim(response);
  if (!t.empty() && t.back() == '.') t.pop_back();
  if (t.empty() || t.size() > 2) return std::nullopt;
  for (char c : t)
    if (c < '0' || c > '9') return std::nullopt;
  int v = std::stoi(t);
  if (v < 1 || v > 10) return std::nullopt;
  return static_cast<double>(v) / 10.0;
}

}  // namespace ngramcal
