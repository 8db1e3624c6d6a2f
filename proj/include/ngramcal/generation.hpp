#pragma once

// Experiment campaign plumbing: generation endpoint configuration, a
// chat-completion-style transport (stub for tests, HTTP for live runs),
// bounded-concurrency campaign execution with retry and append-only
// JSONL checkpointing.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "ngramcal/intervention.hpp"
#include "ngramcal/prompts.hpp"
#include "ngramcal/trace.hpp"
#include "ngramcal/util.hpp"

namespace ngramcal {

struct GenerationConfig {
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.6;
  double top_p = 0.95;
  int max_new_tokens = 32768;
  std::uint64_t seed = 42;
  std::string auth_token_env = "NGRAMCAL_API_TOKEN";
  int max_in_flight = 1;
};

inline void validate(const GenerationConfig& c) {
  if (!(c.temperature >= 0.0)) throw Error("temperature must be >= 0");
  if (!(c.top_p > 0.0 && c.top_p <= 1.0)) throw Error("top_p must be in (0,1]");
  if (c.max_new_tokens < 1) throw Error("max_new_tokens must be >= 1");
  if (c.max_in_flight < 1) throw Error("max_in_flight must be >= 1");
}

// Plain "key = value" file; '#' starts a comment. Unknown keys are errors.
inline GenerationConfig generation_config_from_file(const std::string& path) {
  GenerationConfig c;
  for (const auto& raw : split_lines(read_text_file(path))) {
    std::string line = raw.substr(0, raw.find('#'));
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path + ": expected 'key = value', got '" + trim(line) + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "endpoint_url")
        c.endpoint_url = val;
      else if (key == "model_name")
        c.model_name = val;
      else if (key == "temperature")
        c.temperature = std::stod(val);
      else if (key == "top_p")
        c.top_p = std::stod(val);
      else if (key == "max_new_tokens")
        c.max_new_tokens = std::stoi(val);
      else if (key == "seed")
        c.seed = std::stoull(val);
      else if (key == "auth_token_env")
        c.auth_token_env = val;
      else if (key == "max_in_flight")
        c.max_in_flight = std::stoi(val);
      else
        throw Error(path + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw Error(path + ": bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw Error(path + ": bad value for '" + key + "'");
    }
  }
  validate(c);
  return c;
}

struct GenRequest {
  nlohmann::json payload;
  bool want_logprobs = false;
};

struct GenResponse {
  std::string text;
  std::map<std::string, double> first_token_logprobs;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retryable)
      : Error(what), retryable(retryable) {}
  bool retryable;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual GenResponse complete(const GenRequest& request) = 0;
};

inline nlohmann::json generation_payload(const GenerationConfig& c,
                                         const std::string& prompt,
                                         std::optional<int> max_tokens = {}) {
  nlohmann::json p;
  p["model"] = c.model_name;
  p["prompt"] = prompt;
  p["temperature"] = c.temperature;
  p["top_p"] = c.top_p;
  p["max_tokens"] = max_tokens.value_or(c.max_new_tokens);
  p["seed"] = c.seed;
  return p;
}

// One sampled token with its candidate logprobs, for the option softmax.
inline nlohmann::json forced_decoding_payload(const GenerationConfig& c,
                                              const std::string& prompt) {
  nlohmann::json p = generation_payload(c, prompt, 1);
  p["logprobs"] = 26;
  return p;
}

inline double logaddexp(double a, double b) {
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// Folds token-level logprobs onto the option labels: token text minus
// leading whitespace must equal a label; duplicates (" A" and "A") merge by
// logaddexp. A label with no candidate token is a capability error.
inline std::map<std::string, double> extract_option_logprobs(
    const std::map<std::string, double>& token_logprobs,
    const std::vector<std::string>& labels) {
  std::map<std::string, double> folded;
  for (const auto& [token, lp] : token_logprobs) {
    std::size_t b = 0;
    while (b < token.size() &&
           std::isspace(static_cast<unsigned char>(token[b])))
      ++b;
    std::string core = token.substr(b);
    if (std::find(labels.begin(), labels.end(), core) == labels.end()) continue;
    auto it = folded.find(core);
    if (it == folded.end())
      folded[core] = lp;
    else
      it->second = logaddexp(it->second, lp);
  }
  for (const auto& lab : labels)
    if (!folded.count(lab))
      throw Error("endpoint returned no logprob for option label " + lab);
  return folded;
}

// Instrumented in-process transport. Scripted mode replays a fixed response
// sequence; generator mode computes responses from the request.
class StubTransport : public Transport {
 public:
  explicit StubTransport(std::vector<GenResponse> script)
      : script_(script.begin(), script.end()) {}
  explicit StubTransport(std::function<GenResponse(const GenRequest&)> fn)
      : generate_(std::move(fn)) {}

  GenResponse complete(const GenRequest& request) override {
    int now = ++in_flight_;
    int seen = max_in_flight_seen_.load();
    while (now > seen && !max_in_flight_seen_.compare_exchange_weak(seen, now)) {
    }
    if (latency_ms_ > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
    GenResponse resp;
    try {
      {
        std::lock_guard<std::mutex> lock(mu_);
        ++calls_;
        captured_payloads_.push_back(request.payload);
      }
      if (generate_) {
        resp = generate_(request);
      } else {
        std::lock_guard<std::mutex> lock(mu_);
        if (script_.empty())
          throw TransportError("stub script exhausted", false);
        resp = script_.front();
        script_.pop_front();
      }
    } catch (...) {
      --in_flight_;
      throw;
    }
    --in_flight_;
    return resp;
  }

  void set_latency_ms(int ms) { latency_ms_ = ms; }
  long long calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
  }
  int max_in_flight_seen() const { return max_in_flight_seen_.load(); }
  std::vector<nlohmann::json> captured_payloads() const {
    std::lock_guard<std::mutex> lock(mu_);
    return captured_payloads_;
  }

 private:
  mutable std::mutex mu_;
  std::deque<GenResponse> script_;
  std::function<GenResponse(const GenRequest&)> generate_;
  std::vector<nlohmann::json> captured_payloads_;
  long long calls_ = 0;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_seen_{0};
  int latency_ms_ = 0;
};

// Loads a scripted response sequence: JSONL of {"text": ..., "logprobs": {...}}.
inline std::vector<GenResponse> load_stub_script(const std::string& path) {
  std::vector<GenResponse> script;
  for (const auto& line : split_lines(read_text_file(path))) {
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    GenResponse r;
    r.text = j.at("text").get<std::string>();
    if (j.contains("logprobs"))
      r.first_token_logprobs =
          j.at("logprobs").get<std::map<std::string, double>>();
    script.push_back(std::move(r));
  }
  return script;
}

// POSTs completion payloads to {endpoint_url}; expects
// choices[0].text and, for logprob requests, choices[0].logprobs.top_logprobs[0].
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const GenerationConfig& config) : config_(config) {
    auto scheme_end = config.endpoint_url.find("://");
    if (scheme_end == std::string::npos)
      throw Error("endpoint_url must start with http:// or https://");
    auto path_start = config.endpoint_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base_ = config.endpoint_url;
      path_ = "/";
    } else {
      base_ = config.endpoint_url.substr(0, path_start);
      path_ = config.endpoint_url.substr(path_start);
    }
  }

  GenResponse complete(const GenRequest& request) override {
    httplib::Client client(base_);
    client.set_read_timeout(600, 0);
    httplib::Headers headers;
    if (!config_.auth_token_env.empty()) {
      const char* token = std::getenv(config_.auth_token_env.c_str());
      if (!token)
        throw TransportError(
            "auth token environment variable " + config_.auth_token_env +
                " is not set",
            false);
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    auto res = client.Post(path_, headers, request.payload.dump(),
                           "application/json");
    if (!res)
      throw TransportError("connection to " + base_ + " failed", true);
    if (res->status == 429 || res->status >= 500)
      throw TransportError(
          "endpoint returned status " + std::to_string(res->status), true);
    if (res->status < 200 || res->status >= 300)
      throw TransportError(
          "endpoint returned status " + std::to_string(res->status), false);
    try {
      nlohmann::json j = nlohmann::json::parse(res->body);
      GenResponse out;
      const auto& choice = j.at("choices").at(0);
      out.text = choice.at("text").get<std::string>();
      if (request.want_logprobs) {
        if (!choice.contains("logprobs") ||
            !choice.at("logprobs").contains("top_logprobs"))
          throw TransportError("endpoint did not return token logprobs", false);
        out.first_token_logprobs = choice.at("logprobs")
                                       .at("top_logprobs")
                                       .at(0)
                                       .get<std::map<std::string, double>>();
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed endpoint response: ") +
                               e.what(),
                           false);
    }
  }

 private:
  GenerationConfig config_;
  std::string base_;
  std::string path_;
};

struct QuestionItem {
  std::string trace_id;
  std::string dataset_id;
  std::string question;
  std::vector<std::string> option_labels;  // must be A.. in order
  std::vector<std::string> option_texts;
  std::string gold_label;
};

inline std::vector<QuestionItem> load_questions(const std::string& path) {
  std::vector<QuestionItem> out;
  std::set<std::string> ids;
  std::size_t lineno = 0;
  for (const auto& line : split_lines(read_text_file(path))) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto where = [&] { return path + ":" + std::to_string(lineno); };
    QuestionItem q;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      q.trace_id = j.at("trace_id").get<std::string>();
      q.dataset_id = j.at("dataset_id").get<std::string>();
      q.question = j.at("question").get<std::string>();
      q.option_texts = j.at("option_texts").get<std::vector<std::string>>();
      if (j.contains("option_labels"))
        q.option_labels = j.at("option_labels").get<std::vector<std::string>>();
      q.gold_label = j.at("gold_label").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(where() + ": bad question record: " + e.what());
    }
    std::size_t n = q.option_texts.size();
    if (n < 2 || n > 26) throw Error(where() + ": option count must be in [2,26]");
    if (q.option_labels.empty())
      for (std::size_t i = 0; i < n; ++i)
        q.option_labels.emplace_back(1, static_cast<char>('A' + i));
    if (q.option_labels.size() != n)
      throw Error(where() + ": option_labels/option_texts length mismatch");
    for (std::size_t i = 0; i < n; ++i)
      if (q.option_labels[i] != std::string(1, static_cast<char>('A' + i)))
        throw Error(where() + ": option_labels must be A.. in order");
    if (std::find(q.option_labels.begin(), q.option_labels.end(),
                  q.gold_label) == q.option_labels.end())
      throw Error(where() + ": gold_label is not an option");
    if (!ids.insert(q.trace_id).second)
      throw Error(where() + ": duplicate trace_id '" + q.trace_id + "'");
    out.push_back(std::move(q));
  }
  return out;
}

struct CampaignOptions {
  ModelKind model_kind = ModelKind::reasoning;
  std::string checkpoint_path;  // empty disables checkpointing
  int max_retries = 3;
  int backoff_ms = 250;
  std::function<void(int)> sleeper;  // injectable for tests
};

namespace detail {

template <typename Fn>
auto with_retries(Fn&& fn, const CampaignOptions& opts) {
  int attempt = 0;
  for (;;) {
    try {
      return fn();
    } catch (const TransportError& e) {
      if (!e.retryable || attempt >= opts.max_retries) throw;
      int delay = opts.backoff_ms << attempt;  // 250, 500, 1000, ...
      if (opts.sleeper)
        opts.sleeper(delay);
      else if (delay > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      ++attempt;
    }
  }
}

}  // namespace detail

// Runs generation + forced decoding for every question not already in the
// checkpoint. Results come back in question order regardless of completion
// order; each finished trace is appended to the checkpoint immediately.
inline std::vector<ReasoningTrace> run_campaign(
    const std::vector<QuestionItem>& questions, const GenerationConfig& config,
    const std::optional<InterventionPlan>& plan, Transport& transport,
    const CampaignOptions& opts = {}) {
  validate(config);
  std::set<std::string> ids;
  for (const auto& q : questions)
    if (!ids.insert(q.trace_id).second)
      throw Error("duplicate trace_id '" + q.trace_id + "' in question set");

  std::map<std::string, ReasoningTrace> completed;
  if (!opts.checkpoint_path.empty()) {
    std::ifstream probe(opts.checkpoint_path);
    if (probe) {
      std::string content = read_text_file(opts.checkpoint_path);
      for (const auto& line : split_lines(content)) {
        if (trim(line).empty()) continue;
        try {
          ReasoningTrace t = trace_from_json(nlohmann::json::parse(line));
          completed[t.trace_id] = std::move(t);
        } catch (...) {
          // torn or stale line: the item reruns
        }
      }
      // A torn final line must not swallow the next append.
      if (!content.empty() && content.back() != '\n') {
        std::ofstream repair(opts.checkpoint_path,
                             std::ios::binary | std::ios::app);
        repair << "\n";
      }
    }
  }

  const RunTag tag = plan ? run_tag_for_mode(plan->mode) : RunTag::baseline;
  const std::optional<std::string> block =
      plan ? std::optional<std::string>(plan->rendered_block) : std::nullopt;

  std::vector<ReasoningTrace> results(questions.size());
  std::vector<char> have(questions.size(), 0);
  std::deque<std::size_t> pending;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    auto it = completed.find(questions[i].trace_id);
    if (it != completed.end()) {
      results[i] = it->second;
      have[i] = 1;
    } else {
      pending.push_back(i);
    }
  }

  std::mutex queue_mu, checkpoint_mu;
  std::exception_ptr first_error;
  std::atomic<bool> abort{false};

  auto process_one = [&](std::size_t i) {
    const QuestionItem& q = questions[i];
    std::string qa = build_qa_prompt(q.question, q.option_texts, block);
    GenResponse gen = detail::with_retries(
        [&] {
          return transport.complete({generation_payload(config, qa), false});
        },
        opts);
    SegmentResult seg = extract_reasoning_segment(gen.text, opts.model_kind);
    std::string fd_prompt = build_forced_decoding_prompt(qa, seg.text);
    GenResponse fd = detail::with_retries(
        [&] {
          return transport.complete(
              {forced_decoding_payload(config, fd_prompt), true});
        },
        opts);
    ReasoningTrace t;
    t.trace_id = q.trace_id;
    t.model_id = config.model_name;
    t.dataset_id = q.dataset_id;
    t.question = q.question;
    t.option_labels = q.option_labels;
    t.option_texts = q.option_texts;
    t.raw_output = gen.text;
    t.reasoning_text = seg.text;
    t.option_logprobs =
        extract_option_logprobs(fd.first_token_logprobs, q.option_labels);
    t.chosen_label = parse_final_answer(gen.text, q.option_labels);
    t.gold_label = q.gold_label;
    t.run_tag = tag;
    if (auto bad = validate_trace(t))
      throw Error("campaign produced an invalid trace (" + *bad + ") for " +
                  q.trace_id);
    if (!opts.checkpoint_path.empty()) {
      std::lock_guard<std::mutex> lock(checkpoint_mu);
      std::ofstream app(opts.checkpoint_path, std::ios::binary | std::ios::app);
      if (!app) throw Error("cannot append checkpoint: " + opts.checkpoint_path);
      app << trace_to_json(t).dump() << "\n";
      app.flush();
    }
    results[i] = std::move(t);
    have[i] = 1;
  };

  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(queue_mu);
        if (pending.empty() || abort.load()) return;
        i = pending.front();
        pending.pop_front();
      }
      try {
        process_one(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(queue_mu);
        if (!first_error) first_error = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(config.max_in_flight), pending.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  for (std::size_t i = 0; i < questions.size(); ++i)
    if (!have[i]) throw Error("campaign left unfinished items");
  return results;
}

}  // namespace ngramcal
