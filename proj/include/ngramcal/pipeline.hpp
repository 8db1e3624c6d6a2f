#pragma once

// Directory-level analysis and comparison bundles: ingestion, per-n
// featurization and regression, calibration reporting, hashed manifests,
// and the baseline-vs-regeneration comparison join.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ngramcal/coefficients.hpp"
#include "ngramcal/featurizer.hpp"
#include "ngramcal/intervention.hpp"
#include "ngramcal/lasso.hpp"
#include "ngramcal/logistic.hpp"
#include "ngramcal/metrics.hpp"
#include "ngramcal/trace.hpp"
#include "ngramcal/util.hpp"
#include "ngramcal/version.hpp"

namespace ngramcal {

struct PipelineConfig {
  std::vector<std::string> input_paths;
  std::string output_dir;
  int n_low = 1;
  int n_high = 5;
  int min_count = 2;
  int bins = 10;
  int k = 5;
  Weighting weighting = Weighting::count;
  std::uint64_t seed = 42;
};

inline void validate(const PipelineConfig& c) {
  if (c.input_paths.empty()) throw Error("no input paths given");
  if (c.output_dir.empty()) throw Error("no output directory given");
  if (!(1 <= c.n_low && c.n_low <= c.n_high && c.n_high <= 5))
    throw Error("n range must satisfy 1 <= low <= high <= 5");
  if (c.min_count < 1) throw Error("min_count must be >= 1");
  if (c.bins < 1) throw Error("bins must be >= 1");
  if (c.k < 1) throw Error("k must be >= 1");
}

// "L..H" or a single integer (meaning L = H).
inline std::pair<int, int> parse_n_range(const std::string& s) {
  auto bad = [&] { return Error("bad n range '" + s + "', expected L..H"); };
  try {
    auto dots = s.find("..");
    if (dots == std::string::npos) {
      int n = std::stoi(trim(s));
      return {n, n};
    }
    int lo = std::stoi(trim(s.substr(0, dots)));
    int hi = std::stoi(trim(s.substr(dots + 2)));
    return {lo, hi};
  } catch (const std::invalid_argument&) {
    throw bad();
  } catch (const std::out_of_range&) {
    throw bad();
  }
}

// Plain "key = value" file; '#' starts a comment; "input" repeats.
inline PipelineConfig pipeline_config_from_file(const std::string& path) {
  PipelineConfig c;
  for (const auto& raw : split_lines(read_text_file(path))) {
    std::string line = raw.substr(0, raw.find('#'));
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path + ": expected 'key = value', got '" + trim(line) + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "input")
        c.input_paths.push_back(val);
      else if (key == "output_dir")
        c.output_dir = val;
      else if (key == "n_range")
        std::tie(c.n_low, c.n_high) = parse_n_range(val);
      else if (key == "min_count")
        c.min_count = std::stoi(val);
      else if (key == "bins")
        c.bins = std::stoi(val);
      else if (key == "k")
        c.k = std::stoi(val);
      else if (key == "weighting") {
        auto w = weighting_from_string(val);
        if (!w) throw Error(path + ": unknown weighting '" + val + "'");
        c.weighting = *w;
      } else if (key == "seed")
        c.seed = std::stoull(val);
      else
        throw Error(path + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw Error(path + ": bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw Error(path + ": bad value for '" + key + "'");
    }
  }
  return c;
}

struct NgramAnalysis {
  int n = 0;
  std::string skip_reason;  // non-empty marks the whole size skipped
  LassoFit lasso;
  double lasso_mae = 0.0;
  double lasso_mre = 0.0;
  std::string logistic_note;  // non-empty marks logistic skipped
  LogisticFit logistic;
  double logistic_accuracy = 0.0;
  double logistic_log_loss = 0.0;
  std::optional<double> logistic_auroc;
  std::vector<StandardizedCoefficient> table;
  Vocabulary vocab;
  std::size_t design_rows = 0;
};

struct InputRecord {
  std::string path;
  std::string hash;
  std::size_t traces = 0;
  SkipReport skip;
};

struct AnalysisBundle {
  PipelineConfig config;
  std::vector<InputRecord> inputs;
  std::vector<ConfidenceRecord> records;
  CalibrationReport report;
  std::vector<NgramAnalysis> per_n;
  std::map<std::string, std::string> file_hashes;
};

namespace detail {

inline void emit_file(const std::string& dir, const std::string& name,
                      const std::string& content,
                      std::map<std::string, std::string>& hashes) {
  write_text_file((std::filesystem::path(dir) / name).string(), content);
  hashes[name] = content_hash(content);
}

// Everything the regressions need for one n-gram size. Pure, so the per-n
// computations can run on separate threads.
inline NgramAnalysis analyze_one_n(const std::vector<TokenList>& docs,
                                   const std::vector<ConfidenceRecord>& records,
                                   int n, const PipelineConfig& config) {
  NgramAnalysis a;
  a.n = n;
  Vocabulary vocab = build_vocabulary(docs, n, config.min_count);
  if (vocab.size() == 0) {
    a.skip_reason = "empty_vocabulary";
    return a;
  }
  FeatureMatrix X = l2_normalize_rows(vectorize(docs, vocab, config.weighting));
  std::set<std::size_t> zeros(X.zero_rows.begin(), X.zero_rows.end());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < X.row_count(); ++i)
    if (!zeros.count(i)) keep.push_back(i);
  if (keep.size() < 3) {
    a.skip_reason = "too_few_design_rows";
    return a;
  }
  FeatureMatrix design = subset_rows(X, keep);
  std::vector<double> y_conf;
  std::vector<int> labels;
  y_conf.reserve(keep.size());
  labels.reserve(keep.size());
  for (std::size_t i : keep) {
    y_conf.push_back(records[i].confidence);
    labels.push_back(records[i].correctness);
  }
  a.design_rows = keep.size();
  a.vocab = std::move(vocab);

  a.lasso = fit_lasso_cv(design, y_conf, 3, 100, config.seed);
  auto pred = lasso_predict(design, a.lasso);
  double mae = 0.0, mre = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double err = std::abs(pred[i] - y_conf[i]);
    mae += err;
    mre += err / std::max(std::abs(y_conf[i]), 1e-8);
  }
  a.lasso_mae = mae / pred.size();
  a.lasso_mre = mre / pred.size();

  bool has0 = false, has1 = false;
  for (int v : labels) (v ? has1 : has0) = true;
  std::vector<double> acc_coefs(a.vocab.size(), 0.0);
  if (!has0 || !has1) {
    a.logistic_note = "single_class_labels";
  } else {
    a.logistic = fit_logistic(design, labels);
    acc_coefs = a.logistic.weights;
    auto p = logistic_predict(design, a.logistic);
    std::size_t right = 0;
    std::vector<ConfidenceRecord> scored(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      if ((p[i] > 0.5 ? 1 : 0) == labels[i]) ++right;
      scored[i].trace_id = "r" + std::to_string(i);
      scored[i].confidence = p[i];
      scored[i].correctness = labels[i];
    }
    a.logistic_accuracy = static_cast<double>(right) / p.size();
    a.logistic_log_loss =
        logistic_loss(design, labels, a.logistic.weights, a.logistic.bias, 0.0);
    a.logistic_auroc = auroc(scored);
  }

  auto freqs = total_frequencies(docs, a.vocab);
  a.table = standardized_table(a.vocab, a.lasso.coefficients, acc_coefs, freqs);
  return a;
}

inline nlohmann::json coef_pairs(const Vocabulary& vocab,
                                 const std::vector<double>& coefs,
                                 bool drop_zeros) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [ngram, index] : vocab.entries) {
    double v = coefs[index];
    if (drop_zeros && v == 0.0) continue;
    out.push_back(nlohmann::json::array({ngram, v}));
  }
  return out;
}

}  // namespace detail

// Fits every n-gram size, writes the bundle, and lists each written file
// with its content hash in manifest.json. Deterministic given the config:
// no timestamps, stable orderings, seeded CV.
inline AnalysisBundle run_analyze(const PipelineConfig& config) {
  validate(config);
  std::filesystem::create_directories(config.output_dir);

  AnalysisBundle bundle;
  bundle.config = config;
  std::vector<ReasoningTrace> traces;
  for (const auto& path : config.input_paths) {
    InputRecord rec;
    rec.path = path;
    rec.hash = content_hash(read_text_file(path));
    IngestResult got = ingest_traces(path, Strictness::lenient);
    rec.traces = got.traces.size();
    rec.skip = got.skip;
    for (auto& t : got.traces) traces.push_back(std::move(t));
    bundle.inputs.push_back(std::move(rec));
  }
  if (traces.empty()) throw Error("empty corpus: no usable traces in inputs");
  {
    std::set<std::string> ids;
    for (const auto& t : traces)
      if (!ids.insert(t.trace_id).second)
        throw Error("duplicate trace_id across inputs: '" + t.trace_id + "'");
  }

  bundle.records = label_correctness(traces);
  bundle.report = calibration_report(bundle.records, config.bins);

  std::vector<TokenList> docs;
  docs.reserve(traces.size());
  for (const auto& t : traces) docs.push_back(tokenize(t.reasoning_text));

  std::set<std::string> model_ids, run_tags;
  for (const auto& t : traces) {
    model_ids.insert(t.model_id);
    run_tags.insert(to_string(t.run_tag));
  }

  // Per-n analyses are independent; run them on their own threads.
  const int n_count = config.n_high - config.n_low + 1;
  bundle.per_n.resize(n_count);
  std::vector<std::exception_ptr> failures(n_count);
  {
    std::vector<std::thread> threads;
    threads.reserve(n_count);
    for (int i = 0; i < n_count; ++i) {
      threads.emplace_back([&, i] {
        try {
          bundle.per_n[i] = detail::analyze_one_n(
              docs, bundle.records, config.n_low + i, config);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  bool any_fit = false;
  for (const auto& a : bundle.per_n)
    if (a.skip_reason.empty()) any_fit = true;
  if (!any_fit)
    throw Error("all-zero vocabulary: no n-gram size produced a usable design");

  auto& files = bundle.file_hashes;
  const std::string& dir = config.output_dir;

  for (const auto& a : bundle.per_n) {
    if (!a.skip_reason.empty()) continue;
    std::string tag = std::to_string(a.n);
    detail::emit_file(dir, "vocab_n" + tag + ".json",
                      vocabulary_to_json(a.vocab), files);

    nlohmann::json lj;
    lj["n"] = a.n;
    lj["lambda"] = a.lasso.lambda;
    lj["intercept"] = a.lasso.intercept;
    lj["cv_mse"] = a.lasso.cv_mse;
    lj["sweeps_used"] = a.lasso.sweeps_used;
    lj["converged"] = a.lasso.converged;
    lj["nonzero"] = detail::coef_pairs(a.vocab, a.lasso.coefficients, true);
    detail::emit_file(dir, "lasso_n" + tag + ".json", lj.dump(2) + "\n", files);

    nlohmann::json gj;
    gj["n"] = a.n;
    if (!a.logistic_note.empty()) {
      gj["skipped"] = a.logistic_note;
    } else {
      gj["penalty_strength"] = a.logistic.penalty_strength;
      gj["bias"] = a.logistic.bias;
      gj["final_loss"] = a.logistic.final_loss;
      gj["final_grad_norm"] = a.logistic.final_grad_norm;
      gj["iterations"] = a.logistic.iterations;
      gj["converged"] = a.logistic.converged;
      gj["weights"] = detail::coef_pairs(a.vocab, a.logistic.weights, false);
    }
    detail::emit_file(dir, "logistic_n" + tag + ".json", gj.dump(2) + "\n",
                      files);
  }

  std::string coef_csv = "ngram,n,z_conf,z_acc,freq,was_zero\n";
  for (const auto& a : bundle.per_n) {
    if (!a.skip_reason.empty()) continue;
    for (const auto& r : a.table) {
      coef_csv += r.ngram + "," + std::to_string(r.n) + "," +
                  fmt_double(r.z_conf) + "," + fmt_double(r.z_acc) + "," +
                  std::to_string(r.corpus_freq) + "," +
                  (r.was_zero ? "1" : "0") + "\n";
    }
  }
  detail::emit_file(dir, "coefficients.csv", coef_csv, files);

  // Report tables: per n, ten strongest per sign by confidence Z-score.
  std::string top_csv = "n,sign,rank,ngram,z_conf,z_acc,freq\n";
  for (const auto& a : bundle.per_n) {
    if (!a.skip_reason.empty()) continue;
    for (auto sign : {CoefficientSign::positive, CoefficientSign::negative}) {
      auto rows = top_k_ngrams(a.table, 10, sign);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        top_csv += std::to_string(a.n) + "," +
                   (sign == CoefficientSign::positive ? "positive"
                                                      : "negative") +
                   "," + std::to_string(i + 1) + "," + rows[i].ngram + "," +
                   fmt_double(rows[i].z_conf) + "," +
                   fmt_double(rows[i].z_acc) + "," +
                   std::to_string(rows[i].corpus_freq) + "\n";
      }
    }
  }
  detail::emit_file(dir, "top_coefficients.csv", top_csv, files);

  detail::emit_file(dir, "calibration.json",
                    report_to_json(bundle.report).dump(2) + "\n", files);
  detail::emit_file(dir, "calibration_curve.csv",
                    curve_to_csv(bundle.report.curve), files);

  nlohmann::json diag;
  diag["per_n"] = nlohmann::json::array();
  for (const auto& a : bundle.per_n) {
    nlohmann::json e;
    e["n"] = a.n;
    if (!a.skip_reason.empty()) {
      e["skipped"] = a.skip_reason;
      diag["per_n"].push_back(e);
      continue;
    }
    e["design_rows"] = a.design_rows;
    std::size_t nonzero = 0;
    for (double b : a.lasso.coefficients)
      if (b != 0.0) ++nonzero;
    e["lasso"] = {{"lambda", a.lasso.lambda},
                  {"cv_mse", a.lasso.cv_mse},
                  {"mae", a.lasso_mae},
                  {"mre", a.lasso_mre},
                  {"nonzero_count", nonzero},
                  {"sweeps_used", a.lasso.sweeps_used},
                  {"converged", a.lasso.converged}};
    if (!a.logistic_note.empty()) {
      e["logistic"] = {{"skipped", a.logistic_note}};
    } else {
      e["logistic"] = {
          {"accuracy", a.logistic_accuracy},
          {"log_loss", a.logistic_log_loss},
          {"auroc", a.logistic_auroc ? nlohmann::json(*a.logistic_auroc)
                                     : nlohmann::json(nullptr)},
          {"iterations", a.logistic.iterations},
          {"converged", a.logistic.converged}};
    }
    diag["per_n"].push_back(e);
  }
  detail::emit_file(dir, "regression_diagnostics.json", diag.dump(2) + "\n",
                    files);

  nlohmann::json man;
  man["artifact"] = "analysis";
  man["tool_version"] = version();
  man["config"] = {{"input_paths", config.input_paths},
                   {"n_low", config.n_low},
                   {"n_high", config.n_high},
                   {"min_count", config.min_count},
                   {"bins", config.bins},
                   {"k", config.k},
                   {"weighting", to_string(config.weighting)},
                   {"seed", config.seed}};
  man["inputs"] = nlohmann::json::array();
  for (const auto& rec : bundle.inputs) {
    nlohmann::json e;
    e["path"] = rec.path;
    e["content_hash"] = rec.hash;
    e["traces"] = rec.traces;
    e["skipped"] = skip_report_to_json(rec.skip);
    man["inputs"].push_back(e);
  }
  man["trace_count"] = traces.size();
  man["model_ids"] = model_ids;
  man["run_tags"] = run_tags;
  man["design"] = {{"standardization", "per-target-per-n"},
                   {"constraint_position", "prepended"},
                   {"zero_rows", "excluded-from-design-kept-in-metrics"},
                   {"cv", {{"folds", 3}, {"grid_size", 100}}}};
  man["skipped_n"] = nlohmann::json::array();
  for (const auto& a : bundle.per_n)
    if (!a.skip_reason.empty())
      man["skipped_n"].push_back({{"n", a.n}, {"reason", a.skip_reason}});
  man["files"] = files;
  write_text_file((std::filesystem::path(dir) / "manifest.json").string(),
                  man.dump(2) + "\n");
  return bundle;
}

// Recomputes every hash the manifest lists; any missing or altered file is
// an error. Returns the parsed manifest.
inline nlohmann::json verify_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path root(dir);
  std::string man_text;
  try {
    man_text = read_text_file((root / "manifest.json").string());
  } catch (const Error&) {
    throw Error(dir + ": not a bundle (missing manifest.json)");
  }
  nlohmann::json man;
  try {
    man = nlohmann::json::parse(man_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(dir + ": unreadable manifest: " + e.what());
  }
  if (!man.contains("files") || !man.contains("artifact"))
    throw Error(dir + ": manifest lacks files/artifact");
  for (const auto& [name, hash] : man.at("files").items()) {
    std::string content;
    try {
      content = read_text_file((root / name).string());
    } catch (const Error&) {
      throw Error(dir + ": manifest lists missing file " + name);
    }
    if (content_hash(content) != hash.get<std::string>())
      throw Error(dir + ": content hash mismatch for " + name);
  }
  return man;
}

inline std::vector<StandardizedCoefficient> parse_coefficients_csv(
    const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "ngram,n,z_conf,z_acc,freq,was_zero")
    throw Error("bad coefficients csv header");
  std::vector<StandardizedCoefficient> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      auto comma = lines[i].find(',', start);
      if (comma == std::string::npos) {
        f.push_back(lines[i].substr(start));
        break;
      }
      f.push_back(lines[i].substr(start, comma - start));
      start = comma + 1;
    }
    if (f.size() != 6)
      throw Error("bad coefficients csv row: " + lines[i]);
    StandardizedCoefficient r;
    r.ngram = f[0];
    try {
      r.n = std::stoi(f[1]);
      r.z_conf = std::stod(f[2]);
      r.z_acc = std::stod(f[3]);
      r.corpus_freq = std::stoll(f[4]);
    } catch (const std::exception&) {
      throw Error("bad coefficients csv row: " + lines[i]);
    }
    r.was_zero = (f[5] == "1");
    rows.push_back(std::move(r));
  }
  return rows;
}

struct ComparisonResult {
  nlohmann::json delta;
  std::vector<FrequencyShift> shifts;
  std::map<std::string, std::string> file_hashes;
};

namespace detail {

inline std::vector<TokenList> reingest_docs(const nlohmann::json& manifest) {
  std::vector<TokenList> docs;
  for (const auto& p :
       manifest.at("config").at("input_paths").get<std::vector<std::string>>()) {
    IngestResult got = ingest_traces(p, Strictness::lenient);
    for (const auto& t : got.traces) docs.push_back(tokenize(t.reasoning_text));
  }
  return docs;
}

}  // namespace detail

// Joins two analysis bundles: metric deltas (regen minus baseline),
// frequency shifts over the baseline-derived watchlist, and the coefficient
// table keyed by n-gram with one z column per bundle and the shared count c.
inline ComparisonResult run_compare(const std::string& baseline_dir,
                                    const std::string& regen_dir,
                                    const std::string& out_dir,
                                    std::size_t watchlist_size = 200) {
  namespace fs = std::filesystem;
  nlohmann::json mbase = verify_bundle(baseline_dir);
  nlohmann::json mregen = verify_bundle(regen_dir);
  for (const auto* m : {&mbase, &mregen})
    if (m->at("artifact") != "analysis")
      throw Error("bundle schema mismatch: artifact is not 'analysis'");
  if (mbase.at("config").at("bins") != mregen.at("config").at("bins"))
    throw Error("bundle schema mismatch: calibration bin counts differ");
  fs::create_directories(out_dir);

  auto load_json = [](const std::string& dir, const std::string& name) {
    return nlohmann::json::parse(
        read_text_file((fs::path(dir) / name).string()));
  };
  nlohmann::json cal_base = load_json(baseline_dir, "calibration.json");
  nlohmann::json cal_regen = load_json(regen_dir, "calibration.json");

  ComparisonResult result;
  nlohmann::json delta;
  for (const char* key : {"ece", "ace", "brier", "accuracy"})
    delta[key] =
        cal_regen.at(key).get<double>() - cal_base.at(key).get<double>();
  if (cal_base.at("auroc").is_null() || cal_regen.at("auroc").is_null())
    delta["auroc"] = nullptr;
  else
    delta["auroc"] = cal_regen.at("auroc").get<double>() -
                     cal_base.at("auroc").get<double>();
  result.delta = delta;

  nlohmann::json mj;
  mj["baseline"] = cal_base;
  mj["regen"] = cal_regen;
  mj["delta"] = delta;
  detail::emit_file(out_dir, "metrics_delta.json", mj.dump(2) + "\n",
                    result.file_hashes);

  auto base_rows = parse_coefficients_csv(
      read_text_file((fs::path(baseline_dir) / "coefficients.csv").string()));
  auto regen_rows = parse_coefficients_csv(
      read_text_file((fs::path(regen_dir) / "coefficients.csv").string()));

  auto watchlist = build_watchlist(base_rows, watchlist_size);
  auto base_docs = detail::reingest_docs(mbase);
  auto regen_docs = detail::reingest_docs(mregen);
  result.shifts = frequency_shifts(base_docs, regen_docs, watchlist);
  detail::emit_file(out_dir, "frequency_shift.csv",
                    shifts_to_csv(result.shifts), result.file_hashes);

  // (ngram, n) -> z_conf per side; c counts the sides carrying the entry.
  std::map<std::pair<std::string, int>,
           std::pair<std::optional<double>, std::optional<double>>>
      joined;
  for (const auto& r : base_rows) joined[{r.ngram, r.n}].first = r.z_conf;
  for (const auto& r : regen_rows) joined[{r.ngram, r.n}].second = r.z_conf;
  std::vector<std::pair<std::pair<std::string, int>,
                        std::pair<std::optional<double>, std::optional<double>>>>
      rows(joined.begin(), joined.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    int ca = (a.second.first ? 1 : 0) + (a.second.second ? 1 : 0);
    int cb = (b.second.first ? 1 : 0) + (b.second.second ? 1 : 0);
    if (ca != cb) return ca > cb;
    if (a.first.first != b.first.first) return a.first.first < b.first.first;
    return a.first.second < b.first.second;
  });
  std::string cm = "ngram,n,z_conf_baseline,z_conf_regen,c\n";
  for (const auto& [key, zs] : rows) {
    int c = (zs.first ? 1 : 0) + (zs.second ? 1 : 0);
    cm += key.first + "," + std::to_string(key.second) + "," +
          (zs.first ? fmt_double(*zs.first) : "") + "," +
          (zs.second ? fmt_double(*zs.second) : "") + "," + std::to_string(c) +
          "\n";
  }
  detail::emit_file(out_dir, "cross_model.csv", cm, result.file_hashes);

  nlohmann::json man;
  man["artifact"] = "comparison";
  man["tool_version"] = version();
  man["baseline_dir"] = baseline_dir;
  man["regen_dir"] = regen_dir;
  man["baseline_manifest_hash"] = content_hash(
      read_text_file((fs::path(baseline_dir) / "manifest.json").string()));
  man["regen_manifest_hash"] = content_hash(
      read_text_file((fs::path(regen_dir) / "manifest.json").string()));
  man["watchlist_size"] = watchlist_size;
  man["delta"] = delta;
  man["files"] = result.file_hashes;
  write_text_file((fs::path(out_dir) / "manifest.json").string(),
                  man.dump(2) + "\n");
  return result;
}

}  // namespace ngramcal
