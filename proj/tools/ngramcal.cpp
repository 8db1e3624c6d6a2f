// Command-line front door. Subcommands wire ingestion, featurization,
// regression, calibration, intervention, generation campaigns and bundle
// comparison onto the filesystem. Flags override config files, which
// override built-in defaults. Exit status is nonzero exactly on fatal errors.

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ngramcal/generation.hpp"
#include "ngramcal/intervention.hpp"
#include "ngramcal/pipeline.hpp"
#include "ngramcal/version.hpp"

namespace {

using namespace ngramcal;

int cmd_ingest(const std::vector<std::string>& inputs, bool lenient,
               const std::string& out) {
  std::vector<ReasoningTrace> all;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& path : inputs) {
    IngestResult got = ingest_traces(
        path, lenient ? Strictness::lenient : Strictness::strict);
    nlohmann::json entry;
    entry["path"] = path;
    entry["traces"] = got.traces.size();
    entry["skip_report"] = skip_report_to_json(got.skip);
    summary.push_back(entry);
    for (auto& t : got.traces) all.push_back(std::move(t));
  }
  {
    std::set<std::string> ids;
    for (const auto& t : all)
      if (!ids.insert(t.trace_id).second)
        throw Error("duplicate trace_id across inputs: '" + t.trace_id + "'");
  }
  if (!out.empty()) write_traces_jsonl(out, all);
  nlohmann::json report;
  report["inputs"] = summary;
  report["total_traces"] = all.size();
  if (!out.empty()) report["written"] = out;
  std::cout << report.dump(2) << "\n";
  return 0;
}

// Flags land on top of the config file, which lands on top of defaults.
PipelineConfig merge_pipeline_config(const CLI::App* cmd,
                                     const std::string& config_path,
                                     const std::vector<std::string>& inputs,
                                     const std::string& out,
                                     const std::string& n_range, int min_count,
                                     int bins, int k,
                                     const std::string& weighting,
                                     std::uint64_t seed) {
  PipelineConfig c;
  if (!config_path.empty()) c = pipeline_config_from_file(config_path);
  if (!inputs.empty()) c.input_paths = inputs;
  if (cmd->count("--out")) c.output_dir = out;
  if (cmd->count("--n-range"))
    std::tie(c.n_low, c.n_high) = parse_n_range(n_range);
  if (cmd->count("--min-count")) c.min_count = min_count;
  if (cmd->count("--bins")) c.bins = bins;
  if (cmd->count("--k")) c.k = k;
  if (cmd->count("--weighting")) {
    auto w = weighting_from_string(weighting);
    if (!w) throw Error("unknown weighting '" + weighting + "'");
    c.weighting = *w;
  }
  if (cmd->count("--seed")) c.seed = seed;
  return c;
}

int cmd_analyze(const PipelineConfig& config) {
  AnalysisBundle bundle = run_analyze(config);
  nlohmann::json out;
  out["output_dir"] = config.output_dir;
  out["trace_count"] = bundle.records.size();
  out["ece"] = bundle.report.ece;
  out["fits"] = nlohmann::json::array();
  for (const auto& a : bundle.per_n) {
    nlohmann::json e;
    e["n"] = a.n;
    if (!a.skip_reason.empty()) {
      e["skipped"] = a.skip_reason;
    } else {
      e["lambda"] = a.lasso.lambda;
      e["vocabulary"] = a.vocab.size();
    }
    out["fits"].push_back(e);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_calibrate(const std::vector<std::string>& inputs, int bins,
                  const std::string& out) {
  std::vector<ReasoningTrace> traces;
  for (const auto& path : inputs) {
    IngestResult got = ingest_traces(path, Strictness::lenient);
    for (auto& t : got.traces) traces.push_back(std::move(t));
  }
  if (traces.empty()) throw Error("empty corpus: no usable traces in inputs");
  auto records = label_correctness(traces);
  CalibrationReport report = calibration_report(records, bins);
  nlohmann::json rj = report_to_json(report);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_text_file(
        (std::filesystem::path(out) / "calibration.json").string(),
        rj.dump(2) + "\n");
    write_text_file(
        (std::filesystem::path(out) / "calibration_curve.csv").string(),
        curve_to_csv(report.curve));
  }
  std::cout << rj.dump(2) << "\n";
  return 0;
}

int cmd_intervene(const std::string& bundle_dir, const std::string& mode_name,
                  int k, const std::string& out) {
  auto mode = intervention_mode_from_string(mode_name);
  if (!mode) throw Error("unknown intervention mode '" + mode_name + "'");
  verify_bundle(bundle_dir);
  auto rows = parse_coefficients_csv(read_text_file(
      (std::filesystem::path(bundle_dir) / "coefficients.csv").string()));
  // The intervention always targets confidence-raising n-grams; sizes are
  // merged and ranked by confidence Z-score.
  auto top = top_k_ngrams(rows, static_cast<std::size_t>(k),
                          CoefficientSign::positive);
  if (top.empty()) throw Error("bundle has no nonzero positive coefficients");
  std::vector<std::string> ngrams;
  for (const auto& r : top) ngrams.push_back(r.ngram);
  InterventionPlan plan = build_intervention_plan(*mode, ngrams);
  if (!out.empty()) write_text_file(out, plan_to_json(plan).dump(2) + "\n");
  std::cout << plan.rendered_block;
  return 0;
}

int cmd_campaign(const std::string& questions_path,
                 const std::string& gen_config_path,
                 const std::string& plan_path, const std::string& stub_path,
                 const std::string& checkpoint, const std::string& kind_name,
                 int max_retries, int backoff_ms, const std::string& out) {
  auto questions = load_questions(questions_path);
  GenerationConfig config = generation_config_from_file(gen_config_path);
  std::optional<InterventionPlan> plan;
  if (!plan_path.empty())
    plan = plan_from_json(nlohmann::json::parse(read_text_file(plan_path)));
  auto kind = model_kind_from_string(kind_name);
  if (!kind) throw Error("unknown model kind '" + kind_name + "'");

  CampaignOptions opts;
  opts.model_kind = *kind;
  opts.checkpoint_path = checkpoint;
  opts.max_retries = max_retries;
  opts.backoff_ms = backoff_ms;

  std::unique_ptr<Transport> transport;
  if (!stub_path.empty())
    transport = std::make_unique<StubTransport>(load_stub_script(stub_path));
  else
    transport = std::make_unique<HttpTransport>(config);

  auto traces = run_campaign(questions, config, plan, *transport, opts);
  write_traces_jsonl(out, traces);
  nlohmann::json summary;
  summary["questions"] = questions.size();
  summary["traces"] = traces.size();
  summary["run_tag"] = to_string(plan ? run_tag_for_mode(plan->mode)
                                      : RunTag::baseline);
  summary["written"] = out;
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_compare(const std::string& baseline, const std::string& regen,
                const std::string& out, std::size_t watchlist_size) {
  ComparisonResult result = run_compare(baseline, regen, out, watchlist_size);
  nlohmann::json summary;
  summary["output_dir"] = out;
  summary["delta"] = result.delta;
  summary["watchlist"] = result.shifts.size();
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n-gram confidence calibration toolkit"};
  app.set_version_flag("--version", std::string(ngramcal::version()));
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand(
      "ingest", "Validate trace files and write a normalized copy");
  std::vector<std::string> ingest_inputs;
  bool ingest_lenient = false;
  std::string ingest_out;
  ingest->add_option("inputs", ingest_inputs, "Trace JSONL files")
      ->required()
      ->expected(-1);
  ingest->add_flag("--lenient", ingest_lenient,
                   "Skip malformed records instead of failing");
  ingest->add_option("--out", ingest_out, "Write normalized trace JSONL here");

  // analyze
  auto* analyze = app.add_subcommand(
      "analyze", "Fit per-n regressions and write an analysis bundle");
  std::vector<std::string> analyze_inputs;
  std::string analyze_config, analyze_out, analyze_n_range = "1..5";
  std::string analyze_weighting = "count";
  int analyze_min_count = 2, analyze_bins = 10, analyze_k = 5;
  std::uint64_t analyze_seed = 42;
  analyze->add_option("inputs", analyze_inputs, "Trace JSONL files")
      ->expected(-1);
  analyze->add_option("--config", analyze_config, "key = value config file");
  analyze->add_option("--out", analyze_out, "Bundle output directory");
  analyze->add_option("--n-range", analyze_n_range, "n-gram sizes, e.g. 1..5");
  analyze->add_option("--min-count", analyze_min_count,
                      "Minimum total n-gram count");
  analyze->add_option("--bins", analyze_bins, "Calibration bins");
  analyze->add_option("--k", analyze_k, "Intervention list size");
  analyze->add_option("--weighting", analyze_weighting, "count or tfidf");
  analyze->add_option("--seed", analyze_seed, "Cross-validation seed");

  // calibrate
  auto* calibrate = app.add_subcommand(
      "calibrate", "Compute calibration metrics for trace files");
  std::vector<std::string> cal_inputs;
  int cal_bins = 10;
  std::string cal_out;
  calibrate->add_option("inputs", cal_inputs, "Trace JSONL files")
      ->required()
      ->expected(-1);
  calibrate->add_option("--bins", cal_bins, "Calibration bins");
  calibrate->add_option("--out", cal_out,
                        "Directory for calibration.json and curve CSV");

  // intervene
  auto* intervene = app.add_subcommand(
      "intervene", "Build an intervention plan from an analysis bundle");
  std::string int_bundle, int_mode = "suppress", int_out;
  int int_k = 5;
  intervene->add_option("bundle", int_bundle, "Analysis bundle directory")
      ->required();
  intervene->add_option("--mode", int_mode,
                        "suppress, inject, or suppress_plain");
  intervene->add_option("--k", int_k, "How many n-grams to target");
  intervene->add_option("--out", int_out, "Write the plan JSON here");

  // campaign
  auto* campaign = app.add_subcommand(
      "campaign", "Run a generation campaign against an endpoint or stub");
  std::string camp_questions, camp_config, camp_plan, camp_stub;
  std::string camp_checkpoint, camp_kind = "reasoning", camp_out;
  int camp_retries = 3, camp_backoff = 250;
  campaign->add_option("--questions", camp_questions, "Question JSONL file")
      ->required();
  campaign->add_option("--gen-config", camp_config,
                       "Generation config (key = value)")
      ->required();
  campaign->add_option("--plan", camp_plan, "Intervention plan JSON");
  campaign->add_option("--stub", camp_stub,
                       "Scripted response JSONL instead of a live endpoint");
  campaign->add_option("--checkpoint", camp_checkpoint,
                       "Append-only resume file");
  campaign->add_option("--model-kind", camp_kind, "reasoning or instruct");
  campaign->add_option("--max-retries", camp_retries,
                       "Retries per transient failure");
  campaign->add_option("--backoff-ms", camp_backoff, "Base retry backoff");
  campaign->add_option("--out", camp_out, "Trace JSONL output")->required();

  // compare
  auto* compare = app.add_subcommand(
      "compare", "Join a baseline and a regeneration bundle");
  std::string cmp_baseline, cmp_regen, cmp_out;
  std::size_t cmp_watchlist = 200;
  compare->add_option("baseline", cmp_baseline, "Baseline bundle directory")
      ->required();
  compare->add_option("regen", cmp_regen, "Regeneration bundle directory")
      ->required();
  compare->add_option("--out", cmp_out, "Comparison output directory")
      ->required();
  compare->add_option("--watchlist-size", cmp_watchlist,
                      "Frequency watchlist size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed())
      return cmd_ingest(ingest_inputs, ingest_lenient, ingest_out);
    if (analyze->parsed()) {
      PipelineConfig config = merge_pipeline_config(
          analyze, analyze_config, analyze_inputs, analyze_out,
          analyze_n_range, analyze_min_count, analyze_bins, analyze_k,
          analyze_weighting, analyze_seed);
      return cmd_analyze(config);
    }
    if (calibrate->parsed()) return cmd_calibrate(cal_inputs, cal_bins, cal_out);
    if (intervene->parsed())
      return cmd_intervene(int_bundle, int_mode, int_k, int_out);
    if (campaign->parsed())
      return cmd_campaign(camp_questions, camp_config, camp_plan, camp_stub,
                          camp_checkpoint, camp_kind, camp_retries,
                          camp_backoff, camp_out);
    if (compare->parsed())
      return cmd_compare(cmp_baseline, cmp_regen, cmp_out, cmp_watchlist);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
