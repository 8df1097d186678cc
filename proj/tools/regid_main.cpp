// regid: regime identification and regime-wise causal discovery for
// multivariate time series.
//
// Subcommands:
//   generate   synthesize a series with known regimes and causal structure
//   regimes    segment a series by clustering windowed covariances
//   causal     VAR Granger-causal discovery, whole-series or per regime
//   reproduce  end-to-end pipeline plus the built-in verification checks
//
// Exit codes: 0 ok, 2 usage, 3 data/io, 4 numeric, 5 verification failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regid/evaluation.hpp"
#include "regid/io_json.hpp"
#include "regid/parallel.hpp"
#include "regid/pipeline.hpp"
#include "regid/reproduce.hpp"
#include "regid/synth.hpp"
#include "regid/var.hpp"

namespace fs = std::filesystem;
using namespace regid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitVerification = 5;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const Error*>(&e)) return kExitNumeric;
  return kExitNumeric;
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out))
    throw DataError("cannot create output directory '" + out + "'");
}

std::pair<int, int> parse_range(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw UsageError("range must look like a:b, got '" + text + "'");
  try {
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError("range must look like a:b, got '" + text + "'");
  }
}

std::vector<int> parse_sweep(const std::string& text) {
  auto first = text.find(':');
  auto second = text.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos)
    throw UsageError("sweep must look like start:stop:step, got '" + text + "'");
  int start, stop, step;
  try {
    start = std::stoi(text.substr(0, first));
    stop = std::stoi(text.substr(first + 1, second - first - 1));
    step = std::stoi(text.substr(second + 1));
  } catch (const std::exception&) {
    throw UsageError("sweep must look like start:stop:step, got '" + text + "'");
  }
  if (step < 1 || stop < start)
    throw UsageError("sweep needs start <= stop and step >= 1");
  std::vector<int> out;
  for (int w = start; w <= stop; w += step) out.push_back(w);
  return out;
}

void write_regimes_plot_csv(const RegimeSegmentation& seg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "time,regime_id\n";
  for (const auto& s : seg.segments)
    for (long t = s.start; t < s.end; ++t)
      out << t << "," << s.regime << "\n";
}

void write_ch_curve_csv(const std::vector<ChPoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "k,score\n";
  char buf[48];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", p.k, p.score);
    out << buf;
  }
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string spec_path;
  bool default_paper = false;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_generate(const GenerateArgs& args) {
  if (args.default_paper != args.spec_path.empty())
    throw UsageError("generate: pass exactly one of --spec or --default-paper");
  SynthSpec spec;
  if (args.default_paper) {
    spec = default_paper_spec();
  } else {
    std::ifstream probe(args.spec_path);
    if (!probe) throw DataError("cannot open '" + args.spec_path + "'");
    probe.close();
    try {
      spec = spec_from_json(read_json_file(args.spec_path));
    } catch (const Error& e) {
      // A readable but malformed spec is a usage problem, reported per field.
      throw UsageError("spec '" + args.spec_path + "': " + e.what());
    }
  }
  if (args.seed) spec.seed = *args.seed;
  spec.validate();

  ensure_out_dir(args.out);
  auto [series, truth] = generate(spec);
  write_csv(series, (fs::path(args.out) / "series.csv").string());
  write_json_file(truth_to_json(truth), (fs::path(args.out) / "truth.json").string());
  write_json_file(spec_to_json(spec), (fs::path(args.out) / "spec.json").string());
  std::cout << "wrote series.csv, truth.json, spec.json to " << args.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RegimesArgs {
  std::string input;
  char delimiter = ',';
  int window = 60;
  std::string sweep;
  std::string metric = "riemannian";
  std::string k = "auto";
  std::string k_range = "2:8";
  int min_run = 1;
  double shrinkage = kDefaultShrinkage;
  int reduce_to = 0;
  std::uint64_t seed = 0;
  std::string out;
};

RegidOptions regimes_options(const RegimesArgs& args, int window) {
  RegidOptions opt;
  opt.window = window;
  opt.metric = metric_from_string(args.metric);
  if (args.k != "auto") {
    try {
      opt.k = std::stoi(args.k);
    } catch (const std::exception&) {
      throw UsageError("--k must be an integer or 'auto'");
    }
  }
  opt.k_range = parse_range(args.k_range);
  opt.min_run = args.min_run;
  opt.shrinkage = args.shrinkage;
  if (args.reduce_to > 0) opt.reduce_to = args.reduce_to;
  opt.seed = args.seed;
  return opt;
}

void write_regimes_outputs(const RegidResult& res, MetricKind metric,
                           const fs::path& out, const std::string& suffix) {
  write_json_file(
      segmentation_to_json(res.segmentation, metric, res.k, res.ch_curve),
      (out / ("segmentation" + suffix + ".json")).string());
  write_regimes_plot_csv(res.segmentation,
                         (out / ("regimes_plot" + suffix + ".csv")).string());
  write_ch_curve_csv(res.ch_curve, (out / ("ch_curve" + suffix + ".csv")).string());
}

int cmd_regimes(const RegimesArgs& args) {
  auto series = read_csv(args.input, args.delimiter);
  ensure_out_dir(args.out);
  fs::path out(args.out);
  MetricKind metric = metric_from_string(args.metric);

  if (!args.sweep.empty()) {
    auto windows = parse_sweep(args.sweep);
    std::vector<RegidResult> results(windows.size());
    parallel_for(windows.size(), worker_count(), [&](std::size_t i) {
      results[i] = run_regid(series, regimes_options(args, windows[i]));
    });
    for (std::size_t i = 0; i < windows.size(); ++i)
      write_regimes_outputs(results[i], metric, out,
                            "_w" + std::to_string(windows[i]));
    std::cout << "wrote sweep outputs for " << windows.size() << " window sizes to "
              << args.out << "\n";
    return kExitOk;
  }

  auto res = run_regid(series, regimes_options(args, args.window));
  write_regimes_outputs(res, metric, out, "");
  std::cout << "k=" << res.k << ", " << res.segmentation.segments.size()
            << " segments; wrote segmentation.json, regimes_plot.csv, "
               "ch_curve.csv to "
            << args.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CausalArgs {
  std::string input;
  char delimiter = ',';
  std::string segmentation;
  std::string truth;
  double alpha = 0.05;
  std::string order = "auto";
  int max_order = 10;
  bool bonferroni = false;
  std::string out;
};

int cmd_causal(const CausalArgs& args) {
  auto series = read_csv(args.input, args.delimiter);
  ensure_out_dir(args.out);
  fs::path out(args.out);

  GraphOptions gopt;
  gopt.alpha = args.alpha;
  gopt.max_order = args.max_order;
  gopt.bonferroni = args.bonferroni;
  if (args.order != "auto") {
    try {
      gopt.order = std::stoi(args.order);
    } catch (const std::exception&) {
      throw UsageError("--order must be an integer or 'auto'");
    }
  }

  std::optional<GroundTruth> truth;
  if (!args.truth.empty()) truth = truth_from_json(read_json_file(args.truth));

  auto whole = discover_graph(series, gopt);
  write_json_file(graph_to_json(whole), (out / "graph.json").string());

  if (args.segmentation.empty()) {
    std::cout << "wrote graph.json (" << whole.edges.size() << " edges) to "
              << args.out << "\n";
    return kExitOk;
  }

  auto seg = segmentation_from_json(read_json_file(args.segmentation));
  auto regimes = regime_wise_graphs(series, seg, gopt);

  json per_regime = json::array();
  std::vector<GraphScores> regime_scores;
  for (const auto& [id, graph] : regimes.graphs) {
    json entry;
    entry["regime"] = id;
    entry["graph"] = graph_to_json(graph);
    if (truth) {
      auto s = score_graph(graph, truth->adjacency, series.names);
      entry["scores"] = scores_to_json(s);
      regime_scores.push_back(s);
    }
    per_regime.push_back(entry);
  }
  json regimes_doc;
  regimes_doc["graphs"] = per_regime;
  regimes_doc["warnings"] = regimes.warnings;
  write_json_file(regimes_doc, (out / "regime_graphs.json").string());

  if (truth) {
    auto whole_scores = score_graph(whole, truth->adjacency, series.names);
    auto mean = mean_regime_scores(regime_scores);
    json scores;
    scores["whole_series"] = scores_to_json(whole_scores);
    scores["regime_wise_mean"] = scores_to_json(mean);
    scores["per_regime"] = json::array();
    for (std::size_t i = 0; i < regime_scores.size(); ++i)
      scores["per_regime"].push_back(scores_to_json(regime_scores[i]));
    write_json_file(scores, (out / "scores.json").string());

    std::ofstream table((out / "scores.txt").string());
    table << format_scores_table({{"VAR-GC (whole series)", whole_scores},
                                  {"VAR-GC (regime-wise mean)", mean}});
    std::cout << "wrote graph.json, regime_graphs.json, scores.json, scores.txt to "
              << args.out << "\n";
  } else {
    std::cout << "wrote graph.json and regime_graphs.json to " << args.out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReproduceArgs {
  std::string out;
  std::uint64_t seed = 7;
  bool reuse_data = false;
};

int cmd_reproduce(const ReproduceArgs& args) {
  ensure_out_dir(args.out);
  fs::path out(args.out);
  std::vector<StageTiming> timings;
  std::string stage = "generate";
  try {
    // Stage 1: data.
    if (!args.reuse_data) {
      SynthSpec spec = default_paper_spec();
      spec.seed = derive_seed(args.seed, "reproduce-data");
      auto [series, truth] = generate(spec);
      write_csv(series, (out / "series.csv").string());
      write_json_file(truth_to_json(truth), (out / "truth.json").string());
      write_json_file(spec_to_json(spec), (out / "spec.json").string());
    }

    // Stage 2: regime sweep on the emitted files, both metrics.
    stage = "regimes";
    auto series = read_csv((out / "series.csv").string());
    auto truth = truth_from_json(read_json_file((out / "truth.json").string()));
    auto sweep_start = std::chrono::steady_clock::now();
    for (auto metric : {MetricKind::AffineInvariant, MetricKind::Euclidean}) {
      for (int w : {15, 30, 45, 60, 75, 90}) {
        RegidOptions opt;
        opt.window = w;
        opt.metric = metric;
        opt.k = 3;
        opt.seed = derive_seed(args.seed, "reproduce-sweep", w);
        auto res = run_regid(series, opt);
        std::string suffix = "_" + to_string(metric) + "_w" + std::to_string(w);
        write_json_file(
            segmentation_to_json(res.segmentation, metric, res.k, res.ch_curve),
            (out / ("segmentation" + suffix + ".json")).string());
        write_regimes_plot_csv(res.segmentation,
                               (out / ("regimes_plot" + suffix + ".csv")).string());
      }
    }
    timings.push_back({"sweep-outputs",
                       std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - sweep_start)
                           .count(),
                       120.0});

    // Stage 3: whole-series vs regime-wise causal discovery on the files.
    stage = "causal";
    GraphOptions gopt;
    gopt.alpha = 0.05;
    auto whole = discover_graph(series, gopt);
    write_json_file(graph_to_json(whole), (out / "graph.json").string());
    RegidOptions opt;
    opt.window = 60;
    opt.seed = derive_seed(args.seed, "reproduce-regid");
    auto regid_res = run_regid(series, opt);
    write_json_file(segmentation_to_json(regid_res.segmentation,
                                         MetricKind::AffineInvariant,
                                         regid_res.k, regid_res.ch_curve),
                    (out / "segmentation.json").string());
    auto regimes = regime_wise_graphs(series, regid_res.segmentation, gopt);
    std::vector<GraphScores> per;
    json regime_graphs = json::array();
    for (const auto& [id, graph] : regimes.graphs) {
      per.push_back(score_graph(graph, truth.adjacency, series.names));
      regime_graphs.push_back({{"regime", id}, {"graph", graph_to_json(graph)}});
    }
    write_json_file({{"graphs", regime_graphs}, {"warnings", regimes.warnings}},
                    (out / "regime_graphs.json").string());
    auto whole_scores = score_graph(whole, truth.adjacency, series.names);
    auto mean = mean_regime_scores(per);
    write_json_file({{"whole_series", scores_to_json(whole_scores)},
                     {"regime_wise_mean", scores_to_json(mean)}},
                    (out / "scores.json").string());
    std::ofstream table((out / "scores.txt").string());
    table << format_scores_table({{"VAR-GC (whole series)", whole_scores},
                                  {"VAR-GC (regime-wise mean)", mean}});
    table.close();

    // Stage 4: the verification checklist.
    stage = "criteria";
    auto report = run_reproduction(args.seed, &timings);
    write_json_file(report_to_json(report), (out / "report.json").string());
    write_json_file(timings_to_json(timings), (out / "timings.json").string());

    for (const auto& c : report.criteria)
      std::cout << (c.pass ? "PASS" : "FAIL") << "  criterion " << c.id << "  "
                << c.name << "\n";
    if (!report.pass) {
      for (const auto& c : report.criteria)
        if (!c.pass)
          std::cerr << "reproduce: criterion " << c.id << " (" << c.name
                    << ") failed\n";
      return kExitVerification;
    }
    std::cout << "report.pass = true; wrote report.json to " << args.out << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    throw UsageError("stage " + stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + stage + ": " + e.what());
  } catch (const Error& e) {
    throw Error("stage " + stage + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime identification and regime-wise causal discovery"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate_cmd =
      app.add_subcommand("generate", "Synthesize a series with known regimes");
  generate_cmd->add_option("--spec", gen.spec_path, "Spec JSON path");
  generate_cmd->add_flag("--default-paper", gen.default_paper,
                         "Use the built-in default experiment spec");
  generate_cmd->add_option("--out", gen.out, "Output directory")->required();
  std::uint64_t gen_seed = 0;
  auto* gen_seed_opt =
      generate_cmd->add_option("--seed", gen_seed, "Override the spec seed");

  RegimesArgs reg;
  auto* regimes_cmd =
      app.add_subcommand("regimes", "Segment a series into covariance regimes");
  regimes_cmd->add_option("--input", reg.input, "Series CSV")->required();
  regimes_cmd->add_option("--delimiter", reg.delimiter, "CSV delimiter");
  regimes_cmd->add_option("--window", reg.window, "Window size (time steps)");
  regimes_cmd->add_option("--sweep", reg.sweep,
                          "Window sweep start:stop:step (emits per-w files)");
  regimes_cmd->add_option("--metric", reg.metric,
                          "euclidean | log-euclidean | riemannian");
  regimes_cmd->add_option("--k", reg.k, "Cluster count, or 'auto'");
  regimes_cmd->add_option("--k-range", reg.k_range, "Range for auto k (a:b)");
  regimes_cmd->add_option("--min-run", reg.min_run,
                          "Minimum run length in windows (1 = no smoothing)");
  regimes_cmd->add_option("--shrinkage", reg.shrinkage, "Covariance shrinkage");
  regimes_cmd->add_option("--reduce-dim", reg.reduce_to,
                          "Project covariances to this dimension");
  regimes_cmd->add_option("--seed", reg.seed, "Clustering seed");
  regimes_cmd->add_option("--out", reg.out, "Output directory")->required();

  CausalArgs causal;
  auto* causal_cmd =
      app.add_subcommand("causal", "Granger-causal discovery via VAR F-tests");
  causal_cmd->add_option("--input", causal.input, "Series CSV")->required();
  causal_cmd->add_option("--delimiter", causal.delimiter, "CSV delimiter");
  causal_cmd->add_option("--segmentation", causal.segmentation,
                         "segmentation.json for regime-wise discovery");
  causal_cmd->add_option("--truth", causal.truth,
                         "truth.json with the ground-truth adjacency");
  causal_cmd->add_option("--alpha", causal.alpha, "Significance level");
  causal_cmd->add_option("--order", causal.order, "VAR order, or 'auto' (BIC)");
  causal_cmd->add_option("--max-order", causal.max_order,
                         "Largest order considered by 'auto'");
  causal_cmd->add_flag("--bonferroni", causal.bonferroni,
                       "Bonferroni-correct the per-test alpha");
  causal_cmd->add_option("--out", causal.out, "Output directory")->required();

  ReproduceArgs rep;
  auto* reproduce_cmd = app.add_subcommand(
      "reproduce", "Run the end-to-end pipeline and verification checks");
  reproduce_cmd->add_option("--out", rep.out, "Output directory")->required();
  reproduce_cmd->add_option("--seed", rep.seed, "Top-level seed");
  reproduce_cmd->add_flag("--reuse-data", rep.reuse_data,
                          "Reuse series.csv/truth.json already in the out dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (generate_cmd->parsed()) {
      if (gen_seed_opt->count() > 0) gen.seed = gen_seed;
      return cmd_generate(gen);
    }
    if (regimes_cmd->parsed()) return cmd_regimes(reg);
    if (causal_cmd->parsed()) return cmd_causal(causal);
    if (reproduce_cmd->parsed()) return cmd_reproduce(rep);
  } catch (const std::exception& e) {
    std::cerr << "regid: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}
