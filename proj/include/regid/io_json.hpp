#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "regid/clustering.hpp"
#include "regid/errors.hpp"
#include "regid/evaluation.hpp"
#include "regid/synth.hpp"
#include "regid/var.hpp"

namespace regid {

using json = nlohmann::json;

inline json segmentation_to_json(const RegimeSegmentation& seg, MetricKind metric,
                                 int k, const std::vector<ChPoint>& ch_curve) {
  json j;
  j["window"] = seg.window;
  j["metric"] = to_string(metric);
  j["k"] = k;
  j["segments"] = json::array();
  for (const auto& s : seg.segments)
    j["segments"].push_back({{"start", s.start}, {"end", s.end},
                             {"regime", s.regime}});
  j["change_points"] = seg.change_points;
  j["ch_curve"] = json::array();
  for (const auto& p : ch_curve)
    j["ch_curve"].push_back({{"k", p.k}, {"score", p.score}});
  return j;
}

inline RegimeSegmentation segmentation_from_json(const json& j) {
  RegimeSegmentation seg;
  seg.window = j.at("window").get<int>();
  for (const auto& s : j.at("segments"))
    seg.segments.push_back({s.at("start").get<long>(), s.at("end").get<long>(),
                            s.at("regime").get<int>()});
  for (const auto& cp : j.at("change_points"))
    seg.change_points.push_back(cp.get<long>());
  return seg;
}

inline json graph_to_json(const CausalGraph& g) {
  json j;
  j["alpha"] = g.alpha;
  j["order"] = g.order;
  j["nodes"] = g.names;
  j["edges"] = json::array();
  for (const auto& e : g.edges)
    j["edges"].push_back({{"source", g.names.at(e.source)},
                          {"target", g.names.at(e.target)},
                          {"p_value", e.p_value},
                          {"min_lag", e.min_lag}});
  return j;
}

inline json scores_to_json(const GraphScores& s) {
  return json{{"tp", s.tp},
              {"fp", s.fp},
              {"tn", s.tn},
              {"fn", s.fn},
              {"precision", s.precision},
              {"recall", s.recall},
              {"accuracy", s.accuracy},
              {"f_score", s.f_score},
              {"degenerate", s.degenerate}};
}

inline json segmentation_scores_to_json(const SegmentationScores& s) {
  return json{{"rcp_recall", s.rcp_recall},
              {"rcp_precision", s.rcp_precision},
              {"label_agreement", s.label_agreement},
              {"margin", s.margin}};
}

inline json spec_to_json(const SynthSpec& spec) {
  json j;
  j["version"] = spec.version;
  j["n_vars"] = spec.n_vars;
  j["length"] = spec.length;
  j["seed"] = spec.seed;
  j["clip"] = spec.clip;
  j["autocoeffs"] = spec.autocoeffs;
  j["noise_std"] = spec.noise_std;
  j["couplings"] = json::array();
  for (const auto& c : spec.couplings)
    j["couplings"].push_back({{"source", c.source},
                              {"target", c.target},
                              {"coeff", c.coeff},
                              {"lag", c.lag},
                              {"func", to_string(c.func)},
                              {"param", c.param}});
  j["regimes"] = json::array();
  for (const auto& r : spec.regimes) {
    json reg;
    reg["start"] = r.start;
    reg["mean_shift"] = std::vector<double>(r.mean_shift.begin(),
                                            r.mean_shift.end());
    reg["variance_scale"] = std::vector<double>(r.variance_scale.begin(),
                                                r.variance_scale.end());
    reg["noise_scale"] = std::vector<double>(r.noise_scale.begin(),
                                             r.noise_scale.end());
    j["regimes"].push_back(reg);
  }
  return j;
}

inline SynthSpec spec_from_json(const json& j) {
  SynthSpec spec;
  try {
    spec.version = j.value("version", "");
    spec.n_vars = j.at("n_vars").get<int>();
    spec.length = j.at("length").get<long>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.clip = j.value("clip", 10.0);
    spec.autocoeffs = j.at("autocoeffs").get<std::vector<double>>();
    spec.noise_std = j.at("noise_std").get<std::vector<double>>();
    for (const auto& c : j.at("couplings"))
      spec.couplings.push_back(
          {c.at("source").get<int>(), c.at("target").get<int>(),
           c.at("coeff").get<double>(), c.at("lag").get<int>(),
           coupling_func_from_string(c.at("func").get<std::string>()),
           c.value("param", 0.0)});
    for (const auto& r : j.at("regimes")) {
      RegimeSpec reg;
      reg.start = r.at("start").get<long>();
      auto mean = r.at("mean_shift").get<std::vector<double>>();
      auto var = r.at("variance_scale").get<std::vector<double>>();
      auto noise = r.at("noise_scale").get<std::vector<double>>();
      reg.mean_shift = Eigen::Map<Eigen::VectorXd>(mean.data(), mean.size());
      reg.variance_scale = Eigen::Map<Eigen::VectorXd>(var.data(), var.size());
      reg.noise_scale = Eigen::Map<Eigen::VectorXd>(noise.data(), noise.size());
      spec.regimes.push_back(std::move(reg));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("spec JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline json truth_to_json(const GroundTruth& truth) {
  json j;
  j["adjacency"] = json::array();
  for (int i = 0; i < truth.adjacency.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < truth.adjacency.cols(); ++c)
      row.push_back(truth.adjacency(i, c));
    j["adjacency"].push_back(row);
  }
  j["rcps"] = truth.rcps;
  // Run-length encoded labels: [[value, count], ...].
  j["regime_labels"] = json::array();
  for (std::size_t t = 0; t < truth.regime_labels.size();) {
    std::size_t run = t;
    while (run < truth.regime_labels.size() &&
           truth.regime_labels[run] == truth.regime_labels[t])
      ++run;
    j["regime_labels"].push_back({truth.regime_labels[t], run - t});
    t = run;
  }
  return j;
}

inline GroundTruth truth_from_json(const json& j) {
  GroundTruth truth;
  try {
    const auto& adj = j.at("adjacency");
    const int n = static_cast<int>(adj.size());
    truth.adjacency.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < n; ++c) truth.adjacency(i, c) = adj[i][c].get<int>();
    for (const auto& rcp : j.at("rcps")) truth.rcps.push_back(rcp.get<long>());
    for (const auto& run : j.at("regime_labels")) {
      int value = run[0].get<int>();
      long count = run[1].get<long>();
      truth.regime_labels.insert(truth.regime_labels.end(), count, value);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("truth JSON: ") + e.what());
  }
  return truth;
}

inline void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

}  // namespace regid
