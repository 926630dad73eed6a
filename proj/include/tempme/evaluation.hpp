#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempme/base_model.hpp"
#include "tempme/explainer.hpp"
#include "tempme/metrics.hpp"

namespace tempme {

struct EvalConfig {
  std::vector<double> levels = sparsity_levels();
  double cohesion_level = 0.1;
  std::uint64_t seed = 0;  // random baseline
  int jobs = 1;
};

struct QueryEvaluation {
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;
  EventId target = -1;
  double full_prediction = 0.0;
  int label = 0;
  std::size_t comp_graph_size = 0;
  std::vector<double> fidelity;         // per level
  std::vector<int> match;               // explained label == original label
  std::vector<double> random_fidelity;
  std::vector<int> random_match;
  std::optional<double> cohesiveness;
  std::optional<double> random_cohesiveness;
};

struct EvalReport {
  std::vector<double> levels;
  std::vector<QueryEvaluation> queries;
  std::vector<double> accuracy;
  std::vector<double> random_accuracy;
  std::vector<double> mean_fidelity;
  std::vector<double> random_mean_fidelity;
  double acc_auc = 0.0;
  double random_acc_auc = 0.0;
  double cohesion_level = 0.0;
  std::size_t cohesion_queries = 0;  // queries where both sets have >= 2 events
  double mean_cohesiveness = 0.0;
  double random_mean_cohesiveness = 0.0;

  nlohmann::ordered_json to_json() const;
  // query,level,fidelity,acc,random_fidelity,random_acc
  std::string curve_csv() const;
  // explainer,level,sparsity,fidelity: mean points of the fidelity-sparsity curve
  std::string plot_csv() const;
};

// Scores every explanation's ranking prefixes with `model` next to a random
// ranking of the same computational graph.
EvalReport evaluate(const TemporalGraph& g, const Predictor& model,
                    std::span<const ExplanationResult> explanations, const EvalConfig& cfg);

}  // namespace tempme
