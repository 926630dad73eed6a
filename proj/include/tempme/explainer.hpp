#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempme/base_model.hpp"
#include "tempme/features.hpp"
#include "tempme/motif.hpp"
#include "tempme/nn/layers.hpp"

namespace tempme {

enum class PriorKind { Uniform, Empirical };

std::string prior_name(PriorKind k);
std::optional<PriorKind> parse_prior(const std::string& s);

struct ExplainerConfig {
  MotifParams motif;            // delta is ignored when auto_delta is set
  bool auto_delta = true;       // delta = time span of the query's computational graph
  int motifs_per_node = 40;     // C, drawn for each endpoint
  double prior_p = 0.3;
  double beta = 0.5;
  PriorKind prior = PriorKind::Empirical;
  int epochs = 3;
  double lr = 1e-3;
  int batch = 32;
  std::size_t max_train_queries = 0;  // per epoch, 0 = every training sample
  std::size_t width = 64;
  std::size_t time_d = 50;
  int gine_layers = 1;
  double temperature = nn::kDefaultTemperature;
  int null_per_node = 100;
  double smoothing = kDefaultSmoothing;
  bool zero_scorer = false;     // scorer output layer starts at zero
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  static ExplainerConfig from_json(const nlohmann::json& j);
};

// Motifs drawn around both endpoints of one query, with their classes and the
// shared structural features.
struct QueryMotifs {
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;
  std::vector<MotifInstance> instances;  // u-anchored first, then v-anchored
  std::vector<int> side;                 // 0 for u, 1 for v
  std::vector<std::string> codes;
  StructuralMap structural;

  bool empty() const { return instances.empty(); }
};

// KL(Bernoulli(p_I) || Bernoulli(p)) summed over motifs.
double kl_uniform(std::span<const double> scores, double prior_p);
// (1-s) log((1-s)/(1-p)) + s sum_i q_i log(s q_i / (p m_i)); `classes` index `null_probs`.
double kl_empirical(std::span<const double> scores, std::span<const int> classes, double prior_p,
                    std::span<const double> null_probs);
// -log f for label 1, -log(1 - f) for label 0, plus beta * kl.
double ib_loss(double masked_prediction, int label, double kl, double beta);

nn::Var kl_uniform(nn::Tape& t, nn::Var scores, double prior_p);
nn::Var kl_empirical(nn::Tape& t, nn::Var scores, std::span<const int> classes, double prior_p,
                     std::span<const double> null_probs);
// Cross-entropy from the masked logit plus beta * kl.
nn::Var ib_loss(nn::Tape& t, nn::Var masked_logit, int label, nn::Var kl, double beta);

class Explainer {
 public:
  // `context_width` is the width of each frozen endpoint representation.
  static Explainer create(const ExplainerConfig& cfg, std::size_t attr_width, double time_span,
                          std::size_t context_width, std::map<std::string, double> null_probs);

  const ExplainerConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const std::map<std::string, double>& null_probs() const { return null_probs_; }
  std::size_t width() const { return cfg_.width; }

  QueryMotifs sample(const TemporalGraph& g, const EventSubset& ctx, NodeId u, NodeId v,
                     double t) const;

  // One embedding row per motif: GINE over each motif's events, mean readout.
  nn::Var encode(nn::Tape& t, const TemporalGraph& g, const QueryMotifs& m) const;
  // Importance score per motif from [m_I || x_anchor || x_other], clamped.
  nn::Var score(nn::Tape& t, nn::Var embeddings, const QueryMotifs& m,
                std::span<const double> xu, std::span<const double> xv) const;

  std::vector<double> scores(const TemporalGraph& g, const QueryMotifs& m,
                             std::span<const double> xu, std::span<const double> xv) const;
  // Mean motif embedding of the query; zeros when no motif was drawn.
  std::vector<double> mean_embedding(const TemporalGraph& g, const QueryMotifs& m) const;

  // Class index of each motif into the null probability vector.
  std::vector<int> class_index(const QueryMotifs& m) const;
  std::vector<double> null_vector() const;

  nlohmann::ordered_json to_json() const;
  static Explainer from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Explainer load(const std::filesystem::path& path);

 private:
  Explainer() = default;
  void build(double time_span);

  ExplainerConfig cfg_;
  std::size_t attr_width_ = 0;
  std::size_t context_width_ = 0;
  std::map<std::string, double> null_probs_;
  nn::ParameterStore store_;
  nn::TimeEncoder time_;
  nn::Affine input_;
  std::vector<nn::GineLayer> gine_;
  nn::Mlp scorer_;
};

// Event masks for a context: for each member the maximum mask over motifs
// containing it, 0 if none does.
std::vector<std::vector<int>> event_groups(const EventSubset& ctx, const QueryMotifs& m);

struct ExplainerTrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> batch_loss;
  std::size_t skipped_queries = 0;

  nlohmann::ordered_json to_json() const;
};

// Loss of one query on a fresh tape owned by `explainer`; used by training and
// the gradient checks.
nn::Var query_loss(nn::Tape& t, const TemporalGraph& g, const BaseModel& base,
                   const Explainer& explainer, const EventSubset& ctx, const QueryMotifs& m,
                   std::span<const double> xu, std::span<const double> xv, int label,
                   std::span<const double> uniforms);

// Builds the null probabilities from `g`, then trains on training-split queries
// (positives and equally many negatives) with labels taken from `base`.
Explainer train_explainer(const TemporalGraph& g, const BaseModel& base, const ExplainerConfig& cfg,
                          ExplainerTrainReport* report = nullptr);

struct MotifScore {
  std::string code;
  std::vector<EventId> events;
  double score = 0.0;
  int side = 0;
  bool truncated = false;
};

struct ExplanationResult {
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;
  EventId target = -1;
  double prediction = 0.0;
  EventSubset comp_graph;
  std::vector<MotifScore> motifs;
  std::vector<EventId> ranking;        // every member of comp_graph
  std::vector<double> ranking_scores;
  std::vector<double> levels;
  std::vector<std::vector<EventId>> retained;  // per level, ranking prefixes

  bool empty() const { return comp_graph.empty(); }
  std::vector<EventId> retained_at(double level) const;
  nlohmann::ordered_json to_json(const TemporalGraph& g) const;
  static ExplanationResult from_json(const nlohmann::json& j);
};

// Event score = max score of motifs containing the event (0 if none); order by
// score, then later timestamp, then smaller id.
void rank_events(const TemporalGraph& g, const EventSubset& ctx,
                 std::span<const std::vector<EventId>> motif_events, std::span<const double> scores,
                 std::vector<EventId>& ranking, std::vector<double>& ranking_scores);

ExplanationResult explain(const TemporalGraph& g, const BaseModel& base, const Explainer& explainer,
                          NodeId u, NodeId v, double t, std::span<const double> levels,
                          EventId target = -1);

}  // namespace tempme
