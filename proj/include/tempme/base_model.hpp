#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tempme/graph.hpp"
#include "tempme/nn/layers.hpp"

namespace tempme {

struct PredictionQuery {
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;
  // Masked view: only these events are visible. Absent means full history.
  std::optional<std::vector<EventId>> retained;
};

// Anything that scores a candidate interaction from its history.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double predict(const TemporalGraph& g, const PredictionQuery& q) const = 0;
  // The events the predictor can see for (u, v, t).
  virtual EventSubset context(const TemporalGraph& g, NodeId u, NodeId v, double t) const = 0;
};

struct BaseModelConfig {
  int neighbors = 20;
  std::size_t width = 64;
  std::size_t time_d = 16;
  std::size_t motif_width = 0;  // > 0 for the motif-enhanced head
  bool zero_head = false;       // output layer starts at zero

  nlohmann::ordered_json to_json() const;
  static BaseModelConfig from_json(const nlohmann::json& j);
};

// One temporal attention layer per endpoint over its most recent events.
// Keys and values are built from the neighbour's degree, the event attributes,
// the encoded time gap, and how often the neighbour also appears (mask-weighted)
// in the other endpoint's recent events. A two-layer head maps
// [x_u || x_v (|| motif)] to a logit.
class BaseModel : public Predictor {
 public:
  static BaseModel create(const BaseModelConfig& cfg, std::size_t attr_width, double time_span,
                          std::uint64_t seed);

  const BaseModelConfig& config() const { return cfg_; }
  std::size_t attr_width() const { return attr_width_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }

  EventSubset context(const TemporalGraph& g, NodeId u, NodeId v, double t) const override;
  double predict(const TemporalGraph& g, const PredictionQuery& q) const override;
  double predict_enhanced(const TemporalGraph& g, const PredictionQuery& q,
                          std::span<const double> motif_embedding) const;

  struct Forward {
    nn::Var logit;
    nn::Var xu;
    nn::Var xv;
  };
  // `weights` is a column with one mask value per member of `ctx`. `motif` is
  // a 1 x motif_width row, required exactly when the head is motif-enhanced.
  // Parameters are tracked when the tape owns this model's store and frozen
  // otherwise.
  Forward forward(nn::Tape& t, const TemporalGraph& g, NodeId u, NodeId v, double time,
                  const EventSubset& ctx, nn::Var weights, nn::Var motif = {}) const;

  // Unmasked endpoint representations x_u, x_v.
  std::pair<std::vector<double>, std::vector<double>> represent(const TemporalGraph& g, NodeId u,
                                                                NodeId v, double t) const;

  // Copy whose head takes an extra motif block; its first-layer rows for the
  // block start at zero, so predictions are unchanged until trained.
  BaseModel with_motif_head(std::size_t motif_width) const;
  bool is_head_param(const std::string& name) const;

  nlohmann::ordered_json to_json() const;
  static BaseModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static BaseModel load(const std::filesystem::path& path);

 private:
  BaseModel() = default;
  void build(std::uint64_t seed, double time_span);
  nn::Var side(nn::Tape& t, const TemporalGraph& g, NodeId a, NodeId b, double time,
               const EventSubset& ctx, nn::Var weights) const;
  nn::Var mask_column(nn::Tape& t, const EventSubset& ctx,
                      const std::optional<std::vector<EventId>>& retained) const;

  BaseModelConfig cfg_;
  std::size_t attr_width_ = 0;
  nn::ParameterStore store_;
  nn::TimeEncoder time_;
  nn::Affine key_;
  nn::Affine value_;
  nn::ParameterStore::Handle query_ = 0;
  nn::Affine hidden_;
  nn::Affine out_;
};

struct ChronoSplit {
  double train_end = 0.0;
  double val_end = 0.0;
  static ChronoSplit of(const TemporalGraph& g, double train_frac = 0.75, double val_frac = 0.8);
};

// A positive event or a corrupted copy with a random destination.
struct LinkSample {
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;
  int label = 0;
  EventId event = -1;  // source event for positives and their negatives
};

// Every event with lo < t <= hi, each followed by one negative whose
// destination is uniform over nodes other than u.
std::vector<LinkSample> link_samples(const TemporalGraph& g, double lo, double hi,
                                     std::uint64_t seed);

struct BaseTrainConfig {
  BaseModelConfig model;
  int epochs = 12;
  double lr = 1e-3;
  int batch = 64;
  int patience = 3;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  static BaseTrainConfig from_json(const nlohmann::json& j);
};

struct BaseTrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_ap;
  int best_epoch = -1;
  double test_ap = 0.0;
  bool diverged = false;

  nlohmann::ordered_json to_json() const;
};

// BCE on positives and uniform negatives, early stopping on validation AP.
// On a non-finite loss the last finite parameters are returned with `diverged` set.
BaseModel train_base(const TemporalGraph& g, const BaseTrainConfig& cfg,
                     BaseTrainReport* report = nullptr);

double average_precision(const Predictor& model, const TemporalGraph& g,
                         std::span<const LinkSample> samples);

using MotifEmbedder = std::function<std::vector<double>(NodeId u, NodeId v, double t)>;

struct EnhancedTrainReport {
  std::vector<double> val_ap;  // index 0 is the untouched head
  int best_epoch = 0;
  double plain_test_ap = 0.0;
  double enhanced_test_ap = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Fine-tunes only the head of with_motif_head(width) on fixed samples whose
// motif embeddings are computed once by `embed`.
BaseModel train_motif_enhanced(const TemporalGraph& g, const BaseModel& base,
                               const MotifEmbedder& embed, std::size_t motif_width,
                               const BaseTrainConfig& cfg, EnhancedTrainReport* report = nullptr);

}  // namespace tempme
