#include "tempme/base_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "tempme/error.hpp"
#include "tempme/metrics.hpp"
#include "tempme/nn/optim.hpp"

namespace tempme {

using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

constexpr int kBaseCheckpointVersion = 1;

// Co-occurrence counts are split by how recent the other endpoint's event is:
// rank 0-1, 2-4 and 5+ among its most recent events.
constexpr std::size_t kRecencyBins = 3;

std::size_t recency_bin(std::size_t rank_from_latest) {
  return rank_from_latest < 2 ? 0 : rank_from_latest < 5 ? 1 : 2;
}

std::span<const EventId> recent(const TemporalGraph& g, NodeId node, double before, int cap) {
  auto inc = g.incident_before(node, before, true);
  const auto k = std::min(inc.size(), static_cast<std::size_t>(cap));
  return inc.subspan(inc.size() - k);
}

int index_in(const EventSubset& ctx, EventId id) {
  auto it = std::lower_bound(ctx.members.begin(), ctx.members.end(), id);
  if (it == ctx.members.end() || *it != id) {
    throw InvariantError("event " + std::to_string(id) + " is not in the model context");
  }
  return static_cast<int>(it - ctx.members.begin());
}

}  // namespace

nlohmann::ordered_json BaseModelConfig::to_json() const {
  return {{"neighbors", neighbors},
          {"width", width},
          {"time_d", time_d},
          {"motif_width", motif_width},
          {"zero_head", zero_head}};
}

BaseModelConfig BaseModelConfig::from_json(const nlohmann::json& j) {
  BaseModelConfig c;
  c.neighbors = j.at("neighbors").get<int>();
  c.width = j.at("width").get<std::size_t>();
  c.time_d = j.at("time_d").get<std::size_t>();
  c.motif_width = j.at("motif_width").get<std::size_t>();
  c.zero_head = j.value("zero_head", false);
  return c;
}

BaseModel BaseModel::create(const BaseModelConfig& cfg, std::size_t attr_width, double time_span,
                            std::uint64_t seed) {
  if (cfg.neighbors < 1) throw ConfigError("base model needs at least one neighbour");
  if (cfg.width == 0 || cfg.time_d == 0) throw ConfigError("base model widths must be positive");
  BaseModel m;
  m.cfg_ = cfg;
  m.attr_width_ = attr_width;
  m.build(seed, time_span);
  return m;
}

void BaseModel::build(std::uint64_t seed, double time_span) {
  SplitMix64 rng(derive_seed(seed, {0xba5eULL}));
  const std::size_t h = cfg_.width;
  const std::size_t key_in = 1 + attr_width_ + 2 * cfg_.time_d + kRecencyBins + 1;
  time_ = nn::TimeEncoder::create(store_, "base.time", cfg_.time_d, time_span);
  key_ = nn::Affine::create(store_, "base.key", key_in, h, rng);
  value_ = nn::Affine::create(store_, "base.value", key_in, h, rng);
  query_ = store_.add("base.query", h, 1, nn::Init::Xavier, rng);
  hidden_ = nn::Affine::create(store_, "head.hidden", 2 * h + cfg_.motif_width, h, rng);
  out_ = nn::Affine::create(store_, "head.out", h, 1, rng,
                            cfg_.zero_head ? nn::Init::Zeros : nn::Init::Xavier);
}

EventSubset BaseModel::context(const TemporalGraph& g, NodeId u, NodeId v, double t) const {
  return computational_graph(g, u, v, t, 1, cfg_.neighbors);
}

Var BaseModel::side(Tape& t, const TemporalGraph& g, NodeId a, NodeId b, double time,
                    const EventSubset& ctx, Var weights) const {
  const auto mine = recent(g, a, time, cfg_.neighbors);
  const std::size_t k = mine.size();
  if (k == 0) return t.constant(Matrix(1, cfg_.width));
  const auto theirs = recent(g, b, time, cfg_.neighbors);

  Matrix base(k, 1 + attr_width_);
  Matrix direct(k, 1);
  std::vector<Matrix> cooc(kRecencyBins, Matrix(k, ctx.size()));
  std::vector<double> dt(k);
  std::vector<int> index(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Event& e = g.event(mine[i]);
    const NodeId w = e.other(a);
    base(i, 0) = std::log1p(static_cast<double>(g.degree_before(w, time)));
    for (std::size_t c = 0; c < attr_width_; ++c) base(i, 1 + c) = e.attrs[c];
    direct(i, 0) = w == b ? 1.0 : 0.0;
    dt[i] = time - e.t;
    index[i] = index_in(ctx, e.id);
    for (std::size_t r = 0; r < theirs.size(); ++r) {
      const EventId j = theirs[theirs.size() - 1 - r];
      if (g.event(j).other(b) == w) {
        cooc[recency_bin(r)](i, static_cast<std::size_t>(index_in(ctx, j))) += 1.0;
      }
    }
  }

  std::vector<Var> parts{t.constant(std::move(base)), time_(t, store_, dt)};
  for (auto& c : cooc) parts.push_back(t.matmul(t.constant(std::move(c)), weights));
  parts.push_back(t.constant(std::move(direct)));
  const Var in = t.concat_cols(parts);
  const Var keys = key_(t, store_, in);
  const Var vals = t.relu(value_(t, store_, in));
  const Var scores = t.scale(t.matmul(keys, t.param(store_, query_)),
                             1.0 / std::sqrt(static_cast<double>(cfg_.width)));
  const Var att = t.weighted_softmax(scores, t.gather_rows(weights, index));
  return t.matmul(t.transpose(att), vals);
}

BaseModel::Forward BaseModel::forward(Tape& t, const TemporalGraph& g, NodeId u, NodeId v,
                                      double time, const EventSubset& ctx, Var weights,
                                      Var motif) const {
  if (t.value(weights).rows != ctx.size() || t.value(weights).cols != 1) {
    throw ShapeError("base model: weights " + t.value(weights).shape_str() + " for a context of " +
                     std::to_string(ctx.size()) + " events");
  }
  if (motif.valid() != (cfg_.motif_width > 0)) {
    throw ShapeError(cfg_.motif_width > 0 ? "motif-enhanced head needs a motif embedding"
                                          : "plain head takes no motif embedding");
  }
  if (motif.valid() && (t.value(motif).rows != 1 || t.value(motif).cols != cfg_.motif_width)) {
    throw ShapeError("motif embedding " + t.value(motif).shape_str() + " vs expected (1x" +
                     std::to_string(cfg_.motif_width) + ")");
  }
  Forward f;
  f.xu = side(t, g, u, v, time, ctx, weights);
  f.xv = side(t, g, v, u, time, ctx, weights);
  std::vector<Var> head{f.xu, f.xv};
  if (motif.valid()) head.push_back(motif);
  const Var h = t.relu(hidden_(t, store_, t.concat_cols(head)));
  f.logit = out_(t, store_, h);
  return f;
}

Var BaseModel::mask_column(Tape& t, const EventSubset& ctx,
                           const std::optional<std::vector<EventId>>& retained) const {
  Matrix m(ctx.size(), 1, retained ? 0.0 : 1.0);
  if (retained) {
    for (EventId id : *retained) {
      auto it = std::lower_bound(ctx.members.begin(), ctx.members.end(), id);
      if (it != ctx.members.end() && *it == id) m(static_cast<std::size_t>(it - ctx.members.begin()), 0) = 1.0;
    }
  }
  return t.constant(std::move(m));
}

double BaseModel::predict(const TemporalGraph& g, const PredictionQuery& q) const {
  Tape t;
  const auto ctx = context(g, q.u, q.v, q.t);
  const auto f = forward(t, g, q.u, q.v, q.t, ctx, mask_column(t, ctx, q.retained));
  return t.item(t.sigmoid(f.logit));
}

double BaseModel::predict_enhanced(const TemporalGraph& g, const PredictionQuery& q,
                                   std::span<const double> motif_embedding) const {
  Tape t;
  const auto ctx = context(g, q.u, q.v, q.t);
  const auto f = forward(t, g, q.u, q.v, q.t, ctx, mask_column(t, ctx, q.retained),
                         t.constant(Matrix::row(motif_embedding)));
  return t.item(t.sigmoid(f.logit));
}

std::pair<std::vector<double>, std::vector<double>> BaseModel::represent(const TemporalGraph& g,
                                                                         NodeId u, NodeId v,
                                                                         double time) const {
  Tape t;
  const auto ctx = context(g, u, v, time);
  const Var w = mask_column(t, ctx, std::nullopt);
  const Var xu = side(t, g, u, v, time, ctx, w);
  const Var xv = side(t, g, v, u, time, ctx, w);
  return {t.value(xu).data, t.value(xv).data};
}

BaseModel BaseModel::with_motif_head(std::size_t motif_width) const {
  if (cfg_.motif_width != 0) throw ConfigError("model already has a motif-enhanced head");
  if (motif_width == 0) throw ConfigError("motif width must be positive");
  BaseModel m;
  m.cfg_ = cfg_;
  m.cfg_.motif_width = motif_width;
  m.attr_width_ = attr_width_;
  m.build(0, 1.0);
  for (auto& p : m.store_) {
    const auto& old = store_[store_.find(p.name)];
    if (p.name == "head.hidden.weight") {
      std::fill(p.value.begin(), p.value.end(), 0.0);
      std::copy(old.value.begin(), old.value.end(), p.value.begin());
    } else {
      p.value = old.value;
    }
  }
  return m;
}

bool BaseModel::is_head_param(const std::string& name) const { return name.rfind("head.", 0) == 0; }

nlohmann::ordered_json BaseModel::to_json() const {
  return {{"version", kBaseCheckpointVersion},
          {"kind", "base-model"},
          {"config", cfg_.to_json()},
          {"attr_width", attr_width_},
          {"parameters", store_.to_json()}};
}

BaseModel BaseModel::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "base-model") throw SchemaError("not a base-model checkpoint");
  if (j.at("version").get<int>() != kBaseCheckpointVersion) {
    throw SchemaError("unsupported base-model checkpoint version");
  }
  BaseModel m = create(BaseModelConfig::from_json(j.at("config")),
                       j.at("attr_width").get<std::size_t>(), 1.0, 0);
  m.store_.load_values(j.at("parameters"));
  return m;
}

void BaseModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DependencyError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

BaseModel BaseModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing base-model checkpoint " + path.string());
  return from_json(nlohmann::json::parse(in));
}

ChronoSplit ChronoSplit::of(const TemporalGraph& g, double train_frac, double val_frac) {
  const double lo = g.time_min(), span = g.time_span();
  return {lo + train_frac * span, lo + val_frac * span};
}

std::vector<LinkSample> link_samples(const TemporalGraph& g, double lo, double hi,
                                     std::uint64_t seed) {
  std::vector<LinkSample> out;
  if (g.node_count() < 2) return out;
  for (const auto& e : g.events()) {
    if (!(e.t > lo && e.t <= hi)) continue;
    out.push_back({e.u, e.v, e.t, 1, e.id});
    SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(e.id)}));
    auto neg = static_cast<NodeId>(uniform_index(rng, g.node_count() - 1));
    if (neg >= e.u) ++neg;
    out.push_back({e.u, neg, e.t, 0, e.id});
  }
  return out;
}

nlohmann::ordered_json BaseTrainConfig::to_json() const {
  return {{"model", model.to_json()}, {"epochs", epochs}, {"lr", lr},
          {"batch", batch},           {"patience", patience}, {"seed", seed}};
}

BaseTrainConfig BaseTrainConfig::from_json(const nlohmann::json& j) {
  BaseTrainConfig c;
  c.model = BaseModelConfig::from_json(j.at("model"));
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.batch = j.at("batch").get<int>();
  c.patience = j.at("patience").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

nlohmann::ordered_json BaseTrainReport::to_json() const {
  return {{"train_loss", train_loss}, {"val_ap", val_ap}, {"best_epoch", best_epoch},
          {"test_ap", test_ap},       {"diverged", diverged}};
}

double average_precision(const Predictor& model, const TemporalGraph& g,
                         std::span<const LinkSample> samples) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : samples) {
    scores.push_back(model.predict(g, {s.u, s.v, s.t, std::nullopt}));
    labels.push_back(s.label);
  }
  return average_precision(scores, labels);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Splits {
  std::vector<LinkSample> val, test;
};

Splits eval_splits(const TemporalGraph& g, std::uint64_t seed) {
  const auto split = ChronoSplit::of(g);
  return {link_samples(g, split.train_end, split.val_end, derive_seed(seed, {0x7a1ULL})),
          link_samples(g, split.val_end, kInf, derive_seed(seed, {0x7e57ULL}))};
}

void shuffle(std::vector<std::size_t>& order, std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
}

}  // namespace

BaseModel train_base(const TemporalGraph& g, const BaseTrainConfig& cfg, BaseTrainReport* report) {
  if (cfg.epochs < 1 || cfg.batch < 1) throw ConfigError("epochs and batch must be >= 1");
  BaseTrainReport local;
  BaseTrainReport& rep = report ? *report : local;
  rep = {};
  BaseModel model = BaseModel::create(cfg.model, g.attr_width(), g.time_span(), cfg.seed);
  const auto split = ChronoSplit::of(g);
  const auto eval = eval_splits(g, cfg.seed);
  nn::Adam opt(nn::AdamConfig{cfg.lr});
  nn::ParameterStore best = model.params();
  double best_ap = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs && !rep.diverged; ++epoch) {
    const auto train = link_samples(g, -kInf, split.train_end,
                                    derive_seed(cfg.seed, {0xe90cULL, static_cast<std::uint64_t>(epoch)}));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, derive_seed(cfg.seed, {0x5f1eULL, static_cast<std::uint64_t>(epoch)}));

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      const double scale = 1.0 / static_cast<double>(stop - start);
      nn::ParameterStore last_finite = model.params();
      model.params().zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& s = train[order[k]];
        Tape t(&model.params());
        const auto ctx = model.context(g, s.u, s.v, s.t);
        const auto f = model.forward(t, g, s.u, s.v, s.t, ctx, t.constant(Matrix(ctx.size(), 1, 1.0)));
        const Var loss = t.scale(t.softplus(s.label ? t.scale(f.logit, -1.0) : f.logit), scale);
        batch_loss += t.item(loss);
        t.backward(loss);
      }
      if (!std::isfinite(batch_loss)) {
        model.params() = last_finite;
        rep.diverged = true;
        break;
      }
      try {
        opt.step(model.params());
      } catch (const NumericError&) {
        model.params() = last_finite;
        rep.diverged = true;
        break;
      }
      epoch_loss += batch_loss * static_cast<double>(stop - start);
    }
    if (rep.diverged) break;
    rep.train_loss.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(1, train.size())));
    const double ap = average_precision(model, g, eval.val);
    rep.val_ap.push_back(ap);
    if (ap > best_ap) {
      best_ap = ap;
      best = model.params();
      rep.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (!rep.diverged) model.params() = best;
  model.params().zero_grad();
  rep.test_ap = average_precision(model, g, eval.test);
  return model;
}

nlohmann::ordered_json EnhancedTrainReport::to_json() const {
  return {{"val_ap", val_ap},
          {"best_epoch", best_epoch},
          {"plain_test_ap", plain_test_ap},
          {"enhanced_test_ap", enhanced_test_ap}};
}

BaseModel train_motif_enhanced(const TemporalGraph& g, const BaseModel& base,
                               const MotifEmbedder& embed, std::size_t motif_width,
                               const BaseTrainConfig& cfg, EnhancedTrainReport* report) {
  if (cfg.epochs < 1 || cfg.batch < 1) throw ConfigError("epochs and batch must be >= 1");
  EnhancedTrainReport local;
  EnhancedTrainReport& rep = report ? *report : local;
  rep = {};
  BaseModel model = base.with_motif_head(motif_width);
  const auto split = ChronoSplit::of(g);
  const auto eval = eval_splits(g, cfg.seed);
  const auto train = link_samples(g, -kInf, split.train_end, derive_seed(cfg.seed, {0xe4ULL}));

  auto embeddings = [&](std::span<const LinkSample> samples) {
    std::vector<std::vector<double>> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
      auto e = embed(s.u, s.v, s.t);
      if (e.size() != motif_width) {
        throw ShapeError("motif embedding width " + std::to_string(e.size()) + " != " +
                         std::to_string(motif_width));
      }
      out.push_back(std::move(e));
    }
    return out;
  };
  const auto train_emb = embeddings(train);
  const auto val_emb = embeddings(eval.val);
  const auto test_emb = embeddings(eval.test);

  auto ap_of = [&](const BaseModel& m, std::span<const LinkSample> samples,
                   const std::vector<std::vector<double>>& emb) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      scores.push_back(m.predict_enhanced(g, {s.u, s.v, s.t, std::nullopt}, emb[i]));
      labels.push_back(s.label);
    }
    return average_precision(scores, labels);
  };

  nn::Adam opt(nn::AdamConfig{cfg.lr});
  nn::ParameterStore best = model.params();
  double best_ap = ap_of(model, eval.val, val_emb);
  rep.val_ap.push_back(best_ap);
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, derive_seed(cfg.seed, {0xe45fULL, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      const double scale = 1.0 / static_cast<double>(stop - start);
      model.params().zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& s = train[order[k]];
        Tape t(&model.params());
        const auto ctx = model.context(g, s.u, s.v, s.t);
        const auto f = model.forward(t, g, s.u, s.v, s.t, ctx, t.constant(Matrix(ctx.size(), 1, 1.0)),
                                     t.constant(Matrix::row(train_emb[order[k]])));
        t.backward(t.scale(t.softplus(s.label ? t.scale(f.logit, -1.0) : f.logit), scale));
      }
      for (auto& p : model.params()) {
        if (!model.is_head_param(p.name)) std::fill(p.grad.begin(), p.grad.end(), 0.0);
      }
      opt.step(model.params());
    }
    const double ap = ap_of(model, eval.val, val_emb);
    rep.val_ap.push_back(ap);
    if (ap > best_ap) {
      best_ap = ap;
      best = model.params();
      rep.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.params() = best;
  model.params().zero_grad();
  rep.plain_test_ap = average_precision(base, g, eval.test);
  rep.enhanced_test_ap = ap_of(model, eval.test, test_emb);
  return model;
}

}  // namespace tempme
