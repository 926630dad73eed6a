#include "tempme/explainer.hpp"

#include <algorithm>
#include <bit>
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

constexpr int kExplainerCheckpointVersion = 1;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t query_key(NodeId u, NodeId v, double t) {
  return derive_seed(std::bit_cast<std::uint64_t>(t),
                     {static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v)});
}

void check_prior(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("prior belief p must lie in (0, 1)");
}

}  // namespace

std::string prior_name(PriorKind k) { return k == PriorKind::Uniform ? "uniform" : "empirical"; }

std::optional<PriorKind> parse_prior(const std::string& s) {
  if (s == "uniform") return PriorKind::Uniform;
  if (s == "empirical") return PriorKind::Empirical;
  return std::nullopt;
}

nlohmann::ordered_json ExplainerConfig::to_json() const {
  nlohmann::ordered_json m{{"max_nodes", motif.max_nodes}, {"length", motif.length}};
  m["delta"] = std::isfinite(motif.delta) ? nlohmann::ordered_json(motif.delta) : nlohmann::ordered_json();
  return {{"motif", m},
          {"auto_delta", auto_delta},
          {"motifs_per_node", motifs_per_node},
          {"prior_p", prior_p},
          {"beta", beta},
          {"prior", prior_name(prior)},
          {"epochs", epochs},
          {"lr", lr},
          {"batch", batch},
          {"max_train_queries", max_train_queries},
          {"width", width},
          {"time_d", time_d},
          {"gine_layers", gine_layers},
          {"temperature", temperature},
          {"null_per_node", null_per_node},
          {"smoothing", smoothing},
          {"zero_scorer", zero_scorer},
          {"seed", seed}};
}

ExplainerConfig ExplainerConfig::from_json(const nlohmann::json& j) {
  ExplainerConfig c;
  const auto& m = j.at("motif");
  c.motif.max_nodes = m.at("max_nodes").get<int>();
  c.motif.length = m.at("length").get<int>();
  c.motif.delta = m.at("delta").is_null() ? kInf : m.at("delta").get<double>();
  c.auto_delta = j.at("auto_delta").get<bool>();
  c.motifs_per_node = j.at("motifs_per_node").get<int>();
  c.prior_p = j.at("prior_p").get<double>();
  c.beta = j.at("beta").get<double>();
  auto prior = parse_prior(j.at("prior").get<std::string>());
  if (!prior) throw SchemaError("unknown prior kind");
  c.prior = *prior;
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.batch = j.at("batch").get<int>();
  c.max_train_queries = j.at("max_train_queries").get<std::size_t>();
  c.width = j.at("width").get<std::size_t>();
  c.time_d = j.at("time_d").get<std::size_t>();
  c.gine_layers = j.at("gine_layers").get<int>();
  c.temperature = j.at("temperature").get<double>();
  c.null_per_node = j.at("null_per_node").get<int>();
  c.smoothing = j.at("smoothing").get<double>();
  c.zero_scorer = j.at("zero_scorer").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// --- loss algebra ----------------------------------------------------------

double kl_uniform(std::span<const double> scores, double prior_p) {
  check_prior(prior_p);
  double out = 0.0;
  for (double p : scores) {
    if (p > 0.0) out += p * std::log(p / prior_p);
    if (p < 1.0) out += (1.0 - p) * std::log((1.0 - p) / (1.0 - prior_p));
  }
  return out;
}

double kl_empirical(std::span<const double> scores, std::span<const int> classes, double prior_p,
                    std::span<const double> null_probs) {
  check_prior(prior_p);
  if (scores.size() != classes.size()) throw ShapeError("kl_empirical: one class per score");
  if (scores.empty()) throw ShapeError("kl_empirical: no scores");
  const double n = static_cast<double>(scores.size());
  std::vector<double> mass(null_probs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto c = static_cast<std::size_t>(classes[i]);
    if (c >= null_probs.size()) throw ShapeError("kl_empirical: class index out of range");
    mass[c] += scores[i];
    total += scores[i];
  }
  const double s = total / n;
  double out = s < 1.0 ? (1.0 - s) * std::log((1.0 - s) / (1.0 - prior_p)) : 0.0;
  if (total <= 0.0) return out;
  for (std::size_t c = 0; c < mass.size(); ++c) {
    if (mass[c] <= 0.0) continue;
    if (!(null_probs[c] > 0.0)) throw NumericError("kl_empirical: zero null probability");
    const double sq = mass[c] / n;  // s * q_c
    out += sq * std::log(sq / (prior_p * null_probs[c]));
  }
  return out;
}

double ib_loss(double masked_prediction, int label, double kl, double beta) {
  const double ce = label ? -std::log(masked_prediction) : -std::log(1.0 - masked_prediction);
  const double loss = ce + beta * kl;
  if (std::isnan(loss)) throw NumericError("ib_loss: non-finite loss");
  return loss;
}

Var kl_uniform(Tape& t, Var scores, double prior_p) {
  check_prior(prior_p);
  const Var q = t.add_const(t.scale(scores, -1.0), 1.0);
  const Var a = t.mul(scores, t.add_const(t.log(scores), -std::log(prior_p)));
  const Var b = t.mul(q, t.add_const(t.log(q), -std::log(1.0 - prior_p)));
  return t.sum(t.add(a, b));
}

Var kl_empirical(Tape& t, Var scores, std::span<const int> classes, double prior_p,
                 std::span<const double> null_probs) {
  check_prior(prior_p);
  const auto& sv = t.value(scores);
  if (sv.cols != 1 || sv.rows != classes.size() || sv.rows == 0) {
    throw ShapeError("kl_empirical: scores " + sv.shape_str() + " vs " +
                     std::to_string(classes.size()) + " classes");
  }
  // Compact the classes present in this motif set.
  std::vector<int> present;
  for (int c : classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= null_probs.size()) {
      throw ShapeError("kl_empirical: class index out of range");
    }
    if (std::find(present.begin(), present.end(), c) == present.end()) present.push_back(c);
  }
  std::sort(present.begin(), present.end());
  std::vector<int> compact(classes.size());
  Matrix log_pm(present.size(), 1);
  for (std::size_t i = 0; i < present.size(); ++i) {
    log_pm(i, 0) = std::log(prior_p * null_probs[static_cast<std::size_t>(present[i])]);
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    compact[i] = static_cast<int>(std::lower_bound(present.begin(), present.end(), classes[i]) -
                                  present.begin());
  }
  const double inv_n = 1.0 / static_cast<double>(classes.size());
  const Var s = t.scale(t.sum(scores), inv_n);
  const Var rest = t.add_const(t.scale(s, -1.0), 1.0);
  const Var first = t.mul(rest, t.add_const(t.log(rest), -std::log(1.0 - prior_p)));
  const Var sq = t.scale(t.scatter_add_rows(scores, compact, present.size()), inv_n);
  const Var second = t.sum(t.mul(sq, t.sub(t.log(sq), t.constant(std::move(log_pm)))));
  return t.add(first, second);
}

Var ib_loss(Tape& t, Var masked_logit, int label, Var kl, double beta) {
  const Var ce = t.softplus(label ? t.scale(masked_logit, -1.0) : masked_logit);
  return t.add(ce, t.scale(kl, beta));
}

// --- model -----------------------------------------------------------------

Explainer Explainer::create(const ExplainerConfig& cfg, std::size_t attr_width, double time_span,
                            std::size_t context_width, std::map<std::string, double> null_probs) {
  if (cfg.motifs_per_node < 1) throw ConfigError("explainer: C must be >= 1");
  if (cfg.gine_layers < 1) throw ConfigError("explainer: at least one GINE layer");
  if (cfg.width == 0 || cfg.time_d == 0) throw ConfigError("explainer widths must be positive");
  if (!(cfg.temperature > 0.0)) throw ConfigError("Concrete temperature must be positive");
  check_prior(cfg.prior_p);
  Explainer e;
  e.cfg_ = cfg;
  e.attr_width_ = attr_width;
  e.context_width_ = context_width;
  e.null_probs_ = std::move(null_probs);
  for (const auto& code : motif_alphabet(cfg.motif.max_nodes, cfg.motif.length)) {
    if (!e.null_probs_.count(code.str())) {
      throw SchemaError("null probabilities miss class " + code.str());
    }
  }
  e.build(time_span);
  return e;
}

void Explainer::build(double time_span) {
  SplitMix64 rng(derive_seed(cfg_.seed, {0xe8b1ULL}));
  const std::size_t w = cfg_.width;
  const std::size_t edge_width =
      event_feature_width(attr_width_, cfg_.time_d, cfg_.motif.length);
  time_ = nn::TimeEncoder::create(store_, "explainer.time", cfg_.time_d, time_span);
  input_ = nn::Affine::create(store_, "explainer.input", 2, w, rng);
  gine_.clear();
  for (int i = 0; i < cfg_.gine_layers; ++i) {
    gine_.push_back(nn::GineLayer::create(store_, "explainer.gine" + std::to_string(i), w,
                                          edge_width, rng));
  }
  const std::size_t widths[] = {w + 2 * context_width_, w, 1};
  scorer_ = nn::Mlp::create(store_, "explainer.scorer", widths, rng);
  if (cfg_.zero_scorer) {
    auto& last = store_[scorer_.layers.back().weight];
    std::fill(last.value.begin(), last.value.end(), 0.0);
  }
}

QueryMotifs Explainer::sample(const TemporalGraph& g, const EventSubset& ctx, NodeId u, NodeId v,
                              double t) const {
  QueryMotifs m;
  m.u = u;
  m.v = v;
  m.t = t;
  if (ctx.empty()) return m;
  MotifParams p = cfg_.motif;
  if (cfg_.auto_delta) {
    double lo = kInf;
    for (EventId id : ctx.members) lo = std::min(lo, g.event(id).t);
    p.delta = t - lo;
  }
  const std::uint64_t seed = derive_seed(cfg_.seed, {0x5a3bULL, query_key(u, v, t)});
  for (int s = 0; s < 2; ++s) {
    auto inst = sample_motifs(g, s == 0 ? u : v, t, p, cfg_.motifs_per_node, seed);
    for (auto& i : inst) {
      m.codes.push_back(motif_code(g, i).str());
      m.side.push_back(s);
      m.instances.push_back(std::move(i));
    }
  }
  m.structural = anonymize(g, m.instances, cfg_.motif.length);
  return m;
}

Var Explainer::encode(Tape& t, const TemporalGraph& g, const QueryMotifs& m) const {
  if (m.empty()) throw InvariantError("encode: no motifs");
  std::vector<double> node_feats;
  std::vector<int> segment;
  std::vector<nn::MessageEdge> events;
  std::vector<double> dts;
  Matrix attrs(0, attr_width_);
  std::vector<double> attr_data, h_data;
  int offset = 0;
  for (std::size_t k = 0; k < m.instances.size(); ++k) {
    const auto& inst = m.instances[k];
    const auto nodes = inst.nodes(g);
    for (NodeId n : nodes) {
      node_feats.push_back(1.0);
      node_feats.push_back(std::log1p(static_cast<double>(g.degree_before(n, m.t))));
      segment.push_back(static_cast<int>(k));
    }
    auto local = [&](NodeId n) {
      return offset + static_cast<int>(std::find(nodes.begin(), nodes.end(), n) - nodes.begin());
    };
    for (EventId id : inst.events) {
      const Event& e = g.event(id);
      events.push_back({local(e.u), local(e.v), static_cast<int>(dts.size())});
      dts.push_back(inst.anchor_time - e.t);
      attr_data.insert(attr_data.end(), e.attrs.begin(), e.attrs.end());
      auto it = m.structural.find(make_pair_key(e.u, e.v));
      if (it == m.structural.end()) throw InvariantError("encode: pair missing from structural map");
      h_data.insert(h_data.end(), it->second.begin(), it->second.end());
    }
    offset += static_cast<int>(nodes.size());
  }
  const std::size_t rows = dts.size();
  std::vector<Var> parts;
  if (attr_width_ > 0) parts.push_back(t.constant(Matrix(rows, attr_width_, std::move(attr_data))));
  parts.push_back(time_(t, store_, dts));
  parts.push_back(t.constant(Matrix(rows, static_cast<std::size_t>(cfg_.motif.length), std::move(h_data))));
  const Var edge_feats = t.concat_cols(parts);
  const auto edges = nn::undirected_edges(events);

  Var x = input_(t, store_, t.constant(Matrix(segment.size(), 2, std::move(node_feats))));
  for (std::size_t i = 0; i < gine_.size(); ++i) {
    if (i > 0) x = t.relu(x);
    x = gine_[i](t, store_, x, edges, edge_feats);
  }
  return t.segment_mean_rows(x, segment, m.instances.size());
}

Var Explainer::score(Tape& t, Var embeddings, const QueryMotifs& m, std::span<const double> xu,
                     std::span<const double> xv) const {
  if (xu.size() != context_width_ || xv.size() != context_width_) {
    throw ShapeError("scorer: endpoint representations of width " + std::to_string(xu.size()) +
                     " vs expected " + std::to_string(context_width_));
  }
  Matrix ctx(m.instances.size(), 2 * context_width_);
  for (std::size_t k = 0; k < m.instances.size(); ++k) {
    auto row = ctx.row_span(k);
    const auto first = m.side[k] == 0 ? xu : xv;
    const auto second = m.side[k] == 0 ? xv : xu;
    std::copy(first.begin(), first.end(), row.begin());
    std::copy(second.begin(), second.end(), row.begin() + static_cast<long>(context_width_));
  }
  const Var parts[] = {embeddings, t.constant(std::move(ctx))};
  const Var logits = scorer_(t, store_, t.concat_cols(parts));
  return t.clamp(t.sigmoid(logits), nn::kScoreClampLo, nn::kScoreClampHi);
}

std::vector<double> Explainer::scores(const TemporalGraph& g, const QueryMotifs& m,
                                      std::span<const double> xu, std::span<const double> xv) const {
  if (m.empty()) return {};
  Tape t;
  return t.value(score(t, encode(t, g, m), m, xu, xv)).data;
}

std::vector<double> Explainer::mean_embedding(const TemporalGraph& g, const QueryMotifs& m) const {
  if (m.empty()) return std::vector<double>(cfg_.width, 0.0);
  Tape t;
  return t.value(t.mean_rows(encode(t, g, m))).data;
}

std::vector<int> Explainer::class_index(const QueryMotifs& m) const {
  std::vector<int> out;
  out.reserve(m.codes.size());
  for (const auto& c : m.codes) {
    auto it = null_probs_.find(c);
    if (it == null_probs_.end()) throw InvariantError("motif class " + c + " outside the alphabet");
    out.push_back(static_cast<int>(std::distance(null_probs_.begin(), it)));
  }
  return out;
}

std::vector<double> Explainer::null_vector() const {
  std::vector<double> out;
  for (const auto& [code, p] : null_probs_) out.push_back(p);
  return out;
}

nlohmann::ordered_json Explainer::to_json() const {
  nlohmann::ordered_json null = nlohmann::ordered_json::object();
  for (const auto& [code, p] : null_probs_) null[code] = p;
  return {{"version", kExplainerCheckpointVersion},
          {"kind", "explainer"},
          {"config", cfg_.to_json()},
          {"attr_width", attr_width_},
          {"context_width", context_width_},
          {"null_probs", null},
          {"parameters", store_.to_json()}};
}

Explainer Explainer::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "explainer") throw SchemaError("not an explainer checkpoint");
  if (j.at("version").get<int>() != kExplainerCheckpointVersion) {
    throw SchemaError("unsupported explainer checkpoint version");
  }
  std::map<std::string, double> null;
  for (const auto& [code, p] : j.at("null_probs").items()) null[code] = p.get<double>();
  Explainer e = create(ExplainerConfig::from_json(j.at("config")),
                       j.at("attr_width").get<std::size_t>(), 1.0,
                       j.at("context_width").get<std::size_t>(), std::move(null));
  e.store_.load_values(j.at("parameters"));
  return e;
}

void Explainer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DependencyError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

Explainer Explainer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing explainer checkpoint " + path.string());
  return from_json(nlohmann::json::parse(in));
}

std::vector<std::vector<int>> event_groups(const EventSubset& ctx, const QueryMotifs& m) {
  std::vector<std::vector<int>> groups(ctx.size());
  for (std::size_t k = 0; k < m.instances.size(); ++k) {
    for (EventId id : m.instances[k].events) {
      auto it = std::lower_bound(ctx.members.begin(), ctx.members.end(), id);
      if (it == ctx.members.end() || *it != id) continue;
      auto& grp = groups[static_cast<std::size_t>(it - ctx.members.begin())];
      if (grp.empty() || grp.back() != static_cast<int>(k)) grp.push_back(static_cast<int>(k));
    }
  }
  return groups;
}

// --- training --------------------------------------------------------------

Var query_loss(Tape& t, const TemporalGraph& g, const BaseModel& base, const Explainer& explainer,
               const EventSubset& ctx, const QueryMotifs& m, std::span<const double> xu,
               std::span<const double> xv, int label, std::span<const double> uniforms) {
  const auto& cfg = explainer.config();
  const Var p = explainer.score(t, explainer.encode(t, g, m), m, xu, xv);
  const Var alpha = nn::concrete_sample(t, p, cfg.temperature, uniforms);
  const Var weights = t.segment_max(alpha, event_groups(ctx, m));
  const auto f = base.forward(t, g, m.u, m.v, m.t, ctx, weights);
  const Var kl = cfg.prior == PriorKind::Uniform
                     ? kl_uniform(t, p, cfg.prior_p)
                     : kl_empirical(t, p, explainer.class_index(m), cfg.prior_p,
                                    explainer.null_vector());
  return ib_loss(t, f.logit, label, kl, cfg.beta);
}

nlohmann::ordered_json ExplainerTrainReport::to_json() const {
  return {{"epoch_loss", epoch_loss}, {"skipped_queries", skipped_queries}};
}

Explainer train_explainer(const TemporalGraph& g, const BaseModel& base, const ExplainerConfig& cfg,
                          ExplainerTrainReport* report) {
  if (cfg.epochs < 1 || cfg.batch < 1) throw ConfigError("epochs and batch must be >= 1");
  ExplainerTrainReport local;
  ExplainerTrainReport& rep = report ? *report : local;
  rep = {};
  MotifParams null_params = cfg.motif;
  null_params.delta = kInf;
  auto null = null_class_probs(g, null_params, cfg.null_per_node, derive_seed(cfg.seed, {0x9a11ULL}),
                               cfg.smoothing);
  Explainer ex = Explainer::create(cfg, g.attr_width(), g.time_span(), base.config().width,
                                   std::move(null));

  struct Prepared {
    EventSubset ctx;
    QueryMotifs motifs;
    std::vector<double> xu, xv;
    int label;
  };
  const auto split = ChronoSplit::of(g);
  std::vector<Prepared> queries;
  for (const auto& s : link_samples(g, -kInf, split.train_end, derive_seed(cfg.seed, {0xe7ULL}))) {
    Prepared q;
    q.ctx = base.context(g, s.u, s.v, s.t);
    q.motifs = ex.sample(g, q.ctx, s.u, s.v, s.t);
    if (q.motifs.empty()) {
      ++rep.skipped_queries;
      continue;
    }
    std::tie(q.xu, q.xv) = base.represent(g, s.u, s.v, s.t);
    q.label = predicted_label(base.predict(g, {s.u, s.v, s.t, std::nullopt}));
    queries.push_back(std::move(q));
  }
  if (queries.empty()) throw ConfigError("explainer: no training query has motifs");

  nn::Adam opt(nn::AdamConfig{cfg.lr});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SplitMix64 rng(derive_seed(cfg.seed, {0x0dd5ULL, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    if (cfg.max_train_queries > 0 && order.size() > cfg.max_train_queries) {
      order.resize(cfg.max_train_queries);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      const double scale = 1.0 / static_cast<double>(stop - start);
      ex.params().zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& q = queries[order[k]];
        SplitMix64 urng(derive_seed(cfg.seed, {0xc0c0ULL, static_cast<std::uint64_t>(epoch),
                                               static_cast<std::uint64_t>(order[k])}));
        std::vector<double> u(q.motifs.instances.size());
        for (auto& x : u) x = uniform_open01(urng);
        Tape t(&ex.params());
        const Var loss = query_loss(t, g, base, ex, q.ctx, q.motifs, q.xu, q.xv, q.label, u);
        const double value = t.item(loss);
        if (!std::isfinite(value)) {
          throw NumericError("explainer: non-finite loss at epoch " + std::to_string(epoch));
        }
        batch_loss += value;
        t.backward(t.scale(loss, scale));
      }
      opt.step(ex.params());
      rep.batch_loss.push_back(batch_loss * scale);
      epoch_loss += batch_loss;
    }
    rep.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  ex.params().zero_grad();
  return ex;
}

// --- explanation -----------------------------------------------------------

void rank_events(const TemporalGraph& g, const EventSubset& ctx,
                 std::span<const std::vector<EventId>> motif_events, std::span<const double> scores,
                 std::vector<EventId>& ranking, std::vector<double>& ranking_scores) {
  if (motif_events.size() != scores.size()) throw ShapeError("rank_events: one score per motif");
  std::vector<double> best(ctx.size(), 0.0);
  for (std::size_t k = 0; k < motif_events.size(); ++k) {
    for (EventId id : motif_events[k]) {
      auto it = std::lower_bound(ctx.members.begin(), ctx.members.end(), id);
      if (it == ctx.members.end() || *it != id) continue;
      auto& b = best[static_cast<std::size_t>(it - ctx.members.begin())];
      b = std::max(b, scores[k]);
    }
  }
  std::vector<std::size_t> order(ctx.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (best[a] != best[b]) return best[a] > best[b];
    const double ta = g.event(ctx.members[a]).t, tb = g.event(ctx.members[b]).t;
    if (ta != tb) return ta > tb;
    return ctx.members[a] < ctx.members[b];
  });
  ranking.clear();
  ranking_scores.clear();
  for (std::size_t i : order) {
    ranking.push_back(ctx.members[i]);
    ranking_scores.push_back(best[i]);
  }
}

std::vector<EventId> ExplanationResult::retained_at(double level) const {
  return {ranking.begin(),
          ranking.begin() + static_cast<long>(retained_count(level, ranking.size()))};
}

nlohmann::ordered_json ExplanationResult::to_json(const TemporalGraph& g) const {
  nlohmann::ordered_json j;
  j["query"] = {{"u", u}, {"v", v}, {"t", t}, {"target", target}};
  j["prediction"] = prediction;
  j["empty"] = empty();
  j["comp_graph"] = comp_graph.members;
  auto hops = nlohmann::ordered_json::array();
  for (EventId id : comp_graph.members) hops.push_back(comp_graph.hop_of.at(id));
  j["hops"] = hops;
  auto motifs_json = nlohmann::ordered_json::array();
  for (const auto& m : motifs) {
    motifs_json.push_back({{"code", m.code},
                           {"events", m.events},
                           {"score", m.score},
                           {"anchor", m.side == 0 ? u : v},
                           {"truncated", m.truncated}});
  }
  j["motifs"] = motifs_json;
  auto rank_json = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    rank_json.push_back({{"event", ranking[i]}, {"score", ranking_scores[i]}, {"t", g.event(ranking[i]).t}});
  }
  j["ranking"] = rank_json;
  auto ret = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    ret.push_back({{"level", levels[i]}, {"events", retained[i]}});
  }
  j["retained"] = ret;
  return j;
}

ExplanationResult ExplanationResult::from_json(const nlohmann::json& j) {
  try {
    ExplanationResult r;
    const auto& q = j.at("query");
    r.u = q.at("u").get<NodeId>();
    r.v = q.at("v").get<NodeId>();
    r.t = q.at("t").get<double>();
    r.target = q.at("target").get<EventId>();
    r.prediction = j.at("prediction").get<double>();
    r.comp_graph.target = r.target;
    r.comp_graph.members = j.at("comp_graph").get<std::vector<EventId>>();
    const auto hops = j.at("hops").get<std::vector<int>>();
    if (hops.size() != r.comp_graph.members.size()) throw SchemaError("explanation: hops size");
    for (std::size_t i = 0; i < hops.size(); ++i) r.comp_graph.hop_of[r.comp_graph.members[i]] = hops[i];
    for (const auto& m : j.at("motifs")) {
      r.motifs.push_back({m.at("code").get<std::string>(), m.at("events").get<std::vector<EventId>>(),
                          m.at("score").get<double>(), m.at("anchor").get<NodeId>() == r.u ? 0 : 1,
                          m.at("truncated").get<bool>()});
    }
    for (const auto& e : j.at("ranking")) {
      r.ranking.push_back(e.at("event").get<EventId>());
      r.ranking_scores.push_back(e.at("score").get<double>());
    }
    if (r.ranking.size() != r.comp_graph.size()) throw SchemaError("explanation: ranking must cover G(e)");
    for (const auto& lv : j.at("retained")) {
      r.levels.push_back(lv.at("level").get<double>());
      r.retained.push_back(lv.at("events").get<std::vector<EventId>>());
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("explanation: ") + e.what());
  }
}

ExplanationResult explain(const TemporalGraph& g, const BaseModel& base, const Explainer& explainer,
                          NodeId u, NodeId v, double t, std::span<const double> levels,
                          EventId target) {
  ExplanationResult r;
  r.u = u;
  r.v = v;
  r.t = t;
  r.target = target;
  r.levels.assign(levels.begin(), levels.end());
  r.prediction = base.predict(g, {u, v, t, std::nullopt});
  r.comp_graph = base.context(g, u, v, t);
  r.comp_graph.target = target;
  const auto m = explainer.sample(g, r.comp_graph, u, v, t);
  std::vector<double> scores;
  if (!m.empty()) {
    const auto [xu, xv] = base.represent(g, u, v, t);
    scores = explainer.scores(g, m, xu, xv);
  }
  std::vector<std::vector<EventId>> motif_events;
  for (std::size_t k = 0; k < m.instances.size(); ++k) {
    r.motifs.push_back({m.codes[k], m.instances[k].events, scores[k], m.side[k],
                        m.instances[k].truncated});
    motif_events.push_back(m.instances[k].events);
  }
  rank_events(g, r.comp_graph, motif_events, scores, r.ranking, r.ranking_scores);
  for (double level : levels) r.retained.push_back(r.retained_at(level));
  return r;
}

}  // namespace tempme
