#include "tempme/diagnostics.hpp"

#include <functional>

#include "tempme/explainer.hpp"
#include "tempme/nn/gradcheck.hpp"
#include "tempme/random.hpp"

namespace tempme {

namespace {

using nn::Matrix;
using nn::ParameterStore;
using nn::Tape;
using nn::Var;

Matrix random_matrix(std::size_t r, std::size_t c, SplitMix64& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& x : m.data) x = scale * (2.0 * uniform_open01(rng) - 1.0);
  return m;
}

// Moves every parameter off its initial value; zero biases would otherwise
// leave some ReLU inputs exactly at the kink.
void jitter(ParameterStore& store, SplitMix64& rng) {
  for (auto& p : store) {
    for (auto& v : p.value) v += 0.2 * uniform_open01(rng) - 0.1;
  }
}

// A small query with motifs on a fresh planted graph.
struct QueryCase {
  TemporalGraph g;
  BaseModel base;
  Explainer explainer;
  EventSubset ctx;
  QueryMotifs motifs;
  std::vector<double> xu, xv;
};

QueryCase make_query(std::uint64_t seed, int gine_layers) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t s = derive_seed(seed, {attempt});
    auto g = generate_synthetic(SyntheticRule::TriadicClosure, 8, 60, s);
    BaseModelConfig bc;
    bc.width = 6;
    bc.time_d = 3;
    bc.neighbors = 6;
    auto base = BaseModel::create(bc, g.attr_width(), g.time_span(), s);
    ExplainerConfig ec;
    ec.width = 6;
    ec.time_d = 3;
    ec.motifs_per_node = 3;
    ec.gine_layers = gine_layers;
    ec.seed = s;
    std::map<std::string, double> null;
    const auto alphabet = motif_alphabet(ec.motif.max_nodes, ec.motif.length);
    for (const auto& c : alphabet) null[c.str()] = 1.0 / static_cast<double>(alphabet.size());
    auto ex = Explainer::create(ec, g.attr_width(), g.time_span(), bc.width, null);
    SplitMix64 rng(s);
    jitter(ex.params(), rng);
    const Event& e = g.event(static_cast<EventId>(50 + s % 10));
    auto ctx = base.context(g, e.u, e.v, e.t);
    auto m = ex.sample(g, ctx, e.u, e.v, e.t);
    if (m.empty()) continue;
    auto [xu, xv] = base.represent(g, e.u, e.v, e.t);
    return {std::move(g), std::move(base), std::move(ex), std::move(ctx), std::move(m),
            std::move(xu), std::move(xv)};
  }
}

}  // namespace

std::vector<GradCheckEntry> gradient_suite(std::uint64_t seed, int points, double tolerance) {
  using Check = std::function<nn::GradCheckResult(SplitMix64&, std::uint64_t)>;
  const std::vector<std::pair<std::string, Check>> checks{
      {"time_encoder",
       [](SplitMix64& rng, std::uint64_t) {
         ParameterStore store;
         auto enc = nn::TimeEncoder::create(store, "time", 5, 50.0);
         for (auto& f : store[enc.freq].value) f *= 0.5 + uniform_open01(rng);
         std::vector<double> dt(6);
         for (auto& x : dt) x = 50.0 * uniform_open01(rng);
         const Matrix w = random_matrix(dt.size(), enc.width(), rng);
         return nn::grad_check(store, [&](Tape& t) {
           return t.sum(t.mul(enc(t, store, dt), t.constant(w)));
         });
       }},
      {"gine_layer",
       [](SplitMix64& rng, std::uint64_t) {
         ParameterStore store;
         auto gine = nn::GineLayer::create(store, "gine", 4, 3, rng);
         auto x = store.add("x", 5, 4, random_matrix(5, 4, rng).data);
         auto e = store.add("e", 6, 3, random_matrix(6, 3, rng).data);
         jitter(store, rng);
         std::vector<nn::MessageEdge> events;
         for (int k = 0; k < 6; ++k) {
           const int a = static_cast<int>(uniform_index(rng, 5));
           const int b = (a + 1 + static_cast<int>(uniform_index(rng, 4))) % 5;
           events.push_back({a, b, k});
         }
         const auto edges = nn::undirected_edges(events);
         const Matrix w = random_matrix(5, 4, rng);
         return nn::grad_check(store, [&](Tape& t) {
           return t.sum(t.mul(gine(t, store, t.param(x), edges, t.param(e)), t.constant(w)));
         });
       }},
      {"motif_encoder",
       [](SplitMix64& rng, std::uint64_t s) {
         auto q = make_query(s, 2);
         const Matrix w = random_matrix(q.motifs.instances.size(), q.explainer.width(), rng);
         return nn::grad_check(q.explainer.params(), [&](Tape& t) {
           return t.sum(t.mul(q.explainer.encode(t, q.g, q.motifs), t.constant(w)));
         });
       }},
      {"importance_scorer",
       [](SplitMix64& rng, std::uint64_t s) {
         auto q = make_query(s, 1);
         const Matrix w = random_matrix(q.motifs.instances.size(), 1, rng);
         return nn::grad_check(q.explainer.params(), [&](Tape& t) {
           const Var m = q.explainer.encode(t, q.g, q.motifs);
           return t.sum(t.mul(q.explainer.score(t, m, q.motifs, q.xu, q.xv), t.constant(w)));
         });
       }},
      {"concrete_sample",
       [](SplitMix64& rng, std::uint64_t) {
         ParameterStore store;
         std::vector<double> p(5), u(5);
         for (auto& x : p) x = 0.05 + 0.9 * uniform_open01(rng);
         for (auto& x : u) x = uniform_open01(rng);
         auto h = store.add("p", 5, 1, p);
         const Matrix w = random_matrix(5, 1, rng);
         return nn::grad_check(store, [&](Tape& t) {
           return t.sum(t.mul(nn::concrete_sample(t, t.param(h), nn::kDefaultTemperature, u),
                              t.constant(w)));
         });
       }},
      {"explainer_loss",
       [](SplitMix64& rng, std::uint64_t s) {
         auto q = make_query(s, 1);
         std::vector<double> u(q.motifs.instances.size());
         for (auto& x : u) x = uniform_open01(rng);
         const int label = static_cast<int>(uniform_index(rng, 2));
         return nn::grad_check(q.explainer.params(), [&](Tape& t) {
           return query_loss(t, q.g, q.base, q.explainer, q.ctx, q.motifs, q.xu, q.xv, label, u);
         });
       }},
  };

  std::vector<GradCheckEntry> out;
  for (std::size_t c = 0; c < checks.size(); ++c) {
    GradCheckEntry entry;
    entry.component = checks[c].first;
    entry.points = points;
    for (int i = 0; i < points; ++i) {
      const std::uint64_t s = derive_seed(seed, {0x9c ^ c, static_cast<std::uint64_t>(i)});
      SplitMix64 rng(s);
      const auto r = checks[c].second(rng, s);
      if (r.max_rel_error >= entry.max_rel_error) {
        entry.max_rel_error = r.max_rel_error;
        entry.worst_param = r.worst_param;
      }
    }
    entry.passed = entry.max_rel_error < tolerance;
    out.push_back(entry);
  }
  return out;
}

nlohmann::ordered_json to_json(const std::vector<GradCheckEntry>& entries) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    arr.push_back({{"component", e.component},
                   {"points", e.points},
                   {"max_rel_error", e.max_rel_error},
                   {"worst_param", e.worst_param},
                   {"passed", e.passed}});
  }
  return arr;
}

}  // namespace tempme
