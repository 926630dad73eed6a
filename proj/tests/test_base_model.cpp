#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "tempme/base_model.hpp"
#include "tempme/nn/gradcheck.hpp"
#include "tempme/random.hpp"

using namespace tempme;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

TemporalGraph fixture_graph() {
  return generate_synthetic(SyntheticRule::TriadicClosure, 12, 160, 3);
}

BaseModel fixture_model(const TemporalGraph& g, std::uint64_t seed = 5) {
  BaseModelConfig cfg;
  cfg.width = 8;
  cfg.time_d = 4;
  cfg.neighbors = 6;
  return BaseModel::create(cfg, g.attr_width(), g.time_span(), seed);
}

}  // namespace

TEST_CASE("zero head predicts one half") {
  auto g = fixture_graph();
  BaseModelConfig cfg;
  cfg.zero_head = true;
  auto m = BaseModel::create(cfg, g.attr_width(), g.time_span(), 1);
  for (int i = 100; i < 110; ++i) {
    const Event& e = g.event(i);
    CHECK(m.predict(g, {e.u, e.v, e.t, std::nullopt}) == 0.5);
  }
}

TEST_CASE("masking semantics") {
  auto g = fixture_graph();
  auto m = fixture_model(g);
  std::optional<double> empty_value;
  for (int i = 120; i < 150; i += 3) {
    const Event& e = g.event(i);
    auto ctx = m.context(g, e.u, e.v, e.t);
    const double full = m.predict(g, {e.u, e.v, e.t, std::nullopt});
    CHECK(m.predict(g, {e.u, e.v, e.t, ctx.members}) == full);

    auto shuffled = ctx.members;
    SplitMix64 rng(static_cast<std::uint64_t>(i));
    for (std::size_t k = shuffled.size(); k > 1; --k) {
      std::swap(shuffled[k - 1], shuffled[uniform_index(rng, k)]);
    }
    CHECK(m.predict(g, {e.u, e.v, e.t, shuffled}) == full);

    const double none = m.predict(g, {e.u, e.v, e.t, std::vector<EventId>{}});
    if (!empty_value) empty_value = none;
    CHECK(none == *empty_value);

    // events outside the context are ignored
    auto extra = ctx.members;
    extra.push_back(static_cast<EventId>(g.event_count() - 1));
    CHECK(m.predict(g, {e.u, e.v, e.t, extra}) == full);
  }
}

TEST_CASE("predictions are deterministic and stay in (0, 1)") {
  auto g = fixture_graph();
  auto a = fixture_model(g, 9);
  auto b = fixture_model(g, 9);
  for (int i = 50; i < 160; i += 7) {
    const Event& e = g.event(i);
    const double p = a.predict(g, {e.u, e.v, e.t, std::nullopt});
    CHECK(p == b.predict(g, {e.u, e.v, e.t, std::nullopt}));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("checkpoint round trip") {
  auto g = fixture_graph();
  auto m = fixture_model(g);
  const auto path = std::filesystem::temp_directory_path() / "tempme_base_roundtrip.ckpt";
  m.save(path);
  auto back = BaseModel::load(path);
  std::filesystem::remove(path);
  CHECK(back.params() == m.params());
  const Event& e = g.event(140);
  CHECK(back.predict(g, {e.u, e.v, e.t, std::nullopt}) == m.predict(g, {e.u, e.v, e.t, std::nullopt}));
}

TEST_CASE("base model gradients match finite differences") {
  auto g = fixture_graph();
  auto m = fixture_model(g);
  const Event& e = g.event(130);
  auto ctx = m.context(g, e.u, e.v, e.t);
  REQUIRE(ctx.size() > 3);
  std::vector<double> w(ctx.size());
  SplitMix64 rng(2);
  for (auto& x : w) x = 0.2 + 0.6 * uniform_open01(rng);
  auto loss = [&](Tape& t) {
    auto f = m.forward(t, g, e.u, e.v, e.t, ctx, t.constant(Matrix::column(w)));
    return t.softplus(f.logit);
  };
  auto r = nn::grad_check(m.params(), loss, 1e-6, 8);
  CHECK(r.max_rel_error < 1e-4);

  // gradient with respect to the mask weights
  Tape t;
  const Var wv = t.constant(Matrix::column(w));
  const Var out = t.softplus(m.forward(t, g, e.u, e.v, e.t, ctx, wv).logit);
  t.backward(out);
  const auto analytic = t.grad(wv).data;
  for (std::size_t k = 0; k < w.size(); ++k) {
    auto at = [&](double delta) {
      auto shifted = w;
      shifted[k] += delta;
      Tape s;
      return s.item(s.softplus(m.forward(s, g, e.u, e.v, e.t, ctx, s.constant(Matrix::column(shifted))).logit));
    };
    const double numeric = (at(1e-6) - at(-1e-6)) / 2e-6;
    CHECK(std::abs(numeric - analytic[k]) <= 1e-4 * std::max({1e-3, std::abs(numeric), std::abs(analytic[k])}));
  }
}

TEST_CASE("frozen forward leaves the model store untouched") {
  auto g = fixture_graph();
  auto m = fixture_model(g);
  const Event& e = g.event(130);
  auto ctx = m.context(g, e.u, e.v, e.t);
  nn::ParameterStore other;
  Tape t(&other);
  auto f = m.forward(t, g, e.u, e.v, e.t, ctx, t.constant(Matrix(ctx.size(), 1, 1.0)));
  t.backward(t.softplus(f.logit));
  for (const auto& p : m.params()) {
    CHECK(std::all_of(p.grad.begin(), p.grad.end(), [](double x) { return x == 0.0; }));
  }
}

TEST_CASE("motif head starts neutral") {
  auto g = fixture_graph();
  auto m = fixture_model(g);
  auto wide = m.with_motif_head(5);
  const Event& e = g.event(150);
  const std::vector<double> motif{0.3, -1.0, 2.0, 0.5, 0.1};
  CHECK(wide.predict_enhanced(g, {e.u, e.v, e.t, std::nullopt}, motif) ==
        doctest::Approx(m.predict(g, {e.u, e.v, e.t, std::nullopt})).epsilon(1e-12));
  CHECK(wide.is_head_param("head.hidden.weight"));
  CHECK(!wide.is_head_param("base.key.weight"));
}

TEST_CASE("link samples alternate positives and corrupted negatives") {
  auto g = fixture_graph();
  auto split = ChronoSplit::of(g);
  CHECK(split.train_end < split.val_end);
  auto s = link_samples(g, split.train_end, split.val_end, 11);
  REQUIRE(s.size() % 2 == 0);
  REQUIRE(!s.empty());
  for (std::size_t i = 0; i < s.size(); i += 2) {
    CHECK(s[i].label == 1);
    CHECK(s[i + 1].label == 0);
    CHECK(s[i + 1].u == s[i].u);
    CHECK(s[i + 1].v != s[i].u);
    CHECK(s[i + 1].t == s[i].t);
    CHECK(s[i].t > split.train_end);
    CHECK(s[i].t <= split.val_end);
  }
  auto again = link_samples(g, split.train_end, split.val_end, 11);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(again[i].v == s[i].v);
}
