#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "tempme/error.hpp"
#include "tempme/motif.hpp"
#include "tempme/random.hpp"

using namespace tempme;

namespace {

TemporalGraph chain() { return ingest_csv_text("a,b,1\nb,c,2\nc,d,3\n", false); }

TemporalGraph small_random(std::uint64_t seed, std::size_t nodes, std::size_t events) {
  SplitMix64 rng(seed);
  std::vector<Event> ev;
  for (std::size_t i = 0; i < events; ++i) {
    NodeId u = static_cast<NodeId>(uniform_index(rng, nodes));
    NodeId v = static_cast<NodeId>(uniform_index(rng, nodes - 1));
    if (v >= u) ++v;
    ev.push_back({0, u, v, static_cast<double>(1 + uniform_index(rng, events)), {}});
  }
  return TemporalGraph::from_events(std::move(ev), nodes, 0);
}

MotifParams params(int n, int l, double delta = INFINITY) { return {n, l, delta}; }

std::vector<std::vector<EventId>> event_lists(const std::vector<MotifInstance>& v) {
  std::vector<std::vector<EventId>> out;
  for (const auto& i : v) out.push_back(i.events);
  return out;
}

}  // namespace

TEST_CASE("sample_motifs on a chain") {
  auto g = chain();
  auto five = sample_motifs(g, 3, 4.0, params(4, 3), 5, 1);
  REQUIRE(five.size() == 5);
  for (const auto& m : five) {
    CHECK(m.events == std::vector<EventId>{2, 1, 0});
    CHECK(!m.truncated);
  }
  auto one = sample_motifs(g, 3, 4.0, params(4, 1), 5, 1);
  REQUIRE(one.size() == 5);
  for (const auto& m : one) CHECK(m.events == std::vector<EventId>{2});
  CHECK(sample_motifs(g, 0, 1.0, params(4, 3), 5, 1).empty());
  CHECK_THROWS_AS(sample_motifs(g, 3, 4.0, params(4, 3), 0, 1), ConfigError);
}

TEST_CASE("sample_motifs_tree") {
  auto g = chain();
  const int f5[] = {5};
  auto a = sample_motifs_tree(g, 3, 4.0, params(3, 1), f5, 2);
  REQUIRE(a.size() == 5);
  for (const auto& m : a) CHECK(m.events == std::vector<EventId>{2});
  const int f22[] = {2, 2};
  auto b = sample_motifs_tree(g, 3, 4.0, params(3, 2), f22, 2);
  REQUIRE(b.size() == 4);
  for (const auto& m : b) CHECK(m.events == std::vector<EventId>{2, 1});
  // b has a single earlier event, so the third step dead-ends.
  const int f111[] = {1, 1, 1};
  auto c = sample_motifs_tree(g, 1, 2.5, params(4, 3), f111, 2);
  REQUIRE(c.size() == 1);
  CHECK(c[0].truncated);
  const int bad[] = {2};
  CHECK_THROWS_AS(sample_motifs_tree(g, 3, 4.0, params(3, 3), bad, 2), ConfigError);
}

TEST_CASE("enumerate_motifs examples") {
  auto g = chain();
  auto one = enumerate_motifs(g, 3, 4.0, params(4, 3));
  REQUIRE(one.size() == 1);
  CHECK(one[0].events == std::vector<EventId>{2, 1, 0});

  auto tri = ingest_csv_text("a,b,1\nb,c,2\na,c,3\n", false);
  auto all = enumerate_motifs(tri, 0, 4.0, params(3, 3));
  std::size_t full = 0;
  for (const auto& m : all) full += !m.truncated;
  CHECK(all.size() == 3);
  CHECK(full == 1);
  CHECK(all[0].events == std::vector<EventId>{0});
  CHECK(all[0].truncated);
  CHECK(all[1].events == std::vector<EventId>{2, 0});
  CHECK(all[1].truncated);
  CHECK(all[2].events == std::vector<EventId>{2, 1, 0});

  std::vector<NodeId> a{0};
  CHECK(enumerate_motifs(tri, 0, 4.0, params(3, 1)).size() == neighbor_events(tri, a, 4.0).size());
  auto big = generate_synthetic(SyntheticRule::UniformRandom, 10, 300, 1);
  CHECK_THROWS_AS(enumerate_motifs(big, 0, 1e9, params(3, 3)), RefusalError);
}

TEST_CASE("enumeration matches the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto g = small_random(seed, 5, 14);
    const double delta = seed % 3 == 0 ? 6.0 : INFINITY;
    for (NodeId anchor = 0; anchor < 5; ++anchor) {
      for (auto [n, l] : {std::pair{3, 3}, std::pair{2, 2}, std::pair{4, 3}}) {
        auto got = event_lists(enumerate_motifs(g, anchor, 15.0, params(n, l, delta)));
        std::set<std::vector<EventId>> got_set(got.begin(), got.end());
        CHECK(got_set.size() == got.size());
        CHECK(got_set == oracle::support(g, anchor, 15.0, n, l, delta));
      }
    }
  }
}

TEST_CASE("samplers are sound and reach the full support") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    auto g = small_random(seed + 50, 5, 12);
    const auto p = params(3, 3);
    for (NodeId anchor = 0; anchor < 5; ++anchor) {
      auto all = enumerate_motifs(g, anchor, 13.0, p);
      if (all.empty() || all.size() > 25) continue;
      auto seq = sample_motifs(g, anchor, 13.0, p, 10000, seed);
      std::set<std::vector<EventId>> seen;
      for (const auto& m : seq) {
        CHECK(validate_instance(g, m, p).empty());
        CHECK(oracle::valid_instance(g, m, 3, 3, INFINITY));
        seen.insert(m.events);
      }
      auto want = event_lists(all);
      CHECK(seen == std::set<std::vector<EventId>>(want.begin(), want.end()));

      const int fan[] = {10, 10, 10};
      for (const auto& m : sample_motifs_tree(g, anchor, 13.0, params(4, 3), fan, seed)) {
        CHECK(validate_instance(g, m, params(4, 3)).empty());
      }
    }
  }
}

TEST_CASE("validate_instance catches violations") {
  auto g = chain();
  MotifInstance m{3, 4.0, {2, 1, 0}, false};
  CHECK(validate_instance(g, m, params(4, 3)).empty());
  CHECK(!validate_instance(g, m, params(3, 3)).empty());         // four nodes
  CHECK(!validate_instance(g, {3, 4.0, {1, 2}, false}, params(4, 3)).empty());  // time order
  CHECK(!validate_instance(g, {0, 4.0, {2}, false}, params(4, 3)).empty());     // not anchored
  CHECK(!validate_instance(g, m, params(4, 3, 2.5)).empty());    // outside delta
}

TEST_CASE("motif codes") {
  auto rep = ingest_csv_text("a,b,1\na,b,2\na,b,3\n", false);
  CHECK(motif_code(rep, {0, 4.0, {2, 1, 0}, false}).str() == "010101");
  auto two = ingest_csv_text("x,y,1\nu,x,2\n", false);
  // labels: x=0, y=1, u=2; anchor u
  CHECK(motif_code(two, {2, 3.0, {1, 0}, false}).str() == "0112");
  CHECK(motif_code(two, {2, 3.0, {1}, true}).str() == "01");
  CHECK(MotifCode::parse("010212").str() == "010212");
  CHECK_THROWS(MotifCode::parse("0a"));
}

TEST_CASE("code equality agrees with explicit isomorphism") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    auto g = small_random(seed + 7, 5, 12);
    std::vector<MotifInstance> pool;
    for (NodeId a = 0; a < 5; ++a) {
      auto e = enumerate_motifs(g, a, 13.0, params(4, 3));
      pool.insert(pool.end(), e.begin(), e.end());
    }
    std::vector<std::string> codes;
    for (const auto& m : pool) codes.push_back(motif_code(g, m).str());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      for (std::size_t j = i; j < pool.size(); ++j) {
        CHECK((codes[i] == codes[j]) == oracle::equivalent(g, pool[i], pool[j]));
      }
    }
  }
}

TEST_CASE("alphabet and class counts") {
  auto alpha = motif_alphabet(3, 3);
  CHECK(alpha.size() == 13);
  std::size_t multi = 0;
  for (const auto& c : alpha) multi += c.length() >= 2;
  CHECK(multi == 12);
  std::size_t two = 0;
  for (const auto& c : motif_alphabet(3, 2)) two += c.length() == 2;
  CHECK(two == 3);

  auto g = generate_synthetic(SyntheticRule::UniformRandom, 6, 120, 3);
  std::set<std::string> codes;
  for (int l : {2, 3}) {
    for (NodeId a = 0; a < 6; ++a) {
      for (const auto& m : enumerate_motifs(g, a, 1e9, params(3, l))) {
        if (m.length() >= 2) codes.insert(motif_code(g, m).str());
      }
    }
  }
  CHECK(codes.size() == 12);
}

TEST_CASE("census") {
  auto g = chain();
  auto five = sample_motifs(g, 3, 4.0, params(4, 3), 5, 1);
  auto c = census(g, five);
  CHECK(c.total == 5);
  CHECK(c.counts.size() == 1);
  CHECK(c.prob(c.counts.begin()->first) == 1.0);
  auto empty = census(g, {});
  CHECK(!empty.defined());
  CHECK(empty.probs().empty());
  auto j = c.to_json();
  CHECK(j.begin().value()["count"] == 5);
}

TEST_CASE("null model preserves spectrum and timestamps") {
  auto g = generate_synthetic(SyntheticRule::PreferentialAttachment, 12, 200, 4);
  std::vector<double> ts;
  for (const auto& e : g.events()) ts.push_back(e.t);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto n = null_model(g, seed);
    CHECK(degree_spectrum(n) == degree_spectrum(g));
    std::vector<double> ns;
    for (const auto& e : n.events()) ns.push_back(e.t);
    CHECK(ns == ts);  // both already sorted
    CHECK(n.event_count() == g.event_count());
  }
  auto single = ingest_csv_text("a,b,1\n", false);
  CHECK(null_model(single, 9) == single);
}

TEST_CASE("null class probabilities") {
  auto g = generate_synthetic(SyntheticRule::UniformRandom, 20, 600, 5);
  auto m = null_class_probs(g, params(3, 3), 30, 11);
  double sum = 0.0;
  for (const auto& [code, p] : m) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(m.size() == 13);
  CHECK(std::abs(sum - 1.0) < 1e-12);
  auto emp = smoothed_probs(node_census(g, params(3, 3), 30, 11), 3, 3, kDefaultSmoothing);
  CHECK(total_variation(emp, m) < 0.1);
}

TEST_CASE("sampling cost grows linearly in C (report only)") {
  auto g = generate_synthetic(SyntheticRule::UniformRandom, 30, 2000, 1);
  auto time_for = [&](int c) {
    auto start = std::chrono::steady_clock::now();
    for (NodeId a = 0; a < 30; ++a) sample_motifs(g, a, 2001.0, params(3, 3), c, 1);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  double t1 = time_for(200), t2 = time_for(400);
  MESSAGE("sampling time C=200: " << t1 << "s, C=400: " << t2 << "s, ratio " << t2 / t1);
}
