#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "tempme/error.hpp"
#include "tempme/graph.hpp"
#include "tempme/random.hpp"

using namespace tempme;

namespace {

TemporalGraph chain() { return ingest_csv_text("a,b,1\nb,c,2\nc,d,3\n", false); }

TemporalGraph random_graph(std::uint64_t seed, std::size_t nodes, std::size_t events) {
  SplitMix64 rng(seed);
  std::vector<Event> ev;
  for (std::size_t i = 0; i < events; ++i) {
    NodeId u = static_cast<NodeId>(uniform_index(rng, nodes));
    NodeId v = static_cast<NodeId>(uniform_index(rng, nodes - 1));
    if (v >= u) ++v;
    ev.push_back({0, u, v, static_cast<double>(uniform_index(rng, 20)), {}});
  }
  return TemporalGraph::from_events(std::move(ev), nodes, 0);
}

}  // namespace

TEST_CASE("ingest chain") {
  auto g = chain();
  CHECK(g.node_count() == 4);
  CHECK(g.event_count() == 3);
  for (EventId i = 0; i < 3; ++i) CHECK(g.event(i).id == i);
  CHECK(g.attr_width() == 0);
  CHECK(g.node_labels() == std::vector<std::string>{"a", "b", "c", "d"});
}

TEST_CASE("ingest sorts rows stably") {
  auto sorted = ingest_csv_text("a,b,1\nb,c,2\nc,d,3\n", false);
  auto shuffled = ingest_csv_text("c,d,3\na,b,1\nb,c,2\n", false);
  CHECK(sorted == shuffled);
  auto ties = ingest_csv_text("x,y,1,0.5\nx,z,1,0.25\n", false);
  CHECK(ties.event(0).attrs[0] == 0.5);
  CHECK(ties.event(1).attrs[0] == 0.25);
}

TEST_CASE("ingest header, attrs, self-loops") {
  IngestReport rep;
  auto g = ingest_csv_text("u,v,t,w\na,b,1,0.5\na,a,5,1\nb,c,2,0.25\n", true, &rep);
  CHECK(g.event_count() == 2);
  CHECK(g.attr_width() == 1);
  CHECK(rep.self_loops_skipped == 1);
  CHECK(rep.skipped_lines == std::vector<std::size_t>{3});
}

TEST_CASE("ingest errors") {
  try {
    ingest_csv_text("a,b,1\na,b,oops\n", false);
    FAIL("expected an ingest error");
  } catch (const IngestError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(ingest_csv_text("a,b,1,0.1\nb,c,2\n", false), SchemaError);
  CHECK_THROWS_AS(ingest_csv_text("a,b\n", false), IngestError);
  CHECK_THROWS_AS(ingest_csv_text("a,b,inf\n", false), IngestError);
}

TEST_CASE("duplicate events keep distinct ids") {
  auto g = ingest_csv_text("a,b,1\na,b,1\n", false);
  CHECK(g.event_count() == 2);
  CHECK(g.event(0).id != g.event(1).id);
}

TEST_CASE("per-node index") {
  auto g = random_graph(3, 8, 60);
  std::size_t total = 0;
  for (NodeId n = 0; n < 8; ++n) {
    auto inc = g.incident(static_cast<NodeId>(n));
    total += inc.size();
    for (std::size_t i = 1; i < inc.size(); ++i) CHECK(g.event(inc[i - 1]).t <= g.event(inc[i]).t);
    for (double t : {0.0, 3.0, 7.5, 19.0, 25.0}) {
      std::size_t linear = 0;
      for (EventId id : inc) linear += g.event(id).t < t;
      CHECK(g.incident_before(static_cast<NodeId>(n), t).size() == linear);
    }
  }
  CHECK(total == 2 * g.event_count());
}

TEST_CASE("neighbor_events examples") {
  auto g = chain();
  std::vector<NodeId> d{3};
  CHECK(neighbor_events(g, d, 4.0) == std::vector<EventId>{2});
  std::vector<NodeId> bc{1, 2};
  CHECK(neighbor_events(g, bc, 3.0) == std::vector<EventId>{0, 1});
  std::vector<NodeId> a{0};
  CHECK(neighbor_events(g, a, 1.0).empty());
  CHECK(neighbor_events(g, a, 1.0, false) == std::vector<EventId>{0});
}

TEST_CASE("neighbor_events matches brute force") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto g = random_graph(seed, 7, 40);
    SplitMix64 rng(seed + 100);
    std::set<NodeId> s;
    for (int k = 0; k < 3; ++k) s.insert(static_cast<NodeId>(uniform_index(rng, 7)));
    std::vector<NodeId> nodes(s.begin(), s.end());
    double before = static_cast<double>(uniform_index(rng, 22));
    for (bool strict : {true, false}) {
      CHECK(neighbor_events(g, nodes, before, strict) ==
            oracle::neighbor_events(g, s, before, strict));
    }
  }
}

TEST_CASE("computational_graph examples") {
  auto g = chain();
  auto two = computational_graph(g, g.event(2), 2);
  CHECK(two.members == std::vector<EventId>{0, 1});
  CHECK(two.hop_of.at(1) == 1);
  CHECK(two.hop_of.at(0) == 2);
  auto one = computational_graph(g, g.event(2), 1);
  CHECK(one.members == std::vector<EventId>{1});
  CHECK(computational_graph(g, g.event(0), 2).empty());
}

TEST_CASE("computational_graph respects time and cap") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto g = random_graph(seed, 6, 50);
    const auto& target = g.event(static_cast<EventId>(g.event_count() - 1));
    std::vector<EventId> prev;
    for (int hops = 1; hops <= 3; ++hops) {
      auto sub = computational_graph(g, target, hops, 4);
      for (EventId id : sub.members) CHECK(g.event(id).t < target.t);
      CHECK(std::includes(sub.members.begin(), sub.members.end(), prev.begin(), prev.end()));
      prev = sub.members;
    }
    auto l1 = computational_graph(g, target, 1, 4);
    CHECK(l1.size() <= 8);
  }
}

TEST_CASE("json round trip is exact") {
  std::vector<Event> ev{{0, 0, 1, 0.1 + 0.2, {1.0 / 3.0}}, {0, 1, 2, 1e-300, {-2.5e17}}};
  auto g = TemporalGraph::from_events(ev, 3, 1);
  auto back = TemporalGraph::from_json(nlohmann::json::parse(g.to_json().dump()));
  CHECK(back == g);
  CHECK(back.event(1).t == 0.1 + 0.2);
  auto path = std::filesystem::temp_directory_path() / "tempme_graph_roundtrip.json";
  g.save(path);
  CHECK(TemporalGraph::load(path) == g);
  std::filesystem::remove(path);
}

TEST_CASE("synthetic generators") {
  auto a = generate_synthetic(SyntheticRule::UniformRandom, 10, 50, 7);
  auto b = generate_synthetic(SyntheticRule::UniformRandom, 10, 50, 7);
  CHECK(a == b);
  CHECK(a.event_count() == 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(a.event(static_cast<EventId>(i)).t == double(i + 1));

  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SyntheticTrace trace;
    auto g = generate_synthetic(SyntheticRule::TriadicClosure, 30, 500, seed, &trace);
    // Post-hoc wedge counter: an event closes a wedge when its endpoints have
    // a common neighbour through two earlier events in the recent window and
    // did not interact within that window.
    const std::size_t window = triadic_window(30);
    std::size_t closing = 0;
    for (std::size_t i = 0; i < g.event_count(); ++i) {
      const auto& e = g.event(static_cast<EventId>(i));
      std::size_t lo = i > window ? i - window : 0;
      std::set<NodeId> nu, nv;
      bool direct = false;
      for (std::size_t j = lo; j < i; ++j) {
        const auto& x = g.event(static_cast<EventId>(j));
        if (x.touches(e.u) && x.touches(e.v)) direct = true;
        if (x.touches(e.u)) nu.insert(x.other(e.u));
        if (x.touches(e.v)) nv.insert(x.other(e.v));
      }
      bool common = std::any_of(nu.begin(), nu.end(), [&](NodeId w) { return nv.count(w) > 0; });
      closing += (!direct && common);
      if (trace.closes_wedge[i]) CHECK((!direct && common));
    }
    CHECK(double(closing) / 500.0 >= 0.6);
  }

  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto g = generate_synthetic(SyntheticRule::PreferentialAttachment, 30, 500, seed);
    auto spec = degree_spectrum(g);
    double median = 0.5 * double(spec[14] + spec[15]);
    CHECK(double(spec.front()) > 2.0 * median);
  }
  CHECK(parse_rule("triadic-closure") == SyntheticRule::TriadicClosure);
  CHECK(!parse_rule("nope"));
}

TEST_CASE("degree_spectrum") {
  CHECK(degree_spectrum(chain()) == std::vector<std::size_t>{2, 2, 1, 1});
  CHECK(degree_spectrum(TemporalGraph{}).empty());
}
