// Minimal external predictor speaking the adapter protocol, for tests and as a
// template for wrapping other models.
//
//   tempme_stub_adapter --constant 0.7
//   tempme_stub_adapter --graph run/graph.json      (wedge rule)
//
// Faults for protocol tests: --bad-id, --garbage, --sleep-ms N, --bad-handshake.

#include <chrono>
#include <iostream>
#include <set>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempme/adapter.hpp"
#include "tempme/graph.hpp"

using json = nlohmann::json;

namespace {

// 0.9 when a retained u-w and w-v pair closes onto (u, v), 0.1 otherwise.
double wedge_rule(const tempme::TemporalGraph& g, const json& req) {
  const auto u = req.at("u").get<tempme::NodeId>();
  const auto v = req.at("v").get<tempme::NodeId>();
  std::set<tempme::NodeId> near_u, near_v;
  for (const auto& id : req.at("retained")) {
    const auto& e = g.event(id.get<tempme::EventId>());
    if (e.touches(u)) near_u.insert(e.other(u));
    if (e.touches(v)) near_v.insert(e.other(v));
  }
  for (auto w : near_u) {
    if (w != v && near_v.count(w)) return 0.9;
  }
  return 0.1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stub predictor for the tempme adapter protocol"};
  double constant = 0.5;
  std::string graph_path;
  bool bad_id = false, garbage = false, bad_handshake = false;
  int sleep_ms = 0;
  app.add_option("--constant", constant, "Probability returned for every query");
  app.add_option("--graph", graph_path, "graph.json for the wedge rule");
  app.add_flag("--bad-id", bad_id, "Reply with a wrong request id");
  app.add_flag("--garbage", garbage, "Reply with a non-JSON line");
  app.add_flag("--bad-handshake", bad_handshake, "Announce a different protocol");
  app.add_option("--sleep-ms", sleep_ms, "Delay before every reply");
  CLI11_PARSE(app, argc, argv);

  tempme::TemporalGraph g;
  if (!graph_path.empty()) g = tempme::TemporalGraph::load(graph_path);

  std::cout << json{{"protocol", bad_handshake ? "other/0" : tempme::kAdapterProtocol}}.dump()
            << std::endl;
  for (std::string line; std::getline(std::cin, line);) {
    const json req = json::parse(line);
    if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
    if (garbage) {
      std::cout << "not json" << std::endl;
      continue;
    }
    const double p = graph_path.empty() ? constant : wedge_rule(g, req);
    const long id = req.at("id").get<long>() + (bad_id ? 1 : 0);
    std::cout << json{{"id", id}, {"p", p}}.dump() << std::endl;
  }
  return 0;
}
