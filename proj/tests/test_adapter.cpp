#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "tempme/adapter.hpp"
#include "tempme/error.hpp"

using namespace tempme;

namespace {

AdapterConfig stub(std::vector<std::string> extra, double timeout = 5.0) {
  AdapterConfig c;
  c.argv = {TEMPME_STUB_ADAPTER};
  c.argv.insert(c.argv.end(), extra.begin(), extra.end());
  c.timeout_seconds = timeout;
  return c;
}

TemporalGraph graph() { return ingest_csv_text("a,b,1\nb,c,2\na,c,3\nc,d,4\n", false); }

}  // namespace

TEST_CASE("adapter returns the child's probability") {
  auto g = graph();
  ExternalAdapter a(stub({"--constant", "0.7"}));
  CHECK(a.predict(g, {0, 2, 5.0, std::nullopt}) == 0.7);
  CHECK(a.predict(g, {0, 2, 5.0, std::vector<EventId>{1}}) == 0.7);
  CHECK(a.context(g, 0, 2, 5.0).members == computational_graph(g, 0, 2, 5.0, 1).members);
}

TEST_CASE("adapter rejects bad responses") {
  auto g = graph();
  {
    ExternalAdapter a(stub({"--constant", "1.3"}));
    CHECK_THROWS_AS(a.predict(g, {0, 2, 5.0, std::nullopt}), ProtocolError);
  }
  {
    ExternalAdapter a(stub({"--bad-id"}));
    CHECK_THROWS_AS(a.predict(g, {0, 2, 5.0, std::nullopt}), ProtocolError);
  }
  {
    ExternalAdapter a(stub({"--garbage"}));
    CHECK_THROWS_AS(a.predict(g, {0, 2, 5.0, std::nullopt}), ProtocolError);
  }
  {
    ExternalAdapter a(stub({"--sleep-ms", "500"}, 0.1));
    CHECK_THROWS_AS(a.predict(g, {0, 2, 5.0, std::nullopt}), ProtocolError);
  }
  CHECK_THROWS_AS(ExternalAdapter(stub({"--bad-handshake"})), ProtocolError);
  CHECK_THROWS_AS(ExternalAdapter(AdapterConfig{{"/nonexistent/predictor"}, 1.0, 1, 20}), ProtocolError);
}

TEST_CASE("adapter wedge rule sees the retained events") {
  auto g = graph();
  const auto path = std::filesystem::temp_directory_path() / "tempme_adapter_graph.json";
  g.save(path);
  ExternalAdapter a(stub({"--graph", path.string()}));
  // a-b then b-c before t = 2.5 closes onto (a, c)
  CHECK(a.predict(g, {0, 2, 2.5, std::nullopt}) == 0.9);
  CHECK(a.predict(g, {0, 2, 2.5, std::vector<EventId>{0}}) == 0.1);
  std::filesystem::remove(path);
}

TEST_CASE("adapter round trips are fast") {
  auto g = graph();
  ExternalAdapter a(stub({"--constant", "0.25"}));
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) REQUIRE(a.predict(g, {0, 2, 5.0, std::nullopt}) == 0.25);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("1000 adapter calls: " << secs << " s");
  CHECK(secs < 10.0);
}
