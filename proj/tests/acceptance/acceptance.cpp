// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails. Criteria 7-10 drive the command-line tool.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "../oracles.hpp"
#include "tempme/base_model.hpp"
#include "tempme/diagnostics.hpp"
#include "tempme/explainer.hpp"
#include "tempme/metrics.hpp"
#include "tempme/motif.hpp"
#include "tempme/random.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tempme;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const fs::path kWork = TEMPME_ACCEPT_DIR;

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

// Runs the CLI; throws with the log tail on failure.
void cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(TEMPME_CLI) + " " + args + " >>" + (kWork / log).string() + " 2>&1";
  if (std::system(cmd.c_str()) != 0) {
    throw std::runtime_error("command failed: tempme " + args + "\n" + read_file(kWork / log));
  }
}

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

Outcome motif_algebra() {
  std::size_t graphs = 0, anchors = 0, compared = 0, instances = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SplitMix64 rng(derive_seed(1, {seed}));
    const std::size_t nodes = 4 + uniform_index(rng, 5);
    const std::size_t events = 10 + uniform_index(rng, 41);
    auto g = small_random(seed, nodes, events);
    ++graphs;
    const double delta = seed % 4 == 0 ? static_cast<double>(events) / 3.0 : INFINITY;
    const MotifParams p{3, 3, delta};
    for (NodeId a = 0; a < static_cast<NodeId>(nodes); ++a) {
      for (double t0 : {static_cast<double>(events) / 4.0, static_cast<double>(events) / 2.0,
                        static_cast<double>(events) + 1.0}) {
        ++anchors;
        auto all = enumerate_motifs(g, a, t0, p);
        std::set<std::vector<EventId>> got;
        for (const auto& m : all) {
          if (!oracle::valid_instance(g, m, 3, 3, delta)) return {false, "invalid enumerated instance"};
          got.insert(m.events);
        }
        instances += all.size();
        if (got.size() != all.size()) return {false, "duplicate enumerated instance"};
        if (got != oracle::support(g, a, t0, 3, 3, delta)) {
          return {false, "enumeration differs from brute force (seed " + std::to_string(seed) + ")"};
        }
        if (all.empty() || all.size() > 25) continue;
        ++compared;
        std::set<std::vector<EventId>> seen;
        for (const auto& m : sample_motifs(g, a, t0, p, 10000, seed)) seen.insert(m.events);
        if (seen != got) return {false, "sampler support differs (seed " + std::to_string(seed) + ")"};
      }
    }
  }
  return {compared > 0, std::to_string(graphs) + " graphs, " + std::to_string(anchors) + " anchors, " +
                            std::to_string(instances) + " instances, " + std::to_string(compared) +
                            " sampler comparisons"};
}

Outcome equivalence_classes() {
  auto g = generate_synthetic(SyntheticRule::UniformRandom, 6, 120, 3);
  auto classes = [&](int l) {
    std::vector<MotifInstance> all;
    for (int len = 2; len <= l; ++len) {
      for (NodeId a = 0; a < static_cast<NodeId>(g.node_count()); ++a) {
        for (auto& m : enumerate_motifs(g, a, g.time_max() + 1.0, {3, len, INFINITY})) {
          if (m.length() >= 2) all.push_back(std::move(m));
        }
      }
    }
    return census(g, all).counts.size();
  };
  const auto three = classes(3), two = classes(2);
  return {three == 12 && two == 3,
          "(3,3): " + std::to_string(three) + " classes, (3,2): " + std::to_string(two)};
}

Outcome null_model_check() {
  auto g = generate_synthetic(SyntheticRule::PreferentialAttachment, 20, 400, 2);
  std::multiset<double> ts;
  for (const auto& e : g.events()) ts.insert(e.t);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto n = null_model(g, seed);
    std::multiset<double> ns;
    for (const auto& e : n.events()) ns.insert(e.t);
    if (degree_spectrum(n) != degree_spectrum(g) || ns != ts) return {false, "seed " + std::to_string(seed)};
  }
  auto u = generate_synthetic(SyntheticRule::UniformRandom, 20, 600, 5);
  const MotifParams p{3, 3, INFINITY};
  auto emp = node_census(u, p, 50, 7).probs();
  auto null = node_census(null_model(u, 8), p, 50, 7).probs();
  const double tv = total_variation(emp, null);
  return {tv < 0.1, "100 seeds preserved; TV(empirical, null) = " + fmt(tv)};
}

Outcome differentiability() {
  const auto start = std::chrono::steady_clock::now();
  const auto entries = gradient_suite(2024, 10);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool ok = secs < 120.0;
  std::string detail;
  for (const auto& e : entries) {
    ok = ok && e.passed;
    detail += e.component + " " + fmt(e.max_rel_error) + "; ";
  }
  return {ok, detail + fmt(secs) + " s"};
}

Outcome loss_algebra() {
  SplitMix64 rng(55);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double p = 0.05 + 0.9 * uniform_open01(rng);
    const std::size_t n = 1 + uniform_index(rng, 30);
    std::vector<double> at_p(n, p);
    worst = std::max(worst, std::abs(kl_uniform(at_p, p)));

    // s = p and q = m: class shares of the motifs equal the null masses
    const std::size_t a = 1 + uniform_index(rng, 5), b = 1 + uniform_index(rng, 5), c = 1 + uniform_index(rng, 5);
    std::vector<int> cls;
    for (std::size_t i = 0; i < a + b + c; ++i) cls.push_back(i < a ? 0 : i < a + b ? 1 : 2);
    const double total = static_cast<double>(a + b + c);
    const std::vector<double> m{a / total, b / total, c / total};
    std::vector<double> matched(cls.size(), p);
    worst = std::max(worst, std::abs(kl_empirical(matched, cls, p, m)));

    std::vector<double> s(n);
    std::vector<int> k(n);
    double want_u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = uniform_open01(rng);
      k[i] = static_cast<int>(uniform_index(rng, 3));
      want_u += oracle::bernoulli_kl(s[i], p);
    }
    worst = std::max(worst, std::abs(kl_uniform(s, p) - want_u));
    worst = std::max(worst, std::abs(kl_empirical(s, k, p, m) - oracle::kl_empirical(s, k, p, m)));
  }
  return {worst < 1e-10, "max deviation " + fmt(worst)};
}

Outcome metric_algebra() {
  auto g = generate_synthetic(SyntheticRule::TriadicClosure, 12, 200, 1);
  BaseModelConfig bc;
  bc.width = 16;
  auto base = BaseModel::create(bc, g.attr_width(), g.time_span(), 1);
  for (const auto& e : g.events()) {
    const double full = base.predict(g, {e.u, e.v, e.t, std::nullopt});
    const auto ctx = base.context(g, e.u, e.v, e.t);
    if (fidelity(full, full) != 0.0) return {false, "fidelity(full) nonzero"};
    if (fidelity(full, base.predict(g, {e.u, e.v, e.t, ctx.members})) != 0.0) {
      return {false, "full retained set changes the prediction"};
    }
  }
  EventSubset cg;
  for (EventId id = 0; id < 4; ++id) {
    cg.members.push_back(id);
    cg.hop_of[id] = 1;
  }
  auto fix = ingest_csv_text("a,b,0\nb,c,5\nd,e,10\na,c,20\n", false);
  const std::vector<EventId> three{0, 1, 2};
  const bool sparse_ok = sparsity(three, cg) == 0.75;
  const bool cohesion_ok = std::abs(*cohesiveness(fix, three, cg) - std::cos(0.25) / 3.0) < 1e-12;
  const auto levels = sparsity_levels();
  SplitMix64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> acc(levels.size());
    for (auto& a : acc) a = uniform_open01(rng);
    const double want = 100.0 * oracle::trapezoid(levels, acc) / (levels.back() - levels.front());
    worst = std::max(worst, std::abs(acc_auc(levels, acc) - want));
  }
  return {sparse_ok && cohesion_ok && worst < 1e-9,
          std::to_string(g.event_count()) + " queries with zero fidelity; fixtures " +
              (sparse_ok && cohesion_ok ? "match" : "differ") + "; acc_auc deviation " + fmt(worst)};
}

// The planted pipeline shared by criteria 7-9.
struct Planted {
  bool ran = false;
  double seconds = 0.0;
  std::string error;
};

Planted& planted() {
  static Planted p = [] {
    Planted r;
    const auto dir = kWork / "planted";
    fs::remove_all(dir);
    const std::string d = " -d " + dir.string() + " --seed 1 -j 1";
    const auto start = std::chrono::steady_clock::now();
    try {
      cli("synth --rule triadic-closure --nodes 30 --events 2000" + d, "planted.log");
      cli("train-base" + d, "planted.log");
      cli("train-explainer" + d, "planted.log");
      cli("explain" + d, "planted.log");
      cli("evaluate" + d, "planted.log");
      r.ran = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }();
  return p;
}

bool wedge_class(const std::string& code) {
  for (std::size_t i = 0; i + 1 < code.size(); i += 2) {
    if (code[i] == '1' && code[i + 1] == '2') return true;
  }
  return false;
}

Outcome end_to_end() {
  auto& p = planted();
  if (!p.ran) return {false, p.error};
  const auto dir = kWork / "planted";
  const double ap = read_json(dir / "base_report.json").at("test_ap").get<double>();
  const auto report = read_json(dir / "report.json");
  const double ours = report.at("tempme").at("acc_auc").get<double>();
  const double random = report.at("random").at("acc_auc").get<double>();

  std::map<std::string, std::pair<double, std::size_t>> by_class;
  const auto explanations = read_json(dir / "explanations.json");
  for (const auto& e : explanations.at("explanations")) {
    for (const auto& m : e.at("motifs")) {
      auto& slot = by_class[m.at("code").get<std::string>()];
      slot.first += m.at("score").get<double>();
      ++slot.second;
    }
  }
  double wedge = 0.0, other = 0.0;
  std::size_t nw = 0, no = 0;
  for (const auto& [code, sum] : by_class) {
    const double mean = sum.first / static_cast<double>(sum.second);
    if (wedge_class(code)) {
      wedge += mean;
      ++nw;
    } else {
      other += mean;
      ++no;
    }
  }
  wedge = nw ? wedge / static_cast<double>(nw) : 0.0;
  other = no ? other / static_cast<double>(no) : 0.0;
  const bool ok = ap >= 0.75 && ours - random >= 10.0 && nw > 0 && wedge > other && p.seconds < 900.0;
  return {ok, "test AP " + fmt(ap) + "; ACC-AUC " + fmt(ours) + " vs random " + fmt(random) +
                  "; wedge classes " + fmt(wedge) + " vs others " + fmt(other) + "; pipeline " +
                  fmt(p.seconds) + " s"};
}

Outcome cohesiveness_dominance() {
  auto& p = planted();
  if (!p.ran) return {false, p.error};
  const auto r = read_json(kWork / "planted" / "report.json");
  const double ours = r.at("tempme").at("mean_cohesiveness").get<double>();
  const double random = r.at("random").at("mean_cohesiveness").get<double>();
  const auto n = r.at("cohesion").at("queries").get<std::size_t>();
  return {ours > random && n >= 200,
          fmt(ours) + " vs random " + fmt(random) + " over " + std::to_string(n) + " queries"};
}

EnhancedTrainReport enhanced(const fs::path& dir) {
  auto g = TemporalGraph::load(dir / "graph.json");
  auto base = BaseModel::load(dir / "base.ckpt");
  auto ex = Explainer::load(dir / "explainer.ckpt");
  MotifEmbedder embed = [&](NodeId u, NodeId v, double t) {
    return ex.mean_embedding(g, ex.sample(g, base.context(g, u, v, t), u, v, t));
  };
  BaseTrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 1;
  EnhancedTrainReport rep;
  train_motif_enhanced(g, base, embed, ex.width(), cfg, &rep);
  return rep;
}

Outcome motif_enhanced() {
  auto& p = planted();
  if (!p.ran) return {false, p.error};
  const auto pa = kWork / "preferential";
  fs::remove_all(pa);
  const std::string d = " -d " + pa.string() + " --seed 1";
  try {
    cli("synth --rule preferential-attachment --nodes 30 --events 2000" + d, "preferential.log");
    cli("train-base" + d, "preferential.log");
    cli("train-explainer" + d, "preferential.log");
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
  const auto tri = enhanced(kWork / "planted");
  const auto pref = enhanced(pa);
  const bool ok = tri.enhanced_test_ap >= tri.plain_test_ap - 0.01 &&
                  (tri.enhanced_test_ap > tri.plain_test_ap || pref.enhanced_test_ap > pref.plain_test_ap);
  return {ok, "triadic " + fmt(tri.plain_test_ap) + " -> " + fmt(tri.enhanced_test_ap) +
                  "; preferential " + fmt(pref.plain_test_ap) + " -> " + fmt(pref.enhanced_test_ap)};
}

Outcome determinism() {
  const auto a = kWork / "rerun_a", b = kWork / "rerun_b";
  fs::remove_all(a);
  fs::remove_all(b);
  fs::create_directories(a);
  const auto csv = kWork / "rerun_input.csv";
  {
    auto g = generate_synthetic(SyntheticRule::TriadicClosure, 16, 500, 9);
    std::ofstream out(csv);
    out << "src,dst,time\n";
    for (const auto& e : g.events()) out << "n" << e.u << ",n" << e.v << "," << e.t << "\n";
  }
  const std::vector<std::pair<std::string, std::string>> steps{
      {"ingest", "--input " + csv.string() + " --header"},
      {"census", "-n 3 -l 3 --per-node 20"},
      {"null-census", "--per-node 20"},
      {"train-base", "--epochs 3"},
      {"train-explainer", "--epochs 1 --max-queries 64 -C 20"},
      {"explain", "--queries 40"},
      {"evaluate", "--emit-plot-data"},
      {"grad-check", "--points 2"},
  };
  std::size_t files = 0;
  try {
    for (const auto& [cmd, flags] : steps) cli(cmd + " -d " + a.string() + " --seed 3 " + flags, "rerun.log");
    for (const auto& [cmd, flags] : steps) {
      const auto manifest = a / ("manifest." + cmd + ".json");
      std::string extra = cmd == "evaluate" ? " --emit-plot-data" : "";
      cli(cmd + " -d " + b.string() + " --config " + manifest.string() + " -j 3" + extra, "rerun.log");
    }
    for (const auto& [cmd, flags] : steps) {
      const std::string manifest = "manifest." + cmd + ".json";
      std::vector<std::string> names{manifest};
      const auto m = read_json(a / manifest);
      for (const auto& o : m.at("outputs")) names.push_back(o.get<std::string>());
      for (const auto& n : names) {
        ++files;
        if (!fs::exists(b / n) || read_file(a / n) != read_file(b / n)) {
          return {false, n + " differs between reruns"};
        }
      }
    }
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
  return {true, std::to_string(steps.size()) + " commands, " + std::to_string(files) +
                    " files byte-identical"};
}

}  // namespace

int main() {
  fs::create_directories(kWork);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"motif algebra", motif_algebra},
      {"equivalence classes", equivalence_classes},
      {"null model", null_model_check},
      {"differentiability", differentiability},
      {"loss algebra", loss_algebra},
      {"metric algebra", metric_algebra},
      {"end-to-end planted rule", end_to_end},
      {"cohesiveness dominance", cohesiveness_dominance},
      {"motif-enhanced prediction", motif_enhanced},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << " [" << fmt(secs) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
