// tempme: command-line pipeline over one run directory.
//
//   tempme synth --rule triadic-closure --nodes 30 --events 2000 --seed 1 -d run
//   tempme train-base -d run
//   tempme train-explainer -d run
//   tempme explain -d run
//   tempme evaluate -d run
//
// Each command writes its artifact plus manifest.<command>.json. Settings come
// from flags, then --config, then built-in defaults.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempme/adapter.hpp"
#include "tempme/base_model.hpp"
#include "tempme/diagnostics.hpp"
#include "tempme/error.hpp"
#include "tempme/evaluation.hpp"
#include "tempme/explainer.hpp"
#include "tempme/motif.hpp"
#include "tempme/parallel.hpp"
#include "tempme/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tempme;

namespace {

constexpr const char* kAdapterEnv = "TEMPME_ADAPTER";

json default_config() {
  BaseTrainConfig base;
  ExplainerConfig explainer;
  json c;
  c["seed"] = 0;
  c["ingest"] = {{"input", ""}, {"header", false}};
  c["synth"] = {{"rule", "triadic-closure"}, {"nodes", 30}, {"events", 2000}};
  c["census"] = {{"max_nodes", 3}, {"length", 3}, {"delta", nullptr}, {"per_node", 100},
                 {"smoothing", kDefaultSmoothing}};
  c["base"] = base.to_json();
  c["base"].erase("seed");
  c["explainer"] = explainer.to_json();
  c["explainer"].erase("seed");
  c["explain"] = {{"queries", 0}, {"event", -1}};
  c["evaluate"] = {{"cohesion_level", 0.1}, {"adapter", ""}, {"adapter_timeout", 5.0}};
  c["grad_check"] = {{"points", 10}};
  return c;
}

// Recursive overlay; unknown keys are rejected so typos do not go unnoticed.
void overlay(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError("config " + where + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where + "/" + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key " + key);
    auto& slot = base[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DependencyError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DependencyError("cannot write " + p.string());
  out << data;
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

void warn(const std::string& message) {
  std::cerr << json{{"warning", message}}.dump() << "\n";
}

// A registered flag writes its value to a config path when given.
struct Flag {
  CLI::Option* opt;
  std::function<void(json&)> apply;
};

class Command {
 public:
  Command(CLI::App& root, const std::string& name, const std::string& help)
      : app_(root.add_subcommand(name, help)), name_(name) {}

  template <class T>
  Command& flag(const std::string& spec, const std::string& path, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(spec, *value, help);
    flags_.push_back({opt, [value, path](json& c) { c[json::json_pointer(path)] = *value; }});
    return *this;
  }
  Command& toggle(const std::string& spec, const std::string& path, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app_->add_flag(spec, *value, help);
    flags_.push_back({opt, [value, path](json& c) { c[json::json_pointer(path)] = *value; }});
    return *this;
  }
  template <class F>
  Command& run(F fn) {
    fn_ = fn;
    return *this;
  }

  CLI::App* app() const { return app_; }
  const std::string& name() const { return name_; }
  void apply_flags(json& c) const {
    for (const auto& f : flags_) {
      if (f.opt->count() > 0) f.apply(c);
    }
  }
  std::function<void()> fn_;

 private:
  CLI::App* app_;
  std::string name_;
  std::vector<Flag> flags_;
};

struct Run {
  fs::path dir;
  json config;
  int jobs = 1;
  std::string command;
  std::map<std::string, std::string> inputs;  // artifact -> content hash
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  std::uint64_t seed() const { return config.at("seed").get<std::uint64_t>(); }

  fs::path require(const std::string& name, const std::string& producer) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) {
      throw DependencyError("missing artifact " + p.string() + "; run " + producer + " first");
    }
    inputs[name] = hex(fnv1a(read_file(p)));
    return p;
  }
  fs::path output(const std::string& name) {
    outputs.push_back(name);
    return dir / name;
  }

  TemporalGraph graph() { return TemporalGraph::load(require("graph.json", "synth or ingest")); }
  BaseModel base() { return BaseModel::load(require("base.ckpt", "train-base")); }
  Explainer explainer() { return Explainer::load(require("explainer.ckpt", "train-explainer")); }

  BaseTrainConfig base_config() const {
    json j = config.at("base");
    j["seed"] = seed();
    return BaseTrainConfig::from_json(j);
  }
  ExplainerConfig explainer_config() const {
    json j = config.at("explainer");
    j["seed"] = seed();
    return ExplainerConfig::from_json(j);
  }
  MotifParams census_params() const {
    const auto& c = config.at("census");
    MotifParams p;
    p.max_nodes = c.at("max_nodes").get<int>();
    p.length = c.at("length").get<int>();
    p.delta = c.at("delta").is_null() ? std::numeric_limits<double>::infinity()
                                     : c.at("delta").get<double>();
    return p;
  }

  void finish() {
    const std::string dumped = config.dump();
    json m;
    m["command"] = command;
    m["config_hash"] = hex(fnv1a(dumped));
    m["seed"] = seed();
    m["versions"] = {{"tempme", kVersion},
                     {"graph_format", kGraphFormatVersion},
                     {"adapter_protocol", kAdapterProtocol}};
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["config"] = config;
    write_json(dir / ("manifest." + command + ".json"), m);

    // Wall-clock timings vary run to run, so they live apart from the artifacts.
    const fs::path timing = dir / "timing.json";
    json t = json::object();
    if (fs::exists(timing)) {
      try {
        t = json::parse(read_file(timing));
      } catch (const json::exception&) {
        t = json::object();
      }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    t[command] = {{"seconds", secs}, {"jobs", jobs}};
    write_json(timing, t);
  }
};

void check_ranges(const ExplainerConfig& c) {
  if (c.motifs_per_node < 20 || c.motifs_per_node > 100) {
    warn("motifs per node C = " + std::to_string(c.motifs_per_node) + " outside the usual range [20, 100]");
  }
  if (c.beta < 0.2 || c.beta > 1.0) {
    warn("beta = " + std::to_string(c.beta) + " outside the usual range [0.2, 1]");
  }
  if (c.prior_p < 0.1 || c.prior_p > 0.8) {
    warn("prior belief p = " + std::to_string(c.prior_p) + " outside the usual range [0.1, 0.8]");
  }
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// --- commands ----------------------------------------------------------------

void cmd_ingest(Run& r) {
  const auto& c = r.config.at("ingest");
  const std::string input = c.at("input").get<std::string>();
  if (input.empty()) throw ConfigError("ingest needs --input");
  r.inputs[fs::path(input).filename().string()] = hex(fnv1a(read_file(input)));
  IngestReport rep;
  auto g = ingest_csv(input, c.at("header").get<bool>(), &rep);
  g.save(r.output("graph.json"));
  write_json(r.output("ingest_report.json"),
             {{"rows_read", rep.rows_read},
              {"events", g.event_count()},
              {"nodes", g.node_count()},
              {"self_loops_skipped", rep.self_loops_skipped},
              {"skipped_lines", rep.skipped_lines}});
}

void cmd_synth(Run& r) {
  const auto& c = r.config.at("synth");
  const auto rule = parse_rule(c.at("rule").get<std::string>());
  if (!rule) throw ConfigError("unknown synthetic rule " + c.at("rule").dump());
  auto g = generate_synthetic(*rule, c.at("nodes").get<std::size_t>(), c.at("events").get<std::size_t>(),
                              r.seed());
  g.save(r.output("graph.json"));
}

json census_json(const TemporalGraph& g, const MotifParams& p, const MotifCensus& census,
                 int per_node, double smoothing) {
  json j;
  j["params"] = {{"max_nodes", p.max_nodes},
                 {"length", p.length},
                 {"delta", std::isfinite(p.delta) ? json(p.delta) : json()},
                 {"per_node", per_node}};
  j["total"] = census.total;
  j["truncated"] = census.truncated;
  // Single-event instances are dead ends with no temporal structure; they are
  // counted but not reported as a class.
  json classes = census.to_json();
  const std::size_t single = classes.contains("01") ? classes["01"]["count"].get<std::size_t>() : 0;
  classes.erase("01");
  j["classes"] = classes;
  j["single_event"] = single;
  j["smoothed"] = smoothed_probs(census, p.max_nodes, p.length, smoothing);
  j["events"] = g.event_count();
  return j;
}

void cmd_census(Run& r) {
  auto g = r.graph();
  const auto p = r.census_params();
  const int per_node = r.config.at("census").at("per_node").get<int>();
  const double smoothing = r.config.at("census").at("smoothing").get<double>();
  const auto c = node_census(g, p, per_node, derive_seed(r.seed(), {0xce45ULL}));
  write_json(r.output("census.json"), census_json(g, p, c, per_node, smoothing));
}

void cmd_null_census(Run& r) {
  auto g = r.graph();
  const auto p = r.census_params();
  const int per_node = r.config.at("census").at("per_node").get<int>();
  const double smoothing = r.config.at("census").at("smoothing").get<double>();
  const auto null = null_model(g, derive_seed(r.seed(), {0x4e11ULL}));
  const auto observed = node_census(g, p, per_node, derive_seed(r.seed(), {0xce45ULL}));
  const auto shuffled = node_census(null, p, per_node, derive_seed(r.seed(), {0xce45ULL}));
  auto j = census_json(null, p, shuffled, per_node, smoothing);
  j["total_variation_to_observed"] = total_variation(observed.probs(), shuffled.probs());
  write_json(r.output("null_census.json"), j);
}

void cmd_train_base(Run& r) {
  auto g = r.graph();
  BaseTrainReport rep;
  auto model = train_base(g, r.base_config(), &rep);
  model.save(r.output("base.ckpt"));
  write_json(r.output("base_report.json"), rep.to_json());
  if (rep.diverged) warn("base training diverged; kept the last finite parameters");
}

void cmd_train_explainer(Run& r) {
  auto g = r.graph();
  auto base = r.base();
  const auto cfg = r.explainer_config();
  check_ranges(cfg);
  ExplainerTrainReport rep;
  auto ex = train_explainer(g, base, cfg, &rep);
  ex.save(r.output("explainer.ckpt"));
  write_json(r.output("explainer_report.json"), rep.to_json());
}

void cmd_explain(Run& r) {
  auto g = r.graph();
  auto base = r.base();
  auto ex = r.explainer();
  const auto& c = r.config.at("explain");
  const long event = c.at("event").get<long>();
  const auto queries = c.at("queries").get<std::size_t>();

  std::vector<EventId> targets;
  if (event >= 0) {
    if (static_cast<std::size_t>(event) >= g.event_count()) {
      throw ConfigError("event " + std::to_string(event) + " not in the graph");
    }
    targets.push_back(static_cast<EventId>(event));
  } else {
    const auto split = ChronoSplit::of(g);
    for (const auto& e : g.events()) {
      if (e.t > split.val_end) targets.push_back(e.id);
    }
    if (queries > 0 && targets.size() > queries) targets.resize(queries);
  }
  const auto levels = sparsity_levels();
  std::vector<ExplanationResult> results(targets.size());
  parallel_for(targets.size(), r.jobs, [&](std::size_t i) {
    const Event& e = g.event(targets[i]);
    results[i] = explain(g, base, ex, e.u, e.v, e.t, levels, e.id);
  });
  json out;
  out["levels"] = levels;
  out["explanations"] = json::array();
  std::size_t empty = 0;
  for (const auto& res : results) {
    out["explanations"].push_back(res.to_json(g));
    empty += res.empty();
  }
  out["empty"] = empty;
  write_json(r.output("explanations.json"), out);
}

void cmd_evaluate(Run& r, bool emit_plot) {
  auto g = r.graph();
  const auto& c = r.config.at("evaluate");
  const json expl = json::parse(read_file(r.require("explanations.json", "explain")));
  std::vector<ExplanationResult> results;
  for (const auto& e : expl.at("explanations")) results.push_back(ExplanationResult::from_json(e));

  EvalConfig ec;
  ec.levels = expl.at("levels").get<std::vector<double>>();
  ec.cohesion_level = c.at("cohesion_level").get<double>();
  ec.seed = r.seed();
  ec.jobs = r.jobs;

  EvalReport report;
  const std::string adapter = c.at("adapter").get<std::string>();
  if (!adapter.empty()) {
    AdapterConfig ac;
    ac.argv = split_words(adapter);
    ac.timeout_seconds = c.at("adapter_timeout").get<double>();
    ExternalAdapter model(ac);
    report = evaluate(g, model, results, ec);
  } else {
    auto base = r.base();
    report = evaluate(g, base, results, ec);
  }
  write_json(r.output("report.json"), report.to_json());
  write_file(r.output("curve.csv"), report.curve_csv());
  if (emit_plot) write_file(r.output("plot_data.csv"), report.plot_csv());
}

void cmd_grad_check(Run& r) {
  const auto entries = gradient_suite(r.seed(), r.config.at("grad_check").at("points").get<int>());
  write_json(r.output("gradcheck.json"), to_json(entries));
  for (const auto& e : entries) {
    if (!e.passed) {
      throw NumericError("gradient check failed for " + e.component + " (relative error " +
                         std::to_string(e.max_rel_error) + ")");
    }
  }
}

int fail(const std::string& kind, const std::string& message, const std::string& command) {
  std::cerr << json{{"error", kind}, {"message", message}, {"command", command}}.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal motif explanations for temporal link predictors"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string run_dir = "run";
  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("-d,--run-dir", run_dir, "Run directory holding all artifacts");
  app.add_option("--config", config_path, "JSON config file or an earlier manifest");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random stream");
  app.add_option("-j,--jobs", jobs, "Worker threads for explain/evaluate")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", kVersion);

  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const std::string& name, const std::string& help) -> Command& {
    commands.push_back(std::make_unique<Command>(app, name, help));
    return *commands.back();
  };
  Run run;
  bool emit_plot = false;

  add("ingest", "Read a u,v,t[,attrs] CSV into graph.json")
      .flag<std::string>("-i,--input", "/ingest/input", "CSV file")
      .toggle("--header", "/ingest/header", "First row is a header")
      .run([&] { cmd_ingest(run); });
  add("synth", "Generate a planted synthetic graph into graph.json")
      .flag<std::string>("--rule", "/synth/rule", "triadic-closure, preferential-attachment or uniform-random")
      .flag<std::size_t>("--nodes", "/synth/nodes", "Node count")
      .flag<std::size_t>("--events", "/synth/events", "Event count")
      .run([&] { cmd_synth(run); });
  for (const char* name : {"census", "null-census"}) {
    const bool null = std::string(name) == "null-census";
    add(name, null ? "Motif census of the time-shuffled graph" : "Motif census of graph.json")
        .flag<int>("-n,--n", "/census/max_nodes", "Maximum motif nodes")
        .flag<int>("-l,--l", "/census/length", "Motif length")
        .flag<double>("--delta", "/census/delta", "Time window (default unbounded)")
        .flag<int>("--per-node", "/census/per_node", "Motifs sampled per node")
        .run([&, null] { null ? cmd_null_census(run) : cmd_census(run); });
  }
  add("train-base", "Train the base link predictor into base.ckpt")
      .flag<int>("--epochs", "/base/epochs", "Maximum epochs")
      .flag<double>("--lr", "/base/lr", "Adam learning rate")
      .flag<int>("--batch", "/base/batch", "Batch size")
      .flag<int>("--patience", "/base/patience", "Early-stopping patience")
      .flag<int>("--neighbors", "/base/model/neighbors", "Recent events attended per endpoint")
      .flag<std::size_t>("--width", "/base/model/width", "Hidden width")
      .run([&] { cmd_train_base(run); });
  add("train-explainer", "Train the motif explainer into explainer.ckpt")
      .flag<int>("-n,--n", "/explainer/motif/max_nodes", "Maximum motif nodes")
      .flag<int>("-l,--l", "/explainer/motif/length", "Motif length")
      .flag<double>("--delta", "/explainer/motif/delta", "Fixed time window (disables auto delta)")
      .flag<int>("-C,--motifs", "/explainer/motifs_per_node", "Motifs sampled per endpoint")
      .flag<double>("-p,--prior-p", "/explainer/prior_p", "Prior belief p")
      .flag<double>("--beta", "/explainer/beta", "KL weight")
      .flag<std::string>("--prior", "/explainer/prior", "uniform or empirical")
      .flag<int>("--epochs", "/explainer/epochs", "Epochs")
      .flag<double>("--lr", "/explainer/lr", "Adam learning rate")
      .flag<int>("--batch", "/explainer/batch", "Queries per step")
      .flag<std::size_t>("--max-queries", "/explainer/max_train_queries", "Training queries per epoch (0 = all)")
      .flag<int>("--gine-layers", "/explainer/gine_layers", "GINE depth")
      .run([&] { cmd_train_explainer(run); });
  add("explain", "Explain test events into explanations.json")
      .flag<std::size_t>("--queries", "/explain/queries", "Number of test events (0 = all)")
      .flag<long>("--event", "/explain/event", "Explain only this event id")
      .run([&] { cmd_explain(run); });
  add("evaluate", "Score explanations against the base model or an adapter")
      .flag<double>("--cohesion-level", "/evaluate/cohesion_level", "Sparsity level for cohesiveness")
      .flag<std::string>("--adapter", "/evaluate/adapter", "External predictor command (else $TEMPME_ADAPTER, else base.ckpt)")
      .flag<double>("--adapter-timeout", "/evaluate/adapter_timeout", "Seconds per adapter call")
      .run([&] { cmd_evaluate(run, emit_plot); });
  commands.back()->app()->add_flag("--emit-plot-data", emit_plot, "Also write plot_data.csv");
  add("grad-check", "Finite-difference checks of the differentiable components")
      .flag<int>("--points", "/grad_check/points", "Random points per component")
      .run([&] { cmd_grad_check(run); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const Command* chosen = nullptr;
  for (const auto& c : commands) {
    if (c->app()->parsed()) chosen = c.get();
  }
  try {
    json cfg = default_config();
    if (const char* env = std::getenv(kAdapterEnv); env && *env) cfg["evaluate"]["adapter"] = env;
    if (!config_path.empty()) {
      json file = json::parse(read_file(config_path));
      if (file.contains("command") && file.contains("config")) file = file.at("config");
      overlay(cfg, file, "");
    }
    if (seed_opt->count() > 0) cfg["seed"] = seed;
    chosen->apply_flags(cfg);
    // A fixed window on the explainer turns the automatic one off.
    if (!cfg["explainer"]["motif"]["delta"].is_null()) cfg["explainer"]["auto_delta"] = false;

    run.dir = run_dir;
    run.config = std::move(cfg);
    run.jobs = jobs;
    run.command = chosen->name();
    fs::create_directories(run.dir);
    chosen->fn_();
    run.finish();
  } catch (const tempme::Error& e) {
    return fail(e.kind(), e.what(), chosen->name());
  } catch (const nlohmann::json::exception& e) {
    return fail("schema", e.what(), chosen->name());
  } catch (const std::exception& e) {
    return fail("internal", e.what(), chosen->name());
  }
  return 0;
}
