#include <limits>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tempme/base_model.hpp"
#include "tempme/diagnostics.hpp"
#include "tempme/error.hpp"
#include "tempme/evaluation.hpp"
#include "tempme/explainer.hpp"
#include "tempme/metrics.hpp"
#include "tempme/motif.hpp"

namespace py = pybind11;
using namespace tempme;

namespace {

// JSON crosses the boundary as text; the Python side parses it.
template <class J>
std::string text(const J& j) {
  return j.dump();
}

MotifParams motif_params(int n, int l, std::optional<double> delta) {
  return {n, l, delta.value_or(std::numeric_limits<double>::infinity())};
}

py::list instances(const TemporalGraph& g, const std::vector<MotifInstance>& v) {
  py::list out;
  for (const auto& m : v) {
    py::dict d;
    d["anchor"] = m.anchor;
    d["events"] = m.events;
    d["code"] = motif_code(g, m).str();
    d["truncated"] = m.truncated;
    out.append(d);
  }
  return out;
}

SyntheticRule rule_of(const std::string& name) {
  auto r = parse_rule(name);
  if (!r) throw ConfigError("unknown synthetic rule " + name);
  return *r;
}

}  // namespace

PYBIND11_MODULE(_tempme, m) {
  m.doc() = "Temporal motif explanations for temporal link predictors";

  py::register_exception<Error>(m, "TempmeError");

  py::class_<TemporalGraph>(m, "Graph")
      .def_static("from_csv", [](const std::string& path, bool header) { return ingest_csv(path, header); },
                  py::arg("path"), py::arg("header") = false)
      .def_static("from_csv_text",
                  [](const std::string& s, bool header) { return ingest_csv_text(s, header); },
                  py::arg("text"), py::arg("header") = false)
      .def_static("synthetic",
                  [](const std::string& rule, std::size_t nodes, std::size_t events, std::uint64_t seed) {
                    return generate_synthetic(rule_of(rule), nodes, events, seed);
                  },
                  py::arg("rule"), py::arg("nodes"), py::arg("events"), py::arg("seed") = 0)
      .def_static("load", &TemporalGraph::load)
      .def("save", &TemporalGraph::save)
      .def_property_readonly("event_count", &TemporalGraph::event_count)
      .def_property_readonly("node_count", &TemporalGraph::node_count)
      .def_property_readonly("time_span", &TemporalGraph::time_span)
      .def("event", [](const TemporalGraph& g, EventId id) {
        const Event& e = g.event(id);
        return py::make_tuple(e.u, e.v, e.t, e.attrs);
      })
      .def("to_json", [](const TemporalGraph& g) { return text(g.to_json()); })
      .def("__len__", &TemporalGraph::event_count);

  m.def("null_model", &null_model, py::arg("graph"), py::arg("seed"));
  m.def("computational_graph",
        [](const TemporalGraph& g, NodeId u, NodeId v, double t, int hops, int cap) {
          return computational_graph(g, u, v, t, hops, cap).members;
        },
        py::arg("graph"), py::arg("u"), py::arg("v"), py::arg("t"), py::arg("hops") = 1,
        py::arg("cap") = kDefaultPerHopCap);

  m.def("motif_alphabet", [](int n, int l) {
    std::vector<std::string> out;
    for (const auto& c : motif_alphabet(n, l)) out.push_back(c.str());
    return out;
  }, py::arg("n") = 3, py::arg("l") = 3);
  m.def("sample_motifs",
        [](const TemporalGraph& g, NodeId anchor, double t, int count, int n, int l,
           std::optional<double> delta, std::uint64_t seed) {
          return instances(g, sample_motifs(g, anchor, t, motif_params(n, l, delta), count, seed));
        },
        py::arg("graph"), py::arg("anchor"), py::arg("t"), py::arg("count"), py::arg("n") = 3,
        py::arg("l") = 3, py::arg("delta") = py::none(), py::arg("seed") = 0);
  m.def("enumerate_motifs",
        [](const TemporalGraph& g, NodeId anchor, double t, int n, int l, std::optional<double> delta) {
          return instances(g, enumerate_motifs(g, anchor, t, motif_params(n, l, delta)));
        },
        py::arg("graph"), py::arg("anchor"), py::arg("t"), py::arg("n") = 3, py::arg("l") = 3,
        py::arg("delta") = py::none());
  m.def("node_census",
        [](const TemporalGraph& g, int per_node, int n, int l, std::optional<double> delta,
           std::uint64_t seed) { return node_census(g, motif_params(n, l, delta), per_node, seed).counts; },
        py::arg("graph"), py::arg("per_node") = 100, py::arg("n") = 3, py::arg("l") = 3,
        py::arg("delta") = py::none(), py::arg("seed") = 0);
  m.def("null_class_probs",
        [](const TemporalGraph& g, int per_node, int n, int l, std::uint64_t seed, double smoothing) {
          return null_class_probs(g, motif_params(n, l, std::nullopt), per_node, seed, smoothing);
        },
        py::arg("graph"), py::arg("per_node") = 100, py::arg("n") = 3, py::arg("l") = 3,
        py::arg("seed") = 0, py::arg("smoothing") = kDefaultSmoothing);

  py::class_<BaseModel>(m, "BaseModel")
      .def_static("load", &BaseModel::load)
      .def("save", &BaseModel::save)
      .def("predict",
           [](const BaseModel& b, const TemporalGraph& g, NodeId u, NodeId v, double t,
              std::optional<std::vector<EventId>> retained) {
             return b.predict(g, {u, v, t, std::move(retained)});
           },
           py::arg("graph"), py::arg("u"), py::arg("v"), py::arg("t"), py::arg("retained") = py::none())
      .def("context", [](const BaseModel& b, const TemporalGraph& g, NodeId u, NodeId v, double t) {
        return b.context(g, u, v, t).members;
      })
      .def("config_json", [](const BaseModel& b) { return text(b.config().to_json()); });

  m.def("_train_base",
        [](const TemporalGraph& g, const std::string& config_json) {
          auto cfg = BaseTrainConfig::from_json(nlohmann::json::parse(config_json));
          BaseTrainReport rep;
          std::optional<BaseModel> model;
          {
            py::gil_scoped_release release;
            model.emplace(train_base(g, cfg, &rep));
          }
          return py::make_tuple(std::move(*model), text(rep.to_json()));
        });
  m.def("_default_base_config", [] { return text(BaseTrainConfig{}.to_json()); });

  py::class_<Explainer>(m, "Explainer")
      .def_static("load", &Explainer::load)
      .def("save", &Explainer::save)
      .def("config_json", [](const Explainer& e) { return text(e.config().to_json()); })
      .def("null_probs", &Explainer::null_probs);

  m.def("_train_explainer",
        [](const TemporalGraph& g, const BaseModel& base, const std::string& config_json) {
          auto cfg = ExplainerConfig::from_json(nlohmann::json::parse(config_json));
          ExplainerTrainReport rep;
          std::optional<Explainer> ex;
          {
            py::gil_scoped_release release;
            ex.emplace(train_explainer(g, base, cfg, &rep));
          }
          return py::make_tuple(std::move(*ex), text(rep.to_json()));
        });
  m.def("_default_explainer_config", [] { return text(ExplainerConfig{}.to_json()); });

  m.def("_explain",
        [](const TemporalGraph& g, const BaseModel& base, const Explainer& ex, NodeId u, NodeId v,
           double t, EventId target) {
          const auto levels = sparsity_levels();
          return text(explain(g, base, ex, u, v, t, levels, target).to_json(g));
        },
        py::arg("graph"), py::arg("base"), py::arg("explainer"), py::arg("u"), py::arg("v"),
        py::arg("t"), py::arg("target") = -1);
  m.def("_evaluate",
        [](const TemporalGraph& g, const BaseModel& base, const std::vector<std::string>& explanations,
           double cohesion_level, std::uint64_t seed, int jobs) {
          std::vector<ExplanationResult> results;
          for (const auto& s : explanations) results.push_back(ExplanationResult::from_json(nlohmann::json::parse(s)));
          EvalConfig cfg;
          cfg.cohesion_level = cohesion_level;
          cfg.seed = seed;
          cfg.jobs = jobs;
          py::gil_scoped_release release;
          return text(evaluate(g, base, results, cfg).to_json());
        });

  m.def("fidelity", &fidelity, py::arg("full_prediction"), py::arg("explained_prediction"));
  m.def("sparsity_levels", &sparsity_levels);
  m.def("acc_auc", [](const std::vector<double>& levels, const std::vector<double>& acc) {
    return acc_auc(levels, acc);
  });
  m.def("kl_uniform", [](const std::vector<double>& scores, double p) { return kl_uniform(scores, p); });
  m.def("kl_empirical", [](const std::vector<double>& scores, const std::vector<int>& classes, double p,
                           const std::vector<double>& null) { return kl_empirical(scores, classes, p, null); });
  m.def("average_precision", [](const std::vector<double>& s, const std::vector<int>& l) {
    return average_precision(s, l);
  });
  m.def("_gradient_suite", [](std::uint64_t seed, int points) { return text(to_json(gradient_suite(seed, points))); },
        py::arg("seed") = 0, py::arg("points") = 10);
}
