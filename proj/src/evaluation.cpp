#include "tempme/evaluation.hpp"

#include <sstream>

#include "tempme/error.hpp"
#include "tempme/metrics.hpp"
#include "tempme/parallel.hpp"

namespace tempme {

namespace {

std::vector<EventId> prefix(const std::vector<EventId>& ranking, double level) {
  return {ranking.begin(), ranking.begin() + static_cast<long>(retained_count(level, ranking.size()))};
}

}  // namespace

EvalReport evaluate(const TemporalGraph& g, const Predictor& model,
                    std::span<const ExplanationResult> explanations, const EvalConfig& cfg) {
  if (cfg.levels.size() < 2) throw ConfigError("evaluate: need at least two sparsity levels");
  EvalReport rep;
  rep.levels = cfg.levels;
  rep.cohesion_level = cfg.cohesion_level;
  rep.queries.resize(explanations.size());

  parallel_for(explanations.size(), cfg.jobs, [&](std::size_t i) {
    const auto& ex = explanations[i];
    auto& q = rep.queries[i];
    q.u = ex.u;
    q.v = ex.v;
    q.t = ex.t;
    q.target = ex.target;
    q.comp_graph_size = ex.comp_graph.size();
    q.full_prediction = model.predict(g, {ex.u, ex.v, ex.t, std::nullopt});
    q.label = predicted_label(q.full_prediction);
    const auto random = random_ranking(ex.comp_graph, derive_seed(cfg.seed, {0x0a4dULL, i}));
    auto run = [&](const std::vector<EventId>& ranking, std::vector<double>& fid,
                   std::vector<int>& match) {
      for (double level : cfg.levels) {
        const double p = model.predict(g, {ex.u, ex.v, ex.t, prefix(ranking, level)});
        fid.push_back(fidelity(q.full_prediction, p));
        match.push_back(predicted_label(p) == q.label ? 1 : 0);
      }
    };
    run(ex.ranking, q.fidelity, q.match);
    run(random, q.random_fidelity, q.random_match);
    q.cohesiveness = cohesiveness(g, prefix(ex.ranking, cfg.cohesion_level), ex.comp_graph);
    q.random_cohesiveness = cohesiveness(g, prefix(random, cfg.cohesion_level), ex.comp_graph);
  });

  const std::size_t n = rep.queries.size();
  const std::size_t k = cfg.levels.size();
  rep.accuracy.assign(k, 0.0);
  rep.random_accuracy.assign(k, 0.0);
  rep.mean_fidelity.assign(k, 0.0);
  rep.random_mean_fidelity.assign(k, 0.0);
  double coh = 0.0, coh_random = 0.0;
  for (const auto& q : rep.queries) {
    for (std::size_t l = 0; l < k; ++l) {
      rep.accuracy[l] += q.match[l];
      rep.random_accuracy[l] += q.random_match[l];
      rep.mean_fidelity[l] += q.fidelity[l];
      rep.random_mean_fidelity[l] += q.random_fidelity[l];
    }
    if (q.cohesiveness && q.random_cohesiveness) {
      ++rep.cohesion_queries;
      coh += *q.cohesiveness;
      coh_random += *q.random_cohesiveness;
    }
  }
  if (n > 0) {
    for (std::size_t l = 0; l < k; ++l) {
      rep.accuracy[l] /= static_cast<double>(n);
      rep.random_accuracy[l] /= static_cast<double>(n);
      rep.mean_fidelity[l] /= static_cast<double>(n);
      rep.random_mean_fidelity[l] /= static_cast<double>(n);
    }
    rep.acc_auc = acc_auc(cfg.levels, rep.accuracy);
    rep.random_acc_auc = acc_auc(cfg.levels, rep.random_accuracy);
  }
  if (rep.cohesion_queries > 0) {
    rep.mean_cohesiveness = coh / static_cast<double>(rep.cohesion_queries);
    rep.random_mean_cohesiveness = coh_random / static_cast<double>(rep.cohesion_queries);
  }
  return rep;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["levels"] = levels;
  j["query_count"] = queries.size();
  j["tempme"] = {{"acc_auc", acc_auc},
                 {"accuracy", accuracy},
                 {"mean_fidelity", mean_fidelity},
                 {"mean_cohesiveness", mean_cohesiveness}};
  j["random"] = {{"acc_auc", random_acc_auc},
                 {"accuracy", random_accuracy},
                 {"mean_fidelity", random_mean_fidelity},
                 {"mean_cohesiveness", random_mean_cohesiveness}};
  j["cohesion"] = {{"level", cohesion_level}, {"queries", cohesion_queries}};
  auto qs = nlohmann::ordered_json::array();
  for (const auto& q : queries) {
    nlohmann::ordered_json jq{{"u", q.u},
                              {"v", q.v},
                              {"t", q.t},
                              {"target", q.target},
                              {"prediction", q.full_prediction},
                              {"label", q.label},
                              {"comp_graph_size", q.comp_graph_size},
                              {"fidelity", q.fidelity},
                              {"random_fidelity", q.random_fidelity}};
    jq["cohesiveness"] = q.cohesiveness ? nlohmann::ordered_json(*q.cohesiveness) : nlohmann::ordered_json();
    jq["random_cohesiveness"] =
        q.random_cohesiveness ? nlohmann::ordered_json(*q.random_cohesiveness) : nlohmann::ordered_json();
    qs.push_back(std::move(jq));
  }
  j["queries"] = qs;
  return j;
}

std::string EvalReport::curve_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "query,level,fidelity,acc,random_fidelity,random_acc\n";
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t l = 0; l < levels.size(); ++l) {
      out << i << ',' << levels[l] << ',' << queries[i].fidelity[l] << ',' << queries[i].match[l]
          << ',' << queries[i].random_fidelity[l] << ',' << queries[i].random_match[l] << '\n';
    }
  }
  return out.str();
}

std::string EvalReport::plot_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "explainer,level,sparsity,fidelity,acc\n";
  for (std::size_t l = 0; l < levels.size(); ++l) {
    double mean_sparsity = 0.0;
    for (const auto& q : queries) {
      if (q.comp_graph_size > 0) {
        mean_sparsity += static_cast<double>(retained_count(levels[l], q.comp_graph_size)) /
                         static_cast<double>(q.comp_graph_size);
      }
    }
    if (!queries.empty()) mean_sparsity /= static_cast<double>(queries.size());
    out << "tempme," << levels[l] << ',' << mean_sparsity << ',' << mean_fidelity[l] << ','
        << accuracy[l] << '\n';
    out << "random," << levels[l] << ',' << mean_sparsity << ',' << random_mean_fidelity[l] << ','
        << random_accuracy[l] << '\n';
  }
  return out.str();
}

}  // namespace tempme
