"""Temporal motif explanations for temporal link predictors."""

import json

from ._tempme import (
    BaseModel,
    Explainer,
    Graph,
    TempmeError,
    acc_auc,
    average_precision,
    computational_graph,
    enumerate_motifs,
    fidelity,
    kl_empirical,
    kl_uniform,
    motif_alphabet,
    node_census,
    null_class_probs,
    null_model,
    sample_motifs,
    sparsity_levels,
)
from . import _tempme

__all__ = [
    "BaseModel",
    "Explainer",
    "Graph",
    "TempmeError",
    "acc_auc",
    "average_precision",
    "computational_graph",
    "enumerate_motifs",
    "evaluate",
    "explain",
    "fidelity",
    "gradient_suite",
    "kl_empirical",
    "kl_uniform",
    "motif_alphabet",
    "node_census",
    "null_class_probs",
    "null_model",
    "sample_motifs",
    "sparsity_levels",
    "train_base",
    "train_explainer",
]


def _merge(base, overrides):
    for key, value in overrides.items():
        if key not in base:
            raise KeyError(f"unknown option {key!r}")
        if isinstance(base[key], dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def train_base(graph, **options):
    """Train the base link predictor. Returns (model, report dict)."""
    cfg = _merge(json.loads(_tempme._default_base_config()), options)
    model, report = _tempme._train_base(graph, json.dumps(cfg))
    return model, json.loads(report)


def train_explainer(graph, base, **options):
    """Train the motif explainer against a frozen base model. Returns (explainer, report dict)."""
    cfg = _merge(json.loads(_tempme._default_explainer_config()), options)
    if options.get("motif", {}).get("delta") is not None and "auto_delta" not in options:
        cfg["auto_delta"] = False
    explainer, report = _tempme._train_explainer(graph, base, json.dumps(cfg))
    return explainer, json.loads(report)


def explain(graph, base, explainer, u, v, t, target=-1):
    """Explain the prediction for (u, v, t); returns the explanation as a dict."""
    return json.loads(_tempme._explain(graph, base, explainer, u, v, t, target))


def evaluate(graph, base, explanations, cohesion_level=0.1, seed=0, jobs=1):
    """Fidelity-sparsity report for explanation dicts, next to a random baseline."""
    texts = [json.dumps(e) for e in explanations]
    return json.loads(_tempme._evaluate(graph, base, texts, cohesion_level, seed, jobs))


def gradient_suite(seed=0, points=10):
    return json.loads(_tempme._gradient_suite(seed, points))
