"""Rank-list sensitivity auditing for sequential recommenders.

Thin wrapper around the C++ extension: dataset handling, RBO / top-K Jaccard
metrics, the interaction dependency graph with cascading scores, minimal
training-data perturbations, the deterministic reference recommender, and the
stability-measurement harness.
"""

import json as _json

try:
    from ranksens._ranksens import *  # noqa: F401,F403  (installed layout)
    from ranksens import _ranksens as _ext
except ImportError:  # build-tree layout: extension next to the package
    from _ranksens import *  # noqa: F401,F403
    import _ranksens as _ext

__version__ = _ext.__version__


def standard_benchmark():
    """The frozen desk-scale experiment config as a dict."""
    return _json.loads(_ext.standard_benchmark_json())


def run_control(config):
    """Train twice with no edit and verify bit-stable rank lists."""
    return _json.loads(_ext.run_control_json(_json.dumps(config)))


def run_stability(config):
    """Full perturb-retrain-compare protocol; returns the report as a dict."""
    return _json.loads(_ext.run_stability_json(_json.dumps(config)))


def compare_strategies(config, strategies):
    """Run several target-selection strategies on shared seeds."""
    return _json.loads(_ext.compare_strategies_json(_json.dumps(config), list(strategies)))


def sweep_k(config, ks):
    """CASPER sweep over perturbation counts."""
    return _json.loads(_ext.sweep_k_json(_json.dumps(config), list(ks)))


def runtime_benchmark(sizes, trials=3, n_users=200, n_items=100):
    """Time graph construction and the full pipeline; returns CSV text."""
    return _ext.runtime_benchmark_csv(list(sizes), trials, n_users, n_items)
