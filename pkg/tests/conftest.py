"""Shared fixtures.

The two expensive end-to-end runs (desk suite and ablation suite) are
session-scoped so the acceptance tests share one execution. Wall-clock time
is captured alongside the results because the acceptance criteria carry
runtime budgets.
"""
import time

import numpy as np
import pytest

from huge import datagen, graph, metrics, trainer


@pytest.fixture(scope="session")
def desk_result():
    t0 = time.perf_counter()
    res = metrics.desk_run()
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def ablation_reports():
    t0 = time.perf_counter()
    reports = metrics.ablation_run()
    return reports, time.perf_counter() - t0


@pytest.fixture
def tiny_graph():
    """Deterministic 40-node planted-fraud graph for unit tests."""
    spec = datagen.SynthSpec(n=40, d=6, fraud_fraction=0.1, avg_degree=4.0, seed=7)
    return datagen.generate(spec)


@pytest.fixture
def path_graph():
    """Path 0-1-2-3 with simple attributes."""
    edges = [(0, 1), (1, 2), (2, 3)]
    attrs = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 0.5]])
    return graph.from_edges(edges, attrs)


@pytest.fixture
def triangle_graph():
    edges = [(0, 1), (1, 2), (0, 2)]
    attrs = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    return graph.from_edges(edges, attrs)


def quick_config(**overrides):
    base = dict(epochs=2, batch_size=16, alpha=0.5, lr=5e-4, seed=0, d_e=8)
    base.update(overrides)
    return trainer.TrainConfig(**base)
