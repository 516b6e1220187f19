"""Synthetic planted-fraud graphs for desk-scale evaluation.

Benign nodes sit in one Gaussian attribute cluster and wire homophilically
(nearest-attribute among random candidates). Fraud nodes draw from a
shifted, noisier cluster, get blended toward the benign mean by the
camouflage factor, and wire a configurable fraction of their edges to
uniformly random benign nodes: attribute camouflage and heterophilic
wiring are independent knobs.
"""
from dataclasses import dataclass, fields

import numpy as np

from huge.graph import from_edges

# generator shape constants; changing any of these changes every graph
_SHIFT = 6.0  # cluster shift applied to the first d//4 attributes
_FRAUD_NOISE = 1.0  # benign noise is 0.5
_POOL = 20  # candidate pool size for nearest-attribute wiring


@dataclass(frozen=True)
class SynthSpec:
    n: int
    d: int = 16
    fraud_fraction: float = 0.05
    avg_degree: float = 10.0
    camouflage: float = 0.5
    heterophilic_wiring: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("n must be at least 4")
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if not 0.0 < self.fraud_fraction < 0.5:
            raise ValueError("fraud_fraction must lie in (0, 0.5)")
        if self.avg_degree < 1.0:
            raise ValueError("avg_degree must be >= 1")
        if not 0.0 <= self.camouflage <= 1.0:
            raise ValueError("camouflage must lie in [0, 1]")
        if not 0.0 <= self.heterophilic_wiring <= 1.0:
            raise ValueError("heterophilic_wiring must lie in [0, 1]")
        if self.n_fraud < 2:
            raise ValueError(
                f"fraud count round(n*fraud_fraction) = {self.n_fraud} is below 2"
            )

    @property
    def n_fraud(self):
        return int(round(self.n * self.fraud_fraction))

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _nearest_in_pool(X, src, pools):
    """Index of the attribute-nearest pool candidate per row, self excluded."""
    diff = X[pools] - X[src][:, None, :]
    dist = np.einsum("tpk,tpk->tp", diff, diff)
    dist[pools == src[:, None]] = np.inf
    return pools[np.arange(src.size), np.argmin(dist, axis=1)]


def generate(spec):
    """Build the planted-fraud graph for ``spec`` (deterministic per seed)."""
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n, spec.d
    n_f = spec.n_fraud

    mu_b = rng.uniform(1.0, 2.0, size=d)
    X = mu_b + 0.5 * rng.standard_normal((n, d))
    fraud = np.sort(rng.choice(n, size=n_f, replace=False))
    labels = np.zeros(n, dtype=np.int64)
    labels[fraud] = 1
    benign = np.flatnonzero(labels == 0)

    mu_f = mu_b.copy()
    mu_f[: max(1, d // 4)] += _SHIFT
    raw = mu_f + _FRAUD_NOISE * rng.standard_normal((n_f, d))
    X[fraud] = (1.0 - spec.camouflage) * raw + spec.camouflage * mu_b

    # per-node edge budgets; each edge is created once by its initiator, so
    # Poisson(avg/2) budgets give expected degree close to avg_degree
    budget = np.maximum(1, rng.poisson(spec.avg_degree / 2.0, size=n))
    het = np.zeros(n, dtype=np.int64)
    het[fraud] = np.minimum(
        budget[fraud], np.round(spec.heterophilic_wiring * budget[fraud]).astype(np.int64)
    )
    sim = budget - het

    src_sim = np.repeat(np.arange(n, dtype=np.int64), sim)
    pools = rng.integers(0, n, size=(src_sim.size, _POOL))
    dst_sim = _nearest_in_pool(X, src_sim, pools)

    src_het = np.repeat(np.arange(n, dtype=np.int64), het)
    dst_het = benign[rng.integers(0, benign.size, size=src_het.size)]

    edges = np.stack(
        [np.concatenate([src_sim, src_het]), np.concatenate([dst_sim, dst_het])], axis=1
    )
    return from_edges(edges, X, labels=labels)
