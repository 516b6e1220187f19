"""Label-free heterophily metrics and their property-check oracles.

The main edge metric ("halo") rescales both endpoint attribute vectors by
their absolute coordinate gaps, then measures a normalized distance between
the rescaled vectors; a node's heterophily is the mean over its incident
edges. Baseline metrics (euclidean, negated cosine, attribute disagreement
rate "ahr") share the same plumbing so comparison runs differ only in the
metric id.

``check_properties`` is a randomized counter-example search for four metric
properties: boundedness, minimal agreement (minimum attained iff the inputs
are equal), monotonicity of the partial derivatives in the coordinate gaps,
and invariance under appending an equal coordinate to both inputs. For the
halo metric the monotonicity claim only holds with the normalizing
denominator held constant, so the check evaluates the central difference of
the gap term with the denominator frozen at the unperturbed pair; the
difference quotient is computed in conjugate form so tiny gaps are never
swamped by the untouched coordinates.
"""
import math
from dataclasses import dataclass

import numpy as np

from huge import kernels

METRIC_IDS = ("halo", "euclidean", "cosine", "ahr")

# closed value range per metric id; None = unbounded above
_BOUNDS = {
    "halo": (0.0, math.sqrt(3.0)),
    "euclidean": (0.0, None),
    "cosine": (-1.0, 1.0),
    "ahr": (0.0, 1.0),
}


def _require_pair(x_i, x_j):
    a = np.asarray(x_i, dtype=np.float64).reshape(-1)
    b = np.asarray(x_j, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"attribute dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("non-finite attribute values")
    return a, b


# The scalar metrics accumulate left-to-right with the same expression order
# as the kernels, so per-edge kernel sweeps match these bitwise.


def halo_edge(x_i, x_j, eps=1e-12):
    """Gap-rescaled normalized distance between two attribute vectors.

    Both vectors are rescaled coordinate-wise by the absolute gap
    w = |x_i - x_j|; the value is |w*x_i - w*x_j| / sqrt(|w*x_i|^2 +
    |w*x_j|^2 + eps), which lies in [0, sqrt(3)) and is 0 iff x_i = x_j.
    """
    a, b = _require_pair(x_i, x_j)
    num = 0.0
    den = 0.0
    for k in range(a.shape[0]):
        w = abs(a[k] - b[k])
        xa = w * a[k]
        xb = w * b[k]
        diff = xa - xb
        num += diff * diff
        den += xa * xa + xb * xb
    return math.sqrt(num / (den + eps))


def euclidean_edge(x_i, x_j):
    a, b = _require_pair(x_i, x_j)
    acc = 0.0
    for k in range(a.shape[0]):
        diff = a[k] - b[k]
        acc += diff * diff
    return math.sqrt(acc)


def cosine_edge(x_i, x_j, eps=1e-12):
    """Negated cosine similarity, in [-1, 1]; zero vectors guarded by eps."""
    a, b = _require_pair(x_i, x_j)
    dot = 0.0
    na = 0.0
    nb = 0.0
    for k in range(a.shape[0]):
        dot += a[k] * b[k]
        na += a[k] * a[k]
        nb += b[k] * b[k]
    na = max(math.sqrt(na), eps)
    nb = max(math.sqrt(nb), eps)
    c = dot / (na * nb)
    c = min(1.0, max(-1.0, c))
    return -c


def ahr_edge(x_i, x_j):
    """Fraction of coordinates on which the two vectors disagree exactly."""
    a, b = _require_pair(x_i, x_j)
    cnt = 0
    for k in range(a.shape[0]):
        if a[k] != b[k]:
            cnt += 1
    return cnt / a.shape[0]


@dataclass
class HeterophilyField:
    """Per-edge-slot and per-node heterophily values for one graph."""

    edge_values: np.ndarray  # aligned with graph.cols
    node_values: np.ndarray  # length n; 0 for isolated nodes
    metric_id: str
    eps: float


def node_heterophily(graph, metric_id="halo", eps=1e-12):
    """Evaluate the edge metric on every directed slot and average per node.

    Isolated nodes get node value 0.
    """
    if metric_id not in METRIC_IDS:
        raise ValueError(f"unknown metric id {metric_id!r}; choose from {METRIC_IDS}")
    src = np.repeat(np.arange(graph.n, dtype=np.int64), graph.degrees)
    if metric_id == "halo":
        ev = kernels.halo_edge_values(graph.attrs, src, graph.cols, eps)
    elif metric_id == "euclidean":
        ev = kernels.euclidean_edge_values(graph.attrs, src, graph.cols)
    elif metric_id == "cosine":
        ev = kernels.cosine_edge_values(graph.attrs, src, graph.cols, eps)
    else:
        ev = kernels.ahr_edge_values(graph.attrs, src, graph.cols)
    nv = kernels.segment_mean(ev, graph.offsets)
    return HeterophilyField(edge_values=ev, node_values=nv, metric_id=metric_id, eps=eps)


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    checked: int
    violations: int
    witness: str | None = None


@dataclass
class PropertyReport:
    metric_id: str
    boundedness: PropertyCheck
    minimal_agreement: PropertyCheck
    monotonicity: PropertyCheck
    equal_attribute_tolerance: PropertyCheck

    @property
    def checks(self):
        return (
            self.boundedness,
            self.minimal_agreement,
            self.monotonicity,
            self.equal_attribute_tolerance,
        )

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {
            "metric_id": self.metric_id,
            "all_passed": self.all_passed,
            "properties": {
                c.name: {
                    "passed": c.passed,
                    "checked": c.checked,
                    "violations": c.violations,
                    "witness": c.witness,
                }
                for c in self.checks
            },
        }


def _seq_rowsum(M):
    """Left-to-right row sums (cumsum tail), matching the scalar metrics.

    np.sum's pairwise regrouping would make appending an exactly-zero
    coordinate shift the low bits; sequential order keeps the tolerance
    property bitwise where it holds mathematically.
    """
    return np.cumsum(M, axis=1)[:, -1]


def _batch_values(metric_id, A, B, eps):
    """Vectorized metric over row-aligned pair matrices (checker internal)."""
    if metric_id == "halo":
        W = np.abs(A - B)
        XA = W * A
        XB = W * B
        D = XA - XB
        num = _seq_rowsum(D * D)
        den = _seq_rowsum(XA * XA + XB * XB)
        return np.sqrt(num / (den + eps))
    if metric_id == "euclidean":
        D = A - B
        return np.sqrt(_seq_rowsum(D * D))
    if metric_id == "cosine":
        na = np.maximum(np.sqrt(_seq_rowsum(A * A)), eps)
        nb = np.maximum(np.sqrt(_seq_rowsum(B * B)), eps)
        c = _seq_rowsum(A * B) / (na * nb)
        return -np.clip(c, -1.0, 1.0)
    return np.mean(A != B, axis=1)


def _dim_buckets(rng, trials, dim, max_scale):
    """Random pair batches bucketed by dimension, rows scaled log-uniformly."""
    dims = rng.integers(2, dim + 1, size=trials)
    scales = 10.0 ** rng.uniform(-2.0, math.log10(max_scale), size=trials)
    out = []
    for dd in np.unique(dims):
        mask = dims == dd
        k = int(mask.sum())
        A = rng.standard_normal((k, dd))
        B = rng.standard_normal((k, dd))
        out.append((scales[mask], A, B))
    return out


def _check_boundedness(metric_id, rng, trials, dim, max_scale, eps):
    lo, hi = _BOUNDS[metric_id]
    if hi is None:
        # unbounded above: demonstrate by scaling one crafted pair until the
        # value exceeds a large fixed bound
        scale = 1.0
        value = 0.0
        while value <= 1e6 and scale < 1e12:
            scale *= 10.0
            value = euclidean_edge([scale, 0.0], [2.0 * scale, 0.0])
        witness = f"value {value:.3g} at input scale {scale:.0e} exceeds bound 1e6"
        return PropertyCheck("boundedness", False, 1, 1, witness)
    violations = 0
    checked = 0
    witness = None
    for scales, A, B in _dim_buckets(rng, trials, dim, max_scale):
        A = A * scales[:, None]
        B = B * scales[:, None]
        # include exact-equal and parallel rows so both ends of the range
        # get probed
        A[::7] = B[::7]
        B[1::7] = 2.0 * A[1::7]
        v = _batch_values(metric_id, A, B, eps)
        bad = (v < lo - 1e-9) | (v > hi + 1e-9)
        checked += v.shape[0]
        violations += int(bad.sum())
        if witness is None and bad.any():
            witness = f"value {float(v[bad][0])!r} outside [{lo}, {hi}]"
    return PropertyCheck("boundedness", violations == 0, checked, violations, witness)


def _check_minimal_agreement(metric_id, rng, trials, dim, max_scale, eps):
    lo, _ = _BOUNDS[metric_id]
    violations = 0
    checked = 0
    witness = None
    for scales, A, B in _dim_buckets(rng, trials, dim, max_scale):
        A = A * scales[:, None]
        B = B * scales[:, None]
        k = A.shape[0]
        third = max(1, k // 3)
        # rows [0, third): exact-equal pairs must attain the minimum
        B[:third] = A[:third]
        # rows [third, 2*third): parallel but unequal (classic near-minimum
        # trap for direction-only metrics)
        B[third : 2 * third] = 2.0 * A[third : 2 * third]
        # remaining rows: share a random prefix of coordinates but always
        # differ in the last one
        for r in range(2 * third, k):
            cut = rng.integers(0, A.shape[1])
            B[r, :cut] = A[r, :cut]
            if B[r, -1] == A[r, -1]:
                B[r, -1] = A[r, -1] + scales[r]
        v = _batch_values(metric_id, A, B, eps)
        equal_rows = np.all(A == B, axis=1)
        bad_equal = equal_rows & (np.abs(v - lo) > 1e-9)
        bad_unequal = ~equal_rows & (v <= lo + 1e-9)
        checked += v.shape[0]
        violations += int(bad_equal.sum()) + int(bad_unequal.sum())
        if witness is None and bad_unequal.any():
            i = int(np.nonzero(bad_unequal)[0][0])
            witness = f"unequal pair attains minimum {lo}: value {float(v[i])!r}"
        if witness is None and bad_equal.any():
            i = int(np.nonzero(bad_equal)[0][0])
            witness = f"equal pair misses minimum {lo}: value {float(v[i])!r}"
    return PropertyCheck("minimal_agreement", violations == 0, checked, violations, witness)


def _check_monotonicity(metric_id, rng, trials, dim, max_scale, band, eps):
    """Central-difference sign of the derivative in one coordinate of x_i
    must match the sign of the gap on that coordinate.

    Pairs are rescaled to a common norm. For halo the normalizing
    denominator is frozen at the unperturbed pair and the difference
    quotient is evaluated in conjugate form (see module docstring); the
    euclidean check uses the same conjugate form; cosine and ahr use plain
    two-sided evaluation.
    """
    violations = 0
    checked = 0
    witness = None
    for scales, A, B in _dim_buckets(rng, trials, dim, max_scale):
        # common norm per pair
        A = A / np.linalg.norm(A, axis=1, keepdims=True) * scales[:, None]
        B = B / np.linalg.norm(B, axis=1, keepdims=True) * scales[:, None]
        k = A.shape[0]
        rows = np.arange(k)
        kk = rng.integers(0, A.shape[1], size=k)
        dk = A[rows, kk] - B[rows, kk]
        sel = np.abs(dk) >= band
        if not sel.any():
            continue
        A = A[sel]
        B = B[sel]
        rows = np.arange(int(sel.sum()))
        kk = kk[sel]
        dk = dk[sel]
        h = 1e-6 * np.maximum(1.0, np.abs(A[rows, kk]))
        if metric_id == "halo":
            delta = A - B
            W = np.abs(delta)
            XA = W * A
            XB = W * B
            den = np.sqrt(np.sum(XA * XA + XB * XB, axis=1) + eps)
            quart = delta**4
            N = np.sum(quart, axis=1)
            rest = N - quart[rows, kk]
            Np = rest + (dk + h) ** 4
            Nm = rest + (dk - h) ** 4
            num_diff = (dk + h) ** 4 - (dk - h) ** 4
            S = np.sqrt(np.maximum(Np, 0.0)) + np.sqrt(np.maximum(Nm, 0.0))
            fd = num_diff / S / (2.0 * h * den)
        elif metric_id == "euclidean":
            delta = A - B
            sq = delta * delta
            rest = np.sum(sq, axis=1) - sq[rows, kk]
            Sp = rest + (dk + h) ** 2
            Sm = rest + (dk - h) ** 2
            num_diff = (dk + h) ** 2 - (dk - h) ** 2
            S = np.sqrt(np.maximum(Sp, 0.0)) + np.sqrt(np.maximum(Sm, 0.0))
            fd = num_diff / S / (2.0 * h)
        else:
            Ap = A.copy()
            Am = A.copy()
            Ap[rows, kk] += h
            Am[rows, kk] -= h
            vp = _batch_values(metric_id, Ap, B, eps)
            vm = _batch_values(metric_id, Am, B, eps)
            fd = (vp - vm) / (2.0 * h)
        bad = np.sign(fd) != np.sign(dk)
        checked += fd.shape[0]
        violations += int(bad.sum())
        if witness is None and bad.any():
            i = int(np.nonzero(bad)[0][0])
            witness = f"gap {float(dk[i])!r} but difference quotient {float(fd[i])!r}"
    return PropertyCheck("monotonicity", violations == 0, checked, violations, witness)


def _check_tolerance(metric_id, rng, trials, dim, max_scale, eps):
    violations = 0
    checked = 0
    witness = None
    for scales, A, B in _dim_buckets(rng, trials, dim, max_scale):
        A = A * scales[:, None]
        B = B * scales[:, None]
        v0 = _batch_values(metric_id, A, B, eps)
        shared = (rng.standard_normal(A.shape[0]) * scales)[:, None]
        v1 = _batch_values(
            metric_id, np.hstack([A, shared]), np.hstack([B, shared]), eps
        )
        drift = np.abs(v1 - v0)
        bad = drift >= 1e-12
        checked += v0.shape[0]
        violations += int(bad.sum())
        if witness is None and bad.any():
            i = int(np.nonzero(bad)[0][0])
            witness = f"value drifted by {float(drift[i])!r} after appending an equal coordinate"
    return PropertyCheck("equal_attribute_tolerance", violations == 0, checked, violations, witness)


def check_properties(metric_id, trials=10_000, dim=64, seed=0, *, max_scale=1e6, band=1e-6, eps=1e-12):
    """Randomized counter-example search for the four metric properties.

    Findings are data, not errors: the report says which properties held
    over ``trials`` sampled pairs per property with dimensions in [2, dim]
    and input scales up to ``max_scale``. Monotonicity skips coordinates
    with gaps below ``band`` (the metric is not differentiable at zero gap).
    """
    if metric_id not in METRIC_IDS:
        raise ValueError(f"unknown metric id {metric_id!r}; choose from {METRIC_IDS}")
    if trials <= 0:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(seed)
    return PropertyReport(
        metric_id,
        _check_boundedness(metric_id, rng, trials, dim, max_scale, eps),
        _check_minimal_agreement(metric_id, rng, trials, dim, max_scale, eps),
        _check_monotonicity(metric_id, rng, trials, dim, max_scale, band, eps),
        _check_tolerance(metric_id, rng, trials, dim, max_scale, eps),
    )
