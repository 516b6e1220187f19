"""Hot-path kernels with two interchangeable backends.

The numba backend is the default; set ``HUGE_DISABLE_NUMBA=1`` (or ``true``,
``yes``) before import to force the pure-numpy path. When numba is missing
the numpy path is used silently. ``BACKEND`` names the active choice and is
recorded in run manifests. ``benchmarks/bench_kernels.py`` compares the two.
"""
import os

_FLAG = os.environ.get("HUGE_DISABLE_NUMBA", "").strip().lower()

if _FLAG in ("1", "true", "yes"):
    from huge.kernels import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from huge.kernels import _numba as _impl

        BACKEND = "numba"
    except ImportError:
        from huge.kernels import _numpy as _impl

        BACKEND = "numpy"

halo_edge_values = _impl.halo_edge_values
euclidean_edge_values = _impl.euclidean_edge_values
cosine_edge_values = _impl.cosine_edge_values
ahr_edge_values = _impl.ahr_edge_values
segment_mean = _impl.segment_mean
self_plus_neighbor_sum = _impl.self_plus_neighbor_sum
slot_cos = _impl.slot_cos
scatter_pair_grads = _impl.scatter_pair_grads
rank_plus_value_grad = _impl.rank_plus_value_grad

__all__ = [
    "BACKEND",
    "halo_edge_values",
    "euclidean_edge_values",
    "cosine_edge_values",
    "ahr_edge_values",
    "segment_mean",
    "self_plus_neighbor_sum",
    "slot_cos",
    "scatter_pair_grads",
    "rank_plus_value_grad",
]
