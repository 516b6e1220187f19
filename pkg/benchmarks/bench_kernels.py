"""Compare the numba kernels against the pure-numpy fallback.

Runs every hot kernel on a representative synthetic workload with both
backends and prints a speedup table. The numba timings exclude JIT
compilation (one warmup call per kernel).

    python3 benchmarks/bench_kernels.py [--quick]

Selecting the fallback at runtime works the same way everywhere else:
set HUGE_DISABLE_NUMBA=1 before importing huge.
"""
import argparse
import time

import numpy as np

from huge import datagen
from huge.kernels import _numpy

try:
    from huge.kernels import _numba
except ImportError:
    _numba = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workload(n, d, d_e, batch, seed=0):
    g = datagen.generate(datagen.SynthSpec(n=n, d=d, avg_degree=10.0, seed=seed))
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    dst = g.cols
    rng = np.random.default_rng(seed)
    E = rng.normal(size=(g.n, d_e))
    Ehat = E / np.linalg.norm(E, axis=1, keepdims=True)
    return {
        "graph": g,
        "src": src,
        "dst": dst,
        "edge_vals": rng.random(dst.size),
        "E": E,
        "Ehat": Ehat,
        "w": rng.normal(size=dst.size),
        "s": rng.random(batch),
        "h": np.round(rng.random(batch), 2),
    }


def _cases(wl):
    g, src, dst = wl["graph"], wl["src"], wl["dst"]
    X = g.attrs
    return [
        ("halo_edge_values", lambda k: k.halo_edge_values(X, src, dst, 1e-12)),
        ("euclidean_edge_values", lambda k: k.euclidean_edge_values(X, src, dst)),
        ("cosine_edge_values", lambda k: k.cosine_edge_values(X, src, dst, 1e-12)),
        ("ahr_edge_values", lambda k: k.ahr_edge_values(X, src, dst)),
        ("segment_mean", lambda k: k.segment_mean(wl["edge_vals"], g.offsets)),
        ("self_plus_neighbor_sum",
         lambda k: k.self_plus_neighbor_sum(wl["E"], g.offsets, g.cols)),
        ("slot_cos", lambda k: k.slot_cos(wl["Ehat"], src, dst)),
        ("scatter_pair_grads",
         lambda k: k.scatter_pair_grads(np.zeros_like(wl["Ehat"]), wl["Ehat"],
                                        src, dst, wl["w"])),
        ("rank_plus_value_grad",
         lambda k: k.rank_plus_value_grad(wl["s"], wl["h"])),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller workload, fewer repeats")
    ap.add_argument("--n", type=int, default=None, help="override node count")
    ap.add_argument("--batch", type=int, default=None, help="override ranking batch size")
    args = ap.parse_args(argv)

    n = args.n or (5_000 if args.quick else 50_000)
    batch = args.batch or (1_024 if args.quick else 4_096)
    repeats = 3 if args.quick else 7
    wl = _workload(n=n, d=32, d_e=64, batch=batch)
    g = wl["graph"]
    print(f"workload: n={g.n} edges={g.num_edges} d={g.d} d_e=64 batch={batch}")

    if _numba is None:
        print("numba is not installed; nothing to compare")
        return 1

    rows = []
    for name, run in _cases(wl):
        run(_numba)  # JIT compile outside the timed region
        t_np = _time(lambda: run(_numpy), repeats)
        t_nb = _time(lambda: run(_numba), repeats)
        rows.append((name, t_np * 1e3, t_nb * 1e3, t_np / t_nb))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy ms':>9}  {'numba ms':>9}  {'speedup':>7}")
    for name, ms_np, ms_nb, speedup in rows:
        print(f"{name:<{width}}  {ms_np:9.3f}  {ms_nb:9.3f}  {speedup:6.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
