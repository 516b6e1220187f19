"""Dense numeric substrate: stable scalar kernels, Adam, and a
finite-difference gradient oracle.

Matrices are C-contiguous float64 2-D numpy arrays (rows x cols, row-major
data); numpy provides the storage and BLAS, everything else here is spelled
out. Gradients elsewhere in the package are hand-derived, so
``finite_diff_gradient`` is the safety net they are tested against.
"""
from dataclasses import dataclass

import numpy as np


class NumericalError(RuntimeError):
    """Raised when a computation produces non-finite values."""


def as_matrix(a):
    """Coerce to a C-contiguous float64 2-D array, validating shape."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def matmul(a, b):
    """Matrix product with shape validation."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch for matmul: {a.shape} x {b.shape}")
    return a @ b


def cosine_similarity(u, v, eps=1e-12):
    """u.v / (max(|u|,eps) * max(|v|,eps)), clamped to [-1, 1].

    eps guards zero vectors: cos(0, v) = 0.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"vector length mismatch: {u.shape} vs {v.shape}")
    nu = max(float(np.linalg.norm(u)), eps)
    nv = max(float(np.linalg.norm(v)), eps)
    c = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, c))


def softplus_neg(x):
    """log(1 + exp(-x)) evaluated stably on both tails.

    Scalar in, scalar out; arrays elementwise. Monotone decreasing and
    strictly positive for finite x.
    """
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = np.log1p(np.exp(-x[pos]))
    out[~pos] = -x[~pos] + np.log1p(np.exp(x[~pos]))
    # exp(-x) underflows to 0 past ~745; keep strict positivity by flooring
    # at the smallest subnormal (true value is below it anyway)
    np.maximum(out, 5e-324, out=out)
    return float(out[0]) if scalar else out


def sigmoid(x):
    """Logistic function, overflow-safe on both tails."""
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out[0]) if scalar else out


@dataclass
class AdamState:
    """First/second-moment accumulators keyed like the parameter dict."""

    m: dict
    v: dict
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            step=0,
        )


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update with bias correction; returns (new_params, new_state).

    Functional: inputs are not mutated, so identical calls from identical
    state give identical results.
    """
    t = state.step + 1
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    new_p = {}
    new_m = {}
    new_v = {}
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {k}: {g.shape} vs {p.shape}")
        m = beta1 * state.m[k] + (1.0 - beta1) * g
        v = beta2 * state.v[k] + (1.0 - beta2) * (g * g)
        mhat = m / bc1
        vhat = v / bc2
        new_p[k] = p - lr * mhat / (np.sqrt(vhat) + eps)
        new_m[k] = m
        new_v[k] = v
    return new_p, AdamState(new_m, new_v, t)


def finite_diff_gradient(loss_fn, params, h=1e-5):
    """Central-difference gradient of ``loss_fn`` at ``params``.

    params: dict name -> float64 array. loss_fn takes the dict and returns a
    scalar; it must be deterministic. Perturbs one coordinate at a time, so
    cost is two evaluations per parameter entry.
    """
    work = {k: np.array(p, dtype=np.float64) for k, p in params.items()}
    grads = {}
    for k, p in work.items():
        flat = p.ravel()
        g = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = loss_fn(work)
            flat[i] = orig - h
            fm = loss_fn(work)
            flat[i] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise NumericalError(
                    f"non-finite loss while probing {k}[{i}]: f+={fp}, f-={fm}"
                )
            g[i] = (fp - fm) / (2.0 * h)
        grads[k] = g.reshape(p.shape)
    return grads
