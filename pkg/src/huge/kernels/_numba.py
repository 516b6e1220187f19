"""Numba twins of the kernels in ``_numpy``.

Same signatures, same semantics; plain sequential loops so results do not
depend on the thread count. Compiled lazily with on-disk caching.
"""
import numba
import numpy as np

_jit = numba.njit(cache=True, fastmath=False)


@_jit
def _softplus_neg(x):
    # log(1 + exp(-x)) without overflow on either tail
    if x >= 0.0:
        return np.log1p(np.exp(-x))
    return -x + np.log1p(np.exp(x))


@_jit
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@_jit
def halo_edge_values(X, src, dst, eps):
    m = src.shape[0]
    d = X.shape[1]
    out = np.empty(m, dtype=np.float64)
    for t in range(m):
        i = src[t]
        j = dst[t]
        num = 0.0
        den = 0.0
        for k in range(d):
            a = X[i, k]
            b = X[j, k]
            w = abs(a - b)
            xa = w * a
            xb = w * b
            diff = xa - xb
            num += diff * diff
            den += xa * xa + xb * xb
        out[t] = np.sqrt(num / (den + eps))
    return out


@_jit
def euclidean_edge_values(X, src, dst):
    m = src.shape[0]
    d = X.shape[1]
    out = np.empty(m, dtype=np.float64)
    for t in range(m):
        i = src[t]
        j = dst[t]
        acc = 0.0
        for k in range(d):
            diff = X[i, k] - X[j, k]
            acc += diff * diff
        out[t] = np.sqrt(acc)
    return out


@_jit
def cosine_edge_values(X, src, dst, eps):
    m = src.shape[0]
    d = X.shape[1]
    out = np.empty(m, dtype=np.float64)
    for t in range(m):
        i = src[t]
        j = dst[t]
        dot = 0.0
        na = 0.0
        nb = 0.0
        for k in range(d):
            a = X[i, k]
            b = X[j, k]
            dot += a * b
            na += a * a
            nb += b * b
        na = max(np.sqrt(na), eps)
        nb = max(np.sqrt(nb), eps)
        c = dot / (na * nb)
        if c > 1.0:
            c = 1.0
        elif c < -1.0:
            c = -1.0
        out[t] = -c
    return out


@_jit
def ahr_edge_values(X, src, dst):
    m = src.shape[0]
    d = X.shape[1]
    out = np.empty(m, dtype=np.float64)
    for t in range(m):
        i = src[t]
        j = dst[t]
        cnt = 0
        for k in range(d):
            if X[i, k] != X[j, k]:
                cnt += 1
        out[t] = cnt / d
    return out


@_jit
def segment_mean(values, offsets):
    n = offsets.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        lo = offsets[i]
        hi = offsets[i + 1]
        if hi > lo:
            acc = 0.0
            for t in range(lo, hi):
                acc += values[t]
            out[i] = acc / (hi - lo)
    return out


@_jit
def self_plus_neighbor_sum(E, offsets, cols):
    n = offsets.shape[0] - 1
    d = E.shape[1]
    out = E.copy()
    for i in range(n):
        for t in range(offsets[i], offsets[i + 1]):
            j = cols[t]
            for k in range(d):
                out[i, k] += E[j, k]
    return out


@_jit
def slot_cos(Ehat, src, dst):
    m = src.shape[0]
    d = Ehat.shape[1]
    out = np.empty(m, dtype=np.float64)
    for t in range(m):
        i = src[t]
        j = dst[t]
        acc = 0.0
        for k in range(d):
            acc += Ehat[i, k] * Ehat[j, k]
        out[t] = acc
    return out


@_jit
def scatter_pair_grads(dEhat, Ehat, src, dst, w):
    m = src.shape[0]
    d = Ehat.shape[1]
    for t in range(m):
        i = src[t]
        j = dst[t]
        wt = w[t]
        for k in range(d):
            dEhat[i, k] += wt * Ehat[j, k]
            dEhat[j, k] += wt * Ehat[i, k]


@_jit
def rank_plus_value_grad(s, h):
    n = s.shape[0]
    val = 0.0
    grad = np.empty(n, dtype=np.float64)
    for i in range(n):
        for j in range(n):
            x = s[i] - s[j]
            if h[j] > h[i]:
                val += x
            val += _softplus_neg(x)
    for p in range(n):
        acc = 0.0
        for r in range(n):
            if h[r] > h[p]:
                acc += 1.0
            elif h[r] < h[p]:
                acc -= 1.0
            acc += 2.0 * _sigmoid(s[p] - s[r]) - 1.0
        grad[p] = acc
    inv = 1.0 / (n * n)
    return val * inv, grad * inv
