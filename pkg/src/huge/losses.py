"""Heterophily-guided ranking losses, the asymmetric alignment loss, and
their hand-derived gradients.

Loss structure per batch:

    total = l_rank + l_rank_bar + alpha * l_align

where l_rank = (l_rank_plus + l_rank_minus)/2 on the MLP-branch scores,
l_rank_bar is the identical expression on the GNN-branch scores, and
l_align is a KL-style divergence pulling each node's MLP similarity row
toward its GNN similarity row, with the GNN side treated as a constant
(stop-gradient): l_align trains only the MLP branch.

The backward pass differentiates the forward exactly as implemented. The
dust clips (scores into [-1, 1], slot cosines into [-1, 1]) move values by
at most a few ulps and are treated as pass-through; the similarity floor
clamp at 1e-8 is a real nonlinearity and gets a proper zero-gradient
region.
"""
import logging
from dataclasses import dataclass

import numpy as np

from huge import kernels
from huge.encoder import EPS_LOG
from huge.numerics import sigmoid, softplus_neg

log = logging.getLogger(__name__)

# counted warnings, keyed by condition; tests and long runs can inspect this
WARN_COUNTS = {"minus_absent": 0}


@dataclass
class LossBreakdown:
    l_rank_plus: float
    l_rank_minus: float
    l_rank: float
    l_rank_plus_bar: float
    l_rank_minus_bar: float
    l_rank_bar: float
    l_align: float
    total: float
    alpha: float
    n_batch: int
    minus_present: int
    minus_present_bar: int

    def __post_init__(self):
        for name in (
            "l_rank_plus",
            "l_rank_minus",
            "l_rank",
            "l_rank_plus_bar",
            "l_rank_minus_bar",
            "l_rank_bar",
            "l_align",
            "total",
        ):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite loss component {name}")

    def as_dict(self):
        return {
            "l_rank_plus": self.l_rank_plus,
            "l_rank_minus": self.l_rank_minus,
            "l_rank": self.l_rank,
            "l_rank_plus_bar": self.l_rank_plus_bar,
            "l_rank_minus_bar": self.l_rank_minus_bar,
            "l_rank_bar": self.l_rank_bar,
            "l_align": self.l_align,
            "total": self.total,
            "alpha": self.alpha,
            "n_batch": self.n_batch,
            "minus_present": self.minus_present,
            "minus_present_bar": self.minus_present_bar,
        }


def rank_loss_plus(s, h):
    """Pairwise ranking loss over all ordered batch pairs (diagonal included).

    (1/|B|^2) * sum_ij  1[h_j > h_i]*(s_i - s_j) + log(1 + exp(-(s_i - s_j)))

    Strict inequality: heterophily ties contribute only the log term.
    Invariant under adding a constant to all scores (only gaps enter).
    """
    s = np.ascontiguousarray(s, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    if s.shape != h.shape or s.ndim != 1 or s.size == 0:
        raise ValueError(f"scores and heterophily must be equal-length 1-D, got {s.shape} vs {h.shape}")
    val, _ = kernels.rank_plus_value_grad(s, h)
    return float(val)


def rank_loss_minus(s, s_neg, present=None):
    """Mean over nodes with a non-neighbor score of
    (s_i - s⁻_i) + log(1 + exp(-(s_i - s⁻_i))).

    ``present`` masks nodes whose non-neighbor set was empty; if no node has
    one, returns 0 and counts a warning.
    """
    s = np.asarray(s, dtype=np.float64)
    s_neg = np.asarray(s_neg, dtype=np.float64)
    if present is None:
        present = np.ones(s.shape, dtype=bool)
    present = np.asarray(present, dtype=bool)
    if not (s.shape == s_neg.shape == present.shape):
        raise ValueError("score, non-neighbor score, and mask lengths differ")
    P = int(present.sum())
    if P == 0:
        WARN_COUNTS["minus_absent"] += 1
        log.warning("no batch node has an in-batch non-neighbor; ranking term is 0")
        return 0.0
    g = np.where(present, s - s_neg, 0.0)
    terms = g + softplus_neg(g)
    return float(np.sum(np.where(present, terms, 0.0)) / P)


def align_loss(sim_mlp, sim_gnn, slot_row, n_batch):
    """KL-style alignment over the (node, neighbor) slot table.

    (1/Bnz) * sum_i (1/deg_i) * sum_{j in N(i)} sbar_ij * (log sbar_ij - log s_ij)

    with Bnz the number of batch nodes that have neighbors (isolated nodes
    are skipped). Rows are not renormalized to a simplex, so the value can
    be negative. The GNN table carries a stop-gradient by convention; this
    function only computes the value.
    """
    sim_mlp = np.asarray(sim_mlp, dtype=np.float64)
    sim_gnn = np.asarray(sim_gnn, dtype=np.float64)
    slot_row = np.asarray(slot_row, dtype=np.int64)
    if sim_mlp.shape != sim_gnn.shape or sim_mlp.shape != slot_row.shape:
        raise ValueError("similarity tables and slot rows must align")
    a = np.clip(sim_mlp, EPS_LOG, 1.0)
    b = np.clip(sim_gnn, EPS_LOG, 1.0)
    deg = np.bincount(slot_row, minlength=n_batch)
    Bnz = int((deg > 0).sum())
    if Bnz == 0:
        return 0.0
    t = b * (np.log(b) - np.log(a))
    row = np.bincount(slot_row, weights=t, minlength=n_batch)
    return float(np.sum(row / np.maximum(deg, 1)) / Bnz)


def _batch_heterophily(h, ctx):
    """Node heterophily values for the batch, from a field or a full array."""
    vals = getattr(h, "node_values", h)
    vals = np.asarray(vals, dtype=np.float64)
    return np.ascontiguousarray(vals[ctx.batch])


def _branch_rank(s, s_minus, present, h):
    """Value and score-gradients of (L+ + L-)/2 for one branch.

    Returns (val_plus, val_minus, n_present, dL/ds, dL/ds_minus); the two
    gradients already carry the 1/2 averaging factor.
    """
    val_plus, grad_plus = kernels.rank_plus_value_grad(s, h)
    P = int(present.sum())
    if P > 0:
        g = np.where(present, s - s_minus, 0.0)
        terms = g + softplus_neg(g)
        val_minus = float(np.sum(np.where(present, terms, 0.0)) / P)
        w = np.where(present, sigmoid(g) / P, 0.0)
    else:
        val_minus = 0.0
        w = np.zeros_like(s)
    ds = 0.5 * grad_plus + 0.5 * w
    ds_minus = -0.5 * w
    return float(val_plus), val_minus, P, ds, ds_minus


def _align_value(ctx):
    deg = ctx.deg
    Bnz = int((deg > 0).sum())
    if Bnz == 0:
        return 0.0, 0
    t = ctx.simbar * (np.log(ctx.simbar) - np.log(ctx.sim))
    row = np.bincount(ctx.slot_row, weights=t, minlength=ctx.nb)
    val = float(np.sum(row / np.maximum(deg, 1.0)) / Bnz)
    return val, Bnz


def total_loss(ctx, h, alpha):
    """Assemble the LossBreakdown for one batch (forward values only)."""
    hb = _batch_heterophily(h, ctx)
    vp, vm, P, _, _ = _branch_rank(ctx.s, ctx.s_minus, ctx.s_minus_present, hb)
    if P == 0:
        WARN_COUNTS["minus_absent"] += 1
        log.warning("no batch node has an in-batch non-neighbor; ranking term is 0")
    l_rank = 0.5 * (vp + vm)
    if ctx.use_gnn:
        vpb, vmb, Pb, _, _ = _branch_rank(
            ctx.sbar, ctx.sbar_minus, ctx.sbar_minus_present, hb
        )
        l_rank_bar = 0.5 * (vpb + vmb)
        l_align, _ = _align_value(ctx)
    else:
        vpb = vmb = l_rank_bar = l_align = 0.0
        Pb = 0
    return LossBreakdown(
        l_rank_plus=vp,
        l_rank_minus=vm,
        l_rank=l_rank,
        l_rank_plus_bar=vpb,
        l_rank_minus_bar=vmb,
        l_rank_bar=l_rank_bar,
        l_align=l_align,
        total=l_rank + l_rank_bar + alpha * l_align,
        alpha=alpha,
        n_batch=ctx.nb,
        minus_present=P,
        minus_present_bar=Pb,
    )


def _scatter_branch_scores(ctx, Ehat, ds, ds_minus, present, K, w_extra=None):
    """Accumulate dL/dEhat for one branch from its score gradients.

    Neighbor-score slots: s_p = -(1/deg_p) * sum cos(p, col), so each slot
    gets weight -ds_p/deg_p (plus any caller extra, used for the alignment
    term). Non-neighbor scores are differentiated through the batch-sum
    identity used in the forward: with M_p = rowT_p - selfdot_p - nbrsum_p
    and s⁻_p = -M_p/K_p, write a_p = -ds⁻_p/K_p = dL/dM_p; then
    dEhat[u] += a_u*T + sum_p a_p*Ehat[p] - 2*a_u*Ehat[u] for batch rows,
    and in-batch neighbor slots get a -a_p correction.
    """
    nb = ctx.nb
    dEhat = np.zeros_like(Ehat)
    safe_deg = np.maximum(ctx.deg, 1.0)
    w = ds[ctx.slot_row] * (-1.0 / safe_deg[ctx.slot_row])
    if w_extra is not None:
        w = w + w_extra
    w = np.ascontiguousarray(w)
    kernels.scatter_pair_grads(dEhat, Ehat, ctx.slot_row, ctx.slot_col, w)

    if np.any(present):
        a = np.where(present, -ds_minus / np.maximum(K, 1.0), 0.0)
        Eb = Ehat[:nb]
        T = Eb.sum(axis=0)
        dEhat[:nb] += a[:, None] * T[None, :]
        dEhat[:nb] += (Eb.T @ a)[None, :]
        dEhat[:nb] -= (2.0 * a)[:, None] * Eb
        mask = ctx.slot_col < nb
        if np.any(mask):
            rows = np.ascontiguousarray(ctx.slot_row[mask])
            cols = np.ascontiguousarray(ctx.slot_col[mask])
            wm = np.ascontiguousarray(-a[rows])
            kernels.scatter_pair_grads(dEhat, Ehat, rows, cols, wm)
    return dEhat


def _normalize_backward(dEhat, Ehat, guard, eps):
    """Chain dL/dEhat back through row normalization E -> E/max(|E|, eps).

    Active rows get the tangential projection (radial component removed);
    rows pinned at the eps guard have a constant denominator.
    """
    radial = np.einsum("ij,ij->i", dEhat, Ehat)
    active = guard > eps
    return (dEhat - np.where(active, radial, 0.0)[:, None] * Ehat) / guard[:, None]


def backward(ctx, h, alpha, params):
    """Analytic gradients of total_loss w.r.t. every encoder parameter.

    Honors the stop-gradient: the alignment term contributes only through
    the MLP similarity table, so gradients w.r.t. Wg/bg are independent of
    alpha (asserted in tests).
    """
    hb = _batch_heterophily(h, ctx)
    _, _, _, ds, ds_minus = _branch_rank(ctx.s, ctx.s_minus, ctx.s_minus_present, hb)

    w_align = None
    if ctx.use_gnn and alpha != 0.0:
        Bnz = int((ctx.deg > 0).sum())
        if Bnz > 0:
            interior = (ctx.cos_slots + 1.0) / 2.0 > EPS_LOG
            safe_deg = np.maximum(ctx.deg, 1.0)
            coef = -alpha / (2.0 * Bnz * safe_deg[ctx.slot_row])
            w_align = np.where(interior, coef * ctx.simbar / ctx.sim, 0.0)

    dEhat = _scatter_branch_scores(
        ctx, ctx.Ehat, ds, ds_minus, ctx.s_minus_present, ctx.K, w_extra=w_align
    )
    dE = _normalize_backward(dEhat, ctx.Ehat, ctx.nrm, ctx.eps)

    if ctx.use_gnn:
        _, _, _, dsb, dsb_minus = _branch_rank(
            ctx.sbar, ctx.sbar_minus, ctx.sbar_minus_present, hb
        )
        dEbarhat = _scatter_branch_scores(
            ctx, ctx.Ebarhat, dsb, dsb_minus, ctx.sbar_minus_present, ctx.K
        )
        dEbar = _normalize_backward(dEbarhat, ctx.Ebarhat, ctx.nrmbar, ctx.eps)
        dWg = ctx.Ag.T @ dEbar
        dbg = dEbar.sum(axis=0)
        dAg = dEbar @ params.Wg.T
        dS = np.ascontiguousarray(dAg / ctx.cnt[:, None])
        # aggregation adjoint: the kept local edge set is symmetric, so the
        # transpose of self-plus-neighbor-sum is itself
        dE = dE + kernels.self_plus_neighbor_sum(dS, ctx.loc_offsets, ctx.loc_cols)
    else:
        d_e = params.d_e
        dWg = np.zeros((d_e, d_e))
        dbg = np.zeros(d_e)

    dW2 = ctx.H.T @ dE
    db2 = dE.sum(axis=0)
    dH = dE @ params.W2.T
    dZ1 = dH * (ctx.Z1 > 0.0)
    dW1 = ctx.Xc.T @ dZ1
    db1 = dZ1.sum(axis=0)
    return {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2, "Wg": dWg, "bg": dbg}


def loss_and_grads(ctx, h, alpha, params):
    """Forward breakdown and parameter gradients for one batch."""
    return total_loss(ctx, h, alpha), backward(ctx, h, alpha, params)


def loss_value_frozen_targets(ctx, h, alpha, frozen_simbar):
    """Total loss with the alignment targets replaced by a fixed table.

    This is the function the finite-difference oracle probes: freezing the
    GNN similarity table emulates the stop-gradient, so central differences
    of this value match the analytic backward. Rank terms (both branches)
    still use the live scores from ctx.
    """
    hb = _batch_heterophily(h, ctx)
    vp, vm, _, _, _ = _branch_rank(ctx.s, ctx.s_minus, ctx.s_minus_present, hb)
    total = 0.5 * (vp + vm)
    if ctx.use_gnn:
        vpb, vmb, _, _, _ = _branch_rank(
            ctx.sbar, ctx.sbar_minus, ctx.sbar_minus_present, hb
        )
        total += 0.5 * (vpb + vmb)
        deg = ctx.deg
        Bnz = int((deg > 0).sum())
        if Bnz > 0 and alpha != 0.0:
            t = frozen_simbar * (np.log(frozen_simbar) - np.log(ctx.sim))
            row = np.bincount(ctx.slot_row, weights=t, minlength=ctx.nb)
            total += alpha * float(np.sum(row / np.maximum(deg, 1.0)) / Bnz)
    return total
