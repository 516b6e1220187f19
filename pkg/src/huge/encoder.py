"""Joint MLP-GNN encoder: embeddings, local inconsistency scores,
non-neighbor scores, rescaled similarity tables, and checkpoint IO.

The MLP branch embeds raw attributes (2 layers, linear output); the GNN
branch mean-aggregates MLP embeddings over closed neighborhoods and applies
one linear projection. A node's local inconsistency is the negated mean
cosine similarity to its neighbors' embeddings, computed over full-graph
neighborhoods even during batched training; it doubles as the fraud score.
No output nonlinearities anywhere: cosine scoring needs the full embedding
space, and ReLU-positive embeddings would bound cosine below by 0.
"""
import json
import os
from dataclasses import dataclass

import numpy as np

from huge import kernels
from huge.graph import neighbor_closure_subgraph
from huge.numerics import cosine_similarity

# floor applied to rescaled similarities before any logarithm
EPS_LOG = 1e-8


@dataclass
class EncoderParams:
    W1: np.ndarray  # d x d_e
    b1: np.ndarray  # d_e
    W2: np.ndarray  # d_e x d_e
    b2: np.ndarray  # d_e
    Wg: np.ndarray  # d_e x d_e
    bg: np.ndarray  # d_e

    def __post_init__(self):
        for name, arr in self.to_dict().items():
            arr = np.ascontiguousarray(arr, dtype=np.float64)
            setattr(self, name, arr)
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite values in parameter {name}")
        d_e = self.W1.shape[1]
        expect = {
            "b1": (d_e,),
            "W2": (d_e, d_e),
            "b2": (d_e,),
            "Wg": (d_e, d_e),
            "bg": (d_e,),
        }
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ValueError(
                    f"parameter {name} has shape {getattr(self, name).shape}, expected {shape}"
                )

    @property
    def d(self):
        return self.W1.shape[0]

    @property
    def d_e(self):
        return self.W1.shape[1]

    def to_dict(self):
        return {
            "W1": self.W1,
            "b1": self.b1,
            "W2": self.W2,
            "b2": self.b2,
            "Wg": self.Wg,
            "bg": self.bg,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["W1"], d["b1"], d["W2"], d["b2"], d["Wg"], d["bg"])


def init_params(d, d_e, seed):
    """Uniform Kaiming-style fan-in initialization.

    Weights are U(-sqrt(6/fan_in), +sqrt(6/fan_in)); biases are
    U(-1/sqrt(fan_in), +1/sqrt(fan_in)). Nonzero biases matter here: with
    zero biases, a node whose hidden ReLU row dies produces an exactly-zero
    embedding, which sits on the non-differentiable point of the normalized
    cosine scores.

    ``seed`` may be an int or an already-seeded Generator; the trainer
    passes its own stream so that initial weights depend only on the seed,
    never on the heterophily metric or other config.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def kaiming(fan_in, fan_out):
        lim = np.sqrt(6.0 / fan_in)
        return rng.uniform(-lim, lim, size=(fan_in, fan_out))

    def bias(fan_in, size):
        lim = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-lim, lim, size=size)

    return EncoderParams(
        W1=kaiming(d, d_e),
        b1=bias(d, d_e),
        W2=kaiming(d_e, d_e),
        b2=bias(d_e, d_e),
        Wg=kaiming(d_e, d_e),
        bg=bias(d_e, d_e),
    )


def mlp_forward(params, X_rows):
    """E = ReLU(X W1 + b1) W2 + b2 (linear output layer)."""
    X_rows = np.ascontiguousarray(X_rows, dtype=np.float64)
    if X_rows.shape[1] != params.d:
        raise ValueError(f"attribute width {X_rows.shape[1]} != parameter d {params.d}")
    Z1 = X_rows @ params.W1 + params.b1
    H = np.maximum(Z1, 0.0)
    return H @ params.W2 + params.b2


def gnn_forward(params, E_all, local_csr):
    """Mean aggregation with self-inclusion, then linear projection."""
    offsets, cols = local_csr
    if E_all.shape[0] != offsets.shape[0] - 1:
        raise ValueError("embedding rows must cover all subgraph nodes")
    S = kernels.self_plus_neighbor_sum(E_all, offsets, cols)
    cnt = 1.0 + np.diff(offsets).astype(np.float64)
    Ag = S / cnt[:, None]
    return Ag @ params.Wg + params.bg


def local_inconsistency(E, center, neighbor_ids, eps=1e-12):
    """Negated mean cosine similarity to the neighbors; 0 if isolated."""
    neighbor_ids = np.asarray(neighbor_ids, dtype=np.int64).reshape(-1)
    if neighbor_ids.size == 0:
        return 0.0
    acc = 0.0
    for j in neighbor_ids:
        acc += cosine_similarity(E[center], E[j], eps)
    return -acc / neighbor_ids.size


def non_neighbor_score(E_batch, i, batch_ids, neighbors_of_i, eps=1e-12):
    """Negated mean cosine to batch members that are neither i nor its
    neighbors; None when that complement is empty (node skipped in the
    non-neighbor ranking loss)."""
    batch_ids = np.asarray(batch_ids, dtype=np.int64)
    nbr = set(int(x) for x in np.asarray(neighbors_of_i).reshape(-1))
    me = int(batch_ids[i])
    others = [p for p, g in enumerate(batch_ids) if g != me and g not in nbr]
    if not others:
        return None
    acc = 0.0
    for p in others:
        acc += cosine_similarity(E_batch[i], E_batch[p], eps)
    return -acc / len(others)


def rescaled_similarity(u, v, eps=1e-12):
    """Cosine similarity mapped to [0, 1], floored at 1e-8 (log-safe)."""
    x = (cosine_similarity(u, v, eps) + 1.0) / 2.0
    return min(1.0, max(EPS_LOG, x))


def _normalize_rows(E, eps):
    nrm = np.sqrt(np.einsum("ij,ij->i", E, E))
    guard = np.maximum(nrm, eps)
    return E / guard[:, None], guard


def final_fraud_scores(params, graph, eps=1e-12):
    """Per-node inconsistency scores over the full graph; higher = more
    suspicious. Isolated nodes score 0."""
    E = mlp_forward(params, graph.attrs)
    Ehat, _ = _normalize_rows(E, eps)
    deg = graph.degrees
    src = np.repeat(np.arange(graph.n, dtype=np.int64), deg)
    cos = np.clip(kernels.slot_cos(Ehat, src, graph.cols), -1.0, 1.0)
    sums = np.bincount(src, weights=cos, minlength=graph.n)
    return np.where(deg > 0, -sums / np.maximum(deg, 1), 0.0)


@dataclass
class BatchContext:
    """Forward-pass artifacts for one training batch.

    Batch nodes sit at local positions 0..nb-1 of the closure; slot arrays
    cover exactly the batch rows of the local CSR (their full-graph
    neighborhoods). Scores are clipped into [-1, 1] and similarity tables
    into [1e-8, 1]; the clips only shave float dust, so gradients treat
    them as pass-through away from the boundaries.
    """

    batch: np.ndarray
    closure: np.ndarray
    nb: int
    loc_offsets: np.ndarray
    loc_cols: np.ndarray
    deg: np.ndarray  # float64, per batch node, = full-graph degree
    slot_row: np.ndarray  # local batch position per slot
    slot_col: np.ndarray  # local closure position per slot
    Xc: np.ndarray
    Z1: np.ndarray
    H: np.ndarray
    E: np.ndarray
    Ehat: np.ndarray
    nrm: np.ndarray
    s: np.ndarray
    cos_slots: np.ndarray
    sim: np.ndarray
    s_minus: np.ndarray
    s_minus_present: np.ndarray
    K: np.ndarray  # non-neighbor counts per batch node
    eps: float
    use_gnn: bool
    Ag: np.ndarray | None = None
    cnt: np.ndarray | None = None
    Ebar: np.ndarray | None = None
    Ebarhat: np.ndarray | None = None
    nrmbar: np.ndarray | None = None
    sbar: np.ndarray | None = None
    cosbar_slots: np.ndarray | None = None
    simbar: np.ndarray | None = None
    sbar_minus: np.ndarray | None = None
    sbar_minus_present: np.ndarray | None = None


def _branch_scores(Ehat, nb, deg, slot_row, slot_col):
    """Eq-style neighbor and non-neighbor scores for one branch.

    The non-neighbor mean over the batch is computed via the batch-sum
    vector T: sum over non-neighbors = (row . T) - (row . row) - sum over
    in-batch neighbors, avoiding the |B|^2 cosine matrix.
    """
    cos = np.clip(kernels.slot_cos(Ehat, slot_row, slot_col), -1.0, 1.0)
    sums = np.bincount(slot_row, weights=cos, minlength=nb)
    s = np.where(deg > 0, -sums / np.maximum(deg, 1.0), 0.0)
    s = np.clip(s, -1.0, 1.0)

    in_batch = slot_col < nb
    nbr_sum = np.bincount(slot_row[in_batch], weights=cos[in_batch], minlength=nb)
    nbr_cnt = np.bincount(slot_row[in_batch], minlength=nb)
    Eb = Ehat[:nb]
    T = Eb.sum(axis=0)
    dotT = Eb @ T
    selfdot = np.einsum("ij,ij->i", Eb, Eb)
    K = (nb - 1) - nbr_cnt
    present = K > 0
    s_minus = np.where(present, -(dotT - selfdot - nbr_sum) / np.maximum(K, 1), 0.0)
    s_minus = np.clip(s_minus, -1.0, 1.0)
    sim = np.minimum(1.0, np.maximum(EPS_LOG, (cos + 1.0) / 2.0))
    return cos, s, sim, s_minus, present, K.astype(np.float64)


def build_batch_context(params, graph, batch, eps=1e-12, use_gnn=True):
    """Run both branches forward on the neighborhood closure of ``batch``."""
    batch = np.asarray(batch, dtype=np.int64).reshape(-1)
    closure, lof, lcl = neighbor_closure_subgraph(graph, batch)
    nb = batch.size
    Xc = graph.attrs[closure]
    Z1 = Xc @ params.W1 + params.b1
    H = np.maximum(Z1, 0.0)
    E = H @ params.W2 + params.b2
    Ehat, nrm = _normalize_rows(E, eps)
    counts = np.diff(lof)
    deg = counts[:nb].astype(np.float64)
    slot_row = np.repeat(np.arange(nb, dtype=np.int64), counts[:nb])
    slot_col = lcl[: lof[nb]]
    cos, s, sim, s_minus, present, K = _branch_scores(Ehat, nb, deg, slot_row, slot_col)
    ctx = BatchContext(
        batch=batch,
        closure=closure,
        nb=nb,
        loc_offsets=lof,
        loc_cols=lcl,
        deg=deg,
        slot_row=slot_row,
        slot_col=slot_col,
        Xc=Xc,
        Z1=Z1,
        H=H,
        E=E,
        Ehat=Ehat,
        nrm=nrm,
        s=s,
        cos_slots=cos,
        sim=sim,
        s_minus=s_minus,
        s_minus_present=present,
        K=K,
        eps=eps,
        use_gnn=use_gnn,
    )
    if use_gnn:
        S = kernels.self_plus_neighbor_sum(E, lof, lcl)
        cnt = 1.0 + counts.astype(np.float64)
        Ag = S / cnt[:, None]
        Ebar = Ag @ params.Wg + params.bg
        Ebarhat, nrmbar = _normalize_rows(Ebar, eps)
        cosb, sbar, simbar, sbar_minus, presentb, _ = _branch_scores(
            Ebarhat, nb, deg, slot_row, slot_col
        )
        ctx.Ag = Ag
        ctx.cnt = cnt
        ctx.Ebar = Ebar
        ctx.Ebarhat = Ebarhat
        ctx.nrmbar = nrmbar
        ctx.sbar = sbar
        ctx.cosbar_slots = cosb
        ctx.simbar = simbar
        ctx.sbar_minus = sbar_minus
        ctx.sbar_minus_present = presentb
    return ctx


def save_checkpoint(path, params, meta=None):
    """Canonical-JSON checkpoint: shapes plus flat weight lists, sorted keys,
    no whitespace; floats round-trip via repr, so identical params give
    byte-identical files."""
    doc = {
        "format": "huge-checkpoint-v1",
        "meta": dict(meta or {}),
        "arrays": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in params.to_dict().items()
        },
    }
    body = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(body)
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "huge-checkpoint-v1":
        raise ValueError(f"{path}: not a recognized checkpoint file")
    arrays = {
        name: np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
        for name, spec in doc["arrays"].items()
    }
    return EncoderParams.from_dict(arrays), doc.get("meta", {})
