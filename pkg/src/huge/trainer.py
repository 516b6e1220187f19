"""Deterministic mini-batch training loop and inference entry point.

One seeded RNG stream drives everything: parameter init first, then one
node permutation per epoch. The heterophily field is computed once, before
the epoch loop; batches score against full-graph neighborhoods via the
closure subgraph, so batching changes gradients only through pair sampling,
never through truncated neighborhoods.
"""
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, fields

import numpy as np

from huge import heterophily, losses
from huge.encoder import EncoderParams, build_batch_context, final_fraud_scores, init_params
from huge.heterophily import METRIC_IDS
from huge.numerics import AdamState, NumericalError, adam_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 8192
    alpha: float = 0.5
    lr: float = 5e-4
    seed: int = 0
    eps_halo: float = 1e-12
    d_e: int = 128
    metric_id: str = "halo"
    use_gnn: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.d_e < 1:
            raise ValueError("d_e must be >= 1")
        if self.eps_halo <= 0:
            raise ValueError("eps_halo must be > 0")
        if self.metric_id not in METRIC_IDS:
            raise ValueError(f"unknown metric_id {self.metric_id!r}, expected one of {METRIC_IDS}")

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    def config_hash(self):
        """sha256 of the canonical-JSON config; stored in checkpoints and
        manifests so artifacts can be matched to the run that made them."""
        body = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(body.encode("utf-8")).hexdigest()


@dataclass
class EpochStats:
    epoch: int  # 1-based
    mean_losses: dict  # field -> mean over the epoch's batches
    n_batches: int
    seconds: float

    @property
    def mean_total(self):
        return self.mean_losses["total"]

    def as_dict(self):
        return {
            "epoch": self.epoch,
            "mean_losses": self.mean_losses,
            "n_batches": self.n_batches,
            "seconds": self.seconds,
        }


@dataclass
class TrainLog:
    config: TrainConfig
    epochs: list = field(default_factory=list)  # EpochStats, one per epoch
    checkpoint_path: str | None = None

    def as_dict(self):
        return {
            "config": self.config.as_dict(),
            "config_hash": self.config.config_hash(),
            "checkpoint_path": self.checkpoint_path,
            "epochs": [e.as_dict() for e in self.epochs],
        }

    def write_jsonl(self, path):
        """One JSON object per epoch, header line first."""
        with open(path, "w", encoding="utf-8") as fh:
            head = {
                "config": self.config.as_dict(),
                "config_hash": self.config.config_hash(),
                "checkpoint_path": self.checkpoint_path,
            }
            fh.write(json.dumps(head, sort_keys=True) + "\n")
            for e in self.epochs:
                fh.write(json.dumps(e.as_dict(), sort_keys=True) + "\n")


_MEAN_FIELDS = (
    "l_rank_plus",
    "l_rank_minus",
    "l_rank",
    "l_rank_plus_bar",
    "l_rank_minus_bar",
    "l_rank_bar",
    "l_align",
    "total",
)


def _epoch_means(breakdowns):
    out = {k: float(np.mean([getattr(b, k) for b in breakdowns])) for k in _MEAN_FIELDS}
    out["minus_present"] = int(sum(b.minus_present for b in breakdowns))
    return out


def train(g, cfg):
    """Run the full training loop; returns (params, log).

    Deterministic: identical (g, cfg) give bitwise-identical parameters.
    Non-finite losses or gradients abort with a NumericalError carrying the
    offending epoch/batch.
    """
    if g.n == 0:
        raise ValueError("cannot train on an empty graph")
    h = heterophily.node_heterophily(g, cfg.metric_id, cfg.eps_halo)
    rng = np.random.default_rng(cfg.seed)
    params = init_params(g.d, cfg.d_e, rng)
    pdict = params.to_dict()
    state = AdamState.zeros_like(pdict)
    tlog = TrainLog(config=cfg)

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        perm = rng.permutation(g.n)
        breakdowns = []
        for lo in range(0, g.n, cfg.batch_size):
            batch = perm[lo : lo + cfg.batch_size]
            ctx = build_batch_context(params, g, batch, use_gnn=cfg.use_gnn)
            try:
                bd, grads = losses.loss_and_grads(ctx, h, cfg.alpha, params)
            except ValueError as exc:
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch starting at {lo}: {exc}; "
                    f"batch nodes {batch[:8].tolist()}..."
                ) from exc
            for k, arr in grads.items():
                if not np.isfinite(arr).all():
                    raise NumericalError(
                        f"non-finite gradient for {k} at epoch {epoch}, batch starting at {lo}"
                    )
            pdict, state = adam_step(pdict, grads, state, cfg.lr)
            params = EncoderParams.from_dict(pdict)
            breakdowns.append(bd)
        tlog.epochs.append(
            EpochStats(
                epoch=epoch,
                mean_losses=_epoch_means(breakdowns),
                n_batches=len(breakdowns),
                seconds=time.perf_counter() - t0,
            )
        )
    return params, tlog


def infer(params, g):
    """Score every node with the trained MLP branch (higher = more suspicious)."""
    if params.d != g.d:
        raise ValueError(f"params expect d={params.d} attributes, graph has d={g.d}")
    return final_fraud_scores(params, g)
