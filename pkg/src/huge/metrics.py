"""Ranking metrics (AUROC, AUPRC), score aggregation over seeds, and the
ablation harness.

Both metrics handle tied scores as blocks, so results do not depend on sort
stability. AUROC uses the rank-sum formulation; AUPRC is non-interpolated
average precision with a running (order-pinned) sum, which makes both agree
exactly with their brute-force oracles on graphs of the sizes we test.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from huge import datagen, heterophily, trainer
from huge.trainer import TrainConfig


def _validate_scores_labels(scores, labels):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if s.shape != y.shape:
        raise ValueError(f"scores and labels lengths differ: {s.size} vs {y.size}")
    if s.size == 0:
        raise ValueError("empty score array")
    if not np.isfinite(s).all():
        raise ValueError("scores contain NaN/Inf")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    n1 = int(y.sum())
    if n1 == 0 or n1 == y.size:
        raise ValueError("labels must contain both classes")
    return s, y, n1, y.size - n1


def auroc(scores, labels):
    """Rank-sum AUROC with average ranks for ties.

    (R1 - n1(n1+1)/2) / (n1*n0) where R1 is the 1-based rank sum of the
    positives. Ranks are multiples of 1/2, so for n up to ~10^6 every
    partial sum is exact in float64 and the result matches the pairwise
    win-counting oracle bit for bit.
    """
    s, y, n1, n0 = _validate_scores_labels(scores, labels)
    order = np.argsort(s, kind="mergesort")
    ss = s[order]
    edges = np.flatnonzero(np.r_[True, ss[1:] != ss[:-1], True])
    starts, ends = edges[:-1], edges[1:]
    block_rank = (starts + ends - 1) / 2.0 + 1.0  # mean of 1-based positions
    ranks = np.repeat(block_rank, ends - starts)
    r1 = float(np.sum(ranks[y[order] == 1]))
    return (r1 - n1 * (n1 + 1) / 2.0) / (n1 * n0)


def auprc(scores, labels):
    """Non-interpolated average precision, descending thresholds, tie blocks.

    AP = sum over distinct thresholds of (delta recall) * (precision at the
    block end), accumulated in threshold order.
    """
    s, y, n1, _ = _validate_scores_labels(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    sd = s[order]
    yd = y[order]
    edges = np.flatnonzero(np.r_[True, sd[1:] != sd[:-1], True])
    block_ends = edges[1:] - 1
    tp = np.cumsum(yd)[block_ends].astype(np.float64)
    k = (block_ends + 1).astype(np.float64)
    dtp = np.diff(np.r_[0.0, tp])
    contrib = (dtp / n1) * (tp / k)
    # cumsum fixes left-to-right accumulation, matching the scalar oracle
    return float(np.cumsum(contrib)[-1])


def evaluate(scores, labels):
    """Both ranking metrics as a (auroc, auprc) pair."""
    return auroc(scores, labels), auprc(scores, labels)


@dataclass
class ScoreReport:
    """Aggregated evaluation of one variant across seeds."""

    variant: str
    metric_id: str
    config_hash: str
    seeds: list
    auroc_per_seed: list
    auprc_per_seed: list
    scores: np.ndarray  # from the last seed's run, length n

    def __post_init__(self):
        for v in list(self.auroc_per_seed) + list(self.auprc_per_seed):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"metric value {v} outside [0,1]")

    @property
    def auroc_mean(self):
        return float(np.mean(self.auroc_per_seed))

    @property
    def auroc_std(self):
        return float(np.std(self.auroc_per_seed))

    @property
    def auprc_mean(self):
        return float(np.mean(self.auprc_per_seed))

    @property
    def auprc_std(self):
        return float(np.std(self.auprc_per_seed))

    def as_dict(self):
        return {
            "variant": self.variant,
            "metric_id": self.metric_id,
            "config_hash": self.config_hash,
            "seeds": list(self.seeds),
            "auroc_per_seed": [float(v) for v in self.auroc_per_seed],
            "auprc_per_seed": [float(v) for v in self.auprc_per_seed],
            "auroc_mean": self.auroc_mean,
            "auroc_std": self.auroc_std,
            "auprc_mean": self.auprc_mean,
            "auprc_std": self.auprc_std,
        }

    def csv_rows(self, dataset):
        """(dataset, variant, seed, auroc, auprc) rows for plotting."""
        return [
            (dataset, self.variant, int(seed), float(a), float(p))
            for seed, a, p in zip(self.seeds, self.auroc_per_seed, self.auprc_per_seed)
        ]


def run_matrix(g, configs, seeds, variant_names=None):
    """Train/score every (config, seed) cell on one labeled graph.

    Returns one ScoreReport per config, aggregating over the seed list.
    Seeding contract: the per-cell config is the given config with its seed
    replaced, so two configs differing only in metric_id share identical
    initial parameters for the same seed.
    """
    if g.labels is None:
        raise ValueError("run_matrix needs a labeled graph")
    if variant_names is None:
        variant_names = [f"config{i}" for i in range(len(configs))]
    reports = []
    for name, cfg in zip(variant_names, configs):
        aurocs, auprcs, scores = [], [], None
        for seed in seeds:
            cell = replace(cfg, seed=int(seed))
            params, _ = trainer.train(g, cell)
            scores = trainer.infer(params, g)
            a, p = evaluate(scores, g.labels)
            aurocs.append(a)
            auprcs.append(p)
        reports.append(
            ScoreReport(
                variant=name,
                metric_id=cfg.metric_id,
                config_hash=cfg.config_hash(),
                seeds=list(seeds),
                auroc_per_seed=aurocs,
                auprc_per_seed=auprcs,
                scores=scores,
            )
        )
    return reports


def ablation_variants(base):
    """The six training variants of the ablation table: the full model, the
    three alternative heterophily metrics, no alignment, no GNN branch."""
    return {
        "halo": base,
        "euclidean": replace(base, metric_id="euclidean"),
        "cosine": replace(base, metric_id="cosine"),
        "ahr": replace(base, metric_id="ahr"),
        "no_align": replace(base, alpha=0.0),
        "no_gnn": replace(base, use_gnn=False),
    }


# frozen desk-scale reproduction setup: five planted-fraud graphs, one per
# seed, each trained and scored with the matching train seed
DESK_SEEDS = (0, 1, 2, 3, 4)
DESK_GRAPH = dict(
    n=2000,
    d=16,
    fraud_fraction=0.05,
    avg_degree=10.0,
    camouflage=0.5,
    heterophilic_wiring=0.8,
)
DESK_TRAIN = dict(
    epochs=50,
    batch_size=512,
    alpha=0.5,
    lr=5e-4,
    d_e=64,
    metric_id="halo",
)


def desk_config(seed=0, **overrides):
    kw = dict(DESK_TRAIN)
    kw.update(overrides)
    return TrainConfig(seed=seed, **kw)


def desk_graph(seed):
    return datagen.generate(datagen.SynthSpec(seed=seed, **DESK_GRAPH))


@dataclass
class DeskRunResult:
    seeds: list
    auroc_per_seed: list  # trained model
    baseline_per_seed: list  # raw node heterophily as the score
    epoch1_loss: list
    epoch_last_loss: list
    rows: list = field(default_factory=list)  # (dataset, variant, seed, auroc, auprc)

    @property
    def auroc_mean(self):
        return float(np.mean(self.auroc_per_seed))

    @property
    def baseline_mean(self):
        return float(np.mean(self.baseline_per_seed))

    def as_dict(self):
        return {
            "seeds": list(self.seeds),
            "auroc_per_seed": [float(v) for v in self.auroc_per_seed],
            "baseline_per_seed": [float(v) for v in self.baseline_per_seed],
            "auroc_mean": self.auroc_mean,
            "baseline_mean": self.baseline_mean,
            "epoch1_loss": [float(v) for v in self.epoch1_loss],
            "epoch_last_loss": [float(v) for v in self.epoch_last_loss],
        }


def desk_run(seeds=DESK_SEEDS):
    """Train on the five desk graphs and compare against the score-by-raw-
    heterophily baseline on the same graphs."""
    res = DeskRunResult([], [], [], [], [])
    for seed in seeds:
        g = desk_graph(seed)
        cfg = desk_config(seed=seed)
        params, tlog = trainer.train(g, cfg)
        scores = trainer.infer(params, g)
        a, p = evaluate(scores, g.labels)
        h = heterophily.node_heterophily(g, "halo")
        base = auroc(h.node_values, g.labels)
        res.seeds.append(seed)
        res.auroc_per_seed.append(a)
        res.baseline_per_seed.append(base)
        res.epoch1_loss.append(tlog.epochs[0].mean_total)
        res.epoch_last_loss.append(tlog.epochs[-1].mean_total)
        res.rows.append(("synthetic", "huge", seed, a, p))
        res.rows.append(("synthetic", "heterophily_only", seed, base, auprc(h.node_values, g.labels)))
    return res


def ablation_run(seeds=DESK_SEEDS):
    """All six variants on the desk graphs; returns {variant: ScoreReport}."""
    variants = ablation_variants(desk_config())
    per_variant = {name: ([], []) for name in variants}
    scores_last = {name: None for name in variants}
    for seed in seeds:
        g = desk_graph(seed)
        for name, cfg in variants.items():
            cell = replace(cfg, seed=int(seed))
            params, _ = trainer.train(g, cell)
            scores = trainer.infer(params, g)
            a, p = evaluate(scores, g.labels)
            per_variant[name][0].append(a)
            per_variant[name][1].append(p)
            scores_last[name] = scores
    return {
        name: ScoreReport(
            variant=name,
            metric_id=cfg.metric_id,
            config_hash=cfg.config_hash(),
            seeds=list(seeds),
            auroc_per_seed=per_variant[name][0],
            auprc_per_seed=per_variant[name][1],
            scores=scores_last[name],
        )
        for name, cfg in variants.items()
    }
