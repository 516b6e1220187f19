"""Ranking metrics against brute-force oracles, plus the run matrix."""
import numpy as np
import pytest

from huge import metrics
from huge.metrics import ScoreReport, ablation_variants, auprc, auroc, evaluate, run_matrix

from conftest import quick_config


def auroc_pairwise_oracle(scores, labels):
    """Count wins plus half-ties over all positive/negative pairs.

    Every term is a dyadic rational with small denominator, so the float
    sum is exact and the comparison against the rank-sum form can be ==.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    acc = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                acc += 1.0
            elif p == q:
                acc += 0.5
    return acc / (pos.size * neg.size)


def auprc_sweep_oracle(scores, labels):
    """Average precision by explicit descending threshold sweep."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n1 = int(labels.sum())
    thresholds = np.unique(scores)[::-1]
    ap = 0.0
    prev_tp = 0.0
    for t in thresholds:
        sel = scores >= t
        tp = float(labels[sel].sum())
        k = float(sel.sum())
        ap += ((tp - prev_tp) / n1) * (tp / k)
        prev_tp = tp
    return ap


class TestAuroc:
    def test_perfect_ranking(self):
        assert auroc([0.9, 0.8, 0.1], [1, 0, 0]) == 1.0

    def test_all_ties(self):
        assert auroc([0.3, 0.3, 0.3, 0.3], [0, 1, 0, 1]) == 0.5

    def test_worst_ranking(self):
        assert auroc([0.1, 0.9], [1, 0]) == 0.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            auroc([0.1, 0.2], [1, 1])

    def test_validation(self):
        with pytest.raises(ValueError, match="lengths differ"):
            auroc([0.1], [0, 1])
        with pytest.raises(ValueError, match="NaN"):
            auroc([np.nan, 0.1], [0, 1])
        with pytest.raises(ValueError, match="0/1"):
            auroc([0.1, 0.2], [0, 2])

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_pairwise_oracle_exactly(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 60))
        # quantized scores force plenty of ties
        scores = np.round(rng.normal(size=n), 1)
        labels = rng.integers(0, 2, size=n)
        if labels.sum() in (0, n):
            labels[0] = 1 - labels[0]
        assert auroc(scores, labels) == auroc_pairwise_oracle(scores, labels)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(40)
        scores = rng.normal(size=80)
        labels = rng.integers(0, 2, size=80)
        labels[0], labels[1] = 0, 1
        base = auroc(scores, labels)
        assert auroc(np.exp(scores), labels) == base
        assert auroc(3.0 * scores + 7.0, labels) == base

    def test_reversal_identity_tie_free(self):
        rng = np.random.default_rng(41)
        scores = rng.permutation(100).astype(float)  # distinct by construction
        labels = rng.integers(0, 2, size=100)
        labels[0], labels[1] = 0, 1
        assert auroc(scores, labels) + auroc(-scores, labels) == pytest.approx(1.0, abs=1e-12)


class TestAuprc:
    def test_perfect_ranking(self):
        assert auprc([0.9, 0.8, 0.1, 0.0], [1, 1, 0, 0]) == 1.0

    def test_positive_ranked_second(self):
        assert auprc([0.9, 0.8, 0.1], [0, 1, 0]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auprc([0.5, 0.6], [0, 0])

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_sweep_oracle_exactly(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(5, 60))
        scores = np.round(rng.normal(size=n), 1)
        labels = rng.integers(0, 2, size=n)
        if labels.sum() in (0, n):
            labels[0] = 1 - labels[0]
        assert auprc(scores, labels) == auprc_sweep_oracle(scores, labels)

    def test_random_scores_concentrate_at_prevalence(self):
        rng = np.random.default_rng(42)
        n = 200
        labels = np.zeros(n, dtype=int)
        labels[: n // 2] = 1  # balanced: prevalence 0.5
        vals = [auprc(rng.normal(size=n), labels) for _ in range(100)]
        assert abs(float(np.mean(vals)) - 0.5) < 0.1

    def test_evaluate_pairs_the_metrics(self):
        s = [0.9, 0.8, 0.1]
        y = [1, 0, 0]
        assert evaluate(s, y) == (auroc(s, y), auprc(s, y))


class TestScoreReport:
    def _report(self, **kw):
        base = dict(
            variant="halo",
            metric_id="halo",
            config_hash="x",
            seeds=[0, 1],
            auroc_per_seed=[0.9, 0.8],
            auprc_per_seed=[0.5, 0.7],
            scores=np.zeros(3),
        )
        base.update(kw)
        return ScoreReport(**base)

    def test_mean_std(self):
        r = self._report()
        assert r.auroc_mean == pytest.approx(0.85)
        assert r.auroc_std == pytest.approx(np.std([0.9, 0.8]))

    def test_range_validation(self):
        with pytest.raises(ValueError, match="outside"):
            self._report(auroc_per_seed=[1.2, 0.8])

    def test_csv_rows(self):
        rows = self._report().csv_rows("synthetic")
        assert rows[0] == ("synthetic", "halo", 0, 0.9, 0.5)
        assert len(rows) == 2

    def test_as_dict_round_trips_values(self):
        d = self._report().as_dict()
        assert d["auroc_mean"] == pytest.approx(0.85)
        assert d["seeds"] == [0, 1]


class TestRunMatrix:
    def test_single_cell_zero_std(self, tiny_graph):
        reports = run_matrix(tiny_graph, [quick_config()], seeds=[0])
        assert len(reports) == 1
        assert reports[0].auroc_std == 0.0
        assert reports[0].variant == "config0"
        assert reports[0].scores.shape == (tiny_graph.n,)

    def test_needs_labels(self, path_graph):
        with pytest.raises(ValueError, match="label"):
            run_matrix(path_graph, [quick_config()], seeds=[0])

    def test_variant_names_respected(self, tiny_graph):
        reports = run_matrix(
            tiny_graph, [quick_config()], seeds=[0], variant_names=["full"]
        )
        assert reports[0].variant == "full"


class TestAblationVariants:
    def test_structure(self):
        base = quick_config()
        v = ablation_variants(base)
        assert set(v) == {"halo", "euclidean", "cosine", "ahr", "no_align", "no_gnn"}
        assert v["halo"] is base
        assert v["euclidean"].metric_id == "euclidean"
        assert v["no_align"].alpha == 0.0 and v["no_align"].metric_id == "halo"
        assert v["no_gnn"].use_gnn is False

    def test_desk_constants_pinned(self):
        assert metrics.DESK_SEEDS == (0, 1, 2, 3, 4)
        assert metrics.DESK_GRAPH["n"] == 2000
        assert metrics.DESK_GRAPH["fraud_fraction"] == 0.05
        assert metrics.DESK_TRAIN["epochs"] == 50
        assert metrics.DESK_TRAIN["batch_size"] == 512
        cfg = metrics.desk_config(seed=3)
        assert cfg.seed == 3 and cfg.lr == 5e-4
