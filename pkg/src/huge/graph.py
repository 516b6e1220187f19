"""Attributed graphs in CSR form: construction, validation, file IO, and
batch neighborhood closures.

Node ids in input files may be arbitrary integers; they are densified to
0..n-1 at load and the original ids are kept on the graph so output scores
can be joined back. Adjacency is stored in both directions, neighbor lists
sorted, no self-loops, no duplicates.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class AttributedGraph:
    offsets: np.ndarray  # int64, length n+1
    cols: np.ndarray  # int64, length 2m
    attrs: np.ndarray  # float64, n x d
    labels: np.ndarray | None = None  # int64 in {0,1}, evaluation-only
    node_ids: np.ndarray = field(default=None)  # original ids, length n

    def __post_init__(self):
        self.offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        self.cols = np.ascontiguousarray(self.cols, dtype=np.int64)
        self.attrs = np.ascontiguousarray(self.attrs, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.node_ids is None:
            self.node_ids = np.arange(self.n, dtype=np.int64)
        else:
            self.node_ids = np.ascontiguousarray(self.node_ids, dtype=np.int64)
        self.validate()

    @property
    def n(self):
        return self.attrs.shape[0]

    @property
    def d(self):
        return self.attrs.shape[1]

    @property
    def num_edges(self):
        return self.cols.shape[0] // 2

    @property
    def degrees(self):
        return np.diff(self.offsets)

    def neighbors(self, i):
        if not 0 <= i < self.n:
            raise IndexError(f"node index {i} out of range [0, {self.n})")
        return self.cols[self.offsets[i] : self.offsets[i + 1]]

    def validate(self):
        n = self.n
        if self.attrs.ndim != 2:
            raise ValueError("attributes must be a 2-D matrix")
        if not np.all(np.isfinite(self.attrs)):
            raise ValueError("attributes contain NaN/Inf")
        if self.offsets.shape != (n + 1,):
            raise ValueError(f"row offsets must have length n+1={n + 1}")
        if self.offsets[0] != 0 or self.offsets[-1] != self.cols.shape[0]:
            raise ValueError("row offsets must start at 0 and end at the slot count")
        if np.any(np.diff(self.offsets) < 0):
            raise ValueError("row offsets must be non-decreasing")
        if self.cols.size:
            if self.cols.min() < 0 or self.cols.max() >= n:
                raise ValueError("column index out of range")
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.offsets))
        if np.any(rows == self.cols):
            raise ValueError("self-loop present in CSR")
        # sorted + unique within each row, checked in one pass
        if self.cols.size:
            same_row = rows[1:] == rows[:-1]
            if np.any(same_row & (self.cols[1:] <= self.cols[:-1])):
                raise ValueError("neighbor lists must be strictly increasing")
        if self.labels is not None:
            if self.labels.shape != (n,):
                raise ValueError(f"labels must have length n={n}")
            if not np.isin(self.labels, (0, 1)).all():
                raise ValueError("labels must be 0/1")
        if self.node_ids.shape != (n,):
            raise ValueError(f"node id map must have length n={n}")

    def undirected_edges(self):
        """Each undirected edge once, as an (m, 2) array with src < dst."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = rows < self.cols
        return np.stack([rows[keep], self.cols[keep]], axis=1)


def from_edges(edges, attrs, labels=None, node_ids=None):
    """Build a validated graph from raw undirected pairs.

    Symmetrizes, drops self-loops (with a counted warning), merges duplicate
    edges, sorts neighbor lists. ``edges`` is an (m, 2) int array using dense
    ids 0..n-1 where n = number of attribute rows.
    """
    attrs = np.ascontiguousarray(attrs, dtype=np.float64)
    n = attrs.shape[0]
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise ValueError("edge endpoint out of range for the attribute table")
    loops = edges[:, 0] == edges[:, 1]
    if loops.any():
        log.warning("dropped %d self-loop(s)", int(loops.sum()))
        edges = edges[~loops]
    if edges.size:
        both = np.concatenate([edges, edges[:, ::-1]], axis=0)
        key = np.unique(both[:, 0] * np.int64(n) + both[:, 1])
        src = key // n
        cols = key % n
    else:
        src = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    return AttributedGraph(offsets, cols, attrs, labels=labels, node_ids=node_ids)


def _parse_edge_lines(path):
    pairs = []
    first_data = True
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.replace(",", " ").split()
            try:
                if len(parts) != 2:
                    raise ValueError
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                # a single leading non-numeric line is a header row
                if first_data:
                    first_data = False
                    continue
                raise ValueError(
                    f"{path}:{lineno}: expected two integer node ids, got {body!r}"
                ) from None
            first_data = False
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def _has_header(path):
    """True when the first non-empty, non-comment line is not all numeric."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            for tok in body.replace(",", " ").split():
                try:
                    float(tok)
                except ValueError:
                    return True
            return False
    return False


def load_graph(edge_list_path, attributes_path, labels_path=None):
    """Load and validate a graph from an edge list plus attribute CSV.

    The attribute CSV has one row per node; a header row is tolerated in
    all three files. If the edge list already uses ids within 0..n-1 they
    are kept (rows not mentioned are isolated nodes); otherwise there must
    be exactly one attribute row per distinct id, in sorted id order, and
    ids are densified.
    """
    raw = _parse_edge_lines(edge_list_path)
    attrs = np.loadtxt(
        attributes_path,
        delimiter=",",
        dtype=np.float64,
        ndmin=2,
        skiprows=1 if _has_header(attributes_path) else 0,
    )
    if not np.all(np.isfinite(attrs)):
        raise ValueError(f"{attributes_path}: attributes contain NaN/Inf")
    n = attrs.shape[0]
    if raw.size == 0:
        edges = raw
        node_ids = np.arange(n, dtype=np.int64)
    else:
        distinct = np.unique(raw)
        if distinct.min() >= 0 and distinct.max() < n:
            edges = raw
            node_ids = np.arange(n, dtype=np.int64)
        elif distinct.size == n:
            edges = np.searchsorted(distinct, raw)
            node_ids = distinct
        else:
            raise ValueError(
                f"{attributes_path}: {n} attribute rows for {distinct.size} distinct "
                f"node ids (ids outside 0..{n - 1} require one row per id)"
            )
    labels = None
    if labels_path is not None:
        labels = np.loadtxt(
            labels_path,
            dtype=np.int64,
            ndmin=1,
            skiprows=1 if _has_header(labels_path) else 0,
        )
        if labels.shape != (n,):
            raise ValueError(f"{labels_path}: expected {n} label lines, got {labels.shape[0]}")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError(f"{labels_path}: labels must be 0 or 1")
    return from_edges(edges, attrs, labels=labels, node_ids=node_ids)


def save_graph(graph, edges_path, attrs_path, labels_path=None):
    """Write a graph to header-row CSVs (round-trips through load_graph).

    Attribute values are written with repr, so they survive the round trip
    bit for bit.
    """
    with open(edges_path, "w", encoding="utf-8") as fh:
        fh.write("src,dst\n")
        for u, v in graph.undirected_edges():
            fh.write(f"{graph.node_ids[u]},{graph.node_ids[v]}\n")
    with open(attrs_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"x{k}" for k in range(graph.d)) + "\n")
        for row in graph.attrs:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    if labels_path is not None:
        if graph.labels is None:
            raise ValueError("graph has no labels to save")
        with open(labels_path, "w", encoding="utf-8") as fh:
            fh.write("label\n")
            for y in graph.labels:
                fh.write(f"{int(y)}\n")


def _row_slots(offsets, rows):
    """Flat CSR slot indices covering the given rows, in row order."""
    counts = offsets[rows + 1] - offsets[rows]
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), counts
    starts = offsets[rows]
    cum = np.concatenate(([0], np.cumsum(counts)[:-1]))
    within = np.arange(total, dtype=np.int64) - np.repeat(cum, counts)
    return np.repeat(starts, counts) + within, counts


def neighbor_closure_subgraph(graph, batch):
    """Batch nodes plus their distinct neighbors, with local CSR.

    Returns (closure_ids, local_offsets, local_cols). Batch nodes occupy
    local positions 0..|B|-1 in the given order; the appended neighbors are
    sorted by global id. Batch rows keep all their edges (so batch degrees
    match the full graph); neighbor rows keep only edges back into the
    batch. The kept edge set is symmetric.
    """
    batch = np.asarray(batch, dtype=np.int64).reshape(-1)
    if batch.size == 0:
        raise ValueError("batch must be nonempty")
    if batch.min() < 0 or batch.max() >= graph.n:
        raise IndexError("batch node index out of range")
    if np.unique(batch).size != batch.size:
        raise ValueError("batch ids must be distinct")
    nb = batch.size
    in_batch = np.zeros(graph.n, dtype=bool)
    in_batch[batch] = True
    slots, _ = _row_slots(graph.offsets, batch)
    nbrs = graph.cols[slots]
    extra = np.unique(nbrs[~in_batch[nbrs]])
    closure = np.concatenate([batch, extra])
    pos = np.full(graph.n, -1, dtype=np.int64)
    pos[closure] = np.arange(closure.size, dtype=np.int64)
    slots_c, counts_c = _row_slots(graph.offsets, closure)
    local = pos[graph.cols[slots_c]]
    row = np.repeat(np.arange(closure.size, dtype=np.int64), counts_c)
    keep = (row < nb) | ((local >= 0) & (local < nb))
    row = row[keep]
    local = local[keep]
    local_offsets = np.zeros(closure.size + 1, dtype=np.int64)
    np.cumsum(np.bincount(row, minlength=closure.size), out=local_offsets[1:])
    return closure, local_offsets, local
