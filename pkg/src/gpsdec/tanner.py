"""Tanner graph of a parity-check matrix and length-4 cycle statistics."""

from __future__ import annotations

import csv
import io
from itertools import combinations

import numpy as np

from .codes import as_bits


class TannerGraph:
    """Bipartite variable/check graph of ``H``.

    Edges are numbered by a row-major scan of ``H``: edge ``e`` joins check
    ``edge_check[e]`` and variable ``edge_var[e]``.
    """

    def __init__(self, H):
        H = as_bits(H)
        self.H = H
        self.n_check, self.n_var = H.shape
        checks, variables = np.nonzero(H)
        self.edge_check = checks.astype(np.int64)
        self.edge_var = variables.astype(np.int64)
        self.n_edges = int(checks.size)
        self.var_adj = [np.nonzero(H[:, v])[0].tolist() for v in range(self.n_var)]
        self.check_adj = [np.nonzero(H[c])[0].tolist() for c in range(self.n_check)]
        # edge ids grouped by node, padded with the dummy id n_edges
        self.check_edges = self._padded(self.edge_check, self.n_check)
        self.var_edges = self._padded(self.edge_var, self.n_var)
        self.var_degree = H.sum(axis=0).astype(np.int64)
        self.check_degree = H.sum(axis=1).astype(np.int64)

    def _padded(self, owner: np.ndarray, count: int) -> np.ndarray:
        deg = np.bincount(owner, minlength=count)
        width = max(int(deg.max(initial=0)), 1)
        table = np.full((count, width), self.n_edges, dtype=np.int64)
        fill = np.zeros(count, dtype=np.int64)
        for e, o in enumerate(owner):
            table[o, fill[o]] = e
            fill[o] += 1
        return table

    def __repr__(self):
        return f"TannerGraph(n_var={self.n_var}, n_check={self.n_check}, edges={self.n_edges})"

    @property
    def n_nodes(self) -> int:
        return self.n_var + self.n_check

    def neighbors(self) -> list[list[int]]:
        """Adjacency over all nodes: variables are 0..n_var-1, checks follow."""
        adj = [[self.n_var + c for c in cs] for cs in self.var_adj]
        adj += [list(vs) for vs in self.check_adj]
        return adj


def from_parity_check(H) -> TannerGraph:
    return TannerGraph(H)


def count_4cycles_per_vnode(g: TannerGraph) -> np.ndarray:
    """Number of length-4 cycles through each variable node.

    Two checks sharing a variable set S close C(|S|, 2) quadrilaterals; each
    v in S lies on |S| - 1 of them.
    """
    counts = np.zeros(g.n_var, dtype=np.int64)
    Hf = g.H.astype(np.int64)
    for c1, c2 in combinations(range(g.n_check), 2):
        shared = np.nonzero(Hf[c1] & Hf[c2])[0]
        if shared.size >= 2:
            counts[shared] += shared.size - 1
    return counts


def total_4cycles(g: TannerGraph) -> int:
    overlap = g.H.astype(np.int64) @ g.H.T.astype(np.int64)
    iu = np.triu_indices(g.n_check, 1)
    s = overlap[iu]
    return int((s * (s - 1) // 2).sum())


def cycle_histogram(counts, normalizer: float) -> np.ndarray:
    if normalizer <= 0:
        raise ValueError("normalizer must be positive")
    return np.asarray(counts, dtype=np.float64) / normalizer


def cycle_stats_csv(counts, normalizer: float) -> str:
    norm = cycle_histogram(counts, normalizer)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node_index", "count", "normalized"])
    for i, (c, x) in enumerate(zip(counts, norm)):
        w.writerow([i, int(c), repr(float(x))])
    return buf.getvalue()
