"""Flooding sum-product belief propagation with syndrome stopping and
optional per-edge weights on variable-to-check messages (WBP inference)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codes import LinearCode, Permutation, hard_decision, permute, unpermute
from .tanner import TannerGraph


@dataclass(frozen=True)
class BPConfig:
    max_iters: int = 5
    early_stop: bool = True
    clip: float = 20.0

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.clip <= 0:
            raise ValueError("clip must be positive")


@dataclass
class DecodeResult:
    c_hat: np.ndarray
    success: bool
    iters_used: int
    final_llr: np.ndarray


@dataclass
class BatchDecodeResult:
    c_hat: np.ndarray  # (B, n) uint8
    success: np.ndarray  # (B,) bool
    iters_used: np.ndarray  # (B,) int
    final_llr: np.ndarray  # (B, n)

    def __len__(self):
        return self.c_hat.shape[0]

    def __getitem__(self, i) -> DecodeResult:
        return DecodeResult(self.c_hat[i], bool(self.success[i]), int(self.iters_used[i]),
                            self.final_llr[i])


class EdgeWeights:
    """Multiplicative weights, one per (iteration, edge). Not trained here."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("weights must be (iters, edges)")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("weights must be finite and positive")
        self.values = values

    @classmethod
    def ones(cls, n_edges: int, iters: int) -> "EdgeWeights":
        return cls(np.ones((iters, n_edges)))

    @property
    def iters(self) -> int:
        return self.values.shape[0]

    @property
    def n_edges(self) -> int:
        return self.values.shape[1]

    def for_iteration(self, it: int) -> np.ndarray:
        # extra iterations reuse the last trained set
        return self.values[min(it, self.iters - 1)]

    def dumps(self) -> str:
        lines = ["WBP v1", f"{self.n_edges} {self.iters}"]
        # edge-major: line e holds that edge's weight for every iteration
        for e in range(self.n_edges):
            lines.append(" ".join(repr(float(x)) for x in self.values[:, e]))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "EdgeWeights":
        lines = text.split("\n")
        if lines[0].strip() != "WBP v1":
            raise ValueError("not a WBP v1 file")
        E, iters = map(int, lines[1].split())
        vals = np.array([float(t) for t in " ".join(lines[2:]).split()])
        if vals.size != E * iters:
            raise ValueError(f"expected {E * iters} weights, found {vals.size}")
        return cls(vals.reshape(E, iters).T.copy())

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "EdgeWeights":
        return cls.loads(Path(path).read_text())


def _syndrome_ok(graph: TannerGraph, bits: np.ndarray) -> np.ndarray:
    s = np.rint(bits.astype(np.float64) @ graph.H.T.astype(np.float64)).astype(np.int64) & 1
    return ~s.any(axis=1)


def _exclusive_prod(t: np.ndarray) -> np.ndarray:
    """Leave-one-out product along axis 1 via prefix/suffix products."""
    w = t.shape[1]
    out = np.empty_like(t)
    out[:, 0] = 1.0
    for j in range(1, w):
        np.multiply(out[:, j - 1], t[:, j - 1], out=out[:, j])
    suf = np.ones_like(t[:, 0])
    for j in range(w - 2, -1, -1):
        suf *= t[:, j + 1]
        out[:, j] *= suf
    return out


def decode_batch(llr_in, graph: TannerGraph, cfg: BPConfig = BPConfig(),
                 weights: EdgeWeights | None = None) -> BatchDecodeResult:
    """Decode a batch of LLR words (rows). Positive LLR favours bit 0."""
    llr = np.atleast_2d(np.asarray(llr_in, dtype=np.float64))
    B, n = llr.shape
    if n != graph.n_var:
        raise ValueError(f"word length {n} != {graph.n_var}")
    if weights is not None and weights.n_edges != graph.n_edges:
        raise ValueError("edge weights do not match the graph")
    E = graph.n_edges
    clip = cfg.clip

    c_hat = hard_decision(llr)
    final = llr.copy()
    iters = np.zeros(B, dtype=np.int64)
    ok = _syndrome_ok(graph, c_hat)
    active = np.nonzero(~ok)[0] if cfg.early_stop else np.arange(B)

    if active.size and cfg.max_iters > 0:
        # edge-major layout (edges x words) so every gather copies whole rows
        L = np.ascontiguousarray(llr[active].T)
        ev, ce, ve = graph.edge_var, graph.check_edges, graph.var_edges
        real = ce < E
        # c2v carries one trailing dummy row (always 0) for padded gathers
        c2v = np.zeros((E + 1, active.size))
        t = np.ones((E + 1, active.size))
        for it in range(cfg.max_iters):
            total = L + c2v[ve].sum(axis=1)
            v2c = total[ev] - c2v[:E]
            if weights is not None:
                v2c *= weights.for_iteration(it)[:, None]
            np.clip(v2c, -clip, clip, out=v2c)
            np.tanh(0.5 * v2c, out=t[:E])
            excl = _exclusive_prod(t[ce])  # (checks, width, words)
            msg = np.clip(excl[real], -1.0 + 1e-16, 1.0 - 1e-16)
            msg = 2.0 * np.arctanh(msg)
            np.clip(msg, -clip, clip, out=msg)
            c2v[ce[real]] = msg
            marg = L + c2v[ve].sum(axis=1)
            bits = hard_decision(marg.T)
            done = _syndrome_ok(graph, bits)
            c_hat[active] = bits
            final[active] = marg.T
            iters[active] = it + 1
            ok[active] = done
            if cfg.early_stop:
                keep = ~done
                if not keep.all():
                    active = active[keep]
                    if active.size == 0:
                        break
                    L, c2v, t = L[:, keep], c2v[:, keep], t[:, keep]
    return BatchDecodeResult(c_hat, ok, iters, final)


def decode(llr_in, graph: TannerGraph, cfg: BPConfig = BPConfig(),
           weights: EdgeWeights | None = None) -> DecodeResult:
    """Single-word BP. ``iters_used`` is 0 when the hard decision of the
    input already has a zero syndrome."""
    llr = np.asarray(llr_in, dtype=np.float64)
    if not np.all(np.isfinite(llr)):
        raise ValueError("input LLRs must be finite")
    return decode_batch(llr[None, :], graph, cfg, weights)[0]


def decode_permuted(y, p: Permutation, code: LinearCode, cfg: BPConfig, sigma: float,
                    graph: TannerGraph | None = None,
                    weights: EdgeWeights | None = None) -> DecodeResult:
    """BP on the permuted LLRs, result mapped back to the original order."""
    from .channel import llr as to_llr

    graph = graph or TannerGraph(code.H)
    r = decode(permute(p, to_llr(y, sigma)), graph, cfg, weights)
    return DecodeResult(unpermute(p, r.c_hat), r.success, r.iters_used,
                        unpermute(p, r.final_llr))


def decode_permuted_batch(llr_words, perm_rows, graph: TannerGraph, cfg: BPConfig,
                          weights: EdgeWeights | None = None) -> BatchDecodeResult:
    """Row b is decoded under permutation ``perm_rows[b]`` (an index map) and
    mapped back to the original coordinate order."""
    llr_words = np.asarray(llr_words, dtype=np.float64)
    perm_rows = np.asarray(perm_rows, dtype=np.int64)
    rows = np.arange(llr_words.shape[0])[:, None]
    res = decode_batch(llr_words[rows, perm_rows], graph, cfg, weights)
    c_hat = np.empty_like(res.c_hat)
    c_hat[rows, perm_rows] = res.c_hat
    final = np.empty_like(res.final_llr)
    final[rows, perm_rows] = res.final_llr
    return BatchDecodeResult(c_hat, res.success, res.iters_used, final)


def decode_reference(llr_in, H, cfg: BPConfig = BPConfig(), weights=None) -> DecodeResult:
    """Straight-loop sum-product, kept as an independent check of ``decode``."""
    H = np.asarray(H)
    llr = [float(x) for x in llr_in]
    m, n = H.shape
    edges = [(c, v) for c in range(m) for v in range(n) if H[c, v]]
    eid = {e: i for i, e in enumerate(edges)}
    bits = [1 if x < 0 else 0 for x in llr]

    def parity_ok(b):
        return all(sum(b[v] for v in range(n) if H[c, v]) % 2 == 0 for c in range(m))

    if cfg.early_stop and parity_ok(bits):
        return DecodeResult(np.array(bits, dtype=np.uint8), True, 0, np.array(llr))
    c2v = {e: 0.0 for e in edges}
    marg = list(llr)
    used = 0
    for it in range(cfg.max_iters):
        used = it + 1
        v2c = {}
        for (c, v) in edges:
            s = llr[v] + sum(c2v[(c2, v)] for c2 in range(m) if H[c2, v] and c2 != c)
            if weights is not None:
                s *= weights.for_iteration(it)[eid[(c, v)]]
            v2c[(c, v)] = min(max(s, -cfg.clip), cfg.clip)
        for (c, v) in edges:
            prod = 1.0
            for v2 in range(n):
                if H[c, v2] and v2 != v:
                    prod *= np.tanh(v2c[(c, v2)] / 2)
            prod = min(max(prod, -1.0 + 1e-16), 1.0 - 1e-16)
            c2v[(c, v)] = min(max(2 * np.arctanh(prod), -cfg.clip), cfg.clip)
        marg = [llr[v] + sum(c2v[(c, v)] for c in range(m) if H[c, v]) for v in range(n)]
        bits = [1 if x < 0 else 0 for x in marg]
        if parity_ok(bits) and cfg.early_stop:
            break
    return DecodeResult(np.array(bits, dtype=np.uint8), parity_ok(bits), used, np.array(marg))
