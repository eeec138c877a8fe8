"""node2vec on a Tanner graph: second-order biased walks over both node
classes, then skip-gram with negative sampling."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn_core as nn
from .tanner import TannerGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkConfig:
    num_walks_per_node: int = 2000
    walk_length: int = 10
    window: int = 10
    p: float = 1.0
    q: float = 1.0
    dim: int = 80
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    batch_pairs: int = 1024

    def __post_init__(self):
        for name in ("num_walks_per_node", "walk_length", "window", "dim", "negatives",
                     "epochs", "batch_pairs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.p <= 0 or self.q <= 0 or self.lr <= 0:
            raise ValueError("p, q and lr must be positive")


def _adjacency(g: TannerGraph):
    nbrs = g.neighbors()
    N = len(nbrs)
    width = max((len(a) for a in nbrs), default=1) or 1
    table = np.full((N, width), -1, dtype=np.int64)
    for i, a in enumerate(nbrs):
        table[i, :len(a)] = a
    adj = np.zeros((N, N), dtype=bool)
    for i, a in enumerate(nbrs):
        adj[i, a] = True
    return table, adj, np.array([len(a) for a in nbrs])


def transition_weights(g: TannerGraph, prev: int, cur: int, p: float, q: float) -> dict[int, float]:
    """Unnormalised second-order weights out of ``cur`` having come from ``prev``."""
    table, adj, deg = _adjacency(g)
    out = {}
    for x in table[cur, :deg[cur]]:
        x = int(x)
        out[x] = 1.0 / p if x == prev else (1.0 if adj[prev, x] else 1.0 / q)
    return out


def biased_walks(g: TannerGraph, cfg: WalkConfig, rng: np.random.Generator) -> np.ndarray:
    """Walks as rows of node ids (variables 0..n_var-1, checks n_var..).

    All walks from all start nodes advance together, one step per loop.
    Isolated nodes are skipped.
    """
    table, adj, deg = _adjacency(g)
    starts = np.nonzero(deg > 0)[0]
    if starts.size < deg.size:
        log.warning("skipping %d isolated nodes", deg.size - starts.size)
    if starts.size == 0:
        return np.zeros((0, cfg.walk_length), dtype=np.int64)
    W = starts.size * cfg.num_walks_per_node
    walks = np.empty((W, cfg.walk_length), dtype=np.int64)
    walks[:, 0] = np.repeat(starts, cfg.num_walks_per_node)
    uniform = cfg.p == 1.0 and cfg.q == 1.0
    valid = table >= 0
    for step in range(1, cfg.walk_length):
        cur = walks[:, step - 1]
        if step == 1 or uniform:
            pick = (rng.random(W) * deg[cur]).astype(np.int64)
        else:
            prev = walks[:, step - 2]
            nb = table[cur]
            safe = np.where(nb >= 0, nb, 0)
            w = np.where(safe == prev[:, None], 1.0 / cfg.p,
                         np.where(adj[prev[:, None], safe], 1.0, 1.0 / cfg.q))
            w = np.where(valid[cur], w, 0.0)
            cdf = np.cumsum(w, axis=1)
            u = rng.random(W) * cdf[:, -1]
            pick = (cdf <= u[:, None]).sum(axis=1)
        walks[:, step] = table[cur, pick]
    return walks


def context_pairs(walks: np.ndarray, window: int) -> np.ndarray:
    """All (center, context) pairs with 0 < |i - j| <= window, as rows."""
    L = walks.shape[1]
    out = []
    for off in range(1, min(window, L - 1) + 1):
        out.append(np.stack([walks[:, :-off].ravel(), walks[:, off:].ravel()], axis=1))
        out.append(np.stack([walks[:, off:].ravel(), walks[:, :-off].ravel()], axis=1))
    return np.concatenate(out) if out else np.zeros((0, 2), dtype=np.int64)


class SkipGram:
    def __init__(self, n_nodes: int, dim: int, rng: np.random.Generator):
        self.inp = nn.Param(rng.uniform(-0.5 / dim, 0.5 / dim, size=(n_nodes, dim)), "node_in")
        self.out = nn.Param(np.zeros((n_nodes, dim)), "node_out")

    def loss(self, centers, contexts, negatives) -> nn.Tensor:
        """Summed negative SGNS objective over the given pairs.

        The vocabulary is tiny, so each center is scored against every
        output vector and the context/negative entries are picked out.
        """
        u = nn.gather_rows(self.inp, centers)  # (B, d)
        scores = nn.matmul(u, nn.transpose(self.out))  # (B, N)
        pos = nn.log_sigmoid(nn.take(scores, np.asarray(contexts)[:, None]))
        neg = nn.log_sigmoid(nn.scale(nn.take(scores, negatives), -1.0))
        return nn.scale(nn.add(nn.total(pos), nn.total(neg)), -1.0)


def train_skipgram(walks: np.ndarray, n_nodes: int, cfg: WalkConfig, rng: np.random.Generator,
                   history: list | None = None) -> np.ndarray:
    """SGD on the SGNS loss over mini-batches of context pairs, each row's
    gradient averaged over its occurrences in the batch, with a learning
    rate decaying linearly to ~0. Returns the input-side vectors."""
    pairs = context_pairs(walks, cfg.window)
    if pairs.shape[0] == 0:
        raise ValueError("empty walk corpus")
    freq = np.bincount(walks.ravel(), minlength=n_nodes).astype(np.float64) ** 0.75
    noise = freq / freq.sum()
    model = SkipGram(n_nodes, cfg.dim, rng)
    B = cfg.batch_pairs
    per_epoch = -(-pairs.shape[0] // B)
    total_steps = per_epoch * cfg.epochs
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(pairs.shape[0])
        epoch_loss = 0.0
        for s in range(per_epoch):
            batch = pairs[order[s * B:(s + 1) * B]]
            negs = rng.choice(n_nodes, size=(batch.shape[0], cfg.negatives), p=noise)
            loss = model.loss(batch[:, 0], batch[:, 1], negs)
            loss.backward()
            # one averaged step per row: a row met c times in the batch would
            # otherwise move c times too far on a small vocabulary
            c_in = np.bincount(batch[:, 0], minlength=n_nodes)
            c_out = np.bincount(np.concatenate([batch[:, 1], negs.ravel()]), minlength=n_nodes)
            model.inp.grad /= np.maximum(c_in, 1)[:, None]
            model.out.grad /= np.maximum(c_out, 1)[:, None]
            lr = cfg.lr * max(1e-4, 1.0 - step / total_steps)
            nn.sgd_step([model.inp, model.out], lr)
            epoch_loss += loss.item()
            step += 1
        mean_loss = epoch_loss / pairs.shape[0]
        log.info("skip-gram epoch %d loss %.4f", epoch, mean_loss)
        if history is not None:
            history.append(mean_loss)
    return model.inp.data.copy()


def node2vec(g: TannerGraph, cfg: WalkConfig = WalkConfig(), seed: int = 0,
             history: list | None = None) -> np.ndarray:
    from .channel import stream

    walks = biased_walks(g, cfg, stream(seed, 0))
    return train_skipgram(walks, g.n_nodes, cfg, stream(seed, 1), history)


def variable_node_rows(emb: np.ndarray, g: TannerGraph) -> np.ndarray:
    return np.array(emb[:g.n_var], copy=True)


# ---------------------------------------------------------------- checkpoint


def dumps_embeddings(emb: np.ndarray) -> str:
    emb = np.atleast_2d(np.asarray(emb, dtype=np.float64))
    lines = ["NODE2VEC v1", f"{emb.shape[0]} {emb.shape[1]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in emb]
    return "\n".join(lines) + "\n"


def loads_embeddings(text: str) -> np.ndarray:
    lines = text.split("\n")
    if lines[0].strip() != "NODE2VEC v1":
        raise ValueError("not a NODE2VEC v1 file")
    rows, cols = map(int, lines[1].split())
    vals = np.array([float(t) for t in " ".join(lines[2:]).split()])
    if vals.size != rows * cols:
        raise ValueError(f"expected {rows * cols} values, found {vals.size}")
    return vals.reshape(rows, cols)


def save_embeddings(emb, path):
    Path(path).write_text(dumps_embeddings(emb))


def load_embeddings(path) -> np.ndarray:
    return loads_embeddings(Path(path).read_text())
