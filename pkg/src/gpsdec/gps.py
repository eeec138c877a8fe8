"""Graph permutation selection: the success classifier, joint training with
perm2vec, and permutation-selected BP decoding (top-1 and top-kappa)."""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn_core as nn
from .bp import BPConfig, EdgeWeights, decode_permuted_batch
from .channel import bpsk_modulate, generate_training_batch, llr as to_llr, stream
from .codes import LinearCode, Permutation, hard_decision, perm_matrix
from .formats import FormatError, dump_sections, parse_sections
from .perm2vec import Perm2VecParams, embed_all, embed_batch
from .tanner import TannerGraph

log = logging.getLogger(__name__)

LEAKY_SLOPE = 0.1
N_BLOCKS = 9


@dataclass
class ClassifierParams:
    W_l: nn.Param  # (d_p, n)
    W_s: nn.Param  # (d_p, n - k)
    W1: nn.Param  # (2 d_p, 9 d_p)
    b1: nn.Param
    W2: nn.Param  # (d_p, 2 d_p)
    b2: nn.Param
    W3: nn.Param  # (d_p / 2, d_p)
    b3: nn.Param
    w4: nn.Param  # (1, d_p / 2)
    b4: nn.Param  # (1,)

    NAMES = ("W_l", "W_s", "W1", "b1", "W2", "b2", "W3", "b3", "w4", "b4")

    @classmethod
    def init(cls, n: int, k: int, rng: np.random.Generator, d_p: int = 80) -> "ClassifierParams":
        if d_p % 2:
            raise ValueError("d_p must be even")
        shapes = {"W_l": (d_p, n), "W_s": (d_p, n - k), "W1": (2 * d_p, N_BLOCKS * d_p),
                  "W2": (d_p, 2 * d_p), "W3": (d_p // 2, d_p), "w4": (1, d_p // 2)}
        bias_of = {"b1": "W1", "b2": "W2", "b3": "W3", "b4": "w4"}
        vals = {}
        for name in cls.NAMES:
            if name in shapes:
                vals[name] = nn.uniform_init(rng, shapes[name], shapes[name][1])
            else:
                vals[name] = np.zeros(shapes[bias_of[name]][0])
        return cls(*(nn.Param(vals[k_], k_) for k_ in cls.NAMES))

    @property
    def d_p(self) -> int:
        return self.W_l.shape[0]

    def params(self) -> list[nn.Param]:
        return [getattr(self, k) for k in self.NAMES]

    def sections(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k).data for k in self.NAMES}

    @classmethod
    def from_sections(cls, sec: dict[str, np.ndarray]) -> "ClassifierParams":
        vals = {k: np.array(sec[k], dtype=np.float64) for k in cls.NAMES}
        for k in ("b1", "b2", "b3", "b4"):
            vals[k] = vals[k].reshape(-1)
        return cls(*(nn.Param(vals[k], k) for k in cls.NAMES))


def dumps_checkpoint(p2v: Perm2VecParams, cp: ClassifierParams) -> str:
    lines = ["GPS v1"] + p2v.dump_lines() + dump_sections(cp.sections())
    return "\n".join(lines) + "\n"


def loads_checkpoint(text: str) -> tuple[Perm2VecParams, ClassifierParams]:
    lines = text.split("\n")
    if lines[0].strip() != "GPS v1":
        raise FormatError("not a GPS v1 checkpoint")
    p2v, used = Perm2VecParams.parse_lines(lines[1:])
    sec, _ = parse_sections(lines[1 + used:], ClassifierParams.NAMES)
    return p2v, ClassifierParams.from_sections(sec)


def save_checkpoint(path, p2v: Perm2VecParams, cp: ClassifierParams) -> str:
    text = dumps_checkpoint(p2v, cp)
    Path(path).write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def load_checkpoint(path) -> tuple[Perm2VecParams, ClassifierParams]:
    return loads_checkpoint(Path(path).read_text())


# ---------------------------------------------------------------- classifier


def word_features(llr_words, perm_rows, H) -> tuple[np.ndarray, np.ndarray]:
    """|pi(llr)| and the syndrome (as 0/1 floats) of the permuted hard decision."""
    llr_words = np.atleast_2d(np.asarray(llr_words, dtype=np.float64))
    perm_rows = np.atleast_2d(np.asarray(perm_rows, dtype=np.int64))
    rows = np.arange(llr_words.shape[0])[:, None]
    pl = llr_words[rows, perm_rows]
    s = np.rint(hard_decision(pl).astype(np.float64) @ H.T.astype(np.float64)) % 2
    return np.abs(pl), s


def feature_vector(q, abs_pl, s, cp: ClassifierParams) -> nn.Tensor:
    """h = [q; l'; s'; q*l'; q*s'; l'*s'; |q-l'|; |q-s'|; |l'-s'|], shape (B, 9 d_p)."""
    lp = nn.linear(abs_pl, cp.W_l)
    sp = nn.linear(s, cp.W_s)
    q = nn.as_tensor(q)
    if q.shape != lp.shape:
        raise nn.ShapeError(f"embedding batch {q.shape} does not match word batch {lp.shape}")
    return nn.concat([q, lp, sp, nn.mul(q, lp), nn.mul(q, sp), nn.mul(lp, sp),
                      nn.absolute(nn.sub(q, lp)), nn.absolute(nn.sub(q, sp)),
                      nn.absolute(nn.sub(lp, sp))], axis=-1)


def logit(q, abs_pl, s, cp: ClassifierParams) -> nn.Tensor:
    h = feature_vector(q, abs_pl, s, cp)
    z = nn.leaky_relu(nn.linear(h, cp.W1, cp.b1), LEAKY_SLOPE)
    z = nn.leaky_relu(nn.linear(z, cp.W2, cp.b2), LEAKY_SLOPE)
    z = nn.leaky_relu(nn.linear(z, cp.W3, cp.b3), LEAKY_SLOPE)
    return nn.linear(z, cp.w4, cp.b4)  # (B, 1)


def score_batch(q, abs_pl, s, cp: ClassifierParams) -> nn.Tensor:
    return nn.sigmoid(logit(q, abs_pl, s, cp))


def score(llr_word, pi: Permutation, q, H, cp: ClassifierParams) -> float:
    """Estimated probability that BP decodes ``pi(llr_word)`` successfully."""
    abs_pl, s = word_features(llr_word, pi.map, H)
    with nn.no_grad():
        return float(score_batch(np.atleast_2d(q), abs_pl, s, cp).data[0, 0])


def batch_loss(batch_llr, perm_index, labels, perm_rows_all, H, p2v, cp) -> nn.Tensor:
    """Mean BCE over a labelled batch; each distinct permutation is embedded once."""
    uniq, inv = np.unique(perm_index, return_inverse=True)
    table = embed_batch(perm_rows_all[uniq], p2v)
    q = nn.gather_rows(table, inv)
    abs_pl, s = word_features(batch_llr, perm_rows_all[perm_index], H)
    return nn.bce_with_logits(logit(q, abs_pl, s, cp), labels)


# ---------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 256
    num_batches: int = 20000
    snr_range_db: tuple[float, float] = (1.0, 7.0)
    seed: int = 0
    d_p: int = 80
    heldout_size: int = 1024
    log_every: int = 200
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size <= 0 or self.num_batches < 0:
            raise ValueError("lr, batch_size must be positive and num_batches >= 0")
        if self.snr_range_db[0] > self.snr_range_db[1]:
            raise ValueError("empty SNR range")


class TrainingDiverged(RuntimeError):
    def __init__(self, msg, p2v, cp, history):
        super().__init__(msg)
        self.p2v, self.cp, self.history = p2v, cp, history


@dataclass
class TrainRecord:
    batch: int
    loss: float
    heldout_loss: float


def train(code: LinearCode, perms, cfg: TrainConfig, positional: np.ndarray | None = None,
          bp: BPConfig = BPConfig(), weights: EdgeWeights | None = None,
          graph: TannerGraph | None = None, checkpoint_path=None,
          history: list | None = None) -> tuple[Perm2VecParams, ClassifierParams]:
    """Jointly fit perm2vec and the classifier on balanced BP-success labels.

    ``positional`` initialises the perm2vec positional table (node2vec
    variable rows); random when omitted.
    """
    graph = graph or TannerGraph(code.H)
    rows_all = perms if isinstance(perms, np.ndarray) else perm_matrix(perms)
    init_rng = stream(cfg.seed, 10)
    d_w = positional.shape[1] if positional is not None else cfg.d_p
    p2v = Perm2VecParams.init(code.n, init_rng, d_w=d_w, d_p=cfg.d_p, positional=positional)
    cp = ClassifierParams.init(code.n, code.k, init_rng, d_p=cfg.d_p)
    params = p2v.params() + cp.params()
    history = history if history is not None else []

    def batch(rng, size):
        return generate_training_batch(code, rows_all, graph, size, rng, cfg.snr_range_db,
                                       bp, weights)

    held = batch(stream(cfg.seed, 11), cfg.heldout_size) if cfg.heldout_size else None
    data_rng = stream(cfg.seed, 12)
    good = dumps_checkpoint(p2v, cp)
    for b in range(1, cfg.num_batches + 1):
        lb = batch(data_rng, cfg.batch_size)
        loss = batch_loss(lb.llr, lb.perm_index, lb.label, rows_all, code.H, p2v, cp)
        if not math.isfinite(loss.item()):
            bad_p2v, bad_cp = loads_checkpoint(good)
            raise TrainingDiverged(f"loss became {loss.item()} at batch {b}", bad_p2v, bad_cp,
                                   history)
        loss.backward()
        nn.adam_step(params, cfg.lr)
        last = b == cfg.num_batches
        if cfg.log_every and (b % cfg.log_every == 0 or last):
            hl = float("nan")
            if held is not None:
                with nn.no_grad():
                    hl = batch_loss(held.llr, held.perm_index, held.label, rows_all, code.H,
                                    p2v, cp).item()
            history.append(TrainRecord(b, loss.item(), hl))
            log.info("batch %d loss %.4f heldout %.4f", b, loss.item(), hl)
        if cfg.checkpoint_every and (b % cfg.checkpoint_every == 0 or last):
            good = dumps_checkpoint(p2v, cp)
            if checkpoint_path is not None:
                Path(checkpoint_path).write_text(good)
    if checkpoint_path is not None:
        Path(checkpoint_path).write_text(dumps_checkpoint(p2v, cp))
    return p2v, cp


def history_csv(history) -> str:
    lines = ["batch,loss,heldout_loss"]
    lines += [f"{r.batch},{r.loss!r},{r.heldout_loss!r}" for r in history]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- inference


@dataclass
class GPSSystem:
    """Everything needed to select permutations and decode."""

    code: LinearCode
    perms: list
    p2v: Perm2VecParams | None = None
    cp: ClassifierParams | None = None
    bp: BPConfig = field(default_factory=BPConfig)
    weights: EdgeWeights | None = None
    graph: TannerGraph | None = None
    max_rows: int = 16384
    checkpoint_hash: str = ""

    def __post_init__(self):
        self.graph = self.graph or TannerGraph(self.code.H)
        self.perm_rows = perm_matrix(self.perms)
        self._table = None

    @property
    def trained(self) -> bool:
        return self.p2v is not None and self.cp is not None

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            if not self.trained:
                raise RuntimeError("GPS strategies need a trained checkpoint")
            with nn.no_grad():
                self._table = embed_all(self.perm_rows, self.p2v)
        return self._table

    def scores(self, llr_words) -> np.ndarray:
        """p(y, pi) for every word (row) and every permutation: (B, P)."""
        llr_words = np.atleast_2d(llr_words)
        B, P = llr_words.shape[0], self.perm_rows.shape[0]
        out = np.empty((B, P))
        step = max(1, self.max_rows // P)
        table = self.table
        with nn.no_grad():
            for i in range(0, B, step):
                w = llr_words[i:i + step]
                bi = w.shape[0]
                words = np.repeat(w, P, axis=0)
                prow = np.tile(self.perm_rows, (bi, 1))
                abs_pl, s = word_features(words, prow, self.code.H)
                q = np.tile(table, (bi, 1))
                out[i:i + bi] = score_batch(q, abs_pl, s, self.cp).data.reshape(bi, P)
        return out


def select(scores, k: int = 1) -> np.ndarray:
    """Indices of the k highest scores per row; ties go to the lower index."""
    scores = np.atleast_2d(scores)
    if k > scores.shape[1] or k < 1:
        raise ValueError(f"k={k} outside 1..{scores.shape[1]}")
    return np.argsort(-scores, axis=1, kind="stable")[:, :k]


def pick_candidate(y, cands, success) -> np.ndarray:
    """Index of the winning candidate per word.

    Syndrome-satisfying candidates first, then the smallest squared distance
    between y and the BPSK image of the candidate, then list order.
    """
    y = np.atleast_2d(y)
    d = ((y[:, None, :] - bpsk_modulate(cands)) ** 2).sum(axis=2)
    key = np.where(success, 0.0, 1.0)
    order = np.lexsort((np.broadcast_to(np.arange(d.shape[1]), d.shape), d, key), axis=1)
    return order[:, 0]


def decode_with_perm_lists(y, sigma, perm_idx, system: GPSSystem) -> np.ndarray:
    """Decode word b under each permutation in ``perm_idx[b]`` and pick one."""
    y = np.atleast_2d(y)
    perm_idx = np.atleast_2d(perm_idx)
    B, kappa = perm_idx.shape
    llr = to_llr(y, sigma)
    res = decode_permuted_batch(np.repeat(llr, kappa, axis=0),
                                system.perm_rows[perm_idx.reshape(-1)],
                                system.graph, system.bp, system.weights)
    if kappa == 1:
        return res.c_hat
    cands = res.c_hat.reshape(B, kappa, -1)
    win = pick_candidate(y, cands, res.success.reshape(B, kappa))
    return cands[np.arange(B), win]


def _noisy(y, code) -> np.ndarray:
    hd = hard_decision(y)
    return np.nonzero((np.rint(hd.astype(np.float64) @ code.H.T.astype(np.float64)) % 2).any(axis=1))[0]


def _sig_rows(sigma, idx):
    sigma = np.asarray(sigma, dtype=np.float64)
    return sigma[idx] if sigma.ndim else sigma


def gps_decode_batch(y, sigma, system: GPSSystem, kappa: int = 1, chunk: int = 512) -> np.ndarray:
    """Top-kappa GPS decoding of a batch of received words (rows)."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    out = hard_decision(y)
    noisy = _noisy(y, system.code)
    for i in range(0, noisy.size, chunk):
        idx = noisy[i:i + chunk]
        sig = _sig_rows(sigma, idx)
        top = select(system.scores(to_llr(y[idx], sig)), kappa)
        out[idx] = decode_with_perm_lists(y[idx], sig, top, system)
    return out


def decode_gps(y, system: GPSSystem, sigma: float) -> np.ndarray:
    return gps_decode_batch(np.asarray(y)[None, :], sigma, system, 1)[0]


def list_decode_topk(y, system: GPSSystem, kappa: int, sigma: float) -> np.ndarray:
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    return gps_decode_batch(np.asarray(y)[None, :], sigma, system, kappa)[0]


def lower_bound_batch(y, sigma, system: GPSSystem, chunk: int | None = None) -> np.ndarray:
    """Decode under every permutation of the group and pick by the candidate rule."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    out = hard_decision(y)
    noisy = _noisy(y, system.code)
    P = system.perm_rows.shape[0]
    chunk = chunk or max(1, system.max_rows // P)
    everything = np.arange(P)
    for i in range(0, noisy.size, chunk):
        idx = noisy[i:i + chunk]
        lists = np.broadcast_to(everything, (idx.size, P))
        out[idx] = decode_with_perm_lists(y[idx], _sig_rows(sigma, idx), lists, system)
    return out


def bp_lower_bound(y, system: GPSSystem, sigma: float) -> np.ndarray:
    return lower_bound_batch(np.asarray(y)[None, :], sigma, system)[0]
