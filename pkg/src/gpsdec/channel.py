"""BPSK over AWGN, LLRs, and balanced training-set generation."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np

from .bp import BPConfig, EdgeWeights, decode_permuted_batch
from .codes import LinearCode
from .tanner import TannerGraph

log = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.PCG64 via SeedSequence"


def bpsk_modulate(c) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(c, dtype=np.float64)


def awgn(x, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    return x + sigma * rng.standard_normal(x.shape)


def llr(y, sigma) -> np.ndarray:
    """AWGN log-likelihood ratios ``2 y / sigma^2``; sigma may be per-row."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive to form LLRs")
    y = np.asarray(y, dtype=np.float64)
    if sigma.ndim == 1:
        sigma = sigma[:, None]
    return 2.0 * y / sigma**2


def sigma_from_ebn0(ebn0_db, rate: float):
    if not 0 < rate <= 1:
        raise ValueError("rate must be in (0, 1]")
    return np.sqrt(1.0 / (2.0 * rate * 10.0 ** (np.asarray(ebn0_db, dtype=np.float64) / 10.0)))


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a (seed, key...) tuple."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *key])))


@dataclass(frozen=True)
class ChannelConfig:
    ebn0_db: float
    rate: float
    seed: int = 0

    @property
    def sigma(self) -> float:
        return float(sigma_from_ebn0(self.ebn0_db, self.rate))


@dataclass
class LabeledBatch:
    """K labelled (word, permutation) pairs; all-zero codeword transmitted."""

    y: np.ndarray  # (K, n) received words, original coordinate order
    sigma: np.ndarray  # (K,)
    snr_db: np.ndarray  # (K,)
    perm_index: np.ndarray  # (K,)
    label: np.ndarray  # (K,) 0/1

    def __len__(self):
        return self.label.size

    @property
    def llr(self) -> np.ndarray:
        return llr(self.y, self.sigma)

    def to_csv(self) -> str:
        buf = io.StringIO()
        n = self.y.shape[1]
        buf.write(",".join(["snr_db", "perm_index", "label"] + [f"y_{i}" for i in range(n)]) + "\n")
        for s, p, d, row in zip(self.snr_db, self.perm_index, self.label, self.y):
            buf.write(",".join([repr(float(s)), str(int(p)), str(int(d))]
                               + [repr(float(v)) for v in row]) + "\n")
        return buf.getvalue()


class LabelStarvation(RuntimeError):
    pass


def generate_training_batch(code: LinearCode, perms: np.ndarray, graph: TannerGraph,
                            batch_size: int, rng: np.random.Generator,
                            snr_range_db=(1.0, 7.0), bp: BPConfig = BPConfig(),
                            weights: EdgeWeights | None = None,
                            max_draws: int | None = None, chunk: int | None = None) -> LabeledBatch:
    """Rejection-sample a batch holding exactly K/2 decoder successes and
    K/2 failures.

    Each draw: SNR uniform over ``snr_range_db``, all-zero codeword, one PG
    permutation picked uniformly; the label is the syndrome-success flag of
    BP run on the permuted word.
    """
    if batch_size % 2:
        raise ValueError("batch size must be even")
    half = batch_size // 2
    n = code.n
    max_draws = max_draws or 200 * batch_size
    chunk = chunk or max(batch_size, 64)
    pos, neg = [], []
    n_pos = n_neg = draws = 0
    while n_pos < half or n_neg < half:
        if draws >= max_draws:
            raise LabelStarvation(
                f"gave up after {draws} draws: {n_pos}/{half} positives, {n_neg}/{half} negatives "
                f"(SNR range {snr_range_db} dB)")
        snr = rng.uniform(snr_range_db[0], snr_range_db[1], size=chunk)
        sig = sigma_from_ebn0(snr, code.rate)
        y = 1.0 + sig[:, None] * rng.standard_normal((chunk, n))
        pidx = rng.integers(0, perms.shape[0], size=chunk)
        res = decode_permuted_batch(llr(y, sig), perms[pidx], graph, bp, weights)
        draws += chunk
        lab = res.success
        rows = (y, sig, snr, pidx, lab.astype(np.uint8))
        take_p = np.nonzero(lab)[0][:half - n_pos]
        take_n = np.nonzero(~lab)[0][:half - n_neg]
        pos.append(tuple(r[take_p] for r in rows))
        neg.append(tuple(r[take_n] for r in rows))
        n_pos += take_p.size
        n_neg += take_n.size
    parts = pos + neg
    cols = [np.concatenate([p[i] for p in parts]) for i in range(5)]
    order = rng.permutation(batch_size)
    return LabeledBatch(*(c[order] for c in cols))
