"""Monte Carlo BER/FER evaluation, report persistence and comparison.

Words are simulated in fixed-size blocks. Block b at SNR s draws its
codewords and noise from its own stream keyed by (seed, s, b), so every
strategy sees the same channel realisations and results do not depend on
how many worker threads evaluated the blocks.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bp import BPConfig
from .channel import RNG_ALGORITHM, bpsk_modulate, sigma_from_ebn0, stream
from .gps import GPSSystem, decode_with_perm_lists, gps_decode_batch, lower_bound_batch

log = logging.getLogger(__name__)

STRATEGIES = ("identity", "random_perm", "gps_top1", "gps_topk", "bp_lower_bound")


class SimError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    strategy: str = "random_perm"
    snr_list_db: tuple = (2.0, 4.0, 6.0)
    kappa: int = 1
    min_error_words: int = 1000
    max_words: int = 1_000_000
    block_words: int = 1000
    bp: BPConfig = field(default_factory=BPConfig)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise SimError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.min_error_words < 1:
            raise SimError("min_error_words must be >= 1")
        if not self.snr_list_db:
            raise SimError("empty SNR list")
        if self.kappa < 1 or self.block_words < 1 or self.max_words < 1:
            raise SimError("kappa, block_words and max_words must be positive")

    @property
    def name(self) -> str:
        if self.strategy == "gps_topk":
            return f"gps_top{self.kappa}"
        return self.strategy


@dataclass
class SimRow:
    snr_db: float
    words: int
    bit_errors: int
    word_errors: int
    n: int
    wall_seconds: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.words * self.n) if self.words else float("nan")

    @property
    def fer(self) -> float:
        return self.word_errors / self.words if self.words else float("nan")

    @property
    def neglog10_ber(self) -> float:
        return float(-np.log10(self.ber)) if self.bit_errors else float("inf")


@dataclass
class SimReport:
    rows: list
    meta: dict

    COLUMNS = ("snr_db", "words", "bit_errors", "word_errors", "ber", "fer")

    @property
    def strategy(self) -> str:
        return self.meta["strategy"]

    def to_csv(self) -> str:
        """Deterministic CSV: ``# key=value`` metadata lines, then the table.
        Wall-clock times are kept out (see ``timing_csv``)."""
        buf = io.StringIO()
        for k in sorted(self.meta):
            buf.write(f"# {k}={self.meta[k]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(r.snr_db)), r.words, r.bit_errors, r.word_errors,
                        repr(r.ber), repr(r.fer)])
        return buf.getvalue()

    def timing_csv(self) -> str:
        lines = ["snr_db,words,wall_seconds"]
        lines += [f"{r.snr_db!r},{r.words},{r.wall_seconds:.3f}" for r in self.rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SimReport":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("# "):
                k, _, v = line[2:].partition("=")
                meta[k] = v
            elif line.strip():
                body.append(line)
        reader = csv.DictReader(body)
        n = int(meta.get("n", "0"))
        rows = []
        for rec in reader:
            row = SimRow(float(rec["snr_db"]), int(rec["words"]), int(rec["bit_errors"]),
                         int(rec["word_errors"]), n)
            if row.words and (repr(row.ber) != rec["ber"] or repr(row.fer) != rec["fer"]):
                raise SimError(f"ber/fer inconsistent with counters at {row.snr_db} dB")
            rows.append(row)
        if "strategy" not in meta:
            raise SimError("report lacks a strategy line")
        return cls(rows, meta)


def _snr_key(snr: float) -> int:
    return int(round((snr + 100.0) * 1000))


def simulate_block(cfg: SimConfig, system: GPSSystem, snr: float, block: int):
    """Decode one block; returns (bit_errors, word_errors) per word."""
    code = system.code
    rng = stream(cfg.seed, _snr_key(snr), block, 0)
    c = code.random_codewords(rng, cfg.block_words)
    sigma = float(sigma_from_ebn0(snr, code.rate))
    y = bpsk_modulate(c) + sigma * rng.standard_normal(c.shape)
    s = cfg.strategy
    if s == "identity":
        idx = np.full((cfg.block_words, 1), _identity_index(system))
        c_hat = decode_with_perm_lists(y, sigma, idx, system)
    elif s == "random_perm":
        prng = stream(cfg.seed, _snr_key(snr), block, 1)
        idx = prng.integers(0, len(system.perms), size=(cfg.block_words, 1))
        c_hat = decode_with_perm_lists(y, sigma, idx, system)
    elif s in ("gps_top1", "gps_topk"):
        if not system.trained:
            raise SimError(f"strategy {s} needs a trained GPS checkpoint")
        c_hat = gps_decode_batch(y, sigma, system, 1 if s == "gps_top1" else cfg.kappa)
    else:
        c_hat = lower_bound_batch(y, sigma, system)
    errs = (c_hat != c).sum(axis=1)
    return errs


def _identity_index(system: GPSSystem) -> int:
    n = system.code.n
    hits = np.nonzero((system.perm_rows == np.arange(n)).all(axis=1))[0]
    if hits.size == 0:
        raise SimError("identity permutation is not in the permutation list")
    return int(hits[0])


def run_ber(cfg: SimConfig, system: GPSSystem, per_word: dict | None = None) -> SimReport:
    """Simulate every SNR until ``min_error_words`` word errors or
    ``max_words`` words. ``per_word``, if given, receives the per-word bit
    error counts keyed by SNR (for paired comparisons)."""
    if cfg.strategy in ("gps_top1", "gps_topk") and not system.trained:
        raise SimError(f"strategy {cfg.strategy} needs a trained GPS checkpoint")
    n = system.code.n
    rows = []
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        for snr in cfg.snr_list_db:
            t0 = time.perf_counter()
            words = bits = werr = 0
            block = 0
            kept = []
            done = False
            while not done:
                wave = list(range(block, block + max(1, cfg.threads)))
                if pool is not None:
                    results = list(pool.map(lambda b: simulate_block(cfg, system, snr, b), wave))
                else:
                    results = [simulate_block(cfg, system, snr, b) for b in wave]
                for errs in results:
                    take = min(errs.size, cfg.max_words - words)
                    errs = errs[:take]
                    words += take
                    bits += int(errs.sum())
                    werr += int((errs > 0).sum())
                    kept.append(errs)
                    block += 1
                    if werr >= cfg.min_error_words or words >= cfg.max_words:
                        done = True
                        break
            rows.append(SimRow(float(snr), words, bits, werr, n, time.perf_counter() - t0))
            if per_word is not None:
                per_word[float(snr)] = np.concatenate(kept)
            log.info("%s %s %.2f dB: %d words, %d word errors, BER %.3e", system.code.label,
                     cfg.name, snr, words, werr, rows[-1].ber)
    finally:
        if pool is not None:
            pool.shutdown()
    meta = {
        "code": system.code.label, "n": n, "k": system.code.k, "strategy": cfg.name,
        "seed": cfg.seed, "rng": RNG_ALGORITHM, "block_words": cfg.block_words,
        "min_error_words": cfg.min_error_words, "max_words": cfg.max_words,
        "bp_iters": cfg.bp.max_iters, "bp_clip": cfg.bp.clip,
        "decoder": "WBP" if system.weights is not None else "BP",
    }
    if getattr(system, "checkpoint_hash", None):
        meta["checkpoint_sha256"] = system.checkpoint_hash
    return SimReport(rows, meta)


def compare_report(reports: list) -> tuple[str, str]:
    """Merge reports on the same code and SNR grid.

    Returns ``(csv_text, plot_text)``: one -log10(BER) column per strategy
    (sorted by name), and gnuplot-style blocks separated by blank lines.
    """
    if not reports:
        raise SimError("nothing to compare")
    code = reports[0].meta.get("code")
    grid = [r.snr_db for r in reports[0].rows]
    for rep in reports[1:]:
        if rep.meta.get("code") != code:
            raise SimError(f"code mismatch: {rep.meta.get('code')} vs {code}")
        if [r.snr_db for r in rep.rows] != grid:
            raise SimError("SNR grids differ")
    ordered = sorted(reports, key=lambda r: r.strategy)
    names = [r.strategy for r in ordered]
    if len(set(names)) != len(names):
        raise SimError("duplicate strategy names")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["snr_db"] + names)
    for i, snr in enumerate(grid):
        w.writerow([repr(snr)] + [repr(rep.rows[i].neglog10_ber) for rep in ordered])
    plot = io.StringIO()
    plot.write(f"# {code}: -log10(BER) vs Eb/N0 [dB]\n")
    for rep in ordered:
        plot.write(f"# {rep.strategy}\n")
        for row in rep.rows:
            plot.write(f"{row.snr_db!r} {row.neglog10_ber!r}\n")
        plot.write("\n\n")
    return buf.getvalue(), plot.getvalue()
