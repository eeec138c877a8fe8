"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored. Keys are the CLI option names
with dashes or underscores, e.g.::

    n = 31
    k = 16
    snr_list = 2, 4, 6
    min_error_words = 1000
    num_batches = 20000
"""

from __future__ import annotations

from pathlib import Path

KNOWN_KEYS = {
    # code
    "n", "k", "alist",
    # simulation
    "strategy", "kappa", "snr_list", "min_error_words", "max_words", "block_words",
    "bp_iters", "bp_clip", "checkpoint", "weights",
    # training
    "lr", "batch_size", "num_batches", "snr_min", "snr_max", "d_p", "heldout_size",
    "log_every", "checkpoint_every", "embed",
    # node2vec
    "num_walks", "walk_length", "window", "p", "q", "dim", "negatives", "epochs", "sg_lr",
    "batch_pairs",
    # global
    "seed", "threads",
}


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text())


def parse_float_list(value: str) -> tuple[float, ...]:
    return tuple(float(t) for t in value.replace(",", " ").split())
