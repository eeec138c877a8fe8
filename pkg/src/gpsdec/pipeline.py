"""End-to-end training of a GPS model for one code, with on-disk caching.

Artifacts live in one directory per (code, seeds, sizes) and are reused
when present: ``node2vec.txt`` (NODE2VEC v1), ``gps.txt`` (GPS v1) and
``train_log.csv``.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict
from pathlib import Path

from .bp import BPConfig
from .codes import LinearCode, pg_enumerate
from .gps import GPSSystem, TrainConfig, history_csv, load_checkpoint, train
from .node_embed import (WalkConfig, load_embeddings, node2vec, save_embeddings,
                         variable_node_rows)
from .tanner import TannerGraph

log = logging.getLogger(__name__)


def artifact_dir(root, code: LinearCode, walk: WalkConfig, cfg: TrainConfig) -> Path:
    tag = (f"{code.n}_{code.k}_seed{cfg.seed}_K{cfg.batch_size}_B{cfg.num_batches}"
           f"_d{cfg.d_p}_walks{walk.num_walks_per_node}_ep{walk.epochs}")
    return Path(root) / tag


def trained_system(code: LinearCode, root, walk: WalkConfig = WalkConfig(),
                   cfg: TrainConfig = TrainConfig(), bp: BPConfig = BPConfig(),
                   retrain: bool = False) -> GPSSystem:
    out = artifact_dir(root, code, walk, cfg)
    out.mkdir(parents=True, exist_ok=True)
    graph = TannerGraph(code.H)
    perms = pg_enumerate(code.n)
    emb_path, ckpt_path = out / "node2vec.txt", out / "gps.txt"
    if retrain or not emb_path.exists():
        log.info("node2vec for %s -> %s", code.label, emb_path)
        save_embeddings(node2vec(graph, walk, seed=cfg.seed), emb_path)
    if retrain or not ckpt_path.exists():
        positional = variable_node_rows(load_embeddings(emb_path), graph)
        history = []
        (out / "config.txt").write_text(
            "".join(f"{k} = {v}\n" for k, v in {**asdict(walk), **asdict(cfg)}.items()))
        tmp = out / "gps.partial.txt"
        train(code, perms, cfg, positional, bp, graph=graph, checkpoint_path=tmp,
              history=history)
        (out / "train_log.csv").write_text(history_csv(history))
        tmp.rename(ckpt_path)
    p2v, cp = load_checkpoint(ckpt_path)
    digest = hashlib.sha256(ckpt_path.read_bytes()).hexdigest()
    return GPSSystem(code, perms, p2v, cp, bp, graph=graph, checkpoint_hash=digest)
