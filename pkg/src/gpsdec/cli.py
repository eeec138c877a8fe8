"""Command line entry point: ``gpsdec <command> [options]``."""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

from .bp import BPConfig, EdgeWeights
from .channel import LabelStarvation
from .codes import CodeError, bch_build, gf2_rank, pg_enumerate, read_alist, write_alist
from .config import ConfigError, load_config, parse_float_list
from .formats import FormatError
from .gps import GPSSystem, TrainConfig, TrainingDiverged, history_csv, load_checkpoint, train
from .harness import SimConfig, SimError, SimReport, compare_report, run_ber
from .node_embed import (WalkConfig, load_embeddings, node2vec, save_embeddings,
                         variable_node_rows)
from .tanner import TannerGraph, count_4cycles_per_vnode, cycle_stats_csv, total_4cycles

log = logging.getLogger("gpsdec")

DEFAULTS = {
    "seed": 0, "threads": 1,
    "strategy": "random_perm", "kappa": 1, "snr_list": "2,4,6", "min_error_words": 1000,
    "max_words": 1_000_000, "block_words": 1000, "bp_iters": 5, "bp_clip": 20.0,
    "lr": 1e-3, "batch_size": 256, "num_batches": 20000, "snr_min": 1.0, "snr_max": 7.0,
    "d_p": 80, "heldout_size": 1024, "log_every": 200, "checkpoint_every": 1000,
    "num_walks": 2000, "walk_length": 10, "window": 10, "p": 1.0, "q": 1.0, "dim": 80,
    "negatives": 5, "epochs": 5, "sg_lr": 0.025, "batch_pairs": 1024,
}

TYPES = {k: type(v) for k, v in DEFAULTS.items()}


class Settings:
    """CLI flag, else config-file entry, else built-in default."""

    def __init__(self, args, file_cfg):
        self.args, self.file_cfg = args, file_cfg

    def get(self, key, default=None):
        v = getattr(self.args, key, None)
        if v is not None:
            return v
        if key in self.file_cfg:
            raw = self.file_cfg[key]
            typ = TYPES.get(key, str)
            try:
                return typ(float(raw)) if typ is int else typ(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        return DEFAULTS.get(key, default)

    def require(self, key):
        v = self.get(key)
        if v is None:
            raise ConfigError(f"missing required setting --{key.replace('_', '-')}")
        return v


def _code(st: Settings):
    code = bch_build(int(st.require("n")), int(st.require("k")))
    alist = st.get("alist")
    if alist:
        code = code.with_parity_check(read_alist(Path(alist)), f"{code.label}[{Path(alist).name}]")
    return code


def _bp(st: Settings) -> BPConfig:
    return BPConfig(max_iters=int(st.get("bp_iters")), clip=float(st.get("bp_clip")))


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_build_code(st, args):
    code = _code(st)
    m = code.meta
    print(f"{code.label}: n={code.n} k={code.k} t={m['t']} rate={code.rate:.4f}")
    print(f"generator_poly=0x{m['generator_poly']:x} primitive_poly=0x{m['primitive_poly']:x}")
    print(f"rank(G)={gf2_rank(code.G)} rank(H)={gf2_rank(code.H)} "
          f"|PG|={len(pg_enumerate(code.n))}")
    if args.out:
        write_alist(code.H, args.out)


def cmd_export_alist(st, args):
    _write(args.out, write_alist(_code(st).H))


def cmd_import_alist(st, args):
    H = read_alist(Path(args.file))
    g = TannerGraph(H)
    print(f"n={g.n_var} checks={g.n_check} rank={gf2_rank(H)} edges={g.n_edges} "
          f"4-cycles={total_4cycles(g)}")
    if st.get("n") is not None and st.get("k") is not None:
        code = bch_build(int(st.get("n")), int(st.get("k")))
        code.with_parity_check(H)
        print(f"matrix defines {code.label}")


def cmd_cycle_stats(st, args):
    code = _code(st)
    counts = count_4cycles_per_vnode(TannerGraph(code.H))
    norm = args.normalizer if args.normalizer is not None else float(max(counts.max(), 1))
    _write(args.out, cycle_stats_csv(counts, norm))


def _walk_cfg(st) -> WalkConfig:
    return WalkConfig(num_walks_per_node=int(st.get("num_walks")),
                      walk_length=int(st.get("walk_length")), window=int(st.get("window")),
                      p=float(st.get("p")), q=float(st.get("q")), dim=int(st.get("dim")),
                      negatives=int(st.get("negatives")), epochs=int(st.get("epochs")),
                      lr=float(st.get("sg_lr")), batch_pairs=int(st.get("batch_pairs")))


def cmd_train_embed(st, args):
    code = _code(st)
    emb = node2vec(TannerGraph(code.H), _walk_cfg(st), seed=int(st.get("seed")))
    save_embeddings(emb, args.out)


def cmd_train_gps(st, args):
    code = _code(st)
    graph = TannerGraph(code.H)
    positional = None
    if st.get("embed"):
        positional = variable_node_rows(load_embeddings(st.get("embed")), graph)
    weights = EdgeWeights.load(st.get("weights")) if st.get("weights") else None
    cfg = TrainConfig(lr=float(st.get("lr")), batch_size=int(st.get("batch_size")),
                      num_batches=int(st.get("num_batches")),
                      snr_range_db=(float(st.get("snr_min")), float(st.get("snr_max"))),
                      seed=int(st.get("seed")), d_p=int(st.get("d_p")),
                      heldout_size=int(st.get("heldout_size")), log_every=int(st.get("log_every")),
                      checkpoint_every=int(st.get("checkpoint_every")))
    history = []
    try:
        train(code, pg_enumerate(code.n), cfg, positional, _bp(st), weights, graph,
              checkpoint_path=args.out, history=history)
    finally:
        if args.log:
            Path(args.log).write_text(history_csv(history))


def cmd_simulate(st, args):
    code = _code(st)
    weights = EdgeWeights.load(st.get("weights")) if st.get("weights") else None
    p2v = cp = None
    digest = ""
    if st.get("checkpoint"):
        text = Path(st.get("checkpoint")).read_text()
        digest = hashlib.sha256(text.encode()).hexdigest()
        p2v, cp = load_checkpoint(st.get("checkpoint"))
    system = GPSSystem(code, pg_enumerate(code.n), p2v, cp, _bp(st), weights,
                       checkpoint_hash=digest)
    strategy = st.get("strategy")
    kappa = int(st.get("kappa"))
    if strategy.startswith("gps_top") and strategy not in ("gps_top1", "gps_topk"):
        kappa = int(strategy[len("gps_top"):])
        strategy = "gps_topk"
    cfg = SimConfig(strategy=strategy, snr_list_db=parse_float_list(str(st.get("snr_list"))),
                    kappa=kappa, min_error_words=int(st.get("min_error_words")),
                    max_words=int(st.get("max_words")), block_words=int(st.get("block_words")),
                    bp=_bp(st), seed=int(st.get("seed")), threads=int(st.get("threads")))
    report = run_ber(cfg, system)
    _write(args.out, report.to_csv())
    if args.timing:
        Path(args.timing).write_text(report.timing_csv())


def cmd_compare(st, args):
    reports = [SimReport.from_csv(Path(p).read_text()) for p in args.reports]
    table, plot = compare_report(reports)
    _write(args.out, table)
    if args.plot:
        Path(args.plot).write_text(plot)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpsdec", description=__doc__)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--config", help="flat key = value settings file")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def code_opts(p):
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--alist", help="use this parity-check matrix instead of the systematic one")

    p = sub.add_parser("build-code", help="construct a BCH code and print its parameters")
    code_opts(p)
    p.add_argument("--out", help="also write H as alist")
    p.set_defaults(func=cmd_build_code)

    p = sub.add_parser("export-alist", help="write the systematic H as alist")
    code_opts(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_export_alist)

    p = sub.add_parser("import-alist", help="read an alist matrix and report on it")
    p.add_argument("--file", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_import_alist)

    p = sub.add_parser("cycle-stats", help="per-variable length-4 cycle counts as CSV")
    code_opts(p)
    p.add_argument("--normalizer", type=float)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_cycle_stats)

    p = sub.add_parser("train-embed", help="node2vec embedding of the Tanner graph")
    code_opts(p)
    for key in ("num_walks", "walk_length", "window", "dim", "negatives", "epochs", "batch_pairs"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=int)
    for key in ("p", "q", "sg_lr"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_embed)

    p = sub.add_parser("train-gps", help="jointly train perm2vec and the classifier")
    code_opts(p)
    p.add_argument("--embed", help="NODE2VEC v1 file for the positional init")
    p.add_argument("--weights", help="WBP v1 edge weights for the labelling decoder")
    for key in ("batch_size", "num_batches", "d_p", "heldout_size", "log_every",
                "checkpoint_every", "bp_iters"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=int)
    for key in ("lr", "snr_min", "snr_max"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=float)
    p.add_argument("--out", required=True, help="GPS v1 checkpoint path")
    p.add_argument("--log", help="training log CSV (batch,loss,heldout_loss)")
    p.set_defaults(func=cmd_train_gps)

    p = sub.add_parser("simulate", help="Monte Carlo BER/FER for one strategy")
    code_opts(p)
    p.add_argument("--strategy", help="identity, random_perm, gps_top1, gps_topk, gps_top<K>, "
                                      "bp_lower_bound")
    p.add_argument("--snr", dest="snr_list", help="comma separated Eb/N0 values in dB")
    for key in ("kappa", "min_error_words", "max_words", "block_words", "bp_iters"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=int)
    p.add_argument("--checkpoint")
    p.add_argument("--weights")
    p.add_argument("--out", default="-")
    p.add_argument("--timing", help="write wall-clock seconds per SNR here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="merge reports into one table and plot data")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", default="-")
    p.add_argument("--plot")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        file_cfg = load_config(args.config) if args.config else {}
        args.func(Settings(args, file_cfg), args)
    except (CodeError, ConfigError, FormatError, SimError, LabelStarvation, TrainingDiverged,
            ValueError, OSError, RuntimeError) as exc:
        print(f"gpsdec: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
