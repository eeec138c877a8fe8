"""Permutation-selected belief-propagation decoding of binary BCH codes."""

from .bp import BPConfig, EdgeWeights, decode, decode_batch, decode_permuted
from .codes import (GF2m, LinearCode, Permutation, bch_build, hard_decision, is_automorphism,
                    pg_enumerate, permute, read_alist, syndrome, systematic_form, unpermute,
                    write_alist)
from .gps import GPSSystem, TrainConfig, decode_gps, list_decode_topk, train
from .harness import SimConfig, SimReport, compare_report, run_ber
from .pipeline import trained_system
from .tanner import TannerGraph, count_4cycles_per_vnode

__version__ = "0.1.0"
