"""Single-head self-attention embedding of a code permutation.

Token i of the input sequence is ``U[pi(i)] + V[i]``: a learned row for the
coordinate the permutation sends there, plus a positional row initialised
from the Tanner-graph node embedding of variable i. One attention layer,
then mean pooling over the sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nn_core as nn
from .codes import Permutation, perm_matrix
from .formats import FormatError, dump_sections, parse_sections


@dataclass
class Perm2VecParams:
    U: nn.Param  # (n, d_w) token table, row j embeds coordinate value j
    V: nn.Param  # (n, d_w) positional table
    Q: nn.Param  # (d_w, d_p)
    K: nn.Param  # (d_w, d_p)
    Vp: nn.Param  # (d_w, d_p)

    NAMES = ("U", "V", "Q", "K", "Vp")

    @classmethod
    def init(cls, n: int, rng: np.random.Generator, d_w: int = 80, d_p: int = 80,
             positional: np.ndarray | None = None) -> "Perm2VecParams":
        if positional is None:
            positional = rng.uniform(-0.1, 0.1, size=(n, d_w))
        elif positional.shape != (n, d_w):
            raise ValueError(f"positional init {positional.shape} != {(n, d_w)}")
        U = rng.uniform(-0.1, 0.1, size=(n, d_w))
        proj = [nn.uniform_init(rng, (d_w, d_p), d_w) for _ in range(3)]
        return cls(nn.Param(U, "U"), nn.Param(np.array(positional, dtype=np.float64), "V"),
                   *(nn.Param(w, name) for w, name in zip(proj, ("Q", "K", "Vp"))))

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def d_w(self) -> int:
        return self.U.shape[1]

    @property
    def d_p(self) -> int:
        return self.Q.shape[1]

    def params(self) -> list[nn.Param]:
        return [getattr(self, k) for k in self.NAMES]

    def sections(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k).data for k in self.NAMES}

    @classmethod
    def from_sections(cls, sec: dict[str, np.ndarray]) -> "Perm2VecParams":
        return cls(*(nn.Param(np.array(sec[k], dtype=np.float64), k) for k in cls.NAMES))

    def dump_lines(self) -> list[str]:
        return ["PERM2VEC v1"] + dump_sections(self.sections())

    def dumps(self) -> str:
        return "\n".join(self.dump_lines()) + "\n"

    @classmethod
    def parse_lines(cls, lines: list[str]) -> tuple["Perm2VecParams", int]:
        if not lines or lines[0].strip() != "PERM2VEC v1":
            raise FormatError("not a PERM2VEC v1 block")
        sec, used = parse_sections(lines[1:], cls.NAMES)
        return cls.from_sections(sec), used + 1

    @classmethod
    def loads(cls, text: str) -> "Perm2VecParams":
        return cls.parse_lines(text.split("\n"))[0]


def attention(perm_rows, params: Perm2VecParams):
    """Forward pass for a batch of permutations (rows of index maps).

    Returns ``(q, a)``: pooled embeddings (P, d_p) and attention weights
    (P, n, n), both as graph tensors.
    """
    perm_rows = np.atleast_2d(np.asarray(perm_rows, dtype=np.int64))
    if perm_rows.shape[1] != params.n:
        raise ValueError(f"permutation length {perm_rows.shape[1]} != {params.n}")
    w = nn.add(nn.gather_rows(params.U, perm_rows), params.V)  # (P, n, d_w)
    qw = nn.matmul(w, params.Q)
    kw = nn.matmul(w, params.K)
    vw = nn.matmul(w, params.Vp)
    logits = nn.scale(nn.matmul(qw, nn.transpose(kw)), 1.0 / math.sqrt(params.d_p))
    a = nn.softmax(logits)
    out = nn.matmul(a, vw)  # (P, n, d_p)
    return nn.mean(out, axis=1), a


def embed_batch(perm_rows, params: Perm2VecParams) -> nn.Tensor:
    return attention(perm_rows, params)[0]


def embed(pi: Permutation, params: Perm2VecParams) -> np.ndarray:
    return embed_batch(pi.map[None, :], params).data[0].copy()


def embed_all(perms, params: Perm2VecParams, chunk: int = 512) -> np.ndarray:
    """Embedding table, row i for permutation i. Computed once for inference."""
    rows = perms if isinstance(perms, np.ndarray) else perm_matrix(perms)
    parts = [embed_batch(rows[i:i + chunk], params).data for i in range(0, rows.shape[0], chunk)]
    table = np.concatenate(parts)
    table.setflags(write=False)
    return table
