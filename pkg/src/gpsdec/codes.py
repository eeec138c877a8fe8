"""Binary linear codes: GF(2^m) arithmetic, BCH construction, parity-check
algebra, and the affine permutation group of primitive BCH codes.

Binary matrices and words are plain ``numpy.uint8`` arrays holding 0/1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# bit i of the mask is the coefficient of x^i
PRIMITIVE_POLYS = {
    2: 0b111,  # x^2 + x + 1
    3: 0b1011,  # x^3 + x + 1
    4: 0b10011,  # x^4 + x + 1
    5: 0b100101,  # x^5 + x^2 + 1
    6: 0b1000011,  # x^6 + x + 1
    7: 0b10001001,  # x^7 + x^3 + 1
    8: 0b100011101,  # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b1000010001,  # x^9 + x^4 + 1
    10: 0b10000001001,  # x^10 + x^3 + 1
}


class CodeError(ValueError):
    """Raised for malformed codes, matrices or permutations."""


def _poly_str(mask: int) -> str:
    terms = []
    for i in reversed(range(mask.bit_length())):
        if mask >> i & 1:
            terms.append("1" if i == 0 else ("x" if i == 1 else f"x^{i}"))
    return " + ".join(terms) or "0"


class GF2m:
    """GF(2^m) with log/antilog tables built from a primitive polynomial."""

    def __init__(self, m: int, primitive_poly: int | None = None):
        if m < 2 or m > 16:
            raise CodeError(f"unsupported extension degree m={m}")
        if primitive_poly is None:
            if m not in PRIMITIVE_POLYS:
                raise CodeError(f"no default primitive polynomial for m={m}")
            primitive_poly = PRIMITIVE_POLYS[m]
        if primitive_poly.bit_length() != m + 1:
            raise CodeError(f"polynomial {_poly_str(primitive_poly)} is not of degree {m}")
        self.m = m
        self.primitive_poly = primitive_poly
        self.order = (1 << m) - 1
        self.antilog = np.zeros(self.order, dtype=np.int64)
        self.log = np.full(1 << m, -1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            if self.log[x] != -1:
                raise CodeError(
                    f"{_poly_str(primitive_poly)} is not primitive: alpha has order {i}"
                )
            self.antilog[i] = x
            self.log[x] = i
            x <<= 1
            if x >> m:
                x ^= primitive_poly
        if x != 1:
            raise CodeError(f"{_poly_str(primitive_poly)} is not primitive")

    def __repr__(self):
        return f"GF2m(m={self.m}, poly={_poly_str(self.primitive_poly)})"

    def alpha_pow(self, e: int) -> int:
        return int(self.antilog[e % self.order])

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.antilog[(self.log[a] + self.log[b]) % self.order])

    def cyclotomic_coset(self, i: int) -> list[int]:
        coset, j = [], i % self.order
        while j not in coset:
            coset.append(j)
            j = (2 * j) % self.order
        return coset

    def minimal_poly(self, i: int) -> int:
        """Minimal polynomial of alpha^i over GF(2), as a bitmask."""
        # coefficients in GF(2^m), lowest degree first
        coeffs = [1]
        for j in self.cyclotomic_coset(i):
            root = self.alpha_pow(j)
            nxt = [0] * (len(coeffs) + 1)
            for d, c in enumerate(coeffs):
                nxt[d + 1] ^= c
                nxt[d] ^= self.mul(c, root)
            coeffs = nxt
        mask = 0
        for d, c in enumerate(coeffs):
            if c not in (0, 1):
                raise CodeError(f"minimal polynomial of alpha^{i} not binary")
            mask |= c << d
        return mask


def gf2_polymul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def bch_generator_poly(field: GF2m, t: int) -> int:
    g, seen = 1, set()
    for i in range(1, 2 * t + 1):
        rep = min(field.cyclotomic_coset(i))
        if rep in seen:
            continue
        seen.add(rep)
        g = gf2_polymul(g, field.minimal_poly(i))
    return g


# ---------------------------------------------------------------- GF(2) algebra


def as_bits(a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise CodeError("binary matrix expected (entries 0/1)")
    return arr.astype(np.uint8)


def gf2_rank(A) -> int:
    M = as_bits(A).copy()
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        piv = np.nonzero(M[r:, c])[0]
        if piv.size == 0:
            continue
        p = r + piv[0]
        M[[r, p]] = M[[p, r]]
        hits = np.nonzero(M[:, c])[0]
        hits = hits[hits != r]
        M[hits] ^= M[r]
        r += 1
        if r == rows:
            break
    return r


def systematic_form(H) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jordan over GF(2) putting an identity block in the last
    ``rows`` columns.

    Returns ``(H_sys, colperm)`` where ``H_sys[:, j]`` is column ``colperm[j]``
    of the row-reduced input. ``colperm`` is the identity whenever the last
    columns of ``H`` are already independent.
    """
    M = as_bits(H).copy()
    m, n = M.shape
    colperm = np.arange(n)
    for r in range(m):
        target = n - m + r
        piv = np.nonzero(M[r:, target])[0]
        if piv.size == 0:
            # borrow a column from the left block that has a pivot at or below r
            cand = [c for c in range(n - m) if M[r:, c].any()]
            if not cand:
                raise CodeError("parity-check matrix is rank deficient")
            c = cand[0]
            M[:, [c, target]] = M[:, [target, c]]
            colperm[[c, target]] = colperm[[target, c]]
            piv = np.nonzero(M[r:, target])[0]
        p = r + piv[0]
        if p != r:
            M[[r, p]] = M[[p, r]]
        hits = np.nonzero(M[:, target])[0]
        hits = hits[hits != r]
        M[hits] ^= M[r]
    return M, colperm


def nullspace(A) -> np.ndarray:
    """Basis (as rows) of the GF(2) right null space of ``A``."""
    M = as_bits(A).copy()
    rows, cols = M.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = np.nonzero(M[r:, c])[0]
        if piv.size == 0:
            continue
        p = r + piv[0]
        M[[r, p]] = M[[p, r]]
        hits = np.nonzero(M[:, c])[0]
        hits = hits[hits != r]
        M[hits] ^= M[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for j, pc in enumerate(pivots):
            basis[i, pc] = M[j, f]
    return basis


def syndrome(H, c_hat) -> np.ndarray:
    """``H @ c_hat mod 2``. Accepts one word or a batch of words (rows)."""
    Hf = np.asarray(H, dtype=np.float64)
    c = np.asarray(c_hat, dtype=np.float64)
    return (np.rint(c @ Hf.T).astype(np.int64) & 1).astype(np.uint8)


def hard_decision(y) -> np.ndarray:
    """Bit 1 where y < 0; a tie at exactly 0 maps to bit 0."""
    return (np.asarray(y) < 0).astype(np.uint8)


# ---------------------------------------------------------------- codes


@dataclass(frozen=True, eq=False)
class LinearCode:
    n: int
    k: int
    G: np.ndarray
    H: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.G.shape != (self.k, self.n) or self.H.shape[1] != self.n:
            raise CodeError(f"inconsistent shapes G{self.G.shape} H{self.H.shape}")
        if np.any(syndrome(self.H, self.G)):
            raise CodeError("G H^T != 0")

    @property
    def rate(self) -> float:
        return self.k / self.n

    def encode(self, msg) -> np.ndarray:
        """``c = G^T m``; works on a single message or a batch of rows."""
        m = np.asarray(msg, dtype=np.float64)
        return (np.rint(m @ self.G.astype(np.float64)).astype(np.int64) & 1).astype(np.uint8)

    def random_codewords(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.encode(rng.integers(0, 2, size=(count, self.k)))

    def all_codewords(self) -> np.ndarray:
        if self.k > 20:
            raise CodeError(f"refusing to enumerate 2^{self.k} codewords")
        msgs = (np.arange(1 << self.k)[:, None] >> np.arange(self.k)) & 1
        return self.encode(msgs)

    def with_parity_check(self, H, label: str | None = None) -> "LinearCode":
        """Same code described by another parity-check matrix (e.g. one loaded from alist)."""
        H = as_bits(H)
        if H.shape[1] != self.n or np.any(syndrome(H, self.G)) or gf2_rank(H) != self.n - self.k:
            raise CodeError("matrix does not define this code")
        return LinearCode(self.n, self.k, self.G, H, label or self.label, dict(self.meta))


def code_from_parity_check(H, label: str = "") -> LinearCode:
    H = as_bits(H)
    rank = gf2_rank(H)
    n = H.shape[1]
    G = nullspace(H)
    if G.shape[0] != n - rank:
        raise CodeError("null space dimension mismatch")
    return LinearCode(n, G.shape[0], G, H, label)


def bch_build(n: int, k: int, field: GF2m | None = None) -> LinearCode:
    """Narrow-sense primitive binary BCH code in systematic form.

    Coordinate i carries the coefficient of x^i, so cyclic shifts and the
    Frobenius map i -> 2i act directly on positions. ``G = [I_k | P]`` with
    the message in the first k positions and ``H = [P^T | I_{n-k}]``.
    """
    m = (n + 1).bit_length() - 1
    if (1 << m) - 1 != n:
        raise CodeError(f"n={n} is not of the form 2^m - 1")
    if field is None:
        field = GF2m(m)
    elif field.m != m:
        raise CodeError(f"field degree {field.m} does not match n={n}")

    best = None
    for t in range(1, n // 2 + 1):
        g = bch_generator_poly(field, t)
        dim = n - (g.bit_length() - 1)
        if dim == k:
            best = (t, g)
        elif dim < k:
            break
    if best is None:
        raise CodeError(f"no narrow-sense BCH code with (n, k) = ({n}, {k})")
    t, g = best
    r = n - k

    # message in positions 0..k-1 of c(x) = m(x) g(x), then reduce to [I | P]
    gbits = np.array([(g >> i) & 1 for i in range(r + 1)], dtype=np.uint8)
    G0 = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        G0[i, i:i + r + 1] = gbits
    G = G0.copy()
    # G0 is upper triangular with unit diagonal in the first k columns
    for c in range(k - 1, -1, -1):
        hits = np.nonzero(G[:c, c])[0]
        G[hits] ^= G[c]
    P = G[:, k:]
    H = np.concatenate([P.T, np.eye(r, dtype=np.uint8)], axis=1)
    label = f"BCH({n},{k})"
    meta = {"t": t, "generator_poly": g, "primitive_poly": field.primitive_poly, "m": m}
    return LinearCode(n, k, G, H, label, meta)


# ---------------------------------------------------------------- permutations


class Permutation:
    """Coordinate permutation with ``apply(v)[i] = v[map[i]]``."""

    __slots__ = ("map",)

    def __init__(self, mapping: Sequence[int]):
        arr = np.asarray(mapping, dtype=np.int64)
        if arr.ndim != 1 or not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise CodeError("not a permutation")
        arr.setflags(write=False)
        self.map = arr

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    def __len__(self):
        return self.map.size

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.map, other.map)

    def __hash__(self):
        return hash(self.map.tobytes())

    def __repr__(self):
        return f"Permutation({self.map.tolist()})"

    def is_identity(self) -> bool:
        return bool((self.map == np.arange(self.map.size)).all())

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self.map)
        inv[self.map] = np.arange(self.map.size)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """Permutation equal to applying ``other`` first, then ``self``."""
        return Permutation(other.map[self.map])

    def apply(self, v):
        return permute(self, v)


def permute(p: Permutation, v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != p.map.size:
        raise CodeError(f"length {v.shape[-1]} does not match permutation of {p.map.size}")
    return v[..., p.map]


def unpermute(p: Permutation, v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != p.map.size:
        raise CodeError(f"length {v.shape[-1]} does not match permutation of {p.map.size}")
    out = np.empty_like(v)
    out[..., p.map] = v
    return out


def pg_enumerate(n: int) -> list[Permutation]:
    """All ``i -> (2^a i + b) mod n`` for a in 1..log2(n+1), b in 1..n.

    Index ``(a - 1) * n + (b - 1)``; the last entry is the identity.
    """
    m = (n + 1).bit_length() - 1
    if n < 1 or (1 << m) - 1 != n:
        raise CodeError(f"n={n}: n+1 is not a power of two")
    i = np.arange(n)
    return [Permutation(((1 << a) * i + b) % n) for a in range(1, m + 1) for b in range(1, n + 1)]


def pg_params(index: int, n: int) -> tuple[int, int]:
    return index // n + 1, index % n + 1


def perm_matrix(perms: Iterable[Permutation]) -> np.ndarray:
    return np.stack([p.map for p in perms])


def is_automorphism(code: LinearCode, p: Permutation, trials: int = 100,
                    rng: np.random.Generator | None = None) -> bool:
    """True iff permuted codewords stay in the code.

    Exhaustive when 2^k <= 2^16, otherwise checked on ``trials`` random
    codewords (plus the generator rows, which makes it exact in practice).
    """
    if len(p) != code.n:
        return False
    if code.k <= 16:
        words = code.all_codewords()
    else:
        rng = rng or np.random.default_rng(0)
        words = np.concatenate([code.G, code.random_codewords(rng, trials)])
    return not np.any(syndrome(code.H, permute(p, words)))


# ---------------------------------------------------------------- alist


def write_alist(H, path=None) -> str:
    """MacKay alist text; 1-based indices, rows zero-padded to the max degree."""
    H = as_bits(H)
    m, n = H.shape
    col_deg = H.sum(axis=0).astype(int)
    row_deg = H.sum(axis=1).astype(int)
    max_c = int(col_deg.max(initial=0))
    max_r = int(row_deg.max(initial=0))
    lines = [f"{n} {m}", f"{max_c} {max_r}",
             " ".join(map(str, col_deg)), " ".join(map(str, row_deg))]
    for j in range(n):
        idx = list(np.nonzero(H[:, j])[0] + 1) + [0] * (max_c - col_deg[j])
        lines.append(" ".join(map(str, idx)))
    for i in range(m):
        idx = list(np.nonzero(H[i])[0] + 1) + [0] * (max_r - row_deg[i])
        lines.append(" ".join(map(str, idx)))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_alist(source) -> np.ndarray:
    """Parse alist from a path or from the text itself."""
    if isinstance(source, Path) or (isinstance(source, str) and source and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    tok = [int(t) for t in text.split()]
    try:
        n, m, max_c, max_r = tok[:4]
        pos = 4
        col_deg = tok[pos:pos + n]
        pos += n
        row_deg = tok[pos:pos + m]
        pos += m
        H = np.zeros((m, n), dtype=np.uint8)
        for j in range(n):
            idx = tok[pos:pos + max_c]
            pos += max_c
            rows = [i for i in idx if i != 0]
            if len(rows) != col_deg[j]:
                raise CodeError(f"column {j}: degree {col_deg[j]} but {len(rows)} entries")
            H[np.array(rows, dtype=int) - 1, j] = 1
        for i in range(m):
            idx = tok[pos:pos + max_r]
            pos += max_r
            cols = [j for j in idx if j != 0]
            if len(cols) != row_deg[i] or not np.array_equal(
                    np.nonzero(H[i])[0], np.array(sorted(cols), dtype=int) - 1):
                raise CodeError(f"row {i} disagrees with the column lists")
    except (ValueError, IndexError) as exc:
        raise CodeError(f"malformed alist: {exc}") from exc
    return H
