"""Brute-force reference computations shared by the unit and acceptance tests."""

import itertools

import numpy as np

from gpsdec.codes import nullspace


def brute_4cycles(H) -> np.ndarray:
    """Per-variable 4-cycle counts by enumerating every (c1, c2, v1, v2) rectangle."""
    H = np.asarray(H)
    m, n = H.shape
    counts = np.zeros(n, dtype=np.int64)
    for c1, c2 in itertools.combinations(range(m), 2):
        for v1, v2 in itertools.combinations(range(n), 2):
            if H[c1, v1] and H[c1, v2] and H[c2, v1] and H[c2, v2]:
                counts[v1] += 1
                counts[v2] += 1
    return counts


def codebook(H) -> np.ndarray:
    """Every word c with H c = 0, by enumerating the null space."""
    N = nullspace(H).astype(np.int64)
    k = N.shape[0]
    msgs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int64).reshape(-1, k)
    return (msgs @ N % 2).astype(np.uint8)


def map_marginals(H, llr) -> np.ndarray:
    """Exact bitwise a-posteriori LLRs log P(c_i=0|y)/P(c_i=1|y) over the codebook."""
    words = codebook(H)
    logp = ((1.0 - 2.0 * words) * np.asarray(llr) / 2.0).sum(axis=1)
    logp -= logp.max()
    w = np.exp(logp)
    p1 = (w[:, None] * words).sum(axis=0)
    p0 = w.sum() - p1
    return np.log(p0) - np.log(p1)


def tree_H(rng, n_var, n_check) -> np.ndarray:
    """Random tree-structured H (n_var > n_check) where every check has degree >= 2.

    Check 0 starts the tree with its own variables; each later check joins
    one existing variable and brings at least one new one, so the Tanner
    graph is connected and acyclic. Columns are shuffled at the end.
    """
    if n_var <= n_check:
        raise ValueError("a tree with check degrees >= 2 needs n_var > n_check")
    new = np.ones(n_check, dtype=int)
    new[0] += 1
    extra = rng.multinomial(n_var - new.sum(), np.ones(n_check) / n_check)
    new += extra
    H = np.zeros((n_check, n_var), dtype=np.uint8)
    nv = 0
    for c in range(n_check):
        if c:
            H[c, rng.integers(nv)] = 1
        H[c, nv:nv + new[c]] = 1
        nv += new[c]
    return H[:, rng.permutation(n_var)]


def full_loss_instance(seed, d_p=4, batch=6):
    """A random small GPS loss over BCH(7,4): returns (loss_fn, params)."""
    from gpsdec.codes import bch_build, perm_matrix, pg_enumerate
    from gpsdec.gps import ClassifierParams, batch_loss
    from gpsdec.perm2vec import Perm2VecParams

    r = np.random.default_rng(seed)
    code = bch_build(7, 4)
    rows = perm_matrix(pg_enumerate(7))
    p2v = Perm2VecParams.init(7, r, d_w=d_p, d_p=d_p, positional=r.normal(size=(7, d_p)))
    cp = ClassifierParams.init(7, 4, r, d_p=d_p)
    for p in cp.params():  # move biases off zero so every path is exercised
        p.data += r.normal(scale=0.1, size=p.shape)
    llr = r.normal(2.0, 2.5, size=(batch, 7))
    idx = r.integers(0, rows.shape[0], size=batch)
    labels = np.arange(batch) % 2

    def f():
        return batch_loss(llr, idx, labels, rows, code.H, p2v, cp)

    return f, p2v.params() + cp.params()
