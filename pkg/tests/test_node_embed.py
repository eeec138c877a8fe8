import numpy as np
import pytest

from gpsdec import nn_core as nn
from gpsdec.channel import stream
from gpsdec.node_embed import (SkipGram, WalkConfig, biased_walks, context_pairs,
                               dumps_embeddings, load_embeddings, loads_embeddings, node2vec,
                               save_embeddings, transition_weights, variable_node_rows)
from gpsdec.tanner import TannerGraph

# checks 0 and 1 share variables 1 and 2; variable 0 hangs off check 0 only
H_SMALL = np.array([[1, 1, 1, 0], [0, 1, 1, 1]])


def test_transition_weights_p_q():
    g = TannerGraph(H_SMALL)
    # variables 0..3, checks 4, 5. Walk came 1 -> 4; neighbours of 4 are 0, 1, 2.
    w = transition_weights(g, prev=1, cur=4, p=0.5, q=4.0)
    # return to 1: 1/p; 0 and 2 are at distance 2 from 1 (bipartite): 1/q
    assert w == {0: 0.25, 1: 2.0, 2: 0.25}


def test_walks_follow_edges_and_start_everywhere():
    g = TannerGraph(H_SMALL)
    cfg = WalkConfig(num_walks_per_node=7, walk_length=6, p=0.5, q=2.0)
    walks = biased_walks(g, cfg, stream(0))
    assert walks.shape == (6 * 7, 6)
    assert np.array_equal(np.bincount(walks[:, 0]), np.full(6, 7))
    adj = {(a, b) for a, nb in enumerate(g.neighbors()) for b in nb}
    for row in walks:
        assert all((int(a), int(b)) in adj for a, b in zip(row[:-1], row[1:]))


def test_empirical_transition_frequencies():
    g = TannerGraph(H_SMALL)
    cfg = WalkConfig(num_walks_per_node=40000, walk_length=3, p=0.5, q=4.0)
    walks = biased_walks(g, cfg, stream(1))
    sel = walks[(walks[:, 0] == 1) & (walks[:, 1] == 4)]
    w = transition_weights(g, 1, 4, 0.5, 4.0)
    total = sum(w.values())
    for x, wx in w.items():
        expect = wx / total
        got = (sel[:, 2] == x).mean()
        assert abs(got - expect) < 4 * np.sqrt(expect * (1 - expect) / len(sel))


def test_context_pairs_count():
    walks = np.arange(12).reshape(2, 6)
    pairs = context_pairs(walks, 2)
    # per walk: 2 * ((6-1) + (6-2)) ordered pairs
    assert pairs.shape == (2 * 2 * 9, 2)
    assert {(0, 2), (2, 0), (0, 1)} <= set(map(tuple, pairs.tolist()))
    assert (0, 3) not in set(map(tuple, pairs.tolist()))


def test_skipgram_gradient():
    r = np.random.default_rng(0)
    model = SkipGram(6, 4, r)
    model.out.data[:] = r.normal(size=(6, 4))
    c, x = np.array([0, 3, 3]), np.array([1, 2, 5])
    negs = r.integers(0, 6, size=(3, 2))
    assert nn.grad_check(lambda: model.loss(c, x, negs), [model.inp, model.out]) < 1e-7


def test_two_components_separate():
    # block-diagonal H: two disconnected Tanner graphs
    H = np.zeros((4, 8), dtype=np.uint8)
    H[:2, :4] = [[1, 1, 1, 0], [0, 1, 1, 1]]
    H[2:, 4:] = [[1, 1, 1, 0], [0, 1, 1, 1]]
    g = TannerGraph(H)
    cfg = WalkConfig(num_walks_per_node=1000, walk_length=8, window=4, dim=16, epochs=5)
    hist = []
    emb = node2vec(g, cfg, seed=0, history=hist)
    assert hist[-1] < hist[0]
    e = emb / np.linalg.norm(emb, axis=1, keepdims=True)
    sim = e @ e.T
    comp = np.array([0] * 4 + [1] * 4 + [0] * 2 + [1] * 2)
    same = comp[:, None] == comp[None, :]
    off = ~np.eye(12, dtype=bool)
    assert sim[same & off].mean() > sim[~same].mean() + 0.5


def test_node2vec_deterministic(bch7):
    g = TannerGraph(bch7.H)
    cfg = WalkConfig(num_walks_per_node=20, dim=8, epochs=1)
    a, b = node2vec(g, cfg, seed=3), node2vec(g, cfg, seed=3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, node2vec(g, cfg, seed=4))
    assert a.shape == (g.n_nodes, 8)
    assert variable_node_rows(a, g).shape == (7, 8)


def test_embedding_file_roundtrip(tmp_path):
    emb = np.random.default_rng(0).normal(size=(5, 3)) * 1e-3
    assert np.array_equal(loads_embeddings(dumps_embeddings(emb)), emb)
    save_embeddings(emb, tmp_path / "e.txt")
    assert np.array_equal(load_embeddings(tmp_path / "e.txt"), emb)
    with pytest.raises(ValueError):
        loads_embeddings("NODE2VEC v1\n2 2\n1 2 3\n")
    with pytest.raises(ValueError):
        loads_embeddings("GARBAGE\n")


def test_walk_config_validation():
    with pytest.raises(ValueError):
        WalkConfig(p=0)
    with pytest.raises(ValueError):
        WalkConfig(window=0)
