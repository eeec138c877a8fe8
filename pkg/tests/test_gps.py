import numpy as np
import pytest

from gpsdec import gps as gps_mod
from gpsdec import nn_core as nn
from gpsdec.bp import BPConfig, decode_permuted_batch
from gpsdec.channel import llr, sigma_from_ebn0
from gpsdec.codes import bch_build, hard_decision, perm_matrix, pg_enumerate, syndrome
from gpsdec.formats import FormatError
from gpsdec.gps import (ClassifierParams, GPSSystem, TrainConfig, TrainingDiverged,
                        decode_gps, decode_with_perm_lists, dumps_checkpoint, feature_vector,
                        gps_decode_batch, history_csv, list_decode_topk, load_checkpoint,
                        loads_checkpoint, lower_bound_batch, pick_candidate, save_checkpoint,
                        score, select, train, word_features)
from gpsdec.perm2vec import Perm2VecParams, embed

from oracles import full_loss_instance


@pytest.fixture(scope="module")
def small_system():
    code = bch_build(7, 4)
    r = np.random.default_rng(0)
    p2v = Perm2VecParams.init(7, r, d_w=8, d_p=8)
    cp = ClassifierParams.init(7, 4, r, d_p=8)
    return GPSSystem(code, pg_enumerate(7), p2v, cp)


def test_classifier_shapes():
    cp = ClassifierParams.init(31, 16, np.random.default_rng(0), d_p=80)
    shapes = {k: v.shape for k, v in cp.sections().items()}
    assert shapes == {"W_l": (80, 31), "W_s": (80, 15), "W1": (160, 720), "b1": (160,),
                      "W2": (80, 160), "b2": (80,), "W3": (40, 80), "b3": (40,),
                      "w4": (1, 40), "b4": (1,)}
    with pytest.raises(ValueError):
        ClassifierParams.init(7, 4, np.random.default_rng(0), d_p=5)


def test_word_features(bch31, rng):
    perms = perm_matrix(pg_enumerate(31))
    L = rng.normal(1.0, 2.0, size=(5, 31))
    rows = perms[rng.integers(0, len(perms), 5)]
    abs_pl, s = word_features(L, rows, bch31.H)
    for b in range(5):
        pl = L[b][rows[b]]
        assert np.array_equal(abs_pl[b], np.abs(pl))
        assert np.array_equal(s[b], syndrome(bch31.H, hard_decision(pl)))


def test_feature_vector_blocks():
    r = np.random.default_rng(0)
    cp = ClassifierParams.init(7, 4, r, d_p=4)
    q = r.normal(size=(2, 4))
    a, s = np.abs(r.normal(size=(2, 7))), r.integers(0, 2, size=(2, 3)).astype(float)
    h = feature_vector(q, a, s, cp).data
    lp, sp = a @ cp.W_l.data.T, s @ cp.W_s.data.T
    expect = np.concatenate([q, lp, sp, q * lp, q * sp, lp * sp, abs(q - lp), abs(q - sp),
                             abs(lp - sp)], axis=1)
    assert np.allclose(h, expect)
    with pytest.raises(nn.ShapeError):
        feature_vector(q[:1], a, s, cp)


@pytest.mark.parametrize("seed", range(5))
def test_full_loss_gradient(seed):
    f, params = full_loss_instance(seed)
    assert nn.grad_check(f, params) <= 1e-5


def test_scores_match_single_word_score(small_system, rng):
    L = rng.normal(1.0, 2.0, size=(3, 7))
    S = small_system.scores(L)
    assert S.shape == (3, 21) and ((S > 0) & (S < 1)).all()
    for b in range(3):
        for j in (0, 7, 20):
            pi = small_system.perms[j]
            expect = score(L[b], pi, embed(pi, small_system.p2v), small_system.code.H,
                           small_system.cp)
            assert np.isclose(S[b, j], expect, rtol=1e-12)


def test_scores_chunking_invariant(small_system, rng):
    L = rng.normal(1.0, 2.0, size=(9, 7))
    other = GPSSystem(small_system.code, small_system.perms, small_system.p2v, small_system.cp,
                      max_rows=40)
    assert np.allclose(small_system.scores(L), other.scores(L), rtol=1e-13)


def test_select_ties_and_bounds():
    s = np.array([[0.1, 0.9, 0.9, 0.3]])
    assert select(s, 1).tolist() == [[1]]
    assert select(s, 3).tolist() == [[1, 2, 3]]
    with pytest.raises(ValueError):
        select(s, 5)


def test_pick_candidate_rule():
    y = np.array([[0.9, -1.1, 0.2]])
    cands = np.array([[[0, 1, 1], [0, 1, 0], [0, 1, 0], [1, 1, 0]]])
    # candidate 0 is closest but fails the syndrome; 1 and 2 tie, first wins
    assert pick_candidate(y, cands, np.array([[False, True, True, True]])).tolist() == [1]
    # with no syndrome-valid candidate the closest one wins
    assert pick_candidate(y, cands, np.array([[False] * 4])).tolist() == [1]
    assert pick_candidate(y, cands, np.array([[True, False, False, True]])).tolist() == [0]


def test_perm_list_decoding_matches_direct_bp(small_system, rng):
    code = small_system.code
    sigma = float(sigma_from_ebn0(1.0, code.rate))
    c = code.random_codewords(rng, 30)
    y = 1 - 2.0 * c + sigma * rng.standard_normal(c.shape)
    idx = rng.integers(0, 21, size=(30, 1))
    got = decode_with_perm_lists(y, sigma, idx, small_system)
    res = decode_permuted_batch(llr(y, sigma), small_system.perm_rows[idx[:, 0]],
                                small_system.graph, BPConfig())
    assert np.array_equal(got, res.c_hat)


def test_topk_with_all_perms_equals_lower_bound(small_system, rng):
    code = small_system.code
    sigma = float(sigma_from_ebn0(0.0, code.rate))
    y = 1 - 2.0 * code.random_codewords(rng, 40) + sigma * rng.standard_normal((40, 7))
    a = gps_decode_batch(y, sigma, small_system, kappa=21)
    b = lower_bound_batch(y, sigma, small_system)
    assert np.array_equal(a, b)


def test_clean_words_pass_through(small_system, rng):
    c = small_system.code.random_codewords(rng, 10)
    y = 1 - 2.0 * c
    assert np.array_equal(gps_decode_batch(y, 0.5, small_system), c)
    assert np.array_equal(lower_bound_batch(y, 0.5, small_system), c)
    assert np.array_equal(decode_gps(y[0], small_system, 0.5), c[0])
    assert np.array_equal(list_decode_topk(y[0], small_system, 3, 0.5), c[0])
    with pytest.raises(ValueError):
        list_decode_topk(y[0], small_system, 0, 0.5)


def test_untrained_system_refuses_scores():
    sys_ = GPSSystem(bch_build(7, 4), pg_enumerate(7))
    assert not sys_.trained
    with pytest.raises(RuntimeError):
        sys_.scores(np.ones((1, 7)))


def test_checkpoint_roundtrip(small_system, tmp_path):
    text = dumps_checkpoint(small_system.p2v, small_system.cp)
    p2v, cp = loads_checkpoint(text)
    assert dumps_checkpoint(p2v, cp) == text
    digest = save_checkpoint(tmp_path / "c.txt", p2v, cp)
    assert len(digest) == 64
    p2v2, cp2 = load_checkpoint(tmp_path / "c.txt")
    for a, b in zip(small_system.cp.params() + small_system.p2v.params(),
                    cp2.params() + p2v2.params()):
        assert np.array_equal(a.data, b.data) and a.shape == b.shape
    with pytest.raises(FormatError):
        loads_checkpoint("GPS v2\n")
    with pytest.raises(FormatError):
        loads_checkpoint(text[: len(text) // 2])


def test_training_reduces_loss_and_is_deterministic(tmp_path):
    code = bch_build(7, 4)
    cfg = TrainConfig(batch_size=32, num_batches=60, d_p=8, heldout_size=128, log_every=20,
                      seed=5, snr_range_db=(-2.0, 4.0))
    h1, h2 = [], []
    p1, c1 = train(code, pg_enumerate(7), cfg, history=h1, checkpoint_path=tmp_path / "a.txt")
    p2, c2 = train(code, pg_enumerate(7), cfg, history=h2)
    assert dumps_checkpoint(p1, c1) == dumps_checkpoint(p2, c2)
    assert (tmp_path / "a.txt").read_text() == dumps_checkpoint(p1, c1)
    assert [r.batch for r in h1] == [20, 40, 60]
    assert h1[-1].heldout_loss < np.log(2)
    assert history_csv(h1).splitlines()[0] == "batch,loss,heldout_loss"


def test_training_divergence_reports_last_good(monkeypatch):
    code = bch_build(7, 4)
    calls = {"n": 0}
    real = gps_mod.batch_loss

    def flaky(*a, **k):
        calls["n"] += 1
        out = real(*a, **k)
        if calls["n"] == 3:
            out.data = np.array(np.nan)
        return out

    monkeypatch.setattr(gps_mod, "batch_loss", flaky)
    cfg = TrainConfig(batch_size=16, num_batches=5, d_p=4, heldout_size=0, log_every=0,
                      snr_range_db=(-2.0, 4.0))
    with pytest.raises(TrainingDiverged) as err:
        train(code, pg_enumerate(7), cfg)
    assert err.value.p2v is not None and err.value.cp is not None
