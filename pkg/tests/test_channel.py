import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpsdec.bp import BPConfig, decode_permuted_batch
from gpsdec.channel import (ChannelConfig, LabelStarvation, awgn, bpsk_modulate,
                            generate_training_batch, llr, sigma_from_ebn0, stream)
from gpsdec.codes import perm_matrix, pg_enumerate
from gpsdec.tanner import TannerGraph


def test_bpsk_mapping():
    assert bpsk_modulate(np.array([0, 1, 1, 0])).tolist() == [1.0, -1.0, -1.0, 1.0]


@given(st.floats(-5, 15), st.floats(0.05, 1.0))
def test_sigma_formula(snr, rate):
    sigma = float(sigma_from_ebn0(snr, rate))
    # Eb/N0 = 1 / (2 R sigma^2) for unit-energy BPSK
    assert np.isclose(10 * np.log10(1.0 / (2 * rate * sigma**2)), snr)


def test_sigma_vectorised_and_validation():
    s = sigma_from_ebn0(np.array([0.0, 3.0]), 0.5)
    assert s.shape == (2,) and np.isclose(s[0], 1.0)
    with pytest.raises(ValueError):
        sigma_from_ebn0(1.0, 0.0)
    assert np.isclose(ChannelConfig(0.0, 0.5).sigma, 1.0)


def test_llr_values():
    assert np.allclose(llr(np.array([0.5, -1.0]), 0.5), [4.0, -8.0])
    per_row = llr(np.ones((2, 3)), np.array([1.0, 2.0]))
    assert np.allclose(per_row, [[2.0] * 3, [0.5] * 3])
    with pytest.raises(ValueError):
        llr(np.ones(3), 0.0)


def test_awgn_statistics():
    r = stream(7)
    sigma = 0.8
    y = awgn(np.ones(400_000), sigma, r)
    noise = y - 1.0
    # mean within 4 standard errors, variance within 1 percent
    assert abs(noise.mean()) < 4 * sigma / np.sqrt(noise.size)
    assert abs(noise.var() / sigma**2 - 1) < 0.01
    assert np.array_equal(awgn(np.ones(3), 0.0, r), np.ones(3))


def test_uncoded_ber_matches_q_function():
    from math import erfc, sqrt
    sigma = float(sigma_from_ebn0(4.0, 1.0))
    y = awgn(np.ones(1_000_000), sigma, stream(3))
    ber = (y < 0).mean()
    expect = 0.5 * erfc(1 / (sigma * sqrt(2)))
    assert abs(ber - expect) < 4 * np.sqrt(expect / 1e6)


def test_streams_are_reproducible_and_distinct():
    a = stream(5, 1, 2).standard_normal(4)
    assert np.array_equal(a, stream(5, 1, 2).standard_normal(4))
    assert not np.array_equal(a, stream(5, 2, 1).standard_normal(4))
    assert not np.array_equal(a, stream(6, 1, 2).standard_normal(4))


@pytest.fixture(scope="module")
def setup31(bch31):
    return bch31, perm_matrix(pg_enumerate(31)), TannerGraph(bch31.H)


def test_training_batch_balanced_and_labels_correct(setup31):
    code, perms, g = setup31
    lb = generate_training_batch(code, perms, g, 64, stream(0, 1))
    assert len(lb) == 64 and lb.label.sum() == 32
    assert lb.y.shape == (64, 31)
    assert ((lb.snr_db >= 1) & (lb.snr_db <= 7)).all()
    assert np.allclose(lb.sigma, sigma_from_ebn0(lb.snr_db, code.rate))
    # labels are the syndrome-success flag of BP on the permuted word
    res = decode_permuted_batch(lb.llr, perms[lb.perm_index], g, BPConfig())
    assert np.array_equal(res.success.astype(np.uint8), lb.label)
    # not grouped by class
    assert 0 < np.abs(np.diff(lb.label.astype(int))).sum()


def test_training_batch_deterministic(setup31):
    code, perms, g = setup31
    a = generate_training_batch(code, perms, g, 16, stream(9))
    b = generate_training_batch(code, perms, g, 16, stream(9))
    assert a.to_csv() == b.to_csv()


def test_training_batch_csv(setup31):
    code, perms, g = setup31
    text = generate_training_batch(code, perms, g, 4, stream(2)).to_csv()
    lines = text.splitlines()
    assert lines[0].split(",")[:4] == ["snr_db", "perm_index", "label", "y_0"]
    assert len(lines) == 5 and len(lines[1].split(",")) == 3 + 31


def test_label_starvation(setup31):
    code, perms, g = setup31
    # at 40 dB BP never fails, so no negatives can be found
    with pytest.raises(LabelStarvation):
        generate_training_batch(code, perms, g, 8, stream(0), snr_range_db=(40, 40), max_draws=256)
    with pytest.raises(ValueError):
        generate_training_batch(code, perms, g, 7, stream(0))
