import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from noma_limfb.channel import sample_stream
from noma_limfb.quantizer import (
    TABLE1_DELTA,
    DeltaCache,
    GainQuantizer,
    NotSaturatedError,
    amplitude_error_bound,
    effective_gain_samples,
    fit_delta,
    quantization_mse,
    quantize,
    saturation_gap,
    train_delta,
)


def test_quantize_examples():
    assert quantize(GainQuantizer(0.36, 4), 1.0) == (pytest.approx(0.72), 2)
    v, level = quantize(GainQuantizer(0.6, 3), 10.0)
    assert level == 7 and v == pytest.approx(4.2)
    assert quantize(GainQuantizer(0.3, 2), 0.0) == (0.0, 0)


@pytest.mark.parametrize("x", [-1.0, math.inf, math.nan])
def test_quantize_domain(x):
    with pytest.raises(ValueError):
        quantize(GainQuantizer(0.5, 2), x)


def test_quantizer_parameters_validated():
    with pytest.raises(ValueError):
        GainQuantizer(0.0, 2)
    with pytest.raises(ValueError):
        GainQuantizer(0.5, 0)


def test_saturation_gap_examples():
    q = GainQuantizer(0.6, 3)
    assert saturation_gap(q, 4.2) == pytest.approx(0.0, abs=1e-12)
    assert saturation_gap(q, 5.0) == pytest.approx(0.8)
    assert saturation_gap(GainQuantizer(1.59, 1), 2.0) == pytest.approx(0.41)
    with pytest.raises(NotSaturatedError):
        saturation_gap(q, 4.0)


@given(st.floats(0.01, 5), st.integers(1, 8), st.floats(0, 1e3))
def test_quantizer_invariants(delta, b, x):
    q = GainQuantizer(delta, b)
    v, level = quantize(q, x)
    assert 0 <= level <= 2**b - 1
    assert v <= x + 1e-12
    if x < q.max_level:
        assert x - v < delta * (1 + 1e-12)
        assert amplitude_error_bound(q, x) == delta
    else:
        assert level == 2**b - 1
        assert amplitude_error_bound(q, x) == pytest.approx(x - q.max_level)
    assert x - v <= amplitude_error_bound(q, x) + 1e-9


@given(st.floats(0.01, 5), st.integers(1, 8), st.floats(0, 50), st.floats(0, 50))
def test_quantizer_monotone(delta, b, x, y):
    q = GainQuantizer(delta, b)
    lo, hi = sorted((x, y))
    assert quantize(q, lo)[0] <= quantize(q, hi)[0]


def test_table_shape():
    assert len(TABLE1_DELTA) == 36
    assert TABLE1_DELTA[(1, 1)] == 1.59
    assert TABLE1_DELTA[(4, 1)] == 0.36
    assert TABLE1_DELTA[(6, 6)] == 0.15


def test_mse_counts_saturated_samples():
    x = np.array([0.5, 10.0])
    # levels: 0 -> 0.5^2, saturated 10 - 3*1 = 7 -> 49
    assert quantization_mse(x, 1.0, 2) == pytest.approx((0.25 + 49) / 2)


def test_fit_delta_matches_fine_grid():
    x = effective_gain_samples(3, 2, 100_000, sample_stream(5, 0))
    d = fit_delta(x, 3)
    grid = np.arange(0.6, 0.8, 1e-4)
    mse = np.array([quantization_mse(x, g, 3) for g in grid])
    assert quantization_mse(x, d, 3) <= mse.min() * (1 + 1e-9)
    assert d == pytest.approx(grid[np.argmin(mse)], rel=1e-3)


def test_fit_delta_rejects_degenerate_input():
    with pytest.raises(ValueError):
        fit_delta(np.array([]), 2)
    with pytest.raises(ValueError):
        fit_delta(np.zeros(10), 2)


def test_train_delta_near_reference_value():
    d = train_delta(1, 1, 2, 100_000, sample_stream(8, 0))
    assert d == pytest.approx(1.59, rel=0.1)


def test_train_delta_rejects_empty():
    with pytest.raises(ValueError):
        train_delta(1, 1, 2, 0, sample_stream(8, 0))


def test_trained_delta_decreases_in_b():
    cache = DeltaCache()
    ds = [cache.get(b, 2, 2, 1, n_train=20_000) for b in range(1, 7)]
    assert all(a > b for a, b in zip(ds, ds[1:]))


def test_delta_cache_persists(tmp_path):
    path = tmp_path / "deltas.txt"
    c1 = DeltaCache(path)
    d = c1.get(2, 1, 2, 3, n_train=5_000)
    assert path.read_text().startswith("B,Bprime,Nt,seed,delta\n")
    c2 = DeltaCache(path)
    assert c2.entries[(2, 1, 2, 3)] == d
