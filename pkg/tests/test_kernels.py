"""Compiled and fallback kernels must agree bit-for-bit and match exact oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qvreg import kernels
from qvreg.kernels import _fallback


def test_backend_reports_itself():
    assert kernels.BACKEND in ("cython", "fallback")


def test_cumsum_shape_and_anchor():
    out = kernels.kahan_cumsum(np.array([1.0, 2.0, 3.0]))
    assert out.shape == (4,)
    assert out[0] == 0.0
    np.testing.assert_array_equal(out, [0.0, 1.0, 3.0, 6.0])


def test_cumsum_empty():
    out = kernels.kahan_cumsum(np.array([], dtype=np.float64))
    np.testing.assert_array_equal(out, [0.0])


def test_cumsum_matches_fsum_oracle():
    rng = np.random.default_rng(7)
    terms = rng.standard_normal(10_000) * np.exp(rng.uniform(-8, 8, 10_000))
    out = kernels.kahan_cumsum(terms)
    # math.fsum is an exact (correctly rounded) independent oracle
    assert out[-1] == pytest.approx(math.fsum(terms.tolist()), rel=1e-15, abs=1e-300)


def test_cumsum_compensation_beats_naive():
    # alternating huge/tiny terms: naive cumsum loses the tiny contributions
    terms = np.tile([1e16, 1.0, -1e16, 1.0], 1000)
    exact = math.fsum(terms.tolist())
    assert kernels.kahan_cumsum(terms)[-1] == exact
    assert np.cumsum(terms)[-1] != exact


@settings(deadline=None, max_examples=50)
@given(
    arrays(
        np.float64,
        st.integers(0, 300),
        elements=st.floats(-1e12, 1e12, allow_nan=False, width=64),
    )
)
def test_cumsum_backends_bit_identical(terms):
    a = kernels.kahan_cumsum(terms)
    b = _fallback.kahan_cumsum(terms)
    np.testing.assert_array_equal(a, b)


def test_ar1_matches_python_loop():
    rng = np.random.default_rng(3)
    a, x0 = 0.97, 1.5
    b = rng.standard_normal(500)
    out = kernels.ar1_recursion(a, b, x0)
    expect = np.empty(501)
    expect[0] = x0
    for i in range(500):
        expect[i + 1] = a * expect[i] + b[i]
    np.testing.assert_allclose(out, expect, rtol=1e-12, atol=1e-12)


@settings(deadline=None, max_examples=50)
@given(
    st.floats(-1.0, 1.0),
    st.floats(-5.0, 5.0),
    arrays(np.float64, st.integers(0, 100), elements=st.floats(-10, 10, width=64)),
)
def test_ar1_backends_agree(a, x0, b):
    out_c = kernels.ar1_recursion(a, b, x0)
    out_f = _fallback.ar1_recursion(a, b, x0)
    np.testing.assert_allclose(out_c, out_f, rtol=1e-12, atol=1e-12)


def test_fallback_override(monkeypatch):
    import importlib

    monkeypatch.setenv("QVREG_FORCE_FALLBACK", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "fallback"
    finally:
        monkeypatch.delenv("QVREG_FORCE_FALLBACK")
        importlib.reload(kernels)
