import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from deconwave.signal_core import (DimensionError, RowSpectrum, SampledField, dft_rows,
                                   frequency_index, idft_rows, is_power_of_two, l2_norm_sq,
                                   mise_one, spectrum_norm_sq)

from conftest import direct_dft

floats = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def fields(draw, max_log=5):
    M = 2 ** draw(st.integers(3, max_log))
    N = 2 ** draw(st.integers(3, max_log))
    return SampledField(draw(arrays(float, (M, N), elements=floats)))


@given(fields())
def test_dft_matches_quadratic_oracle(f):
    got = dft_rows(f).coeffs
    ref = direct_dft(f.values)
    assert np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, np.max(np.abs(f.values)))


@given(fields())
def test_roundtrip(f):
    back = idft_rows(dft_rows(f)).values
    np.testing.assert_allclose(back, f.values, rtol=0, atol=1e-10 * max(1, np.abs(f.values).max()))


@given(fields())
def test_parseval(f):
    a, b = l2_norm_sq(f), spectrum_norm_sq(dft_rows(f))
    assert abs(a - b) <= 1e-12 * max(1.0, a)


@given(fields())
def test_real_input_gives_hermitian_rows(f):
    assert dft_rows(f).is_hermitian(atol=1e-9 * max(1, np.abs(f.values).max()))


def test_constant_field_has_only_dc():
    spec = dft_rows(SampledField(np.full((8, 16), 3.0))).coeffs
    assert np.allclose(spec[:, 0], 3.0)
    assert np.allclose(spec[:, 1:], 0.0)


def test_single_frequency_lands_in_its_column():
    N = 32
    t = np.arange(N) / N
    spec = dft_rows(SampledField(np.tile(np.cos(2 * np.pi * 5 * t), (8, 1))))
    np.testing.assert_allclose(spec.at(5), 0.5, atol=1e-14)
    np.testing.assert_allclose(spec.at(-5), 0.5, atol=1e-14)
    assert spectrum_norm_sq(spec) == pytest.approx(0.5)


def test_frequency_index_order():
    assert list(frequency_index(8)) == [0, 1, 2, 3, -4, -3, -2, -1]


@pytest.mark.parametrize("shape", [(8, 12), (6, 8), (4, 8), (8, 4)])
def test_bad_grid_rejected(shape):
    with pytest.raises(DimensionError):
        SampledField(np.zeros(shape))
    with pytest.raises(DimensionError):
        RowSpectrum(np.zeros(shape, complex))


def test_non_finite_rejected():
    v = np.zeros((8, 8))
    v[2, 3] = np.nan
    with pytest.raises(ValueError):
        SampledField(v)


def test_field_is_read_only():
    f = SampledField(np.zeros((8, 8)))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_mise_of_identical_fields_is_zero(rng):
    f = SampledField(rng.standard_normal((8, 16)))
    assert mise_one(f, f) == 0.0
    g = SampledField(f.values + 0.5)
    assert mise_one(g, f) == pytest.approx(0.25)


def test_shape_mismatch_in_difference():
    with pytest.raises(DimensionError):
        SampledField(np.zeros((8, 8))) - SampledField(np.zeros((8, 16)))


@pytest.mark.parametrize("n,ok", [(1, True), (2, True), (96, False), (0, False), (1024, True)])
def test_is_power_of_two(n, ok):
    assert is_power_of_two(n) is ok
