"""DFT feature tests against a direct O(N^2) summation oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ohmicnet.dephasing import (
    BathSpec,
    Observable,
    QubitInit,
    SpectralParams,
    TimeGrid,
    generate_trajectory,
)
from ohmicnet.fourier import (
    DftCoefficients,
    dft_forward,
    dft_inverse,
    featurize,
    featurize_batch,
    featurize_values,
)


def dft_direct(x):
    """O(N^2) direct summation oracle for the forward transform."""
    n = len(x)
    k = np.arange(n)
    phases = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return phases @ np.asarray(x, dtype=np.complex128)


class TestForward:
    def test_constant_signal(self):
        c = 2.75
        coeffs = dft_forward(np.full(16, c))
        assert coeffs.re[0] == pytest.approx(16 * c, abs=1e-9)
        assert np.max(np.abs(coeffs.re[1:])) < 1e-9
        assert np.max(np.abs(coeffs.im)) < 1e-9

    def test_single_cosine_mode(self):
        n = 32
        x = np.cos(2 * np.pi * np.arange(n) / n)
        coeffs = dft_forward(x)
        want = np.zeros(n)
        want[1] = want[n - 1] = n / 2
        assert np.allclose(coeffs.re, want, atol=1e-9)
        assert np.allclose(coeffs.im, 0.0, atol=1e-9)

    def test_matches_direct_oracle_400(self):
        rng = np.random.Generator(np.random.PCG64(8))
        x = rng.standard_normal(400)
        got = dft_forward(x).complex_values
        want = dft_direct(x)
        assert np.max(np.abs(got - want)) < 1e-9

    def test_rejects_short_input(self):
        with pytest.raises(ValueError):
            dft_forward([1.0])
        with pytest.raises(ValueError):
            dft_forward([])

    def test_conjugate_symmetry_real_input(self):
        rng = np.random.Generator(np.random.PCG64(9))
        x = rng.standard_normal(101)
        c = dft_forward(x).complex_values
        for k in range(1, 101):
            assert abs(c[101 - k] - np.conj(c[k])) < 1e-9


class TestInverse:
    def test_round_trip(self):
        rng = np.random.Generator(np.random.PCG64(10))
        x = rng.standard_normal(400)
        back = dft_inverse(dft_forward(x))
        assert np.max(np.abs(back - x)) < 1e-9

    def test_zero_coefficients(self):
        assert np.all(dft_inverse(DftCoefficients(np.zeros(8), np.zeros(8))) == 0.0)

    def test_dc_coefficient_gives_ones(self):
        n = 12
        re = np.zeros(n)
        re[0] = n
        assert np.allclose(dft_inverse(DftCoefficients(re, np.zeros(n))), 1.0, atol=1e-12)

    def test_imaginary_residue_small(self):
        rng = np.random.Generator(np.random.PCG64(12))
        x = rng.standard_normal(64)
        rec = np.fft.ifft(dft_forward(x).complex_values)
        assert np.max(np.abs(rec.imag)) < 1e-9


class TestFeaturize:
    def test_block_layout_and_length(self):
        rng = np.random.Generator(np.random.PCG64(13))
        x = rng.standard_normal(400)
        f = featurize_values(x)
        assert f.shape == (800,)
        coeffs = dft_forward(x)
        assert np.array_equal(f[:400], coeffs.re)
        assert np.array_equal(f[400:], coeffs.im)

    def test_sigma_z_trajectory_all_zero(self):
        traj = generate_trajectory(
            Observable.SIGMA_Z, TimeGrid(), QubitInit.plus_state(),
            SpectralParams(1.0, 0.1, 1.0), BathSpec.zero_temperature(),
        )
        f = featurize(traj)
        assert f.shape == (800,)
        assert np.all(f == 0.0)

    def test_round_trip_through_features(self):
        rng = np.random.Generator(np.random.PCG64(14))
        x = rng.standard_normal(400)
        f = featurize_values(x)
        back = dft_inverse(DftCoefficients(f[:400], f[400:]))
        assert np.max(np.abs(back - x)) < 1e-9

    def test_batch_matches_single(self):
        rng = np.random.Generator(np.random.PCG64(15))
        batch = rng.standard_normal((5, 64))
        stacked = featurize_batch(batch)
        for i in range(5):
            assert np.allclose(stacked[i], featurize_values(batch[i]), atol=1e-12)

    def test_linearity(self):
        rng = np.random.Generator(np.random.PCG64(16))
        x, y = rng.standard_normal((2, 128))
        a, b = 1.7, -0.4
        lhs = featurize_values(a * x + b * y)
        rhs = a * featurize_values(x) + b * featurize_values(y)
        assert np.max(np.abs(lhs - rhs)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.floats(min_value=-100, max_value=100, allow_nan=False),
        min_size=2, max_size=256,
    )
)
def test_parseval(samples):
    x = np.asarray(samples)
    c = dft_forward(x).complex_values
    lhs = np.sum(x**2)
    rhs = np.sum(np.abs(c) ** 2) / len(x)
    assert abs(lhs - rhs) <= 1e-9 * max(lhs, 1.0)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.floats(min_value=-100, max_value=100, allow_nan=False),
        min_size=2, max_size=256,
    )
)
def test_round_trip_property(samples):
    x = np.asarray(samples)
    back = dft_inverse(dft_forward(x))
    assert np.max(np.abs(back - x)) <= 1e-9 * max(1.0, np.max(np.abs(x)))
