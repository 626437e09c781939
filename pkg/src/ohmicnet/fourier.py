"""DFT feature extraction for trajectory time series.

The forward transform is the unnormalized convention
X_k = sum_n x_n exp(-2*pi*i*k*n/N); the feature vector is the block layout
[Re X_0 .. Re X_{N-1}, Im X_0 .. Im X_{N-1}].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dephasing import Trajectory

__all__ = [
    "DftCoefficients",
    "dft_forward",
    "dft_inverse",
    "featurize",
    "featurize_values",
    "featurize_batch",
]


@dataclass(frozen=True)
class DftCoefficients:
    """Fourier coefficients of a real signal, split into real/imaginary parts."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.asarray(self.re, dtype=np.float64)
        im = np.asarray(self.im, dtype=np.float64)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        if re.shape != im.shape or re.ndim != 1:
            raise ValueError("re and im must be 1-d arrays of equal length")

    def __len__(self) -> int:
        return self.re.shape[0]

    @property
    def complex_values(self) -> np.ndarray:
        return self.re + 1j * self.im


def dft_forward(samples) -> DftCoefficients:
    """Unnormalized forward DFT of a real sample vector (N >= 2)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("dft_forward needs a 1-d signal with at least 2 samples")
    coeffs = np.fft.fft(x)
    return DftCoefficients(re=coeffs.real.copy(), im=coeffs.imag.copy())


def dft_inverse(coeffs: DftCoefficients) -> np.ndarray:
    """Inverse DFT, x_n = (1/N) sum_k X_k exp(+2*pi*i*k*n/N); returns the real part."""
    rec = np.fft.ifft(coeffs.complex_values)
    return rec.real.copy()


def featurize_values(values) -> np.ndarray:
    """2N-long feature vector from N raw samples (real block then imaginary block)."""
    coeffs = dft_forward(values)
    return np.concatenate([coeffs.re, coeffs.im])


def featurize(trajectory: Trajectory) -> np.ndarray:
    """Feature vector of a trajectory's sampled values."""
    return featurize_values(trajectory.values)


def featurize_batch(values: np.ndarray) -> np.ndarray:
    """Row-wise featurization of an (M, N) sample matrix into (M, 2N)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] < 2:
        raise ValueError("featurize_batch needs an (M, N>=2) matrix")
    coeffs = np.fft.fft(values, axis=1)
    return np.hstack([coeffs.real, coeffs.imag])
