"""Reproducible randomness: seed streams and exact Gaussian samplers.

Streams are derived with ``numpy.random.SeedSequence`` spawn keys, so any
(master seed, stream index) pair reproduces bit-identical draws while
distinct indices give statistically independent streams.  This is the
counter-based derivation that lets embarrassingly parallel Monte Carlo
split trials across workers without coordination: a trial's draws depend
only on its own stream, never on batch composition or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import ModelError
from .kernel_math import EIG_FLOOR_REL

__all__ = [
    "SeedSpec",
    "NoiseGrid",
    "white_noise_grid",
    "sample_gaussian_vector",
    "sample_stationary_circulant",
]


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus a stream index addressing one reproducible stream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= int(self.master_seed) < 2 ** 64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if int(self.stream_index) < 0:
            raise ValueError("stream_index must be nonnegative")

    def stream(self, index: int) -> "SeedSpec":
        """The sibling stream with the given index."""
        return replace(self, stream_index=int(index))

    def seed_sequence(self, *subkeys: int) -> np.random.SeedSequence:
        key = (int(self.stream_index),) + tuple(int(k) for k in subkeys)
        return np.random.SeedSequence(int(self.master_seed), spawn_key=key)

    def generator(self, *subkeys: int) -> np.random.Generator:
        """A fresh generator for this stream, optionally sub-keyed.

        Sub-keys extend the spawn key, giving nested independent streams
        (e.g. one per Monte Carlo trial) without mutating this spec.
        """
        return np.random.default_rng(self.seed_sequence(*subkeys))


@dataclass(frozen=True)
class NoiseGrid:
    """Cell-averaged space-time white noise on an nt x nx grid.

    Entries are i.i.d. centered Gaussian with variance 1/(dt*dx), the
    variance of white noise averaged over one space-time cell.
    """

    dt: float
    dx: float
    nt: int
    nx: int
    values: np.ndarray

    @property
    def variance(self) -> float:
        return 1.0 / (self.dt * self.dx)


def white_noise_grid(dt: float, dx: float, nt: int, nx: int, seed: SeedSpec) -> NoiseGrid:
    """Sample an nt x nx grid of discretized space-time white noise.

    Raises
    ------
    ValueError
        On nonpositive steps or grid sizes.
    """
    if not (dt > 0.0 and dx > 0.0):
        raise ValueError("white_noise_grid requires dt > 0 and dx > 0")
    if not (nt >= 1 and nx >= 1):
        raise ValueError("white_noise_grid requires nt >= 1 and nx >= 1")
    gen = seed.generator()
    values = gen.standard_normal((nt, nx)) / np.sqrt(dt * dx)
    return NoiseGrid(dt=dt, dx=dx, nt=nt, nx=nx, values=values)


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Factor B with B @ B.T = cov for a matrix passing the eigenvalue floor.

    Tries Cholesky, then Cholesky with a small diagonal jitter (at most
    1e-10 times the trace), then an eigendecomposition with negative
    eigenvalues clipped to zero.  The path taken is a deterministic
    function of the matrix.
    """
    trace = float(np.trace(cov))
    for jitter in (0.0, 1e-12 * trace, 1e-10 * trace):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            continue
    eigvals, eigvecs = np.linalg.eigh(cov)
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def _check_covariance(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ModelError("covariance must be a square matrix")
    scale = np.abs(cov).max() if cov.size else 0.0
    if not np.allclose(cov, cov.T, atol=1e-10 * (1.0 + scale), rtol=0.0):
        raise ModelError("covariance matrix is not symmetric")
    trace = float(np.trace(cov))
    min_eig = float(np.linalg.eigvalsh(cov).min()) if cov.size else 0.0
    if min_eig < -EIG_FLOOR_REL * max(trace, np.finfo(float).tiny):
        raise ModelError(
            f"covariance violates the eigenvalue floor: min eig {min_eig:.3e} "
            f"< -{EIG_FLOOR_REL:g} * trace {trace:.3e}")
    return cov


def sample_gaussian_vector(cov, seed: SeedSpec, draws: int | None = None) -> np.ndarray:
    """Centered Gaussian draws with the given covariance, by dense factorization.

    Parameters
    ----------
    cov : (n, n) array_like
        Symmetric matrix with minimum eigenvalue >= -1e-8 * trace
        (small negatives are clipped).
    seed : SeedSpec
        Stream to draw from.
    draws : int, optional
        If given, return a ``(draws, n)`` array; otherwise a single ``(n,)``
        draw.

    Raises
    ------
    ModelError
        If the matrix is not symmetric or violates the eigenvalue floor.
    """
    cov = _check_covariance(cov)
    factor = _psd_factor(cov)
    k = 1 if draws is None else int(draws)
    z = seed.generator().standard_normal((cov.shape[0], k))
    samples = (factor @ z).T
    return samples[0] if draws is None else samples


def sample_stationary_circulant(first_row, seed: SeedSpec, draws: int | None = None) -> np.ndarray:
    """Exact stationary Gaussian draws on a uniform grid via circulant embedding.

    ``first_row`` is the covariance sequence c_0, ..., c_{n-1} of a
    stationary field on a uniform grid.  The sequence is reflected into a
    circulant of size 2(n-1) whose FFT gives the embedding eigenvalues; one
    FFT of complex white noise then yields two independent exact draws.  If
    the embedding has an eigenvalue below -1e-8 times the largest one, the
    sampler falls back to dense factorization of the Toeplitz matrix.

    Raises
    ------
    ModelError
        If the embedding fails and the dense fallback also rejects the
        sequence.
    """
    row = np.asarray(first_row, dtype=float)
    if row.ndim != 1 or row.size < 1:
        raise ModelError("first_row must be a nonempty 1-D covariance sequence")
    n = row.size
    k = 1 if draws is None else int(draws)
    if n == 1:
        if row[0] < 0.0:
            raise ModelError("negative variance in covariance sequence")
        out = seed.generator().standard_normal((k, 1)) * np.sqrt(row[0])
        return out[0] if draws is None else out

    circ = np.concatenate([row, row[-2:0:-1]])
    lam = np.fft.fft(circ).real
    if lam.min() < -EIG_FLOOR_REL * max(lam.max(), np.finfo(float).tiny):
        return sample_gaussian_vector(scipy.linalg.toeplitz(row), seed, draws)

    lam = np.clip(lam, 0.0, None)
    m = circ.size
    gen = seed.generator()
    pairs = (k + 1) // 2
    a = gen.standard_normal((pairs, m))
    b = gen.standard_normal((pairs, m))
    spectrum = np.sqrt(lam / m) * (a + 1j * b)
    field = np.fft.fft(spectrum, axis=1)
    samples = np.empty((2 * pairs, n))
    samples[0::2] = field.real[:, :n]
    samples[1::2] = field.imag[:, :n]
    samples = samples[:k]
    return samples[0] if draws is None else samples
