"""Exact simulation of the constant-coefficient (linear) solution field.

Spatial slices at a fixed time are stationary, so they go through the
circulant fast path; temporal traces at a fixed point use dense
factorization (their bifractional covariance is not stationary);
window-truncated slices assemble their covariance entrywise by quadrature,
cached per (epsilon, delta, grid spacing).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import kernel_math
from .noise import SeedSpec, sample_gaussian_vector, sample_stationary_circulant

__all__ = [
    "FieldSlice",
    "TemporalTrace",
    "TruncatedFieldSpec",
    "sample_spatial_slice",
    "sample_spatial_ensemble",
    "sample_temporal_trace",
    "sample_temporal_ensemble",
    "sample_truncated_slice",
    "sample_truncated_ensemble",
    "correlation_length_profile",
    "write_slice_csv",
    "write_trace_csv",
]


def _uniform_spacing(grid: np.ndarray) -> float:
    """Spacing of a strictly increasing uniform grid (0.0 for a single point)."""
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    if grid.size == 1:
        return 0.0
    steps = np.diff(grid)
    if np.any(steps <= 0.0):
        raise ValueError("grid must be strictly increasing")
    dx = float(steps[0])
    if not np.allclose(steps, dx, rtol=1e-9, atol=1e-12 * max(1.0, abs(dx))):
        raise ValueError("grid must be uniform")
    return dx


@dataclass(frozen=True)
class FieldSlice:
    """Values of the field at one time over a uniform spatial grid."""

    epsilon: float
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        _uniform_spacing(self.grid)
        if self.values.shape != self.grid.shape:
            raise ValueError("values and grid must have equal length")


@dataclass(frozen=True)
class TemporalTrace:
    """Values of the field at one position over strictly increasing times.

    The first entry corresponds to the smallest time; the value at time
    zero is identically zero and is not stored.
    """

    x: float
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValueError("times must be a nonempty 1-D array")
        if np.any(np.diff(self.times) <= 0.0) or self.times[0] <= 0.0:
            raise ValueError("times must be strictly increasing and positive")
        if self.values.shape != self.times.shape:
            raise ValueError("values and times must have equal length")


@dataclass(frozen=True)
class TruncatedFieldSpec:
    """Scale and truncation level of a window-truncated slice."""

    epsilon: float
    delta: float

    def __post_init__(self) -> None:
        # delegates the (0,1] x (0,1) range check
        kernel_math.truncation_half_width(self.epsilon, self.delta)

    @property
    def half_width(self) -> float:
        return kernel_math.truncation_half_width(self.epsilon, self.delta)

    @property
    def independence_gap(self) -> float:
        return kernel_math.independence_gap(self.epsilon, self.delta)


def _spatial_first_row(epsilon: float, grid: np.ndarray) -> np.ndarray:
    lags = grid - grid[0]
    return np.asarray(kernel_math.spatial_covariance(epsilon, lags), dtype=float).reshape(-1)


def sample_spatial_ensemble(epsilon: float, grid, seed: SeedSpec, draws: int) -> np.ndarray:
    """Independent exact draws of a spatial slice; returns ``(draws, n)``."""
    if not (0.0 < epsilon <= 1.0):
        raise ValueError(f"spatial slice requires epsilon in (0, 1], got {epsilon}")
    grid = np.asarray(grid, dtype=float)
    _uniform_spacing(grid)
    row = _spatial_first_row(epsilon, grid)
    return sample_stationary_circulant(row, seed, draws=draws)


def sample_spatial_slice(epsilon: float, grid, seed: SeedSpec) -> FieldSlice:
    """One exact stationary draw of the field at time ``epsilon``."""
    values = sample_spatial_ensemble(epsilon, grid, seed, draws=1)[0]
    return FieldSlice(epsilon=float(epsilon), grid=np.asarray(grid, dtype=float), values=values)


def sample_temporal_ensemble(x: float, times, seed: SeedSpec, draws: int) -> np.ndarray:
    """Independent exact draws of the temporal trace; returns ``(draws, k)``.

    By spatial stationarity the position ``x`` only labels the trace.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1-D array")
    if times[0] <= 0.0 or np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be strictly increasing and positive")
    cov = np.asarray(kernel_math.temporal_covariance(times[:, None], times[None, :]))
    return sample_gaussian_vector(cov, seed, draws=draws)


def sample_temporal_trace(x: float, times, seed: SeedSpec) -> TemporalTrace:
    """One exact draw of the field at position ``x`` along increasing times."""
    values = sample_temporal_ensemble(x, times, seed, draws=1)[0]
    return TemporalTrace(x=float(x), times=np.asarray(times, dtype=float), values=values)


@lru_cache(maxsize=256)
def _truncated_first_row(epsilon: float, delta: float, dx: float, n: int) -> tuple[float, ...]:
    # quadrature is the cost bottleneck; cache per (eps, delta, spacing, size)
    return tuple(
        kernel_math.truncated_covariance(epsilon, delta, 0.0, j * dx) for j in range(n)
    )


def truncated_covariance_matrix(spec: TruncatedFieldSpec, grid) -> np.ndarray:
    """Covariance matrix of the truncated slice on a uniform grid.

    Entries at mutual distance beyond the independence gap are exactly
    zero, so well-separated grids produce block-diagonal matrices.
    """
    grid = np.asarray(grid, dtype=float)
    dx = _uniform_spacing(grid)
    row = np.array(_truncated_first_row(float(spec.epsilon), float(spec.delta),
                                        float(dx), int(grid.size)))
    idx = np.abs(np.arange(grid.size)[:, None] - np.arange(grid.size)[None, :])
    return row[idx]


def sample_truncated_ensemble(spec: TruncatedFieldSpec, grid, seed: SeedSpec,
                              draws: int) -> np.ndarray:
    """Independent exact draws of the truncated slice; returns ``(draws, n)``."""
    cov = truncated_covariance_matrix(spec, grid)
    return sample_gaussian_vector(cov, seed, draws=draws)


def sample_truncated_slice(spec: TruncatedFieldSpec, grid, seed: SeedSpec) -> FieldSlice:
    """One exact draw of the window-truncated field at time ``spec.epsilon``."""
    values = sample_truncated_ensemble(spec, grid, seed, draws=1)[0]
    return FieldSlice(epsilon=float(spec.epsilon), grid=np.asarray(grid, dtype=float),
                      values=values)


def correlation_length_profile(epsilon: float, alphas) -> list[tuple[float, float]]:
    """Covariance at lag eps**(1/2 + alpha) for each alpha.

    For alpha >= 0 the lag sits at or below the sqrt(eps) correlation
    length and the covariance stays comparable to sqrt(eps); for alpha < 0
    it decays like eps**(1/2 + 2|alpha|) * exp(-1/(4 eps**(2|alpha|))).
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"profile requires epsilon in (0, 1), got {epsilon}")
    out = []
    for alpha in alphas:
        lag = epsilon ** (0.5 + float(alpha))
        out.append((float(alpha), float(kernel_math.spatial_covariance(epsilon, lag))))
    return out


def _write_sidecar(path: Path, meta: dict) -> None:
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def write_slice_csv(fs: FieldSlice, path, *, seed: SeedSpec | None = None,
                    delta: float | None = None) -> None:
    """Write a slice as ``x,value`` rows with an (epsilon, delta, seed) sidecar."""
    path = Path(path)
    lines = ["x,value"]
    lines += [f"{x!r},{v!r}" for x, v in zip(fs.grid, fs.values)]
    path.write_text("\n".join(lines) + "\n")
    meta = {"epsilon": fs.epsilon, "delta": delta,
            "seed": None if seed is None else
            {"master_seed": seed.master_seed, "stream_index": seed.stream_index}}
    _write_sidecar(path, meta)


def write_trace_csv(tr: TemporalTrace, path, *, seed: SeedSpec | None = None) -> None:
    """Write a trace as ``t,value`` rows with an (x, seed) sidecar."""
    path = Path(path)
    lines = ["t,value"]
    lines += [f"{t!r},{v!r}" for t, v in zip(tr.times, tr.values)]
    path.write_text("\n".join(lines) + "\n")
    meta = {"x": tr.x,
            "seed": None if seed is None else
            {"master_seed": seed.master_seed, "stream_index": seed.stream_index}}
    _write_sidecar(path, meta)
