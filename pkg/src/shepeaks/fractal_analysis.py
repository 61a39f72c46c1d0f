"""Peak normalization, exceedance sets, and dimension/tail estimators.

The short-time peaks of the solution are measured through the normalized
field h(eps, x) = (u(eps, x) - 1) / (eps^{1/4} sqrt(log(1/eps))).  A
limsup over eps is approximated by the maximum over a finite geometric
ladder eps_n = nu^n — the chief, documented source of finite-scale bias in
everything downstream.  Exceedance sets are point sets on [0, 1]; their
size is summarized by dyadic box counts and by Kolmogorov capacities
(maximal separated subsets), each with a least-squares scaling exponent.

Monte Carlo estimators for the supremum of the linear field over the
diffusive boxes (0, eps] x [0, R sqrt(eps)] are built on the
finite-difference marcher; the pure post-processing is factored out so
experiment drivers can distribute the sampling and reuse the same
reductions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spde_solver
from .errors import EstimatorError
from .noise import SeedSpec

__all__ = [
    "EpsilonLadder",
    "BoxDomain",
    "PeakField",
    "ExceedanceSet",
    "DimensionEstimate",
    "TailEstimate",
    "SupScalingResult",
    "LilSummary",
    "normalize_peaks",
    "exceedance_set",
    "box_counts",
    "occupied_fraction",
    "box_dimension",
    "kolmogorov_capacity",
    "capacity_dimension",
    "dimension_vs_c",
    "tail_estimates",
    "sup_tail_estimate",
    "sup_scaling_fit",
    "expected_sup_scaling",
    "lil_statistic",
]

#: Monte Carlo tail estimates with fewer hits than this are flagged unreliable.
MIN_RELIABLE_HITS = 20


@dataclass(frozen=True)
class EpsilonLadder:
    """Geometric scale ladder eps_n = nu^n for n in [n0, n1]."""

    nu: float
    n0: int
    n1: int

    def __post_init__(self) -> None:
        if not (0.0 < self.nu < 1.0):
            raise ValueError(f"ladder ratio must lie in (0, 1), got {self.nu}")
        if not self.n0 < self.n1:
            raise ValueError("ladder requires n0 < n1")
        if not self.nu ** self.n0 < 1.0:
            raise ValueError("every ladder scale must be below 1")

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.n0, self.n1 + 1)

    @property
    def values(self) -> np.ndarray:
        return self.nu ** self.levels.astype(float)

    def __len__(self) -> int:
        return self.n1 - self.n0 + 1


@dataclass(frozen=True)
class BoxDomain:
    """The diffusive space-time box (0, eps] x [0, R sqrt(eps)]."""

    R: float
    epsilon: float

    def __post_init__(self) -> None:
        if not self.R > 0.0:
            raise ValueError("aspect parameter R must be positive")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")

    @property
    def t_extent(self) -> float:
        return self.epsilon

    @property
    def x_extent(self) -> float:
        return self.R * math.sqrt(self.epsilon)


@dataclass(frozen=True)
class PeakField:
    """Normalized peak heights h over a ladder x grid array."""

    ladder: EpsilonLadder
    grid: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class ExceedanceSet:
    """Grid points whose ladder-max normalized peak reaches the threshold."""

    c: float
    points: np.ndarray
    resolution: float

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.size and (np.any(np.diff(pts) <= 0.0)):
            raise ValueError("points must be sorted and distinct")


@dataclass(frozen=True)
class DimensionEstimate:
    """Least-squares scaling exponent with its fit diagnostics."""

    slope: float
    stderr: float
    window: tuple[float, float]
    r_squared: float
    n_scales: int


@dataclass(frozen=True)
class TailEstimate:
    """One Monte Carlo tail point P{sup > (4 eps / pi)^{1/4} lambda}."""

    lam: float
    p_hat: float
    normalized_log_p: float
    hits: int
    reliable: bool


@dataclass(frozen=True)
class SupScalingResult:
    """Per-scale supremum means and the log-log regression across them."""

    epsilons: np.ndarray
    mean_sups: np.ndarray
    stderrs: np.ndarray
    trials: int
    fit: DimensionEstimate | None


@dataclass(frozen=True)
class LilSummary:
    """Distribution summary of the loglog-normalized ladder maximum."""

    statistics: np.ndarray
    median: float
    iqr: tuple[float, float]
    target: float
    sigma1: float


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Slope, intercept, slope standard error and R^2 of a least-squares line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    xm = x.mean()
    ym = y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else 0.0
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, stderr, r2


def normalize_peaks(values, grid, baseline: float, ladder: EpsilonLadder) -> PeakField:
    """Normalize field values to h = (value - baseline) / (eps^{1/4} sqrt(log(1/eps))).

    ``values`` has one row per ladder scale (largest scale first, matching
    ``ladder.values``) and one column per grid point.  The baseline is 1
    for the nonlinear solution and 0 for the linear field.

    Raises
    ------
    ValueError
        If a ladder scale reaches 1 (degenerate normalizer) or shapes
        disagree.
    """
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    eps = ladder.values
    if np.any(eps >= 1.0):
        raise ValueError("normalization requires every scale below 1")
    if values.shape != (len(ladder), grid.size):
        raise ValueError(f"values must have shape {(len(ladder), grid.size)}")
    norm = eps ** 0.25 * np.sqrt(np.log(1.0 / eps))
    h = (values - baseline) / norm[:, None]
    return PeakField(ladder=ladder, grid=grid, h=h)


def exceedance_set(pf: PeakField, c: float) -> ExceedanceSet:
    """Grid points where the ladder maximum of h reaches at least ``c``.

    ``c = 0`` is admitted for diagnostics (it returns every grid point);
    output sets are nested decreasingly in ``c``.
    """
    if c < 0.0:
        raise ValueError("threshold must be nonnegative")
    mask = pf.h.max(axis=0) >= c
    grid = pf.grid
    resolution = float(grid[1] - grid[0]) if grid.size > 1 else 0.0
    return ExceedanceSet(c=float(c), points=grid[mask], resolution=resolution)


def box_counts(points, r: float) -> int:
    """Number of occupied boxes of the dyadic partition of [0, 1] at size r.

    Partitions are anchored at 0; the right endpoint 1 is folded into the
    last box.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0
    n_boxes = int(round(1.0 / r))
    idx = np.minimum((pts / r).astype(int), n_boxes - 1)
    return int(np.unique(idx).size)


def occupied_fraction(points, r: float) -> float:
    """Occupied share of the dyadic r-boxes of [0, 1]."""
    return box_counts(points, r) / round(1.0 / r)


def _dyadic_scales(window: tuple[float, float]) -> np.ndarray:
    r_min, r_max = window
    if not (0.0 < r_min < r_max):
        raise EstimatorError("window must satisfy 0 < r_min < r_max")
    k_lo = int(math.ceil(math.log2(1.0 / r_max) - 1e-9))
    k_hi = int(math.floor(math.log2(1.0 / r_min) + 1e-9))
    return 2.0 ** (-np.arange(max(k_lo, 0), k_hi + 1).astype(float))


def _fit_box_counts(scales: np.ndarray, counts: np.ndarray,
                    window: tuple[float, float]) -> DimensionEstimate:
    if np.all(counts <= 0.0):
        return DimensionEstimate(slope=0.0, stderr=0.0, window=window,
                                 r_squared=1.0, n_scales=int(scales.size))
    keep = counts > 0.0
    slope, _, stderr, r2 = _ols(np.log(1.0 / scales[keep]), np.log(counts[keep]))
    return DimensionEstimate(slope=max(slope, 0.0), stderr=stderr, window=window,
                             r_squared=r2, n_scales=int(scales.size))


def box_dimension(s: ExceedanceSet, window: tuple[float, float]) -> DimensionEstimate:
    """Box-counting exponent: slope of log N(r) against log(1/r).

    Counts occupied boxes of dyadic partitions of [0, 1] with sizes inside
    ``window`` and fits a least-squares line.  An empty set reports slope
    zero.

    Raises
    ------
    EstimatorError
        If fewer than five dyadic scales fit in the window, or the window
        reaches below twice the set resolution.
    """
    scales = _dyadic_scales(window)
    if scales.size < 5:
        raise EstimatorError("box dimension needs at least 5 dyadic scales in the window")
    if s.resolution > 0.0 and window[0] < 2.0 * s.resolution * (1.0 - 1e-9):
        raise EstimatorError("window reaches below twice the set resolution")
    counts = np.array([box_counts(s.points, r) for r in scales], dtype=float)
    return _fit_box_counts(scales, counts, window)


def kolmogorov_capacity(points, r: float) -> int:
    """Maximum size of a subset with pairwise separation strictly above r.

    The left-to-right greedy sweep is optimal on the line, so the value is
    exact; it is nonincreasing in ``r``.

    Raises
    ------
    ValueError
        If ``r`` is not positive or the points are not sorted.
    """
    if not r > 0.0:
        raise ValueError("separation must be positive")
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0
    if np.any(np.diff(pts) < 0.0):
        raise ValueError("points must be sorted")
    count = 1
    last = pts[0]
    for p in pts[1:]:
        if p - last > r:
            count += 1
            last = p
    return count


def capacity_dimension(points, window: tuple[float, float],
                       resolution: float = 0.0) -> DimensionEstimate:
    """Capacity-based exponent: slope of log K(r) against log(1/r).

    The companion of :func:`box_dimension`; the two surrogates need not
    approach the same limit at finite scale, so both are reported and
    neither is asserted to be the Hausdorff value.
    """
    scales = _dyadic_scales(window)
    if scales.size < 5:
        raise EstimatorError("capacity dimension needs at least 5 dyadic scales in the window")
    if resolution > 0.0 and window[0] < 2.0 * resolution * (1.0 - 1e-9):
        raise EstimatorError("window reaches below twice the set resolution")
    pts = np.sort(np.asarray(points, dtype=float))
    counts = np.array([kolmogorov_capacity(pts, r) for r in scales], dtype=float)
    return _fit_box_counts(scales, counts, window)


def dimension_vs_c(pf: PeakField, c_grid, window: tuple[float, float]) -> list[tuple[float, DimensionEstimate]]:
    """Box-dimension estimates across thresholds.

    The exceedance sets are nested, so the estimates are monotone
    nonincreasing in c up to the reported standard errors.
    """
    out = []
    for c in c_grid:
        est = box_dimension(exceedance_set(pf, float(c)), window)
        out.append((float(c), est))
    return out


def tail_estimates(sups: np.ndarray, lambda_grid, epsilon: float) -> list[TailEstimate]:
    """Reduce supremum samples to tail rows at thresholds (4 eps/pi)^{1/4} lambda.

    The normalized log-probability log(p) / lambda^2 approaches -1 for
    large lambda; rows with fewer than ``MIN_RELIABLE_HITS`` hits are
    flagged rather than dropped.
    """
    sups = np.asarray(sups, dtype=float)
    n = sups.size
    amp = (4.0 * epsilon / math.pi) ** 0.25
    rows = []
    for lam in lambda_grid:
        lam = float(lam)
        hits = int(np.count_nonzero(sups >= amp * lam))
        p_hat = hits / n
        if lam > 0.0 and hits > 0:
            norm = math.log(p_hat) / (lam * lam)
        else:
            norm = math.nan
        rows.append(TailEstimate(lam=lam, p_hat=p_hat, normalized_log_p=norm,
                                 hits=hits, reliable=hits >= MIN_RELIABLE_HITS))
    return rows


def sup_tail_estimate(R: float, epsilon: float, lambda_grid, trials: int,
                      seed: SeedSpec, points_per_length: int = 16,
                      sup_sampler=None) -> list[TailEstimate]:
    """Monte Carlo tail of the linear-field supremum over the diffusive box.

    ``sup_sampler(epsilon, R, trials, seed)``, when given, replaces the
    finite-difference sampling (tests inject deterministic fields).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    if sup_sampler is None:
        cfg = spde_solver.config_for_scale(epsilon, points_per_length)
        sups = spde_solver.box_sup_ensemble(epsilon, R, cfg, trials, seed)
    else:
        sups = sup_sampler(epsilon, R, trials, seed)
    return tail_estimates(sups, lambda_grid, epsilon)


def sup_scaling_fit(epsilons, sups_per_level) -> SupScalingResult:
    """Regress log mean-supremum on log eps across ladder levels.

    The fit is omitted (``fit=None``) when some level has a nonpositive
    mean, e.g. for an injected zero field.
    """
    epsilons = np.asarray(epsilons, dtype=float)
    means = np.array([float(np.mean(s)) for s in sups_per_level])
    stderrs = np.array([float(np.std(s, ddof=1) / math.sqrt(len(s))) if len(s) > 1 else 0.0
                        for s in sups_per_level])
    trials = min(len(s) for s in sups_per_level)
    fit = None
    if np.all(means > 0.0):
        slope, _, stderr, r2 = _ols(np.log(epsilons), np.log(means))
        fit = DimensionEstimate(slope=slope, stderr=stderr,
                                window=(float(epsilons.min()), float(epsilons.max())),
                                r_squared=r2, n_scales=int(epsilons.size))
    return SupScalingResult(epsilons=epsilons, mean_sups=means, stderrs=stderrs,
                            trials=trials, fit=fit)


def expected_sup_scaling(R: float, ladder: EpsilonLadder, trials: int,
                         seed: SeedSpec, points_per_length: int = 16,
                         sup_sampler=None) -> SupScalingResult:
    """Estimate the eps-scaling of E[sup over (0, eps] x [0, R sqrt(eps)]].

    The mean supremum scales like eps^{1/4}; each ladder level samples its
    own stream (stream index = level position) so levels are independent
    and reproducible.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    sups = []
    for i, eps in enumerate(ladder.values):
        level_seed = seed.stream(seed.stream_index + i)
        if sup_sampler is None:
            cfg = spde_solver.config_for_scale(float(eps), points_per_length)
            sups.append(spde_solver.box_sup_ensemble(float(eps), R, cfg, trials, level_seed))
        else:
            sups.append(sup_sampler(float(eps), R, trials, level_seed))
    return sup_scaling_fit(ladder.values, sups)


def lil_statistic(deviations, ladder: EpsilonLadder, sigma1: float) -> LilSummary:
    """Per-seed maximum of (u(eps_n, x) - 1) / (eps_n^{1/4} sqrt(loglog(1/eps_n))).

    ``deviations`` holds u - 1 (one row per seed, one column per ladder
    scale, largest scale first).  The iterated-logarithm normalization
    targets the constant (4/pi)^{1/4} * sigma1 at time zero; the summary
    reports the per-seed maxima with their median and interquartile range.

    Raises
    ------
    ValueError
        If the ladder is too shallow: every scale must satisfy
        loglog(1/eps) > 0 and the deepest must reach loglog(1/eps) > 1/2.
    """
    deviations = np.asarray(deviations, dtype=float)
    eps = ladder.values
    if deviations.ndim != 2 or deviations.shape[1] != eps.size:
        raise ValueError("deviations must have one column per ladder scale")
    loglog = np.log(np.log(1.0 / eps))
    if np.any(loglog <= 0.0):
        raise ValueError("shallow ladder: need log(log(1/eps)) > 0 at every scale")
    if loglog[-1] <= 0.5:
        raise ValueError("shallow ladder: need log(log(1/eps)) > 1/2 at the deepest scale")
    norm = eps ** 0.25 * np.sqrt(loglog)
    stats = (deviations / norm[None, :]).max(axis=1)
    q25, q50, q75 = np.percentile(stats, [25.0, 50.0, 75.0])
    target = (4.0 / math.pi) ** 0.25 * sigma1
    return LilSummary(statistics=stats, median=float(q50), iqr=(float(q25), float(q75)),
                      target=float(target), sigma1=float(sigma1))
