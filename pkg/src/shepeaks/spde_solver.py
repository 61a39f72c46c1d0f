"""Explicit finite-difference solver for the semilinear stochastic heat equation.

The scheme marches

    u_{n+1,j} = u_{n,j} + (dt/2) (u_{n,j+1} - 2 u_{n,j} + u_{n,j-1}) / dx^2
                + sigma(u_{n,j}) W_{n,j},        W_{n,j} ~ N(0, dt/dx) i.i.d.,

on the interval [-L, 1+L] with Dirichlet value 1 at the extended boundary,
starting from the flat state u = 1.  The noise increment is the cell
average of space-time white noise integrated over one cell.

Fields are stored as deviations from their flat initial value, so the
initial row is exactly the initial condition and linear identities between
the nonlinear solution and its constant-coefficient companion hold without
floating-point residue.  The coupled mode advances both fields through one
shared noise array.

Monte Carlo drivers batch many trials through vectorized steps; every
trial draws from its own seed stream, so results are bit-identical for any
batch size or worker split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .noise import SeedSpec

__all__ = [
    "SigmaSpec",
    "SolverConfig",
    "SpaceTimeField",
    "config_for_scale",
    "solve_she",
    "solve_coupled",
    "coupling_error",
    "deviation_ensemble",
    "box_sup_ensemble",
]

_BATCH = 512


@dataclass(frozen=True)
class SigmaSpec:
    """Noise coefficient sigma as a closed, serializable family.

    kinds
    -----
    constant        sigma(u) = a
    affine          sigma(u) = a + b (u - 1)
    bounded_smooth  sigma(u) = a (1 + sin(u - 1) / 2)

    All members are Lipschitz with an explicit constant, and sigma(1) is a
    simple function of the parameters.  Degenerate members with
    sigma(1) = 0 are allowed (they keep the solution pinned at 1) but are
    useless for peak experiments.
    """

    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "affine", "bounded_smooth"):
            raise ValueError(f"unknown sigma kind {self.kind!r}")

    @classmethod
    def constant(cls, a: float) -> "SigmaSpec":
        return cls("constant", a=float(a))

    @classmethod
    def affine(cls, a: float, b: float) -> "SigmaSpec":
        return cls("affine", a=float(a), b=float(b))

    @classmethod
    def bounded_smooth(cls, a: float) -> "SigmaSpec":
        return cls("bounded_smooth", a=float(a))

    @property
    def value_at_one(self) -> float:
        """sigma(1), the coefficient seen by the flat initial state."""
        return self.a

    @property
    def lipschitz(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "affine":
            return abs(self.b)
        return 0.5 * abs(self.a)

    def at_deviation(self, dev):
        """sigma evaluated at u = 1 + dev, written directly in the deviation.

        Keeping the deviation form avoids the lossy 1 + dev - 1 round trip,
        so e.g. the affine member with sigma(1) = 0 vanishes exactly on the
        flat state.
        """
        if self.kind == "constant":
            return self.a
        if self.kind == "affine":
            return self.a + self.b * np.asarray(dev)
        return self.a * (1.0 + 0.5 * np.sin(np.asarray(dev)))

    def __call__(self, u):
        return self.at_deviation(np.asarray(u) - 1.0)


@dataclass(frozen=True)
class SolverConfig:
    """Grid geometry for one solve.

    The core spatial domain is [0, 1], extended by ``L`` on each side; the
    CFL bound dt <= dx^2 / 2 (the explicit half-Laplacian limit with safety
    factor 2) and the extension bound L >= 6 sqrt(T) are enforced at
    construction.  ``T/dt`` and ``(1 + 2L)/dx`` must be integers so that
    steps and grid points tile the domain exactly.
    """

    dx: float
    dt: float
    T: float
    L: float
    boundary: str = "dirichlet"

    def __post_init__(self) -> None:
        if self.boundary != "dirichlet":
            raise ConfigError(f"unsupported boundary {self.boundary!r}")
        if not (self.dx > 0.0 and self.dt > 0.0 and self.T > 0.0):
            raise ConfigError("dx, dt and T must be positive")
        if self.dt > 0.5 * self.dx * self.dx * (1.0 + 1e-9):
            raise ConfigError("CFL violated: require dt <= dx^2/2")
        if self.L < 6.0 * math.sqrt(self.T) * (1.0 - 1e-9):
            raise ConfigError("domain extension too small: require L >= 6*sqrt(T)")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ConfigError("T must be an integer multiple of dt")
        points = (1.0 + 2.0 * self.L) / self.dx
        if abs(points - round(points)) > 1e-6:
            raise ConfigError("1 + 2L must be an integer multiple of dx")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def n_points(self) -> int:
        return int(round((1.0 + 2.0 * self.L) / self.dx)) + 1

    def grid(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n_points)

    def index_of(self, x: float) -> int:
        """Grid index of a position that lies on the grid."""
        j = (float(x) + self.L) / self.dx
        if abs(j - round(j)) > 1e-6:
            raise ValueError(f"position {x} is not a grid point")
        return int(round(j))

    def step_of(self, t: float) -> int:
        """Nearest step index of a time in [0, T]."""
        if t < -1e-12 or t > self.T * (1.0 + 1e-9):
            raise ValueError(f"time {t} outside [0, T={self.T}]")
        return min(self.n_steps, max(0, int(round(float(t) / self.dt))))


def config_for_scale(T: float, points_per_length: int = 16,
                     resolution_scale: float | None = None) -> SolverConfig:
    """Config resolving the diffusive scale sqrt(resolution_scale).

    Picks dx = 1/m with m an integer giving ``points_per_length`` grid
    points per correlation length sqrt(resolution_scale) (default: the
    horizon ``T``), the largest stable dt that tiles ``T`` exactly, and the
    smallest admissible extension that tiles dx.
    """
    if resolution_scale is None:
        resolution_scale = T
    if not (T > 0.0 and resolution_scale > 0.0):
        raise ConfigError("horizon and resolution scale must be positive")
    m = max(8, int(math.ceil(points_per_length / math.sqrt(resolution_scale) - 1e-9)))
    dx = 1.0 / m
    n_steps = max(1, int(math.ceil(2.0 * T * m * m - 1e-9)))
    dt = T / n_steps
    ext_cells = int(math.ceil(6.0 * math.sqrt(T) * m - 1e-9))
    L = ext_cells / m
    return SolverConfig(dx=dx, dt=dt, T=T, L=L)


@dataclass(frozen=True)
class SpaceTimeField:
    """Retained rows of a solve, stored as deviations from the flat state.

    ``values`` reconstructs the field itself; row 0 is always the exact
    initial condition (baseline 1 for the nonlinear solution, 0 for the
    linear one).
    """

    config: SolverConfig
    baseline: float
    times: np.ndarray
    deviation: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.baseline + self.deviation

    @property
    def grid(self) -> np.ndarray:
        return self.config.grid()


def _record_steps(cfg: SolverConfig, record_times) -> np.ndarray:
    if record_times is None:
        record_times = [cfg.T]
    steps = sorted({0} | {cfg.step_of(t) for t in record_times})
    return np.asarray(steps, dtype=int)


def _march(cfg: SolverConfig, gens, sigma: SigmaSpec | None, record_steps: np.ndarray,
           cols: np.ndarray, noise: np.ndarray | None = None,
           sup_cols: np.ndarray | None = None, sup_steps: int = 0):
    """Advance a batch of trials; the single workhorse behind all solvers.

    ``sigma=None`` marches the linear field (coefficient 1, baseline 0).
    Returns recorded deviation rows ``(B, n_rec, len(cols))`` and, when
    ``sup_cols`` is given, the running maxima ``(B,)`` of the linear field
    over steps 1..sup_steps restricted to those columns.
    """
    n_pts = cfg.n_points
    n_int = n_pts - 2
    B = len(gens) if noise is None else 1
    c = cfg.dt / (2.0 * cfg.dx * cfg.dx)
    scale = math.sqrt(cfg.dt / cfg.dx)

    v = np.zeros((B, n_pts))
    v_int = v[:, 1:-1]
    W = np.empty((B, n_int))
    lap = np.empty((B, n_int))
    out = np.empty((B, len(record_steps), len(cols)))
    rec_pos = {int(s): i for i, s in enumerate(record_steps)}
    sups = np.full(B, -np.inf) if sup_cols is not None else None

    if 0 in rec_pos:
        out[:, rec_pos[0], :] = 0.0

    constant = sigma is not None and sigma.kind == "constant"
    n_total = max(int(record_steps.max()), sup_steps if sup_cols is not None else 0)
    for n in range(n_total):
        if noise is not None:
            W[0] = noise[n]
        else:
            for b, g in enumerate(gens):
                g.standard_normal(out=W[b])
            W *= scale
        np.subtract(v[:, 2:], v_int, out=lap)
        lap -= v_int
        lap += v[:, :-2]
        lap *= c
        v_int += lap
        if sigma is None:
            v_int += W
        elif constant:
            W *= sigma.a
            v_int += W
        else:
            v_int += sigma.at_deviation(v_int) * W
        pos = rec_pos.get(n + 1)
        if pos is not None:
            out[:, pos, :] = v[:, cols]
        if sups is not None and n + 1 <= sup_steps:
            np.maximum(sups, v[:, sup_cols].max(axis=1), out=sups)
    return out, sups


def solve_she(sigma: SigmaSpec, cfg: SolverConfig, seed: SeedSpec,
              record_times=None, noise: np.ndarray | None = None) -> SpaceTimeField:
    """Solve the nonlinear equation from the flat state u = 1.

    Parameters
    ----------
    record_times : sequence of float, optional
        Times whose rows are retained (snapped to the nearest step); the
        initial row is always kept.  Default: the final time only.
    noise : (n_steps, n_points - 2) array, optional
        Explicit integrated-noise increments replacing the seeded draws
        (used to probe the deterministic part of the scheme).
    """
    steps = _record_steps(cfg, record_times)
    if noise is not None:
        noise = np.asarray(noise, dtype=float)
        if noise.shape != (cfg.n_steps, cfg.n_points - 2):
            raise ValueError("noise override has the wrong shape")
        gens = []
    else:
        gens = [seed.generator()]
    cols = np.arange(cfg.n_points)
    rows, _ = _march(cfg, gens, sigma, steps, cols, noise=noise)
    return SpaceTimeField(config=cfg, baseline=1.0, times=steps * cfg.dt,
                          deviation=rows[0])


def solve_coupled(sigma: SigmaSpec, cfg: SolverConfig, seed: SeedSpec,
                  record_times=None) -> tuple[SpaceTimeField, SpaceTimeField]:
    """Advance the nonlinear field and its linear companion on shared noise.

    For constant sigma the two discrete recursions are exact scalings of
    one another, so the linear field is marched once and the nonlinear
    deviation is its pointwise multiple; the coupling error is then zero in
    every bit for any constant value.
    """
    steps = _record_steps(cfg, record_times)
    cols = np.arange(cfg.n_points)
    times = steps * cfg.dt
    if sigma.kind == "constant":
        rows, _ = _march(cfg, [seed.generator()], None, steps, cols)
        z_dev = rows[0]
        u_dev = sigma.a * z_dev
    else:
        u_dev, z_dev = _march_coupled(cfg, seed.generator(), sigma, steps)
    u = SpaceTimeField(config=cfg, baseline=1.0, times=times, deviation=u_dev)
    z = SpaceTimeField(config=cfg, baseline=0.0, times=times, deviation=z_dev)
    return u, z


def _march_coupled(cfg: SolverConfig, gen, sigma: SigmaSpec, record_steps: np.ndarray):
    n_pts = cfg.n_points
    c = cfg.dt / (2.0 * cfg.dx * cfg.dx)
    scale = math.sqrt(cfg.dt / cfg.dx)
    vu = np.zeros(n_pts)
    vz = np.zeros(n_pts)
    out_u = np.zeros((len(record_steps), n_pts))
    out_z = np.zeros((len(record_steps), n_pts))
    rec_pos = {int(s): i for i, s in enumerate(record_steps)}
    for n in range(int(record_steps.max())):
        W = gen.standard_normal(n_pts - 2)
        W *= scale
        s_vals = sigma.at_deviation(vu[1:-1])
        lap_u = vu[2:] - 2.0 * vu[1:-1] + vu[:-2]
        lap_z = vz[2:] - 2.0 * vz[1:-1] + vz[:-2]
        vu[1:-1] += c * lap_u + s_vals * W
        vz[1:-1] += c * lap_z + W
        pos = rec_pos.get(n + 1)
        if pos is not None:
            out_u[pos] = vu
            out_z[pos] = vz
    return out_u, out_z


def coupling_error(u: SpaceTimeField, z: SpaceTimeField, sigma1: float,
                   epsilon: float) -> float:
    """max |u - 1 - sigma1 * z| over retained rows with t <= epsilon, x in [0, 1].

    Raises
    ------
    ValueError
        If the two fields were produced on different configs, their
        baselines are not (1, 0), or epsilon exceeds the horizon.
    """
    if u.config != z.config:
        raise ValueError("coupling_error requires fields on one config")
    if u.baseline != 1.0 or z.baseline != 0.0:
        raise ValueError("expected a nonlinear field (baseline 1) and a linear one (baseline 0)")
    if not np.array_equal(u.times, z.times):
        raise ValueError("fields retain different rows")
    if epsilon > u.config.T * (1.0 + 1e-9):
        raise ValueError("epsilon exceeds the solve horizon")
    rows = u.times <= epsilon * (1.0 + 1e-9)
    grid = u.grid
    cols = (grid >= -1e-12) & (grid <= 1.0 + 1e-12)
    diff = u.deviation[np.ix_(rows, cols)] - sigma1 * z.deviation[np.ix_(rows, cols)]
    return float(np.abs(diff).max()) if diff.size else 0.0


def deviation_ensemble(sigma: SigmaSpec | None, cfg: SolverConfig, trials: int,
                       seed: SeedSpec, record_times=None,
                       x_min: float | None = None, x_max: float | None = None):
    """Deviation rows for many independent trials.

    Trial ``i`` draws from ``seed.generator(i)``, so the result is
    independent of internal batching and of how trials are split across
    workers.  Returns ``(deviations, times, columns)`` with ``deviations``
    of shape ``(trials, n_recorded, n_columns)``.
    """
    steps = _record_steps(cfg, record_times)
    grid = cfg.grid()
    lo = -np.inf if x_min is None else x_min - 1e-12
    hi = np.inf if x_max is None else x_max + 1e-12
    cols = np.flatnonzero((grid >= lo) & (grid <= hi))
    out = np.empty((trials, len(steps), len(cols)))
    for start in range(0, trials, _BATCH):
        stop = min(trials, start + _BATCH)
        gens = [seed.generator(i) for i in range(start, stop)]
        rows, _ = _march(cfg, gens, sigma, steps, cols)
        out[start:stop] = rows
    return out, steps * cfg.dt, grid[cols]


def box_sup_ensemble(epsilon: float, R: float, cfg: SolverConfig, trials: int,
                     seed: SeedSpec) -> np.ndarray:
    """Supremum of the linear field over (0, epsilon] x [0, R*sqrt(epsilon)].

    One value per trial, from the trial's own stream; the supremum runs
    over every time step up to epsilon and every grid column inside the
    spatial window.
    """
    if epsilon > cfg.T * (1.0 + 1e-9):
        raise ValueError("epsilon exceeds the solve horizon")
    grid = cfg.grid()
    x_hi = R * math.sqrt(epsilon)
    sup_cols = np.flatnonzero((grid >= -1e-12) & (grid <= x_hi + 1e-12))
    if sup_cols.size == 0:
        raise ValueError("supremum window contains no grid columns")
    sup_steps = cfg.step_of(epsilon)
    record = np.asarray([0], dtype=int)
    out = np.empty(trials)
    for start in range(0, trials, _BATCH):
        stop = min(trials, start + _BATCH)
        gens = [seed.generator(i) for i in range(start, stop)]
        _, sups = _march(cfg, gens, None, record, np.arange(0),
                         sup_cols=sup_cols, sup_steps=sup_steps)
        out[start:stop] = sups
    return out
