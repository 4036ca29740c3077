"""Event-driven simulation of trajectory ensembles.

The dynamics is a pure jump process: waiting times are exponential in the
total rate, so the state at the observation times is produced exactly by
drawing the Poisson number of collisions per observation window and applying
that many i.i.d. pair collisions in sequence.  No time discretization error
exists; Monte Carlo error is the only error source.

Reproducibility: trajectory i of a run with seed s uses the counter-based
Philox stream keyed by (s, i), so results are bit-identical for any worker
count, and aggregation follows trajectory order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import (
    THERMAL_VARIANCE,
    AngleDistribution,
    GeneratorParams,
    sample_pairs_array,
    uniform_sphere,
)
from .moments import MomentPair

ENERGY_DRIFT_TOL = 1e-10
_CHUNK = 2048
_BOOTSTRAP_KEY_OFFSET = 2 ** 63  # separates estimator streams from trajectory streams


class SimulationError(RuntimeError):
    """State became non-finite during a trajectory."""


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one unit of work: Philox keyed by (seed, index)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, index & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def estimator_rng(seed: int, index: int) -> np.random.Generator:
    """Stream for resampling procedures, disjoint from trajectory streams."""
    return trajectory_rng(seed, _BOOTSTRAP_KEY_OFFSET + index)


@dataclass(frozen=True)
class ParticleState:
    """System and bath velocities; flat layout, particle p at [d*p : d*p+d]."""

    v: np.ndarray
    w: np.ndarray

    @property
    def total_energy(self) -> float:
        return float(np.dot(self.v, self.v) + np.dot(self.w, self.w))


@dataclass(frozen=True)
class InitialCondition:
    """Initial law of the system block; the bath always starts thermal."""

    kind: str
    s: float = THERMAL_VARIANCE
    mean: tuple[float, ...] | None = None
    s_hot: float | None = None
    s_cold: float | None = None
    n_hot: int | None = None
    sampler: Callable | None = None

    @classmethod
    def thermal(cls) -> "InitialCondition":
        return cls(kind="gaussian_product", s=THERMAL_VARIANCE)

    @classmethod
    def gaussian_product(cls, s: float) -> "InitialCondition":
        if s <= 0:
            raise ValueError("variance must be positive")
        return cls(kind="gaussian_product", s=s)

    @classmethod
    def two_temperature(cls, s_hot: float, s_cold: float, n_hot: int | None = None) -> "InitialCondition":
        if s_hot <= 0 or s_cold <= 0:
            raise ValueError("variances must be positive")
        return cls(kind="two_temperature", s_hot=s_hot, s_cold=s_cold, n_hot=n_hot)

    @classmethod
    def shifted_gaussian(cls, mean: Sequence[float], s: float = THERMAL_VARIANCE) -> "InitialCondition":
        if s <= 0:
            raise ValueError("variance must be positive")
        return cls(kind="shifted_gaussian", s=s, mean=tuple(float(x) for x in mean))

    @classmethod
    def custom(cls, sampler: Callable) -> "InitialCondition":
        return cls(kind="custom", sampler=sampler)

    def _hot_count(self, params: GeneratorParams) -> int:
        return self.n_hot if self.n_hot is not None else (params.M + 1) // 2

    def system_variances(self, params: GeneratorParams) -> np.ndarray:
        """Per-coordinate variances of the system block (analytic kinds only)."""
        d, M = params.dimension, params.M
        if self.kind == "gaussian_product" or self.kind == "shifted_gaussian":
            return np.full(d * M, self.s)
        if self.kind == "two_temperature":
            hot = self._hot_count(params)
            out = np.full(d * M, self.s_cold)
            out[: d * hot] = self.s_hot
            return out
        raise ValueError(f"no analytic variances for kind {self.kind!r}")

    def system_means(self, params: GeneratorParams) -> np.ndarray:
        d, M = params.dimension, params.M
        if self.kind == "shifted_gaussian":
            mean = np.asarray(self.mean, dtype=float)
            if mean.shape != (d * M,):
                raise ValueError(f"mean must have length {d * M}")
            return mean
        if self.kind in ("gaussian_product", "two_temperature"):
            return np.zeros(d * M)
        raise ValueError(f"no analytic means for kind {self.kind!r}")

    def initial_moments(self, params: GeneratorParams) -> MomentPair:
        """Mean per-coordinate second moments (system, bath) for the oracle."""
        var = self.system_variances(params)
        mean = self.system_means(params)
        return MomentPair(float(np.mean(var + mean ** 2)), THERMAL_VARIANCE)

    def sample_system(self, params: GeneratorParams, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "custom":
            out = np.asarray(self.sampler(params, rng), dtype=float)
            if out.shape != (params.dimension * params.M,):
                raise ValueError("custom sampler returned a wrong-shaped system block")
            return out
        return self.system_means(params) + rng.normal(size=params.dimension * params.M) * np.sqrt(
            self.system_variances(params)
        )


@dataclass(frozen=True)
class EnsembleConfig:
    """Size, observation grid, seed, and which observables to keep."""

    n_traj: int
    t_grid: tuple[float, ...]
    seed: int
    record: tuple[str, ...] = ("system_velocities", "collision_counts")

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        grid = np.asarray(self.t_grid, dtype=float)
        if len(grid) < 1 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
            raise ValueError("t_grid must start at 0 and be strictly increasing")
        known = {"system_velocities", "collision_counts", "energies"}
        unknown = set(self.record) - known
        if unknown:
            raise ValueError(f"unknown record keys: {sorted(unknown)}")


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of the system block plus per-kind collision counts."""

    t_grid: np.ndarray
    snapshots: np.ndarray  # (n_times, d*M)
    counts: np.ndarray  # (3,) system/bath/cross collision totals
    energies: np.ndarray | None = None

    def __post_init__(self):
        if len(self.snapshots) != len(self.t_grid):
            raise ValueError("one snapshot per observation time required")


def simulate_trajectory(
    params: GeneratorParams,
    rho: AngleDistribution | None,
    init: InitialCondition,
    t_grid: Sequence[float],
    rng: np.random.Generator,
    record_energies: bool = True,
) -> Trajectory:
    """Evolve one trajectory, returning system snapshots at the given times."""
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 1 or t_grid[0] < 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be nonnegative and strictly increasing")
    d, M, N = params.dimension, params.M, params.N
    dm = d * M
    lam = params.total_rate

    v0 = init.sample_system(params, rng)
    w0 = rng.normal(size=d * N) * math.sqrt(THERMAL_VARIANCE)
    z = np.concatenate([v0, w0])
    e0 = float(np.dot(z, z))

    windows = np.diff(np.concatenate([[0.0], t_grid]))
    if lam > 0:
        n_events = rng.poisson(lam * windows)
    else:
        n_events = np.zeros(len(windows), dtype=np.int64)
    total = int(n_events.sum())

    if total > 0:
        i0, j0, kinds = sample_pairs_array(params, rng, total)
        counts = np.bincount(kinds, minlength=3).astype(np.int64)
        if d == 1:
            thetas = rho.sample(rng, total) if rho is not None else None
            if thetas is None:
                raise ValueError("an angle distribution is required in dimension 1")
        else:
            omegas = uniform_sphere(rng, total)
    else:
        counts = np.zeros(3, dtype=np.int64)

    snapshots = np.empty((len(t_grid), dm))
    energies = np.empty(len(t_grid)) if record_energies else None

    if d == 1 and total > 0:
        cos_l = np.cos(thetas).tolist()
        sin_l = np.sin(thetas).tolist()
        i_l = i0.tolist()
        j_l = j0.tolist()
        zl = z.tolist()
        pos = 0
        for idx, n_ev in enumerate(n_events):
            for e in range(pos, pos + int(n_ev)):
                i = i_l[e]
                j = j_l[e]
                vi = zl[i]
                vj = zl[j]
                c = cos_l[e]
                s = sin_l[e]
                zl[i] = vi * c + vj * s
                zl[j] = vj * c - vi * s
            pos += int(n_ev)
            snapshots[idx] = zl[:dm]
            _check_energy(zl, e0, energies, idx, t_grid[idx])
        return Trajectory(t_grid=t_grid, snapshots=snapshots, counts=counts, energies=energies)

    # d == 3 (or no events): operate on the (M+N, 3) view
    zz = z.reshape(-1, d) if d == 3 else z.reshape(-1, 1)
    pos = 0
    for idx, n_ev in enumerate(n_events):
        for e in range(pos, pos + int(n_ev)):
            i = i0[e]
            j = j0[e]
            om = omegas[e]
            g = float(np.dot(om, zz[i] - zz[j]))
            zz[i] -= g * om
            zz[j] += g * om
        pos += int(n_ev)
        snapshots[idx] = zz.ravel()[:dm]
        _check_energy(zz.ravel(), e0, energies, idx, t_grid[idx])
    return Trajectory(t_grid=t_grid, snapshots=snapshots, counts=counts, energies=energies)


def _check_energy(z, e0: float, energies, idx: int, t: float):
    e = float(np.dot(z, z)) if isinstance(z, np.ndarray) else math.fsum(x * x for x in z)
    if not math.isfinite(e):
        raise SimulationError(f"non-finite state at t={t} (energy {e!r})")
    if energies is not None:
        energies[idx] = e


@dataclass(frozen=True)
class EnsembleResult:
    """Stacked trajectory observables in trajectory order."""

    params: GeneratorParams
    t_grid: np.ndarray
    seed: int
    snapshots: np.ndarray  # (n_traj, n_times, d*M)
    counts: np.ndarray  # (n_traj, 3)
    energies: np.ndarray | None

    @property
    def n_traj(self) -> int:
        return self.snapshots.shape[0]

    def trajectory(self, index: int) -> Trajectory:
        energies = self.energies[index] if self.energies is not None else None
        return Trajectory(
            t_grid=self.t_grid,
            snapshots=self.snapshots[index],
            counts=self.counts[index],
            energies=energies,
        )

    def cloud(self, time_index: int) -> np.ndarray:
        """System velocity samples at one observation time, shape (n_traj, d*M)."""
        return self.snapshots[:, time_index, :]

    def moment_rows(self) -> list[tuple[float, float, float, int]]:
        """Rows (t, mean per-coordinate system second moment, std error, n)."""
        rows = []
        for ti, t in enumerate(self.t_grid):
            per_traj = np.mean(self.cloud(ti) ** 2, axis=1)
            mean = float(per_traj.mean())
            se = float(per_traj.std(ddof=1) / math.sqrt(self.n_traj)) if self.n_traj > 1 else 0.0
            rows.append((float(t), mean, se, self.n_traj))
        return rows


def _simulate_range(args) -> tuple[int, np.ndarray, np.ndarray, np.ndarray | None]:
    params, rho, init, t_grid, seed, start, stop, record_energies = args
    n_t = len(t_grid)
    dm = params.dimension * params.M
    snaps = np.empty((stop - start, n_t, dm))
    counts = np.empty((stop - start, 3), dtype=np.int64)
    energies = np.empty((stop - start, n_t)) if record_energies else None
    for local, index in enumerate(range(start, stop)):
        traj = simulate_trajectory(
            params, rho, init, t_grid, trajectory_rng(seed, index), record_energies=record_energies
        )
        snaps[local] = traj.snapshots
        counts[local] = traj.counts
        if record_energies:
            energies[local] = traj.energies
    return start, snaps, counts, energies


def simulate_ensemble(
    params: GeneratorParams,
    rho: AngleDistribution | None,
    init: InitialCondition,
    config: EnsembleConfig,
    workers: int = 1,
) -> EnsembleResult:
    """Run n_traj independent trajectories; bit-reproducible for fixed seed.

    Trajectories are independent units of work scheduled in fixed chunks;
    stream identity depends only on (seed, trajectory index), so any worker
    count yields identical arrays.
    """
    t_grid = np.asarray(config.t_grid, dtype=float)
    n = config.n_traj
    dm = params.dimension * params.M
    record_energies = "energies" in config.record
    snapshots = np.empty((n, len(t_grid), dm))
    counts = np.empty((n, 3), dtype=np.int64)
    energies = np.empty((n, len(t_grid))) if record_energies else None
    jobs = [
        (params, rho, init, t_grid, config.seed, start, min(start + _CHUNK, n), record_energies)
        for start in range(0, n, _CHUNK)
    ]
    if workers <= 1:
        results = map(_simulate_range, jobs)
        for start, snaps, cnts, ener in results:
            stop = start + len(snaps)
            snapshots[start:stop] = snaps
            counts[start:stop] = cnts
            if record_energies:
                energies[start:stop] = ener
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for start, snaps, cnts, ener in pool.map(_simulate_range, jobs, chunksize=1):
                stop = start + len(snaps)
                snapshots[start:stop] = snaps
                counts[start:stop] = cnts
                if record_energies:
                    energies[start:stop] = ener
    return EnsembleResult(
        params=params,
        t_grid=t_grid,
        seed=config.seed,
        snapshots=snapshots,
        counts=counts,
        energies=energies,
    )
