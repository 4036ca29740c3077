"""Model parameters, scattering-angle laws, and single-collision kernels.

Velocities live in R^(d(M+N)) with d in {1, 3}; the heat bath occupies the
last N particle slots.  Units put the inverse temperature at 2*pi, so the
thermal state exp(-pi |v|^2) is a probability density with per-coordinate
variance 1/(2*pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quadrature import gauss_legendre

TWO_PI = 2.0 * math.pi
THERMAL_VARIANCE = 1.0 / TWO_PI

MASS_TOL = 1e-12
SINCOS_TOL = 1e-12

KIND_SYSTEM = "system-system"
KIND_RESERVOIR = "reservoir-reservoir"
KIND_CROSS = "cross"
KINDS = (KIND_SYSTEM, KIND_RESERVOIR, KIND_CROSS)

CDF_KNOTS = 2 ** 16  # inverse-CDF table resolution for continuous angle laws


class InvalidDistributionError(ValueError):
    """Angle distribution violates unit mass or the zero sin*cos moment."""


@dataclass(frozen=True)
class GeneratorParams:
    """Counts and collision rates of the system/bath pair process.

    lambda_S, lambda_R and mu are the per-particle scattering rates within
    the system, within the bath, and across, in units of 1/time.
    """

    M: int
    N: int
    lambda_S: float
    lambda_R: float
    mu: float
    dimension: int = 1

    def __post_init__(self):
        if not (isinstance(self.M, int) and isinstance(self.N, int)):
            raise ValueError("particle counts must be integers")
        if self.M < 1 or self.N < 1:
            raise ValueError("particle counts must be positive")
        if self.lambda_S < 0 or self.lambda_R < 0 or self.mu < 0:
            raise ValueError("rates must be nonnegative")
        if self.dimension not in (1, 3):
            raise ValueError("dimension must be 1 or 3")

    @property
    def n_particles(self) -> int:
        return self.M + self.N

    @property
    def kind_rates(self) -> tuple[float, float, float]:
        """Total jump rate contributed by each pair kind.

        Kinds with no population (M=1 or N=1) contribute zero instead of the
        nominal lambda*count/2, so degenerate counts stay simulable.
        """
        t_ss = self.lambda_S * self.M / 2.0 if self.M >= 2 else 0.0
        t_rr = self.lambda_R * self.N / 2.0 if self.N >= 2 else 0.0
        t_cross = self.mu * self.M
        return (t_ss, t_rr, t_cross)

    @property
    def total_rate(self) -> float:
        """Total jump intensity of the pair process."""
        return sum(self.kind_rates)

    @property
    def kind_probabilities(self) -> np.ndarray:
        lam = self.total_rate
        if lam <= 0.0:
            raise ValueError("total jump rate is zero; no events to attribute")
        return np.array(self.kind_rates) / lam

    def pair_weight(self, i: int, j: int) -> float:
        """Probability that a single jump picks the (1-based) pair i < j."""
        pair = PairIndex.of(i, j, self.M)
        lam = self.total_rate
        if lam <= 0.0:
            raise ValueError("total jump rate is zero")
        if pair.kind == KIND_SYSTEM:
            return self.lambda_S / (lam * (self.M - 1)) if self.M >= 2 else 0.0
        if pair.kind == KIND_RESERVOIR:
            return self.lambda_R / (lam * (self.N - 1)) if self.N >= 2 else 0.0
        return self.mu / (lam * self.N)

    @classmethod
    def classical_kac(cls, M: int, N: int, dimension: int = 1) -> "GeneratorParams":
        """All-pairs model with uniform pair rate 2/(M+N-1), split across kinds."""
        denom = M + N - 1
        return cls(
            M=M,
            N=N,
            lambda_S=2.0 * (M - 1) / denom,
            lambda_R=2.0 * (N - 1) / denom,
            mu=2.0 * N / denom,
            dimension=dimension,
        )


@dataclass(frozen=True)
class PairIndex:
    """Unordered particle pair, 1-based, classified by which side each index touches."""

    i: int
    j: int
    kind: str

    @classmethod
    def of(cls, i: int, j: int, M: int) -> "PairIndex":
        if not 1 <= i < j:
            raise ValueError(f"need 1 <= i < j, got ({i}, {j})")
        if j <= M:
            kind = KIND_SYSTEM
        elif i > M:
            kind = KIND_RESERVOIR
        else:
            kind = KIND_CROSS
        return cls(i=i, j=j, kind=kind)


def _periodic_table(thetas: np.ndarray, values: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def interp(x):
        return np.interp(np.asarray(x, dtype=float), thetas, values, period=TWO_PI)

    return interp


@dataclass
class AngleDistribution:
    """Law of the scattering angle on [-pi, pi].

    Either an atomic measure, the uniform density, or a continuous density
    given by a callable or a periodic linear-interpolation table.  Unit mass
    and a vanishing integral of sin*cos are enforced at construction.
    """

    kind: str  # "uniform" | "atoms" | "density"
    atom_thetas: np.ndarray | None = None
    atom_weights: np.ndarray | None = None
    density: Callable[[np.ndarray], np.ndarray] | None = None
    table: tuple[np.ndarray, np.ndarray] | None = None
    metadata: dict = field(default_factory=dict)
    _segments: np.ndarray | None = None
    _cdf: tuple[np.ndarray, np.ndarray] | None = None
    sin2_moment: float = field(init=False, default=0.0)
    sincos_moment: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.kind == "density":
            probe = self.density(np.linspace(-math.pi, math.pi, 4097))
            if np.any(np.asarray(probe) < -1e-12):
                raise InvalidDistributionError("density takes negative values")
        mass = self.moment(lambda t: np.ones_like(t))
        if abs(mass - 1.0) > MASS_TOL:
            raise InvalidDistributionError(f"total mass {mass!r} differs from 1 beyond {MASS_TOL}")
        sincos = self.moment(lambda t: np.sin(t) * np.cos(t))
        if abs(sincos) > SINCOS_TOL:
            raise InvalidDistributionError(f"sin*cos moment {sincos!r} exceeds {SINCOS_TOL}")
        self.sincos_moment = sincos
        self.sin2_moment = self.moment(lambda t: np.sin(t) ** 2)

    # -- constructors ------------------------------------------------------

    @classmethod
    def uniform(cls) -> "AngleDistribution":
        return cls(kind="uniform", metadata={"type": "uniform"})

    @classmethod
    def atoms(cls, pairs: Sequence[tuple[float, float]]) -> "AngleDistribution":
        thetas = np.array([t for t, _ in pairs], dtype=float)
        weights = np.array([p for _, p in pairs], dtype=float)
        if np.any(weights < 0):
            raise InvalidDistributionError("atom weights must be nonnegative")
        if np.any(np.abs(thetas) > math.pi + 1e-15):
            raise InvalidDistributionError("atoms must lie in [-pi, pi]")
        return cls(
            kind="atoms",
            atom_thetas=thetas,
            atom_weights=weights,
            metadata={"type": "atoms", "n_atoms": len(thetas)},
        )

    @classmethod
    def half_pi_atoms(cls) -> "AngleDistribution":
        """Equal point masses at +pi/2 and -pi/2."""
        return cls.atoms([(math.pi / 2, 0.5), (-math.pi / 2, 0.5)])

    @classmethod
    def from_density(cls, fn: Callable[[np.ndarray], np.ndarray], segments: int = 1024) -> "AngleDistribution":
        edges = np.linspace(-math.pi, math.pi, segments + 1)
        return cls(
            kind="density",
            density=fn,
            _segments=edges,
            metadata={"type": "density", "cdf_knots": CDF_KNOTS},
        )

    @classmethod
    def from_table(cls, thetas: Sequence[float], values: Sequence[float]) -> "AngleDistribution":
        th = np.asarray(thetas, dtype=float)
        va = np.asarray(values, dtype=float)
        if th.ndim != 1 or th.shape != va.shape or len(th) < 2:
            raise InvalidDistributionError("table needs matching 1-D thetas/values with >= 2 knots")
        if np.any(np.diff(th) <= 0):
            raise InvalidDistributionError("table thetas must be strictly increasing")
        if np.any(va < -1e-12):
            raise InvalidDistributionError("table density must be nonnegative")
        va = np.clip(va, 0.0, None)
        edges = np.unique(np.concatenate([[-math.pi], th, [math.pi]]))
        return cls(
            kind="density",
            density=_periodic_table(th, va),
            table=(th, va),
            _segments=edges,
            metadata={"type": "density_table", "knots": len(th), "cdf_knots": CDF_KNOTS},
        )

    # -- moments and Fourier data -------------------------------------------

    def moment(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of fn against the angle law."""
        if self.kind == "uniform":
            edges = np.linspace(-math.pi, math.pi, 513)
            return _segment_integral(lambda t: fn(t) / TWO_PI, edges)
        if self.kind == "atoms":
            return float(np.sum(self.atom_weights * fn(self.atom_thetas)))
        return _segment_integral(lambda t: fn(t) * self.density(t), self._segments)

    def fourier_coefficient(self, m: int) -> complex:
        """Coefficient (1/(2 pi)) * integral of exp(-i m theta) against the law."""
        if self.kind == "uniform":
            return complex(1.0 / TWO_PI) if m == 0 else 0.0j
        if self.kind == "atoms":
            return complex(np.sum(self.atom_weights * np.exp(-1j * m * self.atom_thetas)) / TWO_PI)
        re = self.moment(lambda t: np.cos(m * t)) / TWO_PI
        im = self.moment(lambda t: -np.sin(m * t)) / TWO_PI
        return complex(re, im)

    # -- sampling ------------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(-math.pi, math.pi, size)
        if self.kind == "atoms":
            idx = rng.choice(len(self.atom_thetas), size=size, p=self.atom_weights)
            return self.atom_thetas[idx]
        knots, cdf = self._inverse_cdf_table()
        return np.interp(rng.random(size), cdf, knots)

    def _inverse_cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        if self._cdf is None:
            knots = np.linspace(-math.pi, math.pi, CDF_KNOTS + 1)
            dens = np.clip(self.density(knots), 0.0, None)
            cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(knots))])
            cdf /= cdf[-1]
            self._cdf = (knots, cdf)
        return self._cdf


def _segment_integral(fn, edges: np.ndarray, order: int = 12) -> float:
    x, w = gauss_legendre(order)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    pts = mid + half * x[None, :]
    vals = np.asarray(fn(pts.ravel()), dtype=float).reshape(pts.shape)
    return float(np.sum(vals * w[None, :] * half))


@dataclass(frozen=True)
class CollisionEvent:
    """A single jump: waiting time, pair, and scattering parameter (angle or axis)."""

    time: float
    pair: PairIndex
    parameter: float | np.ndarray

    def __post_init__(self):
        if self.time < 0:
            raise ValueError("waiting time must be nonnegative")
        if isinstance(self.parameter, np.ndarray):
            norm = float(np.linalg.norm(self.parameter))
            if abs(norm - 1.0) > 1e-14:
                raise ValueError(f"collision axis must be unit length, |omega| = {norm!r}")


def effective_coupling_rate(params: GeneratorParams, rho: AngleDistribution | None = None) -> float:
    """Cross-collision rate times the mean squared sine of the scattering angle.

    This is the base rate of the entropy envelope; in three dimensions the
    angle average is the constant 1/3.
    """
    if params.dimension == 3:
        return params.mu / 3.0
    if rho is None:
        raise ValueError("an angle distribution is required in dimension 1")
    return params.mu * rho.sin2_moment


def rotate_pair_1d(z: np.ndarray, pair: PairIndex, theta: float) -> np.ndarray:
    """Rotate the (i, j) velocity plane by theta; other coordinates untouched."""
    out = np.array(z, dtype=float)
    i, j = pair.i - 1, pair.j - 1
    c, s = math.cos(theta), math.sin(theta)
    vi, vj = out[i], out[j]
    out[i] = vi * c + vj * s
    out[j] = vj * c - vi * s
    return out


def collide_pair_3d(z: np.ndarray, pair: PairIndex, omega: np.ndarray) -> np.ndarray:
    """Exchange the omega-component of the relative velocity of the pair.

    Conserves the pair's momentum and kinetic energy and is an involution.
    """
    omega = np.asarray(omega, dtype=float)
    if abs(float(np.linalg.norm(omega)) - 1.0) > 1e-12:
        raise ValueError("omega must be a unit vector")
    out = np.array(z, dtype=float)
    i, j = pair.i - 1, pair.j - 1
    g = float(np.dot(omega, out[i] - out[j]))
    out[i] = out[i] - g * omega
    out[j] = out[j] + g * omega
    return out


def uniform_sphere(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform points on the unit sphere, shape (size, 3)."""
    x = rng.normal(size=(size, 3))
    norms = np.linalg.norm(x, axis=1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        x[bad] = rng.normal(size=(int(bad.sum()), 3))
        norms = np.linalg.norm(x, axis=1)
    return x / norms[:, None]


def sample_pair_kinds(params: GeneratorParams, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw event kinds 0 (system), 1 (bath), 2 (cross) with the jump-chain law."""
    cum = np.cumsum(params.kind_probabilities)
    kinds = np.searchsorted(cum, rng.random(size), side="right")
    return np.minimum(kinds, 2).astype(np.int64)


def sample_pairs_array(
    params: GeneratorParams, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized jump-chain pair draw; returns 0-based (i, j) arrays and kinds."""
    M, N = params.M, params.N
    kinds = sample_pair_kinds(params, rng, size)
    u1 = rng.random(size)
    u2 = rng.random(size)
    # Uniform unordered pair within a population of n: first member uniform,
    # second uniform over the rest with a shift past the first.
    a_ss = np.minimum((u1 * M).astype(np.int64), M - 1)
    b_ss = np.minimum((u2 * max(M - 1, 1)).astype(np.int64), max(M - 2, 0))
    b_ss = b_ss + (b_ss >= a_ss)
    a_rr = M + np.minimum((u1 * N).astype(np.int64), N - 1)
    b_rr = np.minimum((u2 * max(N - 1, 1)).astype(np.int64), max(N - 2, 0))
    b_rr = M + b_rr + (b_rr + M >= a_rr)
    a_cr = np.minimum((u1 * M).astype(np.int64), M - 1)
    b_cr = M + np.minimum((u2 * N).astype(np.int64), N - 1)
    a = np.select([kinds == 0, kinds == 1], [a_ss, a_rr], default=a_cr)
    b = np.select([kinds == 0, kinds == 1], [b_ss, b_rr], default=b_cr)
    return np.minimum(a, b), np.maximum(a, b), kinds


def sample_pair(params: GeneratorParams, rng: np.random.Generator) -> PairIndex:
    """Draw a pair with the jump-chain law (uniform within its kind)."""
    i0, j0, _ = sample_pairs_array(params, rng, 1)
    return PairIndex.of(int(i0[0]) + 1, int(j0[0]) + 1, params.M)


def sample_event(
    params: GeneratorParams,
    rho: AngleDistribution | None,
    rng: np.random.Generator,
) -> CollisionEvent:
    """Draw one jump of the pair process: Exp(total rate) wait, pair, parameter."""
    lam = params.total_rate
    if lam <= 0.0:
        raise ValueError("total jump rate is zero; no events occur")
    wait = float(rng.exponential(1.0 / lam))
    pair = sample_pair(params, rng)
    if params.dimension == 3:
        parameter = uniform_sphere(rng, 1)[0]
    else:
        if rho is None:
            raise ValueError("an angle distribution is required in dimension 1")
        parameter = float(rho.sample(rng, 1)[0])
    return CollisionEvent(time=wait, pair=pair, parameter=parameter)
