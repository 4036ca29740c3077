"""Relative-entropy estimation for system-velocity samples.

The target quantity is the relative entropy of the system marginal with
respect to the thermal state exp(-pi |v|^2), which splits as
pi * E|v|^2 minus the differential entropy.  The differential entropy is
estimated with the classic k-nearest-neighbor construction; standard errors
come from bootstrapping the per-sample contributions (refitting neighbor
graphs on with-replacement resamples would inject spurious zero distances).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln

from .model import AngleDistribution, GeneratorParams
from .moments import DecayEnvelope

DEFAULT_K = 4
DEFAULT_BOOTSTRAP = 50
BIAS_MARGIN_PER_DIM = 0.02  # empirical kNN bias allowance per dimension, n >= 1e5
JITTER_SCALE = 1e-12


@dataclass(frozen=True)
class SampleCloud:
    """System-velocity samples at a fixed observation time."""

    points: np.ndarray
    t: float = 0.0
    seed: int = 0
    n_traj: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or len(pts) < 2:
            raise ValueError("need a 2-D array with at least two samples")
        if not np.all(np.isfinite(pts)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class EntropyEstimate:
    """Point estimate of the relative entropy with resampled standard error."""

    value: float
    std_error: float
    differential_entropy: float
    second_moment_term: float
    estimator: dict = field(default_factory=dict)


def log_unit_ball_volume(dim: int) -> float:
    return 0.5 * dim * math.log(math.pi) - gammaln(0.5 * dim + 1.0)


def _knn_log_distances(points: np.ndarray, k: int, rng: np.random.Generator) -> tuple[np.ndarray, bool]:
    tree = cKDTree(points)
    dist, _ = tree.query(points, k=k + 1, workers=-1)
    eps = dist[:, k]
    jittered = False
    if np.any(eps <= 0.0):
        warnings.warn("duplicate samples: jittering at 1e-12 scale", stacklevel=3)
        jittered = True
        scale = JITTER_SCALE * max(1.0, float(np.sqrt(np.mean(points ** 2))))
        points = points + rng.normal(size=points.shape) * scale
        tree = cKDTree(points)
        dist, _ = tree.query(points, k=k + 1, workers=-1)
        eps = dist[:, k]
    return np.log(eps), jittered


def knn_differential_entropy(
    cloud: SampleCloud | np.ndarray,
    k: int = DEFAULT_K,
    n_bootstrap: int = DEFAULT_BOOTSTRAP,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Nearest-neighbor estimate of -int f log f with bootstrap standard error."""
    points = cloud.points if isinstance(cloud, SampleCloud) else np.asarray(cloud, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n, dim = points.shape
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n samples")
    rng = rng if rng is not None else np.random.default_rng(0)
    log_eps, jittered = _knn_log_distances(points, k, rng)
    const = digamma(n) - digamma(k) + log_unit_ball_volume(dim)
    contributions = dim * log_eps
    value = const + float(contributions.mean())
    replicates = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        idx = rng.integers(0, n, n)
        replicates[b] = contributions[idx].mean()
    return value, float(replicates.std(ddof=1))


def relative_entropy_to_thermal(
    cloud: SampleCloud | np.ndarray,
    k: int = DEFAULT_K,
    n_bootstrap: int = DEFAULT_BOOTSTRAP,
    rng: np.random.Generator | None = None,
) -> EntropyEstimate:
    """Estimate the relative entropy of the sample law w.r.t. the thermal state.

    Combines the second-moment term and the differential-entropy term at the
    per-sample level so the bootstrap captures their correlation.
    """
    points = cloud.points if isinstance(cloud, SampleCloud) else np.asarray(cloud, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n, dim = points.shape
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n samples")
    rng = rng if rng is not None else np.random.default_rng(0)
    log_eps, jittered = _knn_log_distances(points, k, rng)
    const = digamma(n) - digamma(k) + log_unit_ball_volume(dim)
    moment_part = math.pi * np.sum(points ** 2, axis=1)
    contributions = moment_part - dim * log_eps
    value = float(contributions.mean()) - const
    replicates = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        idx = rng.integers(0, n, n)
        replicates[b] = contributions[idx].mean()
    std_error = float(replicates.std(ddof=1))
    h_value = const + float(dim * log_eps.mean())
    return EntropyEstimate(
        value=value,
        std_error=std_error,
        differential_entropy=h_value,
        second_moment_term=float(moment_part.mean()),
        estimator={
            "method": "knn",
            "k": k,
            "n": n,
            "dim": dim,
            "bootstrap": n_bootstrap,
            "jittered": jittered,
        },
    )


def histogram_differential_entropy(
    samples: np.ndarray, bins: int = 256, span_sds: float = 6.0
) -> float:
    """Plug-in histogram estimate for 1-D clouds, as a kNN cross-check."""
    x = np.asarray(samples, dtype=float).ravel()
    sd = x.std()
    lo, hi = x.mean() - span_sds * sd, x.mean() + span_sds * sd
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    width = edges[1] - edges[0]
    p = counts / counts.sum()
    nz = p > 0
    return float(-(p[nz] * np.log(p[nz] / width)).sum())


def gaussian_kl_to_thermal(variance: float) -> float:
    """Relative entropy per coordinate of N(0, variance) against the thermal state."""
    ratio = 2.0 * math.pi * variance
    return 0.5 * (ratio - 1.0 - math.log(ratio))


def gaussian_initial_entropy(init, params: GeneratorParams) -> float:
    """Exact relative entropy of an analytic Gaussian initial condition."""
    if init.kind == "custom":
        raise ValueError("custom initial conditions have no analytic entropy; estimate it")
    variances = init.system_variances(params)
    means = init.system_means(params)
    return float(sum(gaussian_kl_to_thermal(s) for s in variances) + math.pi * np.dot(means, means))


@dataclass(frozen=True)
class DecayCheckRow:
    t: float
    estimate: float
    std_error: float
    envelope: float
    bound: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.bound - self.estimate


@dataclass(frozen=True)
class DecayReport:
    rows: tuple[DecayCheckRow, ...]
    s0: float
    bias_margin: float

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)


def decay_check(
    t_grid,
    estimates: list[EntropyEstimate],
    s0: float,
    params: GeneratorParams,
    rho: AngleDistribution | None = None,
    bias_margin: float | None = None,
) -> DecayReport:
    """Verdict per observation time of estimate <= envelope * S0 + 3 SE + bias.

    Failures become report rows, not exceptions.
    """
    if len(estimates) != len(t_grid):
        raise ValueError("one estimate per observation time required")
    if bias_margin is None:
        bias_margin = BIAS_MARGIN_PER_DIM * params.dimension * params.M
    env = DecayEnvelope.from_params(params, rho)
    rows = []
    for t, est in zip(t_grid, estimates):
        d_t = env(float(t))
        bound = d_t * s0 + 3.0 * est.std_error + bias_margin
        rows.append(
            DecayCheckRow(
                t=float(t),
                estimate=est.value,
                std_error=est.std_error,
                envelope=d_t,
                bound=bound,
                passed=bool(est.value <= bound),
            )
        )
    return DecayReport(rows=tuple(rows), s0=s0, bias_margin=bias_margin)
