"""Products of random pair collisions and the structure of their system block.

A word of k collisions realizes an orthogonal matrix on R^(d(M+N)); the
top-left block A of its inverse controls how the system marginal mixes with
the bath.  This module samples words, decomposes A, Monte Carlo-estimates
the averaged sum rule E[A A^T] = c_k I, and enumerates the weighted
projection data that satisfy the geometric sum rule exactly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .discretize import DiscreteAngleMeasure, SphereQuadrature
from .inequalities import BLDatum
from .model import (
    AngleDistribution,
    GeneratorParams,
    PairIndex,
    sample_pairs_array,
    uniform_sphere,
)
from .moments import sum_rule_constant
from .quadrature import gauss_hermite_gaussian, tensor_rule

GAMMA_CLAMP = 1e-10


@dataclass(frozen=True)
class RotationWord:
    """A sequence of pair collisions together with its realized inverse matrix."""

    pairs: tuple[PairIndex, ...]
    parameters: np.ndarray  # (k,) angles or (k, 3) unit axes
    inverse_matrix: np.ndarray
    dimension: int
    M: int
    N: int

    @property
    def k(self) -> int:
        return len(self.pairs)

    @property
    def matrix(self) -> np.ndarray:
        return self.inverse_matrix.T

    def orthogonality_defect(self) -> float:
        w = self.inverse_matrix
        return float(np.max(np.abs(w @ w.T - np.eye(w.shape[0]))))


@dataclass(frozen=True)
class BlockDecomposition:
    """System/bath blocks of the inverse word matrix."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def block_identity_defect(self) -> float:
        m = self.a.shape[0]
        return float(np.max(np.abs(self.a @ self.a.T + self.b @ self.b.T - np.eye(m))))


@dataclass(frozen=True)
class SingularSpectrum:
    """Singular value decomposition A = U diag(gammas) V^T with gammas in [0, 1]."""

    gammas: np.ndarray
    u: np.ndarray
    vt: np.ndarray

    def reconstruction_defect(self, a: np.ndarray) -> float:
        return float(np.max(np.abs(self.u @ np.diag(self.gammas) @ self.vt - a)))


def realize_inverse_1d(i0: np.ndarray, j0: np.ndarray, thetas: np.ndarray, n: int) -> np.ndarray:
    """Inverse matrices of words given by 0-based pair arrays of shape (B, k)."""
    i0 = np.atleast_2d(i0)
    j0 = np.atleast_2d(j0)
    thetas = np.atleast_2d(thetas)
    batch, k = i0.shape
    w = np.broadcast_to(np.eye(n), (batch, n, n)).copy()
    rows = np.arange(batch)
    cs = np.cos(thetas)
    sn = np.sin(thetas)
    for step in range(k):
        i = i0[:, step]
        j = j0[:, step]
        c = cs[:, step][:, None]
        s = sn[:, step][:, None]
        ri = w[rows, i, :]
        rj = w[rows, j, :]
        w[rows, i, :] = c * ri - s * rj
        w[rows, j, :] = s * ri + c * rj
    return w


def realize_inverse_3d(i0: np.ndarray, j0: np.ndarray, omegas: np.ndarray, n: int) -> np.ndarray:
    """Same as realize_inverse_1d for exchange collisions along unit axes.

    omegas has shape (B, k, 3); each collision is its own inverse, acting on
    the two 3-coordinate blocks of the pair.
    """
    i0 = np.atleast_2d(i0)
    j0 = np.atleast_2d(j0)
    if omegas.ndim == 2:
        omegas = omegas[None, :, :]
    batch, k = i0.shape
    dim = 3 * n
    w = np.broadcast_to(np.eye(dim), (batch, dim, dim)).copy()
    rows = np.arange(batch)[:, None]
    offs = np.arange(3)[None, :]
    for step in range(k):
        bi = 3 * i0[:, step][:, None] + offs
        bj = 3 * j0[:, step][:, None] + offs
        om = omegas[:, step, :]
        ri = w[rows, bi, :]
        rj = w[rows, bj, :]
        g = np.einsum("bc,bcm->bm", om, ri - rj)
        corr = om[:, :, None] * g[:, None, :]
        w[rows, bi, :] = ri - corr
        w[rows, bj, :] = rj + corr
    return w


def sample_word(
    k: int,
    params: GeneratorParams,
    rho: AngleDistribution | None,
    rng: np.random.Generator,
) -> RotationWord:
    """Word of k collisions with jump-chain pair weights and i.i.d. parameters."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    n = params.n_particles
    d = params.dimension
    if k == 0:
        size = n if d == 1 else 3 * n
        params_arr = np.zeros((0,)) if d == 1 else np.zeros((0, 3))
        return RotationWord(
            pairs=(), parameters=params_arr, inverse_matrix=np.eye(size),
            dimension=d, M=params.M, N=params.N,
        )
    i0, j0, _ = sample_pairs_array(params, rng, k)
    pairs = tuple(PairIndex.of(int(i) + 1, int(j) + 1, params.M) for i, j in zip(i0, j0))
    if d == 1:
        if rho is None:
            raise ValueError("an angle distribution is required in dimension 1")
        thetas = rho.sample(rng, k)
        inv = realize_inverse_1d(i0, j0, thetas, n)[0]
        return RotationWord(pairs=pairs, parameters=thetas, inverse_matrix=inv,
                            dimension=1, M=params.M, N=params.N)
    omegas = uniform_sphere(rng, k)
    inv = realize_inverse_3d(i0, j0, omegas[None, :, :], n)[0]
    return RotationWord(pairs=pairs, parameters=omegas, inverse_matrix=inv,
                        dimension=3, M=params.M, N=params.N)


def decompose(word: RotationWord) -> tuple[BlockDecomposition, SingularSpectrum]:
    """Split the inverse word matrix into blocks and decompose the system block."""
    dm = word.dimension * word.M
    inv = word.inverse_matrix
    blocks = BlockDecomposition(
        a=inv[:dm, :dm], b=inv[:dm, dm:], c=inv[dm:, :dm], d=inv[dm:, dm:]
    )
    u, gammas, vt = np.linalg.svd(blocks.a)
    if np.any(gammas > 1.0 + GAMMA_CLAMP):
        raise ValueError(f"singular value {gammas.max()!r} above 1 beyond clamp tolerance")
    gammas = np.clip(gammas, 0.0, 1.0)
    return blocks, SingularSpectrum(gammas=gammas, u=u, vt=vt)


def sigma_subset_weights(gammas: np.ndarray) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """All coordinate subsets sigma with weights prod gamma^2 (off sigma) * (1-gamma^2) (on sigma).

    The weights sum to 1 and, summed against the complement projectors,
    rebuild diag(gammas^2).
    """
    m = len(gammas)
    g2 = np.asarray(gammas, dtype=float) ** 2
    subsets: list[tuple[int, ...]] = []
    weights = np.empty(2 ** m)
    for mask in range(2 ** m):
        sigma = tuple(i for i in range(m) if mask >> i & 1)
        w = 1.0
        for i in range(m):
            w *= (1.0 - g2[i]) if (mask >> i & 1) else g2[i]
        subsets.append(sigma)
        weights[mask] = w
    return subsets, weights


@dataclass(frozen=True)
class SumRuleEstimate:
    """Monte Carlo average of A A^T against its predicted multiple of the identity."""

    k: int
    n_words: int
    z_hat: np.ndarray
    std_error: np.ndarray
    predicted: float
    max_deviation: float
    max_offdiagonal: float
    passed: bool


def mc_sum_rule(
    k: int,
    params: GeneratorParams,
    rho: AngleDistribution | None,
    n_words: int,
    rng: np.random.Generator,
    chunk: int = 20000,
) -> SumRuleEstimate:
    """Estimate E[A A^T] over random words and compare with the sum-rule constant."""
    if n_words < 1:
        raise ValueError("n_words must be >= 1")
    d = params.dimension
    n = params.n_particles
    dm = d * params.M
    total = np.zeros((dm, dm))
    total_sq = np.zeros((dm, dm))
    done = 0
    while done < n_words:
        b = min(chunk, n_words - done)
        if k == 0:
            aat = np.broadcast_to(np.eye(dm), (b, dm, dm))
        else:
            i0, j0, _ = sample_pairs_array(params, rng, b * k)
            i0 = i0.reshape(b, k)
            j0 = j0.reshape(b, k)
            if d == 1:
                thetas = rho.sample(rng, b * k).reshape(b, k)
                inv = realize_inverse_1d(i0, j0, thetas, n)
            else:
                omegas = uniform_sphere(rng, b * k).reshape(b, k, 3)
                inv = realize_inverse_3d(i0, j0, omegas, n)
            a = inv[:, :dm, :dm]
            aat = np.einsum("bij,bkj->bik", a, a)
        total += aat.sum(axis=0)
        total_sq += (aat * aat).sum(axis=0)
        done += b
    z_hat = total / n_words
    if n_words > 1:
        var = (total_sq - n_words * z_hat * z_hat) / (n_words - 1)
        se = np.sqrt(np.clip(var, 0.0, None) / n_words)
    else:
        se = np.zeros_like(z_hat)
    predicted = sum_rule_constant(k, params, rho)
    target = predicted * np.eye(dm)
    dev = np.abs(z_hat - target)
    off = np.abs(z_hat - np.diag(np.diag(z_hat)))
    passed = bool(np.all(dev <= 4.0 * se + 1e-15))
    return SumRuleEstimate(
        k=k,
        n_words=n_words,
        z_hat=z_hat,
        std_error=se,
        predicted=predicted,
        max_deviation=float(dev.max()),
        max_offdiagonal=float(off.max()),
        passed=passed,
    )


def _psd_sqrt(mat: np.ndarray, clamp: float = 1e-10) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    if np.any(vals < -clamp):
        raise ValueError(f"matrix not positive semidefinite (eigenvalue {vals.min()!r})")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


@dataclass(frozen=True)
class MarginalCheckResult:
    max_residual: float
    refined_residual: float
    reliable: bool


def gaussian_marginal_check(
    a: np.ndarray,
    b: np.ndarray,
    h,
    order: int = 12,
    v_points: np.ndarray | None = None,
) -> MarginalCheckResult:
    """Check that averaging h(Av + Bw) over a thermal w equals the reduced form.

    The reduced form replaces B by the symmetric square root of I - A A^T,
    collapsing the bath integral to system dimension.  h must be vectorized
    over points of shape (n, M).  The result is flagged unreliable when
    doubling the quadrature order moves the residual by more than 1e-6.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n_res = a.shape[0], b.shape[1]
    defect = np.max(np.abs(a @ a.T + b @ b.T - np.eye(m)))
    if defect > 1e-10:
        raise ValueError(f"blocks violate A A^T + B B^T = I by {defect!r}")
    if v_points is None:
        axis = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
        v_points, _ = tensor_rule(axis, np.ones_like(axis), m)
    sqrt_rest = _psd_sqrt(np.eye(m) - a @ a.T)

    def residual(q: int) -> float:
        wpts, wwts = tensor_rule(*gauss_hermite_gaussian(q), n_res)
        upts, uwts = tensor_rule(*gauss_hermite_gaussian(q), m)
        av = v_points @ a.T
        lhs_args = av[:, None, :] + (wpts @ b.T)[None, :, :]
        rhs_args = av[:, None, :] + (upts @ sqrt_rest.T)[None, :, :]
        nv = len(v_points)
        lhs = h(lhs_args.reshape(-1, m)).reshape(nv, -1) @ wwts
        rhs = h(rhs_args.reshape(-1, m)).reshape(nv, -1) @ uwts
        return float(np.max(np.abs(lhs - rhs)))

    res = residual(order)
    res2 = residual(2 * order)
    return MarginalCheckResult(
        max_residual=res2,
        refined_residual=res2,
        reliable=bool(abs(res2 - res) <= 1e-6),
    )


def _atomic_parameters(measure) -> tuple[list, np.ndarray, int]:
    """Atoms (parameter, weight) of a discrete angle or sphere measure."""
    if isinstance(measure, DiscreteAngleMeasure):
        return list(measure.thetas), measure.weights, 1
    if isinstance(measure, SphereQuadrature):
        return list(measure.nodes), measure.weights, 3
    if isinstance(measure, AngleDistribution) and measure.kind == "atoms":
        return list(measure.atom_thetas), measure.atom_weights, 1
    raise TypeError("need a discrete angle measure, a sphere rule, or an atomic angle law")


def build_bl_datum(
    k: int,
    params: GeneratorParams,
    measure,
    max_terms: int = 10 ** 6,
    tol: float = 1e-10,
) -> BLDatum:
    """Enumerate the weighted projections generated by words of length k.

    Every (word, subset) contributes the map P_(sigma^c) U^T with weight
    lambda-weights times atom weights times the subset's gamma factors,
    normalized by the sum-rule constant so the maps resolve the identity.
    """
    atoms, atom_weights, d = _atomic_parameters(measure)
    if d != params.dimension:
        raise ValueError("measure dimension does not match params.dimension")
    dm = d * params.M
    n = params.n_particles
    pair_list = [
        (i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)
        if params.pair_weight(i, j) > 0.0
    ]
    n_terms = (len(pair_list) * len(atoms)) ** k * 2 ** dm
    if n_terms > max_terms:
        raise ValueError(f"enumeration would produce {n_terms} terms (limit {max_terms})")
    if params.dimension == 1:
        c_km = sum_rule_constant(k, params, measure.as_angle_distribution()
                                 if isinstance(measure, DiscreteAngleMeasure) else measure)
    else:
        c_km = sum_rule_constant(k, params)
    maps: list[np.ndarray] = []
    weights: list[float] = []
    for pair_choice in itertools.product(range(len(pair_list)), repeat=k):
        lam_weight = math.prod(params.pair_weight(*pair_list[p]) for p in pair_choice)
        i0 = np.array([[pair_list[p][0] - 1 for p in pair_choice]], dtype=np.int64)
        j0 = np.array([[pair_list[p][1] - 1 for p in pair_choice]], dtype=np.int64)
        for atom_choice in itertools.product(range(len(atoms)), repeat=k):
            w_word = lam_weight * math.prod(float(atom_weights[a]) for a in atom_choice)
            if w_word == 0.0:
                continue
            if d == 1:
                th = np.array([[atoms[a] for a in atom_choice]], dtype=float)
                inv = realize_inverse_1d(i0, j0, th, n)[0] if k else np.eye(n)
            else:
                om = np.array([[atoms[a] for a in atom_choice]], dtype=float).reshape(1, k, 3)
                inv = realize_inverse_3d(i0, j0, om, n)[0] if k else np.eye(3 * n)
            word = RotationWord(pairs=(), parameters=np.zeros(0), inverse_matrix=inv,
                                dimension=d, M=params.M, N=params.N)
            _, spectrum = decompose(word)
            subsets, subset_w = sigma_subset_weights(spectrum.gammas)
            for sigma, sw in zip(subsets, subset_w):
                c = w_word * sw / c_km
                if c == 0.0:
                    continue
                keep = [i for i in range(dm) if i not in sigma]
                maps.append(spectrum.u.T[keep, :])
                weights.append(c)
        if k == 0:
            break
    datum = BLDatum(maps=maps, weights=np.array(weights))
    datum.validate(tol=tol)
    return datum
