"""Numerical checks of the functional inequalities behind the entropy bound.

Everything is evaluated with Gauss-Hermite rules in Gaussian-weighted form
(weight exp(-pi |x|^2), unit mass); every verdict is recomputed at twice the
quadrature order and the pair must agree before a PASS/FAIL is reported.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .quadrature import gauss_hermite_gaussian, gauss_hermite_physicists, tensor_rule

MARGIN_TOL = -1e-8
SENSITIVITY_TOL = 1e-6
LOG_FLOOR = 1e-300


@lru_cache(maxsize=None)
def _gaussian_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    return gauss_hermite_gaussian(order)


@lru_cache(maxsize=None)
def _gaussian_tensor(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gaussian_rule(order)
    return tensor_rule(x, w, dim)


@dataclass(frozen=True)
class TestFunction1D:
    """A profile on the line used as hypercontractivity test input."""

    __test__ = False  # keep pytest from collecting this as a test class

    fn: Callable[[np.ndarray], np.ndarray]
    positive: bool = True
    label: str = ""

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    @classmethod
    def constant(cls, c: float) -> "TestFunction1D":
        return cls(fn=lambda x: np.full_like(x, c), positive=c >= 0, label=f"const({c})")

    @classmethod
    def coordinate(cls) -> "TestFunction1D":
        return cls(fn=lambda x: x, positive=False, label="x")

    @classmethod
    def gaussian_bump(cls, a: float, center: float = 0.0, scale: float = 1.0) -> "TestFunction1D":
        if a <= 0 or scale <= 0:
            raise ValueError("bump needs a > 0 and scale > 0")
        return cls(
            fn=lambda x: scale * np.exp(-a * (x - center) ** 2),
            positive=True,
            label=f"bump(a={a},c={center})",
        )

    @classmethod
    def polynomial_bump(cls, coeffs: Sequence[float], floor: float = 0.1) -> "TestFunction1D":
        """floor + p(x)^2: strictly positive, polynomially bounded."""
        if floor <= 0:
            raise ValueError("floor must be positive")
        poly = np.polynomial.Polynomial(list(coeffs))
        return cls(
            fn=lambda x: floor + poly(x) ** 2,
            positive=True,
            label=f"polybump{tuple(coeffs)}",
        )


def gaussian_integral_1d(h, order: int = 96) -> float:
    """Integral of h against the unit Gaussian weight."""
    x, w = _gaussian_rule(order)
    return float(np.dot(h(x), w))


def gaussian_norm_1d(h, p: float, order: int = 96) -> float:
    x, w = _gaussian_rule(order)
    return float(np.dot(np.abs(h(x)) ** p, w) ** (1.0 / p))


def entropy_functional_1d(h, order: int = 96) -> float:
    """Integral of h log h against the Gaussian weight (0 log 0 := 0)."""
    x, w = _gaussian_rule(order)
    vals = np.clip(h(x), 0.0, None)
    logs = np.where(vals > 0, np.log(np.where(vals > 0, vals, 1.0)), 0.0)
    return float(np.dot(vals * logs, w))


def ou_apply(h: TestFunction1D, t: float, order: int = 64) -> TestFunction1D:
    """Ornstein-Uhlenbeck average: contract toward 0 by e^-t, refill with Gaussian noise.

    Preserves the Gaussian-weighted mass of h; constants are fixed points.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return h
    decay = math.exp(-t)
    spread = math.sqrt(1.0 - decay * decay)
    nodes, wts = _gaussian_rule(order)

    def evolved(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        args = decay * x[:, None] + spread * nodes[None, :]
        vals = np.asarray(h.fn(args.ravel()), dtype=float).reshape(args.shape)
        return vals @ wts

    return TestFunction1D(fn=evolved, positive=h.positive, label=f"OU[{t}]{h.label}")


@dataclass(frozen=True)
class InequalityCheck:
    """Margin of an inequality at two quadrature orders, with agreed verdict."""

    margin: float
    margin_coarse: float
    passed: bool
    inconclusive: bool
    meta: dict = field(default_factory=dict)


def _two_order_verdict(margin_fn: Callable[[int], float], order: int, meta: dict) -> InequalityCheck:
    m_coarse = margin_fn(order)
    m_fine = margin_fn(2 * order)
    verdict_coarse = m_coarse >= MARGIN_TOL
    verdict_fine = m_fine >= MARGIN_TOL
    inconclusive = verdict_coarse != verdict_fine or abs(m_fine - m_coarse) > max(
        SENSITIVITY_TOL, 1e-6 * abs(m_fine)
    )
    return InequalityCheck(
        margin=m_fine,
        margin_coarse=m_coarse,
        passed=bool(verdict_fine and not inconclusive),
        inconclusive=bool(inconclusive),
        meta=meta,
    )


def entropic_nelson_check(h: TestFunction1D, t: float, order: int = 96) -> InequalityCheck:
    """Margin of the entropic contraction of the OU average.

    The entropy of the evolved profile must stay below the e^(-2t) blend of
    the original entropy and the mass-only baseline.
    """
    if not h.positive:
        raise ValueError("entropy check needs a nonnegative profile")

    def margin_at(q: int) -> float:
        s_h = entropy_functional_1d(h, q)
        mass = gaussian_integral_1d(h, q)
        s_evolved = entropy_functional_1d(ou_apply(h, t, order=q), q)
        blend = math.exp(-2.0 * t)
        return blend * s_h + (1.0 - blend) * mass * math.log(mass) - s_evolved

    return _two_order_verdict(margin_at, order, {"t": t, "label": h.label})


@dataclass
class BLDatum:
    """Weighted co-isometries resolving the identity: sum c_i B_i^T B_i = I."""

    maps: list[np.ndarray]
    weights: np.ndarray

    def __post_init__(self):
        self.maps = [np.atleast_2d(np.asarray(b, dtype=float)) for b in self.maps]
        self.weights = np.asarray(self.weights, dtype=float)

    @property
    def ambient_dim(self) -> int:
        return self.maps[0].shape[1]

    @property
    def dims(self) -> np.ndarray:
        return np.array([b.shape[0] for b in self.maps])

    def trace_sum(self) -> float:
        return float(np.dot(self.weights, self.dims))

    def identity_defect(self) -> float:
        m = self.ambient_dim
        acc = np.zeros((m, m))
        for b, c in zip(self.maps, self.weights):
            acc += c * b.T @ b
        return float(np.max(np.abs(acc - np.eye(m))))

    def validate(self, tol: float = 1e-10) -> None:
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        for b in self.maps:
            d = b.shape[0]
            if d and np.max(np.abs(b @ b.T - np.eye(d))) > tol:
                raise ValueError("a map fails B B^T = I on its range")
        defect = self.identity_defect()
        if defect > tol:
            raise ValueError(f"weighted maps miss the identity by {defect!r}")


def _eval_factor(fn, pts: np.ndarray) -> np.ndarray:
    """Evaluate a marginal factor on points of shape (n, d), d possibly 0."""
    if pts.shape[1] == 0:
        val = float(np.asarray(fn(np.zeros((1, 0)))).ravel()[0])
        return np.full(pts.shape[0], val)
    return np.asarray(fn(pts), dtype=float).ravel()


def bl_inequality_check(
    datum: BLDatum, functions: Sequence, order: int = 24
) -> InequalityCheck:
    """Product-of-marginals bound: Gaussian average of prod f_i^c_i (B_i v) vs marginals.

    Margin is (product of marginal integrals) minus the joint integral;
    nonnegative whenever the datum resolves the identity.
    """
    m = datum.ambient_dim
    if m > 3:
        raise ValueError("tensor quadrature is capped at ambient dimension 3")

    def margin_at(q: int) -> float:
        pts, wts = _gaussian_tensor(q, m)
        joint = np.ones(len(pts))
        rhs = 1.0
        for b, c, fn in zip(datum.maps, datum.weights, functions):
            vals = np.clip(_eval_factor(fn, pts @ b.T), 0.0, None)
            joint *= vals ** c
            mpts, mwts = _gaussian_tensor(q, b.shape[0])
            marg = float(np.dot(_eval_factor(fn, mpts), mwts))
            rhs *= marg ** c
        lhs = float(np.dot(joint, wts))
        return rhs - lhs

    return _two_order_verdict(margin_at, order, {"n_maps": len(datum.maps)})


def entropy_dual_check(
    datum: BLDatum, functions: Sequence, h, order: int = 24
) -> InequalityCheck:
    """Dual form: entropy of h dominates the weighted marginal log-averages."""
    m = datum.ambient_dim
    if m > 3:
        raise ValueError("tensor quadrature is capped at ambient dimension 3")

    def margin_at(q: int) -> float:
        pts, wts = _gaussian_tensor(q, m)
        hv = np.clip(np.asarray(h(pts), dtype=float).ravel(), 0.0, None)
        mass = float(np.dot(hv, wts))
        hv = hv / mass
        logs_h = np.where(hv > 0, np.log(np.where(hv > 0, hv, 1.0)), 0.0)
        s_h = float(np.dot(hv * logs_h, wts))
        bound = 0.0
        floored = False
        for b, c, fn in zip(datum.maps, datum.weights, functions):
            vals = np.asarray(_eval_factor(fn, pts @ b.T), dtype=float)
            if np.any(vals < LOG_FLOOR):
                floored = True
                vals = np.clip(vals, LOG_FLOOR, None)
            term = float(np.dot(hv * np.log(vals), wts))
            mpts, mwts = _gaussian_tensor(q, b.shape[0])
            marg = float(np.dot(_eval_factor(fn, mpts), mwts))
            bound += c * (term - math.log(marg))
        if floored:
            warnings.warn("marginal factor floored at 1e-300 inside a log", stacklevel=3)
        return s_h - bound

    return _two_order_verdict(margin_at, order, {"n_maps": len(datum.maps)})


@dataclass(frozen=True)
class HeatFlowFunction:
    """Marginal factor with a known Gaussian envelope scale * exp(-a |u - center|^2).

    The decay rate and center steer the quadrature rules; the callable itself
    may be any profile dominated by that envelope.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    decay: float
    center: tuple[float, ...] = ()
    label: str = ""

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return _eval_factor(self.fn, pts)

    def center_vector(self, dim: int) -> np.ndarray:
        if len(self.center) == 0:
            return np.zeros(dim)
        return np.asarray(self.center, dtype=float)

    @classmethod
    def gaussian(cls, a: float, center: np.ndarray | float = 0.0, scale: float = 1.0) -> "HeatFlowFunction":
        if a <= 0:
            raise ValueError("decay rate must be positive")
        center = np.atleast_1d(np.asarray(center, dtype=float))

        def fn(pts):
            diff = pts - center[None, :]
            return scale * np.exp(-a * np.sum(diff * diff, axis=1))

        return cls(fn=fn, decay=a, center=tuple(center.tolist()), label=f"gauss(a={a})")


def heat_evolve(f: HeatFlowFunction, dim: int, t: float, order: int = 40) -> Callable:
    """Heat-kernel smoothing at time t.

    The convolution is quadrated in the source variable on a rule matched to
    the function's own envelope, with the kernel evaluated explicitly; this
    stays accurate when the kernel is much wider than the function.
    """
    if dim == 0 or t == 0.0:
        return f
    src_pts, src_wts = _lebesgue_scaled_rule(order, dim, math.sqrt(2.0 / f.decay))
    src_pts = src_pts + f.center_vector(dim)[None, :]
    weighted_vals = src_wts * _eval_factor(f.fn, src_pts)
    coef = (4.0 * math.pi * t) ** (-dim / 2.0)
    inv_4t = 1.0 / (4.0 * t)

    def evolved(pts):
        pts = np.atleast_2d(pts)
        out = np.empty(len(pts))
        block = max(1, 2 ** 22 // max(len(src_pts), 1))
        for lo in range(0, len(pts), block):
            sub = pts[lo : lo + block]
            diff = sub[:, None, :] - src_pts[None, :, :]
            kernel = np.exp(-np.sum(diff * diff, axis=2) * inv_4t)
            out[lo : lo + block] = coef * (kernel @ weighted_vals)
        return out

    return evolved


def _lebesgue_scaled_rule(order: int, dim: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Rule for plain Lebesgue integrals of fast-decaying integrands of width ~ scale."""
    nodes, wts = gauss_hermite_physicists(order)
    log_w = np.log(wts) + nodes * nodes
    pts, _ = tensor_rule(nodes, np.ones_like(nodes), dim)
    lw, _ = tensor_rule(log_w, np.ones_like(log_w), dim)
    weights = np.exp(lw.sum(axis=1)) * scale ** dim
    return scale * pts, weights


def _lebesgue_marginal_integral(f: HeatFlowFunction, dim: int, order: int = 64) -> float:
    if dim == 0:
        return float(_eval_factor(f.fn, np.zeros((1, 0)))[0])
    pts, wts = _lebesgue_scaled_rule(order, dim, math.sqrt(2.0 / f.decay))
    pts = pts + f.center_vector(dim)[None, :]
    return float(np.dot(_eval_factor(f.fn, pts), wts))


@dataclass(frozen=True)
class HeatFlowResult:
    t_grid: np.ndarray
    lhs: np.ndarray
    finite_differences: np.ndarray
    rhs: float
    limit_value: float
    limit_relative_error: float
    passed: bool


def heat_flow_monotonicity_check(
    datum: BLDatum,
    functions: Sequence[HeatFlowFunction],
    t_grid: Sequence[float],
    order: int = 40,
    limit_time: float = 50.0,
    derivative_tol: float = -1e-6,
    limit_rel_tol: float = 0.02,
) -> HeatFlowResult:
    """Transport the marginal factors by heat flow and track the joint integral.

    The unweighted joint integral must be nondecreasing in flow time and
    approach the product of the (flow-invariant) marginal masses.
    """
    m = datum.ambient_dim
    if m > 2:
        raise ValueError("heat-flow check is capped at ambient dimension 2")
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if np.any(t_grid <= 0):
        raise ValueError("flow times must be positive")

    rhs = math.prod(
        _lebesgue_marginal_integral(f, b.shape[0]) ** c
        for f, b, c in zip(functions, datum.maps, datum.weights)
    )

    def lhs_at(t: float) -> float:
        evolved = [heat_evolve(f, b.shape[0], t, order=order) for f, b in zip(functions, datum.maps)]
        a_min = min(
            (f.decay / (1.0 + 4.0 * f.decay * t) for f, b in zip(functions, datum.maps) if b.shape[0] > 0),
            default=1.0,
        )
        pts, wts = _lebesgue_scaled_rule(order, m, math.sqrt(2.0 / a_min))
        joint = np.ones(len(pts))
        for ev, b, c in zip(evolved, datum.maps, datum.weights):
            vals = np.clip(_eval_factor(ev, pts @ b.T), 0.0, None)
            joint *= vals ** c
        return float(np.dot(joint, wts))

    lhs = np.array([lhs_at(t) for t in t_grid])
    fd = np.diff(lhs) / np.diff(t_grid)
    limit_value = lhs_at(limit_time)
    rel_err = abs(limit_value - rhs) / abs(rhs)
    passed = bool(np.all(fd >= derivative_tol) and rel_err <= limit_rel_tol)
    return HeatFlowResult(
        t_grid=t_grid,
        lhs=lhs,
        finite_differences=fd,
        rhs=rhs,
        limit_value=limit_value,
        limit_relative_error=rel_err,
        passed=passed,
    )


def nelson_fixture_suite() -> list[TestFunction1D]:
    """Twenty strictly positive, polynomially bounded test profiles."""
    fixtures = []
    for a, center in [(0.5, 0.0), (1.0, 0.0), (2.0, 0.0), (math.pi, 0.0),
                      (0.5, 0.7), (1.0, -0.6), (2.0, 0.4), (1.5, 1.0)]:
        fixtures.append(TestFunction1D.gaussian_bump(a, center))
    for coeffs in [(1.0,), (0.0, 1.0), (1.0, 1.0), (0.5, 0.0, 1.0),
                   (0.0, 1.0, 0.5), (1.0, -1.0), (0.2, 0.3, -0.4)]:
        fixtures.append(TestFunction1D.polynomial_bump(coeffs))
    fixtures.append(TestFunction1D.constant(1.0))
    fixtures.append(TestFunction1D.constant(2.5))
    fixtures.append(TestFunction1D(fn=lambda x: 1.0 + 0.5 * np.sin(x) ** 2, label="1+sin^2/2"))
    fixtures.append(TestFunction1D(fn=lambda x: np.exp(-0.8 * x * x) + 0.3, label="bump+0.3"))
    fixtures.append(TestFunction1D(fn=lambda x: 1.0 / (1.0 + x * x) + 0.1, label="cauchy+0.1"))
    assert len(fixtures) == 20
    return fixtures
