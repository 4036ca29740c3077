"""Bundled fixture suites for the inequality lab and the discrete measures."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretize import DiscreteAngleMeasure, SphereQuadrature
from .inequalities import (
    BLDatum,
    HeatFlowFunction,
    bl_inequality_check,
    entropic_nelson_check,
    entropy_dual_check,
    heat_flow_monotonicity_check,
    nelson_fixture_suite,
)
from .model import AngleDistribution, GeneratorParams
from .words import build_bl_datum

NELSON_TIMES = (0.1, 0.5, 2.0)
HEAT_FLOW_TIMES = (0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0)


@dataclass(frozen=True)
class AffineSquaredPlus:
    """floor + (bias + slope . u)^2: strictly positive low-degree polynomial."""

    floor: float
    bias: float
    slope: tuple[float, ...]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        lin = self.bias + (pts @ np.asarray(self.slope) if pts.shape[1] else 0.0)
        return self.floor + lin ** 2


def random_positive_polynomials(datum: BLDatum, rng: np.random.Generator) -> list[AffineSquaredPlus]:
    funcs = []
    for b in datum.maps:
        d = b.shape[0]
        funcs.append(
            AffineSquaredPlus(
                floor=0.3 + 0.4 * float(rng.random()),
                bias=float(rng.normal(scale=0.5)),
                slope=tuple(rng.normal(scale=0.5, size=d)),
            )
        )
    return funcs


def gaussian_heat_functions(datum: BLDatum, rng: np.random.Generator) -> list[HeatFlowFunction]:
    funcs = []
    for b in datum.maps:
        d = b.shape[0]
        a = 0.8 + 0.8 * float(rng.random())
        center = rng.normal(scale=0.3, size=d) if d else np.zeros(0)
        funcs.append(HeatFlowFunction.gaussian(a, center=center, scale=0.5 + rng.random()))
    return funcs


@dataclass(frozen=True)
class GaussianProfile:
    """exp(-a |v - center|^2), vectorized over points."""

    a: float
    center: tuple[float, ...]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        diff = np.atleast_2d(pts) - np.asarray(self.center)[None, :]
        return np.exp(-self.a * np.sum(diff * diff, axis=1))


def standard_bl_data() -> list[tuple[str, GeneratorParams, BLDatum]]:
    """Identity-resolving projection data from enumerated short words."""
    nu = AngleDistribution.half_pi_atoms()
    p2 = GeneratorParams(M=2, N=1, lambda_S=1.0, lambda_R=0.0, mu=1.0)
    p3 = GeneratorParams(M=3, N=1, lambda_S=1.0, lambda_R=0.0, mu=1.0)
    return [
        ("k0_dim2", p2, build_bl_datum(0, p2, nu)),
        ("k1_dim2", p2, build_bl_datum(1, p2, nu)),
        ("k1_dim3", p3, build_bl_datum(1, p3, nu)),
    ]


def run_nelson_suite(times=NELSON_TIMES, order: int = 64) -> dict:
    margins = []
    inconclusive = 0
    for h in nelson_fixture_suite():
        for t in times:
            check = entropic_nelson_check(h, t, order=order)
            margins.append(check.margin)
            inconclusive += int(check.inconclusive)
    return {
        "n_checks": len(margins),
        "min_margin": min(margins),
        "n_inconclusive": inconclusive,
        "pass": bool(min(margins) >= -1e-8 and inconclusive == 0),
    }


def run_bl_suite(order: int = 20, seed: int = 2024) -> dict:
    bl_margins = []
    dual_margins = []
    inconclusive = 0
    for label, params, datum in standard_bl_data():
        rng = np.random.default_rng(seed)
        funcs = random_positive_polynomials(datum, rng)
        check = bl_inequality_check(datum, funcs, order=order)
        bl_margins.append(check.margin)
        inconclusive += int(check.inconclusive)
        h = GaussianProfile(a=1.2, center=tuple(0.2 for _ in range(datum.ambient_dim)))
        dual = entropy_dual_check(datum, funcs, h, order=order)
        dual_margins.append(dual.margin)
        inconclusive += int(dual.inconclusive)
    return {
        "n_checks": len(bl_margins) + len(dual_margins),
        "min_bl_margin": min(bl_margins),
        "min_dual_margin": min(dual_margins),
        "n_inconclusive": inconclusive,
        "pass": bool(
            min(bl_margins) >= -1e-8 and min(dual_margins) >= -1e-8 and inconclusive == 0
        ),
    }


def run_heat_flow_suite(t_grid=HEAT_FLOW_TIMES, order: int = 40, seed: int = 7) -> dict:
    results = []
    for label, params, datum in standard_bl_data():
        if datum.ambient_dim > 2:
            continue
        rng = np.random.default_rng(seed)
        funcs = gaussian_heat_functions(datum, rng)
        res = heat_flow_monotonicity_check(datum, funcs, t_grid, order=order)
        results.append((label, res))
    return {
        "n_checks": len(results),
        "min_fd_derivative": min(float(r.finite_differences.min()) for _, r in results),
        "max_limit_rel_error": max(r.limit_relative_error for _, r in results),
        "pass": bool(all(r.passed for _, r in results)),
    }


def run_inequality_suite() -> dict:
    nelson = run_nelson_suite()
    bl = run_bl_suite()
    heat = run_heat_flow_suite()
    return {
        "nelson": nelson,
        "brascamp_lieb": bl,
        "heat_flow": heat,
        "pass": bool(nelson["pass"] and bl["pass"] and heat["pass"]),
    }


def angle_measure_report(measure: DiscreteAngleMeasure, tol: float = 1e-12) -> dict:
    """Invariants of the discrete angle measure: mass, angle moment, spectrum match."""
    k = measure.K
    mismatches = [
        abs(measure.fourier_coefficient(m) - measure.smoothed.coefficient(m))
        for m in range(-2 * k, 2 * k + 1)
    ]
    report = {
        "K": k,
        "n_atoms": len(measure.thetas),
        "mass_error": abs(measure.mass - 1.0),
        "sincos_moment": abs(measure.sincos_moment),
        "max_fourier_mismatch": max(mismatches),
        "min_weight": float(measure.weights.min()),
        "fourier_hypothesis_ok": measure.fourier_hypothesis_ok,
    }
    report["pass"] = bool(
        report["mass_error"] <= tol
        and report["sincos_moment"] <= tol
        and report["max_fourier_mismatch"] <= tol
        and report["min_weight"] >= -tol
    )
    return report


def sphere_rule_report(rule: SphereQuadrature, tol: float = 1e-12) -> dict:
    second = rule.second_moment()
    report = {
        "L": rule.polar_order,
        "K": rule.azimuthal_count,
        "n_nodes": len(rule.nodes),
        "mass_error": abs(rule.mass - 1.0),
        "second_moment_max_dev": float(np.max(np.abs(second - np.eye(3) / 3.0))),
        "min_weight": float(rule.weights.min()),
    }
    report["pass"] = bool(
        report["mass_error"] <= tol
        and report["second_moment_max_dev"] <= tol
        and report["min_weight"] > 0.0
    )
    return report
