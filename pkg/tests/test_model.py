import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kacbath import (
    AngleDistribution,
    CollisionEvent,
    GeneratorParams,
    PairIndex,
    collide_pair_3d,
    effective_coupling_rate,
    rotate_pair_1d,
    sample_event,
)
from kacbath.model import (
    InvalidDistributionError,
    sample_pair_kinds,
    sample_pairs_array,
    uniform_sphere,
)
from tests.conftest import raised_cosine


# ---------------------------------------------------------------- parameters


def test_params_validation():
    with pytest.raises(ValueError):
        GeneratorParams(M=0, N=5, lambda_S=1, lambda_R=1, mu=1)
    with pytest.raises(ValueError):
        GeneratorParams(M=2, N=5, lambda_S=-1, lambda_R=1, mu=1)
    with pytest.raises(ValueError):
        GeneratorParams(M=2, N=5, lambda_S=1, lambda_R=1, mu=1, dimension=2)


def test_total_rate_and_kind_split(params28):
    assert params28.total_rate == pytest.approx(1.0 + 4.0 + 2.0, abs=0)
    assert params28.kind_rates == (1.0, 4.0, 2.0)


def test_single_system_particle_has_no_system_pairs():
    p = GeneratorParams(M=1, N=200, lambda_S=5.0, lambda_R=1.0, mu=1.0)
    assert p.kind_rates[0] == 0.0
    assert p.total_rate == pytest.approx(0.0 + 100.0 + 1.0)


@given(m=st.integers(1, 6), n=st.integers(1, 6), ls=st.integers(0, 5),
       lr=st.integers(0, 5), mu=st.integers(1, 5))
def test_pair_weights_sum_to_one_exactly(m, n, ls, lr, mu):
    # rational arithmetic: the jump-chain weights over all pairs sum to exactly 1
    t_ss = Fraction(ls * m, 2) if m >= 2 else Fraction(0)
    t_rr = Fraction(lr * n, 2) if n >= 2 else Fraction(0)
    lam = t_ss + t_rr + Fraction(mu * m)
    total = Fraction(0)
    for i in range(1, m + n + 1):
        for j in range(i + 1, m + n + 1):
            if j <= m:
                total += Fraction(ls, 1) / (lam * (m - 1))
            elif i > m:
                total += Fraction(lr, 1) / (lam * (n - 1))
            else:
                total += Fraction(mu, 1) / (lam * n)
    assert total == 1


def test_pair_weight_formula(params24):
    lam = params24.total_rate
    assert params24.pair_weight(1, 2) == pytest.approx(1.0 / (lam * 1))
    assert params24.pair_weight(3, 4) == pytest.approx(1.0 / (lam * 3))
    assert params24.pair_weight(1, 3) == pytest.approx(1.0 / (lam * 4))


def test_classical_preset_exact_rates():
    # the all-pairs model splits into the three-kind form with these exact rates
    for m, n in [(2, 8), (3, 5), (1, 9)]:
        p = GeneratorParams.classical_kac(m, n)
        denom = m + n - 1
        assert p.lambda_S == 2.0 * (m - 1) / denom
        assert p.lambda_R == 2.0 * (n - 1) / denom
        assert p.mu == 2.0 * n / denom
        if m >= 2 and n >= 2:
            assert p.total_rate == pytest.approx(m + n, rel=1e-14)


def test_pair_index_kinds():
    assert PairIndex.of(1, 2, 2).kind == "system-system"
    assert PairIndex.of(3, 5, 2).kind == "reservoir-reservoir"
    assert PairIndex.of(2, 3, 2).kind == "cross"
    with pytest.raises(ValueError):
        PairIndex.of(3, 2, 2)


# ---------------------------------------------------------------- angle laws


def test_uniform_moments(uniform_rho):
    assert abs(uniform_rho.sin2_moment - 0.5) < 1e-14
    assert abs(uniform_rho.sincos_moment) < 1e-14


def test_half_pi_atoms_moments():
    rho = AngleDistribution.half_pi_atoms()
    assert rho.sin2_moment == pytest.approx(1.0, abs=1e-15)
    assert abs(rho.sincos_moment) < 1e-15


def test_raised_cosine_density_moments():
    rho = AngleDistribution.from_density(raised_cosine)
    assert abs(rho.sin2_moment - 0.5) < 1e-13
    assert abs(rho.sincos_moment) < 1e-13


def test_density_table_roundtrip():
    thetas = np.linspace(-math.pi, math.pi, 801)
    rho = AngleDistribution.from_table(thetas, raised_cosine(thetas))
    assert abs(rho.sin2_moment - 0.5) < 1e-6  # table is only piecewise linear
    assert abs(rho.sincos_moment) < 1e-12


def test_invalid_distributions_rejected():
    with pytest.raises(InvalidDistributionError):
        AngleDistribution.atoms([(0.5, 0.7)])  # mass != 1
    with pytest.raises(InvalidDistributionError):
        AngleDistribution.atoms([(math.pi / 4, 1.0)])  # sin*cos moment nonzero
    with pytest.raises(InvalidDistributionError):
        AngleDistribution.from_density(lambda t: np.cos(t))  # negative values


def test_fourier_coefficients():
    rho = AngleDistribution.from_density(raised_cosine)
    assert abs(rho.fourier_coefficient(0) - 1.0 / (2 * math.pi)) < 1e-14
    assert abs(rho.fourier_coefficient(1) - 1.0 / (4 * math.pi)) < 1e-14
    assert abs(rho.fourier_coefficient(3)) < 1e-14
    atoms = AngleDistribution.half_pi_atoms()
    # mass at +-pi/2: coefficient at m=2 is -1/(2 pi), odd coefficients vanish
    assert abs(atoms.fourier_coefficient(2) + 1.0 / (2 * math.pi)) < 1e-15
    assert abs(atoms.fourier_coefficient(1)) < 1e-15


def test_density_sampling_statistics(rng):
    rho = AngleDistribution.from_density(raised_cosine)
    draws = rho.sample(rng, 200000)
    # E cos(theta) = 1/2 for the raised cosine; 4-sigma band
    se = math.sqrt(np.var(np.cos(draws)) / len(draws))
    assert abs(np.mean(np.cos(draws)) - 0.5) < 4 * se


# ------------------------------------------------------------ coupling rate


def test_effective_coupling_rate_uniform(params28, uniform_rho):
    assert effective_coupling_rate(params28, uniform_rho) == pytest.approx(0.5, abs=1e-14)


def test_effective_coupling_rate_atoms(params28):
    rho = AngleDistribution.half_pi_atoms()
    assert effective_coupling_rate(params28, rho) == pytest.approx(1.0, abs=1e-14)


def test_effective_coupling_rate_3d():
    p = GeneratorParams(M=2, N=8, lambda_S=1, lambda_R=1, mu=3.0, dimension=3)
    assert effective_coupling_rate(p) == pytest.approx(1.0, abs=0)


# ------------------------------------------------------------------ kernels


def test_rotation_identity_and_quarter_turn():
    z = np.array([1.0, 0.0, 0.3])
    pair = PairIndex.of(1, 2, 3)
    assert np.array_equal(rotate_pair_1d(z, pair, 0.0), z)
    out = rotate_pair_1d(z, pair, math.pi / 2)
    assert np.allclose(out, [0.0, -1.0, 0.3], atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(
    theta=st.floats(-math.pi, math.pi),
    vi=st.floats(-50, 50),
    vj=st.floats(-50, 50),
)
def test_rotation_conserves_pair_energy(theta, vi, vj):
    z = np.array([vi, vj])
    out = rotate_pair_1d(z, PairIndex.of(1, 2, 2), theta)
    e_in = vi * vi + vj * vj
    assert abs(np.dot(out, out) - e_in) <= 1e-12 * (1.0 + e_in)


def test_collision_3d_perpendicular_axis_is_identity(rng):
    zi = np.array([1.0, 2.0, 3.0])
    zj = np.array([0.5, -1.0, 1.0])
    rel = zi - zj
    om = np.cross(rel, [0.0, 0.0, 1.0])
    om /= np.linalg.norm(om)
    z = np.stack([zi, zj])
    out = collide_pair_3d(z, PairIndex.of(1, 2, 1), om)
    assert np.allclose(out, z, atol=1e-14)


def test_collision_3d_full_exchange():
    om = np.array([1.0, 0.0, 0.0])
    z = np.stack([om, np.zeros(3)])
    out = collide_pair_3d(z, PairIndex.of(1, 2, 1), om)
    assert np.allclose(out[0], 0.0, atol=1e-15)
    assert np.allclose(out[1], om, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(data=st.lists(st.floats(-10, 10), min_size=9, max_size=9))
def test_collision_3d_involution_and_conservation(data):
    vec = np.array(data[:3])
    if np.linalg.norm(vec) < 1e-3:
        vec = np.array([1.0, 0.0, 0.0])
    om = vec / np.linalg.norm(vec)
    z = np.array(data[3:]).reshape(2, 3)
    pair = PairIndex.of(1, 2, 1)
    out = collide_pair_3d(z, pair, om)
    scale = 1.0 + np.max(np.abs(z))
    assert np.max(np.abs((out[0] + out[1]) - (z[0] + z[1]))) <= 1e-12 * scale
    e_in = float(np.sum(z * z))
    assert abs(float(np.sum(out * out)) - e_in) <= 1e-12 * (1.0 + e_in)
    back = collide_pair_3d(out, pair, om)
    assert np.max(np.abs(back - z)) <= 1e-12 * scale


def test_collision_rejects_non_unit_axis():
    z = np.zeros((2, 3))
    with pytest.raises(ValueError):
        collide_pair_3d(z, PairIndex.of(1, 2, 1), np.array([1.0, 1.0, 0.0]))


# ----------------------------------------------------------- event sampling


def test_collision_event_validation():
    with pytest.raises(ValueError):
        CollisionEvent(time=-0.1, pair=PairIndex.of(1, 2, 2), parameter=0.3)
    with pytest.raises(ValueError):
        CollisionEvent(time=0.1, pair=PairIndex.of(1, 3, 2), parameter=np.array([1.0, 1.0, 0.0]))


def test_kind_frequencies(params28, rng):
    n = 10 ** 6
    kinds = sample_pair_kinds(params28, rng, n)
    freqs = np.bincount(kinds, minlength=3) / n
    probs = params28.kind_probabilities
    for f, q in zip(freqs, probs):
        se = math.sqrt(q * (1 - q) / n)
        assert abs(f - q) < 4 * se


def test_pairs_uniform_within_kind(params24, rng):
    i0, j0, kinds = sample_pairs_array(params24, rng, 200000)
    # system pairs: (0,1) only for M=2; bath pairs: 6 possibilities, uniform
    ss = kinds == 0
    assert np.all(i0[ss] == 0) and np.all(j0[ss] == 1)
    rr = kinds == 1
    codes = (i0[rr] - 2) * 4 + (j0[rr] - 2)
    _, counts = np.unique(codes, return_counts=True)
    assert len(counts) == 6
    expected = rr.sum() / 6
    assert np.all(np.abs(counts - expected) < 4 * math.sqrt(expected))


def test_mean_waiting_time(params28, rng):
    n = 200000
    waits = np.array([sample_event(params28, AngleDistribution.uniform(), rng).time
                      for _ in range(2000)])
    lam = params28.total_rate
    se = (1.0 / lam) / math.sqrt(len(waits))
    assert abs(waits.mean() - 1.0 / lam) < 4 * se
    # batched equivalent at full strength
    batched = rng.exponential(1.0 / lam, n)
    assert abs(batched.mean() - 1.0 / lam) < 4 * (1.0 / lam) / math.sqrt(n)


def test_uniform_sphere_second_moment(rng):
    n = 10 ** 6
    oo = uniform_sphere(rng, n)
    cov = oo.T @ oo / n
    # var of omega_x^2 is 4/45; off-diagonal var is 1/15
    se_diag = math.sqrt(4.0 / 45.0 / n)
    se_off = math.sqrt(1.0 / 15.0 / n)
    for a in range(3):
        for b in range(3):
            target = 1.0 / 3.0 if a == b else 0.0
            tol = 4 * (se_diag if a == b else se_off)
            assert abs(cov[a, b] - target) < tol


def test_sample_event_structure(params28, rng):
    ev = sample_event(params28, AngleDistribution.uniform(), rng)
    assert ev.time >= 0
    assert 1 <= ev.pair.i < ev.pair.j <= 10
    assert -math.pi <= ev.parameter <= math.pi
    p3 = GeneratorParams(M=1, N=2, lambda_S=0, lambda_R=1, mu=1, dimension=3)
    ev3 = sample_event(p3, None, rng)
    assert abs(np.linalg.norm(ev3.parameter) - 1.0) < 1e-14
