import math

import numpy as np
import pytest

from kacbath import (
    EnsembleConfig,
    GeneratorParams,
    InitialCondition,
    propagate_moments,
    simulate_ensemble,
    simulate_trajectory,
)
from kacbath.engine import SimulationError, trajectory_rng
from kacbath.model import THERMAL_VARIANCE


def test_time_zero_snapshot_is_exact_initial_sample(params28, uniform_rho):
    init = InitialCondition.gaussian_product(0.4)
    traj = simulate_trajectory(params28, uniform_rho, init, [0.0], trajectory_rng(5, 0))
    expected = init.sample_system(params28, trajectory_rng(5, 0))
    assert np.array_equal(traj.snapshots[0], expected)


def test_no_rates_means_frozen_state(uniform_rho):
    p = GeneratorParams(M=2, N=3, lambda_S=0.0, lambda_R=0.0, mu=0.0)
    init = InitialCondition.gaussian_product(0.4)
    traj = simulate_trajectory(p, uniform_rho, init, [0.0, 1.0, 5.0], trajectory_rng(6, 0))
    assert np.array_equal(traj.snapshots[0], traj.snapshots[1])
    assert np.array_equal(traj.snapshots[0], traj.snapshots[2])
    assert traj.counts.sum() == 0


def test_fast_coupling_reaches_equipartition(uniform_rho):
    # single system particle against one bath particle with fast cross collisions
    p = GeneratorParams(M=1, N=1, lambda_S=0.0, lambda_R=0.0, mu=50.0)
    s = 1.0 / math.pi
    init = InitialCondition.gaussian_product(s)
    cfg = EnsembleConfig(n_traj=40000, t_grid=(0.0, 5.0), seed=77)
    res = simulate_ensemble(p, uniform_rho, init, cfg)
    target = (s * 2 * math.pi + 1.0) / (4.0 * math.pi)  # equal split of the mean energy
    pred = propagate_moments(init.initial_moments(p), 5.0, p, uniform_rho)
    assert pred.m1 == pytest.approx(target, rel=1e-10)
    _, mean, se, _ = res.moment_rows()[1]
    assert abs(mean - target) < 4 * se


def test_ensemble_reproducible_across_workers(params28, uniform_rho):
    init = InitialCondition.gaussian_product(0.3)
    cfg = EnsembleConfig(n_traj=3000, t_grid=(0.0, 0.5, 1.0), seed=123, record=("system_velocities", "collision_counts", "energies"))
    serial = simulate_ensemble(params28, uniform_rho, init, cfg, workers=1)
    parallel = simulate_ensemble(params28, uniform_rho, init, cfg, workers=4)
    assert np.array_equal(serial.snapshots, parallel.snapshots)
    assert np.array_equal(serial.counts, parallel.counts)
    assert np.array_equal(serial.energies, parallel.energies)


def test_energy_conservation_along_trajectories(params28, uniform_rho):
    init = InitialCondition.gaussian_product(0.5)
    worst = 0.0
    for i in range(100):
        traj = simulate_trajectory(
            params28, uniform_rho, init, [0.0, 1.0, 3.0, 10.0], trajectory_rng(31, i)
        )
        e0 = traj.energies[0]
        worst = max(worst, float(np.max(np.abs(traj.energies - e0)) / e0))
    assert worst <= 1e-10


def test_collision_count_means(params28, uniform_rho):
    init = InitialCondition.thermal()
    t_end = 2.0
    cfg = EnsembleConfig(n_traj=20000, t_grid=(0.0, t_end), seed=40)
    res = simulate_ensemble(params28, uniform_rho, init, cfg)
    expected = np.array(params28.kind_rates) * t_end
    means = res.counts.mean(axis=0)
    # counts are Poisson: var = mean
    for got, lam in zip(means, expected):
        se = math.sqrt(lam / cfg.n_traj)
        assert abs(got - lam) < 4 * se


def test_exchangeability_of_system_labels(params28, uniform_rho):
    # permuting which particle carries the mean shift leaves symmetric statistics alone
    cfg = EnsembleConfig(n_traj=20000, t_grid=(0.0, 1.0), seed=41)
    res_a = simulate_ensemble(
        params28, uniform_rho, InitialCondition.shifted_gaussian([0.8, 0.0]), cfg
    )
    res_b = simulate_ensemble(
        params28, uniform_rho, InitialCondition.shifted_gaussian([0.0, 0.8]), cfg
    )
    stat_a = np.sum(res_a.cloud(1) ** 2, axis=1)
    stat_b = np.sum(res_b.cloud(1) ** 2, axis=1)
    se = math.sqrt(stat_a.var() / len(stat_a) + stat_b.var() / len(stat_b))
    assert abs(stat_a.mean() - stat_b.mean()) < 4 * se


def test_thermal_initial_state_is_stationary(params28, uniform_rho):
    cfg = EnsembleConfig(n_traj=30000, t_grid=(0.0, 1.0, 3.0), seed=42)
    res = simulate_ensemble(params28, uniform_rho, InitialCondition.thermal(), cfg)
    clouds = [res.cloud(i) for i in range(3)]
    for power in (2, 4):
        stats = [np.mean(c ** power, axis=1) for c in clouds]
        base = stats[0]
        for later in stats[1:]:
            se = math.sqrt(base.var() / len(base) + later.var() / len(later))
            assert abs(base.mean() - later.mean()) < 4 * se


def test_moment_decay_matches_oracle(params28, uniform_rho):
    init = InitialCondition.gaussian_product(1.0 / math.pi)
    cfg = EnsembleConfig(n_traj=20000, t_grid=(0.0, 0.5, 1.0, 2.0), seed=43)
    res = simulate_ensemble(params28, uniform_rho, init, cfg)
    m0 = init.initial_moments(params28)
    for t, mean, se, _ in res.moment_rows():
        pred = propagate_moments(m0, t, params28, uniform_rho)
        assert abs(mean - pred.m1) < 4 * se


def test_moment_decay_matches_oracle_3d():
    p = GeneratorParams(M=1, N=2, lambda_S=0.0, lambda_R=1.0, mu=1.0, dimension=3)
    init = InitialCondition.gaussian_product(1.0 / math.pi)
    cfg = EnsembleConfig(n_traj=20000, t_grid=(0.0, 1.0, 3.0), seed=44)
    res = simulate_ensemble(p, None, init, cfg)
    m0 = init.initial_moments(p)
    for t, mean, se, _ in res.moment_rows():
        pred = propagate_moments(m0, t, p)
        assert abs(mean - pred.m1) < 4 * se


def test_two_temperature_variances(params28):
    init = InitialCondition.two_temperature(0.5, 0.1)
    var = init.system_variances(params28)
    assert var.tolist() == [0.5, 0.1]
    m0 = init.initial_moments(params28)
    assert m0.m1 == pytest.approx(0.3)
    assert m0.m2 == pytest.approx(THERMAL_VARIANCE)


def test_custom_sampler_and_nan_abort(params28, uniform_rho):
    def bad_sampler(params, rng):
        return np.array([math.inf, 0.0])

    init = InitialCondition.custom(bad_sampler)
    with pytest.raises(SimulationError):
        simulate_trajectory(params28, uniform_rho, init, [0.0], trajectory_rng(50, 0))
    with pytest.raises(ValueError):
        init.initial_moments(params28)


def test_ensemble_config_validation():
    with pytest.raises(ValueError):
        EnsembleConfig(n_traj=0, t_grid=(0.0,), seed=1)
    with pytest.raises(ValueError):
        EnsembleConfig(n_traj=5, t_grid=(0.5, 1.0), seed=1)
    with pytest.raises(ValueError):
        EnsembleConfig(n_traj=5, t_grid=(0.0, 1.0, 1.0), seed=1)
    with pytest.raises(ValueError):
        EnsembleConfig(n_traj=5, t_grid=(0.0, 1.0), seed=1, record=("nonsense",))


def test_trajectory_accessors(params28, uniform_rho):
    init = InitialCondition.gaussian_product(0.3)
    cfg = EnsembleConfig(
        n_traj=10, t_grid=(0.0, 1.0), seed=9, record=("system_velocities", "collision_counts", "energies")
    )
    res = simulate_ensemble(params28, uniform_rho, init, cfg)
    traj = res.trajectory(3)
    assert traj.snapshots.shape == (2, 2)
    assert traj.counts.shape == (3,)
    assert res.cloud(1).shape == (10, 2)
    rows = res.moment_rows()
    assert rows[0][0] == 0.0 and rows[0][3] == 10
