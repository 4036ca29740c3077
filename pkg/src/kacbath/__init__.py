"""Kinetic Monte Carlo and verification toolkit for a pair-collision particle
system coupled to a finite heat bath."""

__version__ = "0.1.0"

from .discretize import (
    DiscreteAngleMeasure,
    SphereQuadrature,
    build_discrete_angle_measure,
    build_sphere_quadrature,
    fejer_smooth,
)
from .engine import (
    EnsembleConfig,
    EnsembleResult,
    InitialCondition,
    ParticleState,
    Trajectory,
    simulate_ensemble,
    simulate_trajectory,
    trajectory_rng,
)
from .entropy import (
    EntropyEstimate,
    SampleCloud,
    decay_check,
    gaussian_initial_entropy,
    knn_differential_entropy,
    relative_entropy_to_thermal,
)
from .inequalities import (
    BLDatum,
    HeatFlowFunction,
    TestFunction1D,
    bl_inequality_check,
    entropic_nelson_check,
    entropy_dual_check,
    heat_flow_monotonicity_check,
    ou_apply,
)
from .model import (
    AngleDistribution,
    CollisionEvent,
    GeneratorParams,
    PairIndex,
    collide_pair_3d,
    effective_coupling_rate,
    rotate_pair_1d,
    sample_event,
)
from .moments import (
    DecayEnvelope,
    MomentPair,
    MomentUpdateMatrix,
    envelope,
    envelope_poisson_sum,
    propagate_moments,
    sum_rule_constant,
)
from .words import (
    BlockDecomposition,
    RotationWord,
    SingularSpectrum,
    build_bl_datum,
    decompose,
    gaussian_marginal_check,
    mc_sum_rule,
    sample_word,
    sigma_subset_weights,
)
