"""JSON experiment configuration: strict parsing into the domain dataclasses."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .engine import EnsembleConfig, InitialCondition
from .model import AngleDistribution, GeneratorParams, InvalidDistributionError


class ConfigError(ValueError):
    """Configuration failed to parse or validate."""


def _require_keys(section: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(section)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def build_params(section: dict) -> GeneratorParams:
    _require_keys(
        section,
        allowed={"M", "N", "lambda_S", "lambda_R", "mu", "dimension", "preset"},
        required={"M", "N"},
        where="params",
    )
    try:
        M, N = int(section["M"]), int(section["N"])
        if section.get("preset") == "classical_kac":
            extra = {"lambda_S", "lambda_R", "mu"} & set(section)
            if extra:
                raise ConfigError(f"preset forbids explicit rates: {sorted(extra)}")
            return GeneratorParams.classical_kac(M, N, dimension=int(section.get("dimension", 1)))
        if "preset" in section:
            raise ConfigError(f"unknown preset {section['preset']!r}")
        return GeneratorParams(
            M=M,
            N=N,
            lambda_S=float(section.get("lambda_S", 0.0)),
            lambda_R=float(section.get("lambda_R", 0.0)),
            mu=float(section.get("mu", 0.0)),
            dimension=int(section.get("dimension", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params: {exc}") from exc


def build_angle_distribution(section: dict) -> AngleDistribution:
    if "type" not in section:
        raise ConfigError("rho needs a 'type'")
    kind = section["type"]
    try:
        if kind == "uniform":
            _require_keys(section, {"type"}, {"type"}, "rho")
            return AngleDistribution.uniform()
        if kind == "atoms":
            _require_keys(section, {"type", "atoms"}, {"type", "atoms"}, "rho")
            return AngleDistribution.atoms([(float(t), float(p)) for t, p in section["atoms"]])
        if kind == "density_table":
            _require_keys(section, {"type", "thetas", "values"}, {"type", "thetas", "values"}, "rho")
            return AngleDistribution.from_table(section["thetas"], section["values"])
    except InvalidDistributionError as exc:
        raise ConfigError(f"invalid rho: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed rho: {exc}") from exc
    raise ConfigError(f"unknown rho type {kind!r}")


def build_initial(section: dict) -> InitialCondition:
    if "kind" not in section:
        raise ConfigError("initial needs a 'kind'")
    kind = section["kind"]
    try:
        if kind == "thermal":
            _require_keys(section, {"kind"}, {"kind"}, "initial")
            return InitialCondition.thermal()
        if kind == "gaussian_product":
            _require_keys(section, {"kind", "s"}, {"kind", "s"}, "initial")
            return InitialCondition.gaussian_product(float(section["s"]))
        if kind == "two_temperature":
            _require_keys(section, {"kind", "s_hot", "s_cold", "n_hot"}, {"kind", "s_hot", "s_cold"}, "initial")
            n_hot = section.get("n_hot")
            return InitialCondition.two_temperature(
                float(section["s_hot"]), float(section["s_cold"]),
                int(n_hot) if n_hot is not None else None,
            )
        if kind == "shifted_gaussian":
            _require_keys(section, {"kind", "mean", "s"}, {"kind", "mean"}, "initial")
            mean = [float(x) for x in section["mean"]]
            s = float(section.get("s", 1.0 / (2.0 * 3.141592653589793)))
            return InitialCondition.shifted_gaussian(mean, s)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid initial: {exc}") from exc
    raise ConfigError(f"unknown initial kind {kind!r} (custom samplers are API-only)")


def build_ensemble(section: dict) -> EnsembleConfig:
    _require_keys(
        section,
        allowed={"n_traj", "t_grid", "seed", "record"},
        required={"n_traj", "t_grid", "seed"},
        where="ensemble",
    )
    try:
        return EnsembleConfig(
            n_traj=int(section["n_traj"]),
            t_grid=tuple(float(t) for t in section["t_grid"]),
            seed=int(section["seed"]),
            record=tuple(section.get("record", ("system_velocities", "collision_counts"))),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid ensemble: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description plus its canonical hash."""

    params: GeneratorParams
    rho: AngleDistribution | None
    initial: InitialCondition | None
    ensemble: EnsembleConfig | None
    entropy_options: dict
    envelope_options: dict
    raw: dict

    @property
    def config_hash(self) -> str:
        return canonical_hash(self.raw)

    @property
    def seed(self) -> int:
        return self.ensemble.seed if self.ensemble is not None else 0


TOP_LEVEL_KEYS = {"params", "rho", "initial", "ensemble", "entropy", "envelope"}


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be an object")
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "params" not in raw:
        raise ConfigError("config needs a 'params' section")
    params = build_params(raw["params"])
    rho = build_angle_distribution(raw["rho"]) if "rho" in raw else None
    if params.dimension == 1 and rho is None:
        raise ConfigError("dimension 1 requires a 'rho' section")
    initial = build_initial(raw["initial"]) if "initial" in raw else None
    ensemble = build_ensemble(raw["ensemble"]) if "ensemble" in raw else None
    entropy_options = dict(raw.get("entropy", {}))
    _require_keys(entropy_options, {"k", "bootstrap", "bias_margin"}, set(), "entropy")
    envelope_options = dict(raw.get("envelope", {}))
    _require_keys(envelope_options, {"t_grid"}, set(), "envelope")
    return ExperimentConfig(
        params=params,
        rho=rho,
        initial=initial,
        ensemble=ensemble,
        entropy_options=entropy_options,
        envelope_options=envelope_options,
        raw=raw,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


def canonical_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
