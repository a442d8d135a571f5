"""Scenario configuration: strict parsing, defaults, canonical serialization."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import yaml

from .environment import WEIGHT_TOL, EnvironmentModel
from .inference import KappaSchedule
from .offspring import law_from_dict


class ConfigError(ValueError):
    """Invalid scenario document; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


REQUIRED = ("environment", "horizons", "replicates", "master_seed")
OPTIONAL = (
    "delta",
    "delta_prime",
    "kappa",
    "kappa_schedule",
    "output_dir",
    "mode",
    "bootstrap",
    "z_cap",
    "moment_p",
    "lambda0",
    "theorem22_C",
    "dump_trajectories",
)


@dataclass(frozen=True)
class ScenarioConfig:
    environment: dict
    horizons: tuple[int, ...]
    replicates: int
    master_seed: int
    delta: float = 1.0
    delta_prime: float | None = None
    kappa: tuple[float, ...] = (0.05,)
    kappa_schedule: dict | None = None
    output_dir: str = "out"
    mode: str = "annealed"
    bootstrap: int = 200
    z_cap: int = 200
    moment_p: float = 2.0
    lambda0: float = 1.0
    theorem22_C: float = 1.0
    dump_trajectories: int = 1
    model: EnvironmentModel = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.delta_prime is None:
            object.__setattr__(self, "delta_prime", 0.5 * self.delta)
        object.__setattr__(self, "model", EnvironmentModel.from_dict(self.environment))

    def schedule(self) -> KappaSchedule | None:
        return KappaSchedule(**self.kappa_schedule) if self.kappa_schedule else None

    def kappas_for(self, n: int) -> list[float]:
        sched = self.schedule()
        return [sched.kappa(n)] if sched else list(self.kappa)

    def to_dict(self) -> dict:
        out = {
            "environment": self.environment,
            "horizons": list(self.horizons),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "delta": self.delta,
            "delta_prime": self.delta_prime,
            "output_dir": self.output_dir,
            "mode": self.mode,
            "bootstrap": self.bootstrap,
            "z_cap": self.z_cap,
            "moment_p": self.moment_p,
            "lambda0": self.lambda0,
            "theorem22_C": self.theorem22_C,
            "dump_trajectories": self.dump_trajectories,
        }
        if self.kappa_schedule:
            out["kappa_schedule"] = dict(self.kappa_schedule)
        else:
            out["kappa"] = list(self.kappa)
        return out

    def digest(self) -> str:
        """sha256 of the canonical config, excluding where outputs are written."""
        doc = self.to_dict()
        doc.pop("output_dir")
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()

    def with_overrides(self, master_seed=None, output_dir=None) -> "ScenarioConfig":
        changes = {}
        if master_seed is not None:
            changes["master_seed"] = master_seed
        if output_dir is not None:
            changes["output_dir"] = output_dir
        return replace(self, **changes)


def serialize(config: ScenarioConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def _number(doc, key, kind=float):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return value


def _environment(doc) -> dict:
    env = doc
    if not isinstance(env, dict) or set(env) != {"atoms"}:
        raise ConfigError("environment", "expected a mapping with the single key 'atoms'")
    atoms = env["atoms"]
    if not isinstance(atoms, list) or not atoms:
        raise ConfigError("environment.atoms", "expected a nonempty list")
    clean = []
    for atom in atoms:
        if not isinstance(atom, dict) or set(atom) != {"law", "weight"}:
            raise ConfigError("environment.atoms", "each atom needs exactly 'law' and 'weight'")
        try:
            weight = _number(atom, "weight")
        except ConfigError as exc:
            raise ConfigError("environment.atoms.weight", str(exc)) from None
        if weight < 0.0:
            raise ConfigError("environment.atoms.weight", f"negative weight {weight}")
        if not isinstance(atom["law"], dict):
            raise ConfigError("environment.atoms.law", "expected a tagged mapping such as {type: geometric1, p: 0.5}")
        try:
            law = law_from_dict(atom["law"])
        except (ValueError, TypeError) as exc:
            raise ConfigError("environment.atoms.law", str(exc)) from None
        clean.append({"law": law.to_dict(), "weight": weight})
    total = math.fsum(a["weight"] for a in clean)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ConfigError("environment.atoms.weight", f"weights sum to {total!r}, expected 1")
    return {"atoms": clean}


def parse_config(text: str) -> ScenarioConfig:
    """Parse a YAML (or JSON) scenario document; unknown keys are fatal."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"not valid YAML/JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "expected a mapping at top level")
    unknown = sorted(set(doc) - set(REQUIRED) - set(OPTIONAL))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for key in REQUIRED:
        if key not in doc:
            raise ConfigError(key, "missing required key")

    kwargs = {"environment": _environment(doc["environment"])}

    horizons = doc["horizons"]
    if not isinstance(horizons, list) or not horizons:
        raise ConfigError("horizons", "expected a nonempty list of integers")
    hs = []
    for h in horizons:
        if isinstance(h, bool) or not isinstance(h, int) or h < 1:
            raise ConfigError("horizons", f"entries must be positive integers, got {h!r}")
        hs.append(h)
    if any(b <= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("horizons", "horizons must ascend")
    kwargs["horizons"] = tuple(hs)

    kwargs["replicates"] = _number(doc, "replicates", int)
    if kwargs["replicates"] < 1:
        raise ConfigError("replicates", "must be >= 1")
    kwargs["master_seed"] = _number(doc, "master_seed", int)

    if "delta" in doc:
        kwargs["delta"] = _number(doc, "delta")
    delta = kwargs.get("delta", 1.0)
    if not 0.0 < delta <= 1.0:
        raise ConfigError("delta", f"must lie in (0, 1], got {delta}")
    if "delta_prime" in doc:
        kwargs["delta_prime"] = _number(doc, "delta_prime")
        if not kwargs["delta_prime"] > 0.0:
            raise ConfigError("delta_prime", "must be positive")

    if "kappa" in doc and "kappa_schedule" in doc:
        raise ConfigError("kappa", "give either kappa or kappa_schedule, not both")
    if "kappa" in doc:
        raw = doc["kappa"] if isinstance(doc["kappa"], list) else [doc["kappa"]]
        ks = []
        for k in raw:
            if isinstance(k, bool) or not isinstance(k, (int, float)) or not 0.0 < k < 1.0:
                raise ConfigError("kappa", f"values must lie in (0, 1), got {k!r}")
            ks.append(float(k))
        if not ks:
            raise ConfigError("kappa", "expected at least one value")
        kwargs["kappa"] = tuple(ks)
    if "kappa_schedule" in doc:
        sched = doc["kappa_schedule"]
        if not isinstance(sched, dict) or not set(sched) <= {"alpha", "beta", "gamma", "eta"} or "alpha" not in sched:
            raise ConfigError("kappa_schedule", "expected {alpha, beta?, gamma?, eta?}")
        try:
            ks = KappaSchedule(**{k: float(v) for k, v in sched.items()})
        except (ValueError, TypeError) as exc:
            raise ConfigError("kappa_schedule", str(exc)) from None
        if min(hs) < ks.min_n():
            raise ConfigError("kappa_schedule", f"schedule needs horizons >= {ks.min_n()}")
        kwargs["kappa_schedule"] = ks.to_dict()

    if "output_dir" in doc:
        if not isinstance(doc["output_dir"], str) or not doc["output_dir"]:
            raise ConfigError("output_dir", "expected a path string")
        kwargs["output_dir"] = doc["output_dir"]
    if "mode" in doc:
        if doc["mode"] not in ("annealed", "quenched"):
            raise ConfigError("mode", f"expected 'annealed' or 'quenched', got {doc['mode']!r}")
        kwargs["mode"] = doc["mode"]

    for key, kind, low in (("bootstrap", int, 1), ("z_cap", int, 1), ("dump_trajectories", int, 0)):
        if key in doc:
            kwargs[key] = _number(doc, key, kind)
            if kwargs[key] < low:
                raise ConfigError(key, f"must be >= {low}")
    if "moment_p" in doc:
        kwargs["moment_p"] = _number(doc, "moment_p")
        if not kwargs["moment_p"] > 1.0:
            raise ConfigError("moment_p", "must exceed 1")
    for key in ("lambda0", "theorem22_C"):
        if key in doc:
            kwargs[key] = _number(doc, key)
            if not kwargs[key] > 0.0:
                raise ConfigError(key, "must be positive")
    return ScenarioConfig(**kwargs)
