"""Finite-support i.i.d. environments over offspring laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .offspring import OffspringLaw, law_from_dict
from .rng import Stream

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class XMoments:
    mu: float
    sigma_sq: float
    abs_central_moment_2_plus_delta: float


@dataclass(frozen=True)
class ConditionReport:
    """Numeric values behind the moment conditions of the theorems.

    For finite mixtures of the implemented families every expectation is
    finite, so the booleans record the structural requirements only.
    """

    h2: bool
    a3star: dict
    a1: dict
    a2: dict
    a3: dict
    a4: dict
    supercritical: bool
    p_z1_eq_1: float
    mu: float
    sigma_sq: float

    @property
    def theorem_eligible(self) -> bool:
        return self.h2 and self.supercritical and self.a3star["sigma_sq"] > 0.0 and self.p_z1_eq_1 < 1.0

    def to_dict(self) -> dict:
        return {
            "h2": self.h2,
            "a3star": dict(self.a3star),
            "a1": dict(self.a1),
            "a2": dict(self.a2),
            "a3": dict(self.a3),
            "a4": dict(self.a4),
            "supercritical": self.supercritical,
            "p_z1_eq_1": self.p_z1_eq_1,
            "mu": self.mu,
            "sigma_sq": self.sigma_sq,
            "theorem_eligible": self.theorem_eligible,
        }


@dataclass(frozen=True)
class EnvironmentModel:
    """Mixture ``sum_i weight_i * delta_{law_i}`` from which each generation's law is drawn."""

    atoms: tuple[tuple[OffspringLaw, float], ...]
    _cumulative: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple((law, float(w)) for law, w in self.atoms)
        if not atoms:
            raise ValueError("environment needs at least one atom")
        if any(w < 0.0 or math.isnan(w) for _, w in atoms):
            raise ValueError("environment weights must be nonnegative")
        total = math.fsum(w for _, w in atoms)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"environment weights sum to {total!r}, expected 1")
        cum, acc = [], 0.0
        for _, w in atoms:
            acc += w
            cum.append(acc)
        cum[-1] = 1.0
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_cumulative", tuple(cum))

    @classmethod
    def single(cls, law: OffspringLaw) -> "EnvironmentModel":
        return cls(((law, 1.0),))

    @classmethod
    def from_dict(cls, record: dict) -> "EnvironmentModel":
        return cls(tuple((law_from_dict(a["law"]), a["weight"]) for a in record["atoms"]))

    def to_dict(self) -> dict:
        return {"atoms": [{"law": law.to_dict(), "weight": w} for law, w in self.atoms]}

    @property
    def laws(self) -> list[OffspringLaw]:
        return [law for law, _ in self.atoms]

    @property
    def weights(self) -> list[float]:
        return [w for _, w in self.atoms]

    @property
    def cumulative(self) -> tuple[float, ...]:
        return self._cumulative

    def expect(self, f) -> float:
        """Environment average of ``f(law)``."""
        return math.fsum(w * f(law) for law, w in self.atoms)

    def sample_index(self, rng: Stream) -> int:
        u = rng.uniform()
        for i, c in enumerate(self._cumulative):
            if u <= c:
                return i
        return len(self._cumulative) - 1

    def sample_env(self, rng: Stream) -> OffspringLaw:
        return self.atoms[self.sample_index(rng)][0]

    def x_moments(self, delta: float = 1.0) -> XMoments:
        """mu, sigma^2 and E|X - mu|^(2 + delta) for X = log m_0."""
        mu = self.expect(lambda law: math.log(law.mean()))
        sigma_sq = self.expect(lambda law: (math.log(law.mean()) - mu) ** 2)
        central = self.expect(lambda law: abs(math.log(law.mean()) - mu) ** (2.0 + delta))
        return XMoments(mu, sigma_sq, central)

    @property
    def mu(self) -> float:
        return self.x_moments().mu

    @property
    def sigma(self) -> float:
        return math.sqrt(self.x_moments().sigma_sq)

    def check_conditions(self, delta: float = 1.0, p: float = 2.0, lambda0: float = 1.0) -> ConditionReport:
        if not 0.0 < delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {delta}")
        if p <= 1.0:
            raise ValueError(f"p must exceed 1, got {p}")
        if lambda0 <= 0.0:
            raise ValueError(f"lambda0 must be positive, got {lambda0}")
        xm = self.x_moments(delta)
        # E (Z1/m0) log Z1
        z1_logz1 = self.expect(lambda law: law.expect(lambda k: k * math.log(k)) / law.mean())
        p1 = self.expect(lambda law: law.pmf(1))
        return ConditionReport(
            h2=True,  # every implemented law lives on {1, 2, ...}
            a3star={
                "sigma_sq": xm.sigma_sq,
                "sigma_positive": xm.sigma_sq > 0.0,
                "z1_logz1_finite": True,
                "z1_logz1_value": z1_logz1,
            },
            a1={"delta": delta, "moment_value": self.expect(lambda law: math.log(law.mean()) ** (2.0 + delta))},
            a2={"p": p, "value": self.expect(lambda law: law.moment_p(p) / law.mean() ** p)},
            a3={"lambda0": lambda0, "value": self.expect(lambda law: law.mean() ** lambda0)},
            a4={"p": p, "value": self.expect(lambda law: law.moment_p(p) / law.mean())},
            supercritical=xm.mu > 0.0,
            p_z1_eq_1=p1,
            mu=xm.mu,
            sigma_sq=xm.sigma_sq,
        )
