"""Offspring laws on {1, 2, 3, ...} with exact moments and aggregate samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import rng as _rng

#: Largest population handled by the exact integer samplers.
EXACT_LIMIT = 2**62

SERIES_TOL = 1e-12
SERIES_MAX_TERMS = 10**6

# kernel encoding of the variants
CODE_TWO_POINT = 0
CODE_GEOMETRIC1 = 1
CODE_SHIFTED_POISSON = 2


class SeriesError(ArithmeticError):
    """A moment series did not reach its truncation tolerance."""


@dataclass(frozen=True)
class ApproximateSum:
    """Large-population surrogate returned by :meth:`OffspringLaw.sample_sum`.

    Only ``log_value`` is meaningful; the count itself is never formed.
    """

    log_value: float
    approximate: bool = True


class OffspringLaw:
    """Base class.  Subclasses are frozen dataclasses and safe to share."""

    code: int

    def pmf(self, k: int) -> float:
        if k <= 0:
            raise ValueError(f"offspring count must be >= 1, got {k}")
        return self._pmf(k)

    def _pmf(self, k: int) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def support_max(self) -> int | None:
        """Largest support point, or None for unbounded support."""
        return None

    def params(self) -> tuple[float, float]:
        """Two numeric parameters in the compiled kernel's encoding."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def expect(self, f, tol: float = SERIES_TOL) -> float:
        """Sum f(k) * pmf(k) over the support.

        Unbounded supports are summed until the remaining tail is provably
        below ``tol``.  For the implemented families the term ratio
        ``t(k+1)/t(k)`` is eventually nonincreasing, so once it drops under
        1 the tail is bounded by a geometric series.  ``f`` must be
        nonnegative and grow at most polynomially.
        """
        kmax = self.support_max()
        if kmax is not None:
            return math.fsum(f(k) * self._pmf(k) for k in range(1, kmax + 1))
        terms = []
        prev = f(1) * self._pmf(1)
        terms.append(prev)
        for k in range(2, SERIES_MAX_TERMS + 1):
            cur = f(k) * self._pmf(k)
            terms.append(cur)
            if k > self._tail_start() and prev > 0.0:
                ratio = cur / prev
                if ratio < 1.0 and cur * ratio / (1.0 - ratio) < tol:
                    return math.fsum(terms)
            prev = cur
        raise SeriesError(f"series for {self!r} not converged within {SERIES_MAX_TERMS} terms")

    def _tail_start(self) -> int:
        return 1

    def moment_p(self, p: float) -> float:
        """m^(p) = sum k^p pmf(k)."""
        if p <= 1.0:
            raise ValueError(f"moment order must exceed 1, got {p}")
        if p == 2.0:
            return self.variance() + self.mean() ** 2
        return self.expect(lambda k: k**p)

    def sample(self, rng: _rng.Stream) -> int:
        raise NotImplementedError

    def _increment(self, count: int, rng: _rng.Stream) -> float:
        # sum of (X_i - 1) over count particles, as an integer-valued float
        raise NotImplementedError

    def sample_sum(self, count: int, rng: _rng.Stream):
        """Total offspring of ``count`` particles without looping over them.

        Returns an int while ``count <= EXACT_LIMIT``; beyond that returns an
        :class:`ApproximateSum` carrying the surrogate log total.
        """
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        if count == 0:
            return 0
        if count > EXACT_LIMIT:
            return ApproximateSum(self.log_sum_surrogate(math.log(count), rng))
        return count + int(self._increment(count, rng))

    def log_sum_surrogate(self, log_count: float, rng: _rng.Stream) -> float:
        """CLT surrogate for log(total offspring) given log(count).

        log total = log count + log m + log(1 + eps) with
        eps ~ Normal(0, var / (m^2 count)); log(1 + eps) is replaced by eps,
        an O(1/count) bias.
        """
        m = self.mean()
        rel = self.variance() / (m * m)
        sd = math.sqrt(rel / _rng.exp_inf(log_count))
        return log_count + math.log(m) + sd * _rng.standard_normal(rng)


@dataclass(frozen=True)
class TwoPoint(OffspringLaw):
    """1 offspring with probability 1 - q, ``b`` with probability q."""

    b: int
    q: float

    code = CODE_TWO_POINT

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 2:
            raise ValueError(f"TwoPoint.b must be an integer >= 2, got {self.b}")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"TwoPoint.q must lie in [0, 1], got {self.q}")

    def _pmf(self, k):
        if k == 1:
            return 1.0 - self.q
        if k == self.b:
            return self.q
        return 0.0

    def mean(self):
        return 1.0 - self.q + self.b * self.q

    def variance(self):
        return (self.b - 1) ** 2 * self.q * (1.0 - self.q)

    def support_max(self):
        return int(self.b)

    def params(self):
        return float(self.b), float(self.q)

    def to_dict(self):
        return {"type": "two_point", "b": int(self.b), "q": self.q}

    def sample(self, rng):
        return int(self.b) if rng.uniform() <= self.q else 1

    def _increment(self, count, rng):
        return float(self.b - 1) * float(_rng.binomial(rng, count, self.q))


@dataclass(frozen=True)
class Geometric1(OffspringLaw):
    """Geometric on {1, 2, ...}: pmf p (1 - p)^(k - 1)."""

    p: float

    code = CODE_GEOMETRIC1

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"Geometric1.p must lie in (0, 1), got {self.p}")

    def _pmf(self, k):
        return self.p * (1.0 - self.p) ** (k - 1)

    def mean(self):
        return 1.0 / self.p

    def variance(self):
        return (1.0 - self.p) / self.p**2

    def params(self):
        return self.p, 0.0

    def to_dict(self):
        return {"type": "geometric1", "p": self.p}

    def sample(self, rng):
        return 1 + int(math.floor(math.log(rng.uniform()) / math.log1p(-self.p)))

    def _increment(self, count, rng):
        return _rng.negative_binomial(rng, count, self.p)


@dataclass(frozen=True)
class ShiftedPoisson(OffspringLaw):
    """1 + Poisson(lam)."""

    lam: float

    code = CODE_SHIFTED_POISSON

    def __post_init__(self):
        if not self.lam >= 0.0 or math.isinf(self.lam):
            raise ValueError(f"ShiftedPoisson.lam must be finite and >= 0, got {self.lam}")

    def _pmf(self, k):
        j = k - 1
        if self.lam == 0.0:
            return 1.0 if j == 0 else 0.0
        return math.exp(-self.lam + j * math.log(self.lam) - math.lgamma(j + 1))

    def mean(self):
        return 1.0 + self.lam

    def variance(self):
        return self.lam

    def support_max(self):
        return 1 if self.lam == 0.0 else None

    def _tail_start(self):
        return int(self.lam) + 2

    def params(self):
        return self.lam, 0.0

    def to_dict(self):
        return {"type": "shifted_poisson", "lambda": self.lam}

    def sample(self, rng):
        return 1 + int(_rng.poisson(rng, self.lam))

    def _increment(self, count, rng):
        return _rng.poisson(rng, count * self.lam)


def law_from_dict(record: dict) -> OffspringLaw:
    """Build a law from its tagged-record form, e.g. ``{"type": "geometric1", "p": 0.5}``."""
    kind = record.get("type")
    fields = {k: v for k, v in record.items() if k != "type"}
    expected = {"two_point": {"b", "q"}, "geometric1": {"p"}, "shifted_poisson": {"lambda"}}
    if kind not in expected:
        raise ValueError(f"unknown law type {kind!r}; expected one of {sorted(expected)}")
    if set(fields) != expected[kind]:
        raise ValueError(f"law {kind!r} takes fields {sorted(expected[kind])}, got {sorted(fields)}")
    if kind == "two_point":
        return TwoPoint(b=fields["b"], q=float(fields["q"]))
    if kind == "geometric1":
        return Geometric1(p=float(fields["p"]))
    return ShiftedPoisson(lam=float(fields["lambda"]))
