"""Exact law of log Z_n for tiny horizons by brute-force convolution.

Independent of the samplers: population-count distributions are pushed
forward by explicit k-fold convolution powers of each truncated offspring
pmf, mixed over all |atoms|^n environment sequences.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .empirical import StepCDF
from .environment import EnvironmentModel
from .offspring import OffspringLaw

PROB_FLOOR = 1e-18
MAX_SUPPORT = 10**7
MAX_HORIZON = 6
ACCEPT_TRUNCATION = 1e-9


class OracleRefusal(RuntimeError):
    """The exact computation would exceed its state-space budget."""


@dataclass(frozen=True)
class DiscreteDistribution:
    values: np.ndarray
    probs: np.ndarray
    truncation_mass: float

    def cdf(self, x) -> np.ndarray:
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(self.values, x, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def to_csv(self) -> str:
        rows = ["value,prob"] + [f"{v:.9g},{p:.9g}" for v, p in zip(self.values, self.probs)]
        return "\n".join(rows) + "\n"


class _Dist:
    """Probabilities over consecutive integers starting at ``offset``."""

    __slots__ = ("offset", "p")

    def __init__(self, offset, p):
        self.offset = offset
        self.p = p

    def floored(self):
        """Zero entries below PROB_FLOOR at either end; return (dist, floored mass)."""
        keep = np.nonzero(self.p >= PROB_FLOOR)[0]
        if len(keep) == 0:
            return _Dist(self.offset, self.p[:0]), float(self.p.sum())
        lo, hi = keep[0], keep[-1] + 1
        lost = float(self.p[:lo].sum() + self.p[hi:].sum())
        return _Dist(self.offset + lo, self.p[lo:hi].copy()), lost


def truncated_pmf(law: OffspringLaw, z_cap: int) -> tuple[np.ndarray, float]:
    """pmf on 1..z_cap (index 0 <-> k=1) and the mass beyond z_cap."""
    kmax = law.support_max()
    top = z_cap if kmax is None else min(z_cap, kmax)
    p = np.array([law.pmf(k) for k in range(1, top + 1)])
    if kmax is not None and kmax <= z_cap:
        return p, 0.0
    return p, max(0.0, 1.0 - math.fsum(p))


def _step(dist: _Dist, pmf: np.ndarray) -> _Dist:
    """Law of the sum of Z i.i.d. offspring counts, Z ~ dist.

    Builds the convolution powers pmf^{*z} one at a time; each power has its
    negligible ends floored before the next convolution.
    """
    top = dist.offset + len(dist.p) - 1
    size = top * len(pmf) + 1
    if size > MAX_SUPPORT:
        raise OracleRefusal(f"support would reach {size} points (limit {MAX_SUPPORT})")
    out = np.zeros(size)
    power = _Dist(0, np.ones(1))  # 0-fold convolution
    for z in range(1, top + 1):
        power, _ = _Dist(power.offset + 1, np.convolve(power.p, pmf)).floored()
        if z < dist.offset:
            continue
        w = dist.p[z - dist.offset]
        if w != 0.0 and len(power.p):
            out[power.offset:power.offset + len(power.p)] += w * power.p
    nz = np.nonzero(out)[0]
    if len(nz) == 0:
        return _Dist(1, np.zeros(0))
    return _Dist(int(nz[0]), out[nz[0]:nz[-1] + 1].copy())


def exact_distribution_logZ(model: EnvironmentModel, n: int, z_cap: int = 200) -> DiscreteDistribution:
    """Exact law of log Z_n, as atoms (log k, P(Z_n = k)).

    Mass lost to the offspring truncation at ``z_cap`` and to the
    probability floor is reported as ``truncation_mass``.
    """
    if not 1 <= n <= MAX_HORIZON:
        raise OracleRefusal(f"exact enumeration supports 1 <= n <= {MAX_HORIZON}, got {n}")
    pmfs = [truncated_pmf(law, z_cap)[0] for law in model.laws]
    total = {}
    truncation = 0.0
    for seq in itertools.product(range(len(model.atoms)), repeat=n):
        weight = math.prod(model.weights[i] for i in seq)
        if weight == 0.0:
            continue
        dist = _Dist(1, np.ones(1))
        lost_seq = 0.0
        for i in seq:
            before = float(dist.p.sum())
            dist = _step(dist, pmfs[i])
            # offspring tail beyond z_cap plus floored power entries
            lost_seq += before - float(dist.p.sum())
            dist, fl2 = dist.floored()
            lost_seq += fl2
        truncation += weight * lost_seq
        for j, v in enumerate(dist.p):
            k = dist.offset + j
            total[k] = total.get(k, 0.0) + weight * v
    ks = np.array(sorted(k for k, v in total.items() if v > 0.0))
    probs = np.array([total[k] for k in ks])
    return DiscreteDistribution(np.log(ks.astype(float)), probs, truncation)


def exact_wasserstein(dist: DiscreteDistribution, mu: float, sigma: float, n: int) -> float:
    """d_w of the exact law of (log Z_n - n mu) / (sigma sqrt n)."""
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if dist.truncation_mass > ACCEPT_TRUNCATION:
        raise ValueError(f"truncation mass {dist.truncation_mass:.3g} exceeds {ACCEPT_TRUNCATION}")
    x = (dist.values - n * mu) / (sigma * math.sqrt(n))
    levels = np.cumsum(dist.probs)
    return StepCDF(x).l1_to_normal(levels)


def point_masses(values, probs) -> DiscreteDistribution:
    """Build a distribution directly on the normalized scale (mu = 0, sigma = 1, n = 1)."""
    order = np.argsort(values)
    return DiscreteDistribution(np.asarray(values, float)[order], np.asarray(probs, float)[order], 0.0)
