"""Distances between a sample's step CDF and Phi, tail frequencies, rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import Phi, Phi_inv, int_one_minus_Phi, int_Phi, phi
from .simulator import EmpiricalSample

UPPER = "upper"
LOWER = "lower"


def _values(sample) -> np.ndarray:
    values = sample.values if isinstance(sample, EmpiricalSample) else np.sort(np.asarray(sample, dtype=float))
    if len(values) == 0:
        raise ValueError("empty sample")
    return values


def ecdf(sample, x: float) -> float:
    values = _values(sample)
    return np.searchsorted(values, x, side="right") / len(values)


class StepCDF:
    """Right-continuous step CDF: 0 below ``points[0]``, ``levels[i]`` on [points[i], points[i+1]).

    Caches Phi and the antiderivative x Phi(x) + phi(x) at the jump points so
    the L1 distance to Phi can be re-evaluated cheaply for new levels (the
    bootstrap only reweights the same points).
    """

    def __init__(self, points):
        self.points = np.asarray(points, dtype=float)
        self.cdf = Phi(self.points)
        self.antider = self.points * self.cdf + phi(self.points)
        self.left_tail = int_Phi(self.points[0])
        self.right_tail = int_one_minus_Phi(self.points[-1])

    def l1_to_normal(self, levels) -> float:
        """Exact integral of |F - Phi|; ``levels[-1]`` is treated as 1."""
        levels = np.asarray(levels, dtype=float)[:-1]
        a, b = self.points[:-1], self.points[1:]
        ga, gb = self.antider[:-1], self.antider[1:]
        # Phi is increasing, so the sign of L - Phi changes at most once per interval
        inside = (self.cdf[:-1] < levels) & (levels < self.cdf[1:])
        plain = np.abs(levels * (b - a) - (gb - ga))
        total = math.fsum(plain[~inside])
        if np.any(inside):
            lv = levels[inside]
            r = Phi_inv(lv)
            gr = r * lv + phi(r)
            ai, bi = a[inside], b[inside]
            split = (lv * (r - ai) - (gr - ga[inside])) + ((gb[inside] - gr) - lv * (bi - r))
            total += math.fsum(split)
        return total + self.left_tail + self.right_tail


def wasserstein_to_normal(sample) -> float:
    """d_w = integral of |F_N - Phi| in closed form (no quadrature, no truncation)."""
    values = _values(sample)
    n = len(values)
    return StepCDF(values).l1_to_normal(np.arange(1, n + 1) / n)


def bootstrap_wasserstein(sample, resamples: int = 200, seed: int = 0, level: float = 0.95):
    """Percentile bootstrap interval for d_w.

    A resample of the sorted values is a multinomial reweighting of the same
    points, so every resample reuses one :class:`StepCDF`.
    """
    values = _values(sample)
    n = len(values)
    step = StepCDF(values)
    rng = np.random.default_rng(seed)
    stats = np.empty(resamples)
    probs = np.full(n, 1.0 / n)
    for i in range(resamples):
        counts = rng.multinomial(n, probs)
        stats[i] = step.l1_to_normal(np.cumsum(counts) / n)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def ks_to_normal(sample) -> float:
    values = _values(sample)
    n = len(values)
    cdf = Phi(values)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - cdf)), np.max(np.abs((i - 1) / n - cdf))))


def _deviations_at_points(values, x):
    n = len(values)
    right = np.searchsorted(values, x, side="right") / n
    left = np.searchsorted(values, x, side="left") / n
    cdf = Phi(x)
    return np.maximum(np.abs(right - cdf), np.abs(left - cdf))


@dataclass(frozen=True)
class Profile:
    sup_weighted: float
    per_x: list[tuple[float, float]]

    def to_csv(self) -> str:
        rows = ["x,weighted_dev"] + [f"{x:.9g},{d:.9g}" for x, d in self.per_x]
        return "\n".join(rows) + "\n"


def default_grid() -> np.ndarray:
    return np.round(np.arange(-120, 121) * 0.05, 10)


def nonuniform_profile(sample, delta_prime: float, grid=None) -> Profile:
    """Weighted deviation (1 + |x|^(1 + delta')) |F_N(x) - Phi(x)|.

    The sup also covers both one-sided limits at every order statistic,
    where the step CDF jumps.
    """
    values = _values(sample)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if len(grid) == 0:
        raise ValueError("empty grid")
    power = 1.0 + delta_prime
    grid_dev = (1.0 + np.abs(grid) ** power) * np.abs(ecdf_array(values, grid) - Phi(grid))
    point_dev = (1.0 + np.abs(values) ** power) * _deviations_at_points(values, values)
    sup = float(max(np.max(grid_dev), np.max(point_dev)))
    return Profile(sup, [(float(x), float(d)) for x, d in zip(grid, grid_dev)])


def ecdf_array(values, x):
    return np.searchsorted(values, x, side="right") / len(values)


@dataclass(frozen=True)
class TailFrequency:
    estimate: float
    std_error: float


def tail_freq(sample, x: float, side: str = UPPER) -> TailFrequency:
    """Upper: fraction of values >= x.  Lower: fraction of values <= x."""
    values = _values(sample)
    n = len(values)
    if side == UPPER:
        count = n - np.searchsorted(values, x, side="left")
    elif side == LOWER:
        count = np.searchsorted(values, x, side="right")
    else:
        raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")
    p = count / n
    return TailFrequency(float(p), math.sqrt(p * (1.0 - p) / n))


@dataclass(frozen=True)
class RateFit:
    """log d = intercept + slope * log n."""

    slope: float
    intercept: float
    residual_rms: float
    points: list[tuple[int, float]]

    def predict(self, n):
        return math.exp(self.intercept) * n**self.slope


def fit_rate(points) -> RateFit:
    points = [(int(n), float(d)) for n, d in points]
    if len(points) < 3:
        raise ValueError("fit_rate needs at least 3 points")
    ns = [n for n, _ in points]
    if len(set(ns)) != len(ns) or min(ns) <= 0:
        raise ValueError("horizons must be distinct and positive")
    if any(not d > 0.0 for _, d in points):
        raise ValueError("distances must be positive")
    x = np.log(np.array(ns, dtype=float))
    y = np.log(np.array([d for _, d in points]))
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    return RateFit(slope, intercept, float(np.sqrt(np.mean(resid**2))), points)
