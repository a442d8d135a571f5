"""Interval estimation for mu and Z_n, bound evaluators, harmonic moments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .empirical import LOWER, UPPER, tail_freq
from .environment import EnvironmentModel
from .gaussian import Phi_inv
from .simulator import ANNEALED, simulate_final

LINEAR = "linear"
LOG = "log"

B1 = "B1"
B2 = "B2"


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    scale: str
    kappa: float
    n: int

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval endpoints out of order: {self.lo} > {self.hi}")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def _check(n, sigma, kappa):
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")


def critical_value(kappa: float) -> float:
    """Phi^-1(1 - kappa/2), taken as -Phi^-1(kappa/2) to keep accuracy for tiny kappa."""
    return -Phi_inv(kappa / 2.0)


def ci_mu(log_zn: float, n: int, sigma: float, kappa: float) -> Interval:
    """Confidence interval for mu with sigma known: log Z_n / n -+ sigma z / sqrt n."""
    _check(n, sigma, kappa)
    half = sigma * critical_value(kappa) / math.sqrt(n)
    centre = log_zn / n
    return Interval(centre - half, centre + half, LINEAR, kappa, n)


def ci_Zn(n: int, mu: float, sigma: float, kappa: float) -> Interval:
    """Prediction interval for Z_n, endpoints on the log scale: n mu -+ sigma sqrt(n) z.

    The linear-scale endpoints exp(n mu -+ ...) overflow doubles for
    realistic n, so they are never formed.
    """
    _check(n, sigma, kappa)
    half = sigma * math.sqrt(n) * critical_value(kappa)
    return Interval(n * mu - half, n * mu + half, LOG, kappa, n)


@dataclass(frozen=True)
class KappaSchedule:
    """kappa_n = exp(-alpha n^beta (log n)^gamma (log log n)^eta).

    ``eta`` extends the three-parameter family so that schedules such as
    kappa_n = 1/log n (alpha=1, beta=gamma=0, eta=1) are representable.
    """

    alpha: float
    beta: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    def min_n(self) -> int:
        return 3 if self.eta != 0.0 else 2

    def log_kappa(self, n: int) -> float:
        if n < self.min_n():
            raise ValueError(f"schedule defined for n >= {self.min_n()}, got {n}")
        ln = math.log(n)
        value = self.alpha * n**self.beta * ln**self.gamma
        if self.eta != 0.0:
            value *= math.log(ln) ** self.eta
        return -value

    def kappa(self, n: int) -> float:
        return math.exp(self.log_kappa(n))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "eta": self.eta}


def _lex_below(exponents, bound):
    # (beta, gamma, eta) lexicographically below bound <=> growth is o(bound's growth)
    return tuple(exponents) < tuple(bound)


def kappa_check(schedule: KappaSchedule, regime: str) -> bool:
    """Whether |log kappa_n| is o(log n) (B1) or o(n^(1/3)) (B2).

    n^beta (log n)^gamma (log log n)^eta grows strictly slower than
    n^b (log n)^g (log log n)^e iff (beta, gamma, eta) < (b, g, e)
    lexicographically.
    """
    exps = (schedule.beta, schedule.gamma, schedule.eta)
    if regime == B1:
        return _lex_below(exps, (0.0, 1.0, 0.0))
    if regime == B2:
        return _lex_below(exps, (1.0 / 3.0, 0.0, 0.0))
    raise ValueError(f"regime must be 'B1' or 'B2', got {regime!r}")


@dataclass(frozen=True)
class Coverage:
    coverage: float
    std_error: float
    hits: int
    replicates: int


def _coverage(hits, total):
    p = hits / total
    return Coverage(p, math.sqrt(p * (1.0 - p) / total), int(hits), total)


def coverage_counts(log_zn: np.ndarray, n: int, mu: float, sigma: float, kappa: float) -> tuple[int, int]:
    """Hit counts of (mu in ci_mu, log Z_n in ci_Zn) over replicates, closed intervals."""
    z = critical_value(kappa)
    half_mu = sigma * z / math.sqrt(n)
    centre = log_zn / n
    hits_mu = int(np.count_nonzero((centre - half_mu <= mu) & (mu <= centre + half_mu)))
    pi = ci_Zn(n, mu, sigma, kappa)
    hits_zn = int(np.count_nonzero((pi.lo <= log_zn) & (log_zn <= pi.hi)))
    return hits_mu, hits_zn


def coverage_experiment(
    model: EnvironmentModel,
    n: int,
    kappa: float,
    replicates: int,
    master_seed: int,
    target: str = "mu",
    threads: int | None = None,
    mode: str = ANNEALED,
) -> Coverage:
    """Fraction of replicates whose interval covers the true target."""
    if target not in ("mu", "Zn"):
        raise ValueError(f"target must be 'mu' or 'Zn', got {target!r}")
    xm = model.x_moments()
    if not xm.sigma_sq > 0.0:
        raise ValueError("coverage needs sigma^2 > 0")
    final = simulate_final(model, n, replicates, master_seed, mode, threads)
    hits_mu, hits_zn = coverage_counts(final.log_z, n, xm.mu, math.sqrt(xm.sigma_sq), kappa)
    return _coverage(hits_mu if target == "mu" else hits_zn, replicates)


def theorem22_bound(x: float, n: int, c: float, C: float) -> float:
    """C n^(-1/2) (1 + x^2) exp(-xh^2 / 2) with xh = |x| / sqrt(1 + c |x| / sqrt n)."""
    if n < 1 or not c >= 0.0 or not C > 0.0:
        raise ValueError("theorem22_bound needs n >= 1, c >= 0 and C > 0")
    ax = abs(x)
    xh_sq = ax * ax / (1.0 + c * ax / math.sqrt(n))
    return C / math.sqrt(n) * (1.0 + x * x) * math.exp(-xh_sq / 2.0)


@dataclass(frozen=True)
class BernsteinBounds:
    upper_tail: float
    lower_tail: float


def _bernstein_exponent(x, n, c):
    return x * x / (2.0 * (1.0 + c * x / math.sqrt(n)))


def bernstein_bounds(x: float, n: int, c: float, C: float) -> BernsteinBounds:
    """Upper tail 2 exp(-x^2 / (2 (1 + c x / sqrt n))), lower tail C times the same exponential."""
    if x < 0.0:
        raise ValueError(f"bernstein_bounds needs x >= 0, got {x}")
    e = math.exp(-_bernstein_exponent(x, n, c))
    return BernsteinBounds(2.0 * e, C * e)


def required_c(x: float, n: int, tail: float, prefactor: float = 2.0) -> float:
    """Smallest c >= 0 with ``tail <= prefactor * exp(-x^2 / (2 (1 + c x / sqrt n)))``.

    Returns inf when no c works (tail above the prefactor).
    """
    if tail <= 0.0 or x <= 0.0:
        return 0.0
    room = math.log(prefactor / tail)
    if room <= 0.0:
        return math.inf
    need = x * x / (2.0 * room) - 1.0
    return max(0.0, need * math.sqrt(n) / x)


@dataclass(frozen=True)
class TailFit:
    """Fitted Bernstein c for one sample and the grid points that bind."""

    c_upper: float
    c_lower: float
    informative_x: list[float]
    rows: list[dict]

    @property
    def c(self) -> float:
        return max(self.c_upper, self.c_lower)


def fit_bernstein_c(sample, grid, prefactor: float = 2.0, min_z: float = 10.0) -> TailFit:
    """Smallest c such that both Bernstein bounds (with fixed ``prefactor``) dominate the
    empirical tails at every grid x >= 0 whose estimate exceeds ``min_z`` standard errors."""
    n = sample.n
    c_up = c_lo = 0.0
    used = []
    rows = []
    for x in grid:
        if x < 0.0:
            continue
        up = tail_freq(sample, x, UPPER)
        lo = tail_freq(sample, -x, LOWER)
        row = {"x": float(x), "upper": up, "lower": lo}
        if up.estimate > min_z * up.std_error:
            c_up = max(c_up, required_c(x, n, up.estimate, prefactor))
            used.append(float(x))
        if lo.estimate > min_z * lo.std_error:
            c_lo = max(c_lo, required_c(x, n, lo.estimate, prefactor))
        rows.append(row)
    return TailFit(c_up, c_lo, used, rows)


@dataclass(frozen=True)
class HarmonicMoment:
    estimate: float
    std_error: float


def harmonic_moment_estimate(w_sample, a: float) -> HarmonicMoment:
    """Sample mean of W^(-a) and its standard error."""
    w = np.asarray(w_sample, dtype=float)
    if a <= 0.0:
        raise ValueError(f"order a must be positive, got {a}")
    if len(w) == 0 or np.any(~(w > 0.0)):
        raise ValueError("harmonic moments need strictly positive samples")
    vals = w ** (-a)
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(w))) if len(w) > 1 else 0.0
    return HarmonicMoment(est, se)
