import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from bpre.empirical import (
    LOWER,
    UPPER,
    bootstrap_wasserstein,
    ecdf,
    fit_rate,
    ks_to_normal,
    nonuniform_profile,
    tail_freq,
    wasserstein_to_normal,
)
from bpre.gaussian import Phi, Phi_inv

mpmath.mp.dps = 30


def mp_l1(points, weights):
    """High-precision integral of |F - Phi| for a discrete law."""
    pts = [mpmath.mpf(p) for p in points]
    levels = np.cumsum(weights)
    total = mpmath.quad(mpmath.ncdf, [-mpmath.inf, pts[0]]) + mpmath.quad(lambda x: 1 - mpmath.ncdf(x), [pts[-1], mpmath.inf])
    for a, b, lv in zip(pts[:-1], pts[1:], levels[:-1]):
        lv = mpmath.mpf(lv)
        cuts = [a, b]
        if mpmath.ncdf(a) < lv < mpmath.ncdf(b):
            cuts = [a, mpmath.sqrt(2) * mpmath.erfinv(2 * lv - 1), b]
        total += mpmath.quad(lambda x: abs(lv - mpmath.ncdf(x)), cuts)
    return float(total)


def quadrature_l1(values):
    values = np.sort(np.asarray(values, float))
    n = len(values)
    f = lambda x: abs(np.searchsorted(values, x, side="right") / n - Phi(x))
    lo, hi = values[0] - 10, values[-1] + 10
    brk = np.unique(values)
    pieces = np.concatenate([[lo], brk, [hi]])
    return sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0] for a, b in zip(pieces[:-1], pieces[1:]))


def test_ecdf_examples():
    assert ecdf([1, 2, 3], 2) == pytest.approx(2 / 3)
    assert ecdf([1, 2, 3], 0) == 0
    assert ecdf([1, 2, 3], 3) == 1
    with pytest.raises(ValueError):
        ecdf([], 0.0)


def test_single_point_distance():
    ref = float(2 / mpmath.sqrt(2 * mpmath.pi))
    assert wasserstein_to_normal([0.0]) == pytest.approx(ref, abs=1e-15)
    assert wasserstein_to_normal([0.0]) == pytest.approx(0.7978846, abs=1e-7)


def test_symmetric_pair_distance():
    ref = mp_l1([-1.0, 1.0], [0.5, 0.5])
    assert wasserstein_to_normal([-1.0, 1.0]) == pytest.approx(ref, abs=1e-14)
    assert wasserstein_to_normal([-1.0, 1.0]) == pytest.approx(0.5353770, abs=1e-6)


def test_distance_of_normal_draws_is_small():
    x = np.random.default_rng(1).standard_normal(10**6)
    assert wasserstein_to_normal(x) < 0.005


def test_distance_matches_quadrature_on_random_samples():
    rng = np.random.default_rng(2026)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 51))
        values = rng.normal(rng.uniform(-2, 2), rng.uniform(0.2, 3), n)
        worst = max(worst, abs(wasserstein_to_normal(values) - quadrature_l1(values)))
    assert worst <= 1e-6


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=1, max_size=30))
def test_distance_positive(values):
    assert wasserstein_to_normal(values) > 0.0


def test_bootstrap_interval_brackets_estimate():
    x = np.random.default_rng(3).standard_normal(2000) * 1.2
    d = wasserstein_to_normal(x)
    lo, hi = bootstrap_wasserstein(x, 200, seed=[5, 1])
    assert lo < d < hi
    assert (lo, hi) == bootstrap_wasserstein(x, 200, seed=[5, 1])


def test_ks_examples():
    assert ks_to_normal([0.0]) == 0.5
    n = 100
    q = Phi_inv((np.arange(1, n + 1) - 0.5) / n)
    assert ks_to_normal(q) == pytest.approx(0.5 / n, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40))
def test_ks_bounds_and_symmetry(values):
    k = ks_to_normal(values)
    assert 0.0 <= k <= 1.0
    assert k == pytest.approx(ks_to_normal([-v for v in values]), abs=1e-12)


def test_ks_matches_scipy():
    x = np.random.default_rng(4).standard_normal(500) + 0.1
    assert ks_to_normal(x) == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-12)


def test_profile_on_quantile_sample():
    n = 200
    q = Phi_inv((np.arange(1, n + 1) - 0.5) / n)
    grid = np.round(np.arange(-40, 41) * 0.1, 10)
    prof = nonuniform_profile(q, 0.5, grid)
    assert prof.sup_weighted <= (1 + 4**1.5) * 0.5 / n + 1e-12
    assert prof.sup_weighted >= max(d for _, d in prof.per_x)


def test_profile_csv_header():
    prof = nonuniform_profile([0.0, 1.0], 0.5)
    assert prof.to_csv().splitlines()[0] == "x,weighted_dev"


def test_profile_decays_in_tails():
    prof = nonuniform_profile(np.random.default_rng(5).standard_normal(300), 0.5, np.array([50.0, 100.0, 200.0]))
    assert all(d < 1e-100 for _, d in prof.per_x)


def test_tail_freq_examples():
    assert tail_freq([-1, 0, 1], 0.5, UPPER).estimate == pytest.approx(1 / 3)
    assert tail_freq([-1, 0, 1], 0.5, LOWER).estimate == pytest.approx(2 / 3)
    x = np.random.default_rng(6).standard_normal(10**5)
    assert abs(tail_freq(x, 2.0, UPPER).estimate - 0.02275) < 3 * 0.00047
    with pytest.raises(ValueError):
        tail_freq(x, 2.0, "middle")


def test_fit_rate_examples():
    fit = fit_rate([(16, 0.25), (64, 0.125), (256, 0.0625)])
    assert fit.slope == pytest.approx(-0.5, abs=1e-14) and fit.residual_rms < 1e-14
    assert fit_rate([(16, 0.3), (64, 0.3), (256, 0.3)]).slope == pytest.approx(0.0, abs=1e-15)
    for bad in ([(16, 0.2), (64, 0.1)], [(16, 0.2), (16, 0.1), (64, 0.1)], [(16, 0.2), (64, 0.0), (256, 0.1)]):
        with pytest.raises(ValueError):
            fit_rate(bad)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-0.01, 0.01), min_size=4, max_size=4))
def test_fit_rate_perturbed_power_law(eps):
    ns = [16, 64, 256, 1024]
    fit = fit_rate([(n, n**-0.5 * (1 + e)) for n, e in zip(ns, eps)])
    assert abs(fit.slope + 0.5) <= 0.02


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 10))
def test_fit_rate_exact_on_power_laws(slope, scale):
    fit = fit_rate([(n, scale * n**slope) for n in (3, 10, 100, 1000)])
    assert fit.slope == pytest.approx(slope, abs=1e-10)
    assert fit.residual_rms < 1e-10
