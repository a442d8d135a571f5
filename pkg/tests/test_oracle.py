import math

import numpy as np
import pytest
from scipy import stats

from bpre.environment import EnvironmentModel
from bpre.oracle import (
    MAX_HORIZON,
    OracleRefusal,
    exact_distribution_logZ,
    exact_wasserstein,
    point_masses,
)
from bpre.gaussian import Phi_inv
from bpre.offspring import Geometric1, ShiftedPoisson, TwoPoint


def test_deterministic_law(doubling_env):
    d = exact_distribution_logZ(doubling_env, 3)
    assert d.values.tolist() == [math.log(8)] and d.probs.tolist() == [1.0]
    assert d.truncation_mass == 0.0


def test_single_generation_is_offspring_law():
    d = exact_distribution_logZ(EnvironmentModel.single(Geometric1(0.5)), 1, z_cap=50)
    assert np.allclose(d.values, np.log(np.arange(1, 51)), rtol=0, atol=0)
    assert np.allclose(d.probs, 0.5 ** np.arange(1, 51), rtol=1e-14, atol=0)
    assert d.truncation_mass == pytest.approx(0.5**50, rel=1e-3)


def test_mixture_first_atom(geo_env):
    d = exact_distribution_logZ(geo_env, 1)
    assert d.values[0] == 0.0
    assert d.probs[0] == pytest.approx(0.45, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_mass_accounting(geo_env, n):
    d = exact_distribution_logZ(geo_env, n)
    assert np.all(d.probs >= 0)
    assert abs(d.probs.sum() + d.truncation_mass - 1.0) <= 1e-12
    assert d.truncation_mass <= 1e-9


def test_two_generations_by_hand():
    # Z1 ~ 1 + Poisson(1); Z2 | Z1 ~ Z1 + Poisson(Z1)
    model = EnvironmentModel.single(ShiftedPoisson(1.0))
    d = exact_distribution_logZ(model, 2, z_cap=80)
    ks = np.rint(np.exp(d.values)).astype(int)
    z1 = np.arange(1, 80)
    p_z1 = stats.poisson.pmf(z1 - 1, 1.0)
    for k, p in zip(ks[:10], d.probs[:10]):
        ref = np.sum(p_z1 * stats.poisson.pmf(k - z1, z1))
        assert p == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_two_point_binomial_by_hand():
    model = EnvironmentModel.single(TwoPoint(3, 0.25))
    d = exact_distribution_logZ(model, 2)
    ks = np.rint(np.exp(d.values)).astype(int)
    ref = {}
    for z1, p1 in ((1, 0.75), (3, 0.25)):
        for j in range(z1 + 1):
            ref[z1 + 2 * j] = ref.get(z1 + 2 * j, 0.0) + p1 * stats.binom.pmf(j, z1, 0.25)
    assert dict(zip(ks.tolist(), d.probs.tolist())) == pytest.approx(ref, abs=1e-15)


def test_refusals(geo_env):
    with pytest.raises(OracleRefusal):
        exact_distribution_logZ(geo_env, MAX_HORIZON + 1)
    with pytest.raises(OracleRefusal):
        exact_distribution_logZ(EnvironmentModel.single(ShiftedPoisson(50.0)), 5, z_cap=200)


def test_exact_wasserstein_closed_forms():
    assert exact_wasserstein(point_masses([0.0], [1.0]), 0.0, 1.0, 1) == pytest.approx(0.7978845608028654, abs=1e-15)
    assert exact_wasserstein(point_masses([-1.0, 1.0], [0.5, 0.5]), 0.0, 1.0, 1) == pytest.approx(
        0.5353773215478799, abs=1e-14)
    with pytest.raises(ValueError):
        exact_wasserstein(point_masses([0.0], [1.0]), 0.0, 0.0, 1)


def quantile_grid_distance(m):
    q = Phi_inv((np.arange(1, m + 1) - 0.5) / m)
    return exact_wasserstein(point_masses(q, np.full(m, 1 / m)), 0.0, 1.0, 1)


def test_exact_wasserstein_quantile_grid():
    # reference from adaptive quadrature of |F - Phi| between the 1000 atoms
    assert quantile_grid_distance(1000) == pytest.approx(0.00191714946, abs=1e-9)
    assert quantile_grid_distance(10_000) < 0.001


def test_csv_schema(geo_env):
    lines = exact_distribution_logZ(geo_env, 1, z_cap=5).to_csv().splitlines()
    assert lines[0] == "value,prob" and len(lines) == 6
