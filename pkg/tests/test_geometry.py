import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from locbound.errors import DegenerateGeometryError, DomainError, ResourceLimitError
from locbound.geometry import (SensorField, SourceLocation, polar_of, radius_for_count,
                               sample_ppp, truncation_tail)
from locbound.model import ChannelParams


def test_tiny_disc_gives_valid_empty_field():
    f = sample_ppp(1e-12, 1e-3, seed=1)
    assert len(f) == 0
    assert f.points.shape == (0, 2)


def test_mean_count_thousand():
    lam = 0.01
    R = radius_for_count(1000, lam)
    assert R == pytest.approx(178.41, abs=0.01)
    counts = np.array([len(sample_ppp(lam, R, seed=s)) for s in range(2000)])
    se = math.sqrt(1000 / counts.size)
    assert abs(counts.mean() - 1000) < 3 * se


def test_same_seed_bit_identical():
    a = sample_ppp(0.01, 50.0, (1.0, -2.0), seed=99)
    b = sample_ppp(0.01, 50.0, (1.0, -2.0), seed=99)
    assert a.points.tobytes() == b.points.tobytes()


def test_count_chi_square():
    lam, R = 0.05, 10.0
    mu = lam * math.pi * R * R
    counts = np.array([len(sample_ppp(lam, R, seed=s)) for s in range(4000)])
    edges = np.arange(0, 40)
    obs = np.array([(counts == k).sum() for k in edges[:-1]] + [(counts >= edges[-1]).sum()])
    pmf = stats.poisson.pmf(edges[:-1], mu)
    exp = np.append(pmf, 1 - pmf.sum()) * counts.size
    keep = exp >= 5
    obs_k = np.append(obs[keep], obs[~keep].sum())
    exp_k = np.append(exp[keep], exp[~keep].sum())
    _, p = stats.chisquare(obs_k, exp_k)
    assert p > 1e-3


def test_points_uniform_on_disc():
    R = 20.0
    r2 = np.concatenate([np.sum(sample_ppp(0.05, R, seed=s).points ** 2, axis=1)
                         for s in range(300)])
    se = r2.std() / math.sqrt(r2.size)
    assert abs(r2.mean() - R * R / 2) < 3 * se


def test_points_inside_disc():
    f = sample_ppp(0.1, 5.0, (3.0, 4.0), seed=3)
    assert np.all(np.hypot(f.points[:, 0] - 3, f.points[:, 1] - 4) <= 5.0)


def test_resource_limit():
    with pytest.raises(ResourceLimitError):
        sample_ppp(1.0, 1e5, seed=0)


@pytest.mark.parametrize("lam,R", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_sample_rejects_bad_parameters(lam, R):
    with pytest.raises(DomainError):
        sample_ppp(lam, R, seed=0)


def test_field_is_read_only():
    f = sample_ppp(0.1, 5.0, seed=3)
    with pytest.raises(ValueError):
        f.points[0, 0] = 1.0


def test_field_rejects_point_outside():
    with pytest.raises(DomainError):
        SensorField(np.array([[2.0, 0.0]]), 1.0, 1.0, 0)


def test_text_round_trip():
    f = sample_ppp(0.1, 5.0, seed=3)
    text = f.to_text()
    assert text.splitlines()[0] == f"{0.1:.17g} {5.0:.17g} 3"
    g = SensorField.from_text(text)
    assert g.points.tobytes() == f.points.tobytes()
    assert (g.lam, g.radius, g.seed) == (f.lam, f.radius, f.seed)


def test_text_round_trip_with_centre():
    f = sample_ppp(0.1, 5.0, (1.5, -2.0), seed=4)
    g = SensorField.from_text(f.to_text())
    assert g.center == f.center
    assert g.points.tobytes() == f.points.tobytes()


# --- polar_of -------------------------------------------------------------------------

def _field(points):
    pts = np.asarray(points, dtype=float)
    return SensorField(pts, 1.0, float(np.max(np.hypot(*pts.T))) + 1.0, 0)


def test_polar_three_four_five():
    p = polar_of(_field([[3.0, 4.0]]), (0.0, 0.0))
    assert p.d[0] == 5.0


def test_polar_sign_convention_east():
    p = polar_of(_field([[1.0, 0.0]]), SourceLocation(0.0, 0.0))
    assert math.cos(p.phi[0]) == pytest.approx(-1.0)
    assert p.phi[0] == pytest.approx(math.pi)


def test_polar_sign_convention_north():
    p = polar_of(_field([[0.0, 2.0]]), (0.0, 0.0))
    assert math.sin(p.phi[0]) == pytest.approx(-1.0)
    assert p.phi[0] == pytest.approx(-math.pi / 2)


def test_polar_range_is_half_open():
    p = polar_of(_field([[1.0, 0.0], [1.0, -0.0], [-1.0, 0.0]]), (0.0, 0.0))
    assert np.all(p.phi > -math.pi) and np.all(p.phi <= math.pi)


def test_polar_coincident_sensor():
    with pytest.raises(DegenerateGeometryError):
        polar_of(_field([[1.0, 1.0], [0.0, 0.0]]), (0.0, 0.0))


def test_polar_rejects_non_finite_source():
    with pytest.raises(DomainError):
        polar_of(_field([[1.0, 1.0]]), (math.nan, 0.0))


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(-math.pi, math.pi))
def test_polar_rotation_equivariance(seed, alpha):
    f = sample_ppp(0.05, 10.0, seed=seed)
    if len(f) == 0:
        return
    p = polar_of(f, (0.0, 0.0))
    q = polar_of(f.rotated(alpha), (0.0, 0.0))
    np.testing.assert_allclose(q.d, p.d, rtol=1e-12)
    diff = np.angle(np.exp(1j * (q.phi - p.phi - alpha)))
    assert np.max(np.abs(diff)) < 1e-12


# --- truncation tail ------------------------------------------------------------------

def test_tail_value():
    f = SensorField(np.zeros((0, 2)), 0.01, 178.41, 0)
    val = truncation_tail(f, ChannelParams(4.0, 0.0, 1.0))
    assert val == pytest.approx(2 * math.pi * 0.01 * 178.41**-2 / 2, rel=1e-14)
    assert val == pytest.approx(9.9e-7, rel=0.01)


def test_tail_against_monte_carlo_annulus():
    lam, R, gamma = 0.05, 5.0, 4.0
    # E sum D^-gamma over R < D < 10 R, plus the analytic remainder beyond 10 R
    sums = []
    for s in range(400):
        pts = sample_ppp(lam, 10 * R, seed=s).points
        d = np.hypot(*pts.T)
        sums.append(np.sum(d[d > R] ** -gamma))
    beyond = 2 * math.pi * lam * (10 * R) ** (2 - gamma) / (gamma - 2)
    f = SensorField(np.zeros((0, 2)), lam, R, 0)
    est = np.mean(sums) + beyond
    se = np.std(sums) / math.sqrt(len(sums))
    assert abs(est - truncation_tail(f, ChannelParams(gamma, 0.0, 1.0))) < 4 * se


def test_tail_limits():
    f = SensorField(np.zeros((0, 2)), 0.01, 10.0, 0)
    assert truncation_tail(f, ChannelParams(400.0, 0.0, 1.0)) < 1e-300
    g = SensorField(np.zeros((0, 2)), 0.01, 20.0, 0)
    for gamma in (3.0, 4.5):
        ch = ChannelParams(gamma, 0.0, 1.0)
        assert truncation_tail(g, ch) / truncation_tail(f, ch) == pytest.approx(2 ** (2 - gamma))
