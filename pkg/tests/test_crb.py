import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locbound.crb import (avg_crb, crb_realization, crb_trace_inverse, fim, summarize,
                          trial_crb, trial_field)
from locbound.errors import InsufficientDataError, SingularGeometryError
from locbound.geometry import Polar, Polars, polar_of
from locbound.model import ChannelParams, g_kernel

CH = ChannelParams(4.0, 4 * math.pi**2 / 3 * 1e12, 1e5)


def _random_polars(rng, n):
    return Polars(rng.uniform(1.0, 200.0, n), rng.uniform(-math.pi, math.pi, n))


def _brute_fim(polars, ch):
    # outer products of the gradients of (amplitude, delay) w.r.t. source position
    out = np.zeros((2, 2))
    for d, phi in zip(polars.d, polars.phi):
        u = np.array([math.cos(phi), math.sin(phi)])
        out += ch.rho * float(g_kernel(d, ch)) * np.outer(u, u)
    return out


# --- fim --------------------------------------------------------------------------

def test_single_sensor_fim_is_rank_one():
    f = fim([Polar(3.0, 0.4)], CH)
    assert abs(f.det) <= 1e-12 * f.trace**2


def test_orthogonal_unit_sensors_fim():
    f = fim([Polar(1.0, 0.0), Polar(1.0, math.pi / 2)], CH)
    np.testing.assert_allclose(f.matrix, CH.rho * float(g_kernel(1.0, CH)) * np.eye(2),
                               rtol=1e-15, atol=1e-6)


def test_fim_scales_with_rho():
    p = _random_polars(np.random.default_rng(0), 10)
    a = fim(p, CH).matrix
    b = fim(p, CH.with_rho(CH.rho * 7)).matrix
    np.testing.assert_allclose(b, 7 * a, rtol=1e-15)


def test_fim_symmetric_psd_and_brute_force():
    p = _random_polars(np.random.default_rng(1), 25)
    m = fim(p, CH).matrix
    assert m[0, 1] == m[1, 0]
    assert np.all(np.linalg.eigvalsh(m) >= -1e-12 * np.trace(m))
    np.testing.assert_allclose(m, _brute_fim(p, CH), rtol=1e-12)


def test_fim_empty():
    with pytest.raises(InsufficientDataError):
        fim([], CH)


# --- crb_realization ----------------------------------------------------------------

def test_orthogonal_unit_sensors_crb():
    val = crb_realization([Polar(1.0, 0.0), Polar(1.0, math.pi / 2)], CH)
    assert val == pytest.approx(2.0 / (CH.rho * float(g_kernel(1.0, CH))), rel=1e-15)


def test_collinear_singular():
    with pytest.raises(SingularGeometryError):
        crb_realization([Polar(1.0, 0.0), Polar(2.0, math.pi), Polar(5.0, 0.0)], CH)


def test_single_sensor_singular():
    with pytest.raises(SingularGeometryError):
        crb_realization([Polar(1.0, 0.3)], CH)
    with pytest.raises(SingularGeometryError):
        crb_trace_inverse([Polar(1.0, 0.3)], CH)


def test_doubling_rho_halves():
    p = _random_polars(np.random.default_rng(2), 30)
    assert crb_realization(p, CH.with_rho(2 * CH.rho)) == pytest.approx(
        crb_realization(p, CH) / 2, rel=1e-15)


@settings(max_examples=60)
@given(st.integers(3, 50), st.integers(0, 2**32 - 1))
def test_pairwise_matches_trace_inverse(n, seed):
    p = _random_polars(np.random.default_rng(seed), n)
    assert crb_realization(p, CH) == pytest.approx(crb_trace_inverse(p, CH), rel=1e-9)


@settings(max_examples=60)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_adding_sensor_never_increases(n, seed):
    rng = np.random.default_rng(seed)
    p = _random_polars(rng, n + 1)
    small = Polars(p.d[:n], p.phi[:n])
    try:
        before = crb_realization(small, CH)
    except SingularGeometryError:
        return
    assert crb_realization(p, CH) <= before * (1 + 1e-12)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(-math.pi, math.pi))
def test_rotation_invariance(seed, alpha):
    f = trial_field(0.05, 40, seed, 0)
    if len(f) < 3:
        return
    a = crb_realization(polar_of(f, (0.0, 0.0)), CH)
    b = crb_realization(polar_of(f.rotated(alpha), (0.0, 0.0)), CH)
    assert b == pytest.approx(a, rel=1e-9)


@settings(max_examples=40)
@given(st.integers(3, 40), st.integers(0, 2**32 - 1))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    p = _random_polars(rng, n)
    perm = rng.permutation(n)
    q = Polars(p.d[perm], p.phi[perm])
    assert crb_realization(q, CH) == pytest.approx(crb_realization(p, CH), rel=1e-12)


def test_prefactor_law():
    p = _random_polars(np.random.default_rng(3), 40)
    vals = [crb_realization(p, CH.with_rho(k)) * k for k in (1.0, 10.0, 100.0)]
    assert max(vals) / min(vals) - 1 < 1e-12


def test_pairwise_form_on_thousand_sensors():
    f = trial_field(0.01, 1000, 5, 0)
    p = polar_of(f, (0.0, 0.0))
    assert crb_realization(p, CH) == pytest.approx(crb_trace_inverse(p, CH), rel=1e-9)


# --- avg_crb ----------------------------------------------------------------------

def test_single_trial_equals_realization():
    est = avg_crb(0.01, CH, 1, 200, master_seed=11)
    direct = crb_realization(polar_of(trial_field(0.01, 200, 11, 0), (0.0, 0.0)), CH)
    assert est.mean == direct
    assert est.median == direct
    assert est.std_err == 0.0
    assert est.trials == 1


def test_avg_crb_deterministic_and_worker_invariant():
    a = avg_crb(0.01, CH, 12, 100, master_seed=4)
    b = avg_crb(0.01, CH, 12, 100, master_seed=4, workers=3)
    assert a == b
    assert a.values == b.values


def test_std_err_clt_scaling():
    a = avg_crb(0.01, CH, 100, 50, master_seed=8)
    b = avg_crb(0.01, CH, 400, 50, master_seed=8)
    # the mean may be heavy tailed; compare spread of log-CRB, which is not
    la, lb = np.log(a.values), np.log(b.values)
    ratio = (la.std(ddof=1) / math.sqrt(la.size)) / (lb.std(ddof=1) / math.sqrt(lb.size))
    assert ratio == pytest.approx(2.0, rel=0.2)
    assert b.std_err > 0 and a.std_err > 0


def test_summarize_excludes_and_flags():
    est = summarize([1.0, None, 3.0], 3, 10)
    assert est.excluded == 1 and est.used == 2
    assert est.mean == 2.0
    assert est.exclusion_warning
    assert est.top_share == 0.75 and est.heavy_tail_warning


def test_summarize_all_singular():
    with pytest.raises(SingularGeometryError):
        summarize([None, None], 2, 10)


def test_trial_crb_returns_none_for_tiny_field():
    # about 0.5 expected sensors: some trials have < 2 and must be excluded, not raise
    vals = [trial_crb(0.01, CH, 2, 0, t) for t in range(20)]
    assert any(v is None for v in vals)


@pytest.mark.parametrize("kw", [{"trials": 0}, {"sensors_per_trial": 1}])
def test_avg_crb_preconditions(kw):
    args = dict(trials=2, sensors_per_trial=10)
    args.update(kw)
    with pytest.raises(ValueError):
        avg_crb(0.01, CH, master_seed=0, **args)
