"""Per-realisation Fisher information / CRB and its Monte Carlo average."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (DegenerateGeometryError, InsufficientDataError,
                     SingularGeometryError)
from .geometry import Polars, SourceLocation, polar_of, radius_for_count, sample_ppp
from .model import ChannelParams, g_kernel
from .seeding import FIELD, derive_seed

# det(FIM) <= SINGULAR_RTOL * trace(FIM)^2 counts as singular
SINGULAR_RTOL = 1e-14


@dataclass(frozen=True)
class FisherInfo:
    """2x2 Fisher information.

    ``exact`` optionally holds the (xx, xy, yy) sums without the ``rho``
    factor as exact fractions; the determinant of a nearly singular FIM
    cancels badly in floating point, and exact entries keep ``crb`` within
    rounding of the pairwise form.
    """

    matrix: np.ndarray
    exact: tuple = field(default=None, repr=False, compare=False)
    rho: float = 1.0

    def _entries(self):
        if self.exact is not None:
            return self.exact
        m = self.matrix
        return tuple(Fraction(float(v)) for v in (m[0, 0], m[0, 1], m[1, 1]))

    @property
    def trace(self):
        xx, _, yy = self._entries()
        return float(xx + yy) * self.rho

    @property
    def det(self):
        xx, xy, yy = self._entries()
        return float(xx * yy - xy * xy) * self.rho**2

    def crb(self):
        """trace(FIM^-1) = trace / det."""
        xx, xy, yy = self._entries()
        tr, det = xx + yy, xx * yy - xy * xy
        if det <= SINGULAR_RTOL * tr * tr:
            raise SingularGeometryError("Fisher information is singular")
        return float(tr / det) / self.rho


def _as_polars(polars) -> Polars:
    if isinstance(polars, Polars):
        return polars
    return Polars.from_pairs(polars)


def fim(polars, ch: ChannelParams) -> FisherInfo:
    """rho * sum_i g(D_i) [cos^2, sin cos; sin cos, sin^2](phi_i)."""
    p = _as_polars(polars)
    if len(p) == 0:
        raise InsufficientDataError("FIM needs at least one sensor")
    g = np.atleast_1d(g_kernel(p.d, ch))
    c, s = np.cos(p.phi), np.sin(p.phi)
    fr = [(Fraction(float(gi)), Fraction(float(ci)), Fraction(float(si)))
          for gi, ci, si in zip(g, c, s)]
    xx = sum(gi * ci * ci for gi, ci, _ in fr)
    xy = sum(gi * si * ci for gi, ci, si in fr)
    yy = sum(gi * si * si for gi, _, si in fr)
    m = np.array([[float(xx), float(xy)], [float(xy), float(yy)]]) * ch.rho
    return FisherInfo(m, (xx, xy, yy), ch.rho)


def _pairwise_sine_sum(g, phi, chunk=512):
    """sum_{m<j} g_m g_j sin^2(phi_m - phi_j), compensated across rows."""
    order = np.argsort(-g, kind="stable")
    g, phi = g[order], phi[order]
    c, s = np.cos(phi), np.sin(phi)
    rows = []
    for lo in range(0, g.size, chunk):
        hi = min(lo + chunk, g.size)
        sd = s[lo:hi, None] * c[None, :] - c[lo:hi, None] * s[None, :]
        block = (g[lo:hi, None] * g[None, :]) * sd * sd
        block[np.arange(g.size)[None, :] <= np.arange(lo, hi)[:, None]] = 0.0
        rows.append(block.sum(axis=1))
    return math.fsum(np.concatenate(rows)) if rows else 0.0


def crb_realization(polars, ch: ChannelParams) -> float:
    """Cramér-Rao bound on the squared localisation error for a fixed layout.

    Evaluated as (1/rho) sum g / sum_{m<j} g_m g_j sin^2(phi_m - phi_j).
    Raises :class:`SingularGeometryError` when the layout carries no 2-D
    information (one sensor, or all sensors on one line through the source).
    """
    p = _as_polars(polars)
    if len(p) < 2:
        raise SingularGeometryError("need at least two sensors for a 2-D CRB")
    g = np.asarray(g_kernel(p.d, ch), dtype=float)
    num = math.fsum(g)
    den = _pairwise_sine_sum(g, np.asarray(p.phi, dtype=float))
    if den <= SINGULAR_RTOL * num * num:
        raise SingularGeometryError("sensors are collinear with the source")
    return num / (ch.rho * den)


def crb_trace_inverse(polars, ch: ChannelParams) -> float:
    """Same bound through trace(FIM^-1); an independent route for checks."""
    return fim(polars, ch).crb()


@dataclass(frozen=True)
class AvgCrbEstimate:
    mean: float
    std_err: float
    median: float
    trials: int
    sensors_per_trial: int
    excluded: int = 0
    values: tuple = field(default=(), repr=False)

    @property
    def used(self):
        return self.trials - self.excluded

    @property
    def exclusion_warning(self):
        """More than 1% of trials hit singular geometry."""
        return self.excluded > 0.01 * self.trials

    @property
    def top_share(self):
        """Fraction of the summed CRB contributed by the single largest trial."""
        v = np.asarray(self.values)
        return float(v.max() / v.sum()) if v.size else float("nan")

    @property
    def heavy_tail_warning(self):
        return self.top_share > 0.10


def trial_field(lam, sensors_per_trial, master_seed, trial):
    """Sensor field of one Monte Carlo trial, centred on the origin source."""
    radius = radius_for_count(sensors_per_trial, lam)
    return sample_ppp(lam, radius, SourceLocation(0.0, 0.0),
                      derive_seed(master_seed, FIELD, trial))


def trial_crb(lam, ch, sensors_per_trial, master_seed, trial):
    """CRB of one trial, or ``None`` when its geometry is singular."""
    f = trial_field(lam, sensors_per_trial, master_seed, trial)
    try:
        return crb_realization(polar_of(f, (0.0, 0.0)), ch)
    except (SingularGeometryError, DegenerateGeometryError, InsufficientDataError):
        return None


def _trial_range(args):
    lam, ch, spt, seed, lo, hi = args
    return [trial_crb(lam, ch, spt, seed, t) for t in range(lo, hi)]


def summarize(values, trials, sensors_per_trial) -> AvgCrbEstimate:
    kept = np.array([v for v in values if v is not None], dtype=float)
    if kept.size == 0:
        raise SingularGeometryError("every trial had singular geometry")
    std_err = float(kept.std(ddof=1) / math.sqrt(kept.size)) if kept.size > 1 else 0.0
    return AvgCrbEstimate(mean=math.fsum(kept) / kept.size, std_err=std_err,
                          median=float(np.median(kept)), trials=trials,
                          sensors_per_trial=sensors_per_trial,
                          excluded=trials - kept.size, values=tuple(kept))


def avg_crb(lam: float, ch: ChannelParams, trials: int, sensors_per_trial: int,
            master_seed: int, workers: int = 1) -> AvgCrbEstimate:
    """Monte Carlo estimate of the CRB averaged over PPP layouts.

    Trial ``t`` draws its field from ``derive_seed(master_seed, FIELD, t)`` on
    a disc holding ``sensors_per_trial`` points on average; results are
    reduced in trial order, so they do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if sensors_per_trial < 2:
        raise ValueError("sensors_per_trial must be >= 2")
    if workers <= 1:
        values = [trial_crb(lam, ch, sensors_per_trial, master_seed, t)
                  for t in range(trials)]
    else:
        step = max(1, math.ceil(trials / (4 * workers)))
        jobs = [(lam, ch, sensors_per_trial, master_seed, lo, min(lo + step, trials))
                for lo in range(0, trials, step)]
        with ProcessPoolExecutor(workers) as ex:
            values = [v for chunk in ex.map(_trial_range, jobs) for v in chunk]
    return summarize(values, trials, sensors_per_trial)
