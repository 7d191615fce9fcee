"""Monte Carlo maximum-likelihood localisation over Poisson sensor fields.

Each sensor's sufficient statistic is the correlator

    y_m(theta') = int s(t - tau'_m) dR_m(t)
                = D_m^(-gamma/2) C(tau'_m - tau_m) + n_m(tau'_m),

with C the pulse autocorrelation and n_m a Gaussian process of covariance
(N0 / 2) C(tau - tau').  Writing s(t - tau) = A (1 - cos w t cos w tau
- sin w t sin w tau) on [tau, tau + T] gives the exact representation

    n(tau) = A [dB_1 - cos(w tau) dB_c - sin(w tau) dB_s],
    dB     = B(tau + T) - B(tau),  B(u) = int^u (1, cos w t, sin w t) dW(t),

where B has independent Gaussian increments with closed-form 3x3
covariances.  Sampling B at the window end points (and by Gaussian bridges
at points added later by the grid refinement) is exact in distribution, so
no time discretisation is involved.
"""
from __future__ import annotations

import copy
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import crb_lb, narrowband_bound, wideband_bound
from .crb import avg_crb, trial_crb, trial_field
from .errors import DomainError, InsufficientDataError
from .geometry import SensorField, SourceLocation
from .model import ChannelParams, Pulse, effective_bandwidth, pulse_autocorr, snr_from_db
from .seeding import NOISE, check_seed, derive_seed, generator

# ridge added to bridge covariances, relative to their trace
_BRIDGE_RCOND = 1e-13
_SERIES_CUTOFF = 0.5


# ---------------------------------------------------------------------------
# Window-integral noise process
# ---------------------------------------------------------------------------

def _poly(x, coefs, lead):
    x = np.asarray(x, dtype=float)
    x2 = x * x
    acc = np.zeros_like(x)
    for c in reversed(coefs):
        acc = acc * x2 + c
    return acc * x**lead


def _sin_var(x):
    """(x - sin x) / 2, the local sine-component variance times w."""
    out = _poly(x, [1 / 12, -1 / 240, 1 / 10080, -1 / 725760, 1 / 79833600,
                    -1 / 12454041600], 3)
    big = x >= _SERIES_CUTOFF
    if np.any(big):
        xb = x[big]
        out[big] = 0.5 * (xb - np.sin(xb))
    return out


def _cos_schur(x):
    """x/2 + sin(x)/2 - 4 sin^2(x/2)/x, the cosine Schur complement times w."""
    out = _poly(x, [1 / 720, -1 / 20160, 1 / 1209600, -1 / 119750400,
                    1 / 17435658240], 5)
    big = x >= _SERIES_CUTOFF
    if np.any(big):
        xb = x[big]
        out[big] = 0.5 * xb + 0.5 * np.sin(xb) - 4.0 * np.sin(0.5 * xb) ** 2 / xb
    return out


def _increments(a, b, omega, z):
    """Exact draws of B(b) - B(a) from standard normals ``z`` (last axis 3).

    Sampled in the basis (1, cos w(t - m), sin w(t - m)) centred on the
    interval midpoint m, where the sine component is independent of the
    other two, then rotated back to (1, cos w t, sin w t).
    """
    h = np.maximum(b - a, 0.0)
    m = 0.5 * (a + b)
    x = omega * h
    sh = np.sqrt(h)
    with np.errstate(divide="ignore", invalid="ignore"):
        c12 = np.where(h > 0, 2.0 * np.sin(0.5 * x) / (omega * sh), 0.0)
    x1 = sh * z[..., 0]
    xc = c12 * z[..., 0] + np.sqrt(np.maximum(_cos_schur(x), 0.0) / omega) * z[..., 1]
    xs = np.sqrt(np.maximum(_sin_var(x), 0.0) / omega) * z[..., 2]
    cm, sm = np.cos(omega * m), np.sin(omega * m)
    return np.stack([x1, cm * xc - sm * xs, sm * xc + cm * xs], axis=-1)


def _increment_cov(a, b, omega):
    """Covariance of B(b) - B(a) (unit white-noise density), shape (..., 3, 3)."""
    h = np.maximum(b - a, 0.0)
    m = 0.5 * (a + b)
    x = omega * h
    c12 = 2.0 * np.sin(0.5 * x) / omega
    c22 = 0.5 * h + 0.5 * np.sin(x) / omega
    c33 = _sin_var(x) / omega
    cm, sm = np.cos(omega * m), np.sin(omega * m)
    out = np.empty(h.shape + (3, 3))
    out[..., 0, 0] = h
    out[..., 0, 1] = out[..., 1, 0] = cm * c12
    out[..., 0, 2] = out[..., 2, 0] = sm * c12
    out[..., 1, 1] = cm * cm * c22 + sm * sm * c33
    out[..., 2, 2] = sm * sm * c22 + cm * cm * c33
    out[..., 1, 2] = out[..., 2, 1] = cm * sm * (c22 - c33)
    return out


def _ridge_solve(S, r):
    """S^-1 r with a ridge of _BRIDGE_RCOND * trace(S); S is PSD (..., 3, 3)."""
    tr = np.einsum("...ii->...", S)
    eps = _BRIDGE_RCOND * tr + 1e-300
    reg = S + eps[..., None, None] * np.eye(3)
    return np.linalg.solve(reg, r[..., None])[..., 0]


class DelayNoise:
    """Correlator noise of every sensor in one trial, in units of A sqrt(N0 / 2).

    ``delta`` is the candidate delay relative to the sensor's true delay.
    Values are drawn lazily: each call to :meth:`sample` conditions on all
    earlier draws, so the process stays consistent across refinement stages.
    ``lo`` / ``hi`` bound every delay window end point that will be asked for.
    """

    def __init__(self, lo, hi, t_dur, rngs):
        self.t_dur = t_dur
        self.omega = 2.0 * math.pi / t_dur
        self.rngs = list(rngs)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.u = self.b = None          # knots of the first batch
        self.uf = self.bf = None        # knots added later, kept sorted

    def _normals(self, n, k):
        return np.stack([g.standard_normal((n, k)) for g in self.rngs])

    def _bridge(self, u, a, ba, bnd, bb, z):
        """B(u) given B(a) = ba and B(bnd) = bb, for a <= u <= bnd."""
        x0 = _increments(a, u, self.omega, z[:, :3])
        y0 = _increments(u, bnd, self.omega, z[:, 3:])
        s1 = _increment_cov(a, u, self.omega)
        s = s1 + _increment_cov(u, bnd, self.omega)
        gain = _ridge_solve(s, bb - ba - x0 - y0)
        return ba + x0 + np.einsum("...ij,...j->...i", s1, gain)

    def _insert(self, pts):
        """B at ``pts`` (rows x q) conditioned on the stored values; then store them."""
        rows, q = pts.shape
        order = np.argsort(pts, axis=1, kind="stable")
        sp = np.take_along_axis(pts, order, axis=1)
        sp = np.clip(sp, self.lo[:, None], self.hi[:, None])
        if self.u is None:
            out = self._first(sp)
        else:
            out = self._bridged(sp)
        back = np.empty_like(order)
        np.put_along_axis(back, order, np.arange(q)[None, :], axis=1)
        return np.take_along_axis(out, back[:, :, None], axis=1)

    def _first(self, sp):
        """Forward draw from B(lo) = 0 through the sorted points to B(hi)."""
        knots = np.concatenate([self.lo[:, None], sp, self.hi[:, None]], axis=1)
        z = self._normals(knots.shape[1] - 1, 3)
        inc = _increments(knots[:, :-1], knots[:, 1:], self.omega, z)
        b = np.concatenate([np.zeros((knots.shape[0], 1, 3)), np.cumsum(inc, axis=1)], axis=1)
        self.u, self.b = knots, b
        self.uf = np.zeros((knots.shape[0], 0))
        self.bf = np.zeros((knots.shape[0], 0, 3))
        return b[:, 1:-1]

    def _bridged(self, sp):
        rows, q = sp.shape
        ridx = np.arange(rows)
        pos = np.stack([np.searchsorted(self.u[r], sp[r], side="right") for r in range(rows)])
        pos = np.clip(pos, 1, self.u.shape[1] - 1)
        nf = self.uf.shape[1]
        z = self._normals(q, 6)
        out = np.empty((rows, q, 3))
        for j in range(q):
            u = sp[:, j]
            a = self.u[ridx, pos[:, j] - 1]
            ba = self.b[ridx, pos[:, j] - 1]
            bnd = self.u[ridx, pos[:, j]]
            bb = self.b[ridx, pos[:, j]]
            if nf:
                k = np.count_nonzero(self.uf <= u[:, None], axis=1)
                kl = np.maximum(k - 1, 0)
                left = (k > 0) & (self.uf[ridx, kl] >= a)
                a = np.where(left, self.uf[ridx, kl], a)
                ba = np.where(left[:, None], self.bf[ridx, kl], ba)
                kr = np.minimum(k, nf - 1)
                right = (k < nf) & (self.uf[ridx, kr] <= bnd)
                bnd = np.where(right, self.uf[ridx, kr], bnd)
                bb = np.where(right[:, None], self.bf[ridx, kr], bb)
            if j:
                # earlier points of this batch lie to the left
                newer = sp[:, j - 1] >= a
                a = np.where(newer, sp[:, j - 1], a)
                ba = np.where(newer[:, None], out[:, j - 1], ba)
            out[:, j] = self._bridge(u, a, ba, bnd, bb, z[:, j])
        u_all = np.concatenate([self.uf, sp], axis=1)
        b_all = np.concatenate([self.bf, out], axis=1)
        merge = np.argsort(u_all, axis=1, kind="stable")
        self.uf = np.take_along_axis(u_all, merge, axis=1)
        self.bf = np.take_along_axis(b_all, merge[:, :, None], axis=1)
        return out

    def sample(self, delta):
        """Unit-gain noise at relative delays ``delta`` (sensors x candidates)."""
        delta = np.asarray(delta, dtype=float)
        n = delta.shape[1]
        bvals = self._insert(np.concatenate([delta, delta + self.t_dur], axis=1))
        db = bvals[:, n:] - bvals[:, :n]
        wd = self.omega * delta
        return (db[..., 0] - np.cos(wd) * db[..., 1] - np.sin(wd) * db[..., 2])


# ---------------------------------------------------------------------------
# Sufficient statistics and likelihood
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SufficientStats:
    """Correlator outputs ``y`` (sensors x candidates) for ``candidates`` (n x 2)."""

    candidates: np.ndarray
    y: np.ndarray

    def index_of(self, theta) -> int:
        hit = np.flatnonzero((self.candidates[:, 0] == theta[0])
                             & (self.candidates[:, 1] == theta[1]))
        if hit.size == 0:
            raise LookupError(f"{tuple(theta)} is not among the candidates")
        return int(hit[0])


def _check_field(field: SensorField):
    if len(field) == 0:
        raise InsufficientDataError("sensor field is empty")


def _distances(points, cand):
    return np.hypot(cand[None, :, 0] - points[:, 0:1], cand[None, :, 1] - points[:, 1:2])


def _delay_range(points, d_true, src, half, c, t_dur):
    """Relative-delay interval covering windows of every candidate in the square."""
    dx = np.maximum(np.abs(points[:, 0] - src.x) - half, 0.0)
    dy = np.maximum(np.abs(points[:, 1] - src.y) - half, 0.0)
    near = np.hypot(dx, dy)
    far = np.hypot(np.abs(points[:, 0] - src.x) + half, np.abs(points[:, 1] - src.y) + half)
    pad = 0.01 * t_dur
    return (near - d_true) / c - pad, (far - d_true) / c + t_dur + pad


def _noise_gain(pulse, noise_scale):
    return pulse.amplitude * math.sqrt(0.5 * pulse.n0) * noise_scale


class _Correlators:
    """Lazily evaluated correlator outputs for one trial.

    Calls return distances, the noiseless signal part and the unit-gain
    noise (``None`` when noiseless), so several noise levels can share draws.
    """

    def __init__(self, field, src, pulse, ch, seed, half, noisy=True):
        _check_field(field)
        self.pts = field.points
        self.src = SourceLocation(*map(float, src)).check()
        self.pulse, self.ch = pulse, ch
        self.d_true = np.hypot(self.pts[:, 0] - self.src.x, self.pts[:, 1] - self.src.y)
        self.amp_true = self.d_true ** (-0.5 * ch.gamma)
        self.noise = None
        if noisy:
            lo, hi = _delay_range(self.pts, self.d_true, self.src, half, ch.c, pulse.t_dur)
            rngs = [generator(seed, m) for m in range(len(self.pts))]
            self.noise = DelayNoise(lo, hi, pulse.t_dur, rngs)

    def __call__(self, cand):
        d = _distances(self.pts, cand)
        delta = (d - self.d_true[:, None]) / self.ch.c
        sig = self.amp_true[:, None] * pulse_autocorr(delta, self.pulse)
        unit = None if self.noise is None else self.noise.sample(delta)
        return d, sig, unit

    def fork(self):
        """Independent copy whose future draws equal those of the original."""
        twin = copy.copy(self)
        twin.noise = copy.deepcopy(self.noise)
        return twin


def _observe(sig, unit, gain):
    return sig if unit is None else sig + gain * unit


def sufficient_stats(field: SensorField, src, candidates, pulse: Pulse, ch: ChannelParams,
                     seed: int, noise_scale: float = 1.0) -> SufficientStats:
    """Correlator outputs of every sensor at every candidate location.

    The noise is drawn jointly over all candidates from the exact window
    representation; ``noise_scale=0`` gives the noiseless statistics.
    """
    cand = np.asarray(candidates, dtype=float).reshape(-1, 2)
    if cand.shape[0] == 0:
        raise InsufficientDataError("no candidates")
    src = SourceLocation(*map(float, src))
    half = float(np.max(np.abs(cand - np.array(src)))) if cand.size else 0.0
    corr = _Correlators(field, src, pulse, ch, check_seed(seed), half, noise_scale != 0)
    _, sig, unit = corr(cand)
    return SufficientStats(cand.copy(), _observe(sig, unit, _noise_gain(pulse, noise_scale)))


def _loglik(d, y, pulse, ch):
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = d ** (-0.5 * ch.gamma)
        terms = 2.0 * amp * y - amp * amp * pulse.es
    ll = terms.sum(axis=0) / pulse.n0
    return np.where(np.all(d > 0, axis=0), ll, -np.inf)


def log_likelihood(theta, stats: SufficientStats, field: SensorField, pulse: Pulse,
                   ch: ChannelParams) -> float:
    """(1/N0) sum_m [2 D_m(theta)^(-gamma/2) y_m(theta) - D_m(theta)^(-gamma) E_s].

    ``-inf`` when ``theta`` coincides with a sensor.
    """
    k = stats.index_of(theta)
    d = _distances(field.points, stats.candidates[k:k + 1])
    return float(_loglik(d, stats.y[:, k:k + 1], pulse, ch)[0])


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Coarse square grid (``half_width``, ``step``) plus ``refine`` halvings."""

    half_width: float = 30.0
    step: float = 2.0
    refine: int = 6

    def __post_init__(self):
        if not (self.half_width > self.step > 0):
            raise DomainError("grid needs half_width > step > 0")
        if not (isinstance(self.refine, (int, np.integer)) and 0 <= self.refine <= 40):
            raise DomainError("grid refine must be an integer in [0, 40]")

    @property
    def unit(self):
        """Final resolution: the coarse step halved ``refine`` times."""
        return self.step / 2**self.refine

    @property
    def coarse_count(self):
        return int(math.floor(self.half_width / self.step + 1e-9))


def _search(field, src, variants, grid: GridSpec, seed, noise_scale):
    """ML estimates for several (pulse, ch) pairs differing only in noise level.

    The coarse stage is evaluated once; each variant then refines on its
    own fork of the noise process, which gives exactly the result of a
    separate search.
    """
    src = SourceLocation(*map(float, src)).check()
    pulse0, ch0 = variants[0]
    for p, c in variants[1:]:
        if (p.t_dur, p.es, c.gamma, c.c) != (pulse0.t_dur, pulse0.es, ch0.gamma, ch0.c):
            raise DomainError("variants may differ only in noise level")
    k = grid.coarse_count
    scale = 2**grid.refine
    bound = (k + 1) * scale
    corr = _Correlators(field, src, pulse0, ch0, seed, (k + 1) * grid.step, noise_scale != 0)

    def square(center, step, n):
        off = step * np.arange(-n, n + 1)
        iy, ix = np.meshgrid(center[1] + off, center[0] + off, indexing="ij")
        pts = np.column_stack([ix.ravel(), iy.ravel()])
        return np.clip(pts, -bound, bound)

    def evaluate(idx, corr, caches):
        todo = [t for t in dict.fromkeys(map(tuple, idx.tolist())) if t not in caches[0]]
        if todo:
            arr = np.array(todo, dtype=float)
            cand = np.column_stack([src.x + grid.unit * arr[:, 0], src.y + grid.unit * arr[:, 1]])
            d, sig, unit = corr(cand)
            for (p, c), cache in zip(vs, caches):
                ll = _loglik(d, _observe(sig, unit, _noise_gain(p, noise_scale)), p, c)
                cache.update(zip(todo, ll))
        return [np.array([cache[tuple(t)] for t in idx.tolist()]) for cache in caches]

    vs = variants
    caches = [{} for _ in variants]
    idx = square(np.array([0, 0]), scale, k)
    coarse = evaluate(idx, corr, caches)
    out = []
    for i, v in enumerate(variants):
        vs = [v]
        own = corr if i == len(variants) - 1 else corr.fork()
        best = idx[int(np.argmax(coarse[i]))]
        for r in range(1, grid.refine + 1):
            cand = square(best, scale >> r, 2)
            best = cand[int(np.argmax(evaluate(cand, own, [caches[i]])[0]))]
        out.append(SourceLocation(src.x + grid.unit * float(best[0]),
                                  src.y + grid.unit * float(best[1])))
    return out


def ml_estimate(field: SensorField, src, pulse: Pulse, ch: ChannelParams,
                grid: GridSpec = GridSpec(), seed: int = 0,
                noise_scale: float = 1.0) -> SourceLocation:
    """Grid-search ML location estimate.

    A square of offsets ``step * (-k..k)`` (``k = floor(half_width / step)``)
    around the true source is searched first; each refinement halves the
    step and searches the 5 x 5 grid around the current best, clamped to
    the coarse square widened by one step.  Ties go to the lowest
    row-major index (y outer, x inner).  All candidates lie on a lattice of
    pitch ``grid.unit``, and the noise process is shared by all stages.
    """
    return _search(field, src, [(pulse, ch)], grid, check_seed(seed), noise_scale)[0]


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_PARAMS = ("snr_db", "gamma", "lambda", "t_dur")


@dataclass(frozen=True)
class MlSimConfig:
    ch: ChannelParams
    pulse: Pulse
    lam: float
    sensors_per_trial: int
    trials: int
    grid: GridSpec = GridSpec()
    master_seed: int = 0
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if self.sensors_per_trial < 2:
            raise DomainError("sensors_per_trial must be >= 2")
        if not self.lam > 0:
            raise DomainError("lambda must be > 0")
        check_seed(self.master_seed)
        rho = self.pulse.es / (2.0 * self.pulse.n0)
        if not (math.isclose(self.ch.we, effective_bandwidth(self.pulse), rel_tol=1e-12)
                and math.isclose(self.ch.rho, rho, rel_tol=1e-12)):
            raise DomainError("channel parameters do not match the pulse")

    @classmethod
    def build(cls, gamma=4.0, snr_db=50.0, t_dur=1e-6, lam=0.01, sensors_per_trial=1000,
              trials=100, grid=GridSpec(), master_seed=0, c=3e8, noise_scale=1.0):
        pulse = Pulse.from_snr(t_dur, snr_from_db(snr_db))
        return cls(ChannelParams.from_pulse(gamma, pulse, c), pulse, lam,
                   sensors_per_trial, trials, grid, master_seed, noise_scale)

    def with_param(self, name, value):
        """Copy with one swept parameter replaced."""
        if name == "lambda":
            return replace(self, lam=float(value))
        if name == "gamma":
            return replace(self, ch=ChannelParams(float(value), self.ch.we, self.ch.rho, self.ch.c))
        if name == "snr_db":
            pulse = Pulse.from_snr(self.pulse.t_dur, snr_from_db(value), self.pulse.es)
            return replace(self, pulse=pulse, ch=self.ch.with_rho(pulse.es / (2 * pulse.n0)))
        if name == "t_dur":
            pulse = Pulse(float(value), self.pulse.es, self.pulse.n0)
            return replace(self, pulse=pulse,
                           ch=ChannelParams.from_pulse(self.ch.gamma, pulse, self.ch.c))
        raise DomainError(f"unknown sweep parameter {name!r}; expected one of {SWEEP_PARAMS}")


@dataclass(frozen=True)
class Sweep:
    param: str
    values: tuple

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise DomainError(f"unknown sweep parameter {self.param!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise DomainError("sweep needs at least one value")


@dataclass(frozen=True)
class MseCurve:
    param: str
    values: tuple
    mse: tuple
    std_err: tuple
    avg_crb: tuple
    avg_crb_stderr: tuple
    avg_crb_median: tuple
    crb_lb: tuple
    crb_lb_w: tuple
    crb_lb_n: tuple
    excluded: tuple
    sq_errors: tuple = field(default=(), repr=False)

    def ratio(self):
        """MSE / averaged CRB per sweep point."""
        return tuple(m / a for m, a in zip(self.mse, self.avg_crb))


def trial_sq_error(cfg: MlSimConfig, trial: int):
    """Squared ML error of one trial, or ``None`` when the trial is excluded.

    Fields are the ones :func:`locbound.crb.avg_crb` draws for the same
    master seed; the noise uses ``derive_seed(master_seed, NOISE, trial)``.
    """
    return trial_sq_errors([cfg], trial)[0]


def _noise_level_only(cfgs):
    c0 = cfgs[0]
    key = lambda c: (c.lam, c.sensors_per_trial, c.grid, c.master_seed, c.noise_scale,
                     c.pulse.t_dur, c.pulse.es, c.ch.gamma, c.ch.c)
    return all(key(c) == key(c0) for c in cfgs)


def trial_sq_errors(cfgs, trial: int):
    """Squared errors of one trial under several configurations.

    Configurations that differ only in noise level share one coarse search
    (see :func:`_search`); the values equal those of separate runs.
    """
    if not _noise_level_only(cfgs):
        return [trial_sq_errors([c], trial)[0] for c in cfgs]
    c0 = cfgs[0]
    keep = [trial_crb(c.lam, c.ch, c.sensors_per_trial, c.master_seed, trial) is not None
            for c in cfgs]
    out = [None] * len(cfgs)
    live = [c for c, k in zip(cfgs, keep) if k]
    if live:
        f = trial_field(c0.lam, c0.sensors_per_trial, c0.master_seed, trial)
        est = _search(f, (0.0, 0.0), [(c.pulse, c.ch) for c in live], c0.grid,
                      derive_seed(c0.master_seed, NOISE, trial), c0.noise_scale)
        it = iter(est)
        for i, k in enumerate(keep):
            if k:
                e = next(it)
                out[i] = e.x * e.x + e.y * e.y
    return out


def _trial_job(args):
    cfgs, lo, hi = args
    return [trial_sq_errors(cfgs, t) for t in range(lo, hi)]


def _run_trials(cfgs, workers):
    """errs[i][t] for configuration i and trial t, independent of ``workers``."""
    trials = cfgs[0].trials
    if workers <= 1:
        rows = [trial_sq_errors(cfgs, t) for t in range(trials)]
    else:
        step = max(1, math.ceil(trials / (4 * workers)))
        jobs = [(cfgs, lo, min(lo + step, trials)) for lo in range(0, trials, step)]
        with ProcessPoolExecutor(workers) as ex:
            rows = [r for chunk in ex.map(_trial_job, jobs) for r in chunk]
    return [list(col) for col in zip(*rows)]


def run_mse(cfg: MlSimConfig, sweep: Sweep, workers: int = 1) -> MseCurve:
    """ML MSE, averaged CRB and bounds at every sweep point.

    Every point reuses the same trial fields and noise seeds, so
    neighbouring points differ only through the swept parameter.
    Results do not depend on ``workers``.
    """
    cfgs = [cfg.with_param(sweep.param, v) for v in sweep.values]
    errs = _run_trials(cfgs, workers)
    cols = {k: [] for k in ("mse", "se", "avg", "avg_se", "avg_med", "lb", "lbw", "lbn", "exc")}
    kept_all = []
    for c, e in zip(cfgs, errs):
        kept = np.array([v for v in e if v is not None], dtype=float)
        if kept.size == 0:
            raise InsufficientDataError("every trial was excluded")
        kept_all.append(tuple(kept))
        cols["mse"].append(math.fsum(kept) / kept.size)
        cols["se"].append(float(kept.std(ddof=1) / math.sqrt(kept.size)) if kept.size > 1 else 0.0)
        a = avg_crb(c.lam, c.ch, c.trials, c.sensors_per_trial, c.master_seed)
        cols["avg"].append(a.mean)
        cols["avg_se"].append(a.std_err)
        cols["avg_med"].append(a.median)
        cols["lb"].append(crb_lb(c.lam, c.ch))
        cols["lbw"].append(wideband_bound(c.lam, c.ch) if c.ch.we > 0 else math.inf)
        cols["lbn"].append(narrowband_bound(c.lam, c.ch))
        cols["exc"].append(len(e) - kept.size)
    return MseCurve(sweep.param, sweep.values, tuple(cols["mse"]), tuple(cols["se"]),
                    tuple(cols["avg"]), tuple(cols["avg_se"]), tuple(cols["avg_med"]),
                    tuple(cols["lb"]), tuple(cols["lbw"]), tuple(cols["lbn"]),
                    tuple(cols["exc"]), tuple(kept_all))
