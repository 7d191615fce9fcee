"""Density-level lower bound on the averaged CRB and its closed-form limits.

The bound is

    CRB_LB = (4 / rho) * int_0^inf exp(-2 pi lambda Z(s)) ds,
    Z(s)   = int_0^inf (1 - exp(-s g(r))) r dr,

where exp(-2 pi lambda Z(s)) is the Laplace transform of the shot-noise sum
G = sum_m g(D_m) over the sensor process.  Both integrals are done with the
semi-infinite Gauss-Kronrod machinery of :mod:`locbound.numerics`; every
inner integral is rescaled to its own characteristic radius so that all
values of ``s`` share one adaptive partition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import ChannelParams, KernelMode, g_kernel
from .numerics import (QuadratureSpec, integrate_unit_batch, log_gamma,
                       semi_infinite_map)

__all__ = [
    "BoundResult", "SandwichReport", "z_of_s", "z_closed_form", "crb_lb",
    "crb_lb_with_error", "wideband_bound", "narrowband_bound",
    "narrowband_gap_bound", "sandwich_factor", "sandwich_check",
    "evaluate_bounds", "OracleCheck", "oracle_suite",
]

_TWO_PI = 2.0 * math.pi
# exp(-x) below this is exactly 0 in double precision
_EXP_UNDERFLOW = 745.0


def _check_mode(ch: ChannelParams, mode) -> KernelMode:
    mode = KernelMode(mode)
    if mode is KernelMode.TOA_ONLY and ch.we == 0:
        raise DomainError("delay-only kernel is identically zero when we = 0")
    return mode


def _toa_coef(ch):
    return 4.0 * ch.we / ch.c**2


def z_closed_form(s, ch: ChannelParams, mode):
    """Z(s) for the single-term kernels, where it is a pure power of s.

    Amplitude only:  Z = Gamma(gamma/(gamma+2)) (s gamma^2)^(2/(gamma+2)) / 2.
    Delay only:      Z = Gamma(1 - 2/gamma) (4 s we / c^2)^(2/gamma) / 2.
    """
    mode = _check_mode(ch, mode)
    s = np.asarray(s, dtype=float)
    g = ch.gamma
    if mode is KernelMode.RSS_ONLY:
        out = 0.5 * math.exp(log_gamma(g / (g + 2.0))) * (s * g * g) ** (2.0 / (g + 2.0))
    elif mode is KernelMode.TOA_ONLY:
        out = 0.5 * math.exp(log_gamma(1.0 - 2.0 / g)) * (s * _toa_coef(ch)) ** (2.0 / g)
    else:
        raise DomainError("the full kernel has no closed-form Z")
    return float(out) if out.ndim == 0 else out


def _z_lower(s, ch, mode):
    """A closed-form lower bound on Z(s) (Z is monotone in the kernel)."""
    if mode is not KernelMode.FULL:
        return z_closed_form(s, ch, mode)
    low = z_closed_form(s, ch, KernelMode.RSS_ONLY)
    if ch.we > 0:
        low = np.maximum(low, z_closed_form(s, ch, KernelMode.TOA_ONLY))
    return low


def _radius_scale(s, ch, mode):
    """Radius where s g(r) = 1 for the dominant kernel term."""
    g = ch.gamma
    r_rss = (s * g * g) ** (1.0 / (g + 2.0))
    if mode is KernelMode.RSS_ONLY:
        return r_rss
    r_toa = (s * _toa_coef(ch)) ** (1.0 / g)
    if mode is KernelMode.TOA_ONLY:
        return r_toa
    return np.maximum(r_rss, r_toa)


def _z_batch(s, ch, mode, spec):
    """Z at every entry of the 1-D array ``s`` (all > 0) plus error estimates."""
    if s.size == 0:
        return np.zeros(0), np.zeros(0)
    L = _radius_scale(s, ch, mode)[:, None]
    sc = s[:, None]

    def integrand(w):
        x0, j0, x1, j1 = semi_infinite_map(w)
        total = 0.0
        with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
            for x, j in ((x0, j0), (x1, j1)):
                r = L * x[None, :]
                part = -np.expm1(-sc * g_kernel_unchecked(r, ch, mode)) * r * (L * j[None, :])
                total = total + np.where(np.isfinite(part), part, 0.0)
        return total

    return integrate_unit_batch(integrand, spec)


def g_kernel_unchecked(r, ch, mode):
    # g_kernel without the d > 0 check; r = 0 and r = inf occur at mapped end points
    g = ch.gamma
    if mode is KernelMode.RSS_ONLY:
        return g * g * r ** (-g - 2.0)
    if mode is KernelMode.TOA_ONLY:
        return _toa_coef(ch) * r ** (-g)
    return r ** (-g - 2.0) * (g * g + _toa_coef(ch) * r * r)


def z_of_s(s, ch: ChannelParams, spec: QuadratureSpec = QuadratureSpec(),
           mode=KernelMode.FULL, return_error=False):
    """Z(s) = int_0^inf (1 - exp(-s g(r))) r dr by quadrature (scalar or array s)."""
    mode = _check_mode(ch, mode)
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(~(arr >= 0)):
        raise DomainError("z_of_s needs s >= 0")
    val = np.zeros(arr.shape)
    err = np.zeros(arr.shape)
    pos = arr > 0
    if pos.any():
        val[pos], err[pos] = _z_batch(arr[pos], ch, mode, spec)
    if np.ndim(s) == 0:
        val, err = float(val[0]), float(err[0])
    return (val, err) if return_error else val


def _outer_scale(lam, ch, mode):
    """s at which the closed-form lower bound on 2 pi lambda Z(s) reaches 1."""
    g = ch.gamma
    scales = []
    if mode is not KernelMode.TOA_ONLY:
        gam = math.exp(log_gamma(g / (g + 2.0)))
        scales.append((math.pi * lam * gam) ** (-(g + 2.0) / 2.0) / (g * g))
    if mode is not KernelMode.RSS_ONLY and ch.we > 0:
        gam = math.exp(log_gamma(1.0 - 2.0 / g))
        scales.append((math.pi * lam * gam) ** (-g / 2.0) / _toa_coef(ch))
    return min(scales)


def crb_lb_with_error(lam: float, ch: ChannelParams,
                      spec: QuadratureSpec = QuadratureSpec(), mode=KernelMode.FULL):
    """CRB_LB and an error estimate (outer quadrature plus propagated inner error).

    The inner integrals run ten times tighter than ``spec``.
    """
    mode = _check_mode(ch, mode)
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    inner = spec.tighter(10.0)
    S = _outer_scale(lam, ch, mode)
    k = _TWO_PI * lam

    def integrand(w):
        x0, j0, x1, j1 = semi_infinite_map(w, S)
        s = np.concatenate([x0, x1])
        jac = np.concatenate([j0, j1])
        h = np.zeros(s.shape)
        dh = np.zeros(s.shape)
        with np.errstate(over="ignore"):
            live = np.isfinite(s) & (k * _z_lower(np.where(np.isfinite(s), s, 0.0), ch, mode)
                                     < _EXP_UNDERFLOW)
        live &= s > 0
        z, ez = _z_batch(s[live], ch, mode, inner)
        h[live] = np.exp(-k * z)
        dh[live] = h[live] * k * ez
        h[s == 0] = 1.0
        with np.errstate(invalid="ignore", over="ignore"):
            vals = np.where(h > 0, h * jac, 0.0)
            errs = np.where(dh > 0, dh * jac, 0.0)
        n = w.size
        return np.stack([vals[:n] + vals[n:], errs[:n] + errs[n:]])

    (total, prop), (err, _) = integrate_unit_batch(integrand, spec, n_drive=1)
    pref = 4.0 / ch.rho
    return pref * float(total), pref * (float(err) + float(prop))


def crb_lb(lam: float, ch: ChannelParams, spec: QuadratureSpec = QuadratureSpec(),
           mode=KernelMode.FULL) -> float:
    """(4 / rho) int_0^inf exp(-2 pi lambda Z(s)) ds by nested quadrature."""
    return crb_lb_with_error(lam, ch, spec, mode)[0]


def wideband_bound(lam: float, ch: ChannelParams) -> float:
    """Delay-only limit:
    c^2 (pi lambda)^(-gamma/2) Gamma(1 - 2/gamma)^(-gamma/2) Gamma(1 + gamma/2) / (rho we)."""
    if ch.we == 0:
        raise DomainError("wideband bound diverges at we = 0")
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    g = ch.gamma
    log_val = (2.0 * math.log(ch.c) - 0.5 * g * math.log(math.pi * lam)
               - 0.5 * g * log_gamma(1.0 - 2.0 / g) + log_gamma(1.0 + 0.5 * g)
               - math.log(ch.rho) - math.log(ch.we))
    return math.exp(log_val)


def narrowband_bound(lam: float, ch: ChannelParams) -> float:
    """Amplitude-only limit:
    4 / (rho gamma^2) (pi lambda Gamma(gamma/(gamma+2)))^(-gamma/2 - 1) Gamma(2 + gamma/2)."""
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    g = ch.gamma
    log_val = (math.log(4.0) - math.log(ch.rho) - 2.0 * math.log(g)
               - (0.5 * g + 1.0) * (math.log(math.pi * lam) + log_gamma(g / (g + 2.0)))
               + log_gamma(2.0 + 0.5 * g))
    return math.exp(log_val)


def narrowband_gap_bound(lam: float, ch: ChannelParams) -> float:
    """Explicit O(we) bound on |CRB_LB,N - CRB_LB|.

    Bounding Z(s) above by V(s) + Q(s), with V the amplitude-only Z and
    Q(s) = 4 s we (s gamma^2)^(-(gamma-2)/(gamma+2)) Gamma((gamma-2)/(gamma+2))
           / (c^2 (gamma + 2)),
    and then 1 - exp(-x) < x, integrates to

        16 pi^(-(g+4)/2) lambda^(-(g+4)/2) we / (c^2 g^4 rho)
           * Gamma(g/(g+2))^(-(g+6)/2) Gamma((g-2)/(g+2)) Gamma((g+6)/2).
    """
    g = ch.gamma
    e = 0.5 * (g + 4.0)
    if ch.we == 0:
        return 0.0
    log_val = (math.log(16.0) - e * math.log(math.pi * lam) + math.log(ch.we)
               - 2.0 * math.log(ch.c) - 4.0 * math.log(g) - math.log(ch.rho)
               - 0.5 * (g + 6.0) * log_gamma(g / (g + 2.0))
               + log_gamma((g - 2.0) / (g + 2.0)) + log_gamma(0.5 * (g + 6.0)))
    return math.exp(log_val)


def sandwich_factor(lam: float, ch: ChannelParams) -> float:
    """1 - pi lambda c^2 gamma / (2 we); the lower sandwich multiplier."""
    if ch.we == 0:
        return -math.inf
    return 1.0 - math.pi * lam * ch.c**2 * ch.gamma / (2.0 * ch.we)


@dataclass(frozen=True)
class BoundResult:
    crb_lb: float
    crb_lb_w: float
    crb_lb_n: float
    sandwich_lo: float
    narrowband_gap: float
    quadrature_error: float
    sandwich_vacuous: bool = False


def evaluate_bounds(lam: float, ch: ChannelParams,
                    spec: QuadratureSpec = QuadratureSpec()) -> BoundResult:
    """All bound quantities for one parameter point.

    ``crb_lb_w`` is ``inf`` when ``we == 0``.  ``sandwich_lo`` is clamped at
    0 (and ``sandwich_vacuous`` set) when the lower multiplier is negative.
    """
    lb, qerr = crb_lb_with_error(lam, ch, spec)
    w = wideband_bound(lam, ch) if ch.we > 0 else math.inf
    factor = sandwich_factor(lam, ch)
    vacuous = factor < 0
    lo = 0.0 if vacuous else factor * w
    return BoundResult(crb_lb=lb, crb_lb_w=w, crb_lb_n=narrowband_bound(lam, ch),
                       sandwich_lo=lo, narrowband_gap=narrowband_gap_bound(lam, ch),
                       quadrature_error=qerr, sandwich_vacuous=vacuous)


@dataclass(frozen=True)
class SandwichReport:
    """Outcome of the wideband sandwich and the narrowband gap checks.

    Margins count as positive only when they exceed the quadrature error.
    The narrowband check is informational.
    """

    crb_lb: float
    crb_lb_w: float
    crb_lb_n: float
    factor: float
    sandwich_lo: float
    vacuous: bool
    upper_margin: float
    lower_margin: float
    narrowband_gap: float
    narrowband_gap_bound: float
    quadrature_error: float

    @property
    def upper_ok(self):
        return self.upper_margin > self.quadrature_error

    @property
    def lower_ok(self):
        return (not self.vacuous) and self.lower_margin > self.quadrature_error

    @property
    def narrowband_ok(self):
        return self.narrowband_gap < self.narrowband_gap_bound + self.quadrature_error

    @property
    def relative_gap(self):
        """(CRB_LB,W - CRB_LB) / CRB_LB,W."""
        return self.upper_margin / self.crb_lb_w


def sandwich_check(lam: float, ch: ChannelParams,
                   spec: QuadratureSpec = QuadratureSpec()) -> SandwichReport:
    res = evaluate_bounds(lam, ch, spec)
    factor = sandwich_factor(lam, ch)
    return SandwichReport(
        crb_lb=res.crb_lb, crb_lb_w=res.crb_lb_w, crb_lb_n=res.crb_lb_n,
        factor=factor, sandwich_lo=res.sandwich_lo, vacuous=res.sandwich_vacuous,
        upper_margin=res.crb_lb_w - res.crb_lb,
        lower_margin=res.crb_lb - res.sandwich_lo,
        narrowband_gap=abs(res.crb_lb_n - res.crb_lb),
        narrowband_gap_bound=res.narrowband_gap,
        quadrature_error=res.quadrature_error)


@dataclass(frozen=True)
class OracleCheck:
    name: str
    passed: bool
    detail: str
    informational: bool = False


ORACLE_GAMMAS = (2.5, 3.0, 4.0, 6.0)
ORACLE_LAMBDAS = (1e-3, 1e-2, 1e-1)


def oracle_suite(spec: QuadratureSpec = QuadratureSpec(), rtol: float = 1e-6) -> list:
    """Checks of the quadrature bound against its closed-form limits.

    Narrowband and wideband equivalence on the gamma x lambda grid, the
    wideband sandwich at T = 1e-8 s and its shrinkage at 10 x we, and the
    (informational) narrowband gap bound.
    """
    out = []
    rho = 1e5
    for mode, closed, label in ((KernelMode.RSS_ONLY, narrowband_bound, "narrowband"),
                                (KernelMode.TOA_ONLY, wideband_bound, "wideband")):
        worst = 0.0
        for g in ORACLE_GAMMAS:
            ch = ChannelParams(g, 4.0 * math.pi**2 / 3.0 * 1e12, rho)
            for lam in ORACLE_LAMBDAS:
                worst = max(worst, abs(crb_lb(lam, ch, spec, mode) / closed(lam, ch) - 1.0))
        out.append(OracleCheck(f"{label} equivalence", worst <= rtol,
                               f"max relative error {worst:.3g} (tolerance {rtol:g})"))
    we = 4.0 * math.pi**2 / 3.0 * 1e16
    r1 = sandwich_check(0.01, ChannelParams(4.0, we, rho), spec)
    r10 = sandwich_check(0.01, ChannelParams(4.0, 10 * we, rho), spec)
    out.append(OracleCheck("sandwich upper", r1.upper_ok,
                           f"margin {r1.upper_margin:.6g}, quadrature error {r1.quadrature_error:.3g}"))
    out.append(OracleCheck("sandwich lower", r1.lower_ok,
                           f"margin {r1.lower_margin:.6g}, factor {r1.factor:.6g}"))
    shrink = r1.relative_gap / r10.relative_gap
    out.append(OracleCheck("sandwich gap shrink at 10 we", shrink >= 5.0,
                           f"relative gap {r1.relative_gap:.4g} -> {r10.relative_gap:.4g} "
                           f"(x{shrink:.3g})"))
    tight = QuadratureSpec(rel_tol=1e-12, abs_tol=0.0, max_subdivisions=spec.max_subdivisions)
    nb = sandwich_check(0.01, ChannelParams(4.0, 4.0 * math.pi**2 / 3.0 * 1e8, rho), tight)
    out.append(OracleCheck("narrowband gap bound", nb.narrowband_ok,
                           f"gap {nb.narrowband_gap:.3g} vs bound {nb.narrowband_gap_bound:.3g}",
                           informational=True))
    return out
