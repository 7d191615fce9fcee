"""Special functions, semi-infinite quadrature and small dense linear algebra.

The quadrature works on the unit interval after the folded exponential
substitution ``x = L exp(+-(1 - w) / w)`` (see :func:`semi_infinite_map`).
A 7/15-point Gauss-Kronrod pair, whose nodes never touch the end points, is
applied with global adaptive bisection.  Integrands
are evaluated on whole batches of nodes at once and may be vector valued,
which is what lets the nested integrals in :mod:`locbound.bounds` run in
numpy rather than in Python loops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DomainError, NotPSDError

__all__ = [
    "QuadratureSpec",
    "log_gamma",
    "gamma_fn",
    "integrate_semi_infinite",
    "integrate_unit_batch",
    "semi_infinite_map",
    "cholesky",
    "PSD_JITTER",
]

# Relative pivot floor (times the largest diagonal entry).
PSD_JITTER = 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")

    def tighter(self, factor: float = 10.0) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol / factor, self.abs_tol / factor,
                              self.max_subdivisions)


def log_gamma(x):
    """ln Gamma(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    out = gammaln(arr)
    return float(out) if out.ndim == 0 else out


def gamma_fn(x):
    """Gamma(x) for x > 0, through :func:`log_gamma`."""
    return np.exp(log_gamma(x)) if np.ndim(x) else math.exp(log_gamma(x))


# QUADPACK qk15 abscissae and weights (Kronrod extension of 7-point Gauss).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5, 7 from each side).
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
GAUSS_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * KRONROD_NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float)
    fx = fx.reshape(fx.shape[:-1] + x.shape)
    kron = (fx * KRONROD_WEIGHTS).sum(-1) * h
    gauss = (fx[..., _GAUSS_IDX] * GAUSS_WEIGHTS).sum(-1) * h
    return kron, np.abs(kron - gauss)


def integrate_unit_batch(f: Callable, spec: QuadratureSpec = QuadratureSpec(),
                         n_drive: int | None = None, initial: int = 4):
    """Adaptive Gauss-Kronrod integration of ``f`` over (0, 1).

    ``f`` receives a 1-D array of nodes and returns either an array of the same
    length or an array of shape ``(ncomp, n)``; each component is integrated
    on a shared partition.  Only the first ``n_drive`` components (all by
    default) steer refinement and must meet the tolerance.

    Returns ``(values, errors)`` with the trailing node axis removed.
    """
    edges = np.linspace(0.0, 1.0, initial + 1)
    a, b = edges[:-1], edges[1:]
    vals, errs = _gk15(f, a, b)
    frozen = np.zeros(a.shape, dtype=bool)
    while True:
        total = vals.sum(-1)
        err = errs.sum(-1)
        v2 = np.atleast_2d(vals)[:n_drive]
        e2 = np.atleast_2d(errs)[:n_drive]
        tot2 = np.atleast_1d(total)[:n_drive]
        err2 = np.atleast_1d(err)[:n_drive]
        if not (np.all(np.isfinite(v2)) and np.all(np.isfinite(e2))):
            raise ConvergenceError("integrand produced non-finite values",
                                   estimate=total, error=err)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(tot2))
        if np.all(err2 <= tol):
            return total, err
        k = a.size
        ratio = (e2 / tol[:, None]).max(axis=0)
        ratio[frozen] = 0.0
        want = ratio > 1.0 / k
        if not want.any():
            raise ConvergenceError(
                "error target unreachable at floating-point resolution",
                estimate=total, error=err)
        room = spec.max_subdivisions - k
        if room <= 0:
            raise ConvergenceError(
                f"no convergence within {spec.max_subdivisions} subdivisions",
                estimate=total, error=err)
        idx = np.flatnonzero(want)
        if idx.size > room:
            idx = idx[np.argsort(ratio[idx])[::-1][:room]]
        mid = 0.5 * (a[idx] + b[idx])
        # Bisection below ~eps relative width no longer moves the nodes.
        tiny = (b[idx] - a[idx]) <= np.maximum(64 * np.finfo(float).eps * np.abs(b[idx]), 1e-290)
        frozen[idx[tiny]] = True
        idx = idx[~tiny]
        if idx.size == 0:
            continue
        mid = 0.5 * (a[idx] + b[idx])
        na = np.concatenate([a[idx], mid])
        nb = np.concatenate([mid, b[idx]])
        nv, ne = _gk15(f, na, nb)
        keep = np.ones(k, dtype=bool)
        keep[idx] = False
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        frozen = np.concatenate([frozen[keep], np.zeros(na.size, dtype=bool)])
        vals = np.concatenate([vals[..., keep], nv], axis=-1)
        errs = np.concatenate([errs[..., keep], ne], axis=-1)


def semi_infinite_map(w, scale=1.0):
    """Nodes and Jacobians of the folded exponential map from (0, 1) onto (0, inf).

    With ``t = (1 - w) / w`` the near branch is ``x = scale * exp(-t)`` and the
    far branch ``x = scale * exp(t)``; both the origin and infinity sit at
    ``w = 0``.  Algebraic behaviour of the integrand at either end (power-law
    tails, integrable end-point singularities) becomes exponential decay in
    ``t``, so adaptive bisection converges geometrically even for tails as
    heavy as ``x^(-1-c)`` with small ``c``.  Returns
    ``(x_near, jac_near, x_far, jac_far)`` so that
    ``int_0^inf f dx = int_0^1 [f(x_near) jac_near + f(x_far) jac_far] dw``.
    """
    w = np.asarray(w, dtype=float)
    with np.errstate(over="ignore", divide="ignore", under="ignore", invalid="ignore"):
        t = (1.0 - w) / w
        x_near = scale * np.exp(-t)
        x_far = scale * np.exp(t)
        jac_near = x_near / (w * w)
        jac_far = x_far / (w * w)
    return x_near, jac_near, x_far, jac_far


# beyond this |log(x / scale)| the map leaves (or nearly leaves) the double range
_MAP_EDGE = 600.0
# |log(x / scale)| where the dropped end mass is probed; still a normal double
_TAIL_PROBE = 700.0


def integrate_semi_infinite(f: Callable, spec: QuadratureSpec = QuadratureSpec(),
                            scale: float = 1.0, return_error: bool = False):
    """Integral of ``f`` over (0, inf).

    The half line is mapped onto (0, 1) by the folded exponential map of
    :func:`semi_infinite_map`.  ``scale`` should be near the length over
    which ``f`` changes; the default of 1 suits anything of order one, and
    being off by a few decades only costs extra subdivisions.  ``f`` must
    accept numpy arrays, return finite values, and may be singular
    (integrably) at 0.

    Raises :class:`ConvergenceError` (carrying the best estimate and error)
    when the tolerance cannot be met within ``spec.max_subdivisions``.
    """
    if not scale > 0:
        raise DomainError("scale must be positive")

    def mapped(w):
        x0, j0, x1, j1 = semi_infinite_map(w, scale)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            f0 = np.asarray(f(x0), dtype=float) * j0
            f1 = np.asarray(f(x1), dtype=float) * j1
            # 0 * inf at the extreme ends of the map; the true limit is 0 for
            # any integrable f
            edge = (1.0 - w) / w > _MAP_EDGE
        f0 = np.where(edge & ~np.isfinite(f0), 0.0, f0)
        f1 = np.where(edge & ~np.isfinite(f1), 0.0, f1)
        return f0 + f1

    val, err = integrate_unit_batch(mapped, spec)
    val, err = float(val), float(err)
    # Mass beyond the map edges is dropped; x f(x) there estimates it.  A large
    # value means a non-integrable end or a tail too heavy for double range.
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        ends = scale * np.exp(np.array([-_TAIL_PROBE, _TAIL_PROBE]))
        ends = ends[np.isfinite(ends) & (ends > 0)]
        spill = np.abs(np.asarray(f(ends), dtype=float) * ends) if ends.size else np.zeros(0)
    tol = max(spec.abs_tol, spec.rel_tol * abs(val))
    if np.any(~np.isfinite(spill)) or np.any(spill > tol):
        raise ConvergenceError("integrand does not decay fast enough at 0 or infinity",
                               estimate=val, error=max(err, float(np.max(spill, initial=0.0))))
    return (val, err) if return_error else val


def cholesky(A, jitter: float = PSD_JITTER):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    A pivot at or below ``jitter * max(diag(A))`` raises :class:`NotPSDError`.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("cholesky needs a square matrix")
    if not np.allclose(A, A.T, rtol=1e-12, atol=0.0):
        raise DomainError("cholesky needs a symmetric matrix")
    n = A.shape[0]
    floor = jitter * max(float(np.max(np.diag(A))), 0.0) if n else 0.0
    L = np.zeros_like(A)
    for j in range(n):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > floor:
            raise NotPSDError(f"pivot {pivot:.3e} at column {j} is below the "
                              f"jitter floor {floor:.3e}")
        L[j, j] = math.sqrt(pivot)
        L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L
