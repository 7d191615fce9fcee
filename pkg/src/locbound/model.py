"""Signal and channel model: pulse, path loss, effective bandwidth, SNR.

Energies follow one convention throughout: the amplitude constant of the
transmitter is folded into ``es`` (received energy at 1 m), so it never
appears as a parameter.  The linear SNR is ``rho = es / (2 n0)`` with
``n0 / 2`` the two-sided white-noise density.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 3e8


class KernelMode(str, enum.Enum):
    """Which terms of the information kernel are kept.

    ``FULL`` is the joint delay + amplitude kernel.  ``RSS_ONLY`` keeps only
    the amplitude (received-strength) term and ``TOA_ONLY`` only the delay
    term; they are the narrowband and wideband limits.
    """

    FULL = "full"
    RSS_ONLY = "rss"
    TOA_ONLY = "toa"


@dataclass(frozen=True)
class ChannelParams:
    """Path-loss exponent ``gamma``, effective bandwidth ``we`` [1/s^2],
    linear SNR ``rho`` at 1 m and propagation speed ``c`` [m/s]."""

    gamma: float
    we: float
    rho: float
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.gamma > 2:
            raise DomainError(
                f"path-loss exponent must satisfy gamma > 2 (got {self.gamma}); "
                "at gamma <= 2 the received-power sum over an infinite "
                "network diverges")
        if not self.c > 0:
            raise DomainError(f"c must be > 0, got {self.c}")
        if not self.we >= 0:
            raise DomainError(f"we must be >= 0, got {self.we}")
        if not self.rho > 0:
            raise DomainError(f"rho must be > 0, got {self.rho}")

    @classmethod
    def from_pulse(cls, gamma, pulse: "Pulse", c=SPEED_OF_LIGHT):
        return cls(gamma=gamma, we=effective_bandwidth(pulse),
                   rho=pulse.es / (2.0 * pulse.n0), c=c)

    def with_rho(self, rho):
        return ChannelParams(self.gamma, self.we, rho, self.c)


@dataclass(frozen=True)
class Pulse:
    """Raised-cosine pulse of duration ``t_dur`` [s] on [0, T].

    ``es`` is the received energy at 1 m and ``n0`` the noise level
    (white-noise density ``n0 / 2``).
    """

    t_dur: float
    es: float = 1.0
    n0: float = 0.5

    def __post_init__(self):
        for name in ("t_dur", "es", "n0"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")

    @classmethod
    def from_snr(cls, t_dur, rho, es=1.0):
        """Pulse whose noise level gives linear SNR ``rho = es / (2 n0)``."""
        if not rho > 0:
            raise DomainError(f"rho must be > 0, got {rho}")
        return cls(t_dur=t_dur, es=es, n0=es / (2.0 * rho))

    @property
    def amplitude(self):
        # es = A^2 * 3T/2 for A (1 - cos(2 pi t / T)) on [0, T]
        return math.sqrt(2.0 * self.es / (3.0 * self.t_dur))

    @property
    def omega(self):
        return 2.0 * math.pi / self.t_dur


def effective_bandwidth(p: Pulse) -> float:
    """Mean-square bandwidth of the raised-cosine pulse, 4 pi^2 / (3 T^2)."""
    return 4.0 * math.pi**2 / (3.0 * p.t_dur**2)


def snr_from_db(db):
    """Linear SNR from decibels."""
    out = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def g_kernel(d, ch: ChannelParams, mode: KernelMode = KernelMode.FULL):
    """Per-sensor information weight at distance ``d``.

    ``d**(-gamma-2) * (gamma**2 + 4 we d**2 / c**2)``; the mode drops one of
    the two terms.  Vectorised over ``d``.
    """
    mode = KernelMode(mode)
    arr = np.asarray(d, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("g_kernel needs d > 0")
    gam = ch.gamma
    if mode is KernelMode.RSS_ONLY:
        out = gam * gam * arr ** (-gam - 2.0)
    elif mode is KernelMode.TOA_ONLY:
        out = (4.0 * ch.we / ch.c**2) * arr ** (-gam)
    else:
        out = arr ** (-gam - 2.0) * (gam * gam + (4.0 * ch.we / ch.c**2) * arr * arr)
    return float(out) if out.ndim == 0 else out


def pulse_waveform(t, p: Pulse):
    """s(t) with the amplitude constant folded in, so that int s^2 = es."""
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= p.t_dur)
    return np.where(inside, p.amplitude * (1.0 - np.cos(p.omega * t)), 0.0)


def pulse_derivative(t, p: Pulse):
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= p.t_dur)
    return np.where(inside, p.amplitude * p.omega * np.sin(p.omega * t), 0.0)


def pulse_autocorr(delta, p: Pulse):
    """C(delta) = int s(t) s(t - delta) dt in closed form.

    With A the pulse amplitude, w = 2 pi / T and a = |delta| < T::

        C = A^2 [ (T - a)(1 + cos(w a) / 2) + 3 sin(w a) / (2 w) ]

    and 0 for a >= T.  C(0) equals ``es``.
    """
    a = np.abs(np.asarray(delta, dtype=float))
    T, w = p.t_dur, p.omega
    with np.errstate(invalid="ignore"):
        val = (2.0 * p.es / (3.0 * T)) * (
            (T - a) * (1.0 + 0.5 * np.cos(w * a)) + 1.5 * np.sin(w * a) / w)
    out = np.where(a < T, val, 0.0)
    return float(out) if out.ndim == 0 else out
