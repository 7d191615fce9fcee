"""Truncated Poisson sensor fields and source-relative geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DegenerateGeometryError, DomainError, ResourceLimitError
from .model import ChannelParams
from .seeding import check_seed, generator

MAX_EXPECTED_POINTS = 1e8


class SourceLocation(NamedTuple):
    x: float
    y: float

    def check(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"source coordinates must be finite, got {self}")
        return self


class Polar(NamedTuple):
    d: float
    phi: float


@dataclass(frozen=True)
class Polars:
    """Distances and bearings of every sensor as seen from one source.

    ``phi`` follows the convention cos(phi) = (x - a) / d,
    sin(phi) = (y - b) / d, i.e. the bearing of the source from the sensor.
    """

    d: np.ndarray
    phi: np.ndarray

    def __len__(self):
        return self.d.size

    def __iter__(self) -> Iterator[Polar]:
        for d, phi in zip(self.d, self.phi):
            yield Polar(float(d), float(phi))

    @classmethod
    def from_pairs(cls, pairs):
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0].copy(), arr[:, 1].copy())


@dataclass(frozen=True)
class SensorField:
    """A realisation of a homogeneous PPP restricted to a disc.

    ``points`` has shape ``(n, 2)``; the disc has ``radius`` and ``center``.
    The array is made read-only on construction.
    """

    points: np.ndarray
    lam: float
    radius: float
    seed: int
    center: SourceLocation = field(default=SourceLocation(0.0, 0.0))

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "center", SourceLocation(*map(float, self.center)))
        if not self.lam > 0:
            raise DomainError(f"lambda must be > 0, got {self.lam}")
        if not self.radius > 0:
            raise DomainError(f"radius must be > 0, got {self.radius}")
        check_seed(self.seed)
        if pts.size:
            r = np.hypot(pts[:, 0] - self.center.x, pts[:, 1] - self.center.y)
            if np.any(r > self.radius * (1 + 1e-12)):
                raise DomainError("sensor outside the sampling disc")

    def __len__(self):
        return self.points.shape[0]

    def to_text(self) -> str:
        """Serialise as ``lambda radius seed [cx cy]`` then one ``a b`` per line."""
        head = [f"{self.lam:.17g}", f"{self.radius:.17g}", str(self.seed)]
        if self.center != (0.0, 0.0):
            head += [f"{self.center.x:.17g}", f"{self.center.y:.17g}"]
        lines = [" ".join(head)]
        lines += [f"{a:.17g} {b:.17g}" for a, b in self.points]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SensorField":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or len(rows[0]) not in (3, 5):
            raise ValueError("header must be 'lambda radius seed' (optionally 'cx cy')")
        head = rows[0]
        center = SourceLocation(float(head[3]), float(head[4])) if len(head) == 5 \
            else SourceLocation(0.0, 0.0)
        pts = [(float(a), float(b)) for a, b in rows[1:]]
        return cls(np.array(pts).reshape(-1, 2), float(head[0]), float(head[1]),
                   int(head[2]), center)

    def rotated(self, angle: float) -> "SensorField":
        """Field rotated about its centre (used by invariance tests)."""
        c, s = math.cos(angle), math.sin(angle)
        rel = self.points - np.array(self.center)
        rot = rel @ np.array([[c, s], [-s, c]])
        return SensorField(rot + np.array(self.center), self.lam, self.radius,
                           self.seed, self.center)


def radius_for_count(n_expected: float, lam: float) -> float:
    """Disc radius holding ``n_expected`` points on average, sqrt(N / (pi lambda))."""
    if not (n_expected > 0 and lam > 0):
        raise DomainError("need n_expected > 0 and lambda > 0")
    return math.sqrt(n_expected / (math.pi * lam))


def sample_ppp(lam: float, radius: float, center=SourceLocation(0.0, 0.0),
               seed: int = 0) -> SensorField:
    """Homogeneous PPP of density ``lam`` on the disc of ``radius`` around ``center``.

    The count is Poisson(lam * pi * radius^2) and the points are i.i.d.
    uniform on the disc.  The draw is a pure function of ``seed``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if not radius > 0:
        raise DomainError(f"radius must be > 0, got {radius}")
    center = SourceLocation(*map(float, center)).check()
    mean = lam * math.pi * radius * radius
    if mean > MAX_EXPECTED_POINTS:
        raise ResourceLimitError(
            f"expected {mean:.3g} points exceeds the limit of {MAX_EXPECTED_POINTS:.0e}")
    rng = generator(seed)
    n = int(rng.poisson(mean))
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * math.pi * rng.random(n)
    pts = np.column_stack([center.x + r * np.cos(theta), center.y + r * np.sin(theta)])
    return SensorField(pts, lam, radius, seed, center)


def polar_of(field: SensorField, src) -> Polars:
    """Distance and bearing of every sensor relative to ``src``."""
    src = SourceLocation(*map(float, src)).check()
    dx = src.x - field.points[:, 0]
    dy = src.y - field.points[:, 1]
    d = np.hypot(dx, dy)
    if np.any(d == 0.0):
        raise DegenerateGeometryError("a sensor coincides with the source")
    phi = np.arctan2(dy, dx)
    phi[phi == -math.pi] = math.pi
    return Polars(d, phi)


def truncation_tail(field: SensorField, ch: ChannelParams) -> float:
    """Expected sum of D^-gamma over the points the disc leaves out.

    For a PPP of density lambda outside radius R this is
    2 pi lambda R^(2 - gamma) / (gamma - 2).
    """
    g = ch.gamma
    return 2.0 * math.pi * field.lam * field.radius ** (2.0 - g) / (g - 2.0)
