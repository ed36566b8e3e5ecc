"""
Unit-disk geometry and absorbing-arc layouts.

Arcs live on the unit circle and are described by their center angle and
their half-length (arclength, i.e. radians).  Everything downstream works
with the arclength parametrization ``x(t) = (cos t, sin t)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ArcTooLarge, DegenerateArc, OverlappingArcs

TWO_PI = 2.0 * math.pi

DISK_AREA = math.pi
DISK_PERIMETER = TWO_PI


def normalize_angle(theta: float) -> float:
    """Map an angle to [0, 2*pi)."""
    t = math.fmod(float(theta), TWO_PI)
    if t < 0.0:
        t += TWO_PI
    # fmod can return exactly 2*pi after the shift for tiny negative input
    return 0.0 if t >= TWO_PI else t


def wrap_angle(theta):
    """Map angles (scalar or array) to (-pi, pi]."""
    w = np.mod(np.asarray(theta, dtype=float) + np.pi, TWO_PI) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


def arc_point(t):
    """Point ``(cos t, sin t)`` on the unit circle; vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


def chord_distance(s1, s2):
    """Euclidean distance between ``x(s1)`` and ``x(s2)``: ``2|sin((s1-s2)/2)|``."""
    d = 2.0 * np.abs(np.sin(0.5 * (np.asarray(s1, float) - np.asarray(s2, float))))
    return float(d) if np.ndim(d) == 0 else d


@dataclass(frozen=True)
class BoundaryArc:
    """Open arc ``{x(t) : |t - center_angle| < half_length}`` on the unit circle."""

    center_angle: float
    half_length: float

    def __post_init__(self):
        object.__setattr__(self, "center_angle", normalize_angle(self.center_angle))
        object.__setattr__(self, "half_length", float(self.half_length))

    @property
    def center_point(self) -> np.ndarray:
        return arc_point(self.center_angle)

    def parametrize(self, tau):
        """Boundary angle of the scaled coordinate ``tau`` in [-1, 1]."""
        return self.center_angle + self.half_length * np.asarray(tau, dtype=float)

    def contains_angle(self, theta) -> np.ndarray:
        return np.abs(wrap_angle(np.asarray(theta) - self.center_angle)) < self.half_length

    def distance_to(self, x) -> float:
        """Euclidean distance from a point of the closed disk to the closed arc."""
        x = np.asarray(x, dtype=float)
        r = math.hypot(x[0], x[1])
        if r > 0.0:
            theta = math.atan2(x[1], x[0])
            if abs(wrap_angle(theta - self.center_angle)) <= self.half_length:
                return 1.0 - r
        ends = arc_point(np.array([self.center_angle - self.half_length,
                                   self.center_angle + self.half_length]))
        return float(np.min(np.hypot(*(ends - x).T)))

    def to_dict(self) -> dict:
        return {"center": self.center_angle, "half_length": self.half_length}


@dataclass(frozen=True)
class TargetConfiguration:
    """An ordered collection of absorbing arcs on the unit circle."""

    arcs: tuple = field(default_factory=tuple)
    domain_area: float = DISK_AREA
    perimeter: float = DISK_PERIMETER

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "TargetConfiguration":
        return cls(tuple(BoundaryArc(c, e) for c, e in pairs))

    @classmethod
    def single(cls, eps: float, center: float = 0.0) -> "TargetConfiguration":
        return cls((BoundaryArc(center, eps),))

    @classmethod
    def from_dict(cls, doc: dict) -> "TargetConfiguration":
        try:
            arcs = [BoundaryArc(a["center"], a["half_length"]) for a in doc["arcs"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed configuration document: {exc}") from exc
        return cls(tuple(arcs))

    @classmethod
    def from_json(cls, text_or_path) -> "TargetConfiguration":
        if isinstance(text_or_path, Path) or (
            isinstance(text_or_path, str) and not text_or_path.lstrip().startswith("{")
        ):
            text = Path(text_or_path).read_text()
        else:
            text = text_or_path
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"arcs": [a.to_dict() for a in self.arcs]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __len__(self):
        return len(self.arcs)

    def __iter__(self):
        return iter(self.arcs)

    @property
    def half_lengths(self) -> np.ndarray:
        return np.array([a.half_length for a in self.arcs])

    @property
    def centers(self) -> np.ndarray:
        return np.array([a.center_angle for a in self.arcs])

    def distance_to(self, x) -> float:
        return min(a.distance_to(x) for a in self.arcs)

    def angular_gaps(self) -> list:
        """Free angular gaps between consecutive arcs, sorted by center (with wraparound).

        Each entry is ``(i, j, gap)`` where ``gap`` is the center separation minus
        the two half-lengths.
        """
        n = len(self.arcs)
        if n < 2:
            return []
        order = sorted(range(n), key=lambda k: self.arcs[k].center_angle)
        gaps = []
        for k, (a, b) in enumerate(zip(order, order[1:] + order[:1])):
            sep = self.arcs[b].center_angle - self.arcs[a].center_angle
            if k == n - 1:
                sep += TWO_PI
            gaps.append((a, b, sep - self.arcs[a].half_length - self.arcs[b].half_length))
        return gaps


def validate(config: TargetConfiguration) -> None:
    """Raise if ``config`` violates any arc or layout invariant; return None otherwise."""
    if len(config.arcs) == 0:
        raise DegenerateArc("configuration has no absorbing arcs")
    for arc in config.arcs:
        if not (arc.half_length > 0.0) or not math.isfinite(arc.half_length):
            raise DegenerateArc(f"half-length must be positive, got {arc.half_length}")
        if arc.half_length >= math.pi:
            raise ArcTooLarge(f"half-length must be < pi, got {arc.half_length}")
    for i, j, gap in config.angular_gaps():
        if not gap > 0.0:
            raise OverlappingArcs(f"arcs {i} and {j} intersect (angular gap {gap:.3g})")
    if 2.0 * config.half_lengths.sum() >= config.perimeter:
        raise OverlappingArcs("absorbing arcs cover the whole boundary")
