"""
Asymptotic expansions of the mean escape time on the unit disk.

Every routine returns an :class:`ExpansionResult`: an eps-dependent constant
plus an O(1) spatial corrector, with the remainder order of the expansion
carried as a tag.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import interaction
from .errors import (DegenerateSystem, InvalidGap, QuadratureFailure,
                     TooCloseToArc)
from .geometry import (DISK_AREA, DISK_PERIMETER, BoundaryArc,
                       TargetConfiguration, arc_point, chord_distance,
                       wrap_angle)
from .neumann_disk import corrector_phi, torsion_g
from .potential import Potential

GUARD_FACTOR = 10.0


@dataclass(frozen=True)
class ExpansionResult:
    leading_constant: float
    spatial_part: Callable
    remainder_order: str
    constants: dict = field(default_factory=dict)
    corrector_pending: bool = False
    config: Optional[TargetConfiguration] = None
    min_distance: float = 0.0

    def evaluate(self, x, guard: bool = True):
        """``leading_constant + spatial_part(x)`` (the leading constant alone while the
        corrector is pending)."""
        x = np.asarray(x, dtype=float)
        if guard and self.config is not None:
            pts = x.reshape(-1, 2)
            for p in pts:
                check_distance(self.config, p)
        if self.corrector_pending:
            return self.leading_constant
        return self.leading_constant + self.spatial_part(x)

    def to_dict(self, samples=()) -> dict:
        out = {
            "leading": self.leading_constant,
            "constants": dict(self.constants),
            "remainder": self.remainder_order,
            "samples": [{"x": [float(v) for v in p], "u": float(self.evaluate(p))} for p in samples],
        }
        if self.corrector_pending:
            out["corrector_pending"] = True
        return out

    def to_json(self, samples=()) -> str:
        return json.dumps(self.to_dict(samples))


@dataclass(frozen=True)
class FluxDensity:
    """Flux ``amplitude / sqrt(eps^2 - t^2)`` through one arc, ``t`` the arclength offset."""

    arc: BoundaryArc
    amplitude: float
    correction_order: str

    def __call__(self, t):
        e = self.arc.half_length
        t = np.asarray(t, dtype=float)
        return self.amplitude / np.sqrt(e * e - t * t)

    @property
    def mass(self) -> float:
        return self.amplitude * math.pi


def check_distance(config: TargetConfiguration, x, factor: float = GUARD_FACTOR):
    eps = float(np.max(config.half_lengths))
    dist = config.distance_to(x)
    if dist < factor * eps:
        raise TooCloseToArc(f"dist(x, arcs) = {dist:.3g} < {factor:g} * eps = {factor * eps:.3g}")
    return dist


def _single_arc(config: TargetConfiguration) -> BoundaryArc:
    if len(config.arcs) != 1:
        raise ValueError(f"expected exactly one arc, got {len(config.arcs)}")
    return config.arcs[0]


def single_target(config: TargetConfiguration, x=None) -> ExpansionResult:
    """``u(x) = ln(2/eps) + (1 - |x|^2)/4 + ln|x - x*|`` with an O(eps) remainder."""
    arc = _single_arc(config)
    eps = arc.half_length
    xs = arc.center_point
    if x is not None:
        check_distance(config, x)
    area = config.domain_area
    c_eps = area / math.pi * math.log(2.0 / eps)
    return ExpansionResult(
        leading_constant=c_eps,
        spatial_part=lambda p: corrector_phi(p, xs),
        remainder_order="O(eps)",
        constants={"C_eps": c_eps, "flux_amplitude": -area / math.pi},
        config=config,
    )


def single_target_flux(config: TargetConfiguration, domain_area=None) -> FluxDensity:
    arc = _single_arc(config)
    area = config.domain_area if domain_area is None else domain_area
    return FluxDensity(arc, -area / math.pi, "O(eps)")


def separated_constants(eps1: float, eps2: float, chord: float) -> dict:
    """C_1, C_2 and C_eps of two well-separated arcs with center chord ``chord``."""
    denom = math.log(eps1 * eps2 / (4.0 * chord * chord))
    if denom == 0.0:
        raise DegenerateSystem("ln(eps1 eps2 / (4 L^2)) vanishes")
    c1 = -math.log(eps2 / (2.0 * chord)) / denom
    c2 = -math.log(eps1 / (2.0 * chord)) / denom
    c_eps = (math.log(chord) ** 2 - math.log(eps1 / 2.0) * math.log(eps2 / 2.0)) / denom
    return {"C1": c1, "C2": c2, "C_eps": c_eps, "L": chord}


def two_separated(config: TargetConfiguration, x=None) -> ExpansionResult:
    if len(config.arcs) != 2:
        raise ValueError("two_separated needs exactly two arcs")
    a1, a2 = config.arcs
    chord = chord_distance(a1.center_angle, a2.center_angle)
    k = separated_constants(a1.half_length, a2.half_length, chord)
    x1, x2 = a1.center_point, a2.center_point
    c1, c2 = k["C1"], k["C2"]
    if x is not None:
        check_distance(config, x)

    def spatial(p):
        p = np.asarray(p, dtype=float)
        d1 = np.hypot(*np.moveaxis(p - x1, -1, 0))
        d2 = np.hypot(*np.moveaxis(p - x2, -1, 0))
        return torsion_g(p) - c1 * np.log(d1) - c2 * np.log(d2)

    return ExpansionResult(
        leading_constant=k["C_eps"],
        spatial_part=spatial,
        remainder_order="O(sqrt(eps1^2+eps2^2))",
        constants=k,
        config=config,
    )


def two_separated_flux(config: TargetConfiguration) -> list:
    a1, a2 = config.arcs
    k = separated_constants(a1.half_length, a2.half_length,
                            chord_distance(a1.center_angle, a2.center_angle))
    tag = "O(sqrt(eps1^2+eps2^2))"
    return [FluxDensity(a1, k["C1"], tag), FluxDensity(a2, k["C2"], tag)]


def _common_eps(config: TargetConfiguration) -> float:
    eps = config.half_lengths
    if not np.allclose(eps, eps[0], rtol=1e-12, atol=0.0):
        raise ValueError("clustered expansions require equal half-lengths")
    return float(eps[0])


def scaled_positions(config: TargetConfiguration) -> np.ndarray:
    """Arc centers relative to the first arc, unwrapped and divided by eps."""
    eps = _common_eps(config)
    s0 = config.arcs[0].center_angle
    return np.array([wrap_angle(a.center_angle - s0) for a in config.arcs]) / eps


def two_clustered(config: TargetConfiguration, x=None, order=None) -> ExpansionResult:
    if len(config.arcs) != 2:
        raise ValueError("two_clustered needs exactly two arcs")
    eps = _common_eps(config)
    d = abs(scaled_positions(config)[1])
    if not d > 2.0:
        raise InvalidGap(f"d = {d} must exceed 2")
    alpha = interaction.alpha_of_d(d, order)
    x1, x2 = config.arcs[0].center_point, config.arcs[1].center_point
    if x is not None:
        check_distance(config, x)

    def spatial(p):
        p = np.asarray(p, dtype=float)
        d1 = np.hypot(*np.moveaxis(p - x1, -1, 0))
        d2 = np.hypot(*np.moveaxis(p - x2, -1, 0))
        return torsion_g(p) + 0.5 * np.log(d1) + 0.5 * np.log(d2)

    c_eps = -math.log(eps) - 1.0 / (2.0 * alpha)
    return ExpansionResult(
        leading_constant=c_eps,
        spatial_part=spatial,
        remainder_order="O(eps)",
        constants={"C_eps": c_eps, "alpha": alpha, "d": d},
        config=config,
    )


def multi_cluster(config: TargetConfiguration, x=None, order=None) -> ExpansionResult:
    eps = _common_eps(config)
    geom = interaction.ClusterGeometry.from_positions(scaled_positions(config))
    sol = interaction.solve_cluster(geom, order)
    total = float(np.sum(sol.alphas))
    centers = [a.center_point for a in config.arcs]
    n = len(centers)
    if x is not None:
        check_distance(config, x)

    def spatial(p):
        return sum(corrector_phi(p, c) for c in centers) / n

    c_eps = -math.log(eps) - 1.0 / total
    return ExpansionResult(
        leading_constant=c_eps,
        spatial_part=spatial,
        remainder_order="O(eps)",
        constants={"C_eps": c_eps, "alphas": [float(a) for a in sol.alphas],
                   "condition": sol.condition_estimate},
        config=config,
    )


def homogenized_limit(x):
    """Limit of the averaged correctors when targets cover the circle uniformly."""
    return torsion_g(x)


def area_integral(f, tol: float = 1e-8, n_radial: int = 16, n_angular: int = 32, max_level: int = 8) -> float:
    """``int_disk f`` by Gauss-Legendre in ``r`` times the periodic trapezoid rule in theta.

    Both orders are doubled until two successive estimates agree to ``tol``
    (relative to max(1, |I|)).
    """
    prev = None
    for _ in range(max_level):
        xr, wr = np.polynomial.legendre.leggauss(n_radial)
        r = 0.5 * (xr + 1.0)
        wr = 0.5 * wr
        th = 2.0 * np.pi * np.arange(n_angular) / n_angular
        rr, tt = np.meshgrid(r, th, indexing="ij")
        pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)
        vals = np.asarray(f(pts), dtype=float)
        est = float(np.sum(wr[:, None] * rr * vals) * (2.0 * np.pi / n_angular))
        if prev is not None and abs(est - prev) <= tol * max(1.0, abs(est)):
            return est
        prev = est
        n_radial *= 2
        n_angular *= 2
    raise QuadratureFailure(f"area integral did not converge to {tol}")


def drift_single_target(config: TargetConfiguration, potential: Potential, x=None) -> ExpansionResult:
    """Leading part of the expansion under the force field ``grad(potential)``.

    The O(1) corrector has no closed form for a general potential; the result is
    flagged ``corrector_pending`` and :func:`narrowescape.oracle.drift_corrector_field`
    extracts it numerically.
    """
    arc = _single_arc(config)
    eps = arc.half_length
    xs = arc.center_point
    phi_star = float(potential(xs))
    weight = area_integral(lambda p: np.exp(potential(p) - phi_star))
    leading = weight / math.pi * math.log(2.0 / eps)
    if x is not None:
        check_distance(config, x)
    return ExpansionResult(
        leading_constant=leading,
        spatial_part=lambda p: np.nan,
        remainder_order="O(eps)",
        constants={"weighted_area": weight, "leading_factor": weight / math.pi},
        corrector_pending=True,
        config=config,
    )


def overlap_report(config: TargetConfiguration, x) -> dict:
    """Both two-arc expansions for an equal-size pair, for gaps where either may apply."""
    out = {"separated": float(two_separated(config).evaluate(x))}
    try:
        out["clustered"] = float(two_clustered(config).evaluate(x))
    except (InvalidGap, ValueError):
        pass
    return out


__all__ = [
    "ExpansionResult", "FluxDensity", "single_target", "single_target_flux",
    "two_separated", "two_separated_flux", "two_clustered", "multi_cluster",
    "drift_single_target", "area_integral", "homogenized_limit", "check_distance",
    "separated_constants", "overlap_report", "DISK_AREA", "DISK_PERIMETER", "arc_point",
]
