"""
Eigenvalue shifts of the Neumann Laplacian when a small absorbing arc is opened.

Eigenpairs are indexed from 1 in the order of :func:`neumann_disk.neumann_eigenpairs`
(``j0 = 1`` is the constant mode with eigenvalue 0).  Only simple eigenvalues are
handled.

The two-term model comes from the characteristic-value equation of the arc
operator ``-(1/pi) L_eps + R``, with ``R`` the modified-kernel remainder after the
log part and the resonant pole are removed:

    lambda - lambda0 = -pi <u0, L_eps^{-1} u0> - pi^2 <u0, L_eps^{-1} R L_eps^{-1} u0>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cheblog
from .cheblog import ChebyshevDensity, SmoothBoundaryData, coeffs_from_samples, gauss_nodes
from .errors import DegenerateEigenvalue, MissingEigenpair
from .geometry import BoundaryArc, arc_point
from .neumann_disk import DEFAULT_PROVIDER, is_simple, neumann_eigenpairs
from .potential import Potential

DEFAULT_ORDER = 16


@dataclass(frozen=True)
class EigenShiftResult:
    j0: int
    lambda0: float
    leading_shift: float
    corrected_shift: float
    epsilon: float
    x_star: tuple

    def to_dict(self, order: int = 2) -> dict:
        shift = self.corrected_shift if order == 2 else self.leading_shift
        return {"lambda0": self.lambda0, "shift": shift, "order": order}


def simple_eigenpair(j0: int):
    """The ``j0``-th Neumann eigenpair (1-based), refusing multiple eigenvalues."""
    if j0 < 1:
        raise ValueError("j0 is 1-based")
    pairs = neumann_eigenpairs(j0 + 4)
    while pairs[-1].eigenvalue - pairs[j0 - 1].eigenvalue < 1e-6:
        pairs = neumann_eigenpairs(2 * len(pairs))
    if not is_simple(pairs, j0 - 1):
        lam = pairs[j0 - 1].eigenvalue
        raise DegenerateEigenvalue(f"eigenvalue {lam:.10g} of index {j0} is multiple")
    return pairs[j0 - 1]


def leading_shift(j0: int, arc: BoundaryArc) -> float:
    """``-pi / ln(eps) * |u0(x*)|^2``."""
    pair = simple_eigenpair(j0)
    u = float(pair(arc.center_point))
    return -math.pi / math.log(arc.half_length) * u * u


def _arc_data(f, arc: BoundaryArc, order: int) -> SmoothBoundaryData:
    """Chebyshev coefficients of ``tau -> f(x(s* + eps tau))``."""
    tau = gauss_nodes(order + 1)
    return SmoothBoundaryData(coeffs_from_samples(f(arc_point(arc.parametrize(tau)))))


def remainder_matrix(arc: BoundaryArc, pair, order: int = DEFAULT_ORDER, n_quad=None, provider=None) -> np.ndarray:
    """Collocation matrix of the remainder operator on the scaled arc.

    Entry ``[k, n]`` is ``int R(x(tau_k), x(tau)) T_n(tau)/sqrt(1-tau^2) dtau``
    where ``R`` is the regular part at ``w^2 = lambda0`` minus the chord
    correction ``(1/pi) ln(chord / arclength)``.
    """
    provider = DEFAULT_PROVIDER if provider is None else provider
    n_quad = 2 * (order + 1) if n_quad is None else n_quad
    eps = arc.half_length
    s = gauss_nodes(order + 1)
    t = gauss_nodes(n_quad)
    xs = arc_point(arc.parametrize(s))[:, None, :]
    zt = arc_point(arc.parametrize(t))[None, :, :]
    reg = provider.regular_part(pair.eigenvalue, xs, zt, pole=pair)
    half = 0.5 * eps * (s[:, None] - t[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(half == 0.0, 1.0, np.sin(half) / half)
    kern = reg - np.log(np.abs(sinc)) / math.pi
    return (math.pi / n_quad) * kern @ np.polynomial.chebyshev.chebvander(t, order)


def shift_terms(j0: int, arc: BoundaryArc, order: int = DEFAULT_ORDER, provider=None) -> tuple:
    """The first and second terms of the two-term shift model."""
    pair = simple_eigenpair(j0)
    eps = arc.half_length
    u0 = _arc_data(pair, arc, order)
    # arc-level log operator after t = eps*tau: L + ln(eps) * mass
    phi1 = cheblog.invert_scaled_L(u0, eps)
    term1 = -math.pi * cheblog.pairing(phi1, u0)
    r_vals = remainder_matrix(arc, pair, order, provider=provider) @ phi1.coeffs
    phi2 = cheblog.invert_scaled_L(SmoothBoundaryData(coeffs_from_samples(r_vals)), eps)
    term2 = -math.pi ** 2 * cheblog.pairing(phi2, u0)
    return term1, term2


def corrected_shift(j0: int, arc: BoundaryArc, order: int = DEFAULT_ORDER, provider=None) -> float:
    t1, t2 = shift_terms(j0, arc, order, provider)
    return t1 + t2


def eigen_shift(j0: int, arc: BoundaryArc, order: int = DEFAULT_ORDER) -> EigenShiftResult:
    pair = simple_eigenpair(j0)
    return EigenShiftResult(
        j0=j0,
        lambda0=pair.eigenvalue,
        leading_shift=leading_shift(j0, arc),
        corrected_shift=corrected_shift(j0, arc, order),
        epsilon=arc.half_length,
        x_star=tuple(float(v) for v in arc.center_point),
    )


def drift_leading_shift(j0: int, arc: BoundaryArc, potential: Potential, eigenpair=None) -> float:
    """``-pi / ln(eps) * |u0F(x*)|^2 * exp(phi(x*))`` for the weighted drift eigenpair.

    ``eigenpair`` is any callable mode normalized by ``int |u|^2 e^phi = 1``.  For a
    constant potential ``c`` the free pair scaled by ``exp(-c/2)`` is used.
    """
    xs = arc.center_point
    phi_star = float(potential(xs))
    if eigenpair is None:
        if not potential.is_constant:
            raise MissingEigenpair("a weighted eigenpair is required for a nonconstant potential")
        free = simple_eigenpair(j0)
        u = float(free(xs)) * math.exp(-0.5 * phi_star)
    else:
        u = float(eigenpair(xs))
    return -math.pi / math.log(arc.half_length) * u * u * math.exp(phi_star)
