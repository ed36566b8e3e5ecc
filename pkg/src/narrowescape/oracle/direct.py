"""
Untruncated boundary-integral solver for the mean escape time on the unit disk.

The solution is represented as

    u(x) = (1 - |x|^2)/4 - (1/pi) sum_j int_{arc j} ln|x - z| phi_j(z) ds(z) + C,

which already satisfies -Δu = 1 and the reflecting condition away from the arcs
provided the total flux is -pi.  The unknown fluxes are weighted Chebyshev series
in the scaled arc variable ``tau`` (``phi_j(s_j + eps_j tau) = phidens_j(tau) / eps_j``);
the Dirichlet condition is collocated on Chebyshev-Gauss nodes of each arc and
the flux constraint closes the system for ``C``.

The logarithm of the chord is split as ``ln|tau - tau'| + ln eps + ln sinc``; the
first part is diagonal in the basis and the others are analytic and integrated by
Gauss-Chebyshev quadrature sized from the distance to their singularities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import linalg

from .. import cheblog
from ..cheblog import ChebyshevDensity, gauss_nodes
from ..errors import IllConditioned, NonConvergent
from ..geometry import BoundaryArc, TargetConfiguration, arc_point, validate, wrap_angle
from ..neumann_disk import torsion_g

DEFAULT_MODES = 24
MAX_MODES = 512
CERT_TOL = 1e-9
COND_LIMIT = 1e12
_QUAD_CAP = 20000


@dataclass(frozen=True)
class DirectSolution:
    """Flux densities, representation constant and field evaluator of a direct solve.

    ``masses`` holds the per-arc flux integrals; in the drift case they carry the
    ``exp(phi)`` weight.  ``certificate`` is the change in ``u(0)`` under the last
    refinement.
    """

    densities: Optional[tuple]
    c_eps: float
    field: object
    resolution: int
    masses: tuple
    config: TargetConfiguration
    certificate: float = 0.0
    drift: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    def __call__(self, x):
        return self.field(x)

    def flux(self, arc_index: int, t):
        """Physical flux ``du/dnu`` at arclength offset ``t`` from the arc center."""
        if self.densities is None:
            raise ValueError("pointwise flux is only available from the free solver")
        eps = self.config.arcs[arc_index].half_length
        return self.densities[arc_index](np.asarray(t, float) / eps) / eps


# --------------------------------------------------------------------------
# quadrature sizing


def _rho_complex(w: complex) -> float:
    """Bernstein-ellipse parameter of the point ``w`` relative to [-1, 1]."""
    s = np.sqrt(w * w - 1.0 + 0j)
    return float(max(abs(w + s), abs(w - s)))


def _nodes_for_rho(rho: float, tol: float = 1e-16, minimum: int = 32) -> int:
    if rho <= 1.0:
        return _QUAD_CAP
    m = int(math.ceil(-math.log(tol) / (2.0 * math.log(rho)))) + 8
    return int(min(max(m, minimum), _QUAD_CAP))


def _interval_distance(a: float, b: float) -> float:
    if b < -1.0:
        return -1.0 - b
    if a > 1.0:
        return a - 1.0
    return 0.0


def _cross_distance(arc_i: BoundaryArc, arc_j: BoundaryArc) -> float:
    """Distance from [-1, 1] of the kernel singularities of the (i, j) block in ``tau``."""
    base = wrap_angle(arc_i.center_angle - arc_j.center_angle)
    best = math.inf
    for k in (-1, 0, 1):
        delta = base + 2.0 * math.pi * k
        a = (delta - arc_i.half_length) / arc_j.half_length
        b = (delta + arc_i.half_length) / arc_j.half_length
        best = min(best, _interval_distance(a, b))
    return best


# --------------------------------------------------------------------------
# operator blocks


def log_block(arc_i: BoundaryArc, sigma, arc_j: BoundaryArc, order: int, same: bool) -> np.ndarray:
    """``K[k, n] = int ln|x_i(sigma_k) - x_j(tau)| T_n(tau) / sqrt(1 - tau^2) dtau``."""
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if same:
        eps = arc_i.half_length
        out = C.chebvander(sigma, order) * cheblog.l_eigenvalues(order)[None, :]
        out[:, 0] += math.pi * math.log(eps)
        nq = max(cheblog.quadrature_size(2.0 * math.pi / eps - 2.0), 2 * order + 2)
        t = gauss_nodes(nq)
        half = 0.5 * eps * (sigma[:, None] - t[None, :])
        with np.errstate(invalid="ignore", divide="ignore"):
            sinc = np.where(half == 0.0, 1.0, np.sin(half) / half)
        corr = np.log(sinc)
        return out + (math.pi / nq) * corr @ C.chebvander(t, order)
    dist = _cross_distance(arc_i, arc_j)
    if dist <= 0.0:
        raise ValueError("arcs overlap")
    nq = max(cheblog.quadrature_size(dist, cap=_QUAD_CAP), 2 * order + 2)
    t = gauss_nodes(nq)
    angle = (arc_i.center_angle + arc_i.half_length * sigma[:, None]
             - arc_j.center_angle - arc_j.half_length * t[None, :])
    kern = np.log(2.0 * np.abs(np.sin(0.5 * angle)))
    return (math.pi / nq) * kern @ C.chebvander(t, order)


def log_row(x, arc_j: BoundaryArc, order: int) -> np.ndarray:
    """``int ln|x - x_j(tau)| T_n(tau) / sqrt(1 - tau^2) dtau`` for an interior ``x``."""
    x = np.asarray(x, dtype=float)
    r = math.hypot(x[0], x[1])
    if r == 0.0:
        out = np.zeros(order + 1)
        return out
    theta = math.atan2(x[1], x[0])
    w = complex(wrap_angle(theta - arc_j.center_angle), math.log(1.0 / r)) / arc_j.half_length
    nq = max(_nodes_for_rho(_rho_complex(w)), 2 * order + 2)
    t = gauss_nodes(nq)
    z = arc_point(arc_j.parametrize(t))
    kern = 0.5 * np.log((z[:, 0] - x[0]) ** 2 + (z[:, 1] - x[1]) ** 2)
    return (math.pi / nq) * kern @ C.chebvander(t, order)


def assemble(config: TargetConfiguration, order: int) -> np.ndarray:
    """Square system: Dirichlet rows per arc, then the flux constraint row."""
    n, m = len(config.arcs), order + 1
    size = n * m + 1
    a = np.zeros((size, size))
    sigma = gauss_nodes(m)
    for i, ai in enumerate(config.arcs):
        rows = slice(i * m, (i + 1) * m)
        for j, aj in enumerate(config.arcs):
            a[rows, j * m:(j + 1) * m] = -log_block(ai, sigma, aj, order, i == j) / math.pi
        a[rows, -1] = 1.0
        a[-1, i * m] = math.pi
    return a


def _rhs(config, order):
    b = np.zeros(len(config.arcs) * (order + 1) + 1)
    b[-1] = -config.domain_area
    return b


# --------------------------------------------------------------------------
# solver


class _FreeField:
    """Representation-formula evaluator; reentrant."""

    def __init__(self, config, densities, c_eps):
        self.config = config
        self.densities = densities
        self.c_eps = c_eps

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = float(torsion_g(x)) + self.c_eps
        for arc, dens in zip(self.config.arcs, self.densities):
            total -= float(log_row(x, arc, dens.order) @ dens.coeffs) / math.pi
        return total

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.value(x)
        flat = x.reshape(-1, 2)
        return np.array([self.value(p) for p in flat]).reshape(x.shape[:-1])


def _solve_free(config: TargetConfiguration, order: int):
    a = assemble(config, order)
    lu, piv = linalg.lu_factor(a)
    anorm = np.linalg.norm(a, 1)
    rcond = linalg.lapack.dgecon(lu, anorm, norm="1")[0]
    cond = math.inf if rcond == 0.0 else 1.0 / rcond
    if cond > COND_LIMIT:
        raise IllConditioned(f"condition estimate {cond:.3g} exceeds {COND_LIMIT:.0e}")
    x = linalg.lu_solve((lu, piv), _rhs(config, order))
    m = order + 1
    dens = tuple(ChebyshevDensity(x[i * m:(i + 1) * m]) for i in range(len(config.arcs)))
    return dens, float(x[-1]), cond


def solve_direct(config: TargetConfiguration, potential=None, N: Optional[int] = None, **drift_opts) -> DirectSolution:
    """Solve the mixed problem for ``config``; with a nonconstant potential the drift
    problem is solved on a polar finite-volume mesh instead.

    ``N`` modes per arc are used and certified against ``2N``; without ``N`` the
    order is doubled from a default until the certificate holds.
    """
    validate(config)
    if potential is not None and not potential.is_constant:
        from .drift import solve_drift
        return solve_drift(config, potential, **drift_opts)
    orders = [N] if N is not None else []
    order = N if N is not None else DEFAULT_MODES
    dens, c_eps, cond = _solve_free(config, order)
    origin = np.zeros(2)
    u0 = _FreeField(config, dens, c_eps).value(origin)
    while True:
        dens2, c2, cond2 = _solve_free(config, 2 * order)
        u2 = _FreeField(config, dens2, c2).value(origin)
        change = abs(u2 - u0)
        if change < CERT_TOL:
            break
        if orders or 2 * order >= MAX_MODES:
            raise NonConvergent(f"doubling N to {2 * order} moved u(0) by {change:.3g}")
        order, dens, c_eps, u0 = 2 * order, dens2, c2, u2
    field_ = _FreeField(config, dens, c_eps)
    return DirectSolution(
        densities=dens,
        c_eps=c_eps,
        field=field_,
        resolution=order,
        masses=tuple(d.mass for d in dens),
        config=config,
        certificate=change,
        extras={"condition": cond},
    )


def boundary_residual(sol: DirectSolution, probes: int = 50) -> float:
    """Max |u| over off-collocation points of every arc."""
    config = sol.config
    sigma = np.cos(np.linspace(0.0, math.pi, probes + 2)[1:-1] + 0.37 / probes)
    worst = 0.0
    for i, ai in enumerate(config.arcs):
        vals = np.full(len(sigma), sol.c_eps)
        for j, aj in enumerate(config.arcs):
            dens = sol.densities[j]
            vals -= log_block(ai, sigma, aj, dens.order, i == j) @ dens.coeffs / math.pi
        worst = max(worst, float(np.max(np.abs(vals))))
    return worst


def circle_mean(sol: DirectSolution, radius: float, points: int = 256) -> float:
    """Mean of ``u - (1 - |x|^2)/4`` over the circle of the given radius."""
    th = 2.0 * math.pi * np.arange(points) / points
    pts = radius * np.stack([np.cos(th), np.sin(th)], axis=-1)
    return float(np.mean(sol.field(pts)) - (1.0 - radius * radius) / 4.0)
