"""
Mixed Dirichlet-Neumann eigenvalues as characteristic values of the arc operator.

``A(lambda)[phi](x) = sum_j int_{arc j} N^w(x, z) phi_j(z) ds`` with ``w^2 = lambda``
is discretized exactly as in the direct solver: the log part of the kernel is
diagonal in the weighted Chebyshev basis, the smooth part (including every
resonant pole) is integrated by Gauss-Chebyshev quadrature.  Eigenvalues are the
``lambda`` at which the smallest singular value of ``A`` vanishes.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import chebyshev as C

from ..cheblog import gauss_nodes
from ..errors import MultipleRootsSuspected, NoRootInWindow
from ..geometry import TargetConfiguration, arc_point, validate
from ..neumann_disk import DEFAULT_PROVIDER, neumann_eigenpairs
from .direct import log_block

DEFAULT_MODES = 16
ROOT_TOL = 1e-8
SINGULAR_THRESHOLD = 1e-6
_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


class CharacteristicOperator:
    """``lambda -> A(lambda)`` for a fixed arc layout; the log part is cached."""

    def __init__(self, config: TargetConfiguration, order: int = DEFAULT_MODES, provider=None):
        validate(config)
        self.config = config
        self.order = order
        self.provider = DEFAULT_PROVIDER if provider is None else provider
        m = order + 1
        n = len(config.arcs)
        self.sigma = gauss_nodes(m)
        self.n_quad = 2 * m
        tq = gauss_nodes(self.n_quad)
        self._basis = (math.pi / self.n_quad) * C.chebvander(tq, order)
        self._log = np.zeros((n * m, n * m))
        angles_s = [a.parametrize(self.sigma) for a in config.arcs]
        self._angles_t = [a.parametrize(tq) for a in config.arcs]
        self._angles_s = angles_s
        for i, ai in enumerate(config.arcs):
            for j, aj in enumerate(config.arcs):
                self._log[i * m:(i + 1) * m, j * m:(j + 1) * m] = log_block(ai, self.sigma, aj, order, i == j)

    def matrix(self, lam: float) -> np.ndarray:
        m = self.order + 1
        n = len(self.config.arcs)
        a = -self._log / math.pi
        for i in range(n):
            r = np.ones((m, self.n_quad))
            for j in range(n):
                dth = self._angles_s[i][:, None] - self._angles_t[j][None, :]
                smooth = self.provider.smooth_part_polar(lam, r, dth)
                a[i * m:(i + 1) * m, j * m:(j + 1) * m] += smooth @ self._basis
        return a

    def sigma_min(self, lam: float) -> float:
        """Smallest singular value relative to the spectral norm."""
        s = np.linalg.svd(self.matrix(lam), compute_uv=False)
        return float(s[-1] / s[0])


def default_window(j0: int) -> tuple:
    """``(lambda0, midpoint to the next distinct eigenvalue)`` for the ``j0``-th mode."""
    pairs = neumann_eigenpairs(j0 + 8)
    lam0 = pairs[j0 - 1].eigenvalue
    higher = [p.eigenvalue for p in pairs if p.eigenvalue > lam0 + 1e-8]
    return lam0, 0.5 * (lam0 + higher[0])


def _golden_min(f, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def _quadratic_vertex(f, x, h):
    """Vertex of the parabola through ``f^2`` at ``x - h, x, x + h``."""
    y = np.array([f(x - h) ** 2, f(x) ** 2, f(x + h) ** 2])
    denom = y[0] - 2.0 * y[1] + y[2]
    if denom <= 0.0:
        return x
    return x + 0.5 * h * (y[0] - y[2]) / denom


def eigen_direct(j0: int, config: TargetConfiguration, window=None, order: int = DEFAULT_MODES,
                 samples: int = 64) -> float:
    """Perturbed eigenvalue in ``window`` (default: above the ``j0``-th Neumann eigenvalue).

    Sign changes of ``det A`` on a grid graded toward the lower edge bracket the
    characteristic values; each bracket is refined on the smallest singular value.
    """
    if window is None:
        window = default_window(j0)
    lo, hi = float(window[0]), float(window[1])
    op = CharacteristicOperator(config, order)
    f = op.sigma_min
    # open window: stay off the resonant endpoints
    width = hi - lo
    grid = lo + width * np.geomspace(1e-6, 1.0 - 1e-6, samples)
    signs = np.array([np.linalg.slogdet(op.matrix(x))[0] for x in grid])
    brackets = [(grid[k], grid[k + 1]) for k in range(samples - 1) if signs[k] * signs[k + 1] < 0]
    roots = []
    for a, b in brackets:
        x, _ = _golden_min(f, a, b, ROOT_TOL * max(1.0, abs(a)))
        x = _quadratic_vertex(f, x, min(x - a, b - x, 1e-6 * (1.0 + abs(x))) or 1e-9)
        if f(x) < SINGULAR_THRESHOLD:
            roots.append(x)
    if not roots:
        raise NoRootInWindow(f"no characteristic value in ({lo:.6g}, {hi:.6g})")
    if len(roots) > 1:
        raise MultipleRootsSuspected(f"characteristic values at {roots}")
    return float(roots[0])
