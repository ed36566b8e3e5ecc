"""
Coupled log-kernel system for clustered arcs.

For ``n`` arcs of common half-length ``eps`` with centers ``s_i`` the scaled
offsets ``d_ij = (s_i - s_j)/eps`` define the block operator

    A = (L_ij),   L_ij[phi](s) = int_{-1}^{1} ln|d_ij + s - t| phi(t) dt,

with ``L_ii = L``.  The interaction coefficients are the masses of
``A^{-1}(1, ..., 1)``.  Each density is expanded in the weighted Chebyshev
basis; diagonal blocks are exact, off-diagonal kernels are analytic for
``|d_ij| > 2`` and are integrated by Gauss-Chebyshev quadrature.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import linalg

from . import cheblog
from .cheblog import ChebyshevDensity, gauss_nodes
from .errors import IllConditioned, InvalidGap, NonConvergent, SingularKernel

DEFAULT_ORDER = 64
MAX_ORDER = 1024
COND_LIMIT = 1e12


@dataclass(frozen=True)
class ClusterGeometry:
    """Scaled offset matrix ``d_ij = (s_i - s_j)/eps``."""

    offsets: np.ndarray

    def __post_init__(self):
        d = np.array(self.offsets, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("offsets must be a square matrix")
        if not np.allclose(d, -d.T, atol=1e-12, rtol=0.0):
            raise ValueError("offsets must be antisymmetric")
        off = np.abs(d[~np.eye(len(d), dtype=bool)])
        if off.size and np.min(off) <= 2.0:
            raise InvalidGap(f"scaled gaps must exceed 2, got min |d_ij| = {np.min(off)}")
        d.setflags(write=False)
        object.__setattr__(self, "offsets", d)

    @property
    def n(self) -> int:
        return self.offsets.shape[0]

    @classmethod
    def from_positions(cls, positions) -> "ClusterGeometry":
        """Offsets from scaled arc centers ``s_i / eps``."""
        p = np.asarray(positions, dtype=float)
        return cls(p[:, None] - p[None, :])

    @classmethod
    def pair(cls, d: float) -> "ClusterGeometry":
        return cls.from_positions([0.0, d])

    def min_gap(self) -> float:
        off = np.abs(self.offsets[~np.eye(self.n, dtype=bool)])
        return float(np.min(off)) if off.size else math.inf

    def permuted(self, perm) -> "ClusterGeometry":
        perm = np.asarray(perm)
        return ClusterGeometry(self.offsets[np.ix_(perm, perm)])


@dataclass(frozen=True)
class ClusterSolution:
    densities: tuple
    alphas: np.ndarray
    condition_estimate: float
    order: int
    residual: float

    def to_dict(self) -> dict:
        return {"alphas": [float(a) for a in self.alphas], "condition": float(self.condition_estimate)}


def default_order(geom: ClusterGeometry) -> int:
    """Truncation adapted to the closest approach of neighbouring arcs."""
    gap = geom.min_gap()
    if not math.isfinite(gap):
        return DEFAULT_ORDER
    rho = cheblog.bernstein_rho(gap - 2.0)
    return int(min(MAX_ORDER, max(DEFAULT_ORDER, math.ceil(30.0 / math.log(rho)))))


def assemble_system(geom: ClusterGeometry, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Collocation matrix of ``A`` on Chebyshev-Gauss nodes, ``n(N+1)`` square.

    Row block ``i`` holds the values at the nodes ``s_k`` of the ``i``-th equation;
    column block ``j`` the weighted-Chebyshev coefficients of ``phi_j``.
    """
    n, m = geom.n, order + 1
    s = gauss_nodes(m)
    tmat = C.chebvander(s, order)
    diag = tmat * cheblog.l_eigenvalues(order)[None, :]
    a = np.zeros((n * m, n * m))
    for i in range(n):
        a[i * m:(i + 1) * m, i * m:(i + 1) * m] = diag
        for j in range(n):
            if i == j:
                continue
            d = geom.offsets[i, j]
            if abs(d) <= 2.0:
                raise SingularKernel(f"|d_{i}{j}| = {abs(d)} <= 2")
            a[i * m:(i + 1) * m, j * m:(j + 1) * m] = cheblog.shifted_kernel_matrix(d, s, order)
    return a


def apply_system(geom: ClusterGeometry, densities, s) -> np.ndarray:
    """Evaluate ``(A phi)_i(s)`` at arbitrary points ``s``; shape (n, len(s))."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros((geom.n, len(s)))
    for i in range(geom.n):
        out[i] = cheblog.apply_L(densities[i])(s)
        for j in range(geom.n):
            if i != j:
                k = cheblog.shifted_kernel_matrix(geom.offsets[i, j], s, densities[j].order)
                out[i] += k @ densities[j].coeffs
    return out


def _solve_once(geom, order):
    a = assemble_system(geom, order)
    lu, piv = linalg.lu_factor(a)
    rhs = np.ones(a.shape[0])
    x = linalg.lu_solve((lu, piv), rhs)
    # 1-norm condition estimate from the factorization
    anorm = np.linalg.norm(a, 1)
    rcond = linalg.lapack.dgecon(lu, anorm, norm="1")[0]
    cond = math.inf if rcond == 0 else 1.0 / rcond
    m = order + 1
    dens = tuple(ChebyshevDensity(x[i * m:(i + 1) * m]) for i in range(geom.n))
    resid = float(np.max(np.abs(a @ x - rhs)))
    return dens, cond, resid


def solve_cluster(geom: ClusterGeometry, order=None, check: bool = True) -> ClusterSolution:
    """Solve ``A phi = (1, ..., 1)`` and return densities and interaction coefficients.

    With ``check`` the solve is repeated at twice the order; doubling must move
    each coefficient by less than 1e-6.
    """
    if order is None:
        order = default_order(geom)
    dens, cond, resid = _solve_once(geom, order)
    if cond > COND_LIMIT:
        raise IllConditioned(f"condition estimate {cond:.3g} exceeds {COND_LIMIT:.0e}")
    alphas = np.array([d.mass for d in dens])
    if check:
        dens2, cond2, _ = _solve_once(geom, 2 * order)
        alphas2 = np.array([d.mass for d in dens2])
        drift = float(np.max(np.abs(alphas2 - alphas)))
        if drift > 1e-6:
            raise NonConvergent(f"doubling the order moved alpha by {drift:.3g}")
    return ClusterSolution(dens, alphas, cond, order, resid)


class _AlphaCache:
    """Read-through cache for the two-arc coefficient; values are written whole."""

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    def get(self, d: float, order):
        key = (round(float(d), 12), order)
        with self._lock:
            hit = self._data.get(key)
        if hit is not None:
            return hit
        value = float(solve_cluster(ClusterGeometry.pair(d), order).alphas[0])
        with self._lock:
            self._data.setdefault(key, value)
        return value

    def clear(self):
        with self._lock:
            self._data.clear()


ALPHA_CACHE = _AlphaCache()


def alpha_of_d(d: float, order=None) -> float:
    """Interaction coefficient of two equal arcs whose centers are ``d`` half-lengths apart."""
    if not d > 2.0:
        raise InvalidGap(f"d must exceed 2, got {d}")
    return ALPHA_CACHE.get(d, order)
