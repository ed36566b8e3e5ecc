"""
Log-kernel operators on [-1, 1] in a weighted Chebyshev basis.

Densities are stored as coefficients against ``T_n(t)/sqrt(1-t^2)`` and
smooth boundary data as plain Chebyshev series.  In this basis the operator

    L[phi](x) = int_{-1}^{1} ln|x - y| phi(y) dy

is diagonal:

    L[T_0/sqrt(1-y^2)] = -pi ln 2,       L[T_n/sqrt(1-y^2)] = -(pi/n) T_n,  n >= 1,

so applying and inverting it costs O(N).  Shifted kernels ``ln|d +- (s-t)|``
(two arcs a distance ``d`` apart in scaled units) are smooth and handled by
Gauss-Chebyshev quadrature, which absorbs the endpoint weight exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct

from .errors import SingularKernel

LN2 = math.log(2.0)
DEFAULT_ORDER = 64


def gauss_nodes(n_points: int) -> np.ndarray:
    """Chebyshev-Gauss nodes ``cos(pi (j + 1/2) / n)``, j = 0..n-1."""
    j = np.arange(n_points)
    return np.cos(np.pi * (j + 0.5) / n_points)


def coeffs_from_samples(values) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through samples at :func:`gauss_nodes`."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    c = dct(values, type=2, axis=-1) / n
    c[..., 0] *= 0.5
    return c


def l_eigenvalues(order: int) -> np.ndarray:
    """Diagonal of L on the weighted modes 0..order."""
    lam = np.empty(order + 1)
    lam[0] = -math.pi * LN2
    lam[1:] = -math.pi / np.arange(1, order + 1)
    return lam


def _pad(c, order):
    out = np.zeros(order + 1)
    m = min(order + 1, len(c))
    out[:m] = c[:m]
    return out


def _coeffs_equal(a, b) -> bool:
    return type(a) is type(b) and np.array_equal(a.coeffs, b.coeffs)


@dataclass(frozen=True, eq=False)
class ChebyshevDensity:
    """``phi(t) = sum_n coeffs[n] T_n(t) / sqrt(1 - t^2)`` on (-1, 1)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def mass(self) -> float:
        return math.pi * self.coeffs[0]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return C.chebval(t, self.coeffs) / np.sqrt(1.0 - t * t)

    def smooth_part(self, t):
        """``sqrt(1-t^2) * phi(t)``, bounded on the closed interval."""
        return C.chebval(np.asarray(t, dtype=float), self.coeffs)

    def norm(self) -> float:
        """Norm in X_1: ``(int sqrt(1-t^2) |phi|^2)^(1/2)``."""
        c = self.coeffs
        return math.sqrt(math.pi * c[0] ** 2 + 0.5 * math.pi * float(np.sum(c[1:] ** 2)))

    def reversed(self) -> "ChebyshevDensity":
        """The density ``t -> phi(-t)``."""
        sign = (-1.0) ** np.arange(len(self.coeffs))
        return ChebyshevDensity(sign * self.coeffs)

    def padded(self, order: int) -> "ChebyshevDensity":
        return ChebyshevDensity(_pad(self.coeffs, order))

    def __add__(self, other):
        n = max(self.order, other.order)
        return ChebyshevDensity(_pad(self.coeffs, n) + _pad(other.coeffs, n))

    def __mul__(self, scalar):
        return ChebyshevDensity(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    __eq__ = _coeffs_equal
    __hash__ = None

    def to_json(self) -> str:
        return json.dumps({"coeffs": self.coeffs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ChebyshevDensity":
        return cls(json.loads(text)["coeffs"])

    @classmethod
    def constant_mode(cls, c0: float = 1.0, order: int = 0) -> "ChebyshevDensity":
        return cls(_pad([c0], order))


@dataclass(frozen=True, eq=False)
class SmoothBoundaryData:
    """``psi(t) = sum_n coeffs[n] T_n(t)`` on [-1, 1]."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return C.chebval(np.asarray(x, dtype=float), self.coeffs)

    def derivative_u_coeffs(self) -> np.ndarray:
        """Coefficients of ``psi'`` in the second-kind basis: ``psi' = sum n b_n U_{n-1}``."""
        n = np.arange(1, len(self.coeffs))
        return n * self.coeffs[1:]

    def derivative_norm(self) -> float:
        """X_1 norm of ``psi'``; finite for every finite coefficient vector."""
        du = C.chebder(self.coeffs) if len(self.coeffs) > 1 else np.zeros(1)
        # sqrt(1-t^2) psi'(t)^2 integrated with Gauss-Chebyshev on the squared series
        m = 2 * len(self.coeffs) + 4
        t = gauss_nodes(m)
        w = np.pi / m
        return math.sqrt(w * float(np.sum((1 - t * t) * C.chebval(t, du) ** 2)))

    def padded(self, order: int) -> "SmoothBoundaryData":
        return SmoothBoundaryData(_pad(self.coeffs, order))

    def __add__(self, other):
        n = max(self.order, other.order)
        return SmoothBoundaryData(_pad(self.coeffs, n) + _pad(other.coeffs, n))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return SmoothBoundaryData(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    __eq__ = _coeffs_equal
    __hash__ = None

    @classmethod
    def from_function(cls, f, order: int = DEFAULT_ORDER) -> "SmoothBoundaryData":
        t = gauss_nodes(order + 1)
        return cls(coeffs_from_samples(f(t)))

    @classmethod
    def constant(cls, value: float, order: int = 0) -> "SmoothBoundaryData":
        return cls(_pad([value], order))


def mass(phi: ChebyshevDensity) -> float:
    """``int_{-1}^{1} phi``; only the zeroth mode carries mass."""
    return phi.mass


def pairing(phi: ChebyshevDensity, psi: SmoothBoundaryData) -> float:
    """``int_{-1}^{1} phi(t) psi(t) dt`` by Chebyshev orthogonality."""
    n = min(len(phi.coeffs), len(psi.coeffs))
    a, b = phi.coeffs[:n], psi.coeffs[:n]
    return math.pi * a[0] * b[0] + 0.5 * math.pi * float(np.dot(a[1:], b[1:]))


def apply_L(phi: ChebyshevDensity) -> SmoothBoundaryData:
    return SmoothBoundaryData(l_eigenvalues(phi.order) * phi.coeffs)


def invert_L(psi: SmoothBoundaryData) -> ChebyshevDensity:
    return ChebyshevDensity(psi.coeffs / l_eigenvalues(psi.order))


def finite_hilbert(u_coeffs, x):
    """Principal value ``int sqrt(1-y^2) g(y) / (x - y) dy`` for ``g = sum g_k U_k``.

    Uses ``int sqrt(1-y^2) U_{n-1}(y) / (x - y) dy = pi T_n(x)``.
    """
    g = np.asarray(u_coeffs, dtype=float)
    t_coeffs = np.concatenate([[0.0], g])
    return math.pi * C.chebval(np.asarray(x, dtype=float), t_coeffs)


def carleman_constant(psi: SmoothBoundaryData, x=None):
    """The constant ``a(psi)`` of the Carleman inversion formula.

    With ``x`` given, the defining expression ``psi(x) + L[h](x)`` is evaluated at
    those points (``h`` being the Hilbert-transform part of the inverse); the result
    does not depend on ``x``.  Without ``x`` the closed value ``b_0`` is returned.
    """
    if x is None:
        return float(psi.coeffs[0])
    # h = (1/pi^2) H[psi'] / sqrt(1-y^2); H[psi'] = pi sum n b_n T_n
    hilbert_t = np.concatenate([[0.0], psi.derivative_u_coeffs()])
    h = ChebyshevDensity(hilbert_t / math.pi)
    return psi(x) + apply_L(h)(x)


def carleman_inverse(psi: SmoothBoundaryData, x):
    """Pointwise Carleman formula for ``L^{-1}[psi](x)`` through :func:`finite_hilbert`."""
    x = np.asarray(x, dtype=float)
    w = np.sqrt(1.0 - x * x)
    hilbert = finite_hilbert(psi.derivative_u_coeffs(), x)
    return -hilbert / (math.pi ** 2 * w) - carleman_constant(psi) / (math.pi * LN2 * w)


def invert_scaled_L(psi: SmoothBoundaryData, eps: float) -> ChebyshevDensity:
    """Invert ``L + ln(eps) * mass(.)``, the log operator of an arc of half-length eps
    after rescaling to [-1, 1].

    The mass term is a rank-one perturbation along the constant function, so the
    inverse is ``L^{-1}`` corrected in the single direction ``L^{-1}[1]``.
    """
    base = invert_L(psi)
    unit = invert_L(SmoothBoundaryData.constant(1.0, psi.order))
    log_eps = math.log(eps)
    factor = log_eps * base.mass / (1.0 + log_eps * unit.mass)
    return ChebyshevDensity(base.coeffs - factor * unit.coeffs)


def apply_scaled_L(phi: ChebyshevDensity, eps: float) -> SmoothBoundaryData:
    out = apply_L(phi).coeffs.copy()
    out[0] += math.log(eps) * phi.mass
    return SmoothBoundaryData(out)


def condition_number(order: int = DEFAULT_ORDER) -> float:
    """Condition number of the discrete L on modes 0..order."""
    lam = np.abs(l_eigenvalues(order))
    return float(lam.max() / lam.min())


def bernstein_rho(distance: float) -> float:
    """Bernstein ellipse parameter for a singularity ``distance`` beyond an endpoint of [-1, 1]."""
    a = 1.0 + distance
    return a + math.sqrt(a * a - 1.0)


def quadrature_size(distance: float, tol: float = 1e-16, minimum: int = 32, cap: int = 4096) -> int:
    """Gauss-Chebyshev node count giving ``rho^{-2M} < tol`` for an analytic integrand."""
    if distance <= 0.0:
        raise SingularKernel("kernel singularity touches the interval")
    rho = bernstein_rho(distance)
    m = int(math.ceil(-math.log(tol) / (2.0 * math.log(rho)))) + 8
    return int(min(max(m, minimum), cap))


def shifted_kernel_matrix(d: float, s, order: int, orientation: int = 1, n_quad=None) -> np.ndarray:
    """Matrix ``K[k, n] = int ln|d + o(s_k - t)| T_n(t)/sqrt(1-t^2) dt`` at points ``s``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    o = 1.0 if orientation >= 0 else -1.0
    # kernel vanishes at t = s + o*d; nearest approach to [-1, 1]
    root = s + o * d
    dist = float(np.min(np.abs(root)) - 1.0)
    if dist <= 0.0:
        raise SingularKernel(f"ln|d +- (s - t)| vanishes inside [-1, 1] for d = {d}")
    if n_quad is None:
        n_quad = max(quadrature_size(dist), 2 * order + 2)
    t = gauss_nodes(n_quad)
    kern = np.log(np.abs(d + o * (s[:, None] - t[None, :])))
    basis = C.chebvander(t, order)
    return (np.pi / n_quad) * kern @ basis


def apply_shifted_L(d: float, phi: ChebyshevDensity, orientation: int = 1, order=None) -> SmoothBoundaryData:
    """``s -> int ln|d + o(s - t)| phi(t) dt`` as a Chebyshev series in ``s``."""
    if order is None:
        order = max(phi.order, DEFAULT_ORDER)
    s = gauss_nodes(order + 1)
    vals = shifted_kernel_matrix(d, s, phi.order, orientation) @ phi.coeffs
    return SmoothBoundaryData(coeffs_from_samples(vals))
