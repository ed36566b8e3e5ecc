"""
Neumann kernels of the unit disk.

Closed forms
------------
* boundary Neumann function  ``N(x, z) = -(1/pi) ln|x - z|``  (regular part vanishes)
* torsion function           ``g(x) = (1 - |x|^2) / 4``
* dipole corrector           ``Phi(x, x*) = ln|x - x*| + (1 - |x|^2) / 4``

Modified (Helmholtz) kernel
---------------------------
For a boundary source ``z`` the kernel ``N^w`` of ``Delta + w^2`` with zero
Neumann data is a superposition of angular modes,

    N^w(x, z) = sum_m (eps_m / 2 pi) cos(m (theta_x - theta_z)) f_m(r),
    f_m(r) = J_m(w r) / (w J_m'(w)),          eps_0 = 1, eps_m = 2,

which is the eigenfunction expansion ``sum_j u_j(x) u_j(z) / (lambda_j - w^2)``
resummed over the radial index.  Since ``f_m(r) -> r^m / m`` the series
``(1/pi) sum r^m cos(m dtheta) / m`` carrying the logarithmic singularity is
split off exactly; the rest decays like ``m^-3`` and its leading asymptotic
term is summed in closed form with the dilogarithm, leaving an ``m^-5`` tail.
"""
from __future__ import annotations

import abc
import csv
import functools
import io
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import CoincidentPoints, ResonantFrequency, RootFindFailure

DEFAULT_M_ANGULAR = 64
DEFAULT_K_RADIAL = 64
RESONANCE_TOL = 1e-8


# --------------------------------------------------------------------------
# Bessel derivative zeros


def _jp(m, x):
    return special.jvp(m, x)


def _jpp(m, x):
    # Bessel ODE: x^2 J'' + x J' + (x^2 - m^2) J = 0
    return -_jp(m, x) / x - (1.0 - (m * m) / (x * x)) * special.jv(m, x)


def _refine_root(m, a, b, tol=1e-13, maxiter=200):
    fa = _jp(m, a)
    fb = _jp(m, b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise RootFindFailure(f"no sign change of J'_{m} on [{a}, {b}]")
    x = 0.5 * (a + b)
    for _ in range(maxiter):
        fx = _jp(m, x)
        if fx == 0.0:
            return x
        if fa * fx < 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        step = fx / _jpp(m, x)
        xn = x - step
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= tol * max(1.0, abs(x)):
            return xn
        x = xn
    raise RootFindFailure(f"zero of J'_{m} not refined to {tol} in [{a}, {b}]")


@functools.lru_cache(maxsize=None)
def bessel_jp_zeros(m: int, xmax: float) -> tuple:
    """Positive zeros of ``J_m'`` below ``xmax`` (x = 0 excluded), ascending."""
    if xmax <= 0:
        return ()
    start = max(1e-3, m - 1.0) if m > 0 else 0.5
    # zeros are spaced about pi apart; a 0.05 scan cannot skip a pair
    grid = np.arange(start, xmax + 0.05, 0.05)
    vals = _jp(m, grid)
    roots = []
    for k in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        root = _refine_root(m, grid[k], grid[k + 1])
        if root <= xmax:
            roots.append(root)
    return tuple(roots)


# --------------------------------------------------------------------------
# eigenpairs


@dataclass(frozen=True)
class NeumannEigenpair:
    """Normalized Neumann eigenfunction ``c J_m(sqrt(lambda) r) cos|sin(m theta)``."""

    angular_index: int
    radial_index: int
    eigenvalue: float
    parity: str
    norm_const: float

    @property
    def root(self) -> float:
        return math.sqrt(self.eigenvalue)

    def _angular(self, theta):
        m = self.angular_index
        if m == 0:
            return np.ones_like(theta)
        return np.cos(m * theta) if self.parity == "cos" else np.sin(m * theta)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        theta = np.arctan2(x[..., 1], x[..., 0])
        radial = special.jv(self.angular_index, self.root * r)
        return self.norm_const * radial * self._angular(theta)

    def boundary_value(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.norm_const * special.jv(self.angular_index, self.root) * self._angular(theta)

    def radial_profile(self, r):
        return self.norm_const * special.jv(self.angular_index, self.root * np.asarray(r, float))

    def residual(self) -> float:
        """|J_m'(sqrt(lambda))|, the Neumann boundary-condition residual."""
        if self.eigenvalue == 0.0:
            return 0.0
        return abs(float(_jp(self.angular_index, self.root)))


def _norm_const(m: int, j: float) -> float:
    if j == 0.0:
        return 1.0 / math.sqrt(math.pi)
    jm = special.jv(m, j)
    if m == 0:
        return 1.0 / (math.sqrt(math.pi) * abs(jm))
    return 1.0 / math.sqrt(0.5 * math.pi * (1.0 - m * m / (j * j)) * jm * jm)


def eigenpairs_below(lambda_max: float, m_max=None) -> list:
    """All Neumann eigenpairs with eigenvalue <= lambda_max, sorted by (lambda, m, parity)."""
    xmax = math.sqrt(max(lambda_max, 0.0))
    if m_max is None:
        m_max = int(xmax) + 2
    pairs = [NeumannEigenpair(0, 1, 0.0, "cos", 1.0 / math.sqrt(math.pi))]
    for m in range(m_max + 1):
        for k, j in enumerate(bessel_jp_zeros(m, xmax), start=1):
            lam = j * j
            c = _norm_const(m, j)
            if m == 0:
                pairs.append(NeumannEigenpair(0, k + 1, lam, "cos", c))
            else:
                pairs.append(NeumannEigenpair(m, k, lam, "cos", c))
                pairs.append(NeumannEigenpair(m, k, lam, "sin", c))
    pairs.sort(key=lambda p: (p.eigenvalue, p.angular_index, p.parity))
    return pairs


def neumann_eigenpairs(count: int) -> list:
    """First ``count`` Neumann eigenpairs of the unit disk; index 0 is the constant mode."""
    if count < 1:
        raise ValueError("count must be >= 1")
    # Weyl: about lambda/4 eigenvalues below lambda on the unit disk
    lam_max = 4.0 * count + 20.0 * math.sqrt(count) + 20.0
    while True:
        pairs = eigenpairs_below(lam_max)
        if len(pairs) > count:
            # keep complete degenerate groups out of the cut decision
            return pairs[:count]
        lam_max *= 2.0


def is_simple(pairs, index: int, tol: float = 1e-8) -> bool:
    lam = pairs[index].eigenvalue
    return sum(abs(p.eigenvalue - lam) < tol * (1.0 + lam) for p in pairs) == 1


def eigenpairs_csv(pairs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "k", "parity", "lambda", "c"])
    for p in pairs:
        w.writerow([p.angular_index, p.radial_index, p.parity,
                    f"{p.eigenvalue:.15g}", f"{p.norm_const:.15g}"])
    return buf.getvalue()


# --------------------------------------------------------------------------
# closed forms


def _as_points(x):
    return np.asarray(x, dtype=float)


def boundary_kernel(x, z):
    """``-(1/pi) ln|x - z|`` for interior ``x`` and boundary ``z``."""
    x, z = _as_points(x), _as_points(z)
    dist = np.hypot(*np.moveaxis(x - z, -1, 0))
    if np.any(dist == 0.0):
        raise CoincidentPoints("x coincides with the boundary source z")
    out = -np.log(dist) / math.pi
    return float(out) if np.ndim(out) == 0 else out


def torsion_g(x):
    x = _as_points(x)
    out = 0.25 * (1.0 - np.sum(x * x, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def corrector_phi(x, x_star):
    """Dipole corrector ``ln|x - x*| + (1 - |x|^2)/4``; solves ``Delta Phi = -1``."""
    x, xs = _as_points(x), _as_points(x_star)
    dist = np.hypot(*np.moveaxis(x - xs, -1, 0))
    if np.any(dist == 0.0):
        raise CoincidentPoints("x coincides with the arc center")
    out = np.log(dist) + 0.25 * (1.0 - np.sum(x * x, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def homogenized_corrector(x):
    """Boundary average of the dipole corrector.

    The circle average of ``ln|x - z|`` vanishes for ``|x| < 1``, leaving the
    torsion function.
    """
    return torsion_g(x)


# --------------------------------------------------------------------------
# modified kernel


def _li2(w):
    return special.spence(1.0 - w)


def _asymptotic_sums(r, dtheta):
    """Closed-form ``sum_{m>=1} a_m(r) cos(m dtheta) / omega^2`` for the leading
    large-m behaviour ``a_m = omega^2 r^m [1/(2 m^2 (m+1)) + (1-r^2)/(4 m (m+1))]``."""
    w = r * np.exp(1j * dtheta)
    one_w = 1.0 - w
    at_one = np.abs(one_w) == 0.0
    safe_w = np.where(w == 0, 1.0, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        log1w = np.log(np.where(at_one, 1.0, one_w))
        # ln(1-w) (1 - 1/w) -> 0 as w -> 1
        mixed = np.where(at_one, 0.0, log1w * (1.0 - 1.0 / safe_w))
    s_a = _li2(w) + mixed - 1.0           # sum w^m / (m^2 (m+1))
    s_b = -mixed + 1.0                    # sum w^m / (m (m+1))
    small = np.abs(w) < 1e-3
    if np.any(small):
        ws = w[small]
        s_a = np.where(small, 0, s_a)
        s_b = np.where(small, 0, s_b)
        s_a[small] = ws / 2 + ws ** 2 / 12 + ws ** 3 / 36
        s_b[small] = ws / 2 + ws ** 2 / 6 + ws ** 3 / 12
    return np.real(0.5 * s_a + 0.25 * (1.0 - r * r) * s_b)


def _asymptotic_terms(m, r, omega2):
    return omega2 * r ** m * (0.5 / (m * m * (m + 1.0)) + 0.25 * (1.0 - r * r) / (m * (m + 1.0)))


def radial_mode(m: int, r, omega2: float):
    """``f_m(r) = J_m(w r) / (w J_m'(w))`` (modified Bessel form for ``w^2 < 0``)."""
    r = np.asarray(r, dtype=float)
    if omega2 == 0.0:
        if m == 0:
            raise ResonantFrequency("w^2 = 0 is the constant Neumann eigenvalue")
        return r ** m / m
    if omega2 > 0.0:
        w = math.sqrt(omega2)
        return special.jv(m, w * r) / (w * special.jvp(m, w))
    k = math.sqrt(-omega2)
    return special.iv(m, k * r) / (k * special.ivp(m, k))


class KernelProvider(abc.ABC):
    """Kernel interface used by the solvers; only the unit disk is provided."""

    domain_area: float
    perimeter: float

    @abc.abstractmethod
    def boundary_kernel(self, x, z): ...

    @abc.abstractmethod
    def torsion_g(self, x): ...

    @abc.abstractmethod
    def corrector_phi(self, x, x_star): ...

    @abc.abstractmethod
    def modified_boundary_kernel(self, omega2, x, z): ...


class DiskKernelProvider(KernelProvider):
    """Neumann kernels of the unit disk with configurable truncation orders."""

    domain_area = math.pi
    perimeter = 2.0 * math.pi

    def __init__(self, m_angular: int = DEFAULT_M_ANGULAR, k_radial: int = DEFAULT_K_RADIAL):
        self.m_angular = int(m_angular)
        self.k_radial = int(k_radial)
        self._lock = threading.Lock()
        self._tables = {}

    boundary_kernel = staticmethod(boundary_kernel)
    torsion_g = staticmethod(torsion_g)
    corrector_phi = staticmethod(corrector_phi)
    homogenized_corrector = staticmethod(homogenized_corrector)

    def eigenpairs_below(self, lambda_max: float) -> list:
        key = round(float(lambda_max), 6)
        table = self._tables.get(key)
        if table is None:
            table = tuple(eigenpairs_below(lambda_max, m_max=None))
            with self._lock:
                self._tables.setdefault(key, table)
        return list(table)

    def check_resonance(self, omega2: float, exclude=None):
        for p in self.eigenpairs_below(max(omega2, 0.0) + 1.0):
            if exclude is not None and abs(p.eigenvalue - exclude) < 1e-12 * (1 + exclude):
                continue
            if abs(p.eigenvalue - omega2) < RESONANCE_TOL * (1.0 + abs(omega2)):
                raise ResonantFrequency(f"w^2 = {omega2} is within tolerance of eigenvalue {p.eigenvalue}")

    @staticmethod
    def _polar(x, z):
        x, z = _as_points(x), _as_points(z)
        r = np.hypot(x[..., 0], x[..., 1])
        dtheta = np.arctan2(x[..., 1], x[..., 0]) - np.arctan2(z[..., 1], z[..., 0])
        r, dtheta = np.broadcast_arrays(r, dtheta)
        return r.astype(float), dtheta.astype(float)

    def smooth_part_polar(self, omega2: float, r, dtheta):
        """``N^w + (1/pi) ln|x - z|`` for ``x = r e^{i(theta_z + dtheta)}`` and boundary ``z``.

        Includes every resonant pole; no resonance check is made here.
        """
        r = np.asarray(r, dtype=float)
        dtheta = np.asarray(dtheta, dtype=float)
        out = radial_mode(0, r, omega2) / (2.0 * math.pi)
        if omega2 == 0.0:
            return np.broadcast_to(out, np.broadcast(r, dtheta).shape).copy()
        acc = np.zeros(np.broadcast(r, dtheta).shape)
        for m in range(1, self.m_angular + 1):
            fm = radial_mode(m, r, omega2)
            acc += (fm - r ** m / m - _asymptotic_terms(m, r, omega2)) * np.cos(m * dtheta)
        acc += omega2 * _asymptotic_sums(r * np.ones_like(dtheta), dtheta * np.ones_like(r))
        return out + acc / math.pi

    def modified_boundary_kernel(self, omega2: float, x, z):
        """``N^w_{dOmega}(x, z)`` with ``w^2 = omega2`` for interior or boundary ``x``."""
        self.check_resonance(omega2)
        r, dtheta = self._polar(x, z)
        chord = np.hypot(r * np.cos(dtheta) - 1.0, r * np.sin(dtheta))
        if np.any(chord == 0.0):
            raise CoincidentPoints("x coincides with the boundary source z")
        out = -np.log(chord) / math.pi + self.smooth_part_polar(omega2, r, dtheta)
        return float(out) if np.ndim(out) == 0 else out

    def _pole(self, pair, x, z):
        return pair(x) * pair(z)

    def regular_part(self, omega2: float, x, z, pole=None, h: float = 1e-3):
        """Holomorphic remainder after removing the log and one resonant pole term.

        ``pole`` is the :class:`NeumannEigenpair` whose rank-one term is subtracted.
        At ``omega2`` equal to its eigenvalue the symmetric limit is taken with a
        Richardson-extrapolated central average.
        """
        r, dtheta = self._polar(x, z)
        if pole is None:
            self.check_resonance(omega2)
            return self.smooth_part_polar(omega2, r, dtheta)
        lam0 = pole.eigenvalue
        pole_vals = self._pole(pole, x, z)

        def rem(w2):
            return self.smooth_part_polar(w2, r, dtheta) - pole_vals / (lam0 - w2)

        if abs(omega2 - lam0) > 1e-6 * (1.0 + lam0):
            self.check_resonance(omega2, exclude=lam0)
            return rem(omega2)
        self.check_resonance(lam0 + 2 * h, exclude=None)
        hs = h * (1.0 + lam0)

        def central(step):
            return 0.5 * (rem(lam0 + step) + rem(lam0 - step))

        return (4.0 * central(0.5 * hs) - central(hs)) / 3.0

    def spectral_sum(self, omega2: float, x, z, k_radial=None):
        """Truncated eigenfunction sum ``sum u_j(x) u_j(z) / (lambda_j - w^2)``.

        Converges slowly when ``x`` is near the boundary; used as a cross-check of
        :meth:`modified_boundary_kernel` at interior points.
        """
        k_radial = self.k_radial if k_radial is None else k_radial
        r, dtheta = self._polar(x, z)
        total = np.zeros_like(r)
        xmax = (k_radial + self.m_angular / 2 + 2) * math.pi
        for m in range(self.m_angular + 1):
            zeros = bessel_jp_zeros(m, xmax)[:k_radial]
            roots = ([0.0] + list(zeros))[:k_radial] if m == 0 else zeros
            for j in roots:
                lam = j * j
                c = _norm_const(m, j)
                if lam == omega2:
                    raise ResonantFrequency(f"w^2 = {omega2} is an eigenvalue")
                radial = c * c * special.jv(m, j * r) * special.jv(m, j)
                total += radial * np.cos(m * dtheta) / (lam - omega2)
        return total


DEFAULT_PROVIDER = DiskKernelProvider()


def modified_boundary_kernel(omega2: float, x, z):
    return DEFAULT_PROVIDER.modified_boundary_kernel(omega2, x, z)
