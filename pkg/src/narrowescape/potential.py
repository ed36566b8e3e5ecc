"""
Drift potentials ``phi`` with force field ``F = grad(phi)``.

Only affine potentials have a configuration-file form; any smooth potential can
be supplied in code through :class:`Potential` with explicit callables.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class Potential:
    """``phi`` and its gradient, both vectorized over trailing coordinate axis 2."""

    value: Callable
    gradient: Callable
    kind: str = "custom"
    coeffs: tuple = ()

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def grad(self, x):
        return self.gradient(np.asarray(x, dtype=float))

    @property
    def is_constant(self) -> bool:
        return self.kind == "none" or (self.kind == "linear" and not any(self.coeffs[1:]))

    def shifted(self, c: float) -> "Potential":
        """The same force field with ``phi + c``."""
        if self.kind in ("none", "linear"):
            k = list(self.affine_coeffs())
            k[0] += c
            return linear(k)
        return Potential(lambda x: self.value(x) + c, self.gradient, "custom")

    def affine_coeffs(self) -> tuple:
        if self.kind == "none":
            return (0.0, 0.0, 0.0)
        if self.kind == "linear":
            return self.coeffs
        raise ValueError("potential is not affine")

    def to_dict(self) -> dict:
        if self.kind == "none":
            return {"type": "none", "coeffs": []}
        if self.kind == "linear":
            return {"type": "linear", "coeffs": list(self.coeffs)}
        raise ValueError("custom potentials have no serialized form")


def none() -> Potential:
    zero = lambda x: np.zeros(np.shape(x)[:-1])
    return Potential(zero, lambda x: np.zeros_like(x), "none")


def linear(coeffs) -> Potential:
    """``phi(z) = c + a1 z1 + a2 z2`` from ``[c, a1, a2]`` (or ``[a1, a2]`` with ``c = 0``)."""
    k = [float(v) for v in coeffs]
    if len(k) == 2:
        k = [0.0] + k
    if len(k) != 3:
        raise ValueError(f"linear potential takes 2 or 3 coefficients, got {len(k)}")
    c, a1, a2 = k
    a = np.array([a1, a2])

    def value(x):
        return c + x[..., 0] * a1 + x[..., 1] * a2

    def gradient(x):
        return np.broadcast_to(a, np.shape(x)).copy()

    return Potential(value, gradient, "linear", tuple(k))


def from_dict(doc: Optional[dict]) -> Potential:
    if doc is None:
        return none()
    kind = doc.get("type", "none")
    if kind == "none":
        return none()
    if kind == "linear":
        return linear(doc.get("coeffs", []))
    raise ValueError(f"unknown potential type {kind!r}")
