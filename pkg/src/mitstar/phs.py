"""Prolate hyperspheroid geometry for informed and estimated-informed sets.

The ellipsoid with foci ``a``, ``b`` and transverse diameter ``d`` is the set
``{x : |x - a| + |b - x| < d}``. Points are drawn from it by mapping unit-ball
samples through ``x = R diag(l) x_ball + center``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import InvalidInputError, as_state, frozen


class DegenerateFociError(InvalidInputError):
    pass


class InfeasibleDiameterError(InvalidInputError):
    pass


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def rotation_to_world(direction) -> np.ndarray:
    """Rotation ``R`` with ``R @ e1 == direction`` and ``det(R) == +1``.

    This is ``U diag(1, ..., 1, det U det V) V^T`` for the SVD of the rank-1
    matrix ``direction e1^T``. Its singular vectors are written down directly:
    ``U`` is ``direction`` completed to an orthonormal basis by Gram-Schmidt
    over the standard basis, and ``V`` is the identity.
    """
    k1 = np.asarray(direction, dtype=np.float64)
    n = k1.shape[0]
    skip = int(np.argmax(np.abs(k1)))
    cols = [k1 / np.linalg.norm(k1)]
    for i in range(n):
        if i == skip:
            continue
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for u in cols:
                v -= (u @ v) * u
        cols.append(v / np.linalg.norm(v))
    U = np.column_stack(cols)
    sign = 1.0 if np.linalg.det(U) > 0 else -1.0
    U[:, -1] *= sign
    return U


def rotation_to_world_svd(direction) -> np.ndarray:
    """Same rotation family via a numerical SVD; used as a cross-check."""
    k1 = np.asarray(direction, dtype=np.float64)
    n = k1.shape[0]
    B = np.outer(k1, np.eye(n)[0])
    U, _, Vt = np.linalg.svd(B)
    lam = np.ones(n)
    lam[-1] = np.linalg.det(U) * np.linalg.det(Vt)
    return U @ np.diag(lam) @ Vt


@dataclass(frozen=True, eq=False)
class ProlateHyperspheroid:
    focus_a: np.ndarray
    focus_b: np.ndarray
    s_min: float
    s_diam: float
    center: np.ndarray
    rotation: np.ndarray
    axis_lengths: np.ndarray

    @classmethod
    def build(cls, focus_a, focus_b, s_diam: float) -> "ProlateHyperspheroid":
        a = as_state(focus_a, name="focus_a")
        b = as_state(focus_b, dim=a.shape[0], name="focus_b")
        s_min = float(np.linalg.norm(b - a))
        if s_min == 0.0:
            raise DegenerateFociError("foci coincide")
        s_diam = float(s_diam)
        if not s_diam > s_min:
            raise InfeasibleDiameterError(
                f"transverse diameter {s_diam!r} must exceed focal distance {s_min!r}"
            )
        n = a.shape[0]
        if math.isinf(s_diam):
            raise InfeasibleDiameterError("transverse diameter must be finite")
        axes = np.full(n, math.sqrt(s_diam**2 - s_min**2) / 2)
        axes[0] = s_diam / 2
        return cls(
            focus_a=frozen(a),
            focus_b=frozen(b),
            s_min=s_min,
            s_diam=s_diam,
            center=frozen((a + b) / 2),
            rotation=frozen(rotation_to_world((b - a) / s_min)),
            axis_lengths=frozen(axes),
        )

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def transform(self, x_ball) -> np.ndarray:
        """Map unit-ball point(s) of shape (n,) or (k, n) into the ellipsoid."""
        x_ball = np.asarray(x_ball, dtype=np.float64)
        return (x_ball * self.axis_lengths) @ self.rotation.T + self.center

    def focal_sum(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise InvalidInputError(f"point dimension {x.shape[-1]} != {self.dim}")
        s = np.linalg.norm(x - self.focus_a, axis=-1) + np.linalg.norm(self.focus_b - x, axis=-1)
        return float(s) if s.ndim == 0 else s

    def contains(self, x):
        """Strict membership ``|x - a| + |b - x| < s_diam``."""
        s = self.focal_sum(x)
        return s < self.s_diam if np.ndim(s) else bool(s < self.s_diam)

    def measure(self) -> float:
        return unit_ball_volume(self.dim) * float(np.prod(self.axis_lengths))


def build_phs(focus_a, focus_b, s_diam: float) -> ProlateHyperspheroid:
    return ProlateHyperspheroid.build(focus_a, focus_b, s_diam)


def transform_ball_point(phs: ProlateHyperspheroid, x_ball) -> np.ndarray:
    return phs.transform(x_ball)


def phs_contains(phs: ProlateHyperspheroid, x) -> bool:
    return phs.contains(x)


def phs_measure(phs: ProlateHyperspheroid) -> float:
    return phs.measure()
