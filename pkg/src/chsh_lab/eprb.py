"""Single-pair spin observables and the singlet state.

Basis ordering is ``(|++>, |+->, |-+>, |-->)`` with the left particle as
the major index; every module in the package shares it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DimensionError,
    as_matrix,
    expectation,
    kron,
)

DIRECTION_ATOL = 1e-9


@dataclass(frozen=True)
class Direction:
    """Unit vector in 3-space. Non-unit input is rejected, never renormalized."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for c in (self.x, self.y, self.z):
            if not math.isfinite(c):
                raise ValueError(f"direction has non-finite component: {self}")
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if abs(norm - 1.0) > DIRECTION_ATOL:
            raise ValueError(f"direction is not a unit vector (norm {norm!r})")

    @classmethod
    def from_vector(cls, vec) -> "Direction":
        x, y, z = (float(c) for c in vec)
        return cls(x, y, z)

    @classmethod
    def normalized(cls, vec) -> "Direction":
        v = np.asarray(vec, dtype=float)
        return cls.from_vector(v / np.linalg.norm(v))

    @classmethod
    def from_angles(cls, theta_deg: float, phi_deg: float = 0.0) -> "Direction":
        """Spherical angles in degrees. ``phi = 0`` is the x-z plane, theta measured from z."""
        th = math.radians(theta_deg)
        ph = math.radians(phi_deg)
        return cls(math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: "Direction") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z


def spin_observable(u: Direction) -> np.ndarray:
    """sigma . u, with hbar/2 set to one."""
    return u.x * SIGMA_X + u.y * SIGMA_Y + u.z * SIGMA_Z


def _require_2x2(obs2) -> np.ndarray:
    m = as_matrix(obs2)
    if m.shape != (2, 2):
        raise DimensionError(f"single-spin observable must be 2x2, got {m.shape}")
    return m


def embed_left(obs2) -> np.ndarray:
    return kron(_require_2x2(obs2), IDENTITY_2)


def embed_right(obs2) -> np.ndarray:
    return kron(IDENTITY_2, _require_2x2(obs2))


def correlation_observable(u: Direction, v: Direction) -> np.ndarray:
    return kron(spin_observable(u), spin_observable(v))


_SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)
_SINGLET.setflags(write=False)


def singlet() -> np.ndarray:
    """(|+-> - |-+>)/sqrt(2) as a fresh array."""
    return _SINGLET.copy()


def correlation_E(u: Direction, v: Direction) -> float:
    return expectation(_SINGLET, correlation_observable(u, v))


def random_direction(rng: np.random.Generator) -> Direction:
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-6:
            return Direction.from_vector(v / n)
