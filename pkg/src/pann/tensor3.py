"""Symmetric 3x3 tensor algebra for finite-strain kinematics.

Right Cauchy-Green tensors C = F^T F and second Piola-Kirchhoff stresses T are
symmetric, so they are stored by their six independent components in the fixed
order (11, 22, 33, 12, 13, 23).  All linear algebra needed here is closed form
(Cramer / adjugate); there is deliberately no eigendecomposition in this
module -- positive-definiteness questions are settled elsewhere through the
invariant-based admissibility test.

Frobenius norms and double contractions count off-diagonal entries twice, as
they must for the materialized 3x3 tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SingularTensorError

__all__ = ["SymTensor3", "Tensor3", "Rotation3", "COMPONENT_ORDER"]

#: Storage order of the six independent components.
COMPONENT_ORDER = ("11", "22", "33", "12", "13", "23")

#: Determinants with magnitude at or below this are treated as singular.
SINGULAR_TOL = 1e-300


@dataclass(frozen=True)
class SymTensor3:
    """A symmetric 3x3 tensor stored by six independent components."""

    c11: float
    c22: float
    c33: float
    c12: float = 0.0
    c13: float = 0.0
    c23: float = 0.0

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls) -> "SymTensor3":
        return cls(1.0, 1.0, 1.0)

    @classmethod
    def diag(cls, a: float, b: float, c: float) -> "SymTensor3":
        return cls(float(a), float(b), float(c))

    @classmethod
    def from_components(cls, comps) -> "SymTensor3":
        comps = np.asarray(comps, dtype=float)
        if comps.shape != (6,):
            raise DimensionMismatchError(
                f"expected 6 components (11,22,33,12,13,23), got shape {comps.shape}"
            )
        return cls(*(float(x) for x in comps))

    @classmethod
    def from_matrix(cls, m, rtol: float = 1e-10) -> "SymTensor3":
        """Build from a 3x3 matrix, rejecting meaningfully asymmetric input."""
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise DimensionMismatchError(f"expected a 3x3 matrix, got shape {m.shape}")
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(m - m.T).max()) > rtol * scale:
            raise ValueError("matrix is not symmetric within tolerance")
        return cls(m[0, 0], m[1, 1], m[2, 2],
                   0.5 * (m[0, 1] + m[1, 0]),
                   0.5 * (m[0, 2] + m[2, 0]),
                   0.5 * (m[1, 2] + m[2, 1]))

    # -- views -------------------------------------------------------------

    def components(self) -> tuple[float, float, float, float, float, float]:
        return (self.c11, self.c22, self.c33, self.c12, self.c13, self.c23)

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.c11, self.c12, self.c13],
                [self.c12, self.c22, self.c23],
                [self.c13, self.c23, self.c33],
            ]
        )

    # -- algebra -----------------------------------------------------------

    def trace(self) -> float:
        return self.c11 + self.c22 + self.c33

    def det(self) -> float:
        a, b, c, d, e, f = self.components()
        return a * b * c + 2.0 * d * e * f - a * f * f - b * e * e - c * d * d

    def cof(self) -> "SymTensor3":
        """Cofactor tensor, Cof(M) = det(M) * M^-T, by 2x2 minors."""
        a, b, c, d, e, f = self.components()
        return SymTensor3(
            b * c - f * f,
            a * c - e * e,
            a * b - d * d,
            e * f - d * c,
            d * f - e * b,
            d * e - a * f,
        )

    def inverse(self) -> "SymTensor3":
        det = self.det()
        if abs(det) <= SINGULAR_TOL:
            raise SingularTensorError(f"determinant {det!r} is numerically zero")
        k = self.cof()
        return SymTensor3(*(x / det for x in k.components()))

    def norm(self) -> float:
        """Frobenius norm of the materialized 3x3 tensor."""
        a, b, c, d, e, f = self.components()
        return math.sqrt(a * a + b * b + c * c + 2.0 * (d * d + e * e + f * f))

    def contract(self, other: "SymTensor3") -> float:
        """Double contraction A : B (off-diagonals weighted twice)."""
        a = self.components()
        b = other.components()
        return (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
                + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5]))

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "SymTensor3") -> "SymTensor3":
        return SymTensor3(*(x + y for x, y in zip(self.components(), other.components())))

    def __sub__(self, other: "SymTensor3") -> "SymTensor3":
        return SymTensor3(*(x - y for x, y in zip(self.components(), other.components())))

    def __mul__(self, scalar: float) -> "SymTensor3":
        return SymTensor3(*(float(scalar) * x for x in self.components()))

    __rmul__ = __mul__

    def __neg__(self) -> "SymTensor3":
        return SymTensor3(*(-x for x in self.components()))


@dataclass(frozen=True)
class Tensor3:
    """A general (not necessarily symmetric) 3x3 tensor, e.g. F or P."""

    a11: float
    a12: float
    a13: float
    a21: float
    a22: float
    a23: float
    a31: float
    a32: float
    a33: float

    @classmethod
    def from_matrix(cls, m) -> "Tensor3":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise DimensionMismatchError(f"expected a 3x3 matrix, got shape {m.shape}")
        return cls(*(float(x) for x in m.ravel()))

    @classmethod
    def identity(cls) -> "Tensor3":
        return cls(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.a11, self.a12, self.a13],
                [self.a21, self.a22, self.a23],
                [self.a31, self.a32, self.a33],
            ]
        )

    def det(self) -> float:
        return float(np.linalg.det(self.as_matrix()))

    def transpose(self) -> "Tensor3":
        return Tensor3.from_matrix(self.as_matrix().T)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_matrix()))

    def __matmul__(self, other: "Tensor3") -> "Tensor3":
        return Tensor3.from_matrix(self.as_matrix() @ other.as_matrix())

    def right_cauchy_green(self) -> SymTensor3:
        """C = F^T F of this tensor interpreted as a deformation gradient."""
        m = self.as_matrix()
        return SymTensor3.from_matrix(m.T @ m, rtol=1e-8)


class Rotation3:
    """A proper orthogonal 3x3 tensor, validated at construction."""

    __slots__ = ("_m",)

    def __init__(self, m, tol: float = 1e-12):
        m = np.array(m, dtype=float)
        if m.shape != (3, 3):
            raise DimensionMismatchError(f"expected a 3x3 matrix, got shape {m.shape}")
        if float(np.abs(m.T @ m - np.eye(3)).max()) > tol:
            raise ValueError("matrix is not orthogonal within tolerance")
        if abs(float(np.linalg.det(m)) - 1.0) > 1e-10:
            raise ValueError("matrix is orthogonal but not a proper rotation (det != +1)")
        m.setflags(write=False)
        self._m = m

    @classmethod
    def about_axes(cls, phi2: float, phi3: float) -> "Rotation3":
        """Composition R = R_x2(phi2) @ R_x3(phi3) of rotations about X2 then X3.

        R_x2(pi/2) maps e1 -> -e3 and e3 -> e1; R_x3 rotates in the 1-2 plane.
        This two-angle family is what the transversely isotropic sweeps use:
        a third rotation about the preferred axis X1 would leave all mixed
        invariants unchanged.
        """
        c2, s2 = math.cos(phi2), math.sin(phi2)
        c3, s3 = math.cos(phi3), math.sin(phi3)
        r2 = np.array([[c2, 0.0, s2], [0.0, 1.0, 0.0], [-s2, 0.0, c2]])
        r3 = np.array([[c3, -s3, 0.0], [s3, c3, 0.0], [0.0, 0.0, 1.0]])
        return cls(r2 @ r3)

    def as_matrix(self) -> np.ndarray:
        return self._m

    def apply(self, t: SymTensor3) -> SymTensor3:
        """Congruence transform R C R^T, symmetrized against roundoff."""
        m = self._m @ t.as_matrix() @ self._m.T
        return SymTensor3.from_matrix(0.5 * (m + m.T))

    def __matmul__(self, other: "Rotation3") -> "Rotation3":
        return Rotation3(self._m @ other.as_matrix())
