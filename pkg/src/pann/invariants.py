"""Strain invariants, structural tensors and the admissibility predicate.

The models in this package eat right Cauchy-Green tensors C through a fixed
invariant vector:

* isotropy:              (I1, I2, I3, I1*)
* transverse isotropy:   (I1, I2, I3, I4, I5, I1*)

with

    I1 = tr C,  I2 = tr(Cof C),  I3 = det C,  J = sqrt(I3),  I1* = -2 J,
    I4 = tr(C G),  I5 = tr(Cof(C) G),

where G is the structural tensor of the preferred direction.  I1* is the
polyconvex stand-in for a negative volume-growth term: -2J is polyconvex
while -J alone is not, and its derivative -J C^-1 is what the stress
normalization terms are built from.

Admissibility of a *symmetric* tensor (is it positive definite?) is decided
entirely from (I1, I2, I3): all eigenvalues are real and positive iff

    Gamma(I1, I2, I3) <= 0   and   I1, I2, I3 > 0,

where 108 * Gamma = 4 I1^3 I3 - I1^2 I2^2 + 4 I2^3 + 27 I3^2 - 18 I1 I2 I3
is (minus) the discriminant of the characteristic polynomial.  This keeps
eigendecompositions out of the sampling and verification hot paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NonPositiveDeterminantError,
    NonPositiveInvariantError,
    SymmetryMismatchError,
)
from .tensor3 import SymTensor3

__all__ = [
    "StructuralTensor",
    "MaterialSymmetry",
    "InvariantSet",
    "compute_invariants",
    "admissibility_gamma",
    "is_admissible",
    "principal_invariants_from_eigenvalues",
]


@dataclass(frozen=True)
class StructuralTensor:
    """G = diag(beta^2, 1/beta, 1/beta) encoding a preferred X1 direction.

    The parametrization keeps tr G = beta^2 + 2/beta > 0 for any beta > 0 and
    reduces to the identity-like isotropic limit at beta = 1.
    """

    beta: float

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def g11(self) -> float:
        return self.beta * self.beta

    @property
    def g22(self) -> float:
        return 1.0 / self.beta

    g33 = g22

    def trace(self) -> float:
        return self.beta * self.beta + 2.0 / self.beta

    def as_sym(self) -> SymTensor3:
        return SymTensor3.diag(self.g11, self.g22, self.g33)


@dataclass(frozen=True)
class MaterialSymmetry:
    """Material symmetry class: isotropic, or transversely isotropic with G."""

    kind: str
    structural: StructuralTensor | None = None

    ISOTROPIC = "isotropic"
    TRANSVERSELY_ISOTROPIC = "transversely_isotropic"

    def __post_init__(self):
        if self.kind == self.ISOTROPIC:
            if self.structural is not None:
                raise SymmetryMismatchError("isotropic symmetry takes no structural tensor")
        elif self.kind == self.TRANSVERSELY_ISOTROPIC:
            if self.structural is None:
                raise SymmetryMismatchError(
                    "transversely isotropic symmetry needs a structural tensor"
                )
        else:
            raise ValueError(f"unknown symmetry kind {self.kind!r}")

    @classmethod
    def isotropic(cls) -> "MaterialSymmetry":
        return cls(cls.ISOTROPIC)

    @classmethod
    def transversely_isotropic(cls, beta: float = 2.0) -> "MaterialSymmetry":
        return cls(cls.TRANSVERSELY_ISOTROPIC, StructuralTensor(float(beta)))

    @property
    def is_isotropic(self) -> bool:
        return self.kind == self.ISOTROPIC

    @property
    def input_dim(self) -> int:
        """Length of the invariant vector fed to a network (4 or 6)."""
        return 4 if self.is_isotropic else 6

    @property
    def input_names(self) -> tuple[str, ...]:
        if self.is_isotropic:
            return ("I1", "I2", "I3", "I1s")
        return ("I1", "I2", "I3", "I4", "I5", "I1s")

    def identity_inputs(self) -> np.ndarray:
        """Invariant vector at C = identity: (3, 3, 1, -2) or (3, 3, 1, g, g, -2)."""
        if self.is_isotropic:
            return np.array([3.0, 3.0, 1.0, -2.0])
        g = self.structural.trace()
        return np.array([3.0, 3.0, 1.0, g, g, -2.0])


@dataclass(frozen=True)
class InvariantSet:
    """Invariants of one C together with their derivative tensors dI/dC."""

    I1: float
    I2: float
    I3: float
    J: float
    I1s: float
    d1: SymTensor3
    d2: SymTensor3
    d3: SymTensor3
    dJ: SymTensor3
    d1s: SymTensor3
    I4: float | None = None
    I5: float | None = None
    d4: SymTensor3 | None = None
    d5: SymTensor3 | None = None

    def inputs(self) -> np.ndarray:
        """The invariant vector in network-input order."""
        if self.I4 is None:
            return np.array([self.I1, self.I2, self.I3, self.I1s])
        return np.array([self.I1, self.I2, self.I3, self.I4, self.I5, self.I1s])

    def input_gradients(self) -> tuple[SymTensor3, ...]:
        """dI/dC for each entry of :meth:`inputs`, in the same order."""
        if self.I4 is None:
            return (self.d1, self.d2, self.d3, self.d1s)
        return (self.d1, self.d2, self.d3, self.d4, self.d5, self.d1s)


def compute_invariants(C: SymTensor3, sym: MaterialSymmetry) -> InvariantSet:
    """Evaluate all invariants of ``C`` for the given symmetry class.

    Raises
    ------
    NonPositiveDeterminantError
        If det C <= 0 (J and I1* would be undefined).
    NonPositiveInvariantError
        If I4 <= 0 or I5 <= 0 in the transversely isotropic case.
    """
    I1 = C.trace()
    cofC = C.cof()
    I2 = cofC.trace()
    I3 = C.det()
    if not (I3 > 0.0):
        raise NonPositiveDeterminantError(f"det C = {I3!r} must be positive")
    J = math.sqrt(I3)
    Cinv = SymTensor3(*(x / I3 for x in cofC.components()))

    d1 = SymTensor3.identity()
    d2 = SymTensor3(*(I1 * i - c for i, c in zip(d1.components(), C.components())))
    d3 = cofC
    dJ = (0.5 * J) * Cinv
    d1s = (-J) * Cinv

    if sym.is_isotropic:
        return InvariantSet(I1, I2, I3, J, -2.0 * J, d1, d2, d3, dJ, d1s)

    G = sym.structural.as_sym()
    I4 = C.contract(G)
    I5 = cofC.contract(G)
    if not (I4 > 0.0):
        raise NonPositiveInvariantError(f"I4 = {I4!r} must be positive")
    if not (I5 > 0.0):
        raise NonPositiveInvariantError(f"I5 = {I5!r} must be positive")
    # d5 = I5 C^-1 - Cof(C) G C^-1 is symmetric exactly; the matrix product
    # drifts at roundoff level, so symmetrize.
    m = cofC.as_matrix() @ G.as_matrix() @ Cinv.as_matrix()
    d5m = I5 * Cinv.as_matrix() - 0.5 * (m + m.T)
    d5 = SymTensor3.from_matrix(0.5 * (d5m + d5m.T), rtol=1e-6)
    return InvariantSet(I1, I2, I3, J, -2.0 * J, d1, d2, d3, dJ, d1s, I4, I5, G, d5)


def admissibility_gamma(I1: float, I2: float, I3: float) -> float:
    """Discriminant-based admissibility function Gamma(I1, I2, I3).

    For a symmetric tensor with these principal invariants, all eigenvalues
    are real and positive iff Gamma <= 0 together with I1, I2, I3 > 0.
    Gamma equals minus the discriminant of the characteristic polynomial
    divided by 108; it vanishes exactly on repeated eigenvalues.
    """
    return (
        4.0 * I1 ** 3 * I3
        - I1 ** 2 * I2 ** 2
        + 4.0 * I2 ** 3
        + 27.0 * I3 ** 2
        - 18.0 * I1 * I2 * I3
    ) / 108.0


def is_admissible(I1: float, I2: float, I3: float, tol: float = 1e-12) -> bool:
    """Positive-definiteness test from invariants alone (no eigensolve).

    ``tol`` absorbs roundoff on the Gamma = 0 boundary (repeated
    eigenvalues, e.g. any volumetric state).
    """
    return (I1 > 0.0) and (I2 > 0.0) and (I3 > 0.0) and (
        admissibility_gamma(I1, I2, I3) <= tol
    )


def principal_invariants_from_eigenvalues(k1: float, k2: float, k3: float):
    """(I1, I2, I3) of a symmetric tensor with eigenvalues (k1, k2, k3)."""
    return (
        k1 + k2 + k3,
        k1 * k2 + k1 * k3 + k2 * k3,
        k1 * k2 * k3,
    )
