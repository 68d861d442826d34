"""Closed-form reference materials: Neo-Hooke and a transversely isotropic law.

These two models generate all synthetic stress data in this package and act
as ground truth for calibration and verification.  Units are kilopascal for
stresses, energies and elastic constants throughout.

Compressible Neo-Hooke (isotropic):

    psi = 1/2 * ( mu (I1 - ln I3 - 3) + lambda/2 (I3 - ln I3 - 1) )
    T   = mu 1 + ( lambda/2 - (2 mu + lambda) / (2 I3) ) Cof C

with Lame constants from Young's modulus and Poisson's ratio.

Transversely isotropic polynomial law (preferred X1 direction through the
structural tensor G):

    psi = a1 I1 + a2 I2 + d1 I3 - d2 ln J
          + eta (I4^a4 + I5^a4) + psi0,
    eta = e1 / (a4 * (tr G)^a4),

where the constant psi0 = -(3 a1 + 3 a2 + d1 + 2 e1 / a4) makes the
undeformed energy exactly zero.  The undeformed stress is
2 (a1 + 2 a2 + d1 - d2/2 + e1) * identity, which the default parameter set
cancels exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import batch
from .invariants import MaterialSymmetry, compute_invariants
from .tensor3 import SymTensor3

__all__ = [
    "NeoHookeParams",
    "NeoHooke",
    "TransIsoParams",
    "TransIsoReference",
    "DEFAULT_NEO_HOOKE",
    "DEFAULT_TRANS_ISO",
]


@dataclass(frozen=True)
class NeoHookeParams:
    """Engineering constants of the compressible Neo-Hooke solid (kPa)."""

    E: float = 1000.0
    nu: float = 0.3

    def __post_init__(self):
        if not (self.E > 0.0):
            raise ValueError(f"Young's modulus must be positive, got {self.E}")
        if not (-1.0 < self.nu < 0.5):
            raise ValueError(f"Poisson's ratio must lie in (-1, 0.5), got {self.nu}")

    @property
    def mu(self) -> float:
        """Shear modulus."""
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        """First Lame constant."""
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))


class NeoHooke:
    """Compressible Neo-Hooke solid; stress-free and energy-free at C = 1."""

    def __init__(self, params: NeoHookeParams | None = None):
        self.params = params if params is not None else NeoHookeParams()
        self.symmetry = MaterialSymmetry.isotropic()

    def energy(self, C: SymTensor3) -> float:
        inv = compute_invariants(C, self.symmetry)
        mu, lam = self.params.mu, self.params.lam
        ln3 = math.log(inv.I3)
        return 0.5 * (mu * (inv.I1 - ln3 - 3.0) + 0.5 * lam * (inv.I3 - ln3 - 1.0))

    def stress(self, C: SymTensor3) -> SymTensor3:
        mu, lam = self.params.mu, self.params.lam
        I3 = C.det()
        coeff = 0.5 * lam - (2.0 * mu + lam) / (2.0 * I3)
        cof = C.cof()
        return SymTensor3(
            mu + coeff * cof.c11,
            mu + coeff * cof.c22,
            mu + coeff * cof.c33,
            coeff * cof.c12,
            coeff * cof.c13,
            coeff * cof.c23,
        )

    def energy_batch(self, C6) -> np.ndarray:
        C6 = batch.as_batch(C6)
        mu, lam = self.params.mu, self.params.lam
        I1 = batch.btrace(C6)
        I3 = batch.bdet(C6)
        ln3 = np.log(I3)
        return 0.5 * (mu * (I1 - ln3 - 3.0) + 0.5 * lam * (I3 - ln3 - 1.0))

    def stress_batch(self, C6) -> np.ndarray:
        C6 = batch.as_batch(C6)
        mu, lam = self.params.mu, self.params.lam
        I3 = batch.bdet(C6)
        coeff = 0.5 * lam - (2.0 * mu + lam) / (2.0 * I3)
        T = coeff[:, None] * batch.bcof(C6)
        T[:, :3] += mu
        return T


@dataclass(frozen=True)
class TransIsoParams:
    """Coefficients of the transversely isotropic reference law (kPa).

    ``alpha4`` must be >= 1 so the I4/I5 powers stay differentiable at the
    undeformed state.  No further sign restrictions are enforced; the
    default set below is stress-free at C = 1 by construction.
    """

    beta: float = 2.0
    alpha1: float = 8.0
    alpha2: float = 0.0
    delta1: float = 10.0
    delta2: float = 56.0
    alpha4: float = 2.0
    eta1: float = 10.0

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (self.alpha4 >= 1.0):
            raise ValueError(f"alpha4 must be >= 1, got {self.alpha4}")

    @property
    def trG(self) -> float:
        return self.beta ** 2 + 2.0 / self.beta

    @property
    def eta_star(self) -> float:
        return self.eta1 / (self.alpha4 * self.trG ** self.alpha4)

    @property
    def energy_shift(self) -> float:
        """Constant making the undeformed energy exactly zero."""
        return -(3.0 * self.alpha1 + 3.0 * self.alpha2 + self.delta1
                 + 2.0 * self.eta1 / self.alpha4)


class TransIsoReference:
    """Transversely isotropic polynomial solid with preferred X1 direction."""

    def __init__(self, params: TransIsoParams | None = None):
        self.params = params if params is not None else TransIsoParams()
        self.symmetry = MaterialSymmetry.transversely_isotropic(self.params.beta)

    def energy(self, C: SymTensor3) -> float:
        p = self.params
        inv = compute_invariants(C, self.symmetry)
        return (
            p.alpha1 * inv.I1
            + p.alpha2 * inv.I2
            + p.delta1 * inv.I3
            - p.delta2 * math.log(inv.J)
            + p.eta_star * (inv.I4 ** p.alpha4 + inv.I5 ** p.alpha4)
            + p.energy_shift
        )

    def stress(self, C: SymTensor3) -> SymTensor3:
        p = self.params
        inv = compute_invariants(C, self.symmetry)
        Cinv = C.inverse()
        a4eta = p.alpha4 * p.eta_star
        t = (
            p.alpha1 * inv.d1
            + p.alpha2 * inv.d2
            + (p.delta1 * inv.I3 - 0.5 * p.delta2) * Cinv
            + (a4eta * inv.I4 ** (p.alpha4 - 1.0)) * inv.d4
            + (a4eta * inv.I5 ** (p.alpha4 - 1.0)) * inv.d5
        )
        return 2.0 * t

    def energy_batch(self, C6) -> np.ndarray:
        p = self.params
        f = batch.features(batch.as_batch(C6), self.symmetry)
        I1, I2, I3 = f.feat[:, 0], f.feat[:, 1], f.feat[:, 2]
        I4, I5 = f.feat[:, 3], f.feat[:, 4]
        return (
            p.alpha1 * I1
            + p.alpha2 * I2
            + p.delta1 * I3
            - p.delta2 * np.log(f.J)
            + p.eta_star * (I4 ** p.alpha4 + I5 ** p.alpha4)
            + p.energy_shift
        )

    def stress_batch(self, C6) -> np.ndarray:
        p = self.params
        C6 = batch.as_batch(C6)
        f = batch.features(C6, self.symmetry)
        I4, I5 = f.feat[:, 3], f.feat[:, 4]
        a4eta = p.alpha4 * p.eta_star
        T = (
            p.alpha1 * f.dfeat[:, 0, :]
            + p.alpha2 * f.dfeat[:, 1, :]
            + (p.delta1 * f.I3 - 0.5 * p.delta2)[:, None] * f.Cinv6
            + (a4eta * I4 ** (p.alpha4 - 1.0))[:, None] * f.dfeat[:, 3, :]
            + (a4eta * I5 ** (p.alpha4 - 1.0))[:, None] * f.dfeat[:, 4, :]
        )
        return 2.0 * T


DEFAULT_NEO_HOOKE = NeoHooke()
DEFAULT_TRANS_ISO = TransIsoReference()
