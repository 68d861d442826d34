"""Assembled neural constitutive models and the deformation-gradient baseline.

A :class:`PannModel` wraps an invariant-input convex network in one of four
variants of increasing physical structure:

``basic``              network potential alone, unconstrained weights;
``polyconvex``         same potential with non-negative weights;
``polyconvex_growth``  adds the volumetric growth term (J + 1/J - 2)^2;
``pann``               adds stress and energy normalization on top, making
                       the undeformed state exactly stress- and energy-free.

The stress normalization subtracts correction terms built from derivative
tensors of the invariants themselves (a multiple of -J C^-1, and for
transverse isotropy multiples of the structural tensor G and of dI5/dC), so
the corrected potential stays polyconvex and objective and keeps the
material symmetry -- unlike naive fixes such as subtracting the undeformed
stress contracted with C, which would wreck convexity.

Normalization constants are *derived* quantities: they are recomputed from
the weights whenever the model is evaluated or deserialized, never trusted
from a file (stored values are cross-checked on load).

:class:`SimpleFP` is the deliberately structure-free baseline: a plain
feed-forward map from the nine deformation-gradient components to the nine
first Piola-Kirchhoff stress components.  It satisfies none of the
constitutive conditions and exists to show what the structure buys.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, batch
from .errors import (
    DimensionMismatchError,
    FormatError,
    NonPositiveDeterminantError,
)
from .icnn import NetworkArchitecture, NetworkParams
from .invariants import MaterialSymmetry
from .tensor3 import SymTensor3, Tensor3

__all__ = [
    "VARIANTS",
    "PannModel",
    "SimpleFPParams",
    "SimpleFP",
    "growth_energy",
    "growth_stress",
    "normalization_constants",
    "tangent_mandel",
]

VARIANTS = ("basic", "polyconvex", "polyconvex_growth", "pann")

MODEL_FORMAT = "pann-model"
MODEL_VERSION = 1

SIMPLE_FORMAT = "simple-fp-model"

#: Mandel scaling of the six components (off-diagonals carry sqrt(2)).
_MANDEL = np.array([1.0, 1.0, 1.0, math.sqrt(2.0), math.sqrt(2.0), math.sqrt(2.0)])


def growth_energy(J: float) -> float:
    """Volumetric growth energy (J + 1/J - 2)^2 in kPa (unit coefficient).

    Convex in J, zero with zero slope at J = 1, divergent as J -> 0 or oo.
    """
    if not (J > 0.0):
        raise NonPositiveDeterminantError(f"J must be positive, got {J!r}")
    return (J + 1.0 / J - 2.0) ** 2


def growth_stress(J: float, Cinv: SymTensor3) -> SymTensor3:
    """Stress contribution 2 (J + 1/J - 2)(1 - 1/J^2) J C^-1 of the growth term."""
    if not (J > 0.0):
        raise NonPositiveDeterminantError(f"J must be positive, got {J!r}")
    s = 2.0 * (J + 1.0 / J - 2.0) * (1.0 - 1.0 / (J * J)) * J
    return s * Cinv


def normalization_constants(params: NetworkParams, sym: MaterialSymmetry) -> dict:
    """Stress-normalization constants from the undeformed input gradient.

    Isotropic: {"n": ...}; the corrective stress is -n J C^-1.
    Transversely isotropic: {"o", "p", "q"}; the corrective stress is
    -o J C^-1 + 2 p G + 2 q dI5/dC, with p and q the two half-rectified
    parts of g4 - g5 so that exactly one of them is active.
    """
    theta = params.to_flat()
    sizes = np.array(params.arch.layer_sizes(), dtype=np.int64)
    if sym.is_isotropic:
        (n,) = _kernels.norm_constants(theta, sizes, 0, 0.0)
        return {"n": float(n)}
    o, p, q, _ = _kernels.norm_constants(theta, sizes, 1, sym.structural.beta)
    return {"o": float(o), "p": float(p), "q": float(q)}


class PannModel:
    """Invariant-based neural constitutive model in one of four variants."""

    def __init__(self, variant: str, symmetry: MaterialSymmetry, params: NetworkParams):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        if params.arch.input_dim != symmetry.input_dim:
            raise DimensionMismatchError(
                f"network input width {params.arch.input_dim} does not match "
                f"symmetry input width {symmetry.input_dim}"
            )
        constrained = variant != "basic"
        if params.arch.constrain_weights != constrained:
            raise ValueError(
                f"variant {variant!r} requires constrain_weights={constrained}"
            )
        if constrained:
            flat = params.to_flat()
            mask = params.weight_mask()
            if np.any(flat[mask] < 0.0):
                raise ValueError("constrained variant carries negative weights")
        self.variant = variant
        self.symmetry = symmetry
        self.params = params
        self._theta = params.to_flat()
        self._sizes = np.array(params.arch.layer_sizes(), dtype=np.int64)
        self._tiso = 0 if symmetry.is_isotropic else 1
        self._beta = 0.0 if symmetry.is_isotropic else symmetry.structural.beta
        self._growth = 1 if variant in ("polyconvex_growth", "pann") else 0
        self._normalize = 1 if variant == "pann" else 0

    # -- evaluation --------------------------------------------------------

    @property
    def has_growth(self) -> bool:
        return bool(self._growth)

    @property
    def has_normalization(self) -> bool:
        return bool(self._normalize)

    def energy_batch(self, C6) -> np.ndarray:
        C6 = batch.as_batch(C6)
        return _kernels.energy_batch(
            C6, self._theta, self._sizes, self._tiso, self._beta,
            self._growth, self._normalize,
        )

    def stress_batch(self, C6) -> np.ndarray:
        C6 = batch.as_batch(C6)
        return _kernels.stress_batch(
            C6, self._theta, self._sizes, self._tiso, self._beta,
            self._growth, self._normalize,
        )

    def energy(self, C: SymTensor3) -> float:
        return float(self.energy_batch(np.array(C.components())[None, :])[0])

    def stress(self, C: SymTensor3) -> SymTensor3:
        T = self.stress_batch(np.array(C.components())[None, :])[0]
        return SymTensor3.from_components(T)

    def tangent(self, C: SymTensor3, step: float = 1e-6) -> np.ndarray:
        return tangent_mandel(self, C, step)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "variant": self.variant,
            "symmetry": {"kind": self.symmetry.kind},
            "network": self.params.to_dict(),
        }
        if not self.symmetry.is_isotropic:
            payload["symmetry"]["beta"] = self.symmetry.structural.beta
        if self.has_normalization:
            payload["normalization"] = normalization_constants(self.params, self.symmetry)
        return payload

    @classmethod
    def from_dict(cls, data: dict) -> "PannModel":
        try:
            if data["format"] != MODEL_FORMAT:
                raise FormatError(f"not a model payload: {data.get('format')!r}")
            if data["version"] != MODEL_VERSION:
                raise FormatError(f"unsupported model version {data['version']!r}")
            kind = data["symmetry"]["kind"]
            if kind == MaterialSymmetry.ISOTROPIC:
                sym = MaterialSymmetry.isotropic()
            else:
                sym = MaterialSymmetry.transversely_isotropic(float(data["symmetry"]["beta"]))
            params = NetworkParams.from_dict(data["network"])
            model = cls(data["variant"], sym, params)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed model payload: {exc}") from exc
        if model.has_normalization and "normalization" in data:
            stored = data["normalization"]
            fresh = normalization_constants(params, sym)
            for key, value in fresh.items():
                if abs(stored.get(key, np.inf) - value) > 1e-12 * max(1.0, abs(value)):
                    raise FormatError(
                        f"stored normalization constant {key}={stored.get(key)!r} "
                        f"disagrees with recomputed value {value!r}"
                    )
        return model

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str) -> "PannModel":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


def tangent_mandel(model, C: SymTensor3, step: float = 1e-6) -> np.ndarray:
    """Material tangent 4 d^2 psi / dC dC as a Mandel 6x6 matrix.

    Central finite differences of the analytical stress.  In the Mandel
    vector basis (11, 22, 33, sqrt2*12, sqrt2*13, sqrt2*23) the tangent of
    any smooth potential is a symmetric matrix; at the undeformed state of
    an isotropic solid it reduces to the classical stiffness with blocks
    lambda + 2 mu (diagonal), lambda (coupling) and 2 mu (shear diagonal).
    """
    h = step * max(1.0, C.norm())
    comps = np.array(C.components())
    M = np.empty((6, 6))
    for j in range(6):
        cp = comps.copy()
        cp[j] += h
        cm = comps.copy()
        cm[j] -= h
        Tp = np.array(model.stress(SymTensor3.from_components(cp)).components())
        Tm = np.array(model.stress(SymTensor3.from_components(cm)).components())
        col = (_MANDEL * (Tp - Tm)) / (2.0 * h) / _MANDEL[j]
        M[:, j] = 2.0 * col
    return M


# ---------------------------------------------------------------------------
# deformation-gradient baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimpleFPParams:
    """Parameters of the F -> P baseline network.

    ``w`` (n, 9) input weights, ``b`` (n,) biases, ``W`` (n, 9) output
    weights, ``B`` (9,) output offsets; flat order (w, b, W, B).
    """

    w: np.ndarray
    b: np.ndarray
    W: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        n = self.b.shape[0]
        if self.w.shape != (n, 9) or self.W.shape != (n, 9) or self.B.shape != (9,):
            raise DimensionMismatchError("inconsistent baseline parameter shapes")

    @property
    def hidden(self) -> int:
        return self.b.shape[0]

    @property
    def parameter_count(self) -> int:
        return 19 * self.hidden + 9

    def to_flat(self) -> np.ndarray:
        return np.concatenate([self.w.ravel(), self.b, self.W.ravel(), self.B])

    @classmethod
    def from_flat(cls, hidden: int, flat) -> "SimpleFPParams":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (19 * hidden + 9,):
            raise DimensionMismatchError(
                f"expected {19 * hidden + 9} parameters, got shape {flat.shape}"
            )
        pos = 0
        w = flat[pos:pos + 9 * hidden].reshape(hidden, 9).copy()
        pos += 9 * hidden
        b = flat[pos:pos + hidden].copy()
        pos += hidden
        W = flat[pos:pos + 9 * hidden].reshape(hidden, 9).copy()
        pos += 9 * hidden
        B = flat[pos:].copy()
        return cls(w, b, W, B)

    @classmethod
    def init(cls, hidden: int, seed: int) -> "SimpleFPParams":
        """All parameters ~ U[-0.5, 0.5], drawn in flat order."""
        rng = np.random.default_rng(seed)
        return cls.from_flat(hidden, rng.uniform(-0.5, 0.5, size=19 * hidden + 9))


class SimpleFP:
    """Unstructured feed-forward map from F (9 components) to P (9 components)."""

    def __init__(self, params: SimpleFPParams):
        self.params = params

    def forward_batch(self, F9) -> np.ndarray:
        F9 = np.asarray(F9, dtype=float)
        if F9.ndim != 2 or F9.shape[1] != 9:
            raise DimensionMismatchError(f"expected (N, 9) inputs, got {F9.shape}")
        p = self.params
        A = np.logaddexp(0.0, F9 @ p.w.T + p.b)
        return A @ p.W + p.B

    def forward(self, F: Tensor3) -> Tensor3:
        P9 = self.forward_batch(F.as_matrix().reshape(1, 9))[0]
        return Tensor3.from_matrix(P9.reshape(3, 3))

    def to_dict(self) -> dict:
        return {
            "format": SIMPLE_FORMAT,
            "version": 1,
            "hidden": self.params.hidden,
            "w": self.params.w.tolist(),
            "b": self.params.b.tolist(),
            "W": self.params.W.tolist(),
            "B": self.params.B.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimpleFP":
        try:
            if data["format"] != SIMPLE_FORMAT:
                raise FormatError(f"not a baseline payload: {data.get('format')!r}")
            params = SimpleFPParams(
                np.array(data["w"], dtype=float),
                np.array(data["b"], dtype=float),
                np.array(data["W"], dtype=float),
                np.array(data["B"], dtype=float),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed baseline payload: {exc}") from exc
        return cls(params)
