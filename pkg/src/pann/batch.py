"""Vectorized symmetric-tensor kinematics on (N, 6) component arrays.

Everything here mirrors the scalar algebra in :mod:`pann.tensor3` and
:mod:`pann.invariants` but operates on whole batches at once.  Component
order is the package-wide (11, 22, 33, 12, 13, 23).  These helpers are the
reference implementation behind the batched model evaluations; the single
point API is kept separate so tests can cross-check the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonPositiveDeterminantError,
    NonPositiveInvariantError,
)
from .invariants import MaterialSymmetry

__all__ = [
    "as_batch",
    "bdet",
    "bcof",
    "btrace",
    "bnorm",
    "bcontract",
    "bmat",
    "bsym",
    "binv",
    "Features",
    "features",
]


def as_batch(C6) -> np.ndarray:
    """Coerce input to a float64 (N, 6) array, validating the shape."""
    arr = np.asarray(C6, dtype=float)
    if arr.ndim == 1 and arr.shape == (6,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 6:
        raise DimensionMismatchError(f"expected (N, 6) components, got shape {arr.shape}")
    return arr


def btrace(C6: np.ndarray) -> np.ndarray:
    return C6[:, 0] + C6[:, 1] + C6[:, 2]


def bdet(C6: np.ndarray) -> np.ndarray:
    a, b, c, d, e, f = (C6[:, i] for i in range(6))
    return a * b * c + 2.0 * d * e * f - a * f * f - b * e * e - c * d * d


def bcof(C6: np.ndarray) -> np.ndarray:
    a, b, c, d, e, f = (C6[:, i] for i in range(6))
    return np.stack(
        [
            b * c - f * f,
            a * c - e * e,
            a * b - d * d,
            e * f - d * c,
            d * f - e * b,
            d * e - a * f,
        ],
        axis=1,
    )


def bnorm(C6: np.ndarray) -> np.ndarray:
    """Frobenius norms of the materialized tensors (off-diagonals twice)."""
    sq = C6 * C6
    return np.sqrt(sq[:, :3].sum(axis=1) + 2.0 * sq[:, 3:].sum(axis=1))


def bcontract(A6: np.ndarray, B6: np.ndarray) -> np.ndarray:
    p = A6 * B6
    return p[:, :3].sum(axis=1) + 2.0 * p[:, 3:].sum(axis=1)


def bmat(C6: np.ndarray) -> np.ndarray:
    """Materialize (N, 6) components into (N, 3, 3) symmetric matrices."""
    n = C6.shape[0]
    m = np.empty((n, 3, 3))
    m[:, 0, 0] = C6[:, 0]
    m[:, 1, 1] = C6[:, 1]
    m[:, 2, 2] = C6[:, 2]
    m[:, 0, 1] = m[:, 1, 0] = C6[:, 3]
    m[:, 0, 2] = m[:, 2, 0] = C6[:, 4]
    m[:, 1, 2] = m[:, 2, 1] = C6[:, 5]
    return m


def bsym(M: np.ndarray) -> np.ndarray:
    """Collapse (N, 3, 3) matrices to components, averaging the off-diagonals."""
    return np.stack(
        [
            M[:, 0, 0],
            M[:, 1, 1],
            M[:, 2, 2],
            0.5 * (M[:, 0, 1] + M[:, 1, 0]),
            0.5 * (M[:, 0, 2] + M[:, 2, 0]),
            0.5 * (M[:, 1, 2] + M[:, 2, 1]),
        ],
        axis=1,
    )


def binv(C6: np.ndarray, det: np.ndarray | None = None) -> np.ndarray:
    if det is None:
        det = bdet(C6)
    return bcof(C6) / det[:, None]


@dataclass
class Features:
    """Invariant features of a batch, with everything the models need.

    ``feat[:, k]`` is the k-th network input, ``dfeat[:, k, :]`` its
    derivative with respect to C (six components of the symmetric tensor).
    """

    feat: np.ndarray    # (N, 4) or (N, 6)
    dfeat: np.ndarray   # (N, k, 6)
    J: np.ndarray       # (N,)
    Cinv6: np.ndarray   # (N, 6)
    I3: np.ndarray      # (N,)


def features(C6: np.ndarray, sym: MaterialSymmetry, check: bool = True) -> Features:
    """Invariant vector and its C-derivatives for every tuple in the batch."""
    C6 = as_batch(C6)
    n = C6.shape[0]
    I1 = btrace(C6)
    cof = bcof(C6)
    I2 = btrace(cof)
    I3 = bdet(C6)
    if check and np.any(I3 <= 0.0):
        bad = np.flatnonzero(I3 <= 0.0)
        raise NonPositiveDeterminantError(
            f"det C must be positive; offending rows {bad[:5].tolist()}"
        )
    J = np.sqrt(I3)
    Cinv6 = cof / I3[:, None]

    ident = np.zeros((n, 6))
    ident[:, :3] = 1.0
    d2 = I1[:, None] * ident - C6
    d1s = -J[:, None] * Cinv6

    k = sym.input_dim
    feat = np.empty((n, k))
    dfeat = np.empty((n, k, 6))
    feat[:, 0] = I1
    feat[:, 1] = I2
    feat[:, 2] = I3
    feat[:, k - 1] = -2.0 * J
    dfeat[:, 0, :] = ident
    dfeat[:, 1, :] = d2
    dfeat[:, 2, :] = cof
    dfeat[:, k - 1, :] = d1s

    if not sym.is_isotropic:
        G6 = np.zeros(6)
        G6[0] = sym.structural.g11
        G6[1] = G6[2] = sym.structural.g22
        I4 = bcontract(C6, G6[None, :])
        I5 = bcontract(cof, G6[None, :])
        if check and (np.any(I4 <= 0.0) or np.any(I5 <= 0.0)):
            raise NonPositiveInvariantError("I4 and I5 must be positive")
        Cinvm = bmat(Cinv6)
        Gm = np.diag(G6[:3])
        M = I3[:, None, None] * (Cinvm @ Gm @ Cinvm)
        d5 = I5[:, None] * Cinv6 - bsym(0.5 * (M + np.transpose(M, (0, 2, 1))))
        feat[:, 3] = I4
        feat[:, 4] = I5
        dfeat[:, 3, :] = G6[None, :]
        dfeat[:, 4, :] = d5

    return Features(feat=feat, dfeat=dfeat, J=J, Cinv6=Cinv6, I3=I3)
