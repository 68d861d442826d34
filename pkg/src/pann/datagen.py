"""Dataset container, synthetic data generation and file round-tripping.

A dataset is an ordered list of (C, T) tuples stored as two (N, 6) component
arrays plus a free-form metadata dictionary.  On disk it is a CSV with the
exact header

    C11,C22,C33,C12,C13,C23,T11,T22,T33,T12,T13,T23

written with 17 significant digits (lossless for float64), accompanied by a
JSON sidecar ``<name>.meta.json`` carrying the metadata.  Reading the pair
back reproduces the arrays bit for bit.

Multiaxial sampling draws random rotated stretch states

    C = R(phi2, phi3) diag(l1^2, l2^2, l3^2) R(phi2, phi3)^T

with log-uniform stretches and uniform angles, optionally followed by a
volume-preserving shear congruence; every emitted state is checked against
the invariant-based admissibility predicate.  Stresses always come from a
supplied reference model.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from . import batch
from .errors import (
    DatasetTooSmallError,
    DimensionMismatchError,
    EmptyDatasetError,
    FormatError,
)
from .invariants import MaterialSymmetry, is_admissible
from .tensor3 import Rotation3, SymTensor3

__all__ = [
    "CSV_HEADER",
    "Dataset",
    "from_loadpoints",
    "uniaxial_data",
    "biaxial_data",
    "shear_data",
    "sample_multiaxial",
    "apply_offset",
    "apply_noise",
    "split",
    "filter_by_invariants",
    "write_csv",
    "read_csv",
    "fp_arrays",
]

CSV_HEADER = ["C11", "C22", "C33", "C12", "C13", "C23",
              "T11", "T22", "T33", "T12", "T13", "T23"]


class Dataset:
    """Ordered (C, T) tuples as (N, 6) arrays with a metadata dictionary."""

    def __init__(self, C6, T6, meta: dict | None = None):
        C6 = np.atleast_2d(np.asarray(C6, dtype=float))
        T6 = np.atleast_2d(np.asarray(T6, dtype=float))
        if C6.size == 0:
            C6 = C6.reshape(0, 6)
        if T6.size == 0:
            T6 = T6.reshape(0, 6)
        if C6.shape[1] != 6 or T6.shape[1] != 6 or C6.shape[0] != T6.shape[0]:
            raise DimensionMismatchError(
                f"need matching (N, 6) arrays, got {C6.shape} and {T6.shape}"
            )
        self.C6 = C6
        self.T6 = T6
        self.meta = dict(meta) if meta else {}

    def __len__(self) -> int:
        return self.C6.shape[0]

    def tuples(self):
        """Iterate (C, T) as symmetric tensor objects."""
        for c, t in zip(self.C6, self.T6):
            yield SymTensor3.from_components(c), SymTensor3.from_components(t)

    def subset(self, indices, meta: dict | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.C6[idx], self.T6[idx], meta if meta is not None else self.meta)


def _describe(model) -> dict:
    """Best-effort metadata description of a reference model."""
    name = type(model).__name__
    out = {"class": name}
    params = getattr(model, "params", None)
    if params is not None and hasattr(params, "__dataclass_fields__"):
        out["parameters"] = {k: getattr(params, k) for k in params.__dataclass_fields__}
    return out


def from_loadpoints(points, meta: dict | None = None) -> Dataset:
    if not points:
        raise EmptyDatasetError("no load points supplied")
    C6 = np.array([p.C.components() for p in points])
    T6 = np.array([p.T.components() for p in points])
    meta = dict(meta) if meta else {}
    meta.setdefault("controls", [float(p.control) for p in points])
    return Dataset(C6, T6, meta)


def uniaxial_data(model, lo: float, hi: float, count: int,
                  duplicate_identity: bool = True) -> Dataset:
    from .loadcases import uniaxial_path
    points = uniaxial_path(model, lo, hi, count, duplicate_identity)
    meta = {"kind": "uniaxial", "range": [float(lo), float(hi)], "count": int(count),
            "duplicate_identity": bool(duplicate_identity),
            "reference_model": _describe(model)}
    return from_loadpoints(points, meta)


def biaxial_data(model, lo: float, hi: float, count: int,
                 duplicate_identity: bool = True) -> Dataset:
    from .loadcases import biaxial_path
    points = biaxial_path(model, lo, hi, count, duplicate_identity)
    meta = {"kind": "biaxial", "range": [float(lo), float(hi)], "count": int(count),
            "duplicate_identity": bool(duplicate_identity),
            "reference_model": _describe(model)}
    return from_loadpoints(points, meta)


def shear_data(model, lo: float, hi: float, count: int) -> Dataset:
    from .loadcases import shear_path
    points = shear_path(model, lo, hi, count)
    meta = {"kind": "shear", "range": [float(lo), float(hi)], "count": int(count),
            "reference_model": _describe(model)}
    return from_loadpoints(points, meta)


def sample_multiaxial(model, count: int, seed: int,
                      stretch_range=(0.7, 1.6),
                      shear_range=(0.0, 0.0)) -> Dataset:
    """Random admissible multiaxial states stressed by the reference model.

    Stretches are log-uniform over ``stretch_range``; orientations use the
    two-angle rotation family with angles uniform on [0, pi/2] (a third
    angle about the preferred axis would be symmetry-redundant).  A nonzero
    ``shear_range`` superposes a volume-preserving shear congruence
    C <- S^T C S with shear amount uniform over the range.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    lo, hi = stretch_range
    if not (0.0 < lo < hi):
        raise ValueError(f"invalid stretch range {stretch_range}")
    rng = np.random.default_rng(seed)
    lams = np.exp(rng.uniform(math.log(lo), math.log(hi), size=(count, 3)))
    phis = rng.uniform(0.0, 0.5 * math.pi, size=(count, 2))
    gammas = rng.uniform(shear_range[0], shear_range[1], size=count)

    C6 = np.empty((count, 6))
    for i in range(count):
        R = Rotation3.about_axes(phis[i, 0], phis[i, 1]).as_matrix()
        C = (R * (lams[i] ** 2)) @ R.T          # R diag(l^2) R^T
        g = gammas[i]
        if g != 0.0:
            S = np.array([[1.0, g, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            C = S.T @ C @ S
        C = 0.5 * (C + C.T)
        C6[i] = (C[0, 0], C[1, 1], C[2, 2], C[0, 1], C[0, 2], C[1, 2])

    I1 = batch.btrace(C6)
    I2 = batch.btrace(batch.bcof(C6))
    I3 = batch.bdet(C6)
    for i in range(count):
        if not is_admissible(I1[i], I2[i], I3[i]):
            raise RuntimeError(f"sampled state {i} failed the admissibility check")

    T6 = model.stress_batch(C6)
    meta = {
        "kind": "multiaxial",
        "count": int(count),
        "seed": int(seed),
        "stretch_range": [float(lo), float(hi)],
        "shear_range": [float(shear_range[0]), float(shear_range[1])],
        "reference_model": _describe(model),
    }
    return Dataset(C6, T6, meta)


def apply_offset(ds: Dataset, offset: float) -> Dataset:
    """Shift the 11 stress component by a constant (systematic-error data)."""
    T6 = ds.T6.copy()
    T6[:, 0] += offset
    meta = dict(ds.meta)
    meta["perturbations"] = list(meta.get("perturbations", [])) + [
        {"kind": "offset_t11", "value": float(offset)}
    ]
    return Dataset(ds.C6.copy(), T6, meta)


def apply_noise(ds: Dataset, std: float, seed: int) -> Dataset:
    """Add zero-mean Gaussian noise to the 11 stress component only."""
    rng = np.random.default_rng(seed)
    T6 = ds.T6.copy()
    T6[:, 0] += rng.normal(0.0, std, size=len(ds))
    meta = dict(ds.meta)
    meta["perturbations"] = list(meta.get("perturbations", [])) + [
        {"kind": "noise_t11", "std": float(std), "seed": int(seed)}
    ]
    return Dataset(ds.C6.copy(), T6, meta)


def split(ds: Dataset, fraction: float = 0.7, seed: int = 0):
    """Random calibration/test split by permutation; sizes are deterministic."""
    n = len(ds)
    if n < 2:
        raise DatasetTooSmallError(f"cannot split a dataset of {n} tuples")
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    n_cal = max(1, min(n - 1, math.ceil(fraction * n)))
    cal_idx = np.sort(perm[:n_cal])
    test_idx = np.sort(perm[n_cal:])
    base = {k: v for k, v in ds.meta.items() if k != "controls"}
    cal = ds.subset(cal_idx, {**base, "split": {
        "fraction": fraction, "seed": int(seed), "role": "calibration",
        "indices": cal_idx.tolist()}})
    test = ds.subset(test_idx, {**base, "split": {
        "fraction": fraction, "seed": int(seed), "role": "test",
        "indices": test_idx.tolist()}})
    return cal, test


def filter_by_invariants(ds: Dataset, sym: MaterialSymmetry, eta: float = 0.01) -> Dataset:
    """Greedy near-duplicate removal in invariant space.

    A tuple is kept iff, for every previously kept tuple, at least one
    invariant differs by more than ``eta`` times that invariant's range over
    the incoming dataset.  Scanning in storage order makes the result
    deterministic; applying the filter twice changes nothing (ranges only
    shrink, so kept tuples stay mutually separated).
    """
    n = len(ds)
    if n == 0:
        return Dataset(ds.C6.copy(), ds.T6.copy(), ds.meta)
    feats = batch.features(ds.C6, sym).feat
    spans = feats.max(axis=0) - feats.min(axis=0)
    spans[spans == 0.0] = 1.0
    thresh = eta * spans
    kept: list[int] = []
    kept_feats = np.empty_like(feats)
    for i in range(n):
        if kept:
            diffs = np.abs(kept_feats[:len(kept)] - feats[i])
            if np.any(np.all(diffs <= thresh, axis=1)):
                continue
        kept_feats[len(kept)] = feats[i]
        kept.append(i)
    meta = dict(ds.meta)
    meta["invariant_filter"] = {"eta": float(eta), "kept": len(kept), "incoming": n}
    meta.pop("controls", None)
    return ds.subset(np.array(kept, dtype=int), meta)


# ---------------------------------------------------------------------------
# file round trip
# ---------------------------------------------------------------------------

def write_csv(ds: Dataset, path: str) -> None:
    """Write the CSV and its JSON metadata sidecar."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for c, t in zip(ds.C6, ds.T6):
            writer.writerow([f"{x:.17g}" for x in c] + [f"{x:.17g}" for x in t])
    with open(_sidecar(path), "w") as fh:
        json.dump(ds.meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_csv(path: str) -> Dataset:
    """Read a dataset written by :func:`write_csv` (bit-exact round trip)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected a header row") from None
        if header != CSV_HEADER:
            raise FormatError(
                f"{path}: bad header {header!r}; expected {','.join(CSV_HEADER)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 12:
                raise FormatError(f"{path}:{lineno}: expected 12 fields, got {len(row)}")
            try:
                values = [float(x) for x in row]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric field ({exc})") from None
            if not all(np.isfinite(v) for v in values):
                raise FormatError(f"{path}:{lineno}: non-finite value")
            rows.append(values)
    data = np.array(rows, dtype=float).reshape(len(rows), 12)
    meta = {}
    sidecar = _sidecar(path)
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            try:
                meta = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{sidecar}: invalid JSON ({exc})") from None
    return Dataset(data[:, :6], data[:, 6:], meta)


def _sidecar(path: str) -> str:
    base, _ = os.path.splitext(path)
    return base + ".meta.json"


def fp_arrays(ds: Dataset):
    """(F, P) component arrays for the deformation-gradient baseline.

    F is reconstructed as the unique SPD square root of each C -- the
    rotation-free representative of the deformation; P = F T.  Returns
    (N, 9) arrays in row-major component order.
    """
    n = len(ds)
    if n == 0:
        raise EmptyDatasetError("cannot build F-P arrays from an empty dataset")
    Cm = batch.bmat(ds.C6)
    eigval, eigvec = np.linalg.eigh(Cm)
    if np.any(eigval <= 0.0):
        raise FormatError("dataset contains a non-positive-definite C")
    F = eigvec @ (np.sqrt(eigval)[..., None] * np.transpose(eigvec, (0, 2, 1)))
    P = F @ batch.bmat(ds.T6)
    return F.reshape(n, 9), P.reshape(n, 9)
