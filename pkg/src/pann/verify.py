"""Numerical verification suites for calibrated and analytical models.

Four independent checks are provided:

* :func:`relative_error` — the scale-free error statistic used throughout:
  the largest stress-residual norm over a dataset divided by the largest
  data-stress norm.
* :func:`nonneg_scan_iso` / :func:`nonneg_scan_transiso` — energy
  non-negativity sampling.  For isotropic models whose potential has
  strictly positive partials in the first two principal invariants, local
  minima can sit only on volumetric states, so a one-parameter scan over
  C = lambda^2 1 suffices; the hypothesis is checked first and the scan is
  downgraded to a three-stretch sweep when it fails.  Transversely
  isotropic models get a five-parameter quasi-random sweep (three
  stretches, two orientation angles).
* :func:`gradient_audit` — thermodynamic consistency: the analytical
  stress against twice the finite-difference gradient of the energy.
* :func:`variant_ladder_study` — calibrates every model variant many
  times on one dataset and reports order statistics of the relative
  error, the study behind the variant-comparison tables.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from . import batch, icnn
from .calibrate import CalibrationConfig, calibrate
from .datagen import Dataset, split
from .errors import AllZeroStressError, EmptyDatasetError, HypothesisViolatedWarning
from .invariants import MaterialSymmetry
from .model import VARIANTS, PannModel

__all__ = [
    "VIOLATION_TOL",
    "ErrorStats",
    "NonNegReport",
    "relative_error",
    "nonneg_scan_iso",
    "nonneg_scan_transiso",
    "gradient_audit",
    "variant_ladder_study",
    "write_epsilon_csv",
]

#: Energies below this (kPa) count as non-negativity violations.
VIOLATION_TOL = -1e-10


@dataclass(frozen=True)
class ErrorStats:
    """Order statistics of a sample of relative errors (no distributional fit)."""

    count: int
    median: float
    p25: float
    p75: float
    p1: float
    p99: float

    @classmethod
    def from_values(cls, values) -> "ErrorStats":
        v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
        if v.size == 0:
            raise EmptyDatasetError("no finite values to summarize")
        med, p25, p75, p1, p99 = np.percentile(v, [50.0, 25.0, 75.0, 1.0, 99.0])
        return cls(int(v.size), float(med), float(p25), float(p75), float(p1), float(p99))

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "median": self.median,
            "p25": self.p25,
            "p75": self.p75,
            "p1": self.p1,
            "p99": self.p99,
        }


@dataclass(frozen=True)
class NonNegReport:
    """Outcome of one energy non-negativity sweep."""

    sweep: str
    sample_count: int
    min_energy: float
    argmin_state: tuple
    violation_count: int
    hypothesis_ok: bool | None = None

    def to_dict(self) -> dict:
        return {
            "sweep": self.sweep,
            "sample_count": self.sample_count,
            "min_energy": self.min_energy,
            "argmin_state": list(self.argmin_state),
            "violation_count": self.violation_count,
            "hypothesis_ok": self.hypothesis_ok,
        }


def relative_error(model, ds: Dataset) -> float:
    """Largest residual-stress norm divided by largest data-stress norm.

    Being a ratio of like quantities, the value is unchanged under a common
    rescaling of model and data stresses.
    """
    if len(ds) == 0:
        raise EmptyDatasetError("relative error of an empty dataset is undefined")
    denom = float(batch.bnorm(ds.T6).max())
    if denom == 0.0:
        raise AllZeroStressError("all data stresses vanish; relative error undefined")
    num = float(batch.bnorm(model.stress_batch(ds.C6) - ds.T6).max())
    return num / denom


def _report(sweep: str, C6: np.ndarray, psi: np.ndarray,
            hypothesis_ok: bool | None = None) -> NonNegReport:
    k = int(np.argmin(psi))
    return NonNegReport(
        sweep=sweep,
        sample_count=int(psi.size),
        min_energy=float(psi[k]),
        argmin_state=tuple(float(x) for x in C6[k]),
        violation_count=int(np.sum(psi < VIOLATION_TOL)),
        hypothesis_ok=hypothesis_ok,
    )


def _volumetric_grid(lam_range, count: int) -> np.ndarray:
    """Log-spaced triple-stretch states C = lambda^2 1, identity included."""
    lams = np.geomspace(lam_range[0], lam_range[1], count)
    lams = np.unique(np.concatenate([lams, [1.0]]))
    C6 = np.zeros((lams.size, 6))
    C6[:, :3] = (lams * lams)[:, None]
    return C6


def _diag_stretch_sobol(lam_range, count: int, seed: int) -> np.ndarray:
    """Quasi-random diagonal states C = diag(l1^2, l2^2, l3^2), identity included."""
    u = _sobol(3, count, seed)
    llo, lhi = math.log(lam_range[0]), math.log(lam_range[1])
    lam2 = np.exp(llo + u * (lhi - llo)) ** 2
    C6 = np.zeros((count + 1, 6))
    C6[:count, :3] = lam2
    C6[count, :3] = 1.0
    return C6


def _sobol(dim: int, count: int, seed: int) -> np.ndarray:
    """First ``count`` points of a scrambled Sobol sequence in [0, 1)^dim."""
    m = max(1, math.ceil(math.log2(max(2, count))))
    return qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(m)[:count]


def network_invariant_partials(model: PannModel, C6) -> np.ndarray:
    """Partial derivatives of the network energy term in its invariant inputs."""
    feat = batch.features(batch.as_batch(C6), model.symmetry, check=False).feat
    return icnn.input_gradient(model.params, feat)


def nonneg_scan_iso(model, lam_range=(0.1, 10.0), count: int = 1000,
                    seed: int = 0) -> NonNegReport:
    """Energy non-negativity scan for an isotropic model.

    Network models are first probed for strictly positive energy partials
    in the first two principal invariants over the volumetric grid (the
    condition under which volumetric states are the only candidates for
    local minima).  If the probe fails, a warning is emitted and the scan
    falls back to a quasi-random sweep over all three stretches.
    """
    if not model.symmetry.is_isotropic:
        raise ValueError("nonneg_scan_iso requires an isotropic model")
    C6 = _volumetric_grid(lam_range, count)
    hypothesis_ok: bool | None = None
    if isinstance(model, PannModel):
        g = network_invariant_partials(model, C6)
        hypothesis_ok = bool(g[:, 0].min() > 0.0 and g[:, 1].min() > 0.0)
        if not hypothesis_ok:
            warnings.warn(
                "energy partials in I1/I2 are not strictly positive; "
                "downgrading to a three-stretch sweep",
                HypothesisViolatedWarning,
            )
            C6 = _diag_stretch_sobol(lam_range, count, seed)
            psi = model.energy_batch(C6)
            return _report(
                f"diagonal-stretch sobol sweep, lambda in {list(lam_range)}",
                C6, psi, hypothesis_ok)
    psi = model.energy_batch(C6)
    return _report(
        f"volumetric grid, lambda in {list(lam_range)}, {C6.shape[0]} states",
        C6, psi, hypothesis_ok)


def _rotated_stretch_c6(lam2: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Vectorized C = R diag(lambda^2) R^T for the two-angle rotation family."""
    n = lam2.shape[0]
    c2, s2 = np.cos(phis[:, 0]), np.sin(phis[:, 0])
    c3, s3 = np.cos(phis[:, 1]), np.sin(phis[:, 1])
    R = np.empty((n, 3, 3))
    R[:, 0, 0] = c2 * c3
    R[:, 0, 1] = -c2 * s3
    R[:, 0, 2] = s2
    R[:, 1, 0] = s3
    R[:, 1, 1] = c3
    R[:, 1, 2] = 0.0
    R[:, 2, 0] = -s2 * c3
    R[:, 2, 1] = s2 * s3
    R[:, 2, 2] = c2
    C = np.einsum("nik,nk,njk->nij", R, lam2, R, optimize=True)
    C6 = np.empty((n, 6))
    C6[:, 0] = C[:, 0, 0]
    C6[:, 1] = C[:, 1, 1]
    C6[:, 2] = C[:, 2, 2]
    C6[:, 3] = 0.5 * (C[:, 0, 1] + C[:, 1, 0])
    C6[:, 4] = 0.5 * (C[:, 0, 2] + C[:, 2, 0])
    C6[:, 5] = 0.5 * (C[:, 1, 2] + C[:, 2, 1])
    return C6


def nonneg_scan_transiso(model, lam_range=(0.1, 10.0), angle_range=(0.0, 0.5 * math.pi),
                         count: int = 200_000, seed: int = 0,
                         grid: bool = False, grid_points: int = 10) -> NonNegReport:
    """Five-parameter energy sweep for a transversely isotropic model.

    States are C = R diag(lambda^2) R^T with log-uniform stretches and the
    two-angle rotation family; a third angle about the preferred axis would
    leave all invariants unchanged.  Default sampling is a scrambled Sobol
    sequence (deterministic under ``seed``); ``grid=True`` switches to a
    dense grid with ``grid_points`` per axis.  The identity state is always
    appended.
    """
    if model.symmetry.is_isotropic:
        raise ValueError("nonneg_scan_transiso requires a transversely isotropic model")
    llo, lhi = math.log(lam_range[0]), math.log(lam_range[1])
    if grid:
        axis_l = np.exp(np.linspace(llo, lhi, grid_points))
        axis_p = np.linspace(angle_range[0], angle_range[1], grid_points)
        g = np.meshgrid(axis_l, axis_l, axis_l, axis_p, axis_p, indexing="ij")
        lams = np.stack([g[0].ravel(), g[1].ravel(), g[2].ravel()], axis=1)
        phis = np.stack([g[3].ravel(), g[4].ravel()], axis=1)
        desc = f"grid sweep, {grid_points} points per axis"
    else:
        u = _sobol(5, count, seed)
        lams = np.exp(llo + u[:, :3] * (lhi - llo))
        phis = angle_range[0] + u[:, 3:] * (angle_range[1] - angle_range[0])
        desc = f"sobol sweep, {count} samples, seed {seed}"
    C6 = _rotated_stretch_c6(lams * lams, phis)
    C6 = np.vstack([C6, [[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]]])
    psi = model.energy_batch(C6)
    return _report(f"{desc}, lambda in {list(lam_range)}", C6, psi)


def gradient_audit(model, count: int = 100, seed: int = 0,
                   step: float = 1e-6, stretch_range=(0.7, 1.6)) -> dict:
    """Compare analytical stress against the energy gradient by differences.

    For each random admissible state the stress is checked against central
    finite differences of the energy in the six stored components (diagonal
    perturbations carry the factor two of the stress definition; a stored
    off-diagonal perturbs two matrix entries at once, which supplies the
    factor by itself).  Deviations are relative with a 1 kPa floor.
    """
    rng = np.random.default_rng(seed)
    lams = np.exp(rng.uniform(math.log(stretch_range[0]), math.log(stretch_range[1]),
                              size=(count, 3)))
    phis = rng.uniform(0.0, 0.5 * math.pi, size=(count, 2))
    C6 = _rotated_stretch_c6(lams * lams, phis)
    T_an = model.stress_batch(C6)
    T_fd = np.empty_like(T_an)
    for j in range(6):
        h = step * np.maximum(1.0, np.abs(C6[:, j]))
        Cp = C6.copy()
        Cp[:, j] += h
        Cm = C6.copy()
        Cm[:, j] -= h
        d = (model.energy_batch(Cp) - model.energy_batch(Cm)) / (2.0 * h)
        T_fd[:, j] = 2.0 * d if j < 3 else d
    dev = batch.bnorm(T_an - T_fd) / np.maximum(1.0, batch.bnorm(T_an))
    return {
        "count": int(count),
        "seed": int(seed),
        "step": float(step),
        "max_relative_deviation": float(dev.max()),
        "mean_relative_deviation": float(dev.mean()),
    }


def _ladder_run(args):
    """One (variant, run) cell of the ladder study; top level for pickling."""
    (variant, run, ds, sym, hidden_layers, restarts, prune_iter, prune_keep,
     max_iter, polish_iter, polish_top, seed) = args
    try:
        cal, test = split(ds, 0.7, seed=seed + run)
        cfg = CalibrationConfig(restarts=restarts, prune_iter=prune_iter,
                                prune_keep=prune_keep, max_iter=max_iter,
                                polish_iter=polish_iter, polish_top=polish_top,
                                seed=seed + run * restarts)
        res = calibrate(cal, test, variant, sym, hidden_layers, cfg)
        eps = relative_error(res.model, ds)
        return (variant, run, eps, res.train_mse, res.test_mse, None)
    except Exception as exc:  # propagate per-run, tagged
        return (variant, run, float("nan"), float("nan"), float("nan"),
                f"{type(exc).__name__}: {exc}")


def variant_ladder_study(sym: MaterialSymmetry, ds: Dataset, runs: int = 20,
                         restarts: int = 30, seed: int = 0,
                         hidden_layers=(8,), prune_iter: int = 150,
                         prune_keep: int = 8, max_iter: int = 600,
                         polish_iter: int = 2500, polish_top: int = 3,
                         threads: int = 1, variants=VARIANTS) -> dict:
    """Repeatedly calibrate every variant and summarize the relative errors.

    Each run draws its own 70/30 calibration/test split and its own bank of
    restart initializations; the error statistic is computed on the full
    dataset.  Runs are independent, so they parallelize over processes;
    aggregation is by (variant, run) index and therefore order-free.
    """
    tasks = [(v, r, ds, sym, tuple(hidden_layers), restarts, prune_iter,
              prune_keep, max_iter, polish_iter, polish_top, seed)
             for v in variants for r in range(runs)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(_ladder_run, tasks, chunksize=1))
    else:
        raw = [_ladder_run(t) for t in tasks]
    cells = {(v, r): (eps, tr, te, err) for (v, r, eps, tr, te, err) in raw}

    out = {
        "symmetry": sym.kind,
        "runs": runs,
        "restarts": restarts,
        "seed": seed,
        "hidden_layers": list(hidden_layers),
        "prune_iter": prune_iter,
        "prune_keep": prune_keep,
        "max_iter": max_iter,
        "polish_iter": polish_iter,
        "polish_top": polish_top,
        "variants": {},
    }
    for v in variants:
        entries = []
        eps_values = []
        for r in range(runs):
            eps, tr, te, err = cells[(v, r)]
            entries.append({
                "run": r,
                "epsilon": None if math.isnan(eps) else eps,
                "train_mse": None if math.isnan(tr) else tr,
                "test_mse": None if te is None or math.isnan(te) else te,
                "error": err,
            })
            if not math.isnan(eps):
                eps_values.append(eps)
        out["variants"][v] = {
            "stats": ErrorStats.from_values(eps_values).to_dict(),
            "epsilons": eps_values,
            "failed_runs": [e["run"] for e in entries if e["error"] is not None],
            "runs": entries,
        }
    return out


def write_epsilon_csv(values, path) -> None:
    """One relative-error value per line under an ``epsilon`` header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epsilon\n")
        for v in values:
            fh.write(f"{v:.17g}\n")
