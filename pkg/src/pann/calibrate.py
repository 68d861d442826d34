"""Sobolev calibration of the neural models by multi-restart quasi-Newton.

The loss is the mean squared Frobenius norm of the stress residual over the
calibration tuples (kPa^2); for the deformation-gradient baseline it is the
same quantity on first Piola-Kirchhoff components.  Optimization uses the
bound-constrained limited-memory quasi-Newton method; projected steps keep
every iterate feasible when weights must stay non-negative.

Two ingredients make the small-network fits converge reliably:

* **Conditioning.**  The optimizer works in an affine reparameterization of
  the weights: first-layer weights are scaled by the per-invariant standard
  deviation of the calibration inputs, first-layer biases absorb the input
  means, and output-layer weights carry the data stress scale.  The map is
  exact (the physical parameters returned are untransformed), its Jacobian
  is constant, and it maps the non-negativity box onto itself, so bounds
  stay simple.  Without it the optimizer stalls on plateaus two orders of
  magnitude above the reachable loss.
* **Budgeting.**  All restarts run with a short iteration cap first; the
  few best finishers are then polished with a long cap.  Early-stop
  tolerances are disabled — the stopping rule is the cap or an absolute
  loss floor — because relative-improvement tests fire long before these
  landscapes are exhausted.

Gradients are analytical (a fused tangent/reverse sweep in the kernel
backend, including the dependence of the stress-normalization constants on
the weights, which are recomputed at every evaluation).  A central
finite-difference gradient is kept as :func:`loss_gradient` and doubles as
the correctness oracle for the analytical path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .datagen import Dataset, fp_arrays
from .errors import EmptyDatasetError, NonFiniteLossError
from .icnn import NetworkArchitecture, NetworkParams, init_params
from .invariants import MaterialSymmetry
from .model import VARIANTS, PannModel, SimpleFP, SimpleFPParams

__all__ = [
    "CalibrationConfig",
    "CalibrationResult",
    "loss",
    "loss_gradient",
    "calibrate",
    "calibrate_simple_fp",
]

_W6 = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])

# Relative-improvement stopping is disabled; restarts stop on the iteration
# cap or the absolute loss floor.  (The value feeds the optimizer's factr
# machinery, where it divides machine epsilon.)
_FTOL_OFF = 1e-18


@dataclass(frozen=True)
class CalibrationConfig:
    """Knobs of the multi-restart optimization.

    Restarts run in three stages: a short pruning pass over every restart
    (``prune_iter`` iterations), a full-depth pass for the ``prune_keep``
    best survivors (``max_iter``), and a deep polish for the ``polish_top``
    best of those (``polish_iter``).  Setting ``prune_keep >= restarts`` or
    ``prune_iter <= 0`` disables the pruning pass.
    """

    restarts: int = 30
    prune_iter: int = 150        # iteration cap of the pruning pass
    prune_keep: int = 8          # survivors continued at full depth
    max_iter: int = 600          # iteration cap of the full-depth stage
    polish_iter: int = 2500     # iteration cap of the polish stage
    polish_top: int = 3          # how many best restarts get polished
    gtol: float = 0.0            # projected-gradient stop; 0 disables
    seed: int = 0
    loss_floor: float = 1e-12    # stop a restart early below this loss

    def to_dict(self) -> dict:
        return {
            "restarts": self.restarts,
            "prune_iter": self.prune_iter,
            "prune_keep": self.prune_keep,
            "max_iter": self.max_iter,
            "polish_iter": self.polish_iter,
            "polish_top": self.polish_top,
            "gtol": self.gtol,
            "seed": self.seed,
            "loss_floor": self.loss_floor,
        }


@dataclass
class CalibrationResult:
    """Outcome of one multi-restart calibration."""

    model: object                  # PannModel or SimpleFP
    train_mse: float
    test_mse: float | None
    restart_losses: list
    best_restart: int
    config: CalibrationConfig
    failed_restarts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "train_mse": self.train_mse,
            "test_mse": self.test_mse,
            "restart_losses": self.restart_losses,
            "best_restart": self.best_restart,
            "failed_restarts": self.failed_restarts,
            "config": self.config.to_dict(),
        }


def loss(model, ds: Dataset) -> float:
    """Mean squared stress residual of a model over a dataset (kPa^2)."""
    if len(ds) == 0:
        raise EmptyDatasetError("loss of an empty dataset is undefined")
    if isinstance(model, SimpleFP):
        F9, P9 = fp_arrays(ds)
        R = model.forward_batch(F9) - P9
        return float(np.mean((R * R).sum(axis=1)))
    R = model.stress_batch(ds.C6) - ds.T6
    return float(np.mean((R * R) @ _W6))


def _variant_flags(variant: str):
    growth = 1 if variant in ("polyconvex_growth", "pann") else 0
    normalize = 1 if variant == "pann" else 0
    return growth, normalize


def _mse_of_theta(C6, T6, theta, sizes, tiso, beta, growth, normalize) -> float:
    T = _kernels.stress_batch(C6, theta, sizes, tiso, beta, growth, normalize)
    R = T - T6
    return float(np.mean((R * R) @ _W6))


def loss_gradient(arch: NetworkArchitecture, sym: MaterialSymmetry, variant: str,
                  theta, ds: Dataset, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of the loss in the flat parameters.

    Step size scales per parameter as ``step * max(1, |theta_i|)``.  This is
    the slow reference; the calibration loop itself uses the analytical
    gradient, which agrees with this one to roundoff-limited accuracy.
    """
    theta = np.asarray(theta, dtype=float)
    sizes = np.array(arch.layer_sizes(), dtype=np.int64)
    tiso = 0 if sym.is_isotropic else 1
    beta = 0.0 if sym.is_isotropic else sym.structural.beta
    growth, normalize = _variant_flags(variant)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        h = step * max(1.0, abs(theta[i]))
        tp = theta.copy()
        tp[i] += h
        tm = theta.copy()
        tm[i] -= h
        fp = _mse_of_theta(ds.C6, ds.T6, tp, sizes, tiso, beta, growth, normalize)
        fm = _mse_of_theta(ds.C6, ds.T6, tm, sizes, tiso, beta, growth, normalize)
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


class _Precond:
    """Constant affine map ``theta = A(phi)`` used to condition the search.

    First-layer weights are divided by per-input scales, first-layer biases
    are shifted so the layer effectively sees centered inputs, and output
    weights are multiplied by the data stress scale.  Non-negative scales
    keep weight bounds at ``phi >= 0``, and ``A`` has a constant Jacobian,
    so gradients transform by one multiplication.
    """

    def __init__(self, arch: NetworkArchitecture, center, scale, out_scale):
        sizes = arch.layer_sizes()
        self.k = sizes[0]
        self.h1 = sizes[1]
        self.n_out = sizes[-1]
        self.center = np.asarray(center, dtype=float)
        self.scale = np.asarray(scale, dtype=float)
        self.out_scale = float(out_scale)

    @classmethod
    def identity(cls, arch: NetworkArchitecture) -> "_Precond":
        return cls(arch, np.zeros(arch.input_dim), np.ones(arch.input_dim), 1.0)

    @classmethod
    def from_data(cls, arch: NetworkArchitecture, feat, stress_scale) -> "_Precond":
        center = feat.mean(axis=0)
        scale = feat.std(axis=0)
        scale[scale == 0.0] = 1.0
        return cls(arch, center, scale, max(float(stress_scale), 1e-8))

    def theta(self, phi: np.ndarray) -> np.ndarray:
        th = np.array(phi, dtype=float)
        nwk = self.h1 * self.k
        W1 = th[:nwk].reshape(self.h1, self.k) / self.scale
        th[:nwk] = W1.ravel()
        th[nwk:nwk + self.h1] = phi[nwk:nwk + self.h1] - W1 @ self.center
        th[-self.n_out:] = phi[-self.n_out:] * self.out_scale
        return th

    def pull_gradient(self, g_theta: np.ndarray) -> np.ndarray:
        g = np.array(g_theta, dtype=float)
        nwk = self.h1 * self.k
        gb = g_theta[nwk:nwk + self.h1]
        GW = g_theta[:nwk].reshape(self.h1, self.k)
        g[:nwk] = ((GW - gb[:, None] * self.center[None, :]) / self.scale[None, :]).ravel()
        g[-self.n_out:] = g_theta[-self.n_out:] * self.out_scale
        return g


class _FloorHit(Exception):
    """Internal: a restart reached the early-stopping loss floor."""


def _minimize_tracked(objective, phi0, bounds, max_iter, gtol, loss_floor):
    """One bounded quasi-Newton descent; returns the best iterate seen."""
    state = {"phi": np.array(phi0, dtype=float), "f": np.inf}

    def wrapped(phi):
        f, g = objective(phi)
        if np.isfinite(f) and f < state["f"]:
            state["f"] = f
            state["phi"] = phi.copy()
        if f < loss_floor:
            raise _FloorHit
        return f, g

    try:
        res = minimize(
            wrapped, phi0, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": max_iter, "gtol": gtol, "ftol": _FTOL_OFF,
                     "maxcor": 80},
        )
        if np.isfinite(res.fun) and res.fun < state["f"]:
            state["f"], state["phi"] = float(res.fun), res.x
    except _FloorHit:
        pass
    return state["f"], state["phi"]


def _run_restarts(objective, phi_init, bounds, config):
    """Pruned multi-stage descent; see :class:`CalibrationConfig`."""
    pruning = 0 < config.prune_iter and config.prune_keep < config.restarts
    first_cap = config.prune_iter if pruning else config.max_iter

    losses = []
    failed = []
    iterates = {}
    for r in range(config.restarts):
        f, phi = _minimize_tracked(objective, phi_init(r), bounds,
                                   first_cap, config.gtol, config.loss_floor)
        if not np.isfinite(f):
            failed.append(r)
            losses.append(float("nan"))
            continue
        losses.append(float(f))
        iterates[r] = phi

    if not iterates:
        raise NonFiniteLossError(
            f"all {config.restarts} restarts produced non-finite losses"
        )

    def _continue(candidates, cap):
        for r in candidates:
            if losses[r] < config.loss_floor:
                continue
            f, phi = _minimize_tracked(objective, iterates[r], bounds,
                                       cap, config.gtol, config.loss_floor)
            if np.isfinite(f) and f < losses[r]:
                losses[r] = float(f)
                iterates[r] = phi

    if pruning:
        ranked = sorted(iterates, key=lambda r: (losses[r], r))
        _continue(ranked[:max(1, config.prune_keep)], config.max_iter)

    ranked = sorted(iterates, key=lambda r: (losses[r], r))
    _continue(ranked[:max(1, config.polish_top)], config.polish_iter)

    best = min(iterates, key=lambda r: (losses[r], r))
    return np.asarray(iterates[best], dtype=float), losses, failed, best


def calibrate(cal: Dataset, test: Dataset | None, variant: str,
              sym: MaterialSymmetry, hidden_layers=(8,),
              config: CalibrationConfig = CalibrationConfig()) -> CalibrationResult:
    """Fit one model variant to calibration data; report train/test loss."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if len(cal) == 0:
        raise EmptyDatasetError("cannot calibrate on an empty dataset")
    constrained = variant != "basic"
    arch = NetworkArchitecture(sym.input_dim, tuple(hidden_layers), constrained)
    sizes = np.array(arch.layer_sizes(), dtype=np.int64)
    tiso = 0 if sym.is_isotropic else 1
    beta = 0.0 if sym.is_isotropic else sym.structural.beta
    growth, normalize = _variant_flags(variant)
    C6 = np.ascontiguousarray(cal.C6)
    T6 = np.ascontiguousarray(cal.T6)
    prep = _kernels.prepare(C6, tiso, beta)
    stress_scale = float(np.sqrt((T6 * T6) @ _W6).max())
    pre = _Precond.from_data(arch, prep[0], stress_scale)

    bounds = None
    mask = init_params(arch, 0).weight_mask()
    if constrained:
        bounds = [(0.0, None) if m else (None, None) for m in mask]

    def objective(phi):
        f, g = _kernels.mse_and_grad_prepared(
            prep, T6, pre.theta(phi), sizes, tiso, beta, growth, normalize)
        return f, pre.pull_gradient(g)

    def phi_init(r):
        return init_params(arch, config.seed + r).to_flat()

    phi, losses, failed, best_idx = _run_restarts(objective, phi_init, bounds, config)
    theta = pre.theta(phi)
    if constrained:
        theta = np.where(mask, np.maximum(theta, 0.0), theta)
    params = NetworkParams.from_flat(arch, theta)
    model = PannModel(variant, sym, params)
    train_mse = loss(model, cal)
    test_mse = loss(model, test) if test is not None and len(test) else None
    return CalibrationResult(model, train_mse, test_mse, losses, best_idx, config, failed)


def _simple_fp_objective(F9, P9, hidden, out_scale):
    n = F9.shape[0]

    def objective(phi):
        th = phi.copy()
        th[-(9 * hidden + 9):] *= out_scale       # W and B carry the stress scale
        params = SimpleFPParams.from_flat(hidden, th)
        Z = F9 @ params.w.T + params.b
        S = 1.0 / (1.0 + np.exp(-np.clip(Z, -500.0, 500.0)))
        A = np.logaddexp(0.0, Z)
        P = A @ params.W + params.B
        R = P - P9
        f = float(np.mean((R * R).sum(axis=1)))
        dP = (2.0 / n) * R
        dB = dP.sum(axis=0)
        dW = A.T @ dP
        dZ = (dP @ params.W.T) * S
        db = dZ.sum(axis=0)
        dw = dZ.T @ F9
        grad = np.concatenate([dw.ravel(), db, dW.ravel(), dB])
        grad[-(9 * hidden + 9):] *= out_scale
        return f, grad

    return objective


def calibrate_simple_fp(cal: Dataset, test: Dataset | None, hidden: int = 4,
                        config: CalibrationConfig = CalibrationConfig()) -> CalibrationResult:
    """Fit the unstructured F -> P baseline network to the same data."""
    if len(cal) == 0:
        raise EmptyDatasetError("cannot calibrate on an empty dataset")
    F9, P9 = fp_arrays(cal)
    out_scale = max(float(np.linalg.norm(P9, axis=1).max()), 1e-8)
    objective = _simple_fp_objective(F9, P9, hidden, out_scale)

    def phi_init(r):
        return SimpleFPParams.init(hidden, config.seed + r).to_flat()

    phi, losses, failed, best_idx = _run_restarts(objective, phi_init, None, config)
    theta = phi.copy()
    theta[-(9 * hidden + 9):] *= out_scale
    model = SimpleFP(SimpleFPParams.from_flat(hidden, theta))
    train_mse = loss(model, cal)
    test_mse = loss(model, test) if test is not None and len(test) else None
    return CalibrationResult(model, train_mse, test_mse, losses, best_idx, config, failed)
