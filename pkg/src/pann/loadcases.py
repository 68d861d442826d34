"""Stress-controlled load cases: uniaxial, equibiaxial and simple shear.

Uniaxial extension prescribes the axial stretch and leaves the lateral
stretch free:  C = diag(l1^2, l2^2, l2^2) with the lateral second
Piola-Kirchhoff stress driven to zero.  Equibiaxial extension prescribes two
stretches, C = diag(l1^2, l1^2, l2^2), and zeroes the thickness stress.
Both reduce to one scalar root-finding problem per prescribed stretch,
solved by a bracketed, safeguarded Newton iteration (numerical derivative,
bisection fallback, strict residual tolerance).  Simple shear prescribes

    C = [[1, g, 0], [g, 1 + g^2, 0], [0, 0, 1]],   det C = 1,

and needs no solve.

Stretch grids run uniformly over the requested range; when the range
crosses the undeformed state the grid is built from a compression and a
tension segment that both contain stretch 1, so the undeformed tuple
appears exactly twice while the total count stays as requested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BracketFailureError, NewtonDivergenceError
from .tensor3 import SymTensor3

__all__ = [
    "LoadPoint",
    "solve_uniaxial",
    "solve_biaxial",
    "shear_point",
    "stretch_grid",
    "uniaxial_path",
    "biaxial_path",
    "shear_path",
]

BRACKET = (0.2, 5.0)
RESIDUAL_TOL = 1e-12
MAX_ITER = 100


@dataclass(frozen=True)
class LoadPoint:
    """One solved load state: control value, deformation and full stress."""

    control: float
    C: SymTensor3
    T: SymTensor3
    free_stretch: float | None = None


def _uniaxial_C(lam1: float, lam2: float) -> SymTensor3:
    return SymTensor3.diag(lam1 * lam1, lam2 * lam2, lam2 * lam2)

def _biaxial_C(lam1: float, lam2: float) -> SymTensor3:
    return SymTensor3.diag(lam1 * lam1, lam1 * lam1, lam2 * lam2)


def _solve_lateral(model, lam1, make_C, residual_index, drive_index,
                   initial, bracket, tol, max_iter):
    """Safeguarded Newton on the scalar lateral-stress residual.

    ``make_C(lam1, x)`` builds the trial state from the free stretch x,
    ``residual_index`` picks the component to zero, ``drive_index``
    the driven component used to scale the stopping tolerance.
    """
    lo, hi = bracket

    def residual(x):
        T = model.stress(make_C(lam1, x)).components()
        return T[residual_index], T[drive_index]

    f_lo, _ = residual(lo)
    f_hi, _ = residual(hi)
    a, b, f_a, f_b = lo, hi, f_lo, f_hi
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        # scan for an interior sign change before giving up
        grid = np.geomspace(lo, hi, 33)
        vals = [residual(x)[0] for x in grid]
        for i in range(len(grid) - 1):
            if np.sign(vals[i]) != np.sign(vals[i + 1]):
                a, b, f_a, f_b = grid[i], grid[i + 1], vals[i], vals[i + 1]
                break
        else:
            raise BracketFailureError(
                f"lateral stress does not change sign on [{lo}, {hi}] "
                f"for prescribed stretch {lam1}"
            )

    x = initial if initial is not None and a < initial < b else 0.5 * (a + b)
    f_x, t_drive = residual(x)
    for _ in range(max_iter):
        if abs(f_x) <= tol * max(1.0, abs(t_drive)):
            return x
        # keep the bracket current
        if np.sign(f_x) == np.sign(f_a):
            a, f_a = x, f_x
        else:
            b, f_b = x, f_x
        h = 1e-7 * max(1.0, abs(x))
        d = (residual(x + h)[0] - residual(x - h)[0]) / (2.0 * h)
        step_ok = d != 0.0 and np.isfinite(d)
        if step_ok:
            x_new = x - f_x / d
            step_ok = a < x_new < b
        if not step_ok:
            x_new = 0.5 * (a + b)
        x = x_new
        f_x, t_drive = residual(x)
    raise NewtonDivergenceError(
        f"no convergence after {max_iter} iterations at stretch {lam1} "
        f"(last residual {f_x!r})"
    )


def solve_uniaxial(model, lam1: float, initial: float | None = None,
                   bracket=BRACKET, tol: float = RESIDUAL_TOL,
                   max_iter: int = MAX_ITER) -> LoadPoint:
    """Uniaxial extension at prescribed axial stretch; lateral stress zeroed."""
    lam2 = _solve_lateral(model, lam1, _uniaxial_C, 1, 0,
                          initial, bracket, tol, max_iter)
    C = _uniaxial_C(lam1, lam2)
    return LoadPoint(lam1, C, model.stress(C), lam2)


def solve_biaxial(model, lam1: float, initial: float | None = None,
                  bracket=BRACKET, tol: float = RESIDUAL_TOL,
                  max_iter: int = MAX_ITER) -> LoadPoint:
    """Equibiaxial extension at prescribed in-plane stretch; thickness stress zeroed."""
    lam2 = _solve_lateral(model, lam1, _biaxial_C, 2, 0,
                          initial, bracket, tol, max_iter)
    C = _biaxial_C(lam1, lam2)
    return LoadPoint(lam1, C, model.stress(C), lam2)


def shear_point(model, gamma: float) -> LoadPoint:
    """Simple shear of amount gamma (volume preserving by construction)."""
    C = SymTensor3(1.0, 1.0 + gamma * gamma, 1.0, gamma, 0.0, 0.0)
    return LoadPoint(gamma, C, model.stress(C))


def stretch_grid(lo: float, hi: float, count: int,
                 duplicate_identity: bool = True) -> np.ndarray:
    """Uniform control grid; the undeformed point appears twice if crossed.

    With ``duplicate_identity`` and lo < 1 < hi the grid is the union of a
    compression segment [lo, 1] with ceil(count/2) points and a tension
    segment [1, hi] with the remaining points, both inclusive, so the total
    length is exactly ``count`` and the value 1 occurs twice.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not (lo < hi):
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if duplicate_identity and lo < 1.0 < hi:
        n_comp = (count + 1) // 2
        n_tens = count - n_comp
        comp = np.linspace(lo, 1.0, n_comp)
        tens = np.linspace(1.0, hi, n_tens)
        return np.concatenate([comp, tens])
    return np.linspace(lo, hi, count)


def _path(solver, model, lo, hi, count, duplicate_identity):
    grid = stretch_grid(lo, hi, count, duplicate_identity)
    points = []
    guess = None
    for lam1 in grid:
        pt = solver(model, float(lam1), initial=guess)
        guess = pt.free_stretch
        points.append(pt)
    return points


def uniaxial_path(model, lo: float, hi: float, count: int,
                  duplicate_identity: bool = True) -> list[LoadPoint]:
    """Uniaxial states over a stretch grid, with continuation initial guesses."""
    return _path(solve_uniaxial, model, lo, hi, count, duplicate_identity)


def biaxial_path(model, lo: float, hi: float, count: int,
                 duplicate_identity: bool = True) -> list[LoadPoint]:
    return _path(solve_biaxial, model, lo, hi, count, duplicate_identity)


def shear_path(model, lo: float, hi: float, count: int) -> list[LoadPoint]:
    """Simple shear states on a uniform amount grid (no duplication)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return [shear_point(model, float(g)) for g in np.linspace(lo, hi, count)]
