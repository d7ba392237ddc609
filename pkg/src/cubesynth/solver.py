"""Projection machinery on the reduced space.

The solution set for a target coefficient vector b is the affine set
{h in R^m : M'h = b} of slot weights whose low-degree data matches b.
Every operation here is built from two primitives: Euclidean projection
onto that affine set (via the cached Cholesky factor of G = M'M) and
coordinatewise clamping to a box.  Feasibility of the intersection is
decided by alternating projections with stagnation detection; the
shrinkage coefficient is found by bisection over that predicate (valid
because feasibility is monotone in the shrinkage toward the uniform
vector, which sits inside the box); the selected density is the exact
Euclidean projection of the uniform vector computed with Dykstra's
corrections, since plain alternating projections find a feasible point
but not the nearest one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from .conditioning import ReducedSpace
from .cube import FourierVector
from .errors import (
    ConditioningViolationError,
    ConfigurationError,
    IndeterminateError,
    SolverError,
)

FEAS_TOL = 1e-10          # affine-box gap below this means feasible
LAMBDA_TOL = 1e-9         # bisection width; the result is rounded up to the feasible side
RESIDUAL_TOL = 1e-9       # required infinity-norm of M'h - b at convergence
STAGNATION_WINDOW = 100   # iterations between gap comparisons
STAGNATION_REL = 1e-3     # relative gap change below this counts as stagnant
MAX_ITERATIONS = 100_000


@dataclass(frozen=True)
class Box:
    """Uniform per-coordinate bounds [lo, hi] on slot weights."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 < self.lo < self.hi):
            raise ConfigurationError(f"box needs 0 < lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class SlotDensity:
    """A weight vector over the slots of S with its constraint residuals."""

    weights: np.ndarray
    residual: float
    mass_error: float

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: np.ndarray
    gap: float
    iterations: int


class AffineConstraints:
    """The affine set {h : M'h = target} over a conditioned reduced space.

    The Cholesky factor of G = M'M is computed once and shared by every
    shrunk variant, so all projections in a run reuse one factorization.
    """

    def __init__(self, space: ReducedSpace, target, _shared=None):
        self.space = space
        if isinstance(target, FourierVector):
            if target.p != space.p or target.degree_bound != space.degree:
                raise ConfigurationError(
                    f"target is for (p={target.p}, d={target.degree_bound}) but the reduced "
                    f"space has (p={space.p}, d={space.degree})"
                )
            target = target.coeffs
        target = np.ascontiguousarray(np.asarray(target, dtype=np.float64))
        if target.shape != (space.num_coeffs,):
            raise ConfigurationError(
                f"target has shape {target.shape}, expected ({space.num_coeffs},)"
            )
        target.flags.writeable = False
        self.target = target
        if _shared is None:
            design = space.design.astype(np.float64)
            try:
                factor = scipy.linalg.cho_factor(space.gram.astype(np.float64))
            except scipy.linalg.LinAlgError as exc:
                raise ConditioningViolationError(
                    f"Gram matrix is numerically singular (sigma_min={space.sigma_min:.3g}); "
                    "the reduced space did not pass conditioning"
                ) from exc
            # M'u for the uniform vector u = (1/m, ..., 1/m): the column means.
            uniform_image = design.mean(axis=0)
            _shared = (design, factor, uniform_image)
        self._design, self._factor, self.uniform_image = _shared

    @property
    def m(self) -> int:
        return self.space.m

    def with_target(self, target: np.ndarray) -> "AffineConstraints":
        return AffineConstraints(
            self.space, target, _shared=(self._design, self._factor, self.uniform_image)
        )

    def shrunk(self, lam: float) -> "AffineConstraints":
        """Target of the set moved fraction ``lam`` toward the uniform vector."""
        return self.with_target((1.0 - lam) * self.target + lam * self.uniform_image)

    def residual(self, h: np.ndarray) -> float:
        return float(np.abs(self._design.T @ h - self.target).max())

    def project(self, z: np.ndarray) -> np.ndarray:
        """Euclidean projection z - M G^{-1} (M'z - target), with one
        refinement pass when round-off leaves a visible residual."""
        out = z - self._design @ scipy.linalg.cho_solve(
            self._factor, self._design.T @ z - self.target
        )
        tol = 1e-10 * max(1.0, float(np.abs(self.target).max()))
        r = self._design.T @ out - self.target
        if float(np.abs(r).max()) > tol:
            out = out - self._design @ scipy.linalg.cho_solve(self._factor, r)
        return out


def project_affine(z: np.ndarray, A: AffineConstraints) -> np.ndarray:
    return A.project(np.asarray(z, dtype=np.float64))


def project_box(z: np.ndarray, box: Box) -> np.ndarray:
    return np.clip(np.asarray(z, dtype=np.float64), box.lo, box.hi)


def uniform_weights(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def feasibility(
    A: AffineConstraints,
    box: Box,
    tol: float = FEAS_TOL,
    max_iterations: int = MAX_ITERATIONS,
) -> FeasibilityResult:
    """Decide whether the affine set intersects the box.

    Alternating projections from the uniform vector: the affine-box gap
    is non-increasing, so it either drops below ``tol`` (feasible, with
    the box-side iterate as witness) or flattens out at the positive
    distance between the sets (infeasible).  A run that does neither
    within the cap raises IndeterminateError rather than guessing.
    """
    return _feasibility(A, box.lo, box.hi, tol, max_iterations)


def _feasibility(A, lo, hi, tol, max_iterations) -> FeasibilityResult:
    z = uniform_weights(A.m)
    previous_gap = math.inf
    for it in range(1, max_iterations + 1):
        on_affine = A.project(z)
        z = np.clip(on_affine, lo, hi)
        gap = float(np.abs(on_affine - z).max())
        if gap <= tol:
            return FeasibilityResult(feasible=True, witness=z, gap=gap, iterations=it)
        if it % STAGNATION_WINDOW == 0:
            if previous_gap < math.inf and previous_gap - gap < STAGNATION_REL * previous_gap:
                return FeasibilityResult(feasible=False, witness=z, gap=gap, iterations=it)
            previous_gap = gap
    raise IndeterminateError(
        f"feasibility undecided after {max_iterations} iterations: gap={gap:.3g} "
        f"still above tol={tol:.3g} and not stagnant; tighten tol or raise the cap"
    )


def shrinkage_lambda(
    A: AffineConstraints,
    shrink_box: Box,
    tol_lambda: float = LAMBDA_TOL,
    feas_tol: float = FEAS_TOL,
) -> tuple[float, AffineConstraints, FeasibilityResult]:
    """Minimal shrinkage toward the uniform vector making the box reachable.

    Bisects the smallest lam in [0, 1] such that the affine set with
    target (1-lam) b + lam M'u meets ``shrink_box``; any witness at lam0
    slides along the chord toward u (which the box precondition places in
    its interior), so feasibility is monotone in lam and bisection is
    valid.  The result is rounded up to the certified-feasible side of
    the final bracket.
    """
    m = A.m
    if not (shrink_box.lo <= 1.0 / m <= shrink_box.hi):
        raise ConfigurationError(
            f"uniform weight 1/m={1.0 / m:.6g} must lie in the shrink box "
            f"[{shrink_box.lo:.6g}, {shrink_box.hi:.6g}]; choose delta <= 1/2 and "
            "Delta >= 1 + delta"
        )
    base = feasibility(A, shrink_box, tol=feas_tol)
    if base.feasible:
        return 0.0, A, base

    lo, hi = 0.0, 1.0
    hi_result = FeasibilityResult(
        feasible=True, witness=uniform_weights(m), gap=0.0, iterations=0
    )
    while hi - lo > tol_lambda:
        mid = 0.5 * (lo + hi)
        result = feasibility(A.shrunk(mid), shrink_box, tol=feas_tol)
        if result.feasible:
            hi, hi_result = mid, result
        else:
            lo = mid
    return hi, A.shrunk(hi), hi_result


def proximal_point(
    A_shrunk: AffineConstraints,
    select_box: Box,
    change_tol: float | None = None,
    residual_tol: float = RESIDUAL_TOL,
    max_iterations: int = MAX_ITERATIONS,
) -> SlotDensity:
    """Projection of the uniform vector onto (shrunk affine set) & box.

    Minimizing the L2(S) distance to uniform equals minimizing plain
    Euclidean distance (the 1/m norm factor is constant), so this is the
    Dykstra projection of u.  Stops when the iterate moves at most
    ``change_tol`` (default 1e-10/m) in infinity norm AND the constraint
    residual is within ``residual_tol``.
    """
    x, resid, change, its = _dykstra(
        uniform_weights(A_shrunk.m),
        A_shrunk,
        select_box.lo,
        select_box.hi,
        change_tol=1e-10 / A_shrunk.m if change_tol is None else change_tol,
        residual_tol=residual_tol,
        max_iterations=max_iterations,
    )
    return SlotDensity(
        weights=x, residual=resid, mass_error=abs(float(x.sum()) - 1.0)
    )


def _dykstra(
    r: np.ndarray,
    A: AffineConstraints,
    lo: float,
    hi: float,
    change_tol: float,
    residual_tol: float,
    max_iterations: int = MAX_ITERATIONS,
    box_first: bool = False,
) -> tuple[np.ndarray, float, float, int]:
    """Dykstra's scheme projecting ``r`` onto the affine set intersected
    with [lo, hi]^m.  The affine set needs no correction term (projection
    onto an affine set is already the fixed point of its correction), the
    box does.  ``box_first`` swaps the projection order; the limit is the
    same either way, which the tests use as a uniqueness check.
    """
    x = np.array(r, dtype=np.float64)
    q = np.zeros_like(x)
    resid = math.inf
    for it in range(1, max_iterations + 1):
        if box_first:
            y = np.clip(x + q, lo, hi)
            q = x + q - y
            x_new = A.project(y)
        else:
            y = A.project(x)
            x_new = np.clip(y + q, lo, hi)
            q = y + q - x_new
        change = float(np.abs(x_new - x).max())
        x = x_new
        if change <= change_tol:
            resid = A.residual(x)
            if resid <= residual_tol and _in_bounds(x, lo, hi, residual_tol):
                return x, resid, change, it
    raise SolverError(
        f"proximal projection did not converge in {max_iterations} iterations: "
        f"last change={change:.3g}, residual={A.residual(x):.3g}"
    )


def _in_bounds(x: np.ndarray, lo: float, hi: float, tol: float) -> bool:
    return bool((x >= lo - tol).all() and (x <= hi + tol).all())
