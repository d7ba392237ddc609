"""Accuracy measurement, exact marginal matching, and calibration helpers.

Accuracy is measured over every marginal query of dimension at most d.
Exact matching looks for a nonnegative mass-one reweighting of the slots
whose low-degree data equals the target's; it is a feasibility
computation, so a stagnating gap is reported as "no witness found"
rather than taken as a proof of infeasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .conditioning import ReducedSpace
from .cube import (
    Dataset,
    FourierVector,
    MarginalQuery,
    all_queries,
    fourier_of_dataset,
    low_degree_count,
    marginal_from_fourier,
    query_count,
)
from .errors import ConfigurationError, InputError
from .rng import stream_generator
from .solver import (
    FEAS_TOL,
    MAX_ITERATIONS,
    RESIDUAL_TOL,
    SlotDensity,
    _dykstra,
    _feasibility,
    uniform_weights,
)

QUERY_CAP = 10**6
FULL_CUBE_MAX_P = 14  # exact population quantities enumerate all 2^p points


@dataclass(frozen=True)
class AccuracyReport:
    """Per-query absolute marginal errors between two datasets."""

    per_query_errors: dict[MarginalQuery, float]
    max_error: float
    mean_error: float
    degree_bound: int

    def per_degree(self) -> dict[int, tuple[float, float]]:
        """Map dimension -> (max error, mean error) over queries of that dimension."""
        buckets: dict[int, list[float]] = {}
        for q, err in self.per_query_errors.items():
            buckets.setdefault(q.dimension, []).append(err)
        return {
            dim: (max(errs), sum(errs) / len(errs)) for dim, errs in sorted(buckets.items())
        }


@dataclass(frozen=True)
class CalibrationParams:
    """Knobs of the calibration formulas.

    gamma        -- failure budget of the conditioning draw
    alpha        -- lower-regularity of the sampling density (1 = uniform)
    kappa        -- bound on the density ratio in L2
    delta_target -- per-weight slack delta
    """

    gamma: float
    alpha: float = 1.0
    kappa: float = 1.0
    delta_target: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma must be in (0,1), got {self.gamma}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must be in (0,1], got {self.alpha}")
        if self.kappa < 1.0:
            raise ConfigurationError(f"kappa must be >= 1, got {self.kappa}")
        if not 0.0 < self.delta_target < 1.0:
            raise ConfigurationError(f"delta_target must be in (0,1), got {self.delta_target}")


@dataclass(frozen=True)
class MatchResult:
    """Outcome of an exact-match attempt: a witness density or a labelled miss."""

    outcome: str  # "witness" or "no witness found"
    density: SlotDensity | None
    gap: float
    iterations: int

    @property
    def feasible(self) -> bool:
        return self.outcome == "witness"


@dataclass(frozen=True)
class DeviationEstimate:
    """Monte-Carlo lower estimate of the empirical-vs-population L1 gap."""

    max_deviation: float
    bound: float  # 2 sqrt(C(p,<=d) / m)
    envelope_factor: float
    trials: int
    p: int
    d: int
    m: int


def accuracy_report(X: Dataset, Y: Dataset, d: int, query_cap: int = QUERY_CAP) -> AccuracyReport:
    """Absolute error of every degree-<=d marginal of Y against X."""
    if X.p != Y.p:
        raise InputError(f"datasets disagree on dimension: {X.p} vs {Y.p}")
    if X.n == 0 or Y.n == 0:
        raise InputError("accuracy comparison needs nonempty datasets")
    total = query_count(X.p, d)
    if total > query_cap:
        raise ConfigurationError(
            f"refusing to evaluate {total} queries (cap {query_cap}); lower d or raise the cap"
        )
    bx = fourier_of_dataset(X, d)
    by = fourier_of_dataset(Y, d)
    errors: dict[MarginalQuery, float] = {}
    for q in all_queries(X.p, d):
        errors[q] = abs(marginal_from_fourier(by, q) - marginal_from_fourier(bx, q))
    values = np.fromiter(errors.values(), dtype=np.float64, count=len(errors))
    return AccuracyReport(
        per_query_errors=errors,
        max_error=float(values.max()),
        mean_error=float(values.mean()),
        degree_bound=d,
    )


class _ReducedAffine:
    """Projector onto {h : M'h = b} through orthonormalized constraint rows.

    An SVD of M' replaces the Gram Cholesky so that rank-deficient
    designs (e.g. slots confined to a halfcube, where some parities are
    constant) are handled uniformly: dependent constraint rows collapse,
    and a target outside the row space is recognized as inconsistent.
    """

    def __init__(self, space: ReducedSpace, target: np.ndarray):
        design = space.design.astype(np.float64)
        U, s, Vt = np.linalg.svd(design.T, full_matrices=False)
        rank = int((s > s[0] * max(design.shape) * np.finfo(np.float64).eps).sum())
        self.m = space.m
        self.target = np.asarray(target, dtype=np.float64)
        self._design = design
        self._rows = Vt[:rank]                       # orthonormal rows
        self._rhs = (U[:, :rank].T @ self.target) / s[:rank]
        least_norm = self._rows.T @ self._rhs
        self.inconsistency = float(np.abs(design.T @ least_norm - self.target).max())

    def residual(self, h: np.ndarray) -> float:
        return float(np.abs(self._design.T @ h - self.target).max())

    def project(self, z: np.ndarray) -> np.ndarray:
        return z - self._rows.T @ (self._rows @ z - self._rhs)


def exact_match(
    target: Union[Dataset, FourierVector],
    S: ReducedSpace,
    residual_tol: float = RESIDUAL_TOL,
    max_iterations: int = MAX_ITERATIONS,
) -> MatchResult:
    """Search for a nonnegative mass-one slot weighting with the target's
    low-degree data.

    A target outside the row space of the design is inconsistent and
    reported infeasible at once; otherwise feasibility of the affine set
    against the nonnegative orthant is decided by alternating
    projections, and on success the returned witness is the Dykstra
    projection of the uniform vector onto the intersection.  ``target``
    may be a dataset (matched through its coefficients) or a coefficient
    vector directly.
    """
    if isinstance(target, Dataset):
        target = fourier_of_dataset(target, S.degree)
    if isinstance(target, FourierVector):
        if target.p != S.p or target.degree_bound != S.degree:
            raise ConfigurationError(
                f"target is for (p={target.p}, d={target.degree_bound}) but the reduced "
                f"space has (p={S.p}, d={S.degree})"
            )
        target = target.coeffs
    constraints = _ReducedAffine(S, target)
    if constraints.inconsistency > residual_tol:
        return MatchResult(
            outcome="no witness found", density=None,
            gap=constraints.inconsistency, iterations=0,
        )
    probe = _feasibility(constraints, 0.0, math.inf, FEAS_TOL, max_iterations)
    if not probe.feasible:
        return MatchResult(
            outcome="no witness found", density=None, gap=probe.gap, iterations=probe.iterations
        )
    x, resid, _, its = _dykstra(
        uniform_weights(S.m),
        constraints,
        0.0,
        math.inf,
        change_tol=1e-10 / S.m,
        residual_tol=residual_tol,
        max_iterations=max_iterations,
    )
    density = SlotDensity(weights=x, residual=resid, mass_error=abs(float(x.sum()) - 1.0))
    return MatchResult(outcome="witness", density=density, gap=0.0, iterations=its)


def recommend_m(p: int, d: int, gamma: float) -> int:
    """Reduced-space size for conditioning success with probability 1-gamma."""
    return math.ceil(_conditioning_m_raw(p, d, gamma))


def _conditioning_m_raw(p: int, d: int, gamma: float) -> float:
    if not 0.0 < gamma <= 1.0:
        raise ConfigurationError(f"gamma must be in (0,1], got {gamma}")
    return 16.0 * gamma**-2 * math.exp(2.0 * d) * low_degree_count(p, d)


def recommend_m_master(p: int, d: int, cal: CalibrationParams) -> int:
    """Reduced-space size for the full matching guarantee under an
    alpha-regular sampling density and L2 density-ratio bound kappa."""
    return math.ceil(
        16.0
        * (cal.alpha * cal.delta_target) ** -2
        * cal.gamma**-1
        * cal.kappa**2
        * math.exp(2.0 * d)
        * low_degree_count(p, d)
    )


def recommend_k(p: int, d: int, gamma: float, delta: float) -> int:
    """Sample count that keeps every low-degree marginal of the output
    within delta of the selected density with probability 1-gamma."""
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError(f"gamma must be in (0,1), got {gamma}")
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must be in (0,1), got {delta}")
    C = low_degree_count(p, d)
    return math.ceil(4.0 * delta**-2 * (math.log(2.0 / gamma) + math.log(C)))


def full_cube(p: int) -> Dataset:
    """All 2^p cube points, in binary counting order."""
    if p > FULL_CUBE_MAX_P:
        raise ConfigurationError(
            f"full-cube enumeration is capped at p <= {FULL_CUBE_MAX_P}, got p={p}"
        )
    codes = np.arange(2**p, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(p)[None, :]) & 1
    return Dataset((2 * bits - 1).astype(np.int8))


def empirical_l1_deviation(
    p: int,
    d: int,
    m: int,
    trials: int,
    seed: int,
    slots: Dataset | None = None,
    chunk: int = 512,
) -> DeviationEstimate:
    """Monte-Carlo LOWER estimate of the worst empirical-vs-population L1
    deviation over unit-coefficient low-degree functions.

    Slots are drawn uniformly on stream 0 of ``seed`` (unless injected)
    and directions on stream 1.  The population norm is exact full-cube
    enumeration, so p is capped at FULL_CUBE_MAX_P.  The estimate
    validates, but can never refute, the 2 sqrt(C/m) envelope.
    """
    from .cube import enumerate_low_degree, evaluate_design

    if trials < 1:
        raise ConfigurationError(f"need at least one direction trial, got {trials}")
    C = low_degree_count(p, d)
    if slots is None:
        gen = stream_generator(seed, 0)
        slots = Dataset(gen.integers(0, 2, size=(m, p), dtype=np.int8) * 2 - 1)
    elif slots.p != p or slots.n != m:
        raise ConfigurationError(
            f"injected slots have shape ({slots.n}, {slots.p}), expected ({m}, {p})"
        )
    indices = enumerate_low_degree(p, d)
    design_emp = evaluate_design(slots.rows, indices).astype(np.float64)
    design_pop = evaluate_design(full_cube(p).rows, indices).astype(np.float64)

    dir_gen = stream_generator(seed, 1)
    worst = 0.0
    remaining = trials
    while remaining > 0:
        t = min(chunk, remaining)
        directions = dir_gen.standard_normal(size=(C, t))
        directions /= np.linalg.norm(directions, axis=0, keepdims=True)
        emp = np.abs(design_emp @ directions).mean(axis=0)
        pop = np.abs(design_pop @ directions).mean(axis=0)
        worst = max(worst, float(np.abs(emp - pop).max()))
        remaining -= t
    return DeviationEstimate(
        max_deviation=worst,
        bound=2.0 * math.sqrt(C / m),
        envelope_factor=3.0,
        trials=trials,
        p=p,
        d=d,
        m=m,
    )
