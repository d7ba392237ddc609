"""Privacy budget formulas and the neighboring-dataset audit harness.

The closed forms: two runs on datasets differing in one record, sharing
a well-conditioned reduced space, produce densities within

    eta = 4 sqrt(2) Delta^{3/2} e^{d/2} C(p,<=d)^{1/4} / (sqrt(delta n) m^{1/4})

of each other in infinity norm, whence the pointwise ratio is at most
1 + eta m / delta and k i.i.d. draws are epsilon-private for

    epsilon = 4 sqrt(2) k (Delta/delta)^{3/2} e^{d/2} C(p,<=d)^{1/4} m^{3/4} / sqrt(n).

The audit harness replays both solver runs on a shared space and checks
the observed distance and ratio against those bounds; a violation beyond
numerical slop indicates a solver bug, not bad luck.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conditioning import ReducedSpace
from .cube import Dataset, fourier_of_dataset, low_degree_count
from .errors import InputError, IntegrityError
from .solver import AffineConstraints, SlotDensity, proximal_point, shrinkage_lambda

# Residual tolerance of the proximal solve; audits flag violations only
# beyond ten times this.
SOLVER_TOL = 1e-9


def sensitivity_bound(n: int, m: int, p: int, d: int, delta: float, Delta: float) -> float:
    """Infinity-norm bound eta on the density difference across neighbors."""
    C = low_degree_count(p, d)
    return (
        4.0
        * math.sqrt(2.0)
        * Delta**1.5
        * math.exp(d / 2.0)
        * C**0.25
        / (math.sqrt(delta * n) * m**0.25)
    )


def epsilon_for_k(k: int, n: int, m: int, p: int, d: int, delta: float, Delta: float) -> float:
    """Privacy level guaranteed for k samples (k * eta * m / delta)."""
    if k < 0:
        raise InputError(f"k must be nonnegative, got {k}")
    C = low_degree_count(p, d)
    return (
        4.0
        * math.sqrt(2.0)
        * k
        * (Delta / delta) ** 1.5
        * math.exp(d / 2.0)
        * C**0.25
        * m**0.75
        / math.sqrt(n)
    )


@dataclass(frozen=True)
class PrivacyBudget:
    """Budget snapshot for a parameter set; eta is the sensitivity bound."""

    epsilon: float
    k: int
    n: int
    m: int
    p: int
    d: int
    delta: float
    Delta: float
    sensitivity_eta: float

    @classmethod
    def for_run(
        cls, k: int, n: int, m: int, p: int, d: int, delta: float, Delta: float
    ) -> "PrivacyBudget":
        return cls(
            epsilon=epsilon_for_k(k, n, m, p, d, delta, Delta),
            k=k,
            n=n,
            m=m,
            p=p,
            d=d,
            delta=delta,
            Delta=Delta,
            sensitivity_eta=sensitivity_bound(n, m, p, d, delta, Delta),
        )


@dataclass(frozen=True)
class NeighborPair:
    """Two datasets for a sensitivity audit.

    kind "append":    extended is base plus one appended record (the
                      canonical neighboring relation);
    kind "identical": the degenerate same-dataset pair, distance zero;
    kind "replace":   equal length, differing rows; audited against
                      2 eta by the triangle inequality through the
                      common append neighbor.
    """

    base: Dataset
    extended: Dataset

    def __post_init__(self):
        if self.base.p != self.extended.p:
            raise InputError("neighbor datasets must share the dimension p")
        if self.kind == "invalid":
            raise InputError(
                "neighbor pair must be identical datasets, base plus one appended "
                "record, or equal-length datasets differing in some records"
            )

    @property
    def kind(self) -> str:
        nb, ne = self.base.n, self.extended.n
        if ne == nb + 1:
            if np.array_equal(self.extended.rows[:-1], self.base.rows):
                return "append"
            return "invalid"
        if ne == nb:
            if np.array_equal(self.extended.rows, self.base.rows):
                return "identical"
            return "replace"
        return "invalid"

    @property
    def bound_multiplier(self) -> float:
        return 2.0 if self.kind == "replace" else 1.0


@dataclass(frozen=True)
class AuditRecord:
    """Outcome of one neighboring-pair replay on a shared reduced space."""

    kind: str
    linf_distance: float
    eta: float
    eta_multiplier: float
    max_ratio: float
    ratio_bound: float
    lambda_base: float
    lambda_extended: float
    violation: bool


def _solve_density(
    X: Dataset, cfg, shared_S: ReducedSpace
) -> tuple[SlotDensity, float]:
    b = fourier_of_dataset(X, cfg.d)
    constraints = AffineConstraints(shared_S, b)
    lam, shrunk, _ = shrinkage_lambda(constraints, cfg.shrink_box)
    return proximal_point(shrunk, cfg.select_box), lam


def audit_sensitivity(pair: NeighborPair, cfg, shared_S: ReducedSpace) -> AuditRecord:
    """Replay the solver on both datasets of a pair over one shared,
    well-conditioned reduced space and compare against the closed-form
    bounds.  The space and all tolerances are identical across the two
    runs, exactly as the privacy argument conditions on S."""
    if pair.base.p != cfg.p or shared_S.p != cfg.p:
        raise InputError("pair, configuration and reduced space must agree on p")
    h1, lam1 = _solve_density(pair.base, cfg, shared_S)
    h2, lam2 = _solve_density(pair.extended, cfg, shared_S)
    eta = sensitivity_bound(pair.base.n, cfg.m, cfg.p, cfg.d, cfg.delta, cfg.Delta)
    distance = float(np.abs(h1.weights - h2.weights).max())
    max_ratio = float(np.max(h1.weights / h2.weights))
    return AuditRecord(
        kind=pair.kind,
        linf_distance=distance,
        eta=eta,
        eta_multiplier=pair.bound_multiplier,
        max_ratio=max_ratio,
        ratio_bound=1.0 + pair.bound_multiplier * eta * cfg.m / cfg.delta,
        lambda_base=lam1,
        lambda_extended=lam2,
        violation=distance > pair.bound_multiplier * eta + 10.0 * SOLVER_TOL,
    )


def neighbor_fourier_gap(pair: NeighborPair, d: int) -> float:
    """L2 gap between the coefficient vectors of an append pair.

    Deterministically at most (2/n) sqrt(C(p,<=d)); a violation is a
    computation bug and raises IntegrityError.
    """
    if pair.kind not in ("append", "identical"):
        raise InputError(f"coefficient gap is defined for append pairs, got {pair.kind!r}")
    b1 = fourier_of_dataset(pair.base, d)
    b2 = fourier_of_dataset(pair.extended, d)
    gap = float(np.linalg.norm(b2.coeffs - b1.coeffs))
    bound = neighbor_fourier_gap_bound(pair.base.n, pair.base.p, d)
    if gap > bound * (1.0 + 1e-12) + 1e-15:
        raise IntegrityError(
            f"coefficient gap {gap} exceeds its deterministic bound {bound}"
        )
    return gap


def neighbor_fourier_gap_bound(n: int, p: int, d: int) -> float:
    """(2/n) sqrt(C(p,<=d)), the worst-case one-record coefficient move."""
    return 2.0 / n * math.sqrt(low_degree_count(p, d))
