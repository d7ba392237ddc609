"""Reduced-space sampling and conditioning checks.

The reduced space S is a fresh uniform sample of m cube points.  Its
design matrix M holds all degree-<=d Walsh evaluations on S; S is called
well conditioned when the smallest singular value of M is at least
sqrt(m) / (2 e^d).  Ill-conditioned draws are simply redrawn on fresh
sub-seeds until the check passes or the attempt budget runs out.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .cube import Dataset, WalshIndex, enumerate_low_degree, evaluate_design, low_degree_count
from .errors import ConditioningFailure, ConfigurationError, SolverError
from .rng import SPACE_STREAM, attempt_seed, stream_generator

logger = logging.getLogger(__name__)

# Absolute tolerance on eigenvalues of G/m; threshold comparisons happen
# at margins around 1e-2 and are unaffected.
EIG_ABS_TOL = 1e-10


@dataclass(frozen=True)
class ReducedSpace:
    """A sampled reduced space with its design matrix and spectral data.

    slots      -- the m sampled cube points (duplicates kept as distinct slots)
    indices    -- canonical column order of the design matrix
    design     -- m x C(p,<=d) sign matrix of Walsh evaluations
    gram       -- design' * design, C x C symmetric
    sigma_min  -- smallest singular value of the design matrix
    seed_used  -- seed that produced the slots (0 for injected slots)
    attempt    -- 1-based index of the draw that produced this space
    """

    slots: Dataset
    indices: tuple[WalshIndex, ...]
    design: np.ndarray
    gram: np.ndarray
    sigma_min: float
    seed_used: int
    attempt: int = 1

    @property
    def m(self) -> int:
        return self.slots.n

    @property
    def p(self) -> int:
        return self.slots.p

    @property
    def degree(self) -> int:
        return len(self.indices[-1]) if len(self.indices) > 1 else 0

    @property
    def num_coeffs(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class ConditioningVerdict:
    passed: bool
    threshold: float
    sigma_min: float
    attempts: int


def conditioning_threshold(m: int, d: int) -> float:
    """Acceptance bar for the smallest singular value: sqrt(m) / (2 e^d)."""
    return math.sqrt(m) / (2.0 * math.exp(d))


def gram_sigma_min(gram: np.ndarray, m: int) -> float:
    """Smallest singular value of the design from its Gram matrix.

    Solves the C x C symmetric eigenproblem on G/m for scale stability and
    returns sqrt(m * lambda_min), clamping eigenvalues within EIG_ABS_TOL
    of zero.  C(p,<=d) stays small at desk scale, so this is much cheaper
    than an SVD of the m x C design.
    """
    try:
        eigs = scipy.linalg.eigvalsh(np.asarray(gram, dtype=np.float64) / m)
    except scipy.linalg.LinAlgError as exc:
        raise SolverError(f"eigensolver failed on the Gram matrix: {exc}") from exc
    lam = float(eigs[0])
    if lam < -EIG_ABS_TOL:
        raise SolverError(f"Gram matrix has significantly negative eigenvalue {lam * m}")
    return math.sqrt(m * max(lam, 0.0))


def smallest_singular_value(M: np.ndarray) -> float:
    """Smallest singular value of a tall sign matrix via its Gram matrix."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < M.shape[1]:
        raise ConfigurationError(f"design must be a tall matrix, got shape {M.shape}")
    return gram_sigma_min(M.T @ M, M.shape[0])


def space_from_slots(slots: Dataset, d: int, seed_used: int = 0, attempt: int = 1) -> ReducedSpace:
    """Build a ReducedSpace from given slots (used by tests to inject S)."""
    C = low_degree_count(slots.p, d)
    if slots.n < C:
        raise ConfigurationError(
            f"reduced space needs m >= C(p,<=d): m={slots.n} < C({slots.p},<={d})={C}"
        )
    indices = enumerate_low_degree(slots.p, d)
    design = evaluate_design(slots.rows, indices)
    dense = design.astype(np.float64)
    gram = dense.T @ dense
    sigma = gram_sigma_min(gram, slots.n)
    n_distinct = len(np.unique(slots.rows, axis=0))
    if n_distinct < slots.n:
        logger.warning(
            "reduced space has %d duplicate slots out of %d; duplicates are kept "
            "as distinct slots but the accuracy guarantee assumes none",
            slots.n - n_distinct,
            slots.n,
        )
    return ReducedSpace(
        slots=slots,
        indices=indices,
        design=design,
        gram=gram,
        sigma_min=sigma,
        seed_used=seed_used,
        attempt=attempt,
    )


def draw_reduced_space(p: int, m: int, d: int, seed: int, attempt: int = 1) -> ReducedSpace:
    """Draw m cube points i.i.d. uniformly (stream 0 of ``seed``) and
    assemble design, Gram and smallest singular value."""
    C = low_degree_count(p, d)
    if m < C:
        raise ConfigurationError(
            f"reduced space needs m >= C(p,<=d): m={m} < C({p},<={d})={C}"
        )
    gen = stream_generator(seed, SPACE_STREAM)
    slots = Dataset(gen.integers(0, 2, size=(m, p), dtype=np.int8) * 2 - 1)
    return space_from_slots(slots, d, seed_used=seed, attempt=attempt)


def check_conditioning(rs: ReducedSpace) -> ConditioningVerdict:
    """Compare sigma_min against sqrt(m) / (2 e^d)."""
    threshold = conditioning_threshold(rs.m, rs.degree)
    return ConditioningVerdict(
        passed=rs.sigma_min >= threshold,
        threshold=threshold,
        sigma_min=rs.sigma_min,
        attempts=rs.attempt,
    )


def draw_until_conditioned(
    p: int, m: int, d: int, seed: int, max_attempts: int = 16
) -> ReducedSpace:
    """Redraw the reduced space on per-attempt sub-seeds until it passes
    the conditioning check; raise ConditioningFailure when the budget is
    exhausted (the algorithm's "Failure" outcome)."""
    if max_attempts < 1:
        raise ConfigurationError(f"max_attempts must be >= 1, got {max_attempts}")
    last_sigma = float("nan")
    for attempt in range(1, max_attempts + 1):
        rs = draw_reduced_space(p, m, d, attempt_seed(seed, attempt), attempt=attempt)
        verdict = check_conditioning(rs)
        if verdict.passed:
            return rs
        last_sigma = rs.sigma_min
        logger.info(
            "conditioning attempt %d/%d failed: sigma_min=%.6g < %.6g",
            attempt,
            max_attempts,
            rs.sigma_min,
            verdict.threshold,
        )
    raise ConditioningFailure(
        f"no well-conditioned reduced space in {max_attempts} attempts "
        f"(last sigma_min={last_sigma:.6g}, threshold={conditioning_threshold(m, d):.6g})",
        attempts=max_attempts,
        last_sigma_min=last_sigma,
    )
