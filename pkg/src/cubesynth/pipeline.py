"""End-to-end synthetic data generation.

One run: draw the reduced space until conditioned, take the true data's
low-degree coefficients as the affine target, shrink toward uniform just
enough for the inner box to be reachable, project the uniform vector
onto the shrunk set intersected with the outer box, then draw the
requested number of records from the slots by seeded inversion sampling.
Everything is deterministic given the input dataset and configuration.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .conditioning import (
    ConditioningVerdict,
    ReducedSpace,
    check_conditioning,
    draw_until_conditioned,
)
from .cube import Dataset, fourier_of_dataset, low_degree_count
from .errors import ConfigurationError, InputError, IntegrityError
from .privacy import epsilon_for_k, sensitivity_bound
from .rng import SAMPLING_STREAM, stream_generator
from .solver import AffineConstraints, Box, SlotDensity, proximal_point, shrinkage_lambda

logger = logging.getLogger(__name__)

NEGATIVE_WEIGHT_TOL = 1e-9
MASS_TOL = 1e-6


@dataclass(frozen=True)
class PipelineConfig:
    """All scalars of a run.  ``k`` may be an explicit count or "auto",
    in which case ``epsilon`` must be given and the privacy budget decides."""

    p: int
    d: int
    m: int
    seed: int
    delta: float = 0.05
    Delta: float = 4.0
    k: Union[int, str, None] = None
    epsilon: float | None = None
    max_attempts: int = 16

    def validate(self) -> None:
        if not 0 <= self.d <= self.p:
            raise ConfigurationError(f"degree d={self.d} must satisfy 0 <= d <= p={self.p}")
        C = low_degree_count(self.p, self.d)
        if self.m < C:
            raise ConfigurationError(
                f"m={self.m} is below C(p,<=d)={C}; the design matrix cannot have "
                "full column rank"
            )
        if not 0.0 < self.delta < self.Delta:
            raise ConfigurationError(
                f"need Delta > delta > 0, got delta={self.delta}, Delta={self.Delta}"
            )
        if self.delta > 0.5 or self.Delta < 1.0 + self.delta:
            raise ConfigurationError(
                f"shrinkage needs delta <= 1/2 and Delta >= 1 + delta, got "
                f"delta={self.delta}, Delta={self.Delta}"
            )
        if self.max_attempts < 1:
            raise ConfigurationError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if self.k == "auto":
            if self.epsilon is None:
                raise ConfigurationError('k="auto" requires an epsilon target')
        elif self.k is None:
            raise ConfigurationError('k must be an explicit count or "auto"')
        elif not (isinstance(self.k, int) and self.k >= 0):
            raise ConfigurationError(f"k must be a nonnegative integer, got {self.k!r}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigurationError(f"epsilon must be nonnegative, got {self.epsilon}")

    @property
    def shrink_box(self) -> Box:
        return Box(2.0 * self.delta / self.m, (self.Delta - self.delta) / self.m)

    @property
    def select_box(self) -> Box:
        return Box(self.delta / self.m, self.Delta / self.m)


@dataclass(frozen=True)
class RunReport:
    """Audit trail of one generate() run; every numeric field is finite."""

    verdict: ConditioningVerdict
    lambda_used: float
    residuals: dict[str, float]
    k_used: int
    epsilon_guaranteed: float
    sensitivity_bound: float
    timings: dict[str, float]
    seed_trail: dict[str, object]
    n: int


def auto_k(cfg: PipelineConfig, n: int) -> int:
    """Largest sample count the privacy budget admits for the run."""
    if cfg.epsilon is None:
        raise ConfigurationError("auto_k requires an epsilon target in the configuration")
    k = math.floor(
        privacy_k_bound(cfg.epsilon, n, cfg.m, cfg.p, cfg.d, cfg.delta, cfg.Delta)
    )
    if k < 1:
        logger.warning(
            "privacy budget epsilon=%g admits no synthetic samples at n=%d "
            "(bound %.3g); returning k=0",
            cfg.epsilon,
            n,
            privacy_k_bound(cfg.epsilon, n, cfg.m, cfg.p, cfg.d, cfg.delta, cfg.Delta),
        )
        return 0
    return k


def privacy_k_bound(
    epsilon: float, n: int, m: int, p: int, d: int, delta: float, Delta: float
) -> float:
    """Real-valued sample bound whose floor auto_k returns:

        epsilon * (delta/Delta)^{3/2} * e^{-d/2} * C(p,<=d)^{-1/4} * sqrt(n)
        / (4 sqrt(2) * m^{3/4}).
    """
    C = low_degree_count(p, d)
    return (
        epsilon
        * (delta / Delta) ** 1.5
        * math.exp(-d / 2.0)
        * C**-0.25
        * math.sqrt(n)
        / (4.0 * math.sqrt(2.0) * m**0.75)
    )


def sample_categorical(h: SlotDensity, S: Dataset, k: int, seed: int) -> Dataset:
    """k i.i.d. slot draws by cumulative-sum inversion on stream 1 of ``seed``."""
    weights = np.asarray(h.weights, dtype=np.float64)
    if weights.shape != (S.n,):
        raise InputError(f"{weights.shape[0]} weights for {S.n} slots")
    if weights.min() < -NEGATIVE_WEIGHT_TOL:
        raise IntegrityError(
            f"negative sampling weight {weights.min():.3g} beyond tolerance "
            f"{NEGATIVE_WEIGHT_TOL:g}"
        )
    total = float(weights.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise IntegrityError(f"total sampling mass {total} is not within {MASS_TOL:g} of 1")
    if k < 0:
        raise ConfigurationError(f"sample count must be nonnegative, got {k}")
    weights = np.maximum(weights, 0.0)
    cdf = np.cumsum(weights / weights.sum())
    cdf[-1] = 1.0
    gen = stream_generator(seed, SAMPLING_STREAM)
    u = gen.random(size=k)
    idx = np.searchsorted(cdf, u, side="right")
    return Dataset(S.rows[idx])


def generate(X: Dataset, cfg: PipelineConfig) -> tuple[Dataset, SlotDensity, RunReport]:
    """Run the full pipeline on the true data X; deterministic given (X, cfg)."""
    cfg.validate()
    if X.n == 0:
        raise InputError("true dataset is empty")
    if X.p != cfg.p:
        raise InputError(f"dataset dimension {X.p} does not match configured p={cfg.p}")

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    rs = draw_until_conditioned(cfg.p, cfg.m, cfg.d, cfg.seed, cfg.max_attempts)
    verdict = check_conditioning(rs)
    timings["conditioning"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    b = fourier_of_dataset(X, cfg.d)
    constraints = AffineConstraints(rs, b)
    timings["coefficients"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lam, shrunk, _ = shrinkage_lambda(constraints, cfg.shrink_box)
    timings["shrinkage"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    h_star = proximal_point(shrunk, cfg.select_box)
    timings["proximal"] = time.perf_counter() - t0

    k_used = auto_k(cfg, X.n) if cfg.k == "auto" else int(cfg.k)

    t0 = time.perf_counter()
    Y = sample_categorical(h_star, rs.slots, k_used, cfg.seed)
    timings["sampling"] = time.perf_counter() - t0

    report = RunReport(
        verdict=verdict,
        lambda_used=lam,
        residuals={
            "constraint": h_star.residual,
            "mass_error": h_star.mass_error,
        },
        k_used=k_used,
        epsilon_guaranteed=epsilon_for_k(
            k_used, X.n, cfg.m, cfg.p, cfg.d, cfg.delta, cfg.Delta
        ),
        sensitivity_bound=sensitivity_bound(
            X.n, cfg.m, cfg.p, cfg.d, cfg.delta, cfg.Delta
        ),
        timings=timings,
        seed_trail={
            "master": cfg.seed,
            "conditioning_attempts": verdict.attempts,
            "space_seed": rs.seed_used,
            "sampling_stream": SAMPLING_STREAM,
        },
        n=X.n,
    )
    return Y, h_star, report
