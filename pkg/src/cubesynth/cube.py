"""Records on the Boolean cube {-1,+1}^p: Walsh functions, low-degree
index enumeration, marginal queries, and dataset Fourier coefficients.

Conventions fixed here and used everywhere else:

* coordinates are 1-based in index subsets, records are +-1 sign vectors;
* the coefficient of a dataset X on subset J is the unnormalized average
  b_J = (1/n) sum_i prod_{j in J} x_i(j), so b_empty = 1 and |b_J| <= 1;
* subsets of [p] with |J| <= d are enumerated by size, then
  lexicographically, which pins the column order of every design matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InputError

# A Walsh index is a strictly increasing tuple of 1-based coordinates.
WalshIndex = tuple[int, ...]

EMPTY_INDEX: WalshIndex = ()


def low_degree_count(p: int, d: int) -> int:
    """Number of subsets of [p] with size at most d, C(p,<=d)."""
    if not 0 <= d <= p:
        raise ConfigurationError(f"degree d={d} must satisfy 0 <= d <= p={p}")
    return sum(math.comb(p, i) for i in range(d + 1))


def validate_index(subset: Iterable[int], p: int) -> WalshIndex:
    """Check that a subset is sorted, duplicate-free and within [1, p]."""
    J = tuple(int(j) for j in subset)
    if any(b <= a for a, b in zip(J, J[1:])):
        raise ConfigurationError(f"index subset {J} must be strictly increasing")
    if J and not (1 <= J[0] and J[-1] <= p):
        raise ConfigurationError(f"index subset {J} out of range [1, {p}]")
    return J


@dataclass(frozen=True)
class Dataset:
    """An ordered sequence of +-1 records sharing one dimension p.

    ``rows`` is an (n, p) int8 array; duplicates are allowed and order is
    preserved.  Empty datasets (n = 0) are permitted so that a run with a
    zero sampling budget still has a well-typed output.
    """

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int8)
        if rows.ndim != 2:
            raise InputError(f"dataset must be a 2-d array, got shape {rows.shape}")
        if rows.size and not np.isin(rows, (-1, 1)).all():
            raise InputError("dataset entries must all be -1 or +1")
        rows = np.ascontiguousarray(rows)
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_signs(cls, rows: Sequence[Sequence[int]]) -> "Dataset":
        return cls(np.asarray(rows, dtype=np.int8))

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "Dataset":
        """Map 0/1 bits to signs via b -> 2b - 1."""
        bits = np.asarray(bits)
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise InputError("bit table entries must all be 0 or 1")
        return cls((2 * bits.astype(np.int8) - 1))

    def to_bits(self) -> np.ndarray:
        """Map signs back to 0/1 bits via s -> (s + 1) / 2."""
        return ((self.rows + 1) // 2).astype(np.uint8)


@dataclass(frozen=True)
class MarginalQuery:
    """A sign-pattern indicator on the coordinates of ``subset``.

    The query value on a dataset is the fraction of records x with
    x(j) = signs[j] for every j in the subset.
    """

    subset: WalshIndex
    signs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(int(j) for j in self.subset))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        if len(self.signs) != len(self.subset):
            raise ConfigurationError(
                f"query needs one sign per index: {len(self.subset)} indices, "
                f"{len(self.signs)} signs"
            )
        if any(s not in (-1, 1) for s in self.signs):
            raise ConfigurationError(f"query signs must be +-1, got {self.signs}")
        if any(b <= a for a, b in zip(self.subset, self.subset[1:])):
            raise ConfigurationError(f"query subset {self.subset} must be strictly increasing")

    @property
    def dimension(self) -> int:
        return len(self.subset)


@dataclass(frozen=True)
class FourierVector:
    """Coefficients on all subsets with |J| <= degree_bound, in canonical order."""

    p: int
    degree_bound: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        expected = low_degree_count(self.p, self.degree_bound)
        if coeffs.shape != (expected,):
            raise ConfigurationError(
                f"coefficient vector has length {coeffs.shape}, expected ({expected},)"
            )
        coeffs = np.ascontiguousarray(coeffs)
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def indices(self) -> tuple[WalshIndex, ...]:
        return enumerate_low_degree(self.p, self.degree_bound)

    @property
    def _positions(self) -> dict[WalshIndex, int]:
        return _index_positions(self.p, self.degree_bound)

    def coefficient(self, subset: Iterable[int]) -> float:
        J = tuple(int(j) for j in subset)
        try:
            return float(self.coeffs[self._positions[J]])
        except KeyError:
            raise ConfigurationError(
                f"subset {J} is not enumerated at p={self.p}, d={self.degree_bound}"
            ) from None


@lru_cache(maxsize=None)
def enumerate_low_degree(p: int, d: int) -> tuple[WalshIndex, ...]:
    """All subsets of [p] with size <= d, ordered by size then lexicographically."""
    if not 0 <= d <= p:
        raise ConfigurationError(f"degree d={d} must satisfy 0 <= d <= p={p}")
    out: list[WalshIndex] = []
    for size in range(d + 1):
        out.extend(itertools.combinations(range(1, p + 1), size))
    return tuple(out)


@lru_cache(maxsize=None)
def _index_positions(p: int, d: int) -> dict[WalshIndex, int]:
    return {J: i for i, J in enumerate(enumerate_low_degree(p, d))}


def walsh_eval(J: Iterable[int], x: Sequence[int]) -> int:
    """Value of the parity function on subset J at the record x: the
    product of the selected coordinates, +1 on the empty subset."""
    x = np.asarray(x)
    J = validate_index(J, x.shape[-1])
    if not J:
        return 1
    return int(np.prod(x[np.asarray(J) - 1]))


def evaluate_design(rows: np.ndarray, indices: Sequence[WalshIndex]) -> np.ndarray:
    """Sign matrix of Walsh evaluations: entry [i, c] is the parity of
    row i on the c-th subset.  Products of +-1 entries cannot overflow int8."""
    rows = np.asarray(rows, dtype=np.int8)
    n = rows.shape[0]
    design = np.empty((n, len(indices)), dtype=np.int8)
    for c, J in enumerate(indices):
        if J:
            design[:, c] = rows[:, np.asarray(J) - 1].prod(axis=1)
        else:
            design[:, c] = 1
    return design


def fourier_of_dataset(X: Dataset, d: int) -> FourierVector:
    """Degree-<=d coefficients of a dataset: b_J = (1/n) sum_i w_J(x_i)."""
    if X.n == 0:
        raise InputError("cannot take Fourier coefficients of an empty dataset")
    indices = enumerate_low_degree(X.p, d)
    design = evaluate_design(X.rows, indices)
    coeffs = design.mean(axis=0, dtype=np.float64)
    return FourierVector(p=X.p, degree_bound=d, coeffs=coeffs)


def marginal_value(X: Dataset, q: MarginalQuery) -> float:
    """Fraction of records matching every sign of the query."""
    if X.n == 0:
        raise InputError("marginal of an empty dataset is undefined")
    validate_index(q.subset, X.p)
    if not q.subset:
        return 1.0
    cols = X.rows[:, np.asarray(q.subset) - 1]
    match = (cols == np.asarray(q.signs, dtype=np.int8)).all(axis=1)
    return float(match.mean())


def marginal_from_fourier(b: FourierVector, q: MarginalQuery) -> float:
    """Marginal reconstructed from coefficients alone:

        2^{-|J|} sum_{K subset of J} (prod_{j in K} sign_j) b_K,

    the expansion of the indicator prod_{j in J} (1 + sign_j x(j)) / 2.
    """
    if q.dimension > b.degree_bound:
        raise InputError(
            f"query dimension {q.dimension} exceeds coefficient degree bound {b.degree_bound}"
        )
    validate_index(q.subset, b.p)
    sign_of = dict(zip(q.subset, q.signs))
    total = 0.0
    for r in range(q.dimension + 1):
        for K in itertools.combinations(q.subset, r):
            coeff_sign = math.prod(sign_of[j] for j in K)
            total += coeff_sign * b.coefficient(K)
    return total / (2 ** q.dimension)


def all_queries(p: int, d: int) -> Iterable[MarginalQuery]:
    """Every marginal query of dimension <= d: all subsets, all sign patterns."""
    for J in enumerate_low_degree(p, d):
        for signs in itertools.product((-1, 1), repeat=len(J)):
            yield MarginalQuery(subset=J, signs=signs)


def query_count(p: int, d: int) -> int:
    """Number of queries enumerated by all_queries: sum_j C(p,j) 2^j."""
    return sum(math.comb(p, j) * 2**j for j in range(d + 1))
