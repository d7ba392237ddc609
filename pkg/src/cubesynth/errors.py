"""Exception hierarchy shared by all cubesynth modules.

Exit-code mapping for the CLI lives in cli.py: usage/input/parse errors
exit 1, a conditioning Failure exits 2, solver errors exit 3.
"""


class CubeSynthError(Exception):
    """Base class for all cubesynth errors."""


class ConfigurationError(CubeSynthError):
    """Invalid parameters: dimension/degree mismatch, m below C(p,<=d),
    malformed boxes, indices out of range, missing seed."""


class InputError(CubeSynthError):
    """Invalid data supplied by the caller (empty dataset, dimension
    mismatch between datasets, bad weights)."""


class ParseError(InputError):
    """Malformed input file; message carries line/offset context."""


class ConditioningFailure(CubeSynthError):
    """Every resampling attempt produced an ill-conditioned reduced space."""

    def __init__(self, message: str, attempts: int = 0, last_sigma_min: float = float("nan")):
        super().__init__(message)
        self.attempts = attempts
        self.last_sigma_min = last_sigma_min


class ConditioningViolationError(CubeSynthError):
    """A solver primitive was invoked on a reduced space whose Gram matrix
    is numerically singular (conditioning precondition violated)."""


class SolverError(CubeSynthError):
    """Projection scheme failed to converge; message carries gap diagnostics."""


class IndeterminateError(SolverError):
    """Feasibility search hit its iteration cap without converging or
    stagnating; caller must tighten tolerances or raise the cap."""


class IntegrityError(CubeSynthError):
    """An internal numerical contract was violated (negative sampling
    weights beyond tolerance, a deterministic bound observed broken)."""
