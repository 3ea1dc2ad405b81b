"""Shared domain types, information-theoretic thresholds, and matrix interchange.

Everything downstream inverts an information quantity against the threshold
log(1/(2.4*delta)) / (2*eps^2); that threshold and the Bernoulli KL divergence
it comes from live here, together with the value types shared by all modules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np


# ---------------------------------------------------------------------------
# Errors (exit-code contract: 2 input, 3 numerical, 4 horizon, 5 unreachable)
# ---------------------------------------------------------------------------

class InputError(ValueError):
    """Malformed user input: bad dimensions, non-finite entries, bad flags."""


class NumericalError(RuntimeError):
    """Numerical failure (eigenvalue iteration, block swap residual, ...)."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class IterationCapError(NumericalError):
    """A monotone bound inversion exceeded its step cap."""


class HorizonExhaustedError(RuntimeError):
    """Empirical verification never crossed the success level before Tmax."""

    def __init__(self, message: str, final_fraction: float):
        super().__init__(message)
        self.final_fraction = final_fraction


class UnreachableBoundError(RuntimeError):
    """The information matrix stalls below threshold under the given policy."""

    def __init__(self, message: str, direction: np.ndarray | None = None):
        super().__init__(message)
        self.direction = direction


# ---------------------------------------------------------------------------
# Matrix helpers and JSON interchange
# ---------------------------------------------------------------------------

def as_matrix(obj, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array with finite entries."""
    A = np.asarray(obj, dtype=float)
    if A.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {A.shape}")
    if A.size == 0:
        raise InputError(f"{name} must be nonempty")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains non-finite entries")
    return A


def as_square(obj, name: str = "A") -> np.ndarray:
    A = as_matrix(obj, name)
    if A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be square, got shape {A.shape}")
    return A


def as_vector(obj, name: str = "vector") -> np.ndarray:
    v = np.asarray(obj, dtype=float).reshape(-1)
    if v.size == 0:
        raise InputError(f"{name} must be nonempty")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} contains non-finite entries")
    return v


def matrix_to_json_dict(A: np.ndarray) -> dict:
    """Canonical JSON form: {"rows", "cols", "data"} with row-major data."""
    A = as_matrix(A)
    return {
        "rows": int(A.shape[0]),
        "cols": int(A.shape[1]),
        "data": [float(x) for x in A.reshape(-1)],
    }


def matrix_from_json_dict(obj, name: str = "matrix") -> np.ndarray:
    """Parse the canonical matrix dict, naming the offending field on error."""
    if not isinstance(obj, dict):
        raise InputError(f"{name}: expected a JSON object with rows/cols/data")
    for key in ("rows", "cols", "data"):
        if key not in obj:
            raise InputError(f"{name}: missing field '{key}'")
    rows, cols = obj["rows"], obj["cols"]
    if not isinstance(rows, int) or isinstance(rows, bool) or rows < 1:
        raise InputError(f"{name}: field 'rows' must be a positive integer")
    if not isinstance(cols, int) or isinstance(cols, bool) or cols < 1:
        raise InputError(f"{name}: field 'cols' must be a positive integer")
    data = obj["data"]
    if not isinstance(data, (list, tuple)) or len(data) != rows * cols:
        raise InputError(
            f"{name}: field 'data' must hold exactly rows*cols = {rows * cols} numbers"
        )
    try:
        arr = np.array([float(x) for x in data], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: field 'data' contains a non-numeric entry") from exc
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: field 'data' contains NaN or Inf")
    return arr.reshape(rows, cols)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UncontrolledSystem:
    """x_{t+1} = A x_t + w_t with w_t ~ N(0, I), x_0 = 0."""

    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", as_square(self.A, "A"))

    @property
    def d(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class ControlledSystem:
    """x_{t+1} = A x_t + B u_t + w_t with w_t ~ N(0, I), x_0 = 0."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_square(self.A, "A")
        B = as_matrix(self.B, "B")
        if B.shape[0] != A.shape[0]:
            raise InputError(
                f"B must have {A.shape[0]} rows to conform with A, got {B.shape[0]}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class AccuracySpec:
    """PAC identification target: Frobenius accuracy eps, failure prob delta."""

    eps: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise InputError(f"eps must be a positive finite real, got {self.eps}")
        if not (math.isfinite(self.delta) and 0 < self.delta < 1):
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass
class BoundReport:
    """A sample-complexity lower bound plus the inversion diagnostics.

    tau is the smallest horizon whose information value meets the threshold;
    curve holds the (t, information value) pairs walked during inversion.
    A report is flagged trivial when the threshold is non-positive
    (delta >= 1/2.4), in which case tau = 1 and the bound says nothing.
    """

    tau: int
    method: str  # "gramian" | "spectral" | "controlled"
    threshold: float
    curve: List[Tuple[int, float]]
    trivial: bool = False
    norm: str = "frobenius"  # the operator-norm variant yields the same value

    def to_dict(self) -> dict:
        return {
            "tau": int(self.tau),
            "method": self.method,
            "threshold": float(self.threshold),
            "trivial": bool(self.trivial),
            "norm": self.norm,
            "curve": [[int(t), float(v)] for t, v in self.curve],
        }


# Input policies for controlled systems. External callbacks see only the
# causal history (x_1..x_t, u_0..u_{t-1}); x_0 = 0 is implicit.

@dataclass(frozen=True)
class ConstantPolicy:
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", as_vector(self.u, "u"))


@dataclass(frozen=True)
class FeedbackPolicy:
    """u_t = K x_t + c."""

    K: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        K = as_matrix(self.K, "K")
        c = as_vector(self.c, "c")
        if c.size != K.shape[0]:
            raise InputError(f"c must have length {K.shape[0]} to conform with K")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class ExternalPolicy:
    """Arbitrary causal policy: fn(states (t, d), inputs (t, p)) -> u_t."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    p: int  # input dimension, needed before the first call


Policy = Union[ConstantPolicy, FeedbackPolicy, ExternalPolicy]


# ---------------------------------------------------------------------------
# Threshold operations
# ---------------------------------------------------------------------------

def rate_threshold(spec: AccuracySpec) -> float:
    """Information level a valid estimator must accumulate: log(1/(2.4 delta)) / (2 eps^2).

    Non-positive when delta >= 1/2.4; bound inversions then report tau = 1
    with the trivial flag instead of erroring, so sweeps never abort.
    """
    return math.log(1.0 / (2.4 * spec.delta)) / (2.0 * spec.eps**2)


def bernoulli_kl(x: float, y: float) -> float:
    """KL divergence between Bernoulli(x) and Bernoulli(y).

    Conventions: d(0,0) = d(1,1) = 0; infinite when y in {0,1} and x != y.
    """
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise InputError(f"bernoulli_kl arguments must lie in [0,1], got ({x}, {y})")
    if x == y:
        return 0.0
    if y == 0.0 or y == 1.0:
        return math.inf
    out = 0.0
    if x > 0.0:
        out += x * math.log(x / y)
    if x < 1.0:
        out += (1.0 - x) * math.log((1.0 - x) / (1.0 - y))
    return out


def confidence_gap_bound(delta: float) -> float:
    """Closed-form lower bound log(1/(2.4 delta)) on d(1-delta, delta)."""
    if not (0 < delta < 1):
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    return math.log(1.0 / (2.4 * delta))


def confidence_gap_exact(delta: float) -> float:
    """Exact confidence gap d(1-delta, delta), exposed for diagnostics."""
    if not (0 < delta < 1):
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    return bernoulli_kl(1.0 - delta, delta)
