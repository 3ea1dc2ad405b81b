"""Sample-complexity lower bounds for uncontrolled linear systems.

Two bound inversions are provided: the gramian bound, which walks the smallest
eigenvalue of the accumulated finite-time controllability gramians up to the
information threshold, and the looser spectral bound driven only by the
smallest eigenvalue amplitude through the scalar growth function
info_growth(a, t). Both come with an explicit worst-case neighbor system
("confusing instance") realizing the bound.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AccuracySpec,
    BoundReport,
    InputError,
    IterationCapError,
    NumericalError,
    as_square,
    rate_threshold,
)
from .spectral import block_diagonalize, eigenvalues_sorted, lambda_min_sym, schur_sorted

DEFAULT_STEP_CAP = 10_000_000


class GramianAccumulator:
    """Running gramian recursion Gamma_t = A Gamma_{t-1} A^T + I (Gamma_0 = I)
    together with the prefix sum S_t = sum_{s=1}^{t-1} Gamma_{s-1} (S_1 = 0)."""

    def __init__(self, A: np.ndarray):
        self.A = as_square(A)
        d = self.A.shape[0]
        self._eye = np.eye(d)
        self.t = 1
        self.Gamma = np.eye(d)
        self.S = np.zeros((d, d))

    def advance(self) -> None:
        self.S = self.S + self.Gamma
        self.Gamma = self.A @ self.Gamma @ self.A.T + self._eye
        self.t += 1


class SqrtInfoAccumulator:
    """Square-root form of the gramian information recursion.

    Maintains triangular factors with Gamma_{t-1} = R_g^T R_g and
    S_t = R_s^T R_s, updated by QR; lambda_min(S_t) = sigma_min(R_s)^2.
    Unstable systems inflate ||S_t|| like |lambda_1|^{2t} while the quantity
    of interest stays near the threshold; factored accumulation squares the
    resolvable dynamic range, keeping the small eigenvalue accurate where the
    assembled matrix would drown it in roundoff.
    """

    def __init__(self, A: np.ndarray):
        A = as_square(A)
        d = A.shape[0]
        self._At = A.T.copy()
        self._eye = np.eye(d)
        self.t = 1
        self.R_gamma = np.eye(d)
        self.R_S = np.zeros((d, d))

    def advance(self) -> None:
        self.R_S = np.linalg.qr(np.vstack([self.R_S, self.R_gamma]), mode="r")
        self.R_gamma = np.linalg.qr(
            np.vstack([self.R_gamma @ self._At, self._eye]), mode="r")
        self.t += 1
        if not np.isfinite(self.R_gamma).all():
            raise NumericalError(
                f"gramian factor overflowed at t = {self.t}; the system is too "
                "unstable for double-precision accumulation at this horizon"
            )

    def value(self) -> float:
        """lambda_min(S_t), guarded against unresolvable conditioning.

        sigma_min of the factor carries absolute error ~ eps * sigma_max; once
        the implied error on lambda_min is no longer negligible the value
        would be silently wrong, so a NumericalError is raised instead (the
        spectrum-only bound does not suffer from this and remains available).
        """
        sigma = np.linalg.svd(self.R_S, compute_uv=False)
        smax, smin = float(sigma[0]), float(sigma[-1])
        value = smin**2
        err_est = 2.3e-16 * smax * (2.0 * smin + 2.3e-16 * smax)
        if err_est > 1e-4 * max(1.0, value):
            raise NumericalError(
                f"lambda_min of the information matrix at t = {self.t} is not "
                f"resolvable in double precision (estimated error {err_est:.2e} "
                f"on {value:.6g}); the system is too unstable for the gramian "
                "bound at this horizon - use the spectral bound",
                residual=err_est,
            )
        return value


def gramian(A: np.ndarray, s: int) -> np.ndarray:
    """Finite-time controllability gramian sum_{k=0}^{s} A^k (A^k)^T."""
    A = as_square(A)
    if s < 0:
        raise InputError(f"s must be >= 0, got {s}")
    G = np.eye(A.shape[0])
    for _ in range(s):
        G = A @ G @ A.T + np.eye(A.shape[0])
    return G


def gramian_sum(A: np.ndarray, t: int) -> np.ndarray:
    """Prefix sum S_t = sum_{s=1}^{t-1} Gamma_{s-1}(A); S_1 = 0."""
    if t < 1:
        raise InputError(f"t must be >= 1, got {t}")
    acc = GramianAccumulator(A)
    while acc.t < t:
        acc.advance()
    return acc.S


def _mp_info_walk(A: np.ndarray, threshold: float = None, t_stop: int = None,
                  step_cap: int = 10_000_000):
    """Arbitrary-precision fallback for the gramian information walk.

    Runs the plain matrix recursion under mpmath, doubling the working
    precision until the spread lambda_max/lambda_min of the final sum is
    comfortably within it. Returns (t, curve). Slow, but exact-behaved for
    systems whose information matrix outruns double precision.
    """
    import mpmath

    d = A.shape[0]
    dps = 60
    for _ in range(6):
        with mpmath.mp.workdps(dps):
            Am = mpmath.matrix(d, d)
            for i in range(d):
                for j in range(d):
                    Am[i, j] = mpmath.mpf(float(A[i, j]))
            G = mpmath.eye(d)
            S = mpmath.zeros(d, d)
            curve = [(1, 0.0)]
            t = 1
            lam_min = mpmath.mpf(0)
            lam_max = mpmath.mpf(0)
            while True:
                if threshold is not None and float(lam_min) >= threshold:
                    break
                if t_stop is not None and t >= t_stop:
                    break
                if t >= step_cap:
                    raise IterationCapError(
                        f"gramian bound inversion exceeded {step_cap} steps; "
                        "consider a larger eps or delta"
                    )
                S = S + G
                G = Am * G * Am.T + mpmath.eye(d)
                t += 1
                E = mpmath.eigsy(S, eigvals_only=True)
                lam_min, lam_max = E[0], E[d - 1]
                curve.append((t, float(lam_min)))
            spread_ok = (lam_max <= 0 or
                         mpmath.log10(max(lam_max, mpmath.mpf(1)) /
                                      max(lam_min, mpmath.mpf("1e-30")))
                         <= dps - 15)
            if spread_ok:
                return t, curve
        dps *= 2
    raise NumericalError(
        "gramian information walk did not stabilize even at very high "
        "precision; the system is too unstable for this horizon"
    )


def cumulative_info(A: np.ndarray, t: int) -> float:
    """lambda_min of the accumulated gramian sum S_t; zero at t = 1.

    Evaluated through the square-root accumulator so unstable systems do not
    lose the small eigenvalue to roundoff; if even the factored form cannot
    resolve it, a slow arbitrary-precision walk takes over.
    """
    if t < 1:
        raise InputError(f"t must be >= 1, got {t}")
    A = as_square(A)
    try:
        acc = SqrtInfoAccumulator(A)
        while acc.t < t:
            acc.advance()
        return acc.value()
    except NumericalError:
        _, curve = _mp_info_walk(A, t_stop=t)
        return curve[-1][1]


def info_growth(a: float, t: int) -> float:
    """Scalar information growth sum_{s=1}^{t-1} sum_{k=0}^{s-1} a^{2k}.

    Closed form (a^{2t} + t(1-a^2) - 1) / (1-a^2)^2 away from a = 1; the
    cancellation-prone band |1 - a^2| < 1e-4 falls back to the running sum.
    Special values: t - 1 at a = 0, t(t-1)/2 at a = 1.
    """
    if a < 0:
        raise InputError(f"a must be >= 0, got {a}")
    if t < 1:
        raise InputError(f"t must be >= 1, got {t}")
    if a == 0.0:
        return float(t - 1)
    if a == 1.0:
        return t * (t - 1) / 2.0
    x = a * a
    if abs(1.0 - x) >= 1e-4:
        return (a ** (2 * t) + t * (1.0 - x) - 1.0) / (1.0 - x) ** 2
    inner = 1.0
    total = 0.0
    for _ in range(t - 1):
        total += inner
        inner = 1.0 + x * inner
    return total


def _trivial_report(method: str, threshold: float) -> BoundReport:
    return BoundReport(tau=1, method=method, threshold=threshold,
                       curve=[(1, 0.0)], trivial=True)


def sample_complexity_gramian(A: np.ndarray, spec: AccuracySpec,
                              step_cap: int = DEFAULT_STEP_CAP) -> BoundReport:
    """Smallest tau with cumulative_info(A, tau) >= rate_threshold(spec).

    The inversion walks t upward with incremental gramian updates; the curve
    of (t, lambda_min) values is kept in the report. S_t >= (t-1) I, so the
    walk terminates after at most threshold + 1 steps. Systems whose
    information matrix outruns the factored double-precision accumulator are
    re-walked at arbitrary precision (slower, same contract).
    """
    A = as_square(A)
    threshold = rate_threshold(spec)
    if threshold <= 0.0:
        return _trivial_report("gramian", threshold)
    try:
        acc = SqrtInfoAccumulator(A)
        curve = [(1, 0.0)]
        value = 0.0
        while value < threshold:
            if acc.t >= step_cap:
                raise IterationCapError(
                    f"gramian bound inversion exceeded {step_cap} steps; "
                    "consider a larger eps or delta"
                )
            acc.advance()
            value = acc.value()
            curve.append((acc.t, value))
        tau = acc.t
    except IterationCapError:
        raise
    except NumericalError:
        tau, curve = _mp_info_walk(A, threshold=threshold, step_cap=step_cap)
    return BoundReport(tau=tau, method="gramian", threshold=threshold, curve=curve)


def sample_complexity_spectral(A: np.ndarray, spec: AccuracySpec,
                               step_cap: int = DEFAULT_STEP_CAP) -> BoundReport:
    """Smallest tau with info_growth(|lambda_d(A)|, tau) >= rate_threshold(spec).

    |lambda_d| is the smallest eigenvalue amplitude. Accumulation is
    incremental and monotone, so unstable systems never evaluate a^{2t} in
    isolation: the walk stops at the first crossing.
    """
    A = as_square(A)
    threshold = rate_threshold(spec)
    if threshold <= 0.0:
        return _trivial_report("spectral", threshold)
    a = abs(eigenvalues_sorted(A)[-1])
    x = a * a
    inner = 1.0
    total = 0.0
    t = 1
    curve = [(1, 0.0)]
    while total < threshold:
        if t >= step_cap:
            raise IterationCapError(
                f"spectral bound inversion exceeded {step_cap} steps; "
                "consider a larger eps or delta"
            )
        total += inner
        inner = 1.0 + x * inner
        t += 1
        curve.append((t, total))
    return BoundReport(tau=t, method="spectral", threshold=threshold, curve=curve)


def expected_llr(A: np.ndarray, Aprime: np.ndarray, t: int) -> float:
    """Expected log-likelihood ratio of t observations under A versus Aprime:
    0.5 * tr((A - A')^T (A - A') S_t). Exact; no sampling involved."""
    A = as_square(A)
    Aprime = as_square(Aprime, "Aprime")
    if Aprime.shape != A.shape:
        raise InputError(
            f"Aprime must match A's shape {A.shape}, got {Aprime.shape}"
        )
    D = A - Aprime
    S = gramian_sum(A, t)
    return 0.5 * float(np.trace(D.T @ D @ S))


@dataclass(frozen=True)
class ConfusingInstance:
    """A nearby system A' minimizing the information term of the bound."""

    Aprime: np.ndarray
    distance: float
    kind: str  # "gramian_direction" | "schur_spectral"


def confusing_gramian(A: np.ndarray, eps: float, t: int) -> ConfusingInstance:
    """Rank-one neighbor A' = A - 2*eps*q q^T along the least-informative
    direction q (unit eigenvector of S_t for its smallest eigenvalue).

    Achieves tr((A-A')^T (A-A') S_t) = 4 eps^2 lambda_min(S_t) with
    ||A - A'||_F = 2 eps. Requires t >= 2 so S_t is nonzero.
    """
    A = as_square(A)
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    if t < 2:
        raise InputError(f"t must be >= 2 (S_t vanishes at t = 1), got {t}")
    S = gramian_sum(A, t)
    _, vecs = np.linalg.eigh(0.5 * (S + S.T))
    q = vecs[:, 0]
    jmax = int(np.argmax(np.abs(q)))
    if q[jmax] < 0:  # deterministic sign
        q = -q
    Aprime = A - 2.0 * eps * np.outer(q, q)
    distance = float(np.linalg.norm(A - Aprime))
    return ConfusingInstance(Aprime=Aprime, distance=distance,
                             kind="gramian_direction")


def confusing_schur(A: np.ndarray, eps: float) -> ConfusingInstance:
    """Spectral neighbor A' = A - 2*eps*E Q^T perturbing only the trailing
    Schur block: E is zero except for its trailing block J, with J = 1 for a
    1x1 block and J = P^{-1}/||P^{-1}||_F for a 2x2 block.

    ||E||_F = 1 by construction, so ||A - A'||_F = 2 eps.
    """
    A = as_square(A)
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    form = schur_sorted(A)
    d = A.shape[0]
    block = form.trailing
    E = np.zeros((d, d))
    if block.size == 1:
        E[d - 1, d - 1] = 1.0
    else:
        off = block.offset
        bd = block_diagonalize(form.U[off:off + 2, off:off + 2])
        Pinv = np.linalg.inv(bd.P)
        E[off:off + 2, off:off + 2] = Pinv / np.linalg.norm(Pinv)
    Aprime = A - 2.0 * eps * (E @ form.Q.T)
    distance = float(np.linalg.norm(A - Aprime))
    return ConfusingInstance(Aprime=Aprime, distance=distance, kind="schur_spectral")


def check_confusing_gap(A: np.ndarray, Aprime: np.ndarray, eps: float) -> bool:
    """True iff 2*eps <= ||A - A'||_F < 3*eps.

    The closed lower edge carries a 1e-12*eps slack: the constructions above
    hit 2*eps exactly in exact arithmetic, and rounding in the norm must not
    push them outside their own admissibility window.
    """
    A = as_square(A)
    Aprime = as_square(Aprime, "Aprime")
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    distance = float(np.linalg.norm(A - Aprime))
    return (2.0 * eps - 1e-12 * eps) <= distance < 3.0 * eps
