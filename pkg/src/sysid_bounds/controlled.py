"""Sample-complexity lower bounds for controlled linear systems.

The information object here is the accumulated joint second moment
sum_{t=0}^{T-1} E[[x_t; u_t][x_t^T u_t^T]]. Constant and linear-feedback
policies admit exact moment recursions; arbitrary causal policies are
evaluated by seeded Monte Carlo. Scalar systems with constant input get
closed forms, in two labeled variants: "paper" keeps (tau-1) u^2 in the
input-input entry, "theorem2" uses tau u^2 as implied by summing t = 0..tau-1
with x_0 = 0. The search over constant-input amplitudes evaluates rather than
assumes that larger amplitude is better.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import (
    AccuracySpec,
    BoundReport,
    ConstantPolicy,
    ControlledSystem,
    ExternalPolicy,
    FeedbackPolicy,
    InputError,
    IterationCapError,
    Policy,
    UnreachableBoundError,
    rate_threshold,
)
from .spectral import lambda_min_sym
from . import sim
from .uncontrolled import DEFAULT_STEP_CAP

STALL_WINDOW = 64  # horizon steps without lambda_min progress => unreachable


@dataclass
class JointMoment:
    """Accumulated (d+p) x (d+p) joint second moment over t = 0..T-1.

    stderr carries entrywise Monte Carlo standard errors when estimated;
    exact recursions leave it None.
    """

    T: int
    Sigma: np.ndarray
    stderr: Optional[np.ndarray] = None


class _ExactMomentAccumulator:
    """Closed second-moment recursion for constant or feedback policies.

    mu_{t+1} = Abar mu_t + bias, V_{t+1} = Abar V_t Abar^T + I with
    (Abar, bias) = (A, B u) for constant input and (A + B K, B c) for
    feedback u_t = K x_t + c; E[x_t x_t^T] = V_t + mu_t mu_t^T.
    """

    def __init__(self, sys: ControlledSystem, policy: Policy):
        if isinstance(policy, ConstantPolicy):
            if policy.u.size != sys.p:
                raise InputError(f"u must have length {sys.p}, got {policy.u.size}")
            self.K = None
            self.c = policy.u
            self.Abar = sys.A
            self.bias = sys.B @ policy.u
        elif isinstance(policy, FeedbackPolicy):
            if policy.K.shape != (sys.p, sys.d):
                raise InputError(
                    f"K must have shape {(sys.p, sys.d)}, got {policy.K.shape}"
                )
            self.K = policy.K
            self.c = policy.c
            self.Abar = sys.A + sys.B @ policy.K
            self.bias = sys.B @ policy.c
        else:
            raise InputError("exact moments exist only for constant or feedback policies")
        d, p = sys.d, sys.p
        self.d, self.p = d, p
        self.mu = np.zeros(d)
        self.V = np.zeros((d, d))
        self.Sigma = np.zeros((d + p, d + p))
        self.T = 0

    def advance(self) -> None:
        d = self.d
        Exx = self.V + np.outer(self.mu, self.mu)
        if self.K is None:
            u = self.c
            Exu = np.outer(self.mu, u)
            Euu = np.outer(u, u)
        else:
            Exu = Exx @ self.K.T + np.outer(self.mu, self.c)
            Euu = (self.K @ Exx @ self.K.T
                   + self.K @ np.outer(self.mu, self.c)
                   + np.outer(self.c, self.mu) @ self.K.T
                   + np.outer(self.c, self.c))
        self.Sigma[:d, :d] += Exx
        self.Sigma[:d, d:] += Exu
        self.Sigma[d:, :d] += Exu.T
        self.Sigma[d:, d:] += Euu
        self.mu = self.Abar @ self.mu + self.bias
        self.V = self.Abar @ self.V @ self.Abar.T + np.eye(d)
        self.T += 1


def joint_moment_exact(sys: ControlledSystem, policy: Policy, T: int) -> JointMoment:
    """Exact joint second moment for a constant or feedback policy."""
    if T < 1:
        raise InputError(f"T must be >= 1, got {T}")
    acc = _ExactMomentAccumulator(sys, policy)
    for _ in range(T):
        acc.advance()
    return JointMoment(T=T, Sigma=acc.Sigma)


def _trial_moment(sys: ControlledSystem, policy: Policy, T: int,
                  seed: int) -> np.ndarray:
    traj = sim.simulate_controlled(sys, policy, T, seed)
    if traj.T < T:
        raise InputError(
            f"trajectory halted at t = {traj.T} < T = {T}; system too unstable "
            "for Monte Carlo moments at this horizon"
        )
    d = sys.d
    Zx = np.vstack([np.zeros((1, d)), traj.states[:T - 1]])  # x_0..x_{T-1}
    Z = np.hstack([Zx, traj.inputs])
    return Z.T @ Z


def joint_moment_mc(sys: ControlledSystem, policy: Policy, T: int,
                    trials: int, seed: int) -> JointMoment:
    """Monte Carlo joint second moment for an arbitrary causal policy.

    Trial i uses the substream seed derived from (seed, i); the sample mean
    and entrywise standard errors are aggregated in trial order.
    """
    if T < 1:
        raise InputError(f"T must be >= 1, got {T}")
    if trials < 2:
        raise InputError(f"trials must be >= 2, got {trials}")
    n = sys.d + sys.p
    mean = np.zeros((n, n))
    m2 = np.zeros((n, n))
    for i in range(trials):
        M = _trial_moment(sys, policy, T, sim.substream_seed(seed, i))
        delta = M - mean
        mean += delta / (i + 1)
        m2 += delta * (M - mean)
    stderr = np.sqrt(m2 / (trials - 1)) / math.sqrt(trials)
    return JointMoment(T=T, Sigma=mean, stderr=stderr)


class _McMomentAccumulator:
    """Streaming Monte Carlo moments, one horizon step at a time.

    Used for bound inversion under policies without closed-form moments; the
    per-trial simulators persist so the horizon can grow incrementally.
    """

    def __init__(self, sys: ControlledSystem, policy: Policy, trials: int,
                 seed: int):
        if trials < 2:
            raise InputError(f"trials must be >= 2, got {trials}")
        self.trials = trials
        self.streams = [sim._TrialStream(sys, policy, sim.substream_seed(seed, i))
                        for i in range(trials)]
        n = sys.d + sys.p
        self.Sigma = np.zeros((n, n))
        self.T = 0

    def advance(self) -> None:
        self.T += 1
        total = np.zeros_like(self.Sigma)
        for st in self.streams:
            st.advance_to(self.T)
            total += st.Szz
        self.Sigma = total / self.trials


def sample_complexity_controlled(sys: ControlledSystem, spec: AccuracySpec,
                                 policy: Policy, trials: Optional[int] = None,
                                 seed: int = 0,
                                 step_cap: int = DEFAULT_STEP_CAP) -> BoundReport:
    """Smallest tau with lambda_min(joint moment over t < tau) >= threshold.

    Constant and feedback policies use the exact recursion; passing `trials`
    switches to streaming Monte Carlo moments (required for external
    policies). Policies that leave a direction of the (d+p) space unexcited
    stall below the threshold and raise UnreachableBoundError naming the
    stalled direction. Pure feedback with zero offset stalls too: u_t is then
    collinear with x_t, so the input block adds no information of its own.
    """
    threshold = rate_threshold(spec)
    if threshold <= 0.0:
        return BoundReport(tau=1, method="controlled", threshold=threshold,
                           curve=[(1, 0.0)], trivial=True)
    exact = trials is None and isinstance(policy, (ConstantPolicy, FeedbackPolicy))
    if trials is None and isinstance(policy, ExternalPolicy):
        raise InputError("external policies need `trials` for Monte Carlo evaluation")
    acc = (_ExactMomentAccumulator(sys, policy) if exact
           else _McMomentAccumulator(sys, policy, trials, seed))
    curve: List[Tuple[int, float]] = []
    values: List[float] = []
    stall_tol = 1e-9 * (1.0 + threshold)
    while True:
        acc.advance()
        value = lambda_min_sym(0.5 * (acc.Sigma + acc.Sigma.T))
        curve.append((acc.T, value))
        values.append(value)
        if value >= threshold:
            return BoundReport(tau=acc.T, method="controlled",
                               threshold=threshold, curve=curve)
        if len(values) > STALL_WINDOW and \
                values[-1] - values[-1 - STALL_WINDOW] <= stall_tol:
            evals, evecs = np.linalg.eigh(0.5 * (acc.Sigma + acc.Sigma.T))
            direction = evecs[:, 0]
            raise UnreachableBoundError(
                "bound unreachable under this policy: lambda_min stalled at "
                f"{value:.3e} < threshold {threshold:.3e}; unexcited direction "
                f"[x; u] ~ {np.array2string(direction, precision=4)}",
                direction=direction,
            )
        if acc.T >= step_cap:
            raise IterationCapError(
                f"controlled bound inversion exceeded {step_cap} steps; "
                "consider a larger eps or delta"
            )


def scalar_excitation_sums(a: float, b: float, tau: int) -> Tuple[float, float, float]:
    """Running sums for the scalar constant-input information matrix.

    Returns (varphi, phi_ab, psi) with varphi = sum_{t<tau} sum_{k<t} a^{2k},
    phi_ab = sum_{t<tau} (sum_{k<t} a^k b)^2, psi = sum_{t<tau} sum_{k<t} a^k b,
    all over t = 1..tau-1.
    """
    if tau < 1:
        raise InputError(f"tau must be >= 1, got {tau}")
    g = 1.0   # sum_{k=0}^{t-1} a^{2k}
    h = b     # sum_{k=0}^{t-1} a^k b
    varphi = phi_ab = psi = 0.0
    for _ in range(tau - 1):
        varphi += g
        phi_ab += h * h
        psi += h
        g = 1.0 + a * a * g
        h = b + a * h
    return varphi, phi_ab, psi


def scalar_info_matrix(a: float, b: float, tau: int, u: float,
                       variant: str = "theorem2") -> np.ndarray:
    """The 2x2 scalar information matrix for constant input u.

    variant "paper" puts (tau-1) u^2 in the input-input entry; "theorem2"
    puts tau u^2, matching the exact joint moment summed over t = 0..tau-1.
    """
    varphi, phi_ab, psi = scalar_excitation_sums(a, b, tau)
    u2 = u * u
    if variant == "paper":
        uu = (tau - 1) * u2
    elif variant == "theorem2":
        uu = tau * u2
    else:
        raise InputError(f"variant must be 'paper' or 'theorem2', got '{variant}'")
    return np.array([[varphi + phi_ab * u2, psi * u2], [psi * u2, uu]])


def _lambda_min_2x2(p: float, q: float, r: float) -> float:
    return 0.5 * (p + q - math.hypot(p - q, 2.0 * r))


def scalar_lambda_min(a: float, b: float, tau: int, u: float,
                      variant: str = "theorem2") -> float:
    """lambda_min of the scalar information matrix, by closed form.

    The "paper" variant is the explicit formula
    0.5 * (varphi + (phi_ab + tau - 1) u^2
           - sqrt((varphi + (phi_ab - tau + 1) u^2)^2 + 4 psi^2 u^4));
    "theorem2" evaluates the same eigenvalue formula with tau u^2 in the
    input-input entry.
    """
    varphi, phi_ab, psi = scalar_excitation_sums(a, b, tau)
    u2 = u * u
    if variant == "paper":
        s = varphi + (phi_ab + tau - 1) * u2
        r = varphi + (phi_ab - tau + 1) * u2
        return 0.5 * (s - math.sqrt(r * r + 4.0 * psi * psi * u2 * u2))
    if variant == "theorem2":
        return _lambda_min_2x2(varphi + phi_ab * u2, tau * u2, psi * u2)
    raise InputError(f"variant must be 'paper' or 'theorem2', got '{variant}'")


def sample_complexity_scalar_constant(a: float, b: float, spec: AccuracySpec,
                                      u: float, variant: str = "theorem2",
                                      step_cap: int = DEFAULT_STEP_CAP) -> BoundReport:
    """Smallest tau whose scalar information matrix clears the threshold.

    u = 0 never excites the input entry, so the bound is unreachable.
    """
    if variant not in ("paper", "theorem2"):
        raise InputError(f"variant must be 'paper' or 'theorem2', got '{variant}'")
    threshold = rate_threshold(spec)
    if threshold <= 0.0:
        return BoundReport(tau=1, method="controlled", threshold=threshold,
                           curve=[(1, 0.0)], trivial=True)
    if u == 0.0:
        raise UnreachableBoundError(
            "bound unreachable under this policy: constant input 0 leaves the "
            "input-input entry identically zero",
            direction=np.array([0.0, 1.0]),
        )
    u2 = u * u
    g = 1.0
    h = b
    varphi = phi_ab = psi = 0.0
    tau = 1
    curve: List[Tuple[int, float]] = []
    while True:
        if variant == "paper":
            value = _lambda_min_2x2(varphi + phi_ab * u2, (tau - 1) * u2, psi * u2)
        else:
            value = _lambda_min_2x2(varphi + phi_ab * u2, tau * u2, psi * u2)
        curve.append((tau, value))
        if value >= threshold:
            return BoundReport(tau=tau, method="controlled", threshold=threshold,
                               curve=curve)
        if tau >= step_cap:
            raise IterationCapError(
                f"scalar bound inversion exceeded {step_cap} steps; "
                "consider a larger eps, delta, or input amplitude"
            )
        varphi += g
        phi_ab += h * h
        psi += h
        g = 1.0 + a * a * g
        h = b + a * h
        tau += 1


@dataclass
class InputDesignResult:
    """Outcome of the constant-input amplitude search."""

    ustar: float
    taustar: int
    monotone_nonincreasing: bool  # tau(u) nonincreasing on the scan grid
    flat_objective: bool          # tau(u) constant on the scan grid


def design_constant_input(a: float, b: float, spec: AccuracySpec, umax: float,
                          grid_points: int = 50,
                          step_cap: int = DEFAULT_STEP_CAP) -> InputDesignResult:
    """Pick the constant input u in (0, umax] minimizing the scalar bound.

    A grid pre-scan checks the folklore that tau(u) is nonincreasing in the
    amplitude; a golden-section search on u^2 (the bound depends on u only
    through u^2) refines the minimizer. Ties prefer the largest u, so a flat
    or monotone objective reports ustar = umax.
    """
    if umax <= 0:
        raise InputError(f"umax must be positive, got {umax}")
    if grid_points < 2:
        raise InputError(f"grid_points must be >= 2, got {grid_points}")

    cache: dict = {}

    def tau_of_s(s: float) -> float:
        if s not in cache:
            try:
                cache[s] = float(sample_complexity_scalar_constant(
                    a, b, spec, math.sqrt(s), "theorem2", step_cap).tau)
            except IterationCapError:
                cache[s] = math.inf
        return cache[s]

    grid = [(umax * (i + 1) / grid_points) ** 2 for i in range(grid_points)]
    taus = [tau_of_s(s) for s in grid]
    if all(math.isinf(t) for t in taus):
        raise IterationCapError(
            f"every scanned input amplitude in (0, {umax}] exceeded the "
            f"{step_cap}-step cap; the bound degenerates as u -> 0"
        )
    monotone = all(taus[i + 1] <= taus[i] for i in range(len(taus) - 1))
    flat = all(t == taus[0] for t in taus)

    # Golden-section on s = u^2; the objective is a step function, so this
    # narrows onto some point of the minimizing plateau.
    lo, hi = grid[0], grid[-1]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    for _ in range(60):
        if hi - lo < 1e-10 * umax * umax:
            break
        if tau_of_s(x1) <= tau_of_s(x2):
            hi = x2
        else:
            lo = x1
        x1 = hi - invphi * (hi - lo)
        x2 = lo + invphi * (hi - lo)

    best_s = max((s for s in cache if cache[s] == min(cache.values())))
    return InputDesignResult(
        ustar=math.sqrt(best_s),
        taustar=int(cache[best_s]),
        monotone_nonincreasing=monotone,
        flat_objective=flat,
    )
