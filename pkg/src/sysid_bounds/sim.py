"""Seeded trajectory simulation, least-squares estimation, and the empirical
sample-complexity harness.

All randomness flows through numpy's PCG64 generator seeded via SeedSequence;
per-trial substreams are derived from (seed, trial index) through SeedSequence
spawn keys, so trials are independent, reproducible, and order-insensitive.
The harness measures the first horizon at which the least-squares estimator
meets the accuracy target with the required frequency, which (tested at the
center system only) is an optimistic stand-in for the uniform guarantee the
theoretical bound assumes - so an ordering check tau_hat >= tau is meaningful.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import (
    AccuracySpec,
    ConstantPolicy,
    ControlledSystem,
    ExternalPolicy,
    FeedbackPolicy,
    HorizonExhaustedError,
    InputError,
    Policy,
    UncontrolledSystem,
    as_matrix,
)
from .uncontrolled import sample_complexity_gramian, sample_complexity_spectral

PRNG_ID = "numpy-pcg64-seedsequence-v1"
OLS_RIDGE = 1e-10          # singularity guard on the normal equations
STATE_OVERFLOW = 1e150     # halt a trial past this state norm
CHECKPOINT_RATIO = 1.2
REFINE_RATIO = 1.05
STABILITY_CHECKPOINTS = 3  # crossings must persist this many checkpoints


def substream_seed(seed: int, index: int) -> int:
    """Derived integer seed for trial `index` of a run seeded with `seed`."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


@dataclass
class Trajectory:
    """One seeded realization. states rows are x_1..x_T; inputs rows (when
    present) are u_0..u_{T-1}; x_0 = 0 is implicit. halted marks a trial cut
    short by the state-overflow guard, in which case T is the stored length."""

    states: np.ndarray
    inputs: Optional[np.ndarray]
    seed: int
    T: int
    halted: bool = False


def simulate_uncontrolled(sys: UncontrolledSystem, T: int, seed: int,
                          noise: Optional[np.ndarray] = None) -> Trajectory:
    """Simulate x_{t+1} = A x_t + w_t for T steps from x_0 = 0.

    `noise` (shape (T, d)) overrides the seeded Gaussian draws; it exists for
    deterministic tests and is not part of the CLI surface.
    """
    if T < 1:
        raise InputError(f"T must be >= 1, got {T}")
    d = sys.d
    if noise is None:
        W = _rng(seed).standard_normal((T, d))
    else:
        W = as_matrix(noise, "noise")
        if W.shape != (T, d):
            raise InputError(f"noise must have shape {(T, d)}, got {W.shape}")
    states = np.zeros((T, d))
    x = np.zeros(d)
    halted = False
    stored = 0
    for t in range(T):
        x = sys.A @ x + W[t]
        if np.linalg.norm(x) > STATE_OVERFLOW:
            halted = True
            break
        states[t] = x
        stored += 1
    return Trajectory(states=states[:stored], inputs=None, seed=int(seed),
                      T=stored, halted=halted)


def _policy_input(policy: Policy, x: np.ndarray, states: np.ndarray,
                  inputs: np.ndarray) -> np.ndarray:
    if isinstance(policy, ConstantPolicy):
        return policy.u
    if isinstance(policy, FeedbackPolicy):
        return policy.K @ x + policy.c
    if isinstance(policy, ExternalPolicy):
        u = np.asarray(policy.fn(states, inputs), dtype=float).reshape(-1)
        if u.size != policy.p:
            raise InputError(f"external policy returned length {u.size}, expected {policy.p}")
        return u
    raise InputError(f"unknown policy type {type(policy).__name__}")


def _policy_dim(policy: Policy) -> int:
    if isinstance(policy, ConstantPolicy):
        return policy.u.size
    if isinstance(policy, FeedbackPolicy):
        return policy.K.shape[0]
    return policy.p


def simulate_controlled(sys: ControlledSystem, policy: Policy, T: int,
                        seed: int, noise: Optional[np.ndarray] = None) -> Trajectory:
    """Simulate x_{t+1} = A x_t + B u_t + w_t with a causal input policy."""
    if T < 1:
        raise InputError(f"T must be >= 1, got {T}")
    d, p = sys.d, sys.p
    if _policy_dim(policy) != p:
        raise InputError(f"policy input dimension {_policy_dim(policy)} != B columns {p}")
    if noise is None:
        W = _rng(seed).standard_normal((T, d))
    else:
        W = as_matrix(noise, "noise")
        if W.shape != (T, d):
            raise InputError(f"noise must have shape {(T, d)}, got {W.shape}")
    states = np.zeros((T, d))
    inputs = np.zeros((T, p))
    x = np.zeros(d)
    halted = False
    stored = 0
    for t in range(T):
        u = _policy_input(policy, x, states[:t], inputs[:t])
        inputs[t] = u
        x = sys.A @ x + sys.B @ u + W[t]
        if np.linalg.norm(x) > STATE_OVERFLOW:
            halted = True
            break
        states[t] = x
        stored += 1
    return Trajectory(states=states[:stored], inputs=inputs[:stored],
                      seed=int(seed), T=stored, halted=halted)


def ols_uncontrolled(traj: Trajectory, t: int) -> np.ndarray:
    """Ridge-guarded least squares estimate of A from x_1..x_t.

    A_hat = (sum x_{s+1} x_s^T)(sum x_s x_s^T + ridge*I)^{-1} over s <= t-1;
    the x_0 = 0 term contributes nothing.
    """
    if not 2 <= t <= traj.T:
        raise InputError(f"t must lie in [2, {traj.T}], got {t}")
    X = traj.states
    prev = X[:t - 1]
    nxt = X[1:t]
    Sxx = prev.T @ prev + OLS_RIDGE * np.eye(X.shape[1])
    Sxy = nxt.T @ prev
    return np.linalg.solve(Sxx.T, Sxy.T).T


def ols_controlled(traj: Trajectory, t: int) -> Tuple[np.ndarray, np.ndarray]:
    """Joint least squares [A_hat B_hat] regressing x_{s+1} on z_s = [x_s; u_s]."""
    if traj.inputs is None:
        raise InputError("trajectory has no inputs; use ols_uncontrolled")
    if not 2 <= t <= traj.T:
        raise InputError(f"t must lie in [2, {traj.T}], got {t}")
    d = traj.states.shape[1]
    Zx = np.vstack([np.zeros((1, d)), traj.states[:t - 1]])  # x_0..x_{t-1}
    Z = np.hstack([Zx, traj.inputs[:t]])
    Y = traj.states[:t]
    G = Z.T @ Z + OLS_RIDGE * np.eye(Z.shape[1])
    theta = np.linalg.solve(G, Z.T @ Y).T
    return theta[:, :d], theta[:, d:]


# ---------------------------------------------------------------------------
# Empirical sample complexity
# ---------------------------------------------------------------------------

@dataclass
class EmpiricalComplexity:
    """First stable crossing of the success level, with the whole curve."""

    tau_hat: int
    success_curve: List[Tuple[int, float]]
    trials: int
    seed: int
    prng: str = PRNG_ID


def checkpoint_schedule(Tmax: int, start: int = 2,
                        ratio: float = CHECKPOINT_RATIO) -> List[int]:
    """Geometric checkpoint grid within [start, Tmax]."""
    if Tmax < start:
        return []
    out = []
    t = start
    while t <= Tmax:
        out.append(t)
        t = max(t + 1, math.ceil(t * ratio))
    return out


def _refine_between(lo: int, hi: int) -> List[int]:
    out = []
    t = lo
    while t < hi:
        t = max(t + 1, math.ceil(t * REFINE_RATIO))
        if t < hi:
            out.append(t)
    return out


class _TrialStream:
    """One trial advanced in lockstep with the checkpoint schedule.

    Noise is drawn in chunks from the trial's substream; chunked draws equal
    whole draws for PCG64, so this matches simulate_* step for step.
    """

    _CHUNK = 1024

    def __init__(self, sys, policy: Optional[Policy], seed: int):
        self.A = sys.A
        self.B = sys.B if policy is not None else None
        self.policy = policy
        self.d = sys.d
        self.p = _policy_dim(policy) if policy is not None else 0
        self.rng = _rng(seed)
        self.x = np.zeros(self.d)
        self.t = 0  # index of the latest state computed
        n = self.d + self.p
        self.Szz = np.zeros((n, n))
        self.Szy = np.zeros((self.d, n))
        self.halted = False
        self._buf = np.empty((0, self.d))
        self._bi = 0
        self._hist_x: List[np.ndarray] = []
        self._hist_u: List[np.ndarray] = []
        self._external = isinstance(policy, ExternalPolicy)

    def _next_noise(self) -> np.ndarray:
        if self._bi >= self._buf.shape[0]:
            self._buf = self.rng.standard_normal((self._CHUNK, self.d))
            self._bi = 0
        w = self._buf[self._bi]
        self._bi += 1
        return w

    def advance_to(self, t_target: int) -> None:
        while self.t < t_target:
            if self.halted:
                self.t = t_target
                return
            if self.policy is None:
                z = self.x
                x_new = self.A @ self.x + self._next_noise()
            else:
                if self._external:
                    states = (np.array(self._hist_x) if self._hist_x
                              else np.zeros((0, self.d)))
                    inputs = (np.array(self._hist_u) if self._hist_u
                              else np.zeros((0, self.p)))
                    u = _policy_input(self.policy, self.x, states, inputs)
                    self._hist_u.append(u)
                else:
                    u = _policy_input(self.policy, self.x, None, None)
                z = np.concatenate([self.x, u])
                x_new = self.A @ self.x + self.B @ u + self._next_noise()
            if np.linalg.norm(x_new) > STATE_OVERFLOW:
                self.halted = True  # keep the estimate available at halt
                self.t = t_target
                return
            self.Szz += np.outer(z, z)
            self.Szy += np.outer(x_new, z)
            self.x = x_new
            self.t += 1
            if self._external:
                self._hist_x.append(x_new)

    def estimate(self) -> np.ndarray:
        G = self.Szz + OLS_RIDGE * np.eye(self.Szz.shape[0])
        return np.linalg.solve(G, self.Szy.T).T


def _first_stable(fractions: List[float], level: float) -> Optional[int]:
    for j in range(len(fractions) - STABILITY_CHECKPOINTS):
        window = fractions[j:j + STABILITY_CHECKPOINTS + 1]
        if all(f >= level for f in window):
            return j
    return None


def _scan(sys, spec: AccuracySpec, trials: int, seed: int, schedule: List[int],
          policy: Optional[Policy], target: np.ndarray, level: float
          ) -> Tuple[List[int], List[float], Optional[int]]:
    """Walk checkpoints in lockstep across trials, stopping at the first
    stability-confirmed crossing of `level`."""
    streams = [_TrialStream(sys, policy, substream_seed(seed, i))
               for i in range(trials)]
    visited: List[int] = []
    fractions: List[float] = []
    for cp in schedule:
        hits = 0
        for st in streams:
            st.advance_to(cp)
            hits += float(np.linalg.norm(st.estimate() - target)) <= spec.eps
        visited.append(cp)
        fractions.append(hits / trials)
        j = _first_stable(fractions, level)
        if j is not None:
            return visited, fractions, j
    return visited, fractions, None


def empirical_sample_complexity(sys, spec: AccuracySpec, trials: int, seed: int,
                                Tmax: int, policy: Optional[Policy] = None
                                ) -> EmpiricalComplexity:
    """Monte Carlo estimate of the sample complexity of least squares on `sys`.

    Runs `trials` seeded simulations in lockstep over a geometric checkpoint
    grid (ratio 1.2), measuring the fraction of trials whose estimate is
    within eps of the truth (Frobenius norm; controlled systems compare the
    stacked [A B]). tau_hat is the first checkpoint at which the fraction
    reaches 1 - delta and stays there for the next three checkpoints; the grid
    is refined (ratio 1.05) around the first crossing found on the coarse
    grid, and the run is re-evaluated deterministically on the merged grid.
    """
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")
    if Tmax < 2:
        raise InputError(f"Tmax must be >= 2, got {Tmax}")
    if isinstance(sys, ControlledSystem):
        if policy is None:
            raise InputError("a policy is required for controlled systems")
        target = np.hstack([sys.A, sys.B])
    elif isinstance(sys, UncontrolledSystem):
        policy = None
        target = sys.A
    else:
        raise InputError(f"unsupported system type {type(sys).__name__}")

    level = 1.0 - spec.delta
    coarse = checkpoint_schedule(Tmax)
    if not coarse:
        raise InputError(f"Tmax = {Tmax} leaves no checkpoints")

    visited, fractions, stable_j = _scan(sys, spec, trials, seed, coarse,
                                         policy, target, level)
    if stable_j is None:
        raise HorizonExhaustedError(
            f"success fraction never crossed {level:.4f} stably before "
            f"Tmax = {Tmax} (final fraction {fractions[-1]:.4f})",
            final_fraction=fractions[-1],
        )

    # Refine around the first (not necessarily stable) crossing, then rescan
    # the merged grid; the merged grid still extends to Tmax, so a crossing
    # perturbed by refinement is chased further out rather than lost.
    cross = next(i for i, f in enumerate(fractions) if f >= level)
    lo = visited[cross - 1] if cross > 0 else visited[0]
    merged = sorted(set(coarse) | set(_refine_between(lo, visited[cross])))
    schedule, fractions2, j = _scan(sys, spec, trials, seed, merged,
                                    policy, target, level)
    if j is None:
        raise HorizonExhaustedError(
            f"refined schedule lost the stable crossing before Tmax = {Tmax} "
            f"(final fraction {fractions2[-1]:.4f})",
            final_fraction=fractions2[-1],
        )
    return EmpiricalComplexity(
        tau_hat=schedule[j],
        success_curve=list(zip(schedule, fractions2)),
        trials=trials,
        seed=int(seed),
    )


def tightness_report(sys: UncontrolledSystem, spec: AccuracySpec, trials: int,
                     seed: int, Tmax: int) -> dict:
    """Theoretical bounds vs empirical crossing for one uncontrolled system."""
    rg = sample_complexity_gramian(sys.A, spec)
    rs = sample_complexity_spectral(sys.A, spec)
    emp = empirical_sample_complexity(sys, spec, trials, seed, Tmax)
    return {
        "eps": spec.eps,
        "delta": spec.delta,
        "trials": trials,
        "seed": int(seed),
        "tmax": int(Tmax),
        "threshold": rg.threshold,
        "trivial": rg.trivial,
        "tau_gramian": rg.tau,
        "tau_spectral": rs.tau,
        "tau_hat": emp.tau_hat,
        "ratio": emp.tau_hat / rg.tau,
        "success_curve": [[int(t), float(f)] for t, f in emp.success_curve],
        "prng": PRNG_ID,
    }
