import numpy as np
import pytest

from sysid_bounds import (
    AccuracySpec,
    ConstantPolicy,
    ControlledSystem,
    ExternalPolicy,
    FeedbackPolicy,
    InputError,
    IterationCapError,
    UnreachableBoundError,
    design_constant_input,
    gramian_sum,
    joint_moment_exact,
    joint_moment_mc,
    lambda_min_sym,
    sample_complexity_controlled,
    sample_complexity_scalar_constant,
    scalar_excitation_sums,
    scalar_info_matrix,
    scalar_lambda_min,
)

SEED = 515151
SPEC = AccuracySpec(0.1, 0.05)


def scalar_system(a, b):
    return ControlledSystem(np.array([[float(a)]]), np.array([[float(b)]]))


# ---------------------------------------------------------------------------
# exact joint moments
# ---------------------------------------------------------------------------

def test_joint_moment_exact_hand_computed():
    jm = joint_moment_exact(scalar_system(0, 1), ConstantPolicy(np.array([1.0])), 2)
    assert np.allclose(jm.Sigma, [[2.0, 1.0], [1.0, 2.0]], atol=1e-14)


def test_joint_moment_exact_T1_only_input_term():
    u = np.array([1.5, -2.0])
    sys_ = ControlledSystem(0.5 * np.eye(3), np.ones((3, 2)))
    jm = joint_moment_exact(sys_, ConstantPolicy(u), 1)
    expected = np.zeros((5, 5))
    expected[3:, 3:] = np.outer(u, u)
    assert np.allclose(jm.Sigma, expected, atol=1e-14)


def test_joint_moment_exact_zero_input_reduces_to_gramian_sum():
    rng = np.random.default_rng(SEED)
    A = 0.6 * rng.standard_normal((3, 3)) / np.sqrt(3)
    sys_ = ControlledSystem(A, rng.standard_normal((3, 2)))
    T = 17
    jm = joint_moment_exact(sys_, ConstantPolicy(np.zeros(2)), T)
    S = gramian_sum(A, T)
    assert np.max(np.abs(jm.Sigma[:3, :3] - S)) <= 1e-12
    assert np.max(np.abs(jm.Sigma[3:, :])) == 0.0
    assert np.max(np.abs(jm.Sigma[:, 3:])) == 0.0


def test_joint_moment_exact_feedback_matches_monte_carlo():
    sys_ = ControlledSystem(np.array([[0.6, 0.2], [0.0, 0.4]]), np.eye(2))
    policy = FeedbackPolicy(K=np.array([[-0.3, 0.0], [0.1, -0.2]]),
                            c=np.array([0.5, -1.0]))
    exact = joint_moment_exact(sys_, policy, 8)
    mc = joint_moment_mc(sys_, policy, 8, trials=4000, seed=SEED)
    assert np.all(np.abs(mc.Sigma - exact.Sigma) <= 5 * mc.stderr + 1e-9)


def test_joint_moment_lambda_min_nondecreasing_in_T():
    sys_ = ControlledSystem(np.array([[0.5, 0.1], [0.0, 0.7]]), np.eye(2))
    for policy in (ConstantPolicy(np.array([1.0, 0.5])),
                   FeedbackPolicy(K=np.array([[-0.2, 0.0], [0.0, -0.3]]),
                                  c=np.array([1.0, 1.0]))):
        prev = -1.0
        for T in range(1, 40):
            val = lambda_min_sym(joint_moment_exact(sys_, policy, T).Sigma)
            assert val >= prev - 1e-10
            prev = val


def test_joint_moment_exact_dimension_errors():
    with pytest.raises(InputError):
        joint_moment_exact(scalar_system(0, 1), ConstantPolicy(np.array([1.0, 2.0])), 3)
    with pytest.raises(InputError):
        joint_moment_exact(scalar_system(0, 1),
                           FeedbackPolicy(K=np.eye(2), c=np.zeros(2)), 3)


# ---------------------------------------------------------------------------
# Monte Carlo joint moments
# ---------------------------------------------------------------------------

def test_joint_moment_mc_concentrates_to_exact():
    sys_ = scalar_system(0.5, 1.0)
    policy = ConstantPolicy(np.array([1.0]))
    exact = joint_moment_exact(sys_, policy, 10)
    mc = joint_moment_mc(sys_, policy, 10, trials=10_000, seed=SEED)
    assert np.all(np.abs(mc.Sigma - exact.Sigma) <= 4 * mc.stderr)


def test_joint_moment_mc_no_randomness_at_T1():
    mc = joint_moment_mc(scalar_system(0.5, 1.0), ConstantPolicy(np.array([2.0])),
                         1, trials=2, seed=SEED)
    assert np.allclose(mc.Sigma, [[0.0, 0.0], [0.0, 4.0]], atol=1e-14)
    assert np.allclose(mc.stderr, 0.0, atol=1e-14)


def test_joint_moment_mc_deterministic():
    sys_ = scalar_system(0.3, 1.0)
    policy = ConstantPolicy(np.array([0.7]))
    m1 = joint_moment_mc(sys_, policy, 6, trials=50, seed=SEED)
    m2 = joint_moment_mc(sys_, policy, 6, trials=50, seed=SEED)
    assert np.array_equal(m1.Sigma, m2.Sigma)
    assert np.array_equal(m1.stderr, m2.stderr)


def test_joint_moment_mc_requires_two_trials():
    with pytest.raises(InputError):
        joint_moment_mc(scalar_system(0, 1), ConstantPolicy(np.array([1.0])),
                        3, trials=1, seed=SEED)


# ---------------------------------------------------------------------------
# bound inversion
# ---------------------------------------------------------------------------

def test_tau_controlled_agrees_with_scalar_closed_form():
    rng = np.random.default_rng(SEED)
    for _ in range(5):
        a = rng.uniform(-0.95, 1.05)
        b = rng.uniform(0.5, 2.0)
        u = rng.uniform(0.5, 2.0)
        via_moments = sample_complexity_controlled(
            scalar_system(a, b), SPEC, ConstantPolicy(np.array([u])))
        via_sums = sample_complexity_scalar_constant(a, b, SPEC, u, "theorem2")
        assert via_moments.tau == via_sums.tau


def test_tau_controlled_zero_input_unreachable():
    with pytest.raises(UnreachableBoundError) as err:
        sample_complexity_controlled(scalar_system(0.5, 1.0), SPEC,
                                     ConstantPolicy(np.array([0.0])))
    assert err.value.direction is not None


def test_tau_controlled_pure_feedback_unreachable():
    # u_t = K x_t with no offset: u is collinear with x, B unidentifiable
    sys_ = ControlledSystem(np.array([[0.5]]), np.array([[1.0]]))
    policy = FeedbackPolicy(K=np.array([[-0.2]]), c=np.array([0.0]))
    with pytest.raises(UnreachableBoundError):
        sample_complexity_controlled(sys_, SPEC, policy)


def test_tau_controlled_multi_input_affine_feedback_unreachable():
    # with p >= 2, u_t = K x_t + c is deterministic given x_t, so the joint
    # moment matrix has rank <= d + 1 < d + p: no affine feedback reaches it
    sys_ = ControlledSystem(np.array([[0.9, 0.2], [0.0, 0.8]]), np.eye(2))
    policy = FeedbackPolicy(K=np.array([[-0.5, -0.1], [0.0, -0.4]]),
                            c=np.array([1.0, -0.5]))
    with pytest.raises(UnreachableBoundError):
        sample_complexity_controlled(sys_, AccuracySpec(0.2, 0.1), policy)


def test_tau_controlled_feedback_with_offset_is_finite():
    # single-input feedback with a nonzero offset excites the full [x; u] space
    sys_ = ControlledSystem(np.array([[0.9, 0.2], [0.0, 0.8]]),
                            np.array([[1.0], [0.5]]))
    policy = FeedbackPolicy(K=np.array([[-0.5, -0.1]]), c=np.array([1.0]))
    report = sample_complexity_controlled(sys_, AccuracySpec(0.2, 0.1), policy)
    assert report.tau >= 2
    values = [v for _, v in report.curve]
    assert all(v2 >= v1 - 1e-10 for v1, v2 in zip(values, values[1:]))


def test_tau_controlled_monte_carlo_path_close_to_exact():
    sys_ = scalar_system(0.2, 1.0)
    policy = ConstantPolicy(np.array([1.5]))
    spec = AccuracySpec(0.3, 0.1)
    exact = sample_complexity_controlled(sys_, spec, policy)
    mc = sample_complexity_controlled(sys_, spec, policy, trials=3000, seed=SEED)
    assert abs(mc.tau - exact.tau) <= max(2, int(0.1 * exact.tau))


def test_tau_controlled_external_policy_needs_trials():
    sys_ = scalar_system(0.2, 1.0)
    policy = ExternalPolicy(lambda states, inputs: np.array([1.0]), p=1)
    with pytest.raises(InputError):
        sample_complexity_controlled(sys_, SPEC, policy)
    spec = AccuracySpec(0.5, 0.2)
    report = sample_complexity_controlled(sys_, spec, policy, trials=500, seed=SEED)
    ref = sample_complexity_controlled(sys_, spec, ConstantPolicy(np.array([1.0])))
    assert abs(report.tau - ref.tau) <= max(2, int(0.2 * ref.tau))


def test_tau_controlled_trivial_for_large_delta():
    report = sample_complexity_controlled(scalar_system(0, 1),
                                          AccuracySpec(0.1, 0.9),
                                          ConstantPolicy(np.array([1.0])))
    assert report.tau == 1 and report.trivial


# ---------------------------------------------------------------------------
# scalar sums and closed forms
# ---------------------------------------------------------------------------

def test_scalar_sums_examples():
    assert scalar_excitation_sums(0.0, 1.0, 2) == (1.0, 1.0, 1.0)
    assert scalar_excitation_sums(0.7, 2.0, 1) == (0.0, 0.0, 0.0)
    for tau in (2, 5, 9):
        varphi, phi_ab, psi = scalar_excitation_sums(0.0, 1.0, tau)
        assert (varphi, phi_ab, psi) == (tau - 1, tau - 1, tau - 1)


def test_scalar_sums_match_direct_summation():
    rng = np.random.default_rng(SEED)
    for _ in range(20):
        a = rng.uniform(-1.2, 1.2)
        b = rng.uniform(-2.0, 2.0)
        tau = int(rng.integers(1, 40))
        varphi, phi_ab, psi = scalar_excitation_sums(a, b, tau)
        inner = [sum(a**k * b for k in range(t)) for t in range(1, tau)]
        inner_sq = [sum(a ** (2 * k) for k in range(t)) for t in range(1, tau)]
        assert varphi == pytest.approx(sum(inner_sq), rel=1e-10, abs=1e-12)
        assert phi_ab == pytest.approx(sum(v * v for v in inner), rel=1e-10, abs=1e-12)
        assert psi == pytest.approx(sum(inner), rel=1e-10, abs=1e-12)


def test_scalar_lambda_min_values():
    assert scalar_lambda_min(0, 1, 2, 1, "paper") == \
        pytest.approx((3 - np.sqrt(5)) / 2, rel=1e-12)
    assert scalar_lambda_min(0, 1, 2, 1, "theorem2") == pytest.approx(1.0, rel=1e-12)
    for a, tau in ((0.0, 5), (0.5, 7), (1.1, 3)):
        assert scalar_lambda_min(a, 1.0, tau, 0.0, "paper") == 0.0


def test_scalar_lambda_min_matches_eigensolve():
    rng = np.random.default_rng(SEED)
    for _ in range(200):
        a = rng.uniform(-1.1, 1.1)
        b = rng.uniform(-2.0, 2.0)
        tau = int(rng.integers(1, 20))
        u = rng.uniform(0.0, 3.0)
        for variant in ("paper", "theorem2"):
            M = scalar_info_matrix(a, b, tau, u, variant)
            direct = float(np.linalg.eigvalsh(M)[0])
            closed = scalar_lambda_min(a, b, tau, u, variant)
            assert closed == pytest.approx(direct, rel=1e-9, abs=1e-9)


def test_tau_scalar_constant_decoupled_case():
    assert sample_complexity_scalar_constant(0.0, 0.0, SPEC, 1.0, "paper").tau == 108
    assert sample_complexity_scalar_constant(0.0, 0.0, SPEC, 1.0, "theorem2").tau == 108


def test_tau_scalar_constant_zero_input_unreachable():
    with pytest.raises(UnreachableBoundError):
        sample_complexity_scalar_constant(0.5, 1.0, SPEC, 0.0)


def test_tau_scalar_constant_large_amplitude_limit():
    # past some amplitude the state row is the binding constraint
    t1 = sample_complexity_scalar_constant(0.5, 1.0, SPEC, 1e3).tau
    t2 = sample_complexity_scalar_constant(0.5, 1.0, SPEC, 1e6).tau
    assert t1 == t2


def test_tau_scalar_constant_step_cap():
    with pytest.raises(IterationCapError):
        sample_complexity_scalar_constant(0.0, 1.0, SPEC, 1.0, step_cap=5)


# ---------------------------------------------------------------------------
# input design
# ---------------------------------------------------------------------------

def test_design_constant_input_monotone_case_prefers_max_amplitude():
    result = design_constant_input(0.5, 1.0, SPEC, umax=2.0)
    assert result.monotone_nonincreasing
    assert result.ustar == pytest.approx(2.0, rel=1e-9)
    assert result.taustar == sample_complexity_scalar_constant(
        0.5, 1.0, SPEC, 2.0, "theorem2").tau


def test_design_constant_input_flat_when_b_zero():
    # b = 0: the input never reaches the state, so once the amplitude is large
    # enough for the input row (u^2 >= threshold / tau_state, here u >= ~1.15)
    # the bound is state-limited and tau(u) is constant; scan inside that band
    result = design_constant_input(0.5, 0.0, SPEC, umax=60.0)
    assert result.flat_objective
    assert result.ustar == pytest.approx(60.0, rel=1e-9)
    # a small-amplitude scan still sees the input-row constraint: not flat
    result_small = design_constant_input(0.5, 0.0, SPEC, umax=1.5)
    assert not result_small.flat_objective
    assert result_small.monotone_nonincreasing


def test_design_constant_input_tiny_umax_hits_cap():
    with pytest.raises(IterationCapError):
        design_constant_input(0.5, 1.0, SPEC, umax=1e-4, step_cap=50_000)


def test_design_constant_input_rejects_bad_umax():
    with pytest.raises(InputError):
        design_constant_input(0.5, 1.0, SPEC, umax=0.0)
