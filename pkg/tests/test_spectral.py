import numpy as np
import pytest

from sysid_bounds import (
    InputError,
    block_diagonalize,
    eigenvalues_sorted,
    lambda_min_sym,
    schur_sorted,
)

SEED = 20240811


def rotation(theta):
    return np.array([[np.cos(theta), -np.sin(theta)],
                     [np.sin(theta), np.cos(theta)]])


def random_matrix(rng, d, scale=1.0):
    return scale * rng.standard_normal((d, d)) / np.sqrt(d)


# ---------------------------------------------------------------------------
# eigenvalues_sorted
# ---------------------------------------------------------------------------

def test_eigenvalues_sorted_diagonal():
    vals = eigenvalues_sorted(np.diag([2.0, 0.5]))
    assert np.allclose(vals, [2.0, 0.5])


def test_eigenvalues_sorted_scaled_rotation():
    vals = eigenvalues_sorted(0.9 * rotation(np.pi / 3))
    expected = 0.9 * np.exp(1j * np.pi / 3)
    assert vals[0] == pytest.approx(expected, abs=1e-12)
    assert vals[1] == pytest.approx(np.conj(expected), abs=1e-12)


def test_eigenvalues_sorted_identity_and_order():
    assert np.allclose(eigenvalues_sorted(np.eye(3)), [1, 1, 1])
    vals = eigenvalues_sorted(np.diag([0.1, -3.0, 2.0, 0.7]))
    assert np.allclose(vals, [-3.0, 2.0, 0.7, 0.1])


def test_eigenvalues_sorted_rejects_nonsquare():
    with pytest.raises(InputError):
        eigenvalues_sorted(np.ones((2, 3)))


# ---------------------------------------------------------------------------
# lambda_min_sym
# ---------------------------------------------------------------------------

def test_lambda_min_sym_values():
    assert lambda_min_sym(np.eye(4)) == pytest.approx(1.0)
    assert lambda_min_sym(np.array([[2.0, 1.0], [1.0, 1.0]])) == \
        pytest.approx((3 - np.sqrt(5)) / 2, rel=1e-12)
    assert lambda_min_sym(np.diag([5.0, 3.0, 0.25])) == pytest.approx(0.25)


def test_lambda_min_sym_rejects_asymmetry():
    with pytest.raises(InputError):
        lambda_min_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_lambda_min_sym_rayleigh_upper_bound():
    rng = np.random.default_rng(SEED)
    M = rng.standard_normal((5, 5))
    S = M @ M.T
    lam = lambda_min_sym(S)
    for _ in range(100):
        x = rng.standard_normal(5)
        x /= np.linalg.norm(x)
        assert lam <= x @ S @ x + 1e-12


# ---------------------------------------------------------------------------
# schur_sorted
# ---------------------------------------------------------------------------

def assert_valid_schur(A, form):
    d = A.shape[0]
    assert np.linalg.norm(form.Q.T @ form.Q - np.eye(d)) <= 1e-9 * d
    assert np.linalg.norm(form.Q @ form.U @ form.Q.T - A) <= 1e-8 * (1 + np.linalg.norm(A))
    # zero below the block diagonal
    mask = np.tril(np.ones((d, d), bool), -1)
    for b in form.blocks:
        if b.size == 2:
            mask[b.offset + 1, b.offset] = False
    assert np.max(np.abs(form.U[mask])) <= 1e-10 if mask.any() else True


def test_schur_sorted_swaps_diagonal():
    A = np.diag([0.5, 2.0])
    form = schur_sorted(A)
    assert_valid_schur(A, form)
    assert np.allclose(np.diag(form.U), [2.0, 0.5])
    assert abs(form.trailing.eigenvalues[0]) == pytest.approx(0.5)
    assert np.allclose(np.abs(form.Q), [[0, 1], [1, 0]])  # permutation


def test_schur_sorted_trailing_rotation_block():
    A = np.zeros((3, 3))
    A[0, 0] = 2.0
    A[1:, 1:] = 0.9 * rotation(np.pi / 4)
    form = schur_sorted(A)
    assert_valid_schur(A, form)
    assert form.trailing.size == 2
    assert form.trailing.amplitude == pytest.approx(0.9, abs=1e-9)


def test_schur_sorted_moves_leading_rotation_block():
    # smallest-amplitude pair starts in leading position, must travel right
    A = np.zeros((4, 4))
    A[:2, :2] = 0.9 * rotation(np.pi / 4)
    A[2, 2] = 2.0
    A[3, 3] = -1.5
    form = schur_sorted(A)
    assert_valid_schur(A, form)
    assert form.trailing.size == 2
    assert form.trailing.amplitude == pytest.approx(0.9, abs=1e-9)


def test_schur_sorted_already_sorted_triangular():
    A = np.triu(np.array([[3.0, 1.0, 0.2], [0.0, -2.0, 0.9], [0.0, 0.0, 0.5]]))
    form = schur_sorted(A)
    assert_valid_schur(A, form)
    assert abs(form.trailing.eigenvalues[0]) == pytest.approx(0.5)


def test_schur_sorted_amplitude_tie_keeps_layout():
    # scaled orthogonal: every amplitude ties, no swaps should be needed
    rng = np.random.default_rng(SEED)
    Q, R = np.linalg.qr(rng.standard_normal((4, 4)))
    A = 0.8 * Q * np.sign(np.diag(R))
    form = schur_sorted(A)
    assert_valid_schur(A, form)
    assert form.trailing.amplitude == pytest.approx(0.8, abs=1e-9)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 6, 8])
def test_schur_sorted_random_matrices(d):
    rng = np.random.default_rng(SEED + d)
    for _ in range(10):
        A = random_matrix(rng, d)
        form = schur_sorted(A)
        assert_valid_schur(A, form)
        evals = eigenvalues_sorted(A)
        # trailing block carries the smallest amplitude
        assert form.trailing.amplitude == pytest.approx(abs(evals[-1]), abs=1e-9 * (1 + abs(evals[-1])))
        # block eigenvalue multiset matches the spectrum
        block_evals = sorted(
            (ev for b in form.blocks for ev in b.eigenvalues),
            key=lambda z: (-abs(z), -z.real, -z.imag),
        )
        for ours, ref in zip(block_evals, evals):
            assert abs(ours - ref) <= 1e-7 * (1 + abs(ref))
        # product of block eigenvalues reproduces det(A)
        prod = np.prod([ev for b in form.blocks for ev in b.eigenvalues])
        det = np.linalg.det(A)
        assert abs(prod.real - det) <= 1e-6 * (1 + abs(det))
        assert abs(prod.imag) <= 1e-6 * (1 + abs(det))


def test_schur_sorted_residual_invariant_under_reordering():
    # the sorted form's residual stays at the scale of the unsorted one
    import scipy.linalg

    rng = np.random.default_rng(SEED)
    for _ in range(10):
        A = random_matrix(rng, 6)
        U0, Q0 = scipy.linalg.schur(A, output="real")
        base = np.linalg.norm(Q0 @ U0 @ Q0.T - A)
        form = schur_sorted(A)
        sorted_res = np.linalg.norm(form.Q @ form.U @ form.Q.T - A)
        assert sorted_res <= max(10 * base, 1e-10 * (1 + np.linalg.norm(A)))


# ---------------------------------------------------------------------------
# block_diagonalize
# ---------------------------------------------------------------------------

def test_block_diagonalize_rotation_form_is_fixed_point():
    alpha, beta = 0.3, 0.4
    B = np.array([[alpha, -beta], [beta, alpha]])
    bd = block_diagonalize(B)
    assert bd.alpha == pytest.approx(alpha, abs=1e-12)
    assert bd.beta == pytest.approx(beta, abs=1e-12)
    assert bd.theta == pytest.approx(np.arctan2(beta, alpha), abs=1e-12)
    assert np.allclose(np.abs(bd.P), np.eye(2), atol=1e-9)


def test_block_diagonalize_pure_imaginary_pair():
    bd = block_diagonalize(np.array([[0.0, -4.0], [1.0, 0.0]]))
    assert bd.amplitude == pytest.approx(2.0, rel=1e-9)
    recon = bd.P @ np.array([[bd.alpha, -bd.beta], [bd.beta, bd.alpha]]) @ np.linalg.inv(bd.P)
    assert np.linalg.norm(recon - np.array([[0.0, -4.0], [1.0, 0.0]])) <= 1e-9


def test_block_diagonalize_conjugated_rotation():
    T = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = T @ (0.5 * rotation(0.3)) @ np.linalg.inv(T)
    bd = block_diagonalize(B)
    assert bd.amplitude == pytest.approx(0.5, rel=1e-9)
    assert bd.theta == pytest.approx(0.3, abs=1e-9)
    recon = bd.P @ np.array([[bd.alpha, -bd.beta], [bd.beta, bd.alpha]]) @ np.linalg.inv(bd.P)
    assert np.linalg.norm(recon - B) <= 1e-9 * (1 + np.linalg.norm(B))


def test_block_diagonalize_round_trip_random():
    rng = np.random.default_rng(SEED)
    count = 0
    while count < 20:
        B = rng.standard_normal((2, 2))
        if np.linalg.eigvals(B).imag.max() < 1e-6:
            continue
        count += 1
        bd = block_diagonalize(B)
        assert bd.beta > 0
        assert bd.amplitude == pytest.approx(np.hypot(bd.alpha, bd.beta), rel=1e-12)
        assert np.linalg.norm(bd.P[:, 0]) == pytest.approx(1.0, rel=1e-12)
        recon = bd.P @ np.array([[bd.alpha, -bd.beta], [bd.beta, bd.alpha]]) @ np.linalg.inv(bd.P)
        assert np.linalg.norm(recon - B) <= 1e-9 * (1 + np.linalg.norm(B))


def test_block_diagonalize_rejects_real_eigenvalues():
    with pytest.raises(InputError):
        block_diagonalize(np.array([[2.0, 1.0], [0.0, 0.5]]))
    with pytest.raises(InputError):
        block_diagonalize(np.eye(3))
