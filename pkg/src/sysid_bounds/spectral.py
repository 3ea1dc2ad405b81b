"""Eigenvalue and real Schur machinery.

The Schur form produced here is sorted so that the diagonal block carrying the
smallest-amplitude eigenvalue (or conjugate pair) sits in the trailing
position. The dense factorizations delegate to LAPACK; the reordering step
(adjacent 1x1/2x2 block swaps by orthogonal similarity) is implemented here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import scipy.linalg

from .core import InputError, NumericalError, as_square

# Acceptance tolerances for the factorization invariants.
_RESIDUAL_RTOL = 1e-8
_ORTHO_TOL = 1e-9
_AMPLITUDE_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class SchurBlock:
    """One diagonal block: offset into U, size 1 or 2, and its eigenvalue(s)."""

    offset: int
    size: int
    eigenvalues: Tuple[complex, ...]

    @property
    def amplitude(self) -> float:
        return abs(self.eigenvalues[0])


@dataclass(frozen=True)
class SchurForm:
    """A = Q U Q^T with orthogonal Q, quasi-upper-triangular U.

    blocks lists the diagonal blocks left to right; the trailing block carries
    the smallest-amplitude eigenvalue(s).
    """

    Q: np.ndarray
    U: np.ndarray
    blocks: Tuple[SchurBlock, ...]

    @property
    def trailing(self) -> SchurBlock:
        return self.blocks[-1]


@dataclass(frozen=True)
class BlockDiagonalization:
    """2x2 block factored as P [[alpha, -beta], [beta, alpha]] P^{-1}, beta > 0.

    Convention (part of the contract): P = [Re w, Im w] for the eigenvector w
    of the eigenvalue alpha - i*beta, with the complex phase rotated so the
    largest-magnitude component of w is real positive, and P scaled so its
    first column has unit norm.
    """

    P: np.ndarray
    alpha: float
    beta: float
    theta: float
    amplitude: float


def eigenvalues_sorted(A: np.ndarray) -> np.ndarray:
    """Complex spectrum sorted by nonincreasing amplitude.

    Ties break by (real part desc, imaginary part desc) for determinism.
    """
    A = as_square(A)
    vals = np.linalg.eigvals(A)
    order = sorted(range(len(vals)),
                   key=lambda i: (-abs(vals[i]), -vals[i].real, -vals[i].imag))
    return vals[order]


def lambda_min_sym(S: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Asymmetry beyond 1e-9 * ||S||_F is an input error; below that the matrix
    is symmetrized before the solve.
    """
    S = as_square(S, "S")
    norm = float(np.linalg.norm(S))
    skew = float(np.linalg.norm(S - S.T))
    if skew > 1e-9 * norm:
        raise InputError(
            f"matrix is not symmetric: ||S - S^T||_F = {skew:.3e} exceeds 1e-9*||S||_F"
        )
    return float(np.linalg.eigvalsh(0.5 * (S + S.T))[0])


def _detect_blocks(U: np.ndarray) -> List[Tuple[int, int]]:
    """(offset, size) of the diagonal blocks of a quasi-triangular matrix."""
    d = U.shape[0]
    out = []
    i = 0
    while i < d:
        if i + 1 < d and U[i + 1, i] != 0.0:
            out.append((i, 2))
            i += 2
        else:
            out.append((i, 1))
            i += 1
    return out


def _block_eigenvalues(U: np.ndarray, offset: int, size: int) -> Tuple[complex, ...]:
    if size == 1:
        return (complex(U[offset, offset]),)
    vals = np.linalg.eigvals(U[offset:offset + 2, offset:offset + 2])
    order = sorted(range(2), key=lambda i: -vals[i].imag)  # +i*beta first
    return (complex(vals[order[0]]), complex(vals[order[1]]))


def _swap_adjacent(U: np.ndarray, Q: np.ndarray, offset: int, p: int, q: int) -> None:
    """Swap the adjacent diagonal blocks (p x p at offset, q x q after it).

    Performed by an orthogonal similarity built from the invariant subspace of
    the trailing block: solve U11 X - X U22 = -U12 and take the QR frame of
    [X; I]. The spectra of the two blocks differ in amplitude by construction,
    so the Sylvester system is nonsingular.
    """
    i, j, k = offset, offset + p, offset + p + q
    U11 = U[i:j, i:j]
    U12 = U[i:j, j:k]
    U22 = U[j:k, j:k]
    X = scipy.linalg.solve_sylvester(U11, -U22, -U12)
    G, _ = np.linalg.qr(np.vstack([X, np.eye(q)]), mode="complete")
    s = slice(i, k)
    U[s, s] = G.T @ U[s, s] @ G
    U[s, k:] = G.T @ U[s, k:]
    U[:i, s] = U[:i, s] @ G
    Q[:, s] = Q[:, s] @ G
    # The (new trailing, new leading) coupling must vanish up to roundoff;
    # zero it explicitly so block detection stays exact.
    E = U[i + q:k, i:i + q]
    coupling = float(np.linalg.norm(E))
    if coupling > _RESIDUAL_RTOL * (1.0 + float(np.linalg.norm(U))):
        raise NumericalError(
            f"block swap at offset {offset} left coupling {coupling:.3e}",
            residual=coupling,
        )
    U[i + q:k, i:i + q] = 0.0


def schur_sorted(A: np.ndarray) -> SchurForm:
    """Real Schur form with the smallest-amplitude block moved to the end.

    Any real Schur form is computed first (LAPACK), then the minimal-amplitude
    diagonal block is pushed to the trailing position via orthogonal swaps of
    adjacent blocks. Amplitude ties keep the latest candidate, so matrices
    whose eigenvalues all share one amplitude are returned unchanged.
    """
    A = as_square(A)
    d = A.shape[0]
    try:
        U, Q = scipy.linalg.schur(A, output="real")
    except scipy.linalg.LinAlgError as exc:  # QR iteration failure
        raise NumericalError(f"Schur decomposition did not converge: {exc}") from exc
    U = U.copy()
    Q = Q.copy()

    layout = _detect_blocks(U)
    amps = [abs(_block_eigenvalues(U, off, sz)[0]) for off, sz in layout]
    amin = min(amps)
    tie_tol = _AMPLITUDE_TIE_RTOL * (1.0 + amin)
    target = max(i for i, a in enumerate(amps) if a <= amin + tie_tol)

    for pos in range(target, len(layout) - 1):
        off, p = layout[pos]
        _, q = layout[pos + 1]
        _swap_adjacent(U, Q, off, p, q)
        layout[pos] = (off, q)
        layout[pos + 1] = (off + q, p)

    residual = float(np.linalg.norm(Q @ U @ Q.T - A))
    if residual > _RESIDUAL_RTOL * (1.0 + float(np.linalg.norm(A))):
        raise NumericalError(
            f"sorted Schur residual {residual:.3e} exceeds tolerance", residual=residual
        )
    ortho = float(np.linalg.norm(Q.T @ Q - np.eye(d)))
    if ortho > _ORTHO_TOL * d:
        raise NumericalError(f"Schur Q lost orthogonality: {ortho:.3e}", residual=ortho)

    blocks = tuple(
        SchurBlock(off, sz, _block_eigenvalues(U, off, sz))
        for off, sz in _detect_blocks(U)
    )
    return SchurForm(Q=Q, U=U, blocks=blocks)


def block_diagonalize(Bk: np.ndarray) -> BlockDiagonalization:
    """Factor a 2x2 block with complex eigenvalues as P (scaled rotation) P^{-1}."""
    B = as_square(Bk, "Bk")
    if B.shape[0] != 2:
        raise InputError(f"block must be 2x2, got shape {B.shape}")
    vals, vecs = np.linalg.eig(B)
    if abs(vals[0].imag) <= 1e-12 * (1.0 + abs(vals[0])):
        raise InputError("block has real eigenvalues; the 1x1 path applies")
    idx = int(np.argmin(vals.imag))  # eigenvalue alpha - i*beta with beta > 0
    lam = vals[idx]
    alpha = float(lam.real)
    beta = float(-lam.imag)
    w = vecs[:, idx]
    # Canonical complex phase: largest-magnitude component made real positive.
    jmax = int(np.argmax(np.abs(w)))
    w = w * (np.conj(w[jmax]) / abs(w[jmax]))
    P = np.column_stack([w.real, w.imag])
    P = P / np.linalg.norm(P[:, 0])

    rotation = np.array([[alpha, -beta], [beta, alpha]])
    recon = P @ rotation @ np.linalg.inv(P)
    residual = float(np.linalg.norm(recon - B))
    if residual > 1e-9 * (1.0 + float(np.linalg.norm(B))):
        raise NumericalError(
            f"block diagonalization residual {residual:.3e}", residual=residual
        )
    return BlockDiagonalization(P=P, alpha=alpha, beta=beta,
                                theta=float(math.atan2(beta, alpha)),
                                amplitude=float(math.hypot(alpha, beta)))
