"""Dense linear-algebra helpers shared across the package."""

from __future__ import annotations

import numpy as np

# Relative singular-value cutoff for rank decisions.
RANK_CUTOFF = 1e-10

# Residual grades: freshly constructed certificates, cross-identities between
# independently built maps, closed-form comparisons, ergodic averages.
TOL_BUILD = 1e-9
TOL_CROSS = 1e-8
TOL_ORACLE = 1e-10
TOL_CESARO = 1e-6


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def snorm(a) -> float:
    """Spectral norm of a matrix, 2-norm of a vector, 0.0 for empty input."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if a.ndim <= 1:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(a, 2))


def orth_basis(a, cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Orthonormal basis (columns) for the column span of `a`.

    The rank threshold is ``cutoff * max(1, s[0])``: relative for large data
    but with an absolute floor, so a matrix that is numerically zero (all
    entries rounding noise from O(1) inputs) has rank zero rather than the
    rank of its noise.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    r = int(np.sum(s > cutoff * max(1.0, s[0])))
    return u[:, :r]


def null_basis(a, cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Orthonormal basis (columns) of the right null space of `a`.

    Same absolute-floored threshold as `orth_basis`.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[None, :]
    n = a.shape[1]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    if s.size == 0:
        return np.eye(n, dtype=complex)
    r = int(np.sum(s > cutoff * max(1.0, s[0])))
    return vh[r:].conj().T


def matrix_rank(a, cutoff: float = RANK_CUTOFF) -> int:
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 0
    if a.ndim == 1:
        a = a[:, None]
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > cutoff * max(1.0, s[0])))


def subspace_distance(q1, q2) -> float:
    """``|P1 - P2|`` for orthogonal projections onto two orthonormal column spans."""
    p1 = q1 @ q1.conj().T
    p2 = q2 @ q2.conj().T
    return snorm(p1 - p2)


def subspace_contains(big_q, small, cutoff: float = RANK_CUTOFF) -> float:
    """Residual of projecting span(small) into span(big_q); big_q orthonormal."""
    qs = orth_basis(small, cutoff)
    if qs.shape[1] == 0:
        return 0.0
    return snorm(qs - big_q @ (big_q.conj().T @ qs))


def polar_unitary(a) -> np.ndarray:
    """Unitary factor of the polar decomposition (square nonsingular input)."""
    u, _, vh = np.linalg.svd(np.asarray(a, dtype=complex))
    return u @ vh


def herm(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2.0


def min_eig_herm(a) -> float:
    """Smallest eigenvalue of the hermitian part of `a`."""
    return float(np.linalg.eigvalsh(herm(a))[0])


def eig_one_projection(m, cutoff: float = 1e-8) -> np.ndarray:
    """Spectral projection onto the eigenvalue-1 eigenspace of `m`.

    Assumes the eigenvalue 1 is semisimple (true for power-bounded operators).
    Built from matched right/left null spaces of m - 1 so that the result is
    the orthogonal-complement-respecting idempotent, not a hermitian proxy.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    right = null_basis(m - np.eye(n), cutoff=cutoff)
    left = null_basis(m.conj().T - np.eye(n), cutoff=cutoff)
    if right.shape[1] != left.shape[1]:
        raise ValueError("eigenvalue 1 is not semisimple at this cutoff")
    if right.shape[1] == 0:
        return np.zeros((n, n), dtype=complex)
    gram = left.conj().T @ right
    return right @ np.linalg.solve(gram, left.conj().T)


def cluster_by_gap(values, gap: float):
    """Index groups of real `values` separated by more than `gap` after sorting."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values)
    sv = values[order]
    bounds = [0]
    for i in range(1, sv.size):
        if sv[i] - sv[i - 1] > gap:
            bounds.append(i)
    bounds.append(sv.size)
    return [order[bounds[j]:bounds[j + 1]] for j in range(len(bounds) - 1)]


def rand_complex(r: np.random.Generator, *shape) -> np.ndarray:
    return r.standard_normal(shape) + 1j * r.standard_normal(shape)
