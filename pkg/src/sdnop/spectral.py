"""Symmetric-matrix spectral utilities.

Everything downstream (projections, prox operators, curvature terms) is
driven by eigenvalue decompositions of symmetric matrices, index partitions
of the spectrum by sign, groupings of the spectrum into distinct blocks,
and the isometric half-vectorization.  This module owns those primitives.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidInput

__all__ = [
    "as_symmetric",
    "default_tol",
    "EigenDecomposition",
    "eig_sym",
    "SignPartition",
    "partition_by_sign",
    "DistinctBlocks",
    "group_distinct",
    "svec",
    "smat",
    "vec_block",
    "svec_block",
    "pinv_sym",
]

_SYM_TOL = 1e-8


def as_symmetric(M, name="matrix"):
    """Validate and symmetrize a square matrix.

    Raises
    ------
    InvalidInput
        If ``M`` is not square, contains non-finite entries, or its
        asymmetry exceeds a small relative tolerance.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {M.shape}")
    if M.size and not np.all(np.isfinite(M)):
        raise InvalidInput(f"{name} contains non-finite entries")
    if M.size:
        scale = 1.0 + np.abs(M).max()
        gap = np.abs(M - M.T).max()
        if gap > _SYM_TOL * scale:
            raise InvalidInput(f"{name} is not symmetric (asymmetry {gap:.3e})")
    return 0.5 * (M + M.T)


def default_tol(values):
    """Sign tolerance scaled by the largest eigenvalue magnitude."""
    values = np.asarray(values)
    top = np.abs(values).max() if values.size else 0.0
    return 1e-8 * (1.0 + top)


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral factorization M = basis @ diag(values) @ basis.T.

    ``values`` are sorted descending; ``basis`` columns are orthonormal with
    a deterministic sign (largest-magnitude entry of each column positive).
    """

    values: np.ndarray
    basis: np.ndarray

    @property
    def dim(self):
        return self.values.size

    def reconstruct(self):
        return (self.basis * self.values) @ self.basis.T


def eig_sym(M):
    """Eigendecomposition of a symmetric matrix, descending, sign-fixed."""
    M = as_symmetric(M)
    if M.size == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0)))
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(vals, kind="stable")[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    anchor = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[anchor, np.arange(vecs.shape[1])])
    signs[signs == 0.0] = 1.0
    return EigenDecomposition(vals, vecs * signs)


@dataclass(frozen=True)
class SignPartition:
    """Indices of the spectrum split by sign against a tolerance."""

    pos: Tuple[int, ...]
    zero: Tuple[int, ...]
    neg: Tuple[int, ...]
    tol: float


def partition_by_sign(eig, tol=None):
    """Partition the eigenvalue indices of ``eig`` into (pos, zero, neg).

    Parameters
    ----------
    eig : EigenDecomposition
    tol : float, optional
        Absolute cutoff; defaults to ``default_tol(eig.values)``.
    """
    if tol is None:
        tol = default_tol(eig.values)
    if tol < 0:
        raise InvalidInput("sign tolerance must be nonnegative")
    vals = eig.values
    pos = tuple(int(i) for i in np.flatnonzero(vals > tol))
    neg = tuple(int(i) for i in np.flatnonzero(vals < -tol))
    zero = tuple(int(i) for i in np.flatnonzero(np.abs(vals) <= tol))
    return SignPartition(pos, zero, neg, float(tol))


@dataclass(frozen=True)
class DistinctBlocks:
    """Grouping of a descending spectrum into blocks of equal eigenvalues.

    ``values`` holds one representative per block (the block mean),
    ``blocks`` the index tuples, and ``zero_block`` the position of the
    block sitting at zero, if any.
    """

    values: np.ndarray
    blocks: Tuple[Tuple[int, ...], ...]
    zero_block: Optional[int]


def group_distinct(eig, group_tol=1e-8, zero_tol=None):
    """Group consecutive eigenvalues whose gap is below ``group_tol``.

    Tolerances are scaled by (1 + largest magnitude).  ``zero_tol`` controls
    which block, if any, is flagged as the zero block; it defaults to the
    scaled ``group_tol``.
    """
    vals = eig.values
    if vals.size == 0:
        return DistinctBlocks(np.zeros(0), (), None)
    scale = 1.0 + np.abs(vals).max()
    gap_tol = group_tol * scale
    z_tol = gap_tol if zero_tol is None else zero_tol
    blocks = []
    start = 0
    for i in range(1, vals.size):
        if vals[i - 1] - vals[i] > gap_tol:
            blocks.append(tuple(range(start, i)))
            start = i
    blocks.append(tuple(range(start, vals.size)))
    reps = np.array([vals[list(b)].mean() for b in blocks])
    zero_block = None
    for k, rep in enumerate(reps):
        if abs(rep) <= z_tol:
            zero_block = k
            break
    return DistinctBlocks(reps, tuple(blocks), zero_block)


def svec(M):
    """Isometric half-vectorization.

    Stacks the columns of the upper triangle, scaling off-diagonal entries
    by sqrt(2) so that inner products of vectorizations match Frobenius
    inner products of the matrices.
    """
    M = np.asarray(M, dtype=np.float64)
    q = M.shape[0]
    out = np.empty(q * (q + 1) // 2)
    k = 0
    for j in range(q):
        for i in range(j):
            out[k] = np.sqrt(2.0) * M[i, j]
            k += 1
        out[k] = M[j, j]
        k += 1
    return out


def smat(v):
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=np.float64)
    q = int(round((np.sqrt(8.0 * v.size + 1.0) - 1.0) / 2.0))
    if q * (q + 1) // 2 != v.size:
        raise InvalidInput(f"length {v.size} is not a triangular number")
    M = np.zeros((q, q))
    k = 0
    for j in range(q):
        for i in range(j):
            M[i, j] = M[j, i] = v[k] / np.sqrt(2.0)
            k += 1
        M[j, j] = v[k]
        k += 1
    return M


def vec_block(M, rows, cols):
    """Column-stacked vectorization of the submatrix M[rows, cols]."""
    M = np.asarray(M)
    sub = M[np.ix_(list(rows), list(cols))]
    return sub.flatten(order="F")


def svec_block(M, rows):
    """Isometric half-vectorization of the principal submatrix on ``rows``."""
    M = np.asarray(M)
    return svec(M[np.ix_(list(rows), list(rows))])


def pinv_sym(M, cutoff=None):
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues with magnitude at most ``cutoff`` are treated as zero.
    ``cutoff`` defaults to 1e-12 scaled by (1 + largest magnitude).
    """
    eig = eig_sym(M)
    if cutoff is None:
        top = np.abs(eig.values).max() if eig.values.size else 0.0
        cutoff = 1e-12 * (1.0 + top)
    inv = np.where(np.abs(eig.values) > cutoff, 1.0 / np.where(eig.values == 0.0, 1.0, eig.values), 0.0)
    return (eig.basis * inv) @ eig.basis.T
