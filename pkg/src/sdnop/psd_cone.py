"""Projection onto the positive semidefinite cone and its derivatives.

Provides the metric projection, its directional derivative, constructible
elements of its B-subdifferential, and membership predicates for the
tangent cone, the lineality space of the tangent cone, the critical cone,
and the critical cone's affine hull.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import psd_pair_table
from .errors import InvalidInput
from .spectral import (
    EigenDecomposition,
    SignPartition,
    as_symmetric,
    default_tol,
    eig_sym,
    partition_by_sign,
)

__all__ = [
    "ThetaMatrix",
    "ProjBsubElement",
    "project_psd",
    "proj_dir_deriv",
    "proj_bsub_element",
    "tangent_contains",
    "lineality_contains",
    "critical_contains",
    "aff_critical_contains",
]


@dataclass(frozen=True)
class ThetaMatrix:
    """Hadamard multiplier table of a projection B-subdifferential element.

    Off the zero-zero block the entries are the positive-part difference
    quotients (max(l_i,0)+max(l_j,0))/(|l_i|+|l_j|); the zero-zero block
    holds whatever element of [0,1] the constructor committed to.
    """

    entries: np.ndarray
    partition: SignPartition


@dataclass(frozen=True)
class ProjBsubElement:
    """Element of the B-subdifferential of the PSD projection.

    Acts as H -> P (theta.entries o (P^T H P)) P^T, a self-adjoint
    positive operator that is also dominated by the identity.
    """

    basis: np.ndarray
    theta: ThetaMatrix

    def apply(self, H):
        H = as_symmetric(H, "H")
        Hh = self.basis.T @ H @ self.basis
        return self.basis @ (self.theta.entries * Hh) @ self.basis.T


def project_psd(M):
    """Metric projection of a symmetric matrix onto the PSD cone.

    Returns
    -------
    (ndarray, EigenDecomposition)
        The projection and the decomposition of ``M`` used to form it.
    """
    eig = eig_sym(M)
    plus = (eig.basis * np.maximum(eig.values, 0.0)) @ eig.basis.T
    return 0.5 * (plus + plus.T), eig


def _hat(eig, H):
    return eig.basis.T @ H @ eig.basis


def proj_dir_deriv(M, H, tol=None):
    """Directional derivative of the PSD projection at M along H.

    Blockwise in the eigenbasis of M: identity on the positive rows,
    difference-quotient damping on the positive-negative cross blocks, a
    nested PSD projection on the zero block, and zero elsewhere.
    """
    eig = eig_sym(M)
    H = as_symmetric(H, "H")
    if H.shape != eig.basis.shape:
        raise InvalidInput("H dimension does not match M")
    part = partition_by_sign(eig, tol)
    zero = list(part.zero)
    Hh = _hat(eig, H)
    # the pair table is already 1 on the positive rows and 0 on everything
    # touching the negative rows except the damped positive-negative block
    table = psd_pair_table(eig.values, _zero_mask(eig, part))
    out = table * Hh
    if zero:
        zz = np.ix_(zero, zero)
        out[zz], _ = project_psd(Hh[zz])
    R = eig.basis @ out @ eig.basis.T
    return 0.5 * (R + R.T)


def _zero_mask(eig, part):
    mask = np.zeros(eig.dim, dtype=bool)
    mask[list(part.zero)] = True
    return mask


def proj_bsub_element(M, beta_choice="zero", tol=None):
    """Construct an element of the B-subdifferential of the PSD projection.

    Parameters
    ----------
    M : array_like, symmetric
    beta_choice : {"zero", "identity"} or ndarray
        The Hadamard block on the zero-zero rows, a free choice inside
        [0, 1]: "zero" damps them out, "identity" passes them through, or
        give an explicit symmetric table with entries in [0, 1].
    tol : float, optional
        Sign tolerance for the partition.
    """
    eig = eig_sym(M)
    part = partition_by_sign(eig, tol)
    zero = list(part.zero)
    table = psd_pair_table(eig.values, _zero_mask(eig, part))
    k = len(zero)
    if isinstance(beta_choice, str):
        if beta_choice == "zero":
            omega = np.zeros((k, k))
        elif beta_choice == "identity":
            omega = np.ones((k, k))
        else:
            raise InvalidInput(f"unknown beta_choice {beta_choice!r}")
    else:
        omega = np.asarray(beta_choice, dtype=np.float64)
        if omega.shape != (k, k):
            raise InvalidInput(f"beta block must be {k}x{k}, got {omega.shape}")
        if np.abs(omega - omega.T).max(initial=0.0) > 1e-12:
            raise InvalidInput("beta block table must be symmetric")
        if omega.size and (omega.min() < 0.0 or omega.max() > 1.0):
            raise InvalidInput("beta block entries must lie in [0, 1]")
    if k:
        table[np.ix_(zero, zero)] = omega
    return ProjBsubElement(eig.basis, ThetaMatrix(table, part))


def _null_block(M_plus, B, tol):
    eig = eig_sym(M_plus)
    if np.any(eig.values < -default_tol(eig.values)):
        raise InvalidInput("matrix is not positive semidefinite")
    B = as_symmetric(B, "B")
    if tol is None:
        tol = 1e-8 * (1.0 + np.abs(B).max(initial=0.0))
    part = partition_by_sign(eig)
    null = list(part.zero) + list(part.neg)
    sub = eig.basis[:, null].T @ B @ eig.basis[:, null]
    return sub, tol


def tangent_contains(M_plus, B, tol=None):
    """Whether B lies in the tangent cone of the PSD cone at M_plus."""
    sub, tol = _null_block(M_plus, B, tol)
    if sub.size == 0:
        return True
    return np.linalg.eigvalsh(sub).min() >= -tol


def lineality_contains(M_plus, B, tol=None):
    """Whether B lies in the largest linear space inside that tangent cone."""
    sub, tol = _null_block(M_plus, B, tol)
    if sub.size == 0:
        return True
    return np.abs(sub).max() <= tol


def _critical_blocks(M, B, tol):
    eig = eig_sym(M)
    B = as_symmetric(B, "B")
    if tol is None:
        tol = 1e-8 * (1.0 + np.abs(B).max(initial=0.0))
    part = partition_by_sign(eig)
    zero, neg = list(part.zero), list(part.neg)
    Bz = eig.basis[:, zero].T @ B @ eig.basis[:, zero]
    Bzn = eig.basis[:, zero].T @ B @ eig.basis[:, neg]
    Bn = eig.basis[:, neg].T @ B @ eig.basis[:, neg]
    return Bz, Bzn, Bn, tol


def critical_contains(M, B, tol=None):
    """Whether B lies in the critical cone of the PSD cone induced by M.

    The sign split of M supplies the active structure: the zero block of B
    must be PSD and every block touching the negative rows must vanish.
    """
    Bz, Bzn, Bn, tol = _critical_blocks(M, B, tol)
    if Bzn.size and np.abs(Bzn).max() > tol:
        return False
    if Bn.size and np.abs(Bn).max() > tol:
        return False
    if Bz.size and np.linalg.eigvalsh(Bz).min() < -tol:
        return False
    return True


def aff_critical_contains(M, B, tol=None):
    """Whether B lies in the affine hull of that critical cone."""
    _, Bzn, Bn, tol = _critical_blocks(M, B, tol)
    if Bzn.size and np.abs(Bzn).max() > tol:
        return False
    if Bn.size and np.abs(Bn).max() > tol:
        return False
    return True
