"""The nuclear norm of a symmetric matrix and its variational machinery.

Value, subdifferential, first and second directional derivatives, critical
cone, proximal mapping, Moreau envelope, divided-difference tables, and
constructible generalized-Jacobian elements of the prox and of the envelope
gradient.  The conjugate of the second directional derivative (the
curvature correction used by second-order optimality conditions) is also
evaluated here in three equivalent closed forms.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._kernels import soft_pair_table
from .errors import DomainError, InvalidInput, NotASubgradient
from .psd_cone import project_psd
from .spectral import (
    DistinctBlocks,
    EigenDecomposition,
    SignPartition,
    as_symmetric,
    default_tol,
    eig_sym,
    group_distinct,
    partition_by_sign,
)

__all__ = [
    "nuclear_norm",
    "theta_dir_deriv",
    "SubgradientPartition",
    "subdiff_contains",
    "subdiff_partition",
    "prox_nuclear",
    "moreau_env",
    "grad_moreau_env",
    "eig_dir_derivs",
    "eig_second_dir_derivs",
    "theta_second_dir_deriv",
    "ProxDividedDiff",
    "prox_divided_diff",
    "prox_dir_deriv",
    "ProxJacobianElement",
    "prox_bsub_element",
    "EnvGradBsubElement",
    "grad_env_bsub_element",
    "critical_cone_theta_contains",
    "critical_cone_theta_project",
    "psi_conjugate",
]

_DEFAULT_SPLIT_TOL = 1e-6


# ----------------------------------------------------------------------------
# value and first directional derivative
# ----------------------------------------------------------------------------

def nuclear_norm(X):
    """Sum of absolute eigenvalues of a symmetric matrix."""
    X = as_symmetric(X, "X")
    if X.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvalsh(X)).sum())


def theta_dir_deriv(X, H, tol=None):
    """Directional derivative of the nuclear norm at X along H.

    Trace of H on the positive eigenspace, minus the trace on the negative
    eigenspace, plus the nuclear norm of the compression of H to the null
    space.  Linear in H exactly when X is nonsingular.
    """
    eig = eig_sym(X)
    H = as_symmetric(H, "H")
    part = partition_by_sign(eig, tol)
    Q = eig.basis
    val = 0.0
    if part.pos:
        Qa = Q[:, list(part.pos)]
        val += np.trace(Qa.T @ H @ Qa)
    if part.neg:
        Qc = Q[:, list(part.neg)]
        val -= np.trace(Qc.T @ H @ Qc)
    if part.zero:
        Qb = Q[:, list(part.zero)]
        val += nuclear_norm(Qb.T @ H @ Qb)
    return float(val)


# ----------------------------------------------------------------------------
# subdifferential
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SubgradientPartition:
    """Structure of a subgradient Y of the nuclear norm at X.

    The eigenbasis of X is refined so that the null-space block of Y is
    diagonal with weights ``w`` (descending).  Weights are 1 on the
    positive rows, -1 on the negative rows, and in [-1, 1] on the null
    rows, which split into ``b_up`` (saturated at +1), ``b_mid`` (strict
    interior) and ``b_low`` (saturated at -1).
    """

    partition: SignPartition
    w: np.ndarray
    b_up: Tuple[int, ...]
    b_mid: Tuple[int, ...]
    b_low: Tuple[int, ...]
    split_tol: float
    basis: np.ndarray
    values: np.ndarray  # eigenvalues of X, aligned with basis columns


def _subdiff_defect(X, Y, tol):
    """Largest violation of the subgradient characterization, plus context."""
    eig = eig_sym(X)
    Y = as_symmetric(Y, "Y")
    if Y.shape != eig.basis.shape:
        raise InvalidInput("Y dimension does not match X")
    part = partition_by_sign(eig, tol)
    Q = eig.basis
    Yh = Q.T @ Y @ Q
    pos, zero, neg = list(part.pos), list(part.zero), list(part.neg)
    defect = 0.0
    if pos:
        defect = max(defect, np.abs(Yh[np.ix_(pos, pos)] - np.eye(len(pos))).max())
    if neg:
        defect = max(defect, np.abs(Yh[np.ix_(neg, neg)] + np.eye(len(neg))).max())
    for rows, cols in ((pos, zero), (pos, neg), (zero, neg)):
        if rows and cols:
            defect = max(defect, np.abs(Yh[np.ix_(rows, cols)]).max())
    if zero:
        bb = Yh[np.ix_(zero, zero)]
        defect = max(defect, max(0.0, np.abs(np.linalg.eigvalsh(bb)).max() - 1.0))
    return defect, eig, part, Yh


def subdiff_contains(X, Y, tol=None):
    """Membership test for the nuclear-norm subdifferential at X."""
    if tol is None:
        tol = 1e-8
    defect, _, _, _ = _subdiff_defect(X, Y, None)
    return defect <= tol


def subdiff_partition(X, Y, tol=None, split_tol=_DEFAULT_SPLIT_TOL):
    """Extract the weight structure of a subgradient Y at X.

    Raises
    ------
    NotASubgradient
        If Y fails the membership characterization beyond ``tol``.
    """
    if tol is None:
        tol = 1e-8
    defect, eig, part, Yh = _subdiff_defect(X, Y, None)
    if defect > tol:
        raise NotASubgradient(f"subgradient defect {defect:.3e} exceeds {tol:.1e}")
    q = eig.dim
    basis = eig.basis.copy()
    w = np.zeros(q)
    w[list(part.pos)] = 1.0
    w[list(part.neg)] = -1.0
    zero = list(part.zero)
    b_up, b_mid, b_low = [], [], []
    if zero:
        bb = 0.5 * (Yh[np.ix_(zero, zero)] + Yh[np.ix_(zero, zero)].T)
        sub = eig_sym(bb)
        wb = np.clip(sub.values, -1.0, 1.0)
        w[zero] = wb
        basis[:, zero] = basis[:, zero] @ sub.basis
        for k, i in enumerate(zero):
            if wb[k] >= 1.0 - split_tol:
                b_up.append(i)
            elif wb[k] <= -1.0 + split_tol:
                b_low.append(i)
            else:
                b_mid.append(i)
    return SubgradientPartition(
        part,
        w,
        tuple(b_up),
        tuple(b_mid),
        tuple(b_low),
        float(split_tol),
        basis,
        eig.values.copy(),
    )


# ----------------------------------------------------------------------------
# prox and Moreau envelope
# ----------------------------------------------------------------------------

def _soft_threshold(vals, tau):
    return np.sign(vals) * np.maximum(np.abs(vals) - tau, 0.0)


def _check_tau(tau):
    if not tau > 0.0:
        raise InvalidInput(f"tau must be positive, got {tau}")


def _check_convention(convention):
    if convention not in ("half", "literal"):
        raise InvalidInput(f"unknown moreau convention {convention!r}")


def prox_nuclear(Z, tau):
    """Proximal mapping of the nuclear norm: eigenvalue soft-thresholding.

    Returns the minimizer of ||X'||_* + ||X' - Z||^2/(2 tau) together with
    the eigendecomposition of Z used to form it.
    """
    _check_tau(tau)
    eig = eig_sym(Z)
    X = (eig.basis * _soft_threshold(eig.values, tau)) @ eig.basis.T
    return 0.5 * (X + X.T), eig


def moreau_env(Z, tau, convention="half"):
    """Moreau envelope of the nuclear norm at Z.

    The default convention uses the quadratic penalty ||X'-Z||^2/(2 tau);
    ``convention="literal"`` uses ||X'-Z||^2/tau, which is the same
    envelope at half the smoothing level.
    """
    _check_tau(tau)
    _check_convention(convention)
    if convention == "literal":
        return moreau_env(Z, 0.5 * tau)
    eig = eig_sym(Z)
    p = _soft_threshold(eig.values, tau)
    return float(np.abs(p).sum() + np.sum((p - eig.values) ** 2) / (2.0 * tau))


def grad_moreau_env(Z, tau, convention="half"):
    """Gradient of the Moreau envelope: the scaled prox residual."""
    _check_tau(tau)
    _check_convention(convention)
    if convention == "literal":
        return grad_moreau_env(Z, 0.5 * tau)
    X, _ = prox_nuclear(Z, tau)
    Z = as_symmetric(Z, "Z")
    return (Z - X) / tau


# ----------------------------------------------------------------------------
# eigenvalue directional derivatives
# ----------------------------------------------------------------------------

def _pinv_weights(blocks, k):
    """Reciprocal gaps to block k's eigenvalue, zero on block k itself."""
    d = np.zeros(int(sum(len(b) for b in blocks.blocks)))
    for l, blk in enumerate(blocks.blocks):
        if l != k:
            d[list(blk)] = 1.0 / (blocks.values[l] - blocks.values[k])
    return d


def _second_order_block(Hh, Wh, blocks, k):
    """Compression V_k = (W - 2 H (X - value_k I)^+ H) to block k, in the
    eigenbasis of X."""
    idx = list(blocks.blocks[k])
    d = _pinv_weights(blocks, k)
    cross = (Hh[idx, :] * d) @ Hh[:, idx]
    V = Wh[np.ix_(idx, idx)] - 2.0 * cross
    return 0.5 * (V + V.T)


def eig_dir_derivs(X, H, group_tol=1e-8):
    """First directional derivatives of all eigenvalues of X along H.

    Within each block of equal eigenvalues the derivatives are the
    eigenvalues of the compressed direction, in descending order.
    """
    eig = eig_sym(X)
    H = as_symmetric(H, "H")
    blocks = group_distinct(eig, group_tol)
    Hh = eig.basis.T @ H @ eig.basis
    out = np.empty(eig.dim)
    for blk in blocks.blocks:
        idx = list(blk)
        sub = 0.5 * (Hh[np.ix_(idx, idx)] + Hh[np.ix_(idx, idx)].T)
        out[idx] = np.sort(np.linalg.eigvalsh(sub))[::-1]
    return out


def eig_second_dir_derivs(X, H, W, group_tol=1e-8):
    """Second directional derivatives of the eigenvalues of X along (H, W).

    Uses the nested decomposition: within each block of X, directions are
    grouped by the distinct eigenvalues of the compressed H-block, and on
    each nested group the second derivative is an eigenvalue of the rotated
    curvature compression.
    """
    eig = eig_sym(X)
    H = as_symmetric(H, "H")
    W = as_symmetric(W, "W")
    blocks = group_distinct(eig, group_tol)
    Hh = eig.basis.T @ H @ eig.basis
    Wh = eig.basis.T @ W @ eig.basis
    out = np.empty(eig.dim)
    for k, blk in enumerate(blocks.blocks):
        idx = list(blk)
        sub = 0.5 * (Hh[np.ix_(idx, idx)] + Hh[np.ix_(idx, idx)].T)
        inner = eig_sym(sub)
        nested = group_distinct(inner, group_tol)
        V = _second_order_block(Hh, Wh, blocks, k)
        Vr = inner.basis.T @ V @ inner.basis
        for nblk in nested.blocks:
            nidx = list(nblk)
            core = 0.5 * (Vr[np.ix_(nidx, nidx)] + Vr[np.ix_(nidx, nidx)].T)
            vals = np.sort(np.linalg.eigvalsh(core))[::-1]
            out[[idx[i] for i in nidx]] = vals
    return out


def theta_second_dir_deriv(X, H, W, group_tol=1e-8):
    """Second directional derivative of the nuclear norm at X along (H, W).

    Signed traces of the curvature compressions over the nonzero blocks,
    plus a zero-block part split by the sign of the compressed direction:
    signed traces where it is definite and a nuclear norm where it
    vanishes.
    """
    eig = eig_sym(X)
    H = as_symmetric(H, "H")
    W = as_symmetric(W, "W")
    blocks = group_distinct(eig, group_tol)
    Hh = eig.basis.T @ H @ eig.basis
    Wh = eig.basis.T @ W @ eig.basis
    val = 0.0
    for k in range(len(blocks.blocks)):
        V = _second_order_block(Hh, Wh, blocks, k)
        if k == blocks.zero_block:
            idx = list(blocks.blocks[k])
            sub = 0.5 * (Hh[np.ix_(idx, idx)] + Hh[np.ix_(idx, idx)].T)
            inner = eig_sym(sub)
            split = partition_by_sign(inner)
            Vr = inner.basis.T @ V @ inner.basis
            p, z, n = list(split.pos), list(split.zero), list(split.neg)
            if p:
                val += np.trace(Vr[np.ix_(p, p)])
            if n:
                val -= np.trace(Vr[np.ix_(n, n)])
            if z:
                val += nuclear_norm(Vr[np.ix_(z, z)])
        elif blocks.values[k] > 0.0:
            val += np.trace(V)
        else:
            val -= np.trace(V)
    return float(val)


# ----------------------------------------------------------------------------
# divided differences and directional derivative of the prox
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ProxDividedDiff:
    """Divided-difference table of the soft threshold over a spectrum.

    ``table`` is expanded to eigenvalue-index pairs; ``kink_blocks`` lists
    (block position, sign) for blocks sitting exactly on a threshold kink,
    where the scalar table cannot represent the one-sided derivative and
    the assembler substitutes a definite-part projection.
    """

    table: np.ndarray
    kink_blocks: Tuple[Tuple[int, int], ...]
    blocks: DistinctBlocks
    eig: EigenDecomposition
    tau: float


def prox_divided_diff(Z, tau, group_tol=1e-8):
    _check_tau(tau)
    eig = eig_sym(Z)
    blocks = group_distinct(eig, group_tol)
    reps = blocks.values
    scale = 1.0 + (np.abs(reps).max() if reps.size else 0.0) + tau
    kink_tol = group_tol * scale
    flags = np.zeros(reps.size, dtype=np.int8)
    flags[np.abs(reps - tau) <= kink_tol] = 1
    flags[np.abs(reps + tau) <= kink_tol] = -1
    small = soft_pair_table(reps, tau, flags)
    expand = np.empty(eig.dim, dtype=int)
    for k, blk in enumerate(blocks.blocks):
        expand[list(blk)] = k
    table = small[np.ix_(expand, expand)]
    kinks = tuple((k, int(f)) for k, f in enumerate(flags) if f)
    return ProxDividedDiff(table, kinks, blocks, eig, float(tau))


def prox_dir_deriv(Z, tau, H, group_tol=1e-8):
    """Directional derivative of the nuclear-norm prox at Z along H."""
    dd = prox_divided_diff(Z, tau, group_tol)
    H = as_symmetric(H, "H")
    Hh = dd.eig.basis.T @ H @ dd.eig.basis
    out = dd.table * Hh
    for k, sign in dd.kink_blocks:
        idx = list(dd.blocks.blocks[k])
        sub = Hh[np.ix_(idx, idx)]
        if sign > 0:
            out[np.ix_(idx, idx)] = project_psd(sub)[0]
        else:
            out[np.ix_(idx, idx)] = -project_psd(-sub)[0]
    R = dd.eig.basis @ out @ dd.eig.basis.T
    return 0.5 * (R + R.T)


# ----------------------------------------------------------------------------
# generalized Jacobian elements at structured points Z = X + tau Y
# ----------------------------------------------------------------------------

def _choice_table(choice, k, name):
    if isinstance(choice, str):
        if choice == "zero":
            return np.zeros((k, k))
        if choice == "identity":
            return np.ones((k, k))
        raise InvalidInput(f"unknown {name} {choice!r}")
    omega = np.asarray(choice, dtype=np.float64)
    if omega.shape != (k, k):
        raise InvalidInput(f"{name} table must be {k}x{k}, got {omega.shape}")
    if np.abs(omega - omega.T).max(initial=0.0) > 1e-12:
        raise InvalidInput(f"{name} table must be symmetric")
    if omega.size and (omega.min() < 0.0 or omega.max() > 1.0):
        raise InvalidInput(f"{name} entries must lie in [0, 1]")
    return omega


@dataclass(frozen=True)
class ProxJacobianElement:
    """A generalized-Jacobian element of the prox at Z = X + tau Y.

    Acts as H -> Q (table o (Q^T H Q)) Q^T in the refined basis of the
    subgradient structure; the table rows follow the five groups (positive,
    saturated-up, interior, saturated-down, negative) and the two kink
    blocks carry the committed slope choices.
    """

    basis: np.ndarray
    table: np.ndarray
    structure: SubgradientPartition
    tau: float

    def apply(self, H):
        H = as_symmetric(H, "H")
        Hh = self.basis.T @ H @ self.basis
        return self.basis @ (self.table * Hh) @ self.basis.T


def _structured_values(sp, tau):
    """Spectrum of X + tau Y in the refined basis, with kink kinds."""
    q = sp.w.size
    vals = np.empty(q)
    kind = np.zeros(q, dtype=np.int8)
    for i in sp.partition.pos:
        vals[i] = sp.values[i] + tau
    for i in sp.partition.neg:
        vals[i] = sp.values[i] - tau
    for i in sp.partition.zero:
        vals[i] = tau * sp.w[i]
    for i in sp.b_up:
        vals[i] = tau
        kind[i] = 1
    for i in sp.b_low:
        vals[i] = -tau
        kind[i] = -1
    return vals, kind


def _structured_table(sp, tau):
    vals, kind = _structured_values(sp, tau)
    q = vals.size
    p = _soft_threshold(vals, tau)
    eps = 1e-12 * (1.0 + np.abs(vals).max(initial=0.0))
    T = np.zeros((q, q))
    for i in range(q):
        for j in range(i, q):
            if kind[i] != 0 and kind[i] == kind[j]:
                entry = 0.0  # committed choice is overlaid on this block
            elif abs(vals[i] - vals[j]) <= eps:
                entry = 1.0 if abs(vals[i]) > tau else 0.0
            else:
                entry = (p[i] - p[j]) / (vals[i] - vals[j])
            T[i, j] = T[j, i] = entry
    return T


def prox_bsub_element(X, Y, tau, up_choice="zero", low_choice="zero",
                      tol=None, split_tol=_DEFAULT_SPLIT_TOL):
    """B-subdifferential element of the prox at the structured point X + tau Y.

    ``up_choice`` / ``low_choice`` commit the free slope blocks where the
    shifted spectrum sits exactly on a threshold kink: any Hadamard table
    with entries in [0, 1] ("zero", "identity", or explicit).
    """
    _check_tau(tau)
    sp = subdiff_partition(X, Y, tol=tol, split_tol=split_tol)
    T = _structured_table(sp, tau)
    up, low = list(sp.b_up), list(sp.b_low)
    T[np.ix_(up, up)] = _choice_table(up_choice, len(up), "up_choice")
    T[np.ix_(low, low)] = _choice_table(low_choice, len(low), "low_choice")
    return ProxJacobianElement(sp.basis, T, sp, float(tau))


@dataclass(frozen=True)
class EnvGradBsubElement:
    """Generalized-Hessian element of the Moreau envelope at X + tau Y.

    The exact complement of a prox element: applies (H - W(H)) / tau, so
    tau * this + the prox element is the identity to round-off.
    """

    prox_element: ProxJacobianElement

    @property
    def tau(self):
        return self.prox_element.tau

    def apply(self, H):
        H = as_symmetric(H, "H")
        return (H - self.prox_element.apply(H)) / self.prox_element.tau

    @property
    def table(self):
        """Complement Hadamard table (scaled by 1/tau when applied)."""
        return 1.0 - self.prox_element.table


def grad_env_bsub_element(X, Y, tau, up_choice="zero", low_choice="zero",
                          tol=None, split_tol=_DEFAULT_SPLIT_TOL):
    W = prox_bsub_element(X, Y, tau, up_choice=up_choice, low_choice=low_choice,
                          tol=tol, split_tol=split_tol)
    return EnvGradBsubElement(W)


# ----------------------------------------------------------------------------
# critical cone of the nuclear norm
# ----------------------------------------------------------------------------

def _critical_blocks(sp, H):
    Qb = sp.basis
    b = list(sp.partition.zero)
    up, mid, low = list(sp.b_up), list(sp.b_mid), list(sp.b_low)
    Hh = Qb.T @ H @ Qb
    mid_all = Hh[np.ix_(mid, b)] if mid and b else np.zeros((0, 0))
    up_low = Hh[np.ix_(up, low)] if up and low else np.zeros((0, 0))
    up_up = Hh[np.ix_(up, up)]
    low_low = Hh[np.ix_(low, low)]
    return mid_all, up_low, up_up, low_low


def critical_cone_theta_contains(X, Y, H, tol=None, split_tol=_DEFAULT_SPLIT_TOL):
    """Whether H lies in the critical cone of the nuclear norm at (X, Y).

    In the refined null-space basis: the interior rows of H vanish against
    the whole null block, the two saturated groups decouple, and their
    diagonal blocks are PSD (up) and NSD (down).
    """
    H = as_symmetric(H, "H")
    sp = subdiff_partition(X, Y, split_tol=split_tol)
    if tol is None:
        tol = 1e-8 * (1.0 + np.abs(H).max(initial=0.0))
    mid_all, up_low, up_up, low_low = _critical_blocks(sp, H)
    if mid_all.size and np.abs(mid_all).max() > tol:
        return False
    if up_low.size and np.abs(up_low).max() > tol:
        return False
    if up_up.size and np.linalg.eigvalsh(up_up).min() < -tol:
        return False
    if low_low.size and np.linalg.eigvalsh(low_low).max() > tol:
        return False
    return True


def critical_cone_equality_gap(X, Y, H, split_tol=_DEFAULT_SPLIT_TOL):
    """Gap in the equivalent trace characterization of critical-cone
    membership: the nuclear norm of the null-block compression of H minus
    its pairing with the subgradient weights there."""
    H = as_symmetric(H, "H")
    sp = subdiff_partition(X, Y, split_tol=split_tol)
    b = list(sp.partition.zero)
    if not b:
        return 0.0
    Hbb = sp.basis[:, b].T @ H @ sp.basis[:, b]
    return float(nuclear_norm(Hbb) - np.sum(sp.w[b] * np.diag(Hbb)))


def critical_cone_theta_project(X, Y, H, split_tol=_DEFAULT_SPLIT_TOL):
    """Metric projection of H onto the critical cone at (X, Y).

    The cone is a product of blockwise constraints in the refined basis, so
    projecting blockwise is exact: zero out the interior rows of the null
    block and the up-down coupling, and take definite parts of the two
    saturated diagonal blocks.
    """
    H = as_symmetric(H, "H")
    sp = subdiff_partition(X, Y, split_tol=split_tol)
    Q = sp.basis
    Hh = Q.T @ H @ Q
    b = list(sp.partition.zero)
    up, mid, low = list(sp.b_up), list(sp.b_mid), list(sp.b_low)
    for i in mid:
        Hh[i, b] = 0.0
        Hh[b, i] = 0.0
    if up and low:
        Hh[np.ix_(up, low)] = 0.0
        Hh[np.ix_(low, up)] = 0.0
    if up:
        Hh[np.ix_(up, up)] = project_psd(Hh[np.ix_(up, up)])[0]
    if low:
        Hh[np.ix_(low, low)] = -project_psd(-Hh[np.ix_(low, low)])[0]
    R = Q @ Hh @ Q.T
    return 0.5 * (R + R.T)


# ----------------------------------------------------------------------------
# conjugate of the second directional derivative (sigma-term)
# ----------------------------------------------------------------------------

def _cross_compressions(eig, blocks, H):
    """All block compressions K_k of H (X - value_k I)^+ H, in the hat basis."""
    Hh = eig.basis.T @ H @ eig.basis
    out = []
    for k in range(len(blocks.blocks)):
        idx = list(blocks.blocks[k])
        d = _pinv_weights(blocks, k)
        K = (Hh[idx, :] * d) @ Hh[:, idx]
        out.append(0.5 * (K + K.T))
    return out


def _domain_fail(condition, violation, domain_mode):
    if domain_mode == "zero":
        return 0.0
    raise DomainError(condition, violation)


def psi_conjugate(X, H, Y, form="full", domain_mode="error", tol=None,
                  group_tol=1e-8, split_tol=_DEFAULT_SPLIT_TOL):
    """Conjugate, at Y, of the second directional derivative of the
    nuclear norm at X along (H, .).

    This is the curvature correction ("sigma term") entering second-order
    optimality conditions.  Three equivalent evaluators are provided:

    - ``form="full"``: verifies the effective-domain conditions on Y
      directly (blockwise identity/negated-identity structure and the
      contraction bound on the part aligned with the null directions of
      the compressed H) and evaluates the signed-trace closed form.
    - ``form="critical"``: assumes Y is a subgradient and H lies in the
      critical cone at (X, Y); evaluates via the saturated/interior split.
    - ``form="reduced"``: the compact pairing 2 sum_k <Y_kk, K_k> over the
      distinct blocks, where K_k compresses H (X - value_k I)^+ H.

    Off-domain arguments raise DomainError unless ``domain_mode="zero"``,
    which returns 0.0 (the literal convention of the piecewise formula).
    """
    X = as_symmetric(X, "X")
    H = as_symmetric(H, "H")
    Y = as_symmetric(Y, "Y")
    if form not in ("full", "critical", "reduced"):
        raise InvalidInput(f"unknown form {form!r}")
    if domain_mode not in ("error", "zero"):
        raise InvalidInput(f"unknown domain_mode {domain_mode!r}")
    if tol is None:
        tol = 1e-7 * (1.0 + np.abs(Y).max(initial=0.0))

    eig = eig_sym(X)
    blocks = group_distinct(eig, group_tol)
    Ks = _cross_compressions(eig, blocks, H)
    Yh = eig.basis.T @ Y @ eig.basis
    s = blocks.zero_block

    if form == "reduced":
        if not subdiff_contains(X, Y, tol=tol):
            return _domain_fail("subgradient", _subdiff_defect(X, Y, None)[0], domain_mode)
        if not critical_cone_theta_contains(X, Y, H, split_tol=split_tol):
            return _domain_fail("critical_cone", np.nan, domain_mode)
        total = 0.0
        for k, blk in enumerate(blocks.blocks):
            idx = list(blk)
            total += np.sum(Yh[np.ix_(idx, idx)] * Ks[k])
        return float(2.0 * total)

    if form == "critical":
        defect = _subdiff_defect(X, Y, None)[0]
        if defect > tol:
            return _domain_fail("subgradient", defect, domain_mode)
        sp = subdiff_partition(X, Y, tol=tol, split_tol=split_tol)
        if not critical_cone_theta_contains(X, Y, H, split_tol=split_tol):
            return _domain_fail("critical_cone", np.nan, domain_mode)
        total = 0.0
        for k in range(len(blocks.blocks)):
            if k == s:
                continue
            tr = float(np.trace(Ks[k]))
            total += tr if blocks.values[k] > 0.0 else -tr
        b = list(sp.partition.zero)
        if b:
            # zero-block compression of H X^+ H in the refined basis
            Hr = sp.basis.T @ H @ sp.basis
            d = np.zeros(eig.dim)
            nz = list(sp.partition.pos) + list(sp.partition.neg)
            d[nz] = 1.0 / sp.values[nz]
            Kt = (Hr[b, :] * d) @ Hr[:, b]
            Kt = 0.5 * (Kt + Kt.T)
            loc = {i: r for r, i in enumerate(b)}
            up = [loc[i] for i in sp.b_up]
            mid = [loc[i] for i in sp.b_mid]
            low = [loc[i] for i in sp.b_low]
            if up:
                total += np.trace(Kt[np.ix_(up, up)])
            if low:
                total -= np.trace(Kt[np.ix_(low, low)])
            if mid:
                wm = sp.w[list(sp.b_mid)]
                total += float(np.sum(wm * np.diag(Kt[np.ix_(mid, mid)])))
        return float(2.0 * total)

    # full form: explicit domain verification against the nested split of H
    for k, blk in enumerate(blocks.blocks):
        idx = list(blk)
        for l in range(k + 1, len(blocks.blocks)):
            jdx = list(blocks.blocks[l])
            off = np.abs(Yh[np.ix_(idx, jdx)]).max(initial=0.0)
            if off > tol:
                return _domain_fail("off_diagonal_block", off, domain_mode)
        if k == s:
            continue
        target = np.eye(len(idx)) if blocks.values[k] > 0.0 else -np.eye(len(idx))
        gap = np.abs(Yh[np.ix_(idx, idx)] - target).max()
        if gap > tol:
            side = "positive" if blocks.values[k] > 0.0 else "negative"
            return _domain_fail(f"{side}_block_identity", gap, domain_mode)
    total = 0.0
    for k in range(len(blocks.blocks)):
        if k == s:
            continue
        tr = float(np.trace(Ks[k]))
        total += tr if blocks.values[k] > 0.0 else -tr
    if s is not None:
        b = list(blocks.blocks[s])
        Hs = eig.basis[:, b].T @ H @ eig.basis[:, b]
        inner = eig_sym(0.5 * (Hs + Hs.T))
        split = partition_by_sign(inner)
        G = inner.basis.T @ Yh[np.ix_(b, b)] @ inner.basis
        Kr = inner.basis.T @ Ks[s] @ inner.basis
        p, z, n = list(split.pos), list(split.zero), list(split.neg)
        for rows, cols in ((p, z), (p, n), (z, n)):
            if rows and cols:
                off = np.abs(G[np.ix_(rows, cols)]).max()
                if off > tol:
                    return _domain_fail("null_block_coupling", off, domain_mode)
        if p:
            gap = np.abs(G[np.ix_(p, p)] - np.eye(len(p))).max()
            if gap > tol:
                return _domain_fail("null_block_up_identity", gap, domain_mode)
            total += np.trace(Kr[np.ix_(p, p)])
        if n:
            gap = np.abs(G[np.ix_(n, n)] + np.eye(len(n))).max()
            if gap > tol:
                return _domain_fail("null_block_down_identity", gap, domain_mode)
            total -= np.trace(Kr[np.ix_(n, n)])
        if z:
            Gz = G[np.ix_(z, z)]
            top = np.abs(np.linalg.eigvalsh(0.5 * (Gz + Gz.T))).max()
            if top > 1.0 + tol:
                return _domain_fail("null_block_contraction", top - 1.0, domain_mode)
            total += np.sum(Gz * Kr[np.ix_(z, z)])
    return float(2.0 * total)


def _psi_interior_cross(X, H, Y, group_tol=1e-8, split_tol=_DEFAULT_SPLIT_TOL):
    """Interior-rows shortcut for the conjugate value.

    Valid when the only nonvanishing cross couplings of H against the
    nonzero blocks run through the interior null rows (the saturated rows
    and the positive-negative couplings of H must vanish).  Expressed as a
    weighted sum of squared couplings between the interior rows and each
    nonzero block.
    """
    sp = subdiff_partition(X, Y, split_tol=split_tol)
    eig = EigenDecomposition(sp.values, sp.basis)
    blocks = group_distinct(eig, group_tol)
    Hh = sp.basis.T @ H @ sp.basis
    mid = list(sp.b_mid)
    if not mid:
        return 0.0
    wm = sp.w[mid]
    total = 0.0
    for k, blk in enumerate(blocks.blocks):
        if k == blocks.zero_block:
            continue
        idx = list(blk)
        G = Hh[np.ix_(mid, idx)]
        row_sq = np.sum(G * G, axis=1)
        if blocks.values[k] > 0.0:
            total += np.sum((1.0 - wm) * row_sq) / blocks.values[k]
        else:
            total += np.sum((1.0 + wm) * row_sq) / abs(blocks.values[k])
    return float(-2.0 * total)
