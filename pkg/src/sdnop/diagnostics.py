"""Verification tools for reference solutions.

Given a KKT point of the composite problem, this module checks the two
structural assumptions behind the fast local convergence of the multiplier
method (constraint nondegeneracy and a strong second-order sufficient
condition on a reduced subspace), evaluates the constants entering the
contraction-rate bound, and runs empirical rate sweeps that measure the
contraction ratio of the fixed-penalty dual iteration as the penalty grows.

Everything is organized around the joint eigen-structure at the reference
point: the eigenbasis Q of the matrix-map value F(x) refined against the
multiplier Y, and the eigenbasis P of the gap matrix M = Gamma - g(x) whose
sign split encodes strict complementarity of the conic constraint.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import (
    DegenerateSpectrum,
    InnerSolveError,
    InvalidInput,
    MaxIterations,
    NotAKKTPoint,
    NotASubgradient,
)
from .nuclear import subdiff_partition
from .problem import (
    MultiplierTriple,
    apply_jac,
    hess_xx_lagrangian,
    kkt_residual,
)
from .solver import ALMConfig, alm_solve
from .spectral import eig_sym, partition_by_sign, pinv_sym, svec_block


# ----------------------------------------------------------------------------
# joint eigen-structure at a reference point
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeBlocks:
    """Eigen-structure shared by every check in this module.

    ``basis_F`` diagonalizes F(x) with columns ordered by descending
    eigenvalue; inside the zero eigenspace the columns are refined so the
    multiplier compression is diagonal with weights ``w`` (descending).
    Index tuples ``a``/``b_up``/``b_mid``/``b_low``/``c_neg`` point into
    those columns.  ``basis_M`` diagonalizes M = Gamma - g(x) and
    ``alpha``/``beta``/``gamma`` split its spectrum by sign.

    ``jac_F_Q[l]`` is the l-th coordinate partial of F compressed into the
    F basis, ``jac_g_P[l]`` the same for g in the M basis.
    """

    basis_F: np.ndarray
    values_F: np.ndarray
    w: np.ndarray
    Y_Q: np.ndarray
    a: Tuple[int, ...]
    b_up: Tuple[int, ...]
    b_mid: Tuple[int, ...]
    b_low: Tuple[int, ...]
    c_neg: Tuple[int, ...]
    basis_M: np.ndarray
    values_M: np.ndarray
    alpha: Tuple[int, ...]
    beta: Tuple[int, ...]
    gamma: Tuple[int, ...]
    jac_F_Q: np.ndarray
    jac_g_P: np.ndarray
    jac_h: np.ndarray
    multiplicity: bool

    @property
    def b_all(self):
        return self.b_up + self.b_mid + self.b_low


def _equal_runs(keys, tols):
    """Consecutive index runs where every key coordinate stays within tol."""
    k = keys.shape[0]
    runs = []
    start = 0
    for i in range(1, k):
        if np.any(np.abs(keys[i] - keys[i - 1]) > tols):
            runs.append(tuple(range(start, i)))
            start = i
    if k:
        runs.append(tuple(range(start, k)))
    return runs


def _rotate_within(basis, runs, rng):
    out = basis.copy()
    for run in runs:
        if len(run) < 2:
            continue
        G = rng.randn(len(run), len(run))
        O, _ = np.linalg.qr(G)
        out[:, list(run)] = out[:, list(run)] @ O
    return out


def cone_blocks(problem, x, multipliers, group_tol=1e-8, rng=None):
    """Assemble the joint eigen-structure at (x, multipliers).

    Parameters
    ----------
    rng : numpy.random.RandomState, optional
        When given, the basis columns are rotated by random orthogonal
        blocks inside every eigen-group that leaves both decompositions
        invariant (equal eigenvalue and equal weight).  Used to bracket
        basis-dependent constants when the spectrum has multiplicities.

    Raises
    ------
    InvalidInput
        On dimension mismatches between the multipliers and the problem.
    NotASubgradient
        When Y is not a subgradient of the nuclear norm at F(x).
    """
    x = np.asarray(x, dtype=np.float64)
    Y, mu, Gamma = multipliers.Y, multipliers.mu, multipliers.Gamma
    if np.shape(mu) != (problem.m,):
        raise InvalidInput("mu dimension does not match the problem")
    if np.shape(Gamma) != (problem.p, problem.p):
        raise InvalidInput("Gamma dimension does not match the problem")
    part = subdiff_partition(problem.F(x), Y)
    Q = part.basis
    lam_F = part.values
    w = part.w
    M = Gamma - problem.g(x)
    eig_M = eig_sym(M)
    sign_M = partition_by_sign(eig_M)
    P = eig_M.basis

    scale_F = 1.0 + (np.abs(lam_F).max() if lam_F.size else 0.0)
    runs_F = _equal_runs(
        np.column_stack([lam_F, w]) if lam_F.size else np.zeros((0, 2)),
        np.array([group_tol * scale_F, group_tol]),
    )
    scale_M = 1.0 + (np.abs(eig_M.values).max() if eig_M.values.size else 0.0)
    runs_M = _equal_runs(
        eig_M.values.reshape(-1, 1), np.array([group_tol * scale_M])
    )
    multiplicity = any(len(r) > 1 for r in runs_F + runs_M)
    if rng is not None:
        Q = _rotate_within(Q, runs_F, rng)
        P = _rotate_within(P, runs_M, rng)

    n = problem.n
    if problem.q:
        jac_F_Q = np.einsum("lij,ia,jb->lab", problem.jac_F(x), Q, Q)
    else:
        jac_F_Q = np.zeros((n, 0, 0))
    if problem.p:
        jac_g_P = np.einsum("lij,ia,jb->lab", problem.jac_g(x), P, P)
    else:
        jac_g_P = np.zeros((n, 0, 0))
    return ConeBlocks(
        basis_F=Q,
        values_F=lam_F,
        w=w,
        Y_Q=Q.T @ Y @ Q if problem.q else np.zeros((0, 0)),
        a=part.partition.pos,
        b_up=part.b_up,
        b_mid=part.b_mid,
        b_low=part.b_low,
        c_neg=part.partition.neg,
        basis_M=P,
        values_M=eig_M.values,
        alpha=sign_M.pos,
        beta=sign_M.zero,
        gamma=sign_M.neg,
        jac_F_Q=jac_F_Q,
        jac_g_P=jac_g_P,
        jac_h=problem.jac_h(x),
        multiplicity=multiplicity,
    )


# ----------------------------------------------------------------------------
# compressed jacobian block rows
# ----------------------------------------------------------------------------

def _vec_rows(jac_Q, rows, cols):
    """Stack vec of the (rows, cols) block of every coordinate partial.

    Returns a (len(rows)*len(cols)) x n matrix whose l-th column is the
    column-stacked block of the l-th compressed partial.
    """
    n = jac_Q.shape[0]
    r, s = len(rows), len(cols)
    if r == 0 or s == 0:
        return np.zeros((r * s, n))
    sub = jac_Q[:, list(rows), :][:, :, list(cols)]
    return np.transpose(sub, (0, 2, 1)).reshape(n, r * s).T


def _svec_rows(jac_Q, rows):
    """Isometric half-vectorization rows of a principal block, one per
    coordinate, as a (len(rows)(len(rows)+1)/2) x n matrix."""
    n = jac_Q.shape[0]
    r = len(rows)
    if r == 0:
        return np.zeros((0, n))
    return np.stack([svec_block(jac_Q[l], rows) for l in range(n)], axis=1)


def _svec_weights(table):
    """Diagonal weights aligned with the svec ordering of a symmetric table.

    No sqrt(2) factor: the svec rows already carry the isometric scaling,
    so the plain table entries give the correct doubled off-diagonal count.
    """
    k = table.shape[0]
    out = np.empty(k * (k + 1) // 2)
    pos = 0
    for j in range(k):
        for i in range(j):
            out[pos] = table[i, j]
            pos += 1
        out[pos] = table[j, j]
        pos += 1
    return out


# ----------------------------------------------------------------------------
# nondegeneracy: the stacked active-block matrix and its rank
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class AQPMatrix:
    """Active-constraint block matrix in the paired eigenbases.

    Row groups, in order: the equality jacobian; the six blocks of the
    compressed matrix-map jacobian touching the zero eigenspace of F(x)
    (principal blocks half-vectorized); and, negated, the three blocks of
    the compressed cone-map jacobian touching the active eigenspace of the
    conic constraint.  Full row rank of this matrix is the operational
    form of constraint nondegeneracy.
    """

    matrix: np.ndarray
    n1: int
    n2: int
    blocks: ConeBlocks


def build_AQP(problem, x, multipliers, blocks=None, group_tol=1e-8):
    """Assemble the active-constraint block matrix at a reference point."""
    b = blocks if blocks is not None else cone_blocks(
        problem, x, multipliers, group_tol)
    rows = [
        b.jac_h,
        _svec_rows(b.jac_F_Q, b.b_up),
        _vec_rows(b.jac_F_Q, b.b_up, b.b_mid),
        _vec_rows(b.jac_F_Q, b.b_up, b.b_low),
        _svec_rows(b.jac_F_Q, b.b_mid),
        _vec_rows(b.jac_F_Q, b.b_mid, b.b_low),
        _svec_rows(b.jac_F_Q, b.b_low),
        -_svec_rows(b.jac_g_P, b.alpha),
        -_svec_rows(b.jac_g_P, b.beta),
        -_vec_rows(b.jac_g_P, b.alpha, b.beta),
    ]
    A = np.vstack(rows)
    nb = len(b.b_all)
    nab = len(b.alpha) + len(b.beta)
    n1 = b.jac_h.shape[0] + nb * (nb + 1) // 2
    n2 = n1 + nab * (nab + 1) // 2
    return AQPMatrix(A, n1, n2, b)


@dataclass(frozen=True)
class NondegeneracyReport:
    holds: bool
    sigma_min: float
    sigma_max: float
    rows: int
    spectrum_multiplicity: bool

    def as_dict(self):
        return {
            "holds": bool(self.holds),
            "sigma_min": float(self.sigma_min),
            "sigma_max": float(self.sigma_max),
            "rows": int(self.rows),
            "spectrum_multiplicity": bool(self.spectrum_multiplicity),
        }


def nondegeneracy_check(problem, x, multipliers, rank_tol=1e-8, blocks=None):
    """Test constraint nondegeneracy via the active-block matrix rank.

    The check holds when the smallest singular value of the stacked matrix
    exceeds ``rank_tol`` times the largest; with more rows than primal
    coordinates it fails outright.  Zero rows hold vacuously.
    """
    A = build_AQP(problem, x, multipliers, blocks=blocks)
    mult = A.blocks.multiplicity
    if A.n2 == 0:
        return NondegeneracyReport(True, float("inf"), 0.0, 0, mult)
    s = np.linalg.svd(A.matrix, compute_uv=False)
    sigma_max = float(s[0])
    if A.n2 > A.matrix.shape[1]:
        return NondegeneracyReport(False, 0.0, sigma_max, A.n2, mult)
    sigma_min = float(s[-1])
    holds = sigma_min > rank_tol * sigma_max
    return NondegeneracyReport(holds, sigma_min, sigma_max, A.n2, mult)


# ----------------------------------------------------------------------------
# reduced second-order machinery
# ----------------------------------------------------------------------------

def app_cone_basis(problem, x, multipliers, blocks=None, rank_tol=1e-10):
    """Orthonormal basis of the reduced second-order subspace.

    The subspace collects primal directions annihilated by the equality
    jacobian whose compressed matrix-map image lies in the affine hull of
    the residual cone of the nuclear norm (interior rows of the zero block
    vanish against the whole block, and the saturated corner blocks do not
    mix) and whose compressed cone-map image lies in the affine hull of
    the residual cone of the semidefinite constraint.
    """
    b = blocks if blocks is not None else cone_blocks(problem, x, multipliers)
    rows = [
        b.jac_h,
        _vec_rows(b.jac_F_Q, b.b_mid, b.b_all),
        _vec_rows(b.jac_F_Q, b.b_up, b.b_low),
        _svec_rows(b.jac_g_P, b.alpha),
        _vec_rows(b.jac_g_P, b.alpha, b.beta),
    ]
    L = np.vstack(rows)
    n = L.shape[1]
    if L.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(L, full_matrices=True)
    top = s[0] if s.size and s[0] > 0.0 else 1.0
    rank = int(np.sum(s > rank_tol * top))
    return Vt[rank:].T


def sigma_term_psd(problem, x, Gamma, d):
    """Curvature contribution of the semidefinite constraint along d.

    Evaluates 2 <Gamma, (Dg d) g(x)^+ (Dg d)> with the pseudo-inverse of
    the constraint value; zero when the constraint is absent.
    """
    if problem.p == 0:
        return 0.0
    d = np.asarray(d, dtype=np.float64)
    G = apply_jac(problem.jac_g(x), d)
    return 2.0 * float(np.sum(Gamma * (G @ pinv_sym(problem.g(x)) @ G)))


def _distinct_value_runs(values, group_tol):
    """Runs of (descending) values whose consecutive gap is below tol."""
    scale = 1.0 + (np.abs(values).max() if values.size else 0.0)
    return _equal_runs(values.reshape(-1, 1), np.array([group_tol * scale]))


def _matrix_term_curvature(blocks, Hc, group_tol=1e-8):
    """Quadratic curvature anchor of the nuclear-norm term.

    For a compressed direction Hc (in the F basis) lying in the affine
    hull of the residual cone, the second-order contribution of the
    nuclear norm is the quadratic form

        2 sum_k < Y_kk, Hc_{k,l} Hc_{k,l}^T / (v_l - v_k) >  over l != k,

    summed over distinct eigenvalue groups of F(x) with representatives
    v_k.  This enters the second-order test with a minus sign.
    """
    lam = blocks.values_F
    if lam.size == 0:
        return 0.0
    runs = _distinct_value_runs(lam, group_tol)
    reps = [float(lam[list(r)].mean()) for r in runs]
    total = 0.0
    for k, gk in enumerate(runs):
        ik = list(gk)
        K = np.zeros((len(ik), len(ik)))
        for l, gl in enumerate(runs):
            if l == k:
                continue
            Hkl = Hc[np.ix_(ik, list(gl))]
            K += (Hkl @ Hkl.T) / (reps[l] - reps[k])
        total += 2.0 * float(np.sum(blocks.Y_Q[np.ix_(ik, ik)] * K))
    return total


def _quadratic_probe(problem, x, Gamma, blocks, hess_L, jac_g, pinv_g,
                     group_tol):
    """Closure computing the second-order test value q(d)."""

    def q_of(d):
        val = float(d @ hess_L @ d)
        if problem.q:
            Hc = np.einsum("lij,l->ij", blocks.jac_F_Q, d)
            val -= _matrix_term_curvature(blocks, Hc, group_tol)
        if problem.p:
            G = apply_jac(jac_g, d)
            val += 2.0 * float(np.sum(Gamma * (G @ pinv_g @ G)))
        return val

    return q_of


def sosc_reduced_matrix(problem, x, multipliers, blocks=None, basis=None,
                        group_tol=1e-8):
    """Reduced symmetric matrix of the second-order test.

    Assembled by polarization probes q(b_i + b_j) of the test value on an
    orthonormal basis of the reduced subspace; every term of q is
    quadratic there, so the reduction is exact.  Returns (matrix, basis).
    """
    b = blocks if blocks is not None else cone_blocks(
        problem, x, multipliers, group_tol)
    if basis is None:
        basis = app_cone_basis(problem, x, multipliers, blocks=b)
    k = basis.shape[1]
    x = np.asarray(x, dtype=np.float64)
    hess_L = hess_xx_lagrangian(problem, x, multipliers.Y, multipliers.mu,
                                multipliers.Gamma)
    jac_g = problem.jac_g(x) if problem.p else None
    pinv_g = pinv_sym(problem.g(x)) if problem.p else None
    q_of = _quadratic_probe(problem, x, multipliers.Gamma, b, hess_L,
                            jac_g, pinv_g, group_tol)
    diag = [q_of(basis[:, i]) for i in range(k)]
    M = np.zeros((k, k))
    for i in range(k):
        M[i, i] = diag[i]
        for j in range(i + 1, k):
            val = 0.5 * (q_of(basis[:, i] + basis[:, j]) - diag[i] - diag[j])
            M[i, j] = M[j, i] = val
    return M, basis


@dataclass(frozen=True)
class SOSCReport:
    holds: bool
    min_value: float
    dimension: int

    def as_dict(self):
        return {
            "holds": bool(self.holds),
            "min_value": float(self.min_value),
            "dimension": int(self.dimension),
        }


def strong_sosc_check(problem, x, multipliers, tol=1e-10, kkt_tol=1e-6,
                      blocks=None, group_tol=1e-8):
    """Strong second-order sufficiency on the reduced subspace.

    Raises
    ------
    NotAKKTPoint
        When the KKT residual at (x, multipliers) exceeds ``kkt_tol``.
    """
    res = kkt_residual(problem, x, multipliers.Y, multipliers.mu,
                       multipliers.Gamma)
    if res.total > kkt_tol:
        raise NotAKKTPoint(
            f"KKT residual {res.total:.3e} exceeds {kkt_tol:.1e}")
    M, basis = sosc_reduced_matrix(problem, x, multipliers, blocks=blocks,
                                   group_tol=group_tol)
    if basis.shape[1] == 0:
        return SOSCReport(True, float("inf"), 0)
    min_value = float(np.linalg.eigvalsh(M)[0])
    return SOSCReport(min_value > tol, min_value, basis.shape[1])


def _critical_member(blocks, d, member_tol):
    """Cone membership of a direction already inside the reduced subspace."""
    if blocks.jac_F_Q.shape[1]:
        Hc = np.einsum("lij,l->ij", blocks.jac_F_Q, d)
        up = list(blocks.b_up)
        if up and np.linalg.eigvalsh(Hc[np.ix_(up, up)])[0] < -member_tol:
            return False
        low = list(blocks.b_low)
        if low and np.linalg.eigvalsh(Hc[np.ix_(low, low)])[-1] > member_tol:
            return False
    if blocks.jac_g_P.shape[1]:
        Gc = np.einsum("lij,l->ij", blocks.jac_g_P, d)
        bt = list(blocks.beta)
        if bt and np.linalg.eigvalsh(Gc[np.ix_(bt, bt)])[0] < -member_tol:
            return False
    return True


def second_order_necessary_check(problem, x, multipliers, samples=200,
                                 tol=1e-8, seed=0, group_tol=1e-8):
    """Sampled second-order necessary condition over critical directions.

    Draws directions from the reduced subspace, keeps those inside the
    critical cone (corner blocks correctly signed), and requires the
    second-order test value to be at least -tol on each.  Vacuously true
    when no sampled direction is critical.
    """
    b = cone_blocks(problem, x, multipliers, group_tol)
    basis = app_cone_basis(problem, x, multipliers, blocks=b)
    k = basis.shape[1]
    if k == 0:
        return True
    x = np.asarray(x, dtype=np.float64)
    hess_L = hess_xx_lagrangian(problem, x, multipliers.Y, multipliers.mu,
                                multipliers.Gamma)
    jac_g = problem.jac_g(x) if problem.p else None
    pinv_g = pinv_sym(problem.g(x)) if problem.p else None
    q_of = _quadratic_probe(problem, x, multipliers.Gamma, b, hess_L,
                            jac_g, pinv_g, group_tol)
    rng = np.random.RandomState(seed)
    for _ in range(samples):
        d = basis @ rng.randn(k)
        norm = np.linalg.norm(d)
        if norm == 0.0:
            continue
        d /= norm
        if not _critical_member(b, d, 1e-10):
            continue
        if q_of(d) < -tol:
            return False
    return True


# ----------------------------------------------------------------------------
# rate constants
# ----------------------------------------------------------------------------

def _guard_denominator(vals, guard, what):
    if vals.size and vals.min() < guard:
        raise DegenerateSpectrum(
            f"eigen-gap {vals.min():.3e} in {what} is below {guard:.1e}")


def _nu_tables(blocks, deg_tol):
    """The six block ratio tables of the spectra, as (min, max) pairs.

    Empty index-set families are omitted.  Denominators too close to zero
    raise DegenerateSpectrum.
    """
    lam = blocks.values_F
    a_vals = lam[list(blocks.a)]
    c_vals = lam[list(blocks.c_neg)]
    wm = blocks.w[list(blocks.b_mid)]
    lam_M = blocks.values_M
    al_vals = lam_M[list(blocks.alpha)]
    ga_vals = lam_M[list(blocks.gamma)]
    scale_F = 1.0 + (np.abs(lam).max() if lam.size else 0.0)
    scale_M = 1.0 + (np.abs(lam_M).max() if lam_M.size else 0.0)
    guard_F = deg_tol * scale_F
    guard_M = deg_tol * scale_M
    out = {}

    def put(name, table):
        out[name] = (float(table.min()), float(table.max()))

    if a_vals.size:
        _guard_denominator(a_vals, guard_F, "the positive spectrum of F")
    if c_vals.size:
        _guard_denominator(-c_vals, guard_F, "the negative spectrum of F")
    if a_vals.size and wm.size:
        put("a_bS", (1.0 - wm[None, :]) / a_vals[:, None])
    if a_vals.size and blocks.b_low:
        put("a_bL", 2.0 / a_vals)
    if a_vals.size and c_vals.size:
        den = a_vals[:, None] - c_vals[None, :]
        _guard_denominator(den.ravel(), guard_F, "the spread of F")
        put("a_c", 2.0 / den)
    if c_vals.size and blocks.b_up:
        put("c_bU", 2.0 / (-c_vals))
    if c_vals.size and wm.size:
        put("c_bS", (1.0 + wm[None, :]) / (-c_vals[:, None]))
    if al_vals.size and ga_vals.size:
        _guard_denominator(-ga_vals, guard_M, "the negative spectrum of M")
        put("al_ga", al_vals[:, None] / (-ga_vals[None, :]))
    return out


def _delta_tables(blocks, c):
    """Penalty-dependent divided-difference tables for the cross blocks.

    Keys mirror :func:`_nu_tables`; each table multiplied by c converges to
    the corresponding ratio table as the penalty grows.
    """
    lam = blocks.values_F
    a_vals = lam[list(blocks.a)]
    c_vals = lam[list(blocks.c_neg)]
    wm = blocks.w[list(blocks.b_mid)]
    lam_M = blocks.values_M
    al_vals = lam_M[list(blocks.alpha)]
    ga_vals = lam_M[list(blocks.gamma)]
    inv = 1.0 / c
    out = {}
    if a_vals.size and wm.size:
        num = inv * (1.0 - wm)[None, :]
        out["a_bS"] = num / (a_vals[:, None] + num)
    if a_vals.size and blocks.b_low:
        col = (2.0 * inv) / (a_vals + 2.0 * inv)
        out["a_bL"] = np.repeat(col[:, None], len(blocks.b_low), axis=1)
    if a_vals.size and c_vals.size:
        den = a_vals[:, None] - c_vals[None, :] + 2.0 * inv
        out["a_c"] = (2.0 * inv) / den
    if c_vals.size and blocks.b_up:
        col = (2.0 * inv) / (-c_vals + 2.0 * inv)
        out["c_bU"] = np.repeat(col[:, None], len(blocks.b_up), axis=1)
    if c_vals.size and wm.size:
        num = inv * (1.0 + wm)[None, :]
        out["c_bS"] = num / (num - c_vals[:, None])
    if al_vals.size and ga_vals.size:
        out["al_ga"] = al_vals[:, None] / (
            al_vals[:, None] + c * (-ga_vals)[None, :])
    return out


_CROSS_FAMILIES = (
    ("a_bS", "a", "b_mid", "F"),
    ("a_bL", "a", "b_low", "F"),
    ("a_c", "a", "c_neg", "F"),
    ("c_bU", "c_neg", "b_up", "F"),
    ("c_bS", "c_neg", "b_mid", "F"),
    ("al_ga", "alpha", "gamma", "g"),
)


def split_penalty_matrix(problem, x, multipliers, c_base, c, free=0.0,
                         blocks=None, group_tol=1e-8):
    """Curvature model with separately weighted row and table terms.

    The active-block rows enter with weight ``c_base`` while the
    penalty-dependent cross-block corrections are evaluated at penalty
    ``c``; with ``c_base == c`` this reproduces the regularized Newton
    matrix of the method at the reference point.  ``free`` fills the
    divided-difference table entries that the generalized derivative
    leaves unconstrained in [0, 1].
    """
    if not 0.0 <= free <= 1.0:
        raise InvalidInput("free table entries must lie in [0, 1]")
    b = blocks if blocks is not None else cone_blocks(
        problem, x, multipliers, group_tol)
    x = np.asarray(x, dtype=np.float64)
    out = hess_xx_lagrangian(problem, x, multipliers.Y, multipliers.mu,
                             multipliers.Gamma)
    out = out + c_base * b.jac_h.T @ b.jac_h
    for rows, weight in ((b.b_up, free), (b.b_mid, 1.0), (b.b_low, free)):
        R = _svec_rows(b.jac_F_Q, rows)
        if R.shape[0]:
            out += c_base * weight * R.T @ R
    for rows, cols in ((b.b_up, b.b_mid), (b.b_up, b.b_low),
                       (b.b_mid, b.b_low)):
        R = _vec_rows(b.jac_F_Q, rows, cols)
        if R.shape[0]:
            out += 2.0 * c_base * R.T @ R
    for rows, weight in ((b.alpha, 1.0), (b.beta, free)):
        R = _svec_rows(b.jac_g_P, rows)
        if R.shape[0]:
            out += c_base * weight * R.T @ R
    R = _vec_rows(b.jac_g_P, b.alpha, b.beta)
    if R.shape[0]:
        out += 2.0 * c_base * R.T @ R
    tables = _delta_tables(b, c)
    for key, row_name, col_name, which in _CROSS_FAMILIES:
        if key not in tables:
            continue
        rows = getattr(b, row_name)
        cols = getattr(b, col_name)
        jac = b.jac_F_Q if which == "F" else b.jac_g_P
        R = _vec_rows(jac, rows, cols)
        weights = tables[key].flatten(order="F")
        out += 2.0 * c * R.T @ (weights[:, None] * R)
    return 0.5 * (out + out.T)


def _sigma_nu_at(blocks):
    """Singular-value and cross-block spectral brackets for one basis."""
    A = np.vstack([
        blocks.jac_h,
        _svec_rows(blocks.jac_F_Q, blocks.b_up),
        _vec_rows(blocks.jac_F_Q, blocks.b_up, blocks.b_mid),
        _vec_rows(blocks.jac_F_Q, blocks.b_up, blocks.b_low),
        _svec_rows(blocks.jac_F_Q, blocks.b_mid),
        _vec_rows(blocks.jac_F_Q, blocks.b_mid, blocks.b_low),
        _svec_rows(blocks.jac_F_Q, blocks.b_low),
        -_svec_rows(blocks.jac_g_P, blocks.alpha),
        -_svec_rows(blocks.jac_g_P, blocks.beta),
        -_vec_rows(blocks.jac_g_P, blocks.alpha, blocks.beta),
    ])
    C = np.vstack([
        _vec_rows(blocks.jac_F_Q, blocks.a, blocks.b_mid),
        _vec_rows(blocks.jac_F_Q, blocks.a, blocks.b_low),
        _vec_rows(blocks.jac_F_Q, blocks.a, blocks.c_neg),
        _vec_rows(blocks.jac_F_Q, blocks.c_neg, blocks.b_up),
        _vec_rows(blocks.jac_F_Q, blocks.c_neg, blocks.b_mid),
        -_vec_rows(blocks.jac_g_P, blocks.alpha, blocks.gamma),
    ])
    n = A.shape[1]
    n2 = A.shape[0]
    R_tilde = np.eye(n)
    sig_lo, sig_hi = 1.0, 1.0
    if n2:
        U, s, Vt = np.linalg.svd(A, full_matrices=True)
        if n2 > n or s[-1] <= 1e-12 * s[0]:
            # rank deficient: the inverse-square bound does not exist
            sig_lo = min(1.0, float(s[0] ** -2.0)) if s[0] > 0 else 1.0
            sig_hi = float("inf")
            R_tilde = None
        else:
            inv2 = s ** -2.0
            sig_lo = min(1.0, float(inv2.min()))
            sig_hi = max(1.0, float(inv2.max()))
            top = (Vt.T[:, :n2] / s[None, :]) @ U.T
            R_tilde = np.hstack([top, Vt.T[:, n2:]])
    if C.shape[0] == 0:
        return sig_lo, sig_hi, 0.0, 0.0
    ev = np.linalg.eigvalsh(C @ C.T)
    nu_lo, nu_hi = float(ev[0]), float(ev[-1])
    if R_tilde is not None:
        Ct = C @ R_tilde
        evt = np.linalg.eigvalsh(Ct @ Ct.T)
        nu_lo = max(nu_lo, float(evt[0]))
        nu_hi = max(nu_hi, float(evt[-1]))
    return sig_lo, sig_hi, nu_lo, nu_hi


def kappa0_constant(sigma_lower, sigma_upper, eta_lower, eta_upper):
    """Lipschitz-type constant sqrt(2)(s_hi + (s_lo e_lo)^-2 (s_hi e_hi)^2)."""
    prod_lo = sigma_lower * eta_lower
    if prod_lo == 0.0 or not math.isfinite(sigma_upper):
        return float("inf")
    return math.sqrt(2.0) * (
        sigma_upper + prod_lo ** -2.0 * (sigma_upper * eta_upper) ** 2.0)


@dataclass(frozen=True)
class RateConstants:
    """Constants of the local contraction-rate bound.

    ``rho1`` bounds the primal distance ratio and scales like twice
    ``rho0``; the dual-side constant has no computable closed form, so
    ``rho2_proxy`` is NaN here and gets fitted from an empirical sweep.
    Values are estimates when ``spectrum_multiplicity`` is set (the bases
    are then non-unique and the extrema are bracketed by sampling).
    """

    nu_lower_0: float
    nu_upper_0: float
    nu_lower: float
    nu_upper: float
    sigma_lower: float
    sigma_upper: float
    eta_lower: float
    eta_upper: float
    c0: float
    c_bar: float
    kappa0: float
    rho0: float
    rho1: float
    rho2_proxy: float
    spectrum_multiplicity: bool

    def as_dict(self):
        return {
            "nu_lower_0": self.nu_lower_0,
            "nu_upper_0": self.nu_upper_0,
            "nu_lower": self.nu_lower,
            "nu_upper": self.nu_upper,
            "sigma_lower": self.sigma_lower,
            "sigma_upper": self.sigma_upper,
            "eta_lower": self.eta_lower,
            "eta_upper": self.eta_upper,
            "c0": self.c0,
            "c_bar": self.c_bar,
            "kappa0": self.kappa0,
            "rho0": self.rho0,
            "rho1": self.rho1,
            "rho2_proxy": self.rho2_proxy,
            "spectrum_multiplicity": self.spectrum_multiplicity,
        }


def rate_constants(problem, x, multipliers, c0=10.0,
                   c_grid=(10.0, 100.0, 1000.0, 10000.0), rotations=32,
                   seed=0, group_tol=1e-8, deg_tol=1e-10):
    """Evaluate the constants entering the contraction-rate bound.

    The singular-value bracket is exact when the relevant spectra are
    simple; with multiplicities the bases are non-unique and ``rotations``
    random intra-group rotations widen the bracket (flagged in the
    result).  The uniform curvature bracket (eta) is estimated from the
    split-penalty curvature model over ``c_grid`` with the base weight
    ``c0``; it is an estimate, not a certified constant.

    Raises
    ------
    DegenerateSpectrum
        When a ratio-table denominator falls below ``deg_tol``.
    """
    blocks = cone_blocks(problem, x, multipliers, group_tol)
    nus = _nu_tables(blocks, deg_tol)
    if nus:
        nu_lower_0 = min(lo for lo, _ in nus.values())
        nu_upper_0 = max(hi for _, hi in nus.values())
    else:
        nu_lower_0 = nu_upper_0 = 0.0

    sig_lo, sig_hi, nu_lo, nu_hi = _sigma_nu_at(blocks)
    if blocks.multiplicity and rotations > 0:
        rng = np.random.RandomState(seed)
        for _ in range(rotations):
            rotated = cone_blocks(problem, x, multipliers, group_tol, rng=rng)
            s_lo, s_hi, n_lo, n_hi = _sigma_nu_at(rotated)
            sig_lo = min(sig_lo, s_lo)
            sig_hi = max(sig_hi, s_hi)
            nu_lo = min(nu_lo, n_lo)
            nu_hi = max(nu_hi, n_hi)

    eta_lower = float("inf")
    eta_upper = float("-inf")
    for c in c_grid:
        low = split_penalty_matrix(problem, x, multipliers, c0, float(c),
                                   free=0.0, blocks=blocks)
        high = split_penalty_matrix(problem, x, multipliers, c0, float(c),
                                    free=1.0, blocks=blocks)
        eta_lower = min(eta_lower, float(np.linalg.eigvalsh(low)[0]))
        eta_upper = max(eta_upper, float(np.linalg.eigvalsh(high)[-1]))

    c_bar = max(
        (2.0 + math.sqrt(2.0)) * c0,
        (sig_hi * eta_upper - c0) ** 2 / c0,
        (sig_lo * eta_lower / 2.0 - c0) ** 2 / c0,
    )
    kappa0 = kappa0_constant(sig_lo, sig_hi, eta_lower, eta_upper)
    terms = [128.0 * nu_upper_0 ** 2, 4.0 * kappa0 ** 2]
    for key, factor in (("a_bS", 8.0), ("a_bL", 16.0), ("a_c", 32.0),
                        ("c_bU", 64.0), ("c_bS", 128.0)):
        if key in nus:
            terms.append(factor * nus[key][1] ** 2)
    if eta_lower > 0.0 and math.isfinite(sig_hi):
        rho0 = math.sqrt(
            nu_hi * sig_hi * sig_lo ** -2.0 * eta_lower ** -2.0 * max(terms))
        rho1 = 2.0 * rho0
    else:
        rho0 = float("nan")
        rho1 = float("nan")
    return RateConstants(
        nu_lower_0=nu_lower_0,
        nu_upper_0=nu_upper_0,
        nu_lower=nu_lo,
        nu_upper=nu_hi,
        sigma_lower=sig_lo,
        sigma_upper=sig_hi,
        eta_lower=eta_lower,
        eta_upper=eta_upper,
        c0=float(c0),
        c_bar=float(c_bar),
        kappa0=float(kappa0),
        rho0=rho0,
        rho1=rho1,
        rho2_proxy=float("nan"),
        spectrum_multiplicity=blocks.multiplicity,
    )


# ----------------------------------------------------------------------------
# empirical rate sweep
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    """Measured contraction ratios over a penalty grid and their fit.

    ``ratios[j]`` is the median per-iteration contraction of the dual
    distance for grid point j (NaN when the run is excluded);
    ``predicted[j]`` is ``rho2_proxy / c_j`` with the proxy taken from the
    fit intercept.  ``slope`` is None when fewer than two grid points
    produced usable ratios.
    """

    penalties: Tuple[float, ...]
    ratios: Tuple[float, ...]
    iterations: Tuple[int, ...]
    converged: Tuple[bool, ...]
    slope: Optional[float]
    intercept: Optional[float]
    r_squared: Optional[float]
    rho2_proxy: Optional[float]
    predicted: Tuple[float, ...]
    assumptions_unverified: bool

    def as_dict(self):
        return {
            "penalties": list(self.penalties),
            "ratios": list(self.ratios),
            "iterations": list(self.iterations),
            "converged": list(self.converged),
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "rho2_proxy": self.rho2_proxy,
            "predicted": list(self.predicted),
            "assumptions_unverified": self.assumptions_unverified,
        }


def _unit_perturbation(problem, seed):
    """Deterministic unit-norm multiplier displacement for a given seed."""
    rng = np.random.RandomState(seed)
    q, m, p = problem.q, problem.m, problem.p
    DY = rng.randn(q, q)
    DY = 0.5 * (DY + DY.T)
    dmu = rng.randn(m)
    DG = rng.randn(p, p)
    DG = 0.5 * (DG + DG.T)
    norm = math.sqrt(
        float(np.sum(DY * DY)) + float(dmu @ dmu) + float(np.sum(DG * DG)))
    if norm == 0.0:
        raise InvalidInput("problem has no multiplier coordinates to perturb")
    return MultiplierTriple(DY / norm, dmu / norm, DG / norm)


def _sweep_one(problem, reference, c, delta, u, base_config, floor):
    """Run one fixed-penalty grid point; pure function of its arguments."""
    ref_y = reference.multipliers
    y0 = MultiplierTriple(ref_y.Y + delta * u.Y, ref_y.mu + delta * u.mu,
                          ref_y.Gamma + delta * u.Gamma)
    config = replace(base_config, c0=float(c), penalty_mode="fixed")
    converged = True
    try:
        _, trace = alm_solve(problem, y0, config,
                             np.array(reference.x, dtype=np.float64),
                             reference=reference)
    except (MaxIterations, InnerSolveError) as exc:
        trace = exc.trace
        converged = False
    dists = [float(delta)] + (list(trace.dist_y) if trace is not None else [])
    ratios = [
        e1 / e0
        for e0, e1 in zip(dists, dists[1:])
        if e0 > floor and e1 > floor
    ]
    iterations = len(trace) if trace is not None else 0
    if converged and ratios:
        ratio = float(np.median(ratios))
    else:
        ratio = float("nan")
    return ratio, iterations, converged


def rate_sweep(problem, reference, grid, delta=1e-2, config=None, seed=0,
               ratio_floor=1e-11, target=1e-12):
    """Measure dual contraction ratios over an increasing penalty grid.

    Every grid value starts from the reference multipliers displaced by
    ``delta`` along the same deterministic unit direction derived from
    ``seed``, so the direction-dependent part of the contraction
    constant cancels between grid points, and runs until the KKT
    residual drops below ``target``.  Per-iteration ratios of the dual
    distance are collected while above ``ratio_floor`` and summarized by
    their median; a log-log line through the usable points gives the
    decay slope and the proxy constant for the predicted ratio.

    Non-convergent grid points are excluded from the fit and reported
    with a NaN ratio.  The ``assumptions_unverified`` flag is set when
    the nondegeneracy or second-order check fails (or cannot run) at the
    reference point.
    """
    grid = [float(c) for c in grid]
    if not grid:
        raise InvalidInput("penalty grid is empty")
    if any(c <= 0.0 for c in grid):
        raise InvalidInput("penalty grid values must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidInput("penalty grid must be strictly increasing")
    if not delta > 0.0:
        raise InvalidInput("perturbation radius must be positive")
    ref_res = kkt_residual(problem, reference.x, reference.multipliers.Y,
                           reference.multipliers.mu,
                           reference.multipliers.Gamma)
    if ref_res.total > 1e-10:
        raise InvalidInput(
            f"reference KKT residual {ref_res.total:.3e} exceeds 1e-10")

    try:
        nondeg = nondegeneracy_check(problem, reference.x,
                                     reference.multipliers)
        sosc = strong_sosc_check(problem, reference.x, reference.multipliers)
        unverified = not (nondeg.holds and sosc.holds)
    except (NotAKKTPoint, NotASubgradient, DegenerateSpectrum, InvalidInput):
        unverified = True

    base = config if config is not None else ALMConfig(
        outer_tol=target, max_outer=60)
    u = _unit_perturbation(problem, seed)
    results = [
        _sweep_one(problem, reference, c, delta, u, base, ratio_floor)
        for c in grid
    ]
    ratios = tuple(r for r, _, _ in results)
    iterations = tuple(i for _, i, _ in results)
    converged = tuple(c for _, _, c in results)

    usable = [
        (c, r)
        for c, r, ok in zip(grid, ratios, converged)
        if ok and math.isfinite(r) and r > 0.0
    ]
    slope = intercept = r_squared = rho2_proxy = None
    if len(usable) == 1:
        rho2_proxy = usable[0][1] * usable[0][0]
    elif len(usable) >= 2:
        log_c = np.log(np.array([c for c, _ in usable]))
        log_r = np.log(np.array([r for _, r in usable]))
        slope_v, intercept_v = np.polyfit(log_c, log_r, 1)
        slope = float(slope_v)
        intercept = float(intercept_v)
        fitted = slope_v * log_c + intercept_v
        ss_res = float(np.sum((log_r - fitted) ** 2))
        ss_tot = float(np.sum((log_r - log_r.mean()) ** 2))
        r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
        rho2_proxy = float(math.exp(intercept_v))
    predicted = tuple(
        rho2_proxy / c if rho2_proxy is not None else float("nan")
        for c in grid
    )
    return RateFit(
        penalties=tuple(grid),
        ratios=ratios,
        iterations=iterations,
        converged=converged,
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        rho2_proxy=rho2_proxy,
        predicted=predicted,
        assumptions_unverified=unverified,
    )
