"""Elementwise pair-table kernels.

The two hot loops of the package build dense tables indexed by eigenvalue
pairs: the positive-part difference-quotient table driving directional
derivatives of the semidefinite projection, and the soft-threshold
difference-quotient table driving directional derivatives of the
nuclear-norm prox.  Both are branchy elementwise kernels, so they carry a
numba-compiled path with a vectorized numpy fallback.  Set
``SDNOP_NO_NUMBA=1`` to force the numpy path.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("SDNOP_NO_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)


# ----------------------------------------------------------------------------
# positive-part pair table (semidefinite projection)
# ----------------------------------------------------------------------------

def psd_pair_table_numpy(lam, zero_mask):
    """Difference-quotient table of t -> max(t, 0) on eigenvalue pairs.

    Entry (i, j) is (max(lam_i,0) + max(lam_j,0)) / (|lam_i| + |lam_j|),
    the slope of the positive part between lam_i and -lam_j.  Pairs where
    both eigenvalues are flagged zero get 0; the caller overlays whatever
    element of the interval [0, 1] it has committed to on that block.

    Parameters
    ----------
    lam : ndarray, shape (p,)
        Eigenvalues.
    zero_mask : ndarray of bool, shape (p,)
        Marks eigenvalues treated as exactly zero.

    Returns
    -------
    ndarray, shape (p, p)
    """
    lam = np.where(zero_mask, 0.0, lam)
    pos = np.maximum(lam, 0.0)
    num = pos[:, None] + pos[None, :]
    den = np.abs(lam)[:, None] + np.abs(lam)[None, :]
    out = np.zeros((lam.size, lam.size))
    np.divide(num, den, out=out, where=den > 0.0)
    return out


def _psd_pair_table_loops(lam, zero_mask):
    p = lam.size
    out = np.zeros((p, p))
    for i in range(p):
        li = 0.0 if zero_mask[i] else lam[i]
        for j in range(p):
            lj = 0.0 if zero_mask[j] else lam[j]
            den = abs(li) + abs(lj)
            if den > 0.0:
                out[i, j] = (max(li, 0.0) + max(lj, 0.0)) / den
    return out


# ----------------------------------------------------------------------------
# soft-threshold pair table (nuclear-norm prox)
# ----------------------------------------------------------------------------

def soft_pair_table_numpy(vals, tau, kink_flags):
    """Difference-quotient table of the scalar soft threshold at level tau.

    ``vals`` holds distinct eigenvalue representatives.  Off-diagonal entry
    (k, l) is (p(v_k) - p(v_l)) / (v_k - v_l) with p the soft threshold.
    Diagonal entries carry the slope (1 outside [-tau, tau], 0 inside);
    entries whose ``kink_flags`` is nonzero (+1 at +tau, -1 at -tau) get 0,
    and the caller overlays its committed slope element there.

    Returns
    -------
    ndarray, shape (r, r)
    """
    vals = np.where(kink_flags > 0, tau, np.where(kink_flags < 0, -tau, vals))
    pv = np.sign(vals) * np.maximum(np.abs(vals) - tau, 0.0)
    num = pv[:, None] - pv[None, :]
    den = vals[:, None] - vals[None, :]
    out = np.zeros((vals.size, vals.size))
    np.divide(num, den, out=out, where=den != 0.0)
    slope = np.where((np.abs(vals) > tau) & (kink_flags == 0), 1.0, 0.0)
    np.fill_diagonal(out, slope)
    return out


def _soft_pair_table_loops(vals, tau, kink_flags):
    r = vals.size
    snapped = np.empty(r)
    pv = np.empty(r)
    for k in range(r):
        v = vals[k]
        if kink_flags[k] > 0:
            v = tau
        elif kink_flags[k] < 0:
            v = -tau
        snapped[k] = v
        a = abs(v) - tau
        pv[k] = 0.0 if a <= 0.0 else (a if v > 0.0 else -a)
    out = np.zeros((r, r))
    for k in range(r):
        for l in range(r):
            if k == l:
                if kink_flags[k] == 0 and abs(snapped[k]) > tau:
                    out[k, l] = 1.0
            else:
                den = snapped[k] - snapped[l]
                if den != 0.0:
                    out[k, l] = (pv[k] - pv[l]) / den
    return out


# ----------------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------------

if HAS_NUMBA:
    psd_pair_table_jit = njit(cache=True)(_psd_pair_table_loops)
    soft_pair_table_jit = njit(cache=True)(_soft_pair_table_loops)
else:  # pragma: no cover
    psd_pair_table_jit = None
    soft_pair_table_jit = None


def psd_pair_table(lam, zero_mask):
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    zero_mask = np.ascontiguousarray(zero_mask, dtype=np.bool_)
    if USE_NUMBA:
        return psd_pair_table_jit(lam, zero_mask)
    return psd_pair_table_numpy(lam, zero_mask)


def soft_pair_table(vals, tau, kink_flags):
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    kink_flags = np.ascontiguousarray(kink_flags, dtype=np.int8)
    if USE_NUMBA:
        return soft_pair_table_jit(vals, float(tau), kink_flags)
    return soft_pair_table_numpy(vals, float(tau), kink_flags)
