"""Problem model for nuclear-norm composite matrix optimization.

A problem instance is

    minimize  f(x) + ||F(x)||_*
    subject to  h(x) = 0,  g(x) positive semidefinite,

with f scalar, F and g symmetric-matrix valued, and h vector valued.  This
module owns the evaluation oracles, the (augmented) Lagrangian and its
derivatives, KKT residuals, the multiplier update maps, generalized-Hessian
elements of the augmented Lagrangian, and the local dual function.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput
from .nuclear import (
    _choice_table,
    grad_moreau_env,
    moreau_env,
    nuclear_norm,
    prox_divided_diff,
)
from .psd_cone import proj_bsub_element, project_psd
from .spectral import as_symmetric

__all__ = [
    "ProblemOracle",
    "QuadraticMatrixMap",
    "QuadraticProblem",
    "MultiplierTriple",
    "KKTResidual",
    "KKTPoint",
    "triple_diff_norm",
    "lagrangian",
    "grad_x_lagrangian",
    "hess_xx_lagrangian",
    "aug_lagrangian_value",
    "aug_lagrangian_grad",
    "multiplier_maps",
    "newton_matrix_element",
    "kkt_residual",
    "dual_value_and_grad",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "save_instance",
]


def _check_c(c):
    if not c > 0.0:
        raise InvalidInput(f"penalty parameter must be positive, got {c}")


def apply_jac(jac, d):
    """Directional image sum_i d_i (d/dx_i) of a stacked Jacobian (n, k, k)."""
    return np.tensordot(d, jac, axes=1)


def adjoint_jac(jac, S):
    """Adjoint of a stacked Jacobian: coordinate pairings <(d/dx_i), S>."""
    return np.tensordot(jac, S, axes=([1, 2], [0, 1]))


# ----------------------------------------------------------------------------
# oracle interface
# ----------------------------------------------------------------------------

class ProblemOracle:
    """Evaluation oracle for one problem instance.

    Subclasses set the dimensions ``n`` (primal), ``q`` (matrix size of F),
    ``m`` (equality count), ``p`` (matrix size of g) and override the
    evaluators for the parts they use.  The defaults below implement the
    empty blocks, so an equality-only problem only needs f and h.

    Oracles must be re-entrant: evaluations may run concurrently and must
    not mutate shared state.
    """

    n = 0
    q = 0
    m = 0
    p = 0

    # -- objective ----------------------------------------------------------
    def f(self, x):
        raise NotImplementedError

    def grad_f(self, x):
        raise NotImplementedError

    def hess_f(self, x):
        raise NotImplementedError

    # -- matrix map under the nuclear norm -----------------------------------
    def F(self, x):
        return np.zeros((self.q, self.q))

    def jac_F(self, x):
        """Stacked partial derivatives, shape (n, q, q)."""
        return np.zeros((self.n, self.q, self.q))

    def hess_F_contract(self, x, Y):
        """Matrix of pairings <Y, d^2 F / dx_i dx_j>, shape (n, n)."""
        return np.zeros((self.n, self.n))

    # -- equality constraints -------------------------------------------------
    def h(self, x):
        return np.zeros(self.m)

    def jac_h(self, x):
        return np.zeros((self.m, self.n))

    def hess_h_contract(self, x, mu):
        return np.zeros((self.n, self.n))

    # -- semidefinite constraint ----------------------------------------------
    def g(self, x):
        return np.zeros((self.p, self.p))

    def jac_g(self, x):
        return np.zeros((self.n, self.p, self.p))

    def hess_g_contract(self, x, Gamma):
        return np.zeros((self.n, self.n))


# ----------------------------------------------------------------------------
# quadratic maps: the serializable concrete oracle
# ----------------------------------------------------------------------------

def _sym_stack(A, name):
    A = np.asarray(A, dtype=np.float64)
    flat = A.reshape(-1, A.shape[-2], A.shape[-1]) if A.size else A
    for M in flat:
        if np.abs(M - M.T).max(initial=0.0) > 1e-8 * (1.0 + np.abs(M).max(initial=0.0)):
            raise InvalidInput(f"{name} has a non-symmetric slice")
    return 0.5 * (A + np.swapaxes(A, -2, -1))


class QuadraticMatrixMap:
    """Matrix-valued quadratic map x -> A0 + sum_i x_i A_i + (1/2) sum_ij x_i x_j A_ij.

    All coefficient matrices are symmetric k-by-k; ``Aij`` is optional
    (affine map) and must be symmetric under swapping i and j.  Quadratic
    maps have exact constant second derivatives, which keeps oracle error
    out of rate experiments.
    """

    def __init__(self, A0, Ai, Aij=None):
        self.A0 = _sym_stack(as_symmetric(A0, "A0"), "A0")
        self.Ai = _sym_stack(Ai, "Ai")
        k = self.A0.shape[0]
        n = self.Ai.shape[0]
        if self.Ai.shape != (n, k, k):
            raise InvalidInput(f"Ai must be (n, {k}, {k}), got {self.Ai.shape}")
        if Aij is None:
            self.Aij = None
        else:
            self.Aij = _sym_stack(Aij, "Aij")
            if self.Aij.shape != (n, n, k, k):
                raise InvalidInput(f"Aij must be ({n}, {n}, {k}, {k})")
            if np.abs(self.Aij - np.swapaxes(self.Aij, 0, 1)).max(initial=0.0) > 1e-12:
                raise InvalidInput("Aij must be symmetric in the index pair")
        self.n = n
        self.k = k

    def value(self, x):
        V = self.A0 + np.tensordot(x, self.Ai, axes=1)
        if self.Aij is not None:
            V = V + 0.5 * np.tensordot(x, np.tensordot(x, self.Aij, axes=(0, 0)), axes=(0, 0))
        return V

    def jac(self, x):
        J = self.Ai
        if self.Aij is not None:
            J = J + np.tensordot(x, self.Aij, axes=(0, 0))
        return J

    def hess_contract(self, S):
        if self.Aij is None:
            return np.zeros((self.n, self.n))
        return np.tensordot(self.Aij, S, axes=([2, 3], [0, 1]))


def _empty_map(n, k):
    return QuadraticMatrixMap(np.zeros((k, k)), np.zeros((n, k, k)))


class QuadraticProblem(ProblemOracle):
    """Serializable instance with quadratic f, F, g and affine h.

    ``f`` is c0 + b.x + (1/2) x.H.x; ``h`` rows are affine (A x + r); F and
    g are QuadraticMatrixMap.  An optional reference KKT point rides along
    for diagnostics and rate experiments.
    """

    def __init__(self, f_c0, f_b, f_H, F_map, h_A, h_r, g_map, reference=None):
        self.f_c0 = float(f_c0)
        self.f_b = np.asarray(f_b, dtype=np.float64).reshape(-1)
        n = self.f_b.size
        self.f_H = as_symmetric(np.asarray(f_H, dtype=np.float64), "f.H")
        if self.f_H.shape != (n, n):
            raise InvalidInput(f"f.H must be {n}x{n}, got {self.f_H.shape}")
        self.F_map = F_map if F_map is not None else _empty_map(n, 0)
        self.g_map = g_map if g_map is not None else _empty_map(n, 0)
        if self.F_map.n != n or self.g_map.n != n:
            raise InvalidInput("map coefficient count does not match dim n")
        self.h_A = np.asarray(h_A, dtype=np.float64).reshape(-1, n) if np.size(h_A) \
            else np.zeros((0, n))
        self.h_r = np.asarray(h_r, dtype=np.float64).reshape(-1)
        if self.h_r.size != self.h_A.shape[0]:
            raise InvalidInput("h rows and constants disagree")
        self.n = n
        self.q = self.F_map.k
        self.m = self.h_A.shape[0]
        self.p = self.g_map.k
        self.reference = reference

    # -- oracle implementation ------------------------------------------------
    def f(self, x):
        return float(self.f_c0 + self.f_b @ x + 0.5 * x @ self.f_H @ x)

    def grad_f(self, x):
        return self.f_b + self.f_H @ x

    def hess_f(self, x):
        return self.f_H.copy()

    def F(self, x):
        return self.F_map.value(x)

    def jac_F(self, x):
        return self.F_map.jac(x)

    def hess_F_contract(self, x, Y):
        return self.F_map.hess_contract(Y)

    def h(self, x):
        return self.h_A @ x + self.h_r

    def jac_h(self, x):
        return self.h_A.copy()

    def g(self, x):
        return self.g_map.value(x)

    def jac_g(self, x):
        return self.g_map.jac(x)

    def hess_g_contract(self, x, Gamma):
        return self.g_map.hess_contract(Gamma)


# ----------------------------------------------------------------------------
# multipliers and KKT bookkeeping
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierTriple:
    """Multiplier block (Y, mu, Gamma) for the three constraint parts."""

    Y: np.ndarray
    mu: np.ndarray
    Gamma: np.ndarray

    @staticmethod
    def zeros(problem):
        return MultiplierTriple(
            np.zeros((problem.q, problem.q)),
            np.zeros(problem.m),
            np.zeros((problem.p, problem.p)),
        )

    def copy(self):
        return MultiplierTriple(self.Y.copy(), self.mu.copy(), self.Gamma.copy())


def triple_diff_norm(a, b):
    """Euclidean norm of the stacked difference of two multiplier triples."""
    return float(np.sqrt(
        np.sum((a.Y - b.Y) ** 2)
        + np.sum((a.mu - b.mu) ** 2)
        + np.sum((a.Gamma - b.Gamma) ** 2)
    ))


@dataclass(frozen=True)
class KKTResidual:
    """Componentwise first-order optimality residual (all nonnegative)."""

    stationarity: float
    subgradient: float
    equality: float
    cone: float
    dual: float
    complementarity: float

    @property
    def total(self):
        return max(self.stationarity, self.subgradient, self.equality,
                   self.cone, self.dual, self.complementarity)

    def as_dict(self):
        return {
            "stationarity": self.stationarity,
            "subgradient": self.subgradient,
            "equality": self.equality,
            "cone": self.cone,
            "dual": self.dual,
            "complementarity": self.complementarity,
            "total": self.total,
        }


@dataclass(frozen=True)
class KKTPoint:
    x: np.ndarray
    multipliers: MultiplierTriple
    residual: Optional[KKTResidual] = None


# ----------------------------------------------------------------------------
# Lagrangian and augmented Lagrangian
# ----------------------------------------------------------------------------

def lagrangian(problem, x, Y, mu, Gamma):
    """f + <Y, F> + <mu, h> - <Gamma, g>."""
    val = problem.f(x)
    if problem.q:
        val += float(np.sum(Y * problem.F(x)))
    if problem.m:
        val += float(mu @ problem.h(x))
    if problem.p:
        val -= float(np.sum(Gamma * problem.g(x)))
    return val


def grad_x_lagrangian(problem, x, Y, mu, Gamma):
    grad = problem.grad_f(x)
    if problem.q:
        grad = grad + adjoint_jac(problem.jac_F(x), Y)
    if problem.m:
        grad = grad + problem.jac_h(x).T @ mu
    if problem.p:
        grad = grad - adjoint_jac(problem.jac_g(x), Gamma)
    return grad


def hess_xx_lagrangian(problem, x, Y, mu, Gamma):
    H = problem.hess_f(x)
    if problem.q:
        H = H + problem.hess_F_contract(x, Y)
    if problem.m:
        H = H + problem.hess_h_contract(x, mu)
    if problem.p:
        H = H - problem.hess_g_contract(x, Gamma)
    return 0.5 * (H + H.T)


def aug_lagrangian_value(problem, x, Y, mu, Gamma, c):
    """Augmented Lagrangian with penalty c.

    Objective plus the smoothed nuclear-norm term at the shifted argument
    F(x) + Y/c, the quadratic equality penalty, and the shifted projection
    penalty for the semidefinite constraint.
    """
    _check_c(c)
    val = problem.f(x)
    if problem.q:
        Z = problem.F(x) + Y / c
        val += moreau_env(Z, 1.0 / c) - np.sum(Y * Y) / (2.0 * c)
    if problem.m:
        hx = problem.h(x)
        val += float(mu @ hx) + 0.5 * c * float(hx @ hx)
    if problem.p:
        M = Gamma - c * problem.g(x)
        P = project_psd(M)[0]
        val += (np.sum(P * P) - np.sum(Gamma * Gamma)) / (2.0 * c)
    return float(val)


def aug_lagrangian_grad(problem, x, Y, mu, Gamma, c):
    """Gradient in x of the augmented Lagrangian (continuously differentiable)."""
    _check_c(c)
    grad = problem.grad_f(x)
    if problem.q:
        Z = problem.F(x) + Y / c
        Yhat = grad_moreau_env(Z, 1.0 / c)
        grad = grad + adjoint_jac(problem.jac_F(x), Yhat)
    if problem.m:
        grad = grad + problem.jac_h(x).T @ (mu + c * problem.h(x))
    if problem.p:
        Ghat = project_psd(Gamma - c * problem.g(x))[0]
        grad = grad - adjoint_jac(problem.jac_g(x), Ghat)
    return grad


def multiplier_maps(problem, x, Y, mu, Gamma, c):
    """One multiplier update at the point x with penalty c.

    Y+ is the envelope gradient at the shifted argument, mu+ the shifted
    equality multiplier, Gamma+ the projection of the shifted semidefinite
    multiplier.  At an exact saddle point the map is a fixed point.
    """
    _check_c(c)
    Yp = grad_moreau_env(problem.F(x) + Y / c, 1.0 / c) if problem.q \
        else np.zeros((0, 0))
    mup = mu + c * problem.h(x) if problem.m else np.zeros(0)
    Gp = project_psd(Gamma - c * problem.g(x))[0] if problem.p \
        else np.zeros((0, 0))
    return MultiplierTriple(Yp, mup, Gp)


# ----------------------------------------------------------------------------
# generalized Hessian of the augmented Lagrangian
# ----------------------------------------------------------------------------

def newton_matrix_element(problem, x, Y, mu, Gamma, c,
                          up_choice="zero", low_choice="zero",
                          beta_choice="zero", group_tol=1e-8):
    """One element of the generalized Hessian of the augmented Lagrangian.

    Lagrangian curvature at the updated multipliers plus the three
    constraint-curvature blocks: the envelope generalized Hessian pushed
    through DF, the exact equality block c Jh^T Jh, and a projection
    B-subdifferential element pushed through Dg.  The ``*_choice``
    arguments commit the free Hadamard blocks where the shifted spectra
    sit exactly on a kink.
    """
    _check_c(c)
    tau = 1.0 / c
    Yhat = grad_moreau_env(problem.F(x) + Y / c, tau) if problem.q \
        else np.zeros((0, 0))
    muhat = mu + c * problem.h(x) if problem.m else np.zeros(0)
    Ghat = project_psd(Gamma - c * problem.g(x))[0] if problem.p \
        else np.zeros((0, 0))
    A = hess_xx_lagrangian(problem, x, Yhat, muhat, Ghat)

    if problem.q:
        dd = prox_divided_diff(problem.F(x) + Y / c, tau, group_tol)
        T = dd.table.copy()
        for k, sign in dd.kink_blocks:
            idx = list(dd.blocks.blocks[k])
            choice = up_choice if sign > 0 else low_choice
            name = "up_choice" if sign > 0 else "low_choice"
            T[np.ix_(idx, idx)] = _choice_table(choice, len(idx), name)
        Gs = np.einsum("ra,iab,bs->irs", dd.eig.basis.T, problem.jac_F(x),
                       dd.eig.basis, optimize=True)
        A = A + c * np.einsum("ikl,kl,jkl->ij", Gs, 1.0 - T, Gs, optimize=True)

    if problem.m:
        J = problem.jac_h(x)
        A = A + c * (J.T @ J)

    if problem.p:
        M = Gamma - c * problem.g(x)
        scale = 1.0 + float(np.linalg.norm(M, 2)) if M.size else 1.0
        elem = proj_bsub_element(M, beta_choice, tol=group_tol * scale)
        P = elem.basis
        Cs = np.einsum("ra,iab,bs->irs", P.T, problem.jac_g(x), P, optimize=True)
        A = A + c * np.einsum("ikl,kl,jkl->ij", Cs, elem.theta.entries, Cs,
                              optimize=True)
    return 0.5 * (A + A.T)


# ----------------------------------------------------------------------------
# KKT residual
# ----------------------------------------------------------------------------

def kkt_residual(problem, x, Y, mu, Gamma):
    """Componentwise KKT residual at (x, Y, mu, Gamma).

    The subgradient component uses the norm characterization of the
    nuclear-norm subdifferential (dual-ball feasibility plus the pairing
    gap), which is continuous in (x, Y); a blockwise eigenstructure test
    would jump when eigenvalues of F(x) cross zero.
    """
    stat = float(np.linalg.norm(grad_x_lagrangian(problem, x, Y, mu, Gamma)))
    sub = 0.0
    if problem.q:
        Fx = problem.F(x)
        Ys = as_symmetric(Y, "Y")
        ball = max(0.0, float(np.abs(np.linalg.eigvalsh(Ys)).max()) - 1.0)
        gap = abs(float(nuclear_norm(Fx)) - float(np.sum(Fx * Ys)))
        sub = max(ball, gap)
    eq = float(np.linalg.norm(problem.h(x))) if problem.m else 0.0
    cone = dual = comp = 0.0
    if problem.p:
        gx = problem.g(x)
        cone = float(np.linalg.norm(gx - project_psd(gx)[0]))
        dual = float(max(0.0, -np.linalg.eigvalsh(as_symmetric(Gamma, "Gamma")).min()))
        comp = float(abs(np.sum(gx * Gamma)))
    return KKTResidual(stat, sub, eq, cone, dual, comp)


# ----------------------------------------------------------------------------
# local dual function
# ----------------------------------------------------------------------------

def dual_value_and_grad(problem, Y, mu, Gamma, c, x0, inner_cfg=None):
    """Local dual value and its gradient at the multiplier block (Y, mu, Gamma).

    Minimizes the augmented Lagrangian in x from x0 and differentiates the
    dual: the gradient components are the scaled multiplier moves, so one
    dual gradient-ascent step with stepsize c reproduces multiplier_maps
    exactly.  Returns (value, gradient triple, inner minimizer).
    """
    from .solver import InnerConfig, inner_minimize

    _check_c(c)
    cfg = inner_cfg if inner_cfg is not None else InnerConfig()
    y = MultiplierTriple(np.asarray(Y, dtype=np.float64),
                         np.asarray(mu, dtype=np.float64),
                         np.asarray(Gamma, dtype=np.float64))
    xc, _stats = inner_minimize(problem, y, c, x0, cfg)
    val = aug_lagrangian_value(problem, xc, y.Y, y.mu, y.Gamma, c)
    plus = multiplier_maps(problem, xc, y.Y, y.mu, y.Gamma, c)
    grad = MultiplierTriple(
        (plus.Y - y.Y) / c,
        problem.h(xc) if problem.m else np.zeros(0),
        (plus.Gamma - y.Gamma) / c,
    )
    return val, grad, xc


# ----------------------------------------------------------------------------
# JSON instance schema
# ----------------------------------------------------------------------------

def _matrix_map_from_dict(d, n, k, name):
    if d is None:
        return None
    try:
        A0 = np.asarray(d["A0"], dtype=np.float64)
        Ai = np.asarray(d["Ai"], dtype=np.float64)
        Aij = d.get("Aij")
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"bad {name} block: {exc}")
    if A0.shape != (k, k):
        raise InvalidInput(f"{name}.A0 must be {k}x{k}, got {A0.shape}")
    if Ai.shape != (n, k, k):
        raise InvalidInput(f"{name}.Ai must be ({n},{k},{k}), got {Ai.shape}")
    if Aij is not None:
        Aij = np.asarray(Aij, dtype=np.float64)
        if Aij.shape != (n, n, k, k):
            raise InvalidInput(f"{name}.Aij must be ({n},{n},{k},{k})")
    return QuadraticMatrixMap(A0, Ai, Aij)


def instance_from_dict(data):
    """Build a QuadraticProblem from the JSON instance schema."""
    if not isinstance(data, dict):
        raise InvalidInput("instance must be a JSON object")
    try:
        n = int(data["n"])
        q = int(data["q"])
        m = int(data["m"])
        p = int(data["p"])
        fblock = data["f"]
        f_c0 = float(fblock["c0"])
        f_b = np.asarray(fblock["b"], dtype=np.float64)
        f_H = np.asarray(fblock["H"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed instance: {exc}")
    if f_b.shape != (n,) or f_H.shape != (n, n):
        raise InvalidInput("f block dims disagree with n")
    rows = data.get("h", [])
    if len(rows) != m:
        raise InvalidInput(f"expected {m} equality rows, got {len(rows)}")
    h_A = np.zeros((m, n))
    h_r = np.zeros(m)
    for i, row in enumerate(rows):
        row = np.asarray(row, dtype=np.float64)
        if row.shape != (n + 1,):
            raise InvalidInput(f"h row {i} must have {n + 1} entries")
        h_A[i] = row[:n]
        h_r[i] = row[n]
    F_map = _matrix_map_from_dict(data.get("F"), n, q, "F")
    g_map = _matrix_map_from_dict(data.get("g"), n, p, "g")
    if q and F_map is None:
        raise InvalidInput("q > 0 but no F block")
    if p and g_map is None:
        raise InvalidInput("p > 0 but no g block")
    reference = None
    ref = data.get("reference_kkt")
    if ref is not None:
        try:
            x = np.asarray(ref["x"], dtype=np.float64)
            Yr = np.asarray(ref["Y"], dtype=np.float64).reshape(q, q)
            mur = np.asarray(ref["mu"], dtype=np.float64).reshape(m)
            Gr = np.asarray(ref["Gamma"], dtype=np.float64).reshape(p, p)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed reference_kkt: {exc}")
        if x.shape != (n,):
            raise InvalidInput("reference_kkt.x has wrong length")
        reference = KKTPoint(x, MultiplierTriple(Yr, mur, Gr))
    return QuadraticProblem(f_c0, f_b, f_H, F_map, h_A, h_r, g_map, reference)


def _matrix_map_to_dict(mp):
    if mp is None or mp.k == 0:
        return None
    out = {"A0": mp.A0.tolist(), "Ai": mp.Ai.tolist()}
    out["Aij"] = mp.Aij.tolist() if mp.Aij is not None else None
    return out


def instance_to_dict(problem):
    """Serialize a QuadraticProblem to the JSON instance schema."""
    data = {
        "n": problem.n,
        "q": problem.q,
        "m": problem.m,
        "p": problem.p,
        "f": {
            "c0": problem.f_c0,
            "b": problem.f_b.tolist(),
            "H": problem.f_H.tolist(),
        },
        "F": _matrix_map_to_dict(problem.F_map),
        "h": np.hstack([problem.h_A, problem.h_r[:, None]]).tolist()
            if problem.m else [],
        "g": _matrix_map_to_dict(problem.g_map),
    }
    if problem.reference is not None:
        ref = problem.reference
        data["reference_kkt"] = {
            "x": ref.x.tolist(),
            "Y": ref.multipliers.Y.tolist(),
            "mu": ref.multipliers.mu.tolist(),
            "Gamma": ref.multipliers.Gamma.tolist(),
        }
    return data


def load_instance(path):
    with open(path, "r") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"not valid JSON: {exc}")
    return instance_from_dict(data)


def save_instance(problem, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(problem), fh, indent=1, sort_keys=True)
        fh.write("\n")
