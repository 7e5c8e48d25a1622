"""Augmented Lagrangian method.

Outer loop: minimize the augmented Lagrangian in x, update the multiplier
triple through the closed-form maps, optionally grow the penalty, stop on
the KKT residual.  Inner loop: Newton's method on the continuously
differentiable (but not twice differentiable) augmented Lagrangian, using
generalized-Hessian elements with a Levenberg shift and an Armijo line
search.  Everything here is deterministic: identical inputs produce
bit-identical traces.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import InnerSolveError, InvalidInput, MaxIterations
from .problem import (
    KKTPoint,
    MultiplierTriple,
    aug_lagrangian_grad,
    aug_lagrangian_value,
    kkt_residual,
    multiplier_maps,
    newton_matrix_element,
    triple_diff_norm,
)

__all__ = [
    "InnerConfig",
    "InnerStats",
    "ALMConfig",
    "ALMTrace",
    "inner_minimize",
    "penalty_update",
    "alm_solve",
]

_MAX_SHIFT_DOUBLINGS = 20
_MAX_BACKTRACKS = 60
# kink classification inside the iteration matrix: the Newton model must be
# the derivative of the gradient map as computed, so eigenvalues are
# classified by their computed sign exactly and the free-choice tables apply
# only on exact machine kinks.  Any positive window here lets a hovering
# near-zero eigenvalue take the zero branch while the projection it feeds
# takes the sign branch, leaving a penalty-weighted rank-one error in the
# model that stalls the inner loop just above tight tolerances.
_KINK_TOL = 0.0


@dataclass(frozen=True)
class InnerConfig:
    """Newton inner-loop parameters.

    ``grad_tol`` is absolute; ``grad_tol_rel`` scales the previous outer
    residual into an additional (looser) target, giving a forcing sequence
    when positive.  The Levenberg shift starts at
    ``levenberg_shift_initial`` and doubles until the generalized Hessian
    clears ``pd_floor``; after 20 doublings the step falls back to
    steepest descent.
    """

    grad_tol: float = 1e-12
    grad_tol_rel: float = 0.0
    max_iter: int = 100
    armijo_slope: float = 1e-4
    backtrack: float = 0.5
    levenberg_shift_initial: float = 1e-8
    pd_floor: float = 1e-10

    def __post_init__(self):
        if not self.grad_tol > 0.0:
            raise InvalidInput("grad_tol must be positive")
        if self.grad_tol_rel < 0.0:
            raise InvalidInput("grad_tol_rel must be nonnegative")
        if self.max_iter < 1:
            raise InvalidInput("max_iter must be at least 1")
        if not 0.0 < self.armijo_slope < 0.5:
            raise InvalidInput("armijo_slope must lie in (0, 1/2)")
        if not 0.0 < self.backtrack < 1.0:
            raise InvalidInput("backtrack must lie in (0, 1)")
        if not self.levenberg_shift_initial > 0.0:
            raise InvalidInput("levenberg_shift_initial must be positive")
        if not self.pd_floor > 0.0:
            raise InvalidInput("pd_floor must be positive")


@dataclass(frozen=True)
class InnerStats:
    iterations: int
    grad_norm: float
    value: float
    shifted_steps: int
    steepest_steps: int


@dataclass(frozen=True)
class ALMConfig:
    """Outer-loop parameters.

    ``penalty_mode`` is "fixed" (c stays at c0, used by rate experiments)
    or "adaptive" (multiply by kappa whenever the KKT residual fails to
    drop by residual_decrease_ratio).
    """

    c0: float = 10.0
    kappa: float = 10.0
    penalty_mode: str = "adaptive"
    outer_tol: float = 1e-8
    max_outer: int = 50
    inner: InnerConfig = field(default_factory=InnerConfig)
    residual_decrease_ratio: float = 0.25
    c_max: float = 1e12

    def __post_init__(self):
        if not self.c0 > 0.0:
            raise InvalidInput("c0 must be positive")
        if not self.kappa > 1.0:
            raise InvalidInput("kappa must exceed 1")
        if self.penalty_mode not in ("fixed", "adaptive"):
            raise InvalidInput(f"unknown penalty_mode {self.penalty_mode!r}")
        if not self.outer_tol > 0.0:
            raise InvalidInput("outer_tol must be positive")
        if self.max_outer < 1:
            raise InvalidInput("max_outer must be at least 1")
        if not 0.0 < self.residual_decrease_ratio < 1.0:
            raise InvalidInput("residual_decrease_ratio must lie in (0, 1)")
        if not self.c_max >= self.c0:
            raise InvalidInput("c_max must be at least c0")


@dataclass
class ALMTrace:
    """Per-outer-iteration record of an ALM run.

    Distances to the reference KKT point are NaN when no reference is
    supplied; ``exceeded_trust`` flips if an iterate leaves the reference
    ball of radius ``trust_radius``.
    """

    penalties: List[float] = field(default_factory=list)
    points: List[np.ndarray] = field(default_factory=list)
    multipliers: List[MultiplierTriple] = field(default_factory=list)
    residuals: List[object] = field(default_factory=list)
    inner_iterations: List[int] = field(default_factory=list)
    dist_x: List[float] = field(default_factory=list)
    dist_y: List[float] = field(default_factory=list)
    exceeded_trust: bool = False

    def append_row(self, c, x, y, res, inner_iters, dx, dy):
        self.penalties.append(float(c))
        self.points.append(np.array(x))
        self.multipliers.append(y)
        self.residuals.append(res)
        self.inner_iterations.append(int(inner_iters))
        self.dist_x.append(float(dx))
        self.dist_y.append(float(dy))

    def __len__(self):
        return len(self.penalties)


# ----------------------------------------------------------------------------
# inner Newton loop
# ----------------------------------------------------------------------------

def _newton_direction(A, grad, cfg):
    """Levenberg-shifted Newton direction; returns (d, shifted, steepest)."""
    lmin = float(np.linalg.eigvalsh(A).min()) if A.size else 0.0
    shift = 0.0
    shifted = False
    if lmin < cfg.pd_floor:
        shift = cfg.levenberg_shift_initial
        doublings = 0
        while lmin + shift < cfg.pd_floor and doublings < _MAX_SHIFT_DOUBLINGS:
            shift *= 2.0
            doublings += 1
        if lmin + shift < cfg.pd_floor:
            return -grad, False, True
        shifted = True
    d = np.linalg.solve(A + shift * np.eye(A.shape[0]), -grad)
    if grad @ d >= 0.0:
        return -grad, shifted, True
    return d, shifted, False


def inner_minimize(problem, y, c, x0, cfg, outer_residual=None):
    """Minimize the augmented Lagrangian in x at the multiplier block y.

    Stops when the gradient norm falls below
    max(grad_tol, grad_tol_rel * outer_residual).  Raises InnerSolveError
    with the best iterate if max_iter is exhausted first.
    """
    x = np.array(x0, dtype=np.float64)
    tol = cfg.grad_tol
    if outer_residual is not None and cfg.grad_tol_rel > 0.0:
        tol = max(tol, cfg.grad_tol_rel * outer_residual)
    shifted_steps = 0
    steepest_steps = 0
    grad = aug_lagrangian_grad(problem, x, y.Y, y.mu, y.Gamma, c)
    val = aug_lagrangian_value(problem, x, y.Y, y.mu, y.Gamma, c)
    for it in range(cfg.max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            return x, InnerStats(it, gnorm, val, shifted_steps, steepest_steps)
        A = newton_matrix_element(problem, x, y.Y, y.mu, y.Gamma, c,
                                  group_tol=_KINK_TOL)
        d, shifted, steepest = _newton_direction(A, grad, cfg)
        shifted_steps += int(shifted)
        steepest_steps += int(steepest)
        slope = float(grad @ d)
        # absorb round-off: near the minimum the true decrease sinks below
        # the resolution of O(|val|) function values
        noise = 1e-14 * (1.0 + abs(val))
        if -slope <= 1e-12 * (1.0 + abs(val)):
            # predicted decrease is within value noise, so the Armijo test
            # can no longer measure progress; accept the full step on
            # gradient contraction instead
            trial = x + d
            tgrad = aug_lagrangian_grad(problem, trial, y.Y, y.mu, y.Gamma, c)
            if float(np.linalg.norm(tgrad)) <= 0.5 * gnorm:
                x = trial
                grad = tgrad
                val = aug_lagrangian_value(problem, x, y.Y, y.mu, y.Gamma, c)
                continue
        t = 1.0
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            trial = x + t * d
            tval = aug_lagrangian_value(problem, trial, y.Y, y.mu, y.Gamma, c)
            if tval <= val + cfg.armijo_slope * t * slope + noise:
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            raise InnerSolveError(
                f"line search failed at inner iteration {it}",
                best_x=x,
                stats=InnerStats(it, gnorm, val, shifted_steps, steepest_steps),
            )
        x = x + t * d
        val = tval
        grad = aug_lagrangian_grad(problem, x, y.Y, y.mu, y.Gamma, c)
    gnorm = float(np.linalg.norm(grad))
    if gnorm <= tol:
        return x, InnerStats(cfg.max_iter, gnorm, val, shifted_steps, steepest_steps)
    raise InnerSolveError(
        f"inner loop exhausted {cfg.max_iter} iterations (grad {gnorm:.3e} > {tol:.1e})",
        best_x=x,
        stats=InnerStats(cfg.max_iter, gnorm, val, shifted_steps, steepest_steps),
    )


# ----------------------------------------------------------------------------
# outer loop
# ----------------------------------------------------------------------------

def penalty_update(residual_now, residual_prev, c_k, config):
    """Next penalty: grow by kappa when the residual stalls (adaptive mode)."""
    if config.penalty_mode == "fixed":
        return c_k
    if residual_prev is not None and \
            residual_now > config.residual_decrease_ratio * residual_prev:
        return min(config.kappa * c_k, config.c_max)
    return c_k


def alm_solve(problem, y0, config, x0, reference=None, trust_radius=None):
    """Run the augmented Lagrangian method from (x0, y0).

    Returns (KKTPoint, ALMTrace) on convergence.  Raises MaxIterations
    (carrying the trace and last iterate) if max_outer is exhausted, and
    propagates InnerSolveError (with the partial trace attached) if an
    inner solve stalls.
    """
    trace = ALMTrace()
    x = np.array(x0, dtype=np.float64)
    y = y0
    c = config.c0
    res = kkt_residual(problem, x, y.Y, y.mu, y.Gamma)
    if res.total <= config.outer_tol:
        return KKTPoint(x, y, res), trace
    res_prev = None
    for _k in range(config.max_outer):
        try:
            x, istats = inner_minimize(problem, y, c, x, config.inner,
                                       outer_residual=res_prev)
        except InnerSolveError as exc:
            exc.trace = trace
            raise
        y_next = multiplier_maps(problem, x, y.Y, y.mu, y.Gamma, c)
        res = kkt_residual(problem, x, y_next.Y, y_next.mu, y_next.Gamma)
        dx = dy = float("nan")
        if reference is not None:
            dx = float(np.linalg.norm(x - reference.x))
            dy = triple_diff_norm(y_next, reference.multipliers)
            if trust_radius is not None and dx > trust_radius:
                trace.exceeded_trust = True
        trace.append_row(c, x, y_next, res, istats.iterations, dx, dy)
        y = y_next
        if res.total <= config.outer_tol:
            return KKTPoint(x, y, res), trace
        c = penalty_update(res.total, res_prev, c, config)
        res_prev = res.total
    raise MaxIterations(
        f"outer loop exhausted {config.max_outer} iterations "
        f"(residual {res.total:.3e} > {config.outer_tol:.1e})",
        point=KKTPoint(x, y, res),
        trace=trace,
    )
