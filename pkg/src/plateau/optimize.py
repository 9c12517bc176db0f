"""Maximizers of the soft profile log-likelihood.

:func:`bfgs_maximize` (quasi-Newton with a strong Wolfe line search) is
paired with the quadratic boundary and :func:`adam_maximize` with the tanh
network. :func:`multi_start_fit` runs several seeded restarts of either and
keeps the best.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .boundary import DEFAULT_HIDDEN, FAMILIES, BoundaryParams, init_params
from .exceptions import (
    AllRestartsDegenerate,
    ConstantMetric,
    DegeneratePartition,
    InputError,
    NonFiniteValue,
)
from .grid import EvalGrid, TransformSpec
from .likelihood import DEGENERATE_LOGLIK, SoftProfileObjective, soft_mle, soft_weights

log = logging.getLogger(__name__)

__all__ = [
    "Termination",
    "OptimOptions",
    "OptimizeOutcome",
    "RestartRecord",
    "FitResult",
    "bfgs_maximize",
    "adam_maximize",
    "multi_start_fit",
    "PAIRED_OPTIMIZER",
]

PAIRED_OPTIMIZER = {"qp": "bfgs", "nn": "adam"}
DEFAULT_MAX_ITERS = {"bfgs": 500, "adam": 2000}

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


class Termination(str, enum.Enum):
    GRAD_TOL = "GradTol"
    OBJ_TOL = "ObjTol"
    MAX_ITERS = "MaxIters"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class OptimOptions:
    """Optimizer settings.

    ``max_iters=None`` means 500 for BFGS and 2000 for ADAM.
    ``optimizer=None`` picks the optimizer paired with the boundary family.
    ``max_step`` bounds each BFGS step to ``max_step * max(1, |x|)``; the
    soft objective keeps rewarding larger parameter norms, and unbounded
    steps saturate the sigmoid before the boundary shape has settled.
    ``None`` disables the bound.
    ``soften`` lists the factors by which the best restart is shrunk
    before being re-optimized; a sharp fit cannot slide its boundary past
    a neighbouring point, a softened copy can. Empty disables the polish.
    """

    max_iters: int | None = None
    grad_tol: float = 1e-6
    obj_tol: float = 1e-10
    step_size: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    patience: int = 200
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    curvature_eps: float = 1e-10
    max_step: float | None = 0.25
    soften: tuple[float, ...] = (0.3, 0.1)
    polish_rounds: int = 3
    restarts: int = 16
    seed: int = 0
    optimizer: str | None = None
    hidden: int = DEFAULT_HIDDEN
    n_jobs: int = 1

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.obj_tol > 0):
            raise InputError("tolerances must be positive")
        if self.restarts < 1:
            raise InputError("restarts must be >= 1")
        if self.max_iters is not None and self.max_iters < 0:
            raise InputError("max_iters must be >= 0")
        if self.optimizer not in (None, "bfgs", "adam"):
            raise InputError(f"unknown optimizer {self.optimizer!r}")
        if self.hidden < 1:
            raise InputError("hidden width must be >= 1")
        if any(not 0 < f < 1 for f in self.soften):
            raise InputError("soften factors must lie in (0, 1)")
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise InputError("need 0 < c1 < c2 < 1 for the Wolfe conditions")

    def iterations_for(self, optimizer: str) -> int:
        return DEFAULT_MAX_ITERS[optimizer] if self.max_iters is None else self.max_iters


@dataclass
class OptimizeOutcome:
    x: np.ndarray
    value: float
    iterations: int
    reason: Termination
    n_evals: int
    history: list[float] = field(default_factory=list)


def _is_degenerate(value: float) -> bool:
    return value <= DEGENERATE_LOGLIK


class _Counted:
    def __init__(self, fun: Objective):
        self.fun = fun
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        value, grad = self.fun(x)
        return float(value), np.asarray(grad, dtype=float)


def _start(fun: _Counted, x0) -> tuple[np.ndarray, float, np.ndarray]:
    x = np.array(x0, dtype=float)
    value, grad = fun(x)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NonFiniteValue("objective is not finite at the initial point")
    return x, value, grad


def _cubic_min(a, fa, da, b, fb, db) -> float | None:
    # minimizer of the cubic interpolating (a, fa, da) and (b, fb, db)
    d1 = da + db - 3 * (fa - fb) / (a - b)
    rad = d1 * d1 - da * db
    if rad < 0:
        return None
    d2 = np.copysign(np.sqrt(rad), b - a)
    denom = db - da + 2 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return float(t) if np.isfinite(t) else None


def _wolfe_line_search(fun, x, f0, g0, p, alpha0, c1, c2, max_evals=50, alpha_max=np.inf):
    """Strong Wolfe step for minimizing ``fun`` along ``p``.

    Returns ``(alpha, f, g)`` or ``None``. When the bracket collapses before
    the curvature condition holds, the best point satisfying sufficient
    decrease is returned instead.
    """
    d0 = float(g0 @ p)
    evals = 0

    def phi(a):
        nonlocal evals
        evals += 1
        f, g = fun(x + a * p)
        return f, g, float(g @ p)

    def zoom(lo, hi):
        # lo/hi are (alpha, f, g, dphi); lo satisfies sufficient decrease
        while evals < max_evals:
            a_lo, f_lo, _, d_lo = lo
            a_hi, f_hi, _, d_hi = hi
            width = a_hi - a_lo
            if abs(width) <= 1e-14 * max(1.0, abs(a_lo)):
                break
            a = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi) if abs(f_hi) < 1e14 else None
            left, right = sorted((a_lo + 0.1 * width, a_hi - 0.1 * width))
            if a is None or not left <= a <= right:
                a = a_lo + 0.5 * width
            f, g, d = phi(a)
            if f > f0 + c1 * a * d0 or f >= f_lo:
                hi = (a, f, g, d)
            else:
                if abs(d) <= -c2 * d0:
                    return a, f, g
                if d * (a_hi - a_lo) >= 0:
                    hi = lo
                lo = (a, f, g, d)
        if lo[0] > 0 and lo[1] < f0:
            return lo[0], lo[1], lo[2]
        return None

    prev = (0.0, f0, g0, d0)
    a = alpha0
    while evals < max_evals:
        f, g, d = phi(a)
        if f > f0 + c1 * a * d0 or (evals > 1 and f >= prev[1]):
            return zoom(prev, (a, f, g, d))
        if abs(d) <= -c2 * d0:
            return a, f, g
        if d >= 0:
            return zoom((a, f, g, d), prev)
        prev = (a, f, g, d)
        if a >= alpha_max:
            return a, f, g
        a = min(2.0 * a, alpha_max)
    if prev[0] > 0:
        return prev[0], prev[1], prev[2]
    return None


def _bfgs_step(neg, x, f, g, p, scaled, opts):
    alpha0 = 1.0 if scaled else min(1.0, 1.0 / np.linalg.norm(g))
    alpha_max = np.inf
    if opts.max_step is not None:
        pnorm = np.linalg.norm(p)
        alpha_max = opts.max_step * max(1.0, np.linalg.norm(x)) / pnorm
        alpha0 = min(alpha0, alpha_max)
    return _wolfe_line_search(neg, x, f, g, p, alpha0, opts.wolfe_c1, opts.wolfe_c2, alpha_max=alpha_max)


def bfgs_maximize(fun: Objective, x0, opts: OptimOptions | None = None) -> OptimizeOutcome:
    """Maximize ``fun`` (returning value and gradient) by BFGS.

    The inverse-Hessian approximation starts at the identity, is rescaled
    once after the first step and skips updates whose curvature
    ``s'y`` is at most ``opts.curvature_eps``. Accepted iterates never
    decrease the objective.
    """
    opts = opts or OptimOptions()
    max_iters = opts.iterations_for("bfgs")
    counted = _Counted(fun)

    def neg(x):
        value, grad = counted(x)
        return -value, -grad

    x, value, grad = _start(counted, x0)
    f, g = -value, -grad
    history = [value]
    if _is_degenerate(value):
        return OptimizeOutcome(x, value, 0, Termination.DEGENERATE, counted.calls, history)

    n = x.size
    H = np.eye(n)
    scaled = False
    reason = Termination.MAX_ITERS
    it = 0
    while it < max_iters:
        if np.max(np.abs(g)) <= opts.grad_tol:
            reason = Termination.GRAD_TOL
            break
        p = -H @ g
        if g @ p >= 0:
            H = np.eye(n)
            p = -g
        step = _bfgs_step(neg, x, f, g, p, scaled, opts)
        if step is None and not np.array_equal(p, -g):
            H = np.eye(n)
            p = -g
            step = _bfgs_step(neg, x, f, g, p, False, opts)
        if step is None:
            reason = Termination.OBJ_TOL
            break
        alpha, f_new, g_new = step
        s = alpha * p
        y = g_new - g
        f_old = f
        x, f, g = x + s, f_new, g_new
        it += 1
        history.append(-f)
        if f_old - f <= opts.obj_tol * max(1.0, abs(f_old)):
            reason = Termination.OBJ_TOL
            break
        sy = float(s @ y)
        if sy > opts.curvature_eps:
            if not scaled:
                H = np.eye(n) * (sy / float(y @ y))
                scaled = True
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s)
    return OptimizeOutcome(x, -f, it, reason, counted.calls, history)


def adam_maximize(fun: Objective, x0, opts: OptimOptions | None = None) -> OptimizeOutcome:
    """Maximize ``fun`` with bias-corrected ADAM steps.

    Stops after ``max_iters`` steps, or earlier once the best value has not
    improved by ``obj_tol`` (relative, floored at 1) for ``patience``
    consecutive steps. Returns the best iterate seen, not the last.
    """
    opts = opts or OptimOptions()
    max_iters = opts.iterations_for("adam")
    counted = _Counted(fun)
    x, value, grad = _start(counted, x0)
    history = [value]
    if _is_degenerate(value):
        return OptimizeOutcome(x, value, 0, Termination.DEGENERATE, counted.calls, history)

    best_x, best = x.copy(), value
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    b1, b2 = opts.beta1, opts.beta2
    stall = 0
    reason = Termination.MAX_ITERS
    t = 0
    for t in range(1, max_iters + 1):
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad * grad
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        x = x + opts.step_size * m_hat / (np.sqrt(v_hat) + opts.epsilon)
        value, grad = counted(x)
        history.append(value)
        if value > best + opts.obj_tol * max(1.0, abs(best)):
            stall = 0
        else:
            stall += 1
        if value > best:
            best, best_x = value, x.copy()
        if stall >= opts.patience:
            reason = Termination.OBJ_TOL
            break
    return OptimizeOutcome(best_x, best, t, reason, counted.calls, history)


OPTIMIZERS = {"bfgs": bfgs_maximize, "adam": adam_maximize}


@dataclass(frozen=True)
class RestartRecord:
    """One optimizer run. Polish runs start from a shrunken copy of the
    record ``parent`` and carry the shrink ``factor``."""

    index: int
    seed: tuple[int, int]
    init_loglik: float
    final_loglik: float
    iterations: int
    reason: str
    parent: int | None = None
    factor: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seed"] = list(self.seed)
        return d


@dataclass
class FitResult:
    family: str
    optimizer: str
    params: BoundaryParams
    loglik: float
    best_index: int
    restarts: list[RestartRecord]
    options: OptimOptions
    transform: TransformSpec | None = None

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "optimizer": self.optimizer,
            "params": self.params.to_dict(),
            "loglik": self.loglik,
            "best_restart": self.best_index,
            "restarts": [r.to_dict() for r in self.restarts],
        }


def restart_init(family: str, m: int, hidden: int, seed: int, index: int) -> BoundaryParams:
    """Initial parameters for restart ``index``; depends only on (seed, index).

    QP restarts begin with the ``2m`` axis hyperplanes through the origin,
    then alternate between random hyperplanes through the origin and fully
    random quadrics.
    """
    rng = np.random.default_rng([seed, index])
    if family == "qp" and index >= 2 * m and (index - 2 * m) % 2 == 1:
        return init_params("qp", m, hidden, "random", rng)
    return init_params(family, m, hidden, "axis-lines", rng, index=index)


def orient_low_mean_first(params: BoundaryParams, points, z) -> BoundaryParams:
    """Flip ``params`` if side 1 (``g <= 0``) has the higher soft mean."""
    try:
        stats = soft_mle(soft_weights(params.value(points)), z)
    except (DegeneratePartition, NonFiniteValue):
        return params
    return params.negated() if stats.mu1 > stats.mu2 else params


def _run_restart(objective, optimizer, family, m, opts, index):
    init = restart_init(family, m, opts.hidden, opts.seed, index)
    theta0 = init.to_vector()
    init_value = objective(theta0)[0]
    out = OPTIMIZERS[optimizer](objective, theta0, opts)
    record = RestartRecord(
        index=index,
        seed=(int(opts.seed), index),
        init_loglik=float(init_value),
        final_loglik=float(out.value),
        iterations=int(out.iterations),
        reason=out.reason.value,
    )
    return out, record


def _polish(objective, optimizer, results, best, opts):
    """Re-optimize shrunken copies of the incumbent while that helps.

    Appends one record per attempt to ``results`` and returns the index of
    the final incumbent.
    """
    for _ in range(opts.polish_rounds):
        improved = False
        parent = best
        for f in opts.soften:
            out_best = results[best][0]
            x0 = results[parent][0].x * f
            init_value = objective(x0)[0]
            cand = OPTIMIZERS[optimizer](objective, x0, opts)
            k = len(results)
            results.append((cand, RestartRecord(
                index=k,
                seed=(int(opts.seed), parent),
                init_loglik=float(init_value),
                final_loglik=float(cand.value),
                iterations=int(cand.iterations),
                reason=cand.reason.value,
                parent=parent,
                factor=float(f),
            )))
            if cand.value - out_best.value > opts.obj_tol * max(1.0, abs(out_best.value)):
                best, improved = k, True
        if not improved:
            break
    return best


def multi_start_fit(
    grid: EvalGrid,
    family: str,
    opts: OptimOptions | None = None,
    transform: TransformSpec | None = None,
    orient: bool = True,
) -> FitResult:
    """Fit a boundary to an (already transformed) grid from several starts.

    Restart ``k`` draws its initial parameters from an RNG seeded by
    ``(opts.seed, k)``, so the result does not depend on whether restarts
    run in parallel. The best final log-likelihood wins; ties go to the
    lower restart index. The winner is then polished (see
    ``OptimOptions.soften``); polish runs are appended to the restart
    records, so the reported log-likelihood is always the best record.
    With ``orient`` the winner's sign is chosen so that
    side 1 carries the lower soft mean metric (the objective itself does not
    depend on the sign).
    """
    opts = opts or OptimOptions()
    if family not in FAMILIES:
        raise InputError(f"unknown boundary family {family!r}; expected one of {FAMILIES}")
    grid.require_fittable()
    if np.ptp(grid.metrics) == 0:
        raise ConstantMetric("degenerate: metric constant")
    optimizer = opts.optimizer or PAIRED_OPTIMIZER[family]
    objective = SoftProfileObjective(family, grid.points, grid.metrics, opts.hidden)

    def run(k):
        return _run_restart(objective, optimizer, family, grid.dim, opts, k)

    indices = range(opts.restarts)
    if opts.n_jobs and opts.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=opts.n_jobs) as pool:
            results = list(pool.map(run, indices))
    else:
        results = [run(k) for k in indices]

    usable = [k for k, (out, _) in enumerate(results) if not _is_degenerate(out.value)]
    if not usable:
        raise AllRestartsDegenerate(
            f"all {opts.restarts} restarts ended in a degenerate partition"
        )
    best = max(usable, key=lambda k: (results[k][0].value, -k))
    best = _polish(objective, optimizer, results, best, opts)
    records = [rec for _, rec in results]
    out = results[best][0]
    params = objective.params(out.x)
    if orient:
        params = orient_low_mean_first(params, grid.points, grid.metrics)
    for rec in records:
        log.debug("restart %d: loglik=%.6g iters=%d (%s)", rec.index, rec.final_loglik, rec.iterations, rec.reason)
    return FitResult(
        family=family,
        optimizer=optimizer,
        params=params,
        loglik=float(out.value),
        best_index=best,
        restarts=records,
        options=replace(opts, optimizer=optimizer),
        transform=transform,
    )
