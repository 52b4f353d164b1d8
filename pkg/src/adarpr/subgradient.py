"""Subgradient methods for robust phase retrieval.

All three share the update ``x <- x - step * xi / scale`` with ``xi`` a
subgradient of ``F``:

* adaptive quantile steps, ``step = G * r_p(x)`` and ``scale = ||xi||^2``;
* Polyak steps, ``step = F(x) - f_star`` and ``scale = ||xi||^2``;
* geometrically decaying steps, ``step = lambda0 * q^k`` and ``scale = ||xi||``.
"""
import numpy as np

from ._validation import as_float_vector, check_open_unit, check_positive
from .objective import _subgradient_from, relative_error
from .trace import RunTrace, Status

__all__ = ["ada_subgrad_run", "polyak_run", "geometric_run"]

STEP_FLOOR = 1e-16
# a stalled run whose moves are below this fraction of ||x|| sits at the
# rounding floor rather than diverging
STALL_MOVE = 1e-12


def _subgradient_loop(problem, x0, step_rule, name, normalized, max_iter,
                      target_rel_err, stall_guard):
    x = as_float_vector(x0, problem.n, "x0").copy()
    check_positive(target_rel_err, "target_rel_err")
    trace = RunTrace(name)
    has_truth = problem.truth is not None
    best_F = np.inf
    since_best = 0
    # overflow is reported through the trace status
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(max_iter + 1):
            view = problem.view(x)
            F = view.value
            rel = relative_error(problem, x) if has_truth else np.nan
            if not (np.isfinite(F) and np.all(np.isfinite(x))):
                trace.log(F, rel, np.nan)
                trace.finish(Status.DIVERGED, reason="non-finite iterate")
                break
            xi = _subgradient_from(problem, view)
            xi_sq = float(xi @ xi)
            step = step_rule(k, view, F, trace)
            trace.log(F, rel, step)
            if xi_sq == 0.0 or step <= STEP_FLOOR * (1.0 + F):
                trace.finish(Status.FIXED_POINT, zero_subgradient=xi_sq == 0.0)
                break
            if rel <= target_rel_err:
                trace.finish(Status.CONVERGED)
                break
            if k == max_iter:
                trace.finish(Status.MAX_ITER)
                break
            scale = np.sqrt(xi_sq) if normalized else xi_sq
            move = step / scale * np.sqrt(xi_sq)
            if F < best_F:
                best_F, since_best = F, 0
            else:
                since_best += 1
                if since_best > stall_guard:
                    if move <= STALL_MOVE * np.linalg.norm(x):
                        trace.finish(Status.FIXED_POINT, reason="stalled at rounding level")
                    else:
                        trace.finish(Status.DIVERGED, reason="no objective decrease",
                                     stall_guard=stall_guard)
                    break
            x = x - (step / scale) * xi
    return x, trace


def ada_subgrad_run(problem, x0, G=0.5, ptilde=0.5, max_iter=10_000,
                    target_rel_err=1e-7, stall_guard=1000):
    """AdaSubGrad: subgradient steps sized by a residual quantile.

    Iterates ``x^{k+1} = x^k - alpha_k xi^k / ||xi^k||^2`` with
    ``alpha_k = G * r_p(x^k)``, the ``ceil(m * ptilde)``-th smallest
    absolute residual.

    Parameters
    ----------
    problem : RprProblem
    x0 : array_like, shape (n,)
    G : float
        Step multiplier.
    ptilde : float
        Quantile level in (0, 1); should exceed the corrupted fraction.
    max_iter : int
    target_rel_err : float
        Stop once ``dist(x, +-x*) / ||x*|| <= target_rel_err`` (needs truth).
    stall_guard : int
        Declare divergence after this many iterations without a new best
        objective value.

    Returns
    -------
    x : ndarray
    trace : RunTrace
        ``step`` holds ``alpha_k``.
    """
    check_positive(G, "G")
    check_open_unit(ptilde, "ptilde")

    def rule(k, view, F, trace):
        return G * view.quantile(ptilde)

    return _subgradient_loop(problem, x0, rule, "adasubgrad", False, max_iter,
                             target_rel_err, stall_guard)


def polyak_run(problem, x0, f_star=0.0, max_iter=10_000, target_rel_err=1e-7,
               stall_guard=1000):
    """Polyak subgradient method with a known optimal value ``f_star``.

    Only meaningful when ``f_star`` is the true minimum, i.e. noiseless data
    with ``f_star = 0``. A negative gap ``F(x) - f_star`` is clipped to zero
    (which stops the run) and flagged in ``trace.info['warning']``.
    """
    if not np.isfinite(f_star):
        raise ValueError("f_star must be finite")

    def rule(k, view, F, trace):
        gap = F - f_star
        if gap < 0:
            trace.info["warning"] = f"F(x^{k}) < f_star"
            return 0.0
        return gap

    return _subgradient_loop(problem, x0, rule, "psubgrad", False, max_iter,
                             target_rel_err, stall_guard)


def geometric_run(problem, x0, lambda0=None, q=0.983, max_iter=10_000,
                  target_rel_err=1e-7, stall_guard=1000):
    """Normalized subgradient steps of length ``lambda0 * q^k``.

    ``lambda0`` defaults to ``0.1 * ||x0||``.
    """
    check_open_unit(q, "q")
    if lambda0 is None:
        lambda0 = 0.1 * float(np.linalg.norm(x0))
    check_positive(lambda0, "lambda0")

    def rule(k, view, F, trace):
        return lambda0 * q**k

    return _subgradient_loop(problem, x0, rule, "gsubgrad", True, max_iter,
                             target_rel_err, stall_guard)
