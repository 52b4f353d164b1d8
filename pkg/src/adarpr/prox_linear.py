"""Inexact proximal-linear methods (IPL and AdaIPL).

Each outer step minimizes, over ``z = x - x^k``, the strongly convex model

    H(z) = ||z||^2 / (2t) + ||B z - d||_1,
    B = (2/m) diag(A x^k) A,   d = (b - |A x^k|^2) / m,

only approximately. The inner solvers work on the box-constrained dual

    D(lam) = -(t/2) ||B^T lam||^2 - lam^T d,   ||lam||_inf <= 1,

and accept an iterate once the duality gap certifies one of two
inexactness conditions:

* LAC: ``H(z) - D(lam) <= rho_l * (H(0) - H(z))``
* HAC: ``H(z) - D(lam) <= rho_h / (2t) * ||z||^2`` with ``rho_h < 1/4``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_vector, check_open_unit, check_positive
from .objective import relative_error
from .operators import power_iteration
from .trace import RunTrace, Status

__all__ = [
    "InnerStop",
    "InnerResult",
    "Subproblem",
    "build_subproblem",
    "apg_solve",
    "apd_solve",
    "prox_linear_run",
]

DEGENERATE_STEP = 1e-18
# slack on the power-iteration estimate of ||B||^2 when it sets a step size
_LIPSCHITZ_SAFETY = 1.01


@dataclass(frozen=True)
class InnerStop:
    """Inner acceptance rule: ``kind`` is ``"lac"`` or ``"hac"``."""

    kind: str
    rho: float = 0.24

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("lac", "hac"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        check_positive(self.rho, "rho")
        if kind == "hac" and not self.rho < 0.25:
            raise ValueError("HAC needs rho < 1/4")

    def threshold(self, sp, z, Hz):
        if self.kind == "lac":
            return self.rho * (sp.H0 - Hz)
        return self.rho / (2.0 * sp.t) * float(z @ z)


@dataclass(frozen=True, eq=False)
class Subproblem:
    """Data of one proximal-linear subproblem around ``x_ref``.

    ``B`` is never formed; products go through the measurement operator.
    """

    t: float
    x_ref: np.ndarray
    Ax_ref: np.ndarray
    d: np.ndarray
    B_norm: float
    op: object = field(repr=False)
    v_top: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        # rows of B are (2/m) (a_i^T x_ref) a_i^T
        object.__setattr__(self, "_row_scale", (2.0 / self.d.size) * self.Ax_ref)

    @property
    def m(self):
        return self.d.size

    @property
    def n(self):
        return self.x_ref.size

    @property
    def H0(self):
        return float(np.sum(np.abs(self.d)))

    def B(self, z):
        z = as_float_vector(z, self.n, "z")
        return (2.0 / self.m) * self.Ax_ref * self.op._apply(z)

    def BT(self, lam):
        lam = as_float_vector(lam, self.m, "lam")
        return (2.0 / self.m) * self.op._apply_transpose(self.Ax_ref * lam)

    # unchecked products for the inner loops
    def _B(self, z):
        return self._row_scale * self.op._apply(z)

    def _BT(self, lam):
        return self.op._apply_transpose(self._row_scale * lam)

    def eval_H(self, z):
        z = as_float_vector(z, self.n, "z")
        return float(z @ z / (2.0 * self.t) + np.sum(np.abs(self.B(z) - self.d)))

    def eval_D(self, lam):
        lam = self._check_box(lam)
        BTlam = self.BT(lam)
        return float(-0.5 * self.t * (BTlam @ BTlam) - lam @ self.d)

    def primal_from_dual(self, lam):
        lam = self._check_box(lam)
        return -self.t * self.BT(lam)

    def dual_from_primal(self, z):
        z = as_float_vector(z, self.n, "z")
        return np.sign(self.B(z) - self.d)

    def gap(self, z, lam, Bz, BTlam):
        """``H(z) - D(lam)`` as a sum of non-negative terms.

        Uses ``sum_i (|w_i| - lam_i w_i) + ||z + t B^T lam||^2 / (2t)`` with
        ``w = Bz - d``, which avoids cancelling two nearly equal objective
        values.
        """
        return self._gap_and_H(z, lam, Bz, BTlam)[0]

    def _gap_and_H(self, z, lam, Bz, BTlam):
        # BTlam=None means z = -t B^T lam exactly, so the quadratic term is 0
        w = Bz - self.d
        l1 = float(np.abs(w).sum())
        two_t = 2.0 * self.t
        gap = l1 - float(lam @ w)
        if BTlam is not None:
            u = z + self.t * BTlam
            gap += float(u @ u) / two_t
        return gap, float(z @ z) / two_t + l1

    def _check_box(self, lam):
        lam = as_float_vector(lam, self.m, "lam")
        if np.max(np.abs(lam), initial=0.0) > 1.0 + 1e-12:
            raise ValueError("dual variable outside the unit box")
        return lam


def build_subproblem(problem, x_k, t_k, Ax=None, power_tol=1e-6, seed=0, v0=None):
    """Set up the subproblem at ``x_k`` with step ``t_k`` in ``(0, 1/L]``.

    ``||B||_2`` is estimated by power iteration; ``v0`` warm-starts it.
    """
    x_k = as_float_vector(x_k, problem.n, "x_k").copy()
    if not (0.0 < t_k <= (1.0 + 1e-12) / problem.L):
        raise ValueError(f"t_k={t_k!r} outside (0, 1/L] with 1/L={1.0 / problem.L!r}")
    Ax = problem.op.apply(x_k) if Ax is None else as_float_vector(Ax, problem.m, "Ax")
    m = problem.m
    d = (problem.b - Ax * Ax) / m
    scale = 2.0 / m

    def fwd(z):
        return scale * Ax * problem.op.apply(z)

    def adj(lam):
        return scale * problem.op.apply_transpose(Ax * lam)

    B_norm, v = power_iteration(fwd, adj, problem.n, tol=power_tol, seed=seed, v0=v0)
    return Subproblem(float(t_k), x_k, Ax, d, B_norm, problem.op, v)


@dataclass
class InnerResult:
    z: np.ndarray
    lam: np.ndarray
    inner_iters: int
    gap: float
    H: float
    threshold: float
    accepted: bool
    gaps: list = None


def _accept(stop, sp, z, lam, Bz, BTlam, gap_tol):
    gap, Hz = sp._gap_and_H(z, lam, Bz, BTlam)
    if stop is None:
        return gap, Hz, gap_tol, gap <= gap_tol
    thr = stop.threshold(sp, z, Hz)
    return gap, Hz, thr, gap <= thr


def apg_solve(sp, stop, max_inner=100_000, record=False, gap_tol=0.0):
    """Accelerated projected gradient (FISTA) on the negated dual.

    Minimizes ``phi(lam) = (t/2)||B^T lam||^2 + lam^T d`` over the unit box
    with step ``1/(t ||B||^2)``, warm-started at ``lam_0 = sign(-d)``. After
    every iteration the primal ``z = -t B^T lam`` is formed and the stop rule
    is tested; the first accepted pair is returned.

    Parameters
    ----------
    sp : Subproblem
    stop : InnerStop or None
        ``None`` disables the inexactness test; the solver then runs until
        the gap drops to ``gap_tol`` or ``max_inner`` is spent.
    max_inner : int
    record : bool
        Keep the gap of every iterate in ``result.gaps``.
    gap_tol : float
        Absolute gap target used only when ``stop`` is None. The default
        returns early only on an exactly zero gap.

    Returns
    -------
    InnerResult
        ``accepted`` is False when the budget ran out; the pair with the
        smallest gap seen is returned in that case.
    """
    if max_inner < 1:
        raise ValueError("max_inner must be at least 1")
    t = sp.t
    L_phi = t * sp.B_norm**2 * _LIPSCHITZ_SAFETY
    gaps = [] if record else None

    lam = sp.dual_from_primal(np.zeros(sp.n))
    BTlam = sp._BT(lam)
    z = -t * BTlam
    Bz = sp._B(z)
    gap, Hz, thr, ok = _accept(stop, sp, z, lam, Bz, None, gap_tol)
    if record:
        gaps.append(gap)
    best = (gap, z, lam, Hz, thr, 0)
    if ok or L_phi == 0.0:
        return InnerResult(z, lam, 0, gap, Hz, thr, ok or gap == 0.0, gaps)

    # B B^T lam = -Bz / t, so the extrapolated gradient needs no extra products
    BBT = -Bz / t
    lam_prev, BBT_prev = lam, BBT
    theta = 1.0
    for j in range(1, max_inner + 1):
        theta_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
        beta = (theta - 1.0) / theta_next
        y = lam + beta * (lam - lam_prev)
        grad = t * (BBT + beta * (BBT - BBT_prev)) + sp.d
        lam_prev, BBT_prev = lam, BBT
        lam = y - grad / L_phi
        np.clip(lam, -1.0, 1.0, out=lam)
        theta = theta_next

        BTlam = sp._BT(lam)
        z = -t * BTlam
        Bz = sp._B(z)
        BBT = -Bz / t
        gap, Hz, thr, ok = _accept(stop, sp, z, lam, Bz, None, gap_tol)
        if record:
            gaps.append(gap)
        if ok:
            return InnerResult(z, lam, j, gap, Hz, thr, True, gaps)
        if gap < best[0]:
            best = (gap, z, lam, Hz, thr, j)
    gap, z, lam, Hz, thr, _ = best
    return InnerResult(z, lam, max_inner, gap, Hz, thr, stop is None, gaps)


def apd_solve(sp, stop, max_inner=100_000, record=False, gap_tol=0.0, tau0=None):
    """Accelerated primal-dual (Chambolle-Pock) iteration on the saddle form.

    Works on ``||z||^2/(2t) + lam^T (B z - d)`` with a dual step that
    projects onto the unit box and a closed-form primal prox. The primal
    term is ``1/t``-strongly convex, which drives the step updates
    ``theta = 1/sqrt(1 + 2 tau / t)``, ``tau <- theta tau``,
    ``sigma <- sigma / theta`` while keeping ``tau sigma ||B||^2 <= 1``.

    Same warm start, stop test and return contract as :func:`apg_solve`.
    """
    if max_inner < 1:
        raise ValueError("max_inner must be at least 1")
    t = sp.t
    B_norm = sp.B_norm * np.sqrt(_LIPSCHITZ_SAFETY)
    gaps = [] if record else None

    lam = sp.dual_from_primal(np.zeros(sp.n))
    BTlam = sp._BT(lam)
    z = -t * BTlam
    Bz = sp._B(z)
    gap, Hz, thr, ok = _accept(stop, sp, z, lam, Bz, BTlam, gap_tol)
    if record:
        gaps.append(gap)
    best = (gap, z, lam, Hz, thr)
    if ok or B_norm == 0.0:
        return InnerResult(z, lam, 0, gap, Hz, thr, ok or gap == 0.0, gaps)

    tau = (1.0 / B_norm) if tau0 is None else float(tau0)
    sigma = 1.0 / (tau * B_norm**2)
    Bz_bar = Bz
    for j in range(1, max_inner + 1):
        lam = lam + sigma * (Bz_bar - sp.d)
        np.clip(lam, -1.0, 1.0, out=lam)
        BTlam = sp._BT(lam)
        z_new = (z - tau * BTlam) / (1.0 + tau / t)
        Bz_new = sp._B(z_new)
        theta = 1.0 / math.sqrt(1.0 + 2.0 * tau / t)
        tau *= theta
        sigma /= theta
        Bz_bar = Bz_new + theta * (Bz_new - Bz)
        z, Bz = z_new, Bz_new

        gap, Hz, thr, ok = _accept(stop, sp, z, lam, Bz, BTlam, gap_tol)
        if record:
            gaps.append(gap)
        if ok:
            return InnerResult(z, lam, j, gap, Hz, thr, True, gaps)
        if gap < best[0]:
            best = (gap, z, lam, Hz, thr)
    gap, z, lam, Hz, thr = best
    return InnerResult(z, lam, max_inner, gap, Hz, thr, stop is None, gaps)


_INNER_SOLVERS = {"apg": apg_solve, "apd": apd_solve}


def prox_linear_run(problem, x0, step_rule="adaptive", G=None, ptilde=0.5,
                    stop="lac", rho=0.24, inner_solver="apg", max_outer=1000,
                    max_inner=100_000, target_rel_err=1e-7, seed=0):
    """Inexact proximal-linear method with fixed or quantile-adaptive steps.

    ``step_rule="fixed"`` uses ``t_k = 1/L`` (IPL); ``"adaptive"`` uses
    ``t_k = min(1/L, G * r_p(x^k))`` (AdaIPL), with ``G`` defaulting to
    ``100/n``.

    Parameters
    ----------
    problem : RprProblem
    x0 : array_like, shape (n,)
    step_rule : {"adaptive", "fixed"}
    G : float, optional
    ptilde : float
    stop : {"lac", "hac"} or InnerStop
    rho : float
        ``rho_l`` or ``rho_h``; ignored when ``stop`` is an InnerStop.
    inner_solver : {"apg", "apd"}
    max_outer, max_inner : int
    target_rel_err : float
    seed : int
        Seed for the ``||B_k||`` power iteration.

    Returns
    -------
    x : ndarray
    trace : RunTrace
        ``step`` holds ``t_k``; ``inner_iters`` the iterations spent on the
        subproblem at ``x^k``. An inner failure sets status
        ``inner_failure`` with the offending ``k``, gap and threshold in
        ``trace.info``.
    """
    if step_rule not in ("adaptive", "fixed"):
        raise ValueError(f"unknown step rule {step_rule!r}")
    if not isinstance(stop, InnerStop):
        stop = InnerStop(stop, rho)
    try:
        solve = _INNER_SOLVERS[inner_solver]
    except KeyError:
        raise ValueError(f"unknown inner solver {inner_solver!r}") from None
    if step_rule == "adaptive":
        G = 100.0 / problem.n if G is None else G
        check_positive(G, "G")
        check_open_unit(ptilde, "ptilde")
    check_positive(target_rel_err, "target_rel_err")

    label = ("adaipl" if step_rule == "adaptive" else "ipl") + "-" + stop.kind
    trace = RunTrace(label)
    x = as_float_vector(x0, problem.n, "x0").copy()
    has_truth = problem.truth is not None
    t_max = 1.0 / problem.L
    v_top = None
    for k in range(max_outer + 1):
        view = problem.view(x)
        F = view.value
        rel = relative_error(problem, x) if has_truth else np.nan
        if step_rule == "adaptive":
            t = min(t_max, G * view.quantile(ptilde))
        else:
            t = t_max
        if not np.isfinite(F):
            trace.log(F, rel, t)
            trace.finish(Status.DIVERGED, reason="non-finite iterate")
            break
        if t <= DEGENERATE_STEP:
            trace.log(F, rel, t)
            trace.finish(Status.FIXED_POINT, reason="degenerate step size")
            break
        if rel <= target_rel_err:
            trace.log(F, rel, t)
            trace.finish(Status.CONVERGED)
            break
        if k == max_outer:
            trace.log(F, rel, t)
            trace.finish(Status.MAX_ITER)
            break
        sp = build_subproblem(problem, x, t, Ax=view.Ax, seed=seed, v0=v_top)
        v_top = sp.v_top
        res = solve(sp, stop, max_inner)
        trace.log(F, rel, t, res.inner_iters)
        if not res.accepted:
            trace.finish(Status.INNER_FAILURE, k=k, gap=res.gap,
                         threshold=res.threshold, max_inner=max_inner)
            break
        if not np.any(res.z):
            trace.finish(Status.FIXED_POINT, reason="zero step")
            break
        x = x + res.z
    return x, trace
