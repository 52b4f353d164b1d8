"""Numerical self-checks printed as one pass/fail line each."""
import itertools

import numpy as np
from scipy.linalg import hadamard

from ._validation import make_rng
from .objective import RprProblem, model_value, objective_value, subgradient
from .operators import DenseOperator, HadamardEnsemble, fwht_normalized, spectral_norm
from .prox_linear import InnerStop, apd_solve, apg_solve, build_subproblem


def _random_problem(rng, n, m):
    A = rng.standard_normal((m, n))
    x = rng.standard_normal(n)
    b = (A @ x) ** 2
    bad = rng.random(m) < 0.2
    b[bad] = rng.exponential(5.0, bad.sum())
    return RprProblem.from_operator(A, b, truth=x)


def check_adjoint(rng):
    ops = [DenseOperator(rng.standard_normal((37, 11))), HadamardEnsemble.random(16, 6, seed=1)]
    worst = 0.0
    for op in ops:
        for _ in range(100):
            x = rng.standard_normal(op.cols)
            y = rng.standard_normal(op.rows)
            lhs = op.apply(x) @ y
            worst = max(worst, abs(lhs - x @ op.apply_transpose(y)) / (1 + abs(lhs)))
    return worst <= 1e-10, f"max relative adjoint mismatch {worst:.2e}"


def check_hadamard_dense(rng):
    worst = 0.0
    for s in range(1, 7):
        n = 2**s
        op = HadamardEnsemble.random(n, 6, seed=s)
        H = hadamard(n) / np.sqrt(n)
        dense = np.vstack([np.sqrt(n) * H * sj for sj in op.signs])
        x = rng.standard_normal(n)
        worst = max(worst, np.max(np.abs(op.apply(x) - dense @ x)))
    return worst <= 1e-12, f"max deviation from dense blocks {worst:.2e}"


def check_fwht_involution(rng):
    v = rng.standard_normal(256)
    err = np.max(np.abs(fwht_normalized(fwht_normalized(v)) - v))
    return err <= 1e-12, f"||H(Hv) - v||_inf = {err:.2e}"


def check_hadamard_L(rng):
    op = HadamardEnsemble.random(64, 6, seed=3)
    L = 2 * spectral_norm(op) ** 2 / op.rows
    return abs(L - 2) <= 1e-5, f"L = {L:.8f}"


def check_weak_convexity(rng):
    p = _random_problem(rng, 6, 40)
    slack_model = slack_sub = np.inf
    for _ in range(200):
        x, y = rng.standard_normal((2, 6)) * 2
        Fx = objective_value(p, x)
        half_sq = p.L / 2 * (x - y) @ (x - y)
        linearized = model_value(p, x, y, 1 / p.L) - half_sq
        slack_model = min(slack_model, half_sq - abs(Fx - linearized))
        v = subgradient(p, y)
        slack_sub = min(slack_sub, Fx - objective_value(p, y) - (x - y) @ v + half_sq)
    ok = slack_model >= -1e-10 and slack_sub >= -1e-10
    return ok, f"min slack: model {slack_model:.2e}, subgradient {slack_sub:.2e}"


def check_worked_subproblem(rng):
    p = RprProblem.from_operator(np.array([[1.0], [2.0]]), [1.0, 4.0], truth=[1.0])
    sp = build_subproblem(p, [2.0], 0.1)
    results = {f.__name__: f(sp, None, 10_000) for f in (apg_solve, apd_solve)}
    ok = all(abs(r.z[0] + 0.75) <= 1e-5 and abs(r.H - 2.8125) <= 1e-5 and r.gap <= 1e-10
             for r in results.values())
    detail = ", ".join(f"{k}: z = {r.z[0]:.7f}, gap = {r.gap:.1e}" for k, r in results.items())
    return ok, detail


def check_inexact_sufficiency(rng):
    violations = accepted = 0
    for trial in range(20):
        n, m = int(rng.integers(1, 6)), int(rng.integers(2, 11))
        p = _random_problem(rng, n, m)
        x = rng.standard_normal(n)
        sp = build_subproblem(p, x, rng.uniform(0.1, 1.0) / p.L)
        oracle = apg_solve(sp, None, 100_000, gap_tol=1e-12)
        # a lower bound on min H keeps the check conservative
        h_min = oracle.H - oracle.gap
        for solver, stop in itertools.product((apg_solve, apd_solve),
                                              (InnerStop("lac", 0.24), InnerStop("hac", 0.24))):
            r = solver(sp, stop, 20_000)
            if not r.accepted:
                continue
            accepted += 1
            H = sp.eval_H(r.z)
            if stop.kind == "lac":
                rhs = stop.rho * (sp.H0 - H)
            else:
                rhs = stop.rho / (2 * sp.t) * (r.z @ r.z)
            if H - h_min > rhs + 1e-12:
                violations += 1
    return violations == 0, f"{accepted} accepted iterates, {violations} exact-condition violations"


CHECKS = [
    ("adjoint consistency", check_adjoint),
    ("hadamard equals dense blocks", check_hadamard_dense),
    ("fwht involution", check_fwht_involution),
    ("hadamard ensemble L = 2", check_hadamard_L),
    ("weak convexity and subgradient inequality", check_weak_convexity),
    ("worked subproblem z* = -0.75", check_worked_subproblem),
    ("LAC/HAC imply exact conditions", check_inexact_sufficiency),
]


def selftest(seed=0, stream=print):
    """Run every check; return True when all pass."""
    all_ok = True
    for name, check in CHECKS:
        try:
            ok, detail = check(make_rng(seed))
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        stream(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
