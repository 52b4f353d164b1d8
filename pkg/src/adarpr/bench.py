"""Benchmark harness: replicated runs, success rates and CSV traces."""
import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .problems import (ImageSpec, SyntheticSpec, gen_hadamard_problem, gen_synthetic,
                       spectral_init, warm_start)
from .prox_linear import prox_linear_run
from .subgradient import ada_subgrad_run, geometric_run, polyak_run
from .trace import RunTrace, Status, TraceRecord

__all__ = [
    "ALGORITHMS",
    "AlgoSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "run_algorithm",
    "run_experiment",
    "summarize",
    "emit_csv",
    "load_csv",
    "CSV_HEADER",
]

CSV_HEADER = ["seed", "algo", "k", "F", "rel_err", "step", "inner_iters",
              "cum_inner", "wall_ms", "status"]

ALGORITHMS = ("adasubgrad", "gsubgrad", "psubgrad", "ipl-lac", "ipl-hac",
              "adaipl-lac", "adaipl-hac")
PROX_LINEAR = ("ipl-lac", "ipl-hac", "adaipl-lac", "adaipl-hac")


@dataclass(frozen=True)
class AlgoSpec:
    """An algorithm name plus keyword overrides, e.g. ``adaipl-lac:G=0.5``."""

    name: str
    params: tuple = ()

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.name!r}; choose from {ALGORITHMS}")

    @classmethod
    def parse(cls, text):
        name, _, rest = text.strip().partition(":")
        params = []
        for item in filter(None, rest.split(";")):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"bad parameter {item!r} in {text!r}")
            params.append((key.strip(), float(value)))
        return cls(name.strip(), tuple(params))

    @property
    def label(self):
        if not self.params:
            return self.name
        return self.name + ":" + ";".join(f"{k}={v:g}" for k, v in self.params)


def run_algorithm(spec, problem, x0, eps, *, G=0.5, G_ipl=None, ptilde=0.5, rho_l=0.24,
                  rho_h=0.24, q=0.983, lambda0_scale=0.1, max_iter=20_000,
                  max_outer=1000, max_inner=100_000, inner_solver="apg"):
    """Run one algorithm with harness defaults, overridden by ``spec.params``.

    ``G`` is the AdaSubGrad multiplier; ``G_ipl`` the AdaIPL one (default
    ``100/n``).
    """
    p = dict(spec.params)
    name = spec.name
    if name == "adasubgrad":
        return ada_subgrad_run(problem, x0, G=p.get("G", G), ptilde=p.get("ptilde", ptilde),
                               max_iter=max_iter, target_rel_err=eps)
    if name == "gsubgrad":
        scale = p.get("lambda0_scale", lambda0_scale)
        return geometric_run(problem, x0, lambda0=scale * float(np.linalg.norm(x0)),
                             q=p.get("q", q), max_iter=max_iter, target_rel_err=eps)
    if name == "psubgrad":
        return polyak_run(problem, x0, f_star=p.get("f_star", 0.0), max_iter=max_iter,
                          target_rel_err=eps)
    family, kind = name.split("-")
    rho = p.get("rho", rho_l if kind == "lac" else rho_h)
    if family == "ipl":
        return prox_linear_run(problem, x0, "fixed", stop=kind, rho=rho,
                               inner_solver=inner_solver, max_outer=max_outer,
                               max_inner=max_inner, target_rel_err=eps)
    G_default = 100.0 / problem.n if G_ipl is None else G_ipl
    return prox_linear_run(problem, x0, "adaptive", G=p.get("G", G_default),
                           ptilde=p.get("ptilde", ptilde), stop=kind, rho=rho,
                           inner_solver=inner_solver, max_outer=max_outer,
                           max_inner=max_inner, target_rel_err=eps)


@dataclass
class ExperimentConfig:
    """One sweep: an instance family, algorithms, seeds and an init rule.

    ``instance`` is a ``SyntheticSpec`` or ``ImageSpec`` whose ``seed`` is
    replaced by each entry of ``seeds``. ``init`` is ``"spectral"`` or
    ``"warm:<delta>"``.
    """

    instance: object
    algorithms: list
    seeds: list = field(default_factory=lambda: list(range(10)))
    eps: float = 1e-7
    init: str = "spectral"
    out_dir: str = None
    jobs: int = 1
    solver_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("need at least one seed")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.algorithms:
            raise ValueError("need at least one algorithm")
        self.algorithms = [a if isinstance(a, AlgoSpec) else AlgoSpec.parse(a)
                           for a in self.algorithms]
        self.init_rule()
        if not isinstance(self.instance, (SyntheticSpec, ImageSpec)):
            raise TypeError("instance must be a SyntheticSpec or ImageSpec")

    def init_rule(self):
        if self.init == "spectral":
            return "spectral", None
        kind, _, value = self.init.partition(":")
        if kind != "warm" or not value:
            raise ValueError(f"init must be 'spectral' or 'warm:<delta>', got {self.init!r}")
        delta = float(value)
        if not delta >= 0:
            raise ValueError("warm-start radius must be non-negative")
        return "warm", delta


@dataclass
class ExperimentResult:
    runs: list
    summary: dict
    setup_ms: dict


def _make_problem(instance, seed):
    if isinstance(instance, SyntheticSpec):
        return gen_synthetic(SyntheticSpec(instance.n, instance.m, instance.p_fail, seed))
    return gen_hadamard_problem(ImageSpec(instance.path, instance.n_blocks,
                                          instance.p_fail, seed))


def _run_seed(cfg, seed):
    t0 = time.perf_counter()
    problem = _make_problem(cfg.instance, seed)
    kind, delta = cfg.init_rule()
    if kind == "spectral":
        x0 = spectral_init(problem, seed=seed)
    else:
        x0 = warm_start(problem, delta, seed=seed)
    setup_ms = (time.perf_counter() - t0) * 1e3
    runs = []
    for spec in cfg.algorithms:
        _, trace = run_algorithm(spec, problem, x0, cfg.eps, **cfg.solver_options)
        trace.algorithm = spec.label
        runs.append((seed, spec.label, trace))
    return runs, setup_ms


def run_experiment(cfg):
    """Generate, initialize and solve every ``(seed, algorithm)`` pair.

    Instance generation and initialization are timed separately from the
    solver runs (``result.setup_ms``). With ``cfg.jobs > 1`` seeds run in
    worker processes; results are always ordered by seed, then by the
    configured algorithm order. Writes ``traces.csv`` and ``summary.csv``
    when ``cfg.out_dir`` is set.
    """
    seeds = sorted(cfg.seeds)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outputs = list(pool.map(_run_seed, [cfg] * len(seeds), seeds))
    else:
        outputs = [_run_seed(cfg, s) for s in seeds]
    runs = [r for batch, _ in outputs for r in batch]
    setup = {s: ms for s, (_, ms) in zip(seeds, outputs)}
    summary = summarize(runs, cfg.eps)
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        emit_csv(runs, os.path.join(cfg.out_dir, "traces.csv"))
        write_summary(summary, os.path.join(cfg.out_dir, "summary.csv"))
    return ExperimentResult(runs, summary, setup)


def total_iterations(algo, trace):
    """Inner iterations for proximal-linear methods, outer ones otherwise."""
    if algo.split(":")[0] in PROX_LINEAR:
        return trace.total_inner
    return trace.n_iter


def _median_iqr(values):
    values = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    return float(med), float(q3 - q1)


def summarize(runs, eps):
    """Per-algorithm success rate and median/IQR statistics.

    Medians of an even number of values average the two middle ones.
    """
    grouped = {}
    for _, algo, trace in runs:
        grouped.setdefault(algo, []).append(trace)
    summary = {}
    for algo, traces in grouped.items():
        success = [t.final_rel_err <= eps for t in traces]
        time_med, time_iqr = _median_iqr([t.wall_ms for t in traces])
        tot_med, tot_iqr = _median_iqr([total_iterations(algo, t) for t in traces])
        main_med, main_iqr = _median_iqr([t.n_iter for t in traces])
        summary[algo] = {
            "runs": len(traces),
            "success_rate": float(np.mean(success)),
            "time_ms_median": time_med,
            "time_ms_iqr": time_iqr,
            "total_iters_median": tot_med,
            "total_iters_iqr": tot_iqr,
            "main_iters_median": main_med,
            "main_iters_iqr": main_iqr,
        }
    return summary


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(runs, path):
    """Write one row per trace record, in the order given."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for seed, algo, trace in runs:
            status = trace.status.value if trace.status else ""
            for r in trace.records:
                writer.writerow([seed, algo, r.k, _fmt(r.F), _fmt(r.rel_err), _fmt(r.step),
                                 r.inner_iters, r.cum_inner, _fmt(r.wall_ms), status])


def load_csv(path):
    """Rebuild ``(seed, algo, RunTrace)`` triples written by :func:`emit_csv`."""
    runs = []
    current = None
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            key = (int(row["seed"]), row["algo"])
            if current is None or current[0] != key or int(row["k"]) == 0:
                trace = RunTrace(row["algo"])
                if row["status"]:
                    trace.status = Status(row["status"])
                current = (key, trace)
                runs.append((key[0], key[1], trace))
            current[1].records.append(TraceRecord(
                k=int(row["k"]), F=float(row["F"]), rel_err=float(row["rel_err"]),
                step=float(row["step"]), inner_iters=int(row["inner_iters"]),
                cum_inner=int(row["cum_inner"]), wall_ms=float(row["wall_ms"])))
    return runs


def write_summary(summary, path):
    fields = ["algo", "runs", "success_rate", "time_ms_median", "time_ms_iqr",
              "total_iters_median", "total_iters_iqr", "main_iters_median",
              "main_iters_iqr"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for algo, row in summary.items():
            writer.writerow([algo] + [_fmt(row[f]) for f in fields[1:]])


def format_summary(summary):
    lines = [f"{'algorithm':<28}{'success':>8}{'time ms':>12}{'total it':>11}{'main it':>10}"]
    for algo, row in summary.items():
        lines.append(
            f"{algo:<28}{row['success_rate']:>8.2f}{row['time_ms_median']:>12.1f}"
            f"{row['total_iters_median']:>11g}{row['main_iters_median']:>10g}")
    return "\n".join(lines)

