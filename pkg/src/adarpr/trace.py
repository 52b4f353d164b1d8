"""Per-iteration run logs shared by every solver."""
import enum
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Status", "TraceRecord", "RunTrace"]


class Status(str, enum.Enum):
    CONVERGED = "converged"
    FIXED_POINT = "fixed_point"
    DIVERGED = "diverged"
    INNER_FAILURE = "inner_failure"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class TraceRecord:
    k: int
    F: float
    rel_err: float
    step: float
    inner_iters: int
    cum_inner: int
    wall_ms: float


@dataclass
class RunTrace:
    """Outer-iteration log of one solver run.

    ``records[k]`` describes the iterate ``x^k``: its objective, relative
    error (NaN without ground truth), the step size computed there and the
    inner iterations spent producing ``x^{k+1}``.
    """

    algorithm: str
    records: list = field(default_factory=list)
    status: Status = None
    info: dict = field(default_factory=dict)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def log(self, F, rel_err, step, inner_iters=0):
        cum = (self.records[-1].cum_inner if self.records else 0) + int(inner_iters)
        self.records.append(
            TraceRecord(
                k=len(self.records),
                F=float(F),
                rel_err=float(rel_err),
                step=float(step),
                inner_iters=int(inner_iters),
                cum_inner=cum,
                wall_ms=(time.perf_counter() - self._t0) * 1e3,
            )
        )

    def finish(self, status, **info):
        if self.status is not None:
            raise RuntimeError("run status already set")
        self.status = Status(status)
        self.info.update(info)

    @property
    def n_iter(self):
        """Outer iterations taken (index of the final iterate)."""
        return self.records[-1].k if self.records else 0

    @property
    def total_inner(self):
        return self.records[-1].cum_inner if self.records else 0

    @property
    def final_rel_err(self):
        return self.records[-1].rel_err if self.records else float("nan")

    @property
    def wall_ms(self):
        return self.records[-1].wall_ms if self.records else 0.0

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])
