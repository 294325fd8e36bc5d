"""N-sweeps: the same initial recipe evolved for a geometric list of N."""
from __future__ import annotations

import copy
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..integrator import SchemeConfig, evolve
from ..lattice import make_grid
from ..norms import NormConfig, NormReport, composite_norms
from ..potentials import ConfigError, PotentialSpec, check_resolved
from .scenarios import instantiate

__all__ = ["SweepReport", "n_sweep", "SUMMARY_NORMS", "loglog_slope", "window_length"]

log = logging.getLogger(__name__)

SUMMARY_NORMS = ("nt_lambda", "nt_gamma_dot", "nt_phi")


def loglog_slope(Ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(N)."""
    x = np.log(np.asarray(Ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if len(x) < 2:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class SweepReport:
    """Per-N norm reports and conserved series, plus cross-N summaries.

    ``runtime`` is wall-clock seconds per N; it is kept in memory only and
    never written by the CLI, so run directories stay byte-identical.
    """

    N_list: list
    reports: dict = field(default_factory=dict)  # N -> [NormReport per window]
    conserved: dict = field(default_factory=dict)  # N -> {column: array}
    runtime: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)  # N -> message

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise ValueError("N-list must be strictly increasing")

    @property
    def completed(self) -> list:
        return [N for N in self.N_list if N in self.reports]

    def values(self, name: str, window: int = -1) -> np.ndarray:
        return np.array([self.reports[N][window].terms[name] for N in self.completed])

    def top_half(self) -> list:
        Ns = self.completed
        return Ns[len(Ns) // 2:] if len(Ns) > 2 else Ns

    def summary(self, names: Sequence[str] = SUMMARY_NORMS, window: int = -1) -> dict:
        """max/min ratio across N and log-log slope over the top half of the N-range."""
        out = {}
        top = self.top_half()
        for name in names:
            v = self.values(name, window)
            if len(v) == 0:
                out[name] = {"max_min_ratio": float("nan"), "top_half_slope": float("nan")}
                continue
            vt = [self.reports[N][window].terms[name] for N in top]
            out[name] = {
                "max_min_ratio": float(np.max(v) / np.min(v)),
                "top_half_slope": loglog_slope(top, vt),
            }
        return out

    def rows(self) -> list[dict]:
        """One row per (N, window) with every norm term."""
        out = []
        for N in self.completed:
            for rep in self.reports[N]:
                out.append({"N": N, **rep.row()})
        return out

    def conserved_rows(self) -> list[dict]:
        out = []
        for N in self.completed:
            cols = self.conserved[N]
            keys = sorted(cols)
            for j in range(len(cols[keys[0]])):
                out.append({"N": N, **{k: float(cols[k][j]) for k in keys}})
        return out


def window_length(fraction: float, scheme: SchemeConfig) -> float:
    """fraction * T rounded to a whole number of steps (at least one)."""
    m = min(scheme.steps, max(1, int(round(fraction * scheme.steps))))
    return m * scheme.dt


def _run_one(recipe: dict, N: float, scheme: SchemeConfig, cfg: NormConfig) -> tuple[list, dict, float]:
    t0 = time.perf_counter()
    state = instantiate(recipe, N)
    trace = evolve(state, scheme)
    reps = [composite_norms(trace, cfg, window_length(f, scheme)) for f in cfg.windows]
    return reps, trace.conserved, time.perf_counter() - t0


def n_sweep(
    recipe: dict,
    N_list: Sequence[float],
    T: float = 0.25,
    dt: float = 1e-3,
    cfg: NormConfig | None = None,
    scheme: str = "strang",
    workers: int = 1,
) -> SweepReport:
    """Evolve the recipe for each N and record norms at the fractions ``cfg.windows`` of T.

    A failure for one N (non-finite values, rejected step, invalid exponents)
    is recorded in ``failures`` and the sweep continues.
    """
    cfg = cfg or NormConfig()
    Ns = list(N_list)
    report = SweepReport(Ns)
    g = recipe["grid"]
    grid = make_grid(int(g["d"]), int(g["n"]), float(g["L"]))
    pot = recipe["potential"]
    check_resolved(PotentialSpec(float(pot["beta"]), float(max(Ns)), pot.get("profile", "bump")), grid)
    cfg.validate(float(pot["beta"]))
    sc = SchemeConfig(scheme, dt, T, 1)
    rec = copy.deepcopy(recipe)

    def job(N):
        try:
            return N, _run_one(rec, N, sc, cfg), None
        except (ArithmeticError, RuntimeError, ValueError, ConfigError) as exc:
            log.warning("sweep N=%s failed: %s", N, exc)
            return N, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, Ns))
    else:
        results = [job(N) for N in Ns]
    for N, res, err in results:  # merged in N-list order
        if err is not None:
            report.failures[N] = err
            continue
        reps, cons, rt = res
        report.reports[N] = reps
        report.conserved[N] = cons
        report.runtime[N] = rt
    return report
