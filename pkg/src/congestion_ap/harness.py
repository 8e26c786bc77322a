"""Run driver: time loop, snapshots, error reports, parameter sweeps."""
from __future__ import annotations

import csv
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import pressure as pr
from .cases import Reference, case_pieces, initial_state, make_reference
from .errors import DomainError, InteractionError, SolverError
from .mesh import BoundaryRule, Grid1D, Grid2D, GridState, total_mass, write_csv, write_profile_csv
from .metrics import (
    ErrorReport,
    RunLog,
    courant_number,
    l1_relative_error,
    solution_vector,
    tv_relative_error,
    write_reports,
)
from .schemes1d import SchemeConfig, SchemeKind, adaptive_dt, max_char_speed
from .schemes1d import step as step_1d
from .schemes2d import step_2d

log = logging.getLogger(__name__)

# relative slack when deciding that the clock has reached a target time
TIME_TOL = 1e-12


@dataclass(frozen=True)
class RunConfig:
    """Everything that defines one run.

    ``dt`` is the fixed step; when ``courant_sigma`` is set the step is chosen
    adaptively instead (capped by ``dt_max``). The clock lands exactly on
    ``t_end`` and on every snapshot time: a fixed step is reduced uniformly
    over the interval when the interval is not a multiple of ``dt``.
    """

    case: str = "P1"
    scheme: str = "direct"
    picard_iters: int = 0
    epsilon: float = 1e-4
    gamma: float = 2.0
    rho_star: float = 1.0
    split: bool = True
    dx: float = 5e-3
    dy: Optional[float] = None
    dt: float = 5e-4
    courant_sigma: Optional[float] = None
    dt_max: float = float("inf")
    t_end: float = 0.05
    snapshot_times: Tuple[float, ...] = ()
    boundary: str = "copy"
    reference: str = "limit"
    pieces: Optional[Tuple[Tuple[float, float, float], ...]] = None
    output_dir: Optional[str] = None

    def __post_init__(self):
        SchemeKind(self.scheme)
        BoundaryRule(self.boundary)
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if any(not 0 < t <= self.t_end for t in self.snapshot_times):
            raise ValueError("snapshot times must lie in (0, t_end]")

    @property
    def is_2d(self) -> bool:
        return self.case == "cluster2d"

    def law(self) -> pr.PressureLaw:
        return pr.PressureLaw(self.gamma, self.rho_star, self.epsilon, self.split)

    def grid(self):
        if self.is_2d:
            return Grid2D.unit_square(self.dx, self.dy)
        return Grid1D.from_dx(self.dx)

    def scheme_config(self, dt: float) -> SchemeConfig:
        return SchemeConfig(scheme=self.scheme, dt=dt, picard_iters=self.picard_iters,
                            boundary=self.boundary)

    def tag(self) -> str:
        s = self.scheme if not self.picard_iters else f"{self.scheme}-picard{self.picard_iters}"
        return f"{self.case}_{s}_eps{self.epsilon:g}_dx{self.dx:g}_dt{self.dt:g}"


@dataclass
class RunResult:
    config: RunConfig
    state: GridState
    report: ErrorReport
    log: RunLog
    snapshots: Dict[float, GridState] = field(default_factory=dict)
    reference: Optional[Reference] = None
    files: List[str] = field(default_factory=list)


def build_case(cfg: RunConfig) -> Tuple[GridState, Optional[Reference]]:
    """Initial state on the configured grid plus the reference solution (1D only)."""
    grid = cfg.grid()
    state = initial_state(cfg.case, grid, BoundaryRule(cfg.boundary), cfg.pieces)
    if cfg.is_2d:
        return state, None
    return state, make_reference(case_pieces(cfg.case, cfg.pieces), cfg.law(), cfg.reference)


def reference_fields(ref: Reference, x: np.ndarray, t: float) -> Tuple[np.ndarray, np.ndarray]:
    rho, q = ref.profile(x, t)
    return np.asarray(rho, dtype=float), np.asarray(q, dtype=float)


def compare(state: GridState, ref: Optional[Reference]) -> Tuple[float, float]:
    """``(e, g)`` of a 1D state against the reference; NaN when no reference applies."""
    if ref is None or state.is_2d:
        return float("nan"), float("nan")
    try:
        r, q = reference_fields(ref, state.grid.x, state.time)
    except InteractionError:
        return float("nan"), float("nan")
    W = solution_vector(state.rho_in, state.q_in)
    w = solution_vector(r, q)
    return l1_relative_error(W, w), tv_relative_error(W, w)


def _next_dt(cfg: RunConfig, law, state: GridState, target: float) -> float:
    """Step towards ``target``.

    With a fixed step the remaining interval is split into the fewest equal
    steps not exceeding ``cfg.dt``; a short final step would carry much less
    implicit diffusion than its predecessors. Adaptive steps are capped instead.
    """
    remaining = target - state.time
    if cfg.courant_sigma is not None:
        h = min(state.grid.dx, state.grid.dy) if state.is_2d else state.grid.dx
        dt = adaptive_dt(law, state, cfg.courant_sigma, h, cfg.dt_max)
        return remaining if dt >= remaining * (1 - TIME_TOL) else dt
    n = max(1, math.ceil(remaining / cfg.dt - 1e-9))
    return remaining / n


def run(cfg: RunConfig, callback: Optional[Callable[[GridState], None]] = None) -> RunResult:
    """Integrate ``cfg.case`` up to ``cfg.t_end``.

    Raises
    ------
    DomainError
        If the density leaves ``[0, rho_star)`` at some step.
    SolverError
        If a nonlinear or linear solve fails.
    """
    law = cfg.law()
    state, ref = build_case(cfg)
    stepper = step_2d if cfg.is_2d else step_1d
    h = state.grid.dx
    rlog = RunLog(dx=h)
    mass0 = total_mass(state)
    rlog.mass.append(mass0)
    rlog.max_rho.append(float(np.max(state.rho_in)))
    targets = sorted(set(cfg.snapshot_times) | {cfg.t_end})
    snapshots: Dict[float, GridState] = {}
    gauge = None
    for target in targets:
        while state.time < target * (1 - TIME_TOL):
            dt = _next_dt(cfg, law, state, target)
            rlog.record(max_char_speed(law, state), dt)
            try:
                state, gauge = stepper(law, state, cfg.scheme_config(dt), gauge)
            except SolverError as exc:
                raise type(exc)(f"step {state.step + 1} (t={state.time:.6g}): {exc}") from exc
            if abs(state.time - target) <= TIME_TOL * target:
                state = replace(state, time=target)
            rmax = float(np.max(state.rho_in))
            if not (rmax < law.rho_star and np.min(state.rho_in) >= 0):
                raise DomainError(f"density left [0, rho_star) at step {state.step}: max {rmax}")
            rlog.mass.append(total_mass(state))
            rlog.max_rho.append(rmax)
            if callback is not None:
                callback(state)
        if target in cfg.snapshot_times:
            snapshots[target] = state.copy()

    e, g = compare(state, ref)
    lam, cfl = courant_number(rlog)
    report = ErrorReport(
        case=cfg.case, scheme=_scheme_label(cfg), epsilon=cfg.epsilon, dx=cfg.dx,
        dt=cfg.dt, t=state.time, e_l1=e, g_tv=g, max_lambda=lam, courant=cfl,
        mass_drift=(rlog.mass[-1] - mass0) / mass0, max_rho=max(rlog.max_rho),
    )
    result = RunResult(cfg, state, report, rlog, snapshots, ref)
    if cfg.output_dir is not None:
        result.files = write_outputs(result)
    return result


def _scheme_label(cfg: RunConfig) -> str:
    return cfg.scheme if not cfg.picard_iters else f"{cfg.scheme}+picard{cfg.picard_iters}"


def write_outputs(result: RunResult) -> List[str]:
    """Write the final field, every snapshot and (in 1D) the exact overlay."""
    cfg = result.config
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    states = dict(result.snapshots)
    states[result.state.time] = result.state
    for t, st in sorted(states.items()):
        path = out / f"{cfg.tag()}_t{t:.6f}.csv"
        write_csv(st, path)
        files.append(str(path))
        ref = result.reference
        if ref is not None and ref.available(t):
            r, q = reference_fields(ref, st.grid.x, t)
            epath = out / f"{cfg.case}_exact_{ref.kind}_t{t:.6f}.csv"
            write_profile_csv(st.grid.x, r, q, epath)
            files.append(str(epath))
    rpath = out / f"{cfg.tag()}_report.csv"
    write_reports([result.report], rpath)
    files.append(str(rpath))
    return files


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepSpec:
    """A family of runs.

    ``varying`` lists ``(field, values)`` pairs. With ``paired=False`` the runs
    are the Cartesian product, otherwise the value lists are zipped. Ratios
    compare each row to the previous row that agrees on every varying field
    except the last one.
    """

    base: RunConfig
    varying: Tuple[Tuple[str, Tuple], ...]
    paired: bool = False
    workers: int = 1

    def __post_init__(self):
        names = {f for f in RunConfig.__dataclass_fields__}
        for name, values in self.varying:
            if name not in names:
                raise ValueError(f"unknown run parameter {name!r}")
            if not values:
                raise ValueError(f"no values given for {name!r}")
        if self.paired and len({len(v) for _, v in self.varying}) > 1:
            raise ValueError("paired sweeps need equally long value lists")

    def configs(self) -> List[RunConfig]:
        names = [n for n, _ in self.varying]
        values = [v for _, v in self.varying]
        combos = zip(*values) if self.paired else itertools.product(*values)
        return [replace(self.base, **dict(zip(names, combo))) for combo in combos]


SWEEP_COLUMNS = ErrorReport.columns() + ["e_ratio", "g_ratio", "status", "message"]


@dataclass
class SweepRow:
    config: RunConfig
    report: Optional[ErrorReport]
    status: str = "ok"
    message: str = ""
    e_ratio: float = float("nan")
    g_ratio: float = float("nan")

    def cells(self) -> List[str]:
        if self.report is not None:
            base = self.report.row()
        else:
            c = self.config
            nan = float("nan")
            base = ErrorReport(c.case, _scheme_label(c), c.epsilon, c.dx, c.dt, nan).row()
        return base + [f"{self.e_ratio:.17g}", f"{self.g_ratio:.17g}", self.status, self.message]


def _run_row(cfg: RunConfig) -> SweepRow:
    try:
        return SweepRow(cfg, run(cfg).report)
    except (DomainError, SolverError) as exc:
        log.warning("run %s failed: %s", cfg.tag(), exc)
        return SweepRow(cfg, None, status="failed", message=f"{type(exc).__name__}: {exc}")


def sweep(spec: SweepSpec, path: Optional[os.PathLike] = None) -> List[SweepRow]:
    """Run every configuration of ``spec``; failures become rows, not exceptions."""
    cfgs = spec.configs()
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_row, cfgs))
    else:
        rows = [_run_row(c) for c in cfgs]
    _fill_ratios(spec, rows)
    if path is not None:
        write_sweep(rows, path)
    return rows


def _fill_ratios(spec: SweepSpec, rows: Sequence[SweepRow]) -> None:
    group_fields = [n for n, _ in spec.varying][:-1]
    last: Dict[tuple, SweepRow] = {}
    for row in rows:
        key = tuple(getattr(row.config, n) for n in group_fields)
        prev = last.get(key)
        if prev is not None and prev.report is not None and row.report is not None:
            row.e_ratio = prev.report.e_l1 / row.report.e_l1
            row.g_ratio = prev.report.g_tv / row.report.g_tv
        last[key] = row


def write_sweep(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow(r.cells())


# ---------------------------------------------------------------- ablation

@dataclass
class AblationResult:
    split: RunResult
    unsplit: Optional[RunResult]
    unsplit_error: str = ""

    @property
    def unsplit_failed(self) -> bool:
        return self.unsplit is None


def p0_ablation(cfg: RunConfig) -> AblationResult:
    """Run ``cfg`` with and without the explicit pressure part ``p0``.

    The unsplit run is expected to misbehave on stiff data, so its failure is
    captured rather than raised.
    """
    with_split = run(replace(cfg, split=True))
    try:
        without = run(replace(cfg, split=False))
        return AblationResult(with_split, without)
    except (DomainError, SolverError) as exc:
        return AblationResult(with_split, None, f"{type(exc).__name__}: {exc}")


def config_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)
