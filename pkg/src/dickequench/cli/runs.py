"""Figure-level drivers: photon-number scans, model comparisons, Husimi
sequences and closed-form threshold tables."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..errors import RegimeError
from ..fock_algebra import fock_state, vacuum_spin_down
from ..hamiltonians import (
    ModelKind,
    build_hamiltonian,
    critical_photon_number,
    critical_time,
    critical_time_exact,
    well_minima,
)
from ..observables import FrameSpec, husimi_q, reduce_field
from ..propagators import TimeGrid, echo_overlap, evolve_lindblad, evolve_unitary
from .config import RunConfig
from .dataset import Dataset, Matrix, Table

NA = "n/a"


def _initial_state(kind: ModelKind, p):
    return vacuum_spin_down(p.fock, p.spin) if kind.has_spin else fock_state(0, p.fock)


def _evolve(cfg: RunConfig, kind: ModelKind, g: float, grid: TimeGrid, *, open_system: bool, retain=False):
    p = cfg.params(g, open_system=open_system)
    H = build_hamiltonian(kind, p)
    psi0 = _initial_state(kind, p)
    if open_system:
        return evolve_lindblad(H, p, psi0.to_density(), grid, retain, tail_tolerance=cfg.tolerance)
    return evolve_unitary(H, psi0, grid, retain, tail_tolerance=cfg.tolerance)


def _padded(traj, key, size):
    out = np.full(size, np.nan)
    out[: len(traj)] = traj[key]
    return out


def _photon_cells(n: float, computed: bool):
    if not computed:
        return math.nan, "breach"
    if n <= 0.0:
        return math.nan, "zero"
    return math.log10(n), "ok"


def _map(fn, args, jobs):
    if jobs and jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, args))
    return [fn(a) for a in args]


# -------------------------------------------------------------------- scan


def _scan_column(arg):
    cfg, g = arg
    grid = cfg.grid()
    tr = _evolve(cfg, cfg.model, g, grid, open_system=cfg.open_system)
    rows = []
    for i, t in enumerate(grid.samples):
        done = i < len(tr)
        n = float(tr["n"][i]) if done else math.nan
        logn, flag = _photon_cells(n, done)
        rows.append((g, cfg.omega * t, logn, flag, n, float(tr["tail"][i]) if done else math.nan))
    return rows, tr.breach_time


def run_scan(cfg: RunConfig, name: str = "scan", jobs: int = 1) -> Dataset:
    """log10 <n> over (g/g_c, omega t); breached cells keep their row with flag 'breach'."""
    results = _map(_scan_column, [(cfg, g) for g in cfg.g_over_gc], jobs)
    table = Table(
        ("g_over_gc", "omega_t", "log10_n", "flag", "n", "tail"),
        ("1", "1", "log10(photons)", "ok|zero|breach", "photons", "probability"),
    )
    breaches = {}
    for g, (rows, bt) in zip(cfg.g_over_gc, results):
        table.rows.extend(rows)
        if bt is not None:
            breaches[repr(g)] = cfg.omega * bt
    return Dataset(name, "scan", cfg, {"": table}, breached=bool(breaches), info={"breach_omega_t": breaches})


# ----------------------------------------------------------------- compare


def _reduction_kind(cfg: RunConfig) -> ModelKind:
    if cfg.model in (ModelKind.FIELD_ONLY, ModelKind.QUADRATURE_OSCILLATOR):
        return cfg.model
    return ModelKind.FIELD_ONLY


def _compare_column(arg):
    cfg, g = arg
    grid = cfg.grid()
    size = len(grid)
    red = _reduction_kind(cfg)
    p = cfg.params(g, open_system=False)
    H_dm = build_hamiltonian(ModelKind.FULL_DICKE, p)
    H_io = build_hamiltonian(red, p)
    echo = echo_overlap(H_dm, H_io, vacuum_spin_down(p.fock, p.spin), grid, tail_tolerance=cfg.tolerance)
    iso = _evolve(cfg, ModelKind.FULL_DICKE, g, grid, open_system=False)
    io = _evolve(cfg, red, g, grid, open_system=False)
    opn = _evolve(cfg, ModelKind.FULL_DICKE, g, grid, open_system=True)
    cols = [_padded(tr, "n", size) for tr in (iso, io, opn)]
    log_echo = np.full(size, np.nan)
    log_echo[: len(echo)] = echo.log10_modulus
    rows = []
    for i, t in enumerate(grid.samples):
        flags = ["ok" if i < len(tr) else "breach" for tr in (iso, io, opn)]
        rows.append((g, cfg.omega * t, cols[0][i], cols[1][i], cols[2][i], log_echo[i],
                     *flags, "ok" if i < len(echo) else "breach"))
    breach = {k: tr.breach_time for k, tr in (("dicke", iso), ("reduced", io), ("open", opn), ("echo", echo))}
    return rows, breach


def run_compare(cfg: RunConfig, name: str = "compare", jobs: int = 1) -> Dataset:
    """<n> for isolated Dicke, its field-only reduction and open Dicke, plus the echo overlap."""
    results = _map(_compare_column, [(cfg, g) for g in cfg.g_over_gc], jobs)
    table = Table(
        ("g_over_gc", "omega_t", "n_dicke", "n_reduced", "n_open", "log10_echo",
         "flag_dicke", "flag_reduced", "flag_open", "flag_echo"),
        ("1", "1", "photons", "photons", "photons", "log10(1)", "ok|breach", "ok|breach", "ok|breach", "ok|breach"),
    )
    breaches = {}
    for g, (rows, b) in zip(cfg.g_over_gc, results):
        table.rows.extend(rows)
        hits = {k: cfg.omega * v for k, v in b.items() if v is not None}
        if hits:
            breaches[repr(g)] = hits
    info = {"reduction": _reduction_kind(cfg).value, "breach_omega_t": breaches}
    return Dataset(name, "compare", cfg, {"": table}, breached=bool(breaches), info=info)


# ------------------------------------------------------------------ husimi


def _tag(x: float) -> str:
    return f"{x:g}"


def _husimi_column(arg):
    cfg, g = arg
    p = cfg.params(g)
    snaps = cfg.husimi_times_omega or (0.0, cfg.t_max_omega)
    times = np.union1d([0.0], np.asarray(snaps) / cfg.omega)
    grid = TimeGrid(times)
    tr = _evolve(cfg, cfg.model, g, grid, open_system=cfg.open_system, retain=True)
    spec = FrameSpec.default_for(p)
    frames = {}
    for t, state in zip(tr.times, tr.states):
        wt = cfg.omega * t
        if not np.any(np.isclose(wt, snaps, rtol=0, atol=1e-9)):
            continue
        field = reduce_field(state) if cfg.model.has_spin else state
        frames[wt] = husimi_q(field, spec)
    return frames, tr, tr.breach_time


def run_husimi(cfg: RunConfig, name: str = "husimi", jobs: int = 1) -> Dataset:
    """One Q(alpha) matrix per snapshot time, a per-frame summary and the well-minimum markers."""
    results = _map(_husimi_column, [(cfg, g) for g in cfg.g_over_gc], jobs)
    summary = Table(
        ("g_over_gc", "omega_t", "q_max", "x_at_max", "p_at_max", "local_maxima", "normalization",
         "flagged_cells", "var_x", "var_p"),
        ("1", "1", "1/area(alpha)", "sqrt(2) Re(alpha)", "sqrt(2) Im(alpha)", "count", "1", "count", "1", "1"),
    )
    markers = Table(
        ("g_over_gc", "re_alpha_minus", "re_alpha_plus", "x_minus", "x_plus"),
        ("1", "Re(alpha)", "Re(alpha)", "sqrt(2) Re(alpha)", "sqrt(2) Re(alpha)"),
    )
    tables = {}
    breaches = {}
    many = len(cfg.g_over_gc) > 1
    for g, (frames, tr, bt) in zip(cfg.g_over_gc, results):
        index = {float(t * cfg.omega): i for i, t in enumerate(tr.times)}
        for wt, fr in frames.items():
            i = index[wt]
            x, pm = fr.argmax()
            summary.rows.append((g, wt, float(fr.values.max()), x, pm, len(fr.local_maxima()),
                                 fr.normalization(), int(fr.flagged.sum()), tr["var_x"][i], tr["var_p"][i]))
            key = (f"g{_tag(g)}_" if many else "") + f"t{_tag(wt)}"
            tables[key] = Matrix(fr.x_axis, fr.p_axis, fr.values)
        p = cfg.params(g)
        if p.g > p.g_c:
            x0 = well_minima(p)
            markers.rows.append((g, -x0 / math.sqrt(2), x0 / math.sqrt(2), -x0, x0))
        else:
            markers.rows.append((g, NA, NA, NA, NA))
        if bt is not None:
            breaches[repr(g)] = cfg.omega * bt
    tables = {"": summary, "markers": markers, **tables}
    info = {"alpha_convention": "alpha = (X + iP)/sqrt(2)", "breach_omega_t": breaches}
    return Dataset(name, "husimi", cfg, tables, breached=bool(breaches), info=info)


# -------------------------------------------------------------- thresholds


def _is_monotone(values) -> bool:
    nums = [v for v in values if not isinstance(v, str)]
    return all(b >= a for a, b in zip(nums, nums[1:]))


def run_thresholds(cfg: RunConfig, name: str = "thresholds", jobs: int = 1) -> Dataset:
    """Closed-form x0, n_c and both critical times; 'n/a' below the transition."""
    table = Table(
        ("g_over_gc", "x0", "n_c", "t_c_approx", "t_c_exact"),
        ("1", "quadrature", "photons", "1/omega", "1/omega"),
    )
    for g in cfg.g_over_gc:
        p = cfg.params(g)
        if p.g <= p.g_c:
            table.rows.append((g, NA, NA, NA, NA))
            continue
        try:
            tc = critical_time(p)
        except RegimeError:
            tc = NA
        table.rows.append((g, well_minima(p), critical_photon_number(p), tc, critical_time_exact(p)))
    monotone = {c: _is_monotone(table.column(c)) for c in ("x0", "n_c", "t_c_approx", "t_c_exact")}
    return Dataset(name, "thresholds", cfg, {"": table}, info={"non_decreasing_in_g": monotone})


COMMANDS = {
    "scan": run_scan,
    "compare": run_compare,
    "husimi": run_husimi,
    "thresholds": run_thresholds,
}
