"""Running scenarios and writing their CSV outputs."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .config import ConfigError, ScenarioConfig
from .geometry import Mesh, PhysicalConstants
from .oracles import equivalent_pipe, gauge_rise, moc_solve
from .solver import TimeSeries, diagnostics, simulate

TIMESERIES_HEADER = ("t", "gauge_x", "Q", "piezo_head")
SNAPSHOT_HEADER = ("t", "x", "A", "Q", "piezo_head")
COMPARISON_HEADER = ("R1", "rise_kinetic", "rise_equivalent", "relative_gap")


def _fmt(v) -> str:
    return format(float(v), ".15g")


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    series: TimeSeries
    constants: PhysicalConstants
    mesh: Optional[Mesh] = None


def _resample(series: TimeSeries, interval: Optional[float], duration: float) -> TimeSeries:
    """Linear interpolation of reference traces onto the output grid."""
    if interval is None:
        return series
    t, q, h = series.as_arrays()
    k = int(np.floor(duration / interval + 1e-9))
    grid = interval * np.arange(k + 1)
    if grid[-1] < duration - 1e-12:
        grid = np.append(grid, duration)
    out = TimeSeries(gauges=series.gauges, steps=series.steps)
    out.times = list(grid)
    out.discharge = np.column_stack([np.interp(grid, t, q[:, j]) for j in range(q.shape[1])]
                                    ).reshape(len(grid), -1).tolist()
    out.piezo_head = np.column_stack([np.interp(grid, t, h[:, j]) for j in range(h.shape[1])]
                                     ).reshape(len(grid), -1).tolist()
    return out


def run(cfg: ScenarioConfig, snapshots: bool = False) -> TimeSeries:
    """Shorthand for ``run_scenario(cfg, snapshots).series``."""
    return run_scenario(cfg, snapshots).series


def run_scenario(cfg: ScenarioConfig, snapshots: bool = False) -> ScenarioResult:
    """Run ``cfg`` with its backend and return gauge traces."""
    k = cfg.constants()
    if cfg.backend == "kinetic":
        mesh = cfg.mesh()
        state = cfg.initial_state(mesh)
        snap = None
        if snapshots:
            snap = cfg.snapshot_interval or cfg.output_interval or cfg.duration / 100.0
        series = simulate(state, mesh, cfg.boundary_laws(), k, cfg.duration, courant=cfg.courant,
                          gauges=cfg.gauges, output_interval=cfg.output_interval,
                          snapshot_every=snap)
        return ScenarioResult(cfg, series, k, mesh)

    up, down = cfg.boundary_laws()
    if cfg.backend == "moc":
        if not cfg.is_uniform:
            raise ConfigError("moc backend requires a uniform pipe")
        _, r = cfg.breakpoints()
        series = moc_solve(cfg.length, float(np.pi * r[0] ** 2), k.c, up, down, cfg.duration,
                           g=k.g, strickler=k.strickler, n_reaches=cfg.moc_reaches,
                           gauges=cfg.gauges, initial_discharge=cfg.initial_discharge)
    elif cfg.backend == "equivalent_pipe":
        if cfg.radius_upstream is None:
            raise ConfigError("equivalent_pipe backend requires a cone")
        s_e, c_e = equivalent_pipe(cfg.radius_upstream, cfg.radius_downstream, cfg.length, k.c,
                                   cfg.equivalent_segments)
        # gauges keep their travel time from the reservoir
        mapped = [x * c_e / k.c for x in cfg.gauges]
        series = moc_solve(cfg.length, s_e, c_e, up, down, cfg.duration, g=k.g,
                           strickler=k.strickler, n_reaches=cfg.moc_reaches, gauges=mapped,
                           initial_discharge=cfg.initial_discharge)
        series.gauges = tuple(cfg.gauges)
    else:
        raise ConfigError(f"unknown backend {cfg.backend!r}")
    return ScenarioResult(cfg, _resample(series, cfg.output_interval, cfg.duration), k)


def _open_for_write(destination):
    try:
        return open(destination, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(destination)}: {exc.strerror}") from exc


def write_timeseries(series: TimeSeries, destination) -> None:
    """CSV with one row per (sample time, gauge); header only when there are no gauges."""
    t, q, h = series.as_arrays() if series.times else (np.zeros(0), None, None)
    with _open_for_write(destination) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_HEADER)
        for i, ti in enumerate(t):
            for j, x in enumerate(series.gauges):
                w.writerow((_fmt(ti), _fmt(x), _fmt(q[i, j]), _fmt(h[i, j])))


def write_snapshots(result: ScenarioResult, destination) -> None:
    """Full-field states: one row per (snapshot time, cell centre)."""
    if result.mesh is None:
        raise ValueError("snapshots are only produced by the kinetic backend")
    with _open_for_write(destination) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_HEADER)
        for s in result.series.snapshots:
            piezo = diagnostics(s, result.mesh, result.constants).piezometric_head
            for x, a, q, p in zip(result.mesh.centers, s.A, s.Q, piezo):
                w.writerow((_fmt(s.t), _fmt(x), _fmt(a), _fmt(q), _fmt(p)))


def _rise(cfg: ScenarioConfig) -> float:
    return gauge_rise(run_scenario(cfg).series, 0)


def _check_family(configs: Sequence[ScenarioConfig]):
    if not configs:
        raise ValueError("empty cone family")
    ref = configs[0].to_dict()
    for cfg in configs:
        if cfg.radius_upstream is None:
            raise ValueError(f"{cfg.name}: compare_rises needs cone configurations")
        if not cfg.gauges:
            raise ValueError(f"{cfg.name}: compare_rises needs a gauge")
        d = cfg.to_dict()
        for key in ref:
            if key not in ("name", "radius_upstream", "backend") and d[key] != ref[key]:
                raise ValueError(f"{cfg.name}: family members differ in {key!r}")


def compare_rises(configs: Sequence[ScenarioConfig],
                  backends: Sequence[str] = ("kinetic", "equivalent_pipe"),
                  jobs: int = 1) -> list:
    """Rows ``(R1, rise_kinetic, rise_equivalent, relative_gap)`` for a cone family.

    The rise is the maximum piezometric head at the first gauge minus its
    initial value; the gap is relative to the equivalent-pipe rise.
    """
    missing = [b for b in ("kinetic", "equivalent_pipe") if b not in backends]
    if missing:
        raise ValueError(f"compare_rises needs backends {', '.join(missing)}")
    _check_family(configs)
    runs = [replace(c, backend=b) for c in configs for b in ("kinetic", "equivalent_pipe")]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rises = list(pool.map(_rise, runs))
    else:
        rises = [_rise(c) for c in runs]
    rows = []
    for i, cfg in enumerate(configs):
        rk, re = rises[2 * i], rises[2 * i + 1]
        rows.append((cfg.radius_upstream, rk, re, (rk - re) / re))
    return rows


def write_comparison(rows, destination) -> None:
    with _open_for_write(destination) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARISON_HEADER)
        for row in rows:
            w.writerow(tuple(_fmt(v) for v in row))
