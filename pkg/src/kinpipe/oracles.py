"""Independent reference solutions for water-hammer validation.

* :func:`moc_solve` integrates the classical (Allievi) water-hammer equations
  in piezometric head H and discharge Q by the method of characteristics on
  a characteristics-aligned grid (dx = c dt):

      C+ :  H_P = H_A - B (Q_P - Q_A) - R Q_A |Q_A|
      C- :  H_P = H_B + B (Q_P - Q_B) + R Q_B |Q_B|

  with ``B = c / (g S)`` and ``R = dx K(S) / S**2`` (Manning-Strickler).
* :func:`equivalent_pipe_rise` replaces a cone by one uniform pipe with the
  same length, travel time and characteristic impedance.
* :func:`joukowsky_rise` is the instantaneous-closure head rise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .solver import BoundaryLaw, TimeSeries


def joukowsky_rise(c: float, du: float, g: float = 9.81) -> float:
    """Head rise ``c * du / g`` (m) for an instantaneous velocity change ``du``."""
    return c * du / g


@dataclass(frozen=True)
class MocGrid:
    length: float
    area: float
    c: float
    n_reaches: int

    def __post_init__(self):
        if self.length <= 0 or self.area <= 0 or self.c <= 0:
            raise ValueError("pipe length, area and wave speed must be positive")
        if self.n_reaches < 2:
            raise ValueError("need at least 2 reaches")

    @property
    def dx(self) -> float:
        return self.length / self.n_reaches

    @property
    def dt(self) -> float:
        return self.dx / self.c

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_reaches + 1)


def _strickler_k(area, strickler):
    if strickler is None:
        return 0.0
    rh = np.sqrt(area / np.pi) / 2.0
    return 1.0 / (strickler**2 * rh ** (4.0 / 3.0))


def moc_steady(grid: MocGrid, head: float, discharge: float, g: float = 9.81,
               strickler: Optional[float] = None) -> np.ndarray:
    """Piezometric head along a uniform pipe in steady flow from a reservoir."""
    k = _strickler_k(grid.area, strickler)
    u = discharge / grid.area
    h0 = head - u * u / (2.0 * g)
    return h0 - k * u * abs(u) * grid.x


def moc_solve(length: float, area: float, c: float, upstream: BoundaryLaw,
              downstream: BoundaryLaw, duration: float, g: float = 9.81,
              strickler: Optional[float] = None,
              n_reaches: int = 200, gauges: Sequence[float] = (),
              initial_discharge: Optional[float] = None) -> TimeSeries:
    """Method-of-characteristics solution of a uniform pipe.

    ``upstream`` is a reservoir (total head) or wall; ``downstream`` a
    discharge law or wall.  Gauge values are taken at the nearest node, on
    every MOC step.  Heads are absolute piezometric heads, so the pipe
    altitude never enters.
    """
    grid = MocGrid(length, area, c, n_reaches)
    if upstream.kind not in ("reservoir", "wall") or downstream.kind not in ("discharge", "wall"):
        raise ValueError("moc_solve supports reservoir/wall upstream and discharge/wall downstream")
    B = c / (g * area)
    R = grid.dx * _strickler_k(area, strickler) / area**2
    x = grid.x

    if initial_discharge is None:
        initial_discharge = downstream.discharge(0.0) if downstream.kind == "discharge" else 0.0
    Q = np.full(n_reaches + 1, float(initial_discharge))
    if upstream.kind == "reservoir":
        H = moc_steady(grid, upstream.head, initial_discharge, g, strickler)
    else:
        H = np.zeros(n_reaches + 1)
    nodes = [int(np.argmin(np.abs(x - xg))) for xg in gauges]
    series = TimeSeries(gauges=tuple(float(v) for v in gauges))

    def record(t):
        series.times.append(t)
        series.discharge.append([Q[j] for j in nodes])
        series.piezo_head.append([H[j] for j in nodes])

    t = 0.0
    record(t)
    n_steps = int(np.ceil(duration / grid.dt - 1e-9))
    for n in range(n_steps):
        t = (n + 1) * grid.dt
        cp = H[:-1] + B * Q[:-1] - R * Q[:-1] * np.abs(Q[:-1])
        cm = H[1:] - B * Q[1:] + R * Q[1:] * np.abs(Q[1:])
        Hn = np.empty_like(H)
        Qn = np.empty_like(Q)
        Hn[1:-1] = 0.5 * (cp[:-1] + cm[1:])
        Qn[1:-1] = (cp[:-1] - cm[1:]) / (2.0 * B)
        if upstream.kind == "reservoir":
            # velocity head lagged by one step
            h_in = upstream.head - (Q[0] / area) ** 2 / (2.0 * g)
            Hn[0] = h_in
            Qn[0] = (h_in - cm[0]) / B
        else:
            Qn[0] = 0.0
            Hn[0] = cm[0]
        q_out = downstream.discharge(t) if downstream.kind == "discharge" else 0.0
        Qn[-1] = q_out
        Hn[-1] = cp[-1] - B * q_out
        H, Q = Hn, Qn
        record(t)
    series.steps = n_steps
    return series


def gauge_rise(series: TimeSeries, k: int = 0) -> float:
    """Maximum head excursion at gauge ``k`` above its initial value."""
    _, h = series.gauge_trace(k, "piezo")
    return float(np.max(h) - h[0])


def equivalent_pipe(r_upstream: float, r_downstream: float, length: float, c: float,
                    segments: int = 100):
    """Equivalent uniform pipe of a cone: returns ``(area, wave_speed)``.

    The cone is cut into ``segments`` uniform pieces ``(l_k, S_k)``; the
    equivalent pipe keeps the length and satisfies

        L / c_e = sum(l_k / c),    L / (c_e S_e) = sum(l_k / (c S_k)).
    """
    if r_upstream <= 0 or r_downstream <= 0:
        raise ValueError("radii must be positive")
    if segments < 1:
        raise ValueError("need at least one segment")
    edges = np.linspace(0.0, length, segments + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = r_upstream + (r_downstream - r_upstream) * mid / length
    seg_area = np.pi * r**2
    ell = np.diff(edges)
    travel = np.sum(ell / c)
    c_e = length / travel
    s_e = length / (c_e * np.sum(ell / (c * seg_area)))
    return float(s_e), float(c_e)


def equivalent_pipe_rise(r_upstream: float, r_downstream: float, length: float, c: float,
                         discharge: float, closure_start: float, closure_duration: float,
                         gauge: float, head: float = 100.0, g: float = 9.81,
                         strickler: Optional[float] = None, segments: int = 100,
                         n_reaches: int = 500, duration: Optional[float] = None) -> float:
    """Head rise at ``gauge`` predicted by the equivalent-pipe method (m).

    The gauge keeps its travel-time position in the equivalent pipe.  The
    run covers the closure and the first reflection window unless
    ``duration`` is given.
    """
    s_e, c_e = equivalent_pipe(r_upstream, r_downstream, length, c, segments)
    # same travel time to the gauge in the equivalent pipe
    x_e = gauge * c_e / c
    if duration is None:
        duration = closure_start + closure_duration + 2.0 * length / c_e
    series = moc_solve(length, s_e, c_e, BoundaryLaw.reservoir(head),
                       BoundaryLaw.valve_closure(discharge, closure_start, closure_duration),
                       duration, g=g, strickler=strickler, n_reaches=n_reaches, gauges=[x_e],
                       initial_discharge=discharge)
    return gauge_rise(series)
