"""Finite-volume time integration of the pressurised pipe model.

One step is the conservative kinetic update

    U_i^{n+1} = U_i^n - dt/h_i * (F^-_{i+1/2} - F^+_{i-1/2})

followed by a semi-implicit Manning-Strickler friction sub-step.  Boundary
laws are imposed through one ghost cell per end; ghost cells share the
pseudo-altitude of their neighbour, so no barrier sits on a boundary face.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import Mesh, PhysicalConstants
from .kinetic import SQRT3, interface_flux_arrays

log = logging.getLogger(__name__)

BOUNDARY_KINDS = ("reservoir", "discharge", "wall", "periodic")


class SimulationError(RuntimeError):
    """Raised when a run produces a non-physical state."""


@dataclass(frozen=True)
class FlowState:
    t: float
    A: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        if self.A.shape != self.Q.shape:
            raise ValueError("A and Q must have the same shape")

    @property
    def U(self) -> np.ndarray:
        return self.Q / self.A


@dataclass(frozen=True)
class BoundaryLaw:
    """Boundary law at one pipe end.

    kind:
        ``reservoir`` holds the total head ``head`` (m);
        ``discharge`` imposes the discharge table ``(times, values)``,
        piecewise linear and right-continuous where a time is repeated;
        ``wall`` is a closed end; ``periodic`` wraps the domain (both ends).
    """

    kind: str
    head: Optional[float] = None
    times: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "reservoir" and (self.head is None or not np.isfinite(self.head)):
            raise ValueError("reservoir boundary needs a finite head")
        if self.kind == "discharge":
            if len(self.times) == 0 or len(self.times) != len(self.values):
                raise ValueError("discharge boundary needs matching times and values")
            if np.any(np.diff(self.times) < 0):
                raise ValueError("discharge table times must be non-decreasing")
            if not np.all(np.isfinite(self.values)):
                raise ValueError("discharge values must be finite")

    @classmethod
    def reservoir(cls, head: float) -> "BoundaryLaw":
        return cls("reservoir", head=float(head))

    @classmethod
    def wall(cls) -> "BoundaryLaw":
        return cls("wall")

    @classmethod
    def periodic(cls) -> "BoundaryLaw":
        return cls("periodic")

    @classmethod
    def valve_closure(cls, q0: float, start: float, duration: float) -> "BoundaryLaw":
        """Discharge held at ``q0`` until ``start``, then linearly cut to 0 in ``duration``."""
        if duration < 0 or start < 0:
            raise ValueError("closure start and duration must be non-negative")
        return cls("discharge", times=(0.0, float(start), float(start + duration)),
                   values=(float(q0), float(q0), 0.0))

    def discharge(self, t: float) -> float:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        k = int(np.searchsorted(times, t, side="right")) - 1
        if k < 0:
            return float(values[0])
        if k >= len(times) - 1:
            return float(values[-1])
        t0, t1 = times[k], times[k + 1]
        w = (t - t0) / (t1 - t0)
        return float(values[k] + w * (values[k + 1] - values[k]))


def cfl_timestep(state: FlowState, mesh: Mesh, courant: float, c: float) -> float:
    """Largest time step allowed by the positivity condition, scaled by ``courant``."""
    if not 0.0 < courant < 1.0:
        raise ValueError(f"courant number must lie in (0, 1), got {courant}")
    if not (np.all(np.isfinite(state.A)) and np.all(np.isfinite(state.Q))):
        raise SimulationError(f"non-finite state at t={state.t}")
    speed = np.max(np.abs(state.Q / state.A)) + SQRT3 * c
    return float(courant * np.min(mesh.sizes) / speed)


def _ghost_velocity_for_mass_flux(A, U_inner, q_target, c, side):
    """Ghost velocity making the flat-equilibrium mass flux equal ``q_target``.

    The ghost shares the interior area and no barrier separates them, so the
    flux is ``rho/2 * ((U_L + a)**2 - (U_R - a)**2)`` with ``rho = A/(2a)``.
    """
    a = SQRT3 * c
    rho = A / (2.0 * a)
    if side == "left":
        return -a + np.sqrt(max(2.0 * q_target / rho + (U_inner - a) ** 2, 0.0))
    return a - np.sqrt(max((U_inner + a) ** 2 - 2.0 * q_target / rho, 0.0))


def _reservoir_area(head, zt, Q, A_guess, constants, maxiter=50, tol=1e-14):
    """Solve ``c^2 ln A + g zt + (Q/A)^2/2 = g head`` by fixed-point iteration."""
    c2, g = constants.c**2, constants.g
    A = A_guess
    for _ in range(maxiter):
        A_new = np.exp((g * (head - zt) - 0.5 * (Q / A) ** 2) / c2)
        if abs(A_new - A) <= tol * A_new:
            return float(A_new)
        A = A_new
    raise SimulationError(f"reservoir head closure did not converge (head={head})")


def _ghost(law: BoundaryLaw, A, Q, zt, t, constants, side):
    if law.kind == "wall":
        return A, -Q
    if law.kind == "reservoir":
        return _reservoir_area(law.head, zt, Q, A, constants), Q
    if law.kind == "discharge":
        u = _ghost_velocity_for_mass_flux(A, Q / A, law.discharge(t), constants.c, side)
        return A, A * u
    raise ValueError(f"{law.kind} boundary has no single-end ghost")


def apply_boundaries(state: FlowState, mesh: Mesh, bcs, t: float,
                     constants: PhysicalConstants):
    """Ghost states ``((A, Q) left, (A, Q) right)`` for the boundary pair ``bcs``."""
    left, right = bcs
    if left.kind == "periodic" or right.kind == "periodic":
        if left.kind != right.kind:
            raise ValueError("periodic boundaries must be used on both ends")
        return (state.A[-1], state.Q[-1]), (state.A[0], state.Q[0])
    zt = mesh.pseudo_altitude
    gl = _ghost(left, state.A[0], state.Q[0], zt[0], t, constants, "left")
    gr = _ghost(right, state.A[-1], state.Q[-1], zt[-1], t, constants, "right")
    return gl, gr


def friction_coefficient(mesh: Mesh, constants: PhysicalConstants) -> np.ndarray:
    """K(S) = 1 / (K_s^2 R_h^{4/3}) per cell; zero when no Strickler value is set."""
    if constants.strickler is None:
        return np.zeros(mesh.n_cells)
    rh = mesh.area / mesh.perimeter
    return 1.0 / (constants.strickler**2 * rh ** (4.0 / 3.0))


def apply_friction(state: FlowState, mesh: Mesh, dt: float,
                   constants: PhysicalConstants, speed: Optional[np.ndarray] = None) -> FlowState:
    """Semi-implicit friction sub-step ``Q <- Q / (1 + dt g K(S) |U|)``.

    ``speed`` is the |U| used in the denominator, by default taken from
    ``state``; ``step`` passes the pre-transport velocity.
    """
    k = friction_coefficient(mesh, constants)
    u = np.abs(state.Q / state.A) if speed is None else speed
    return replace(state, Q=state.Q / (1.0 + dt * constants.g * k * u))


def _flux_divergence(state: FlowState, mesh: Mesh, bcs, constants: PhysicalConstants,
                     equilibrium: str = "flat"):
    """``(F^-_{i+1/2} - F^+_{i-1/2})`` per cell for both components."""
    (al, ql), (ar, qr) = apply_boundaries(state, mesh, bcs, state.t, constants)
    A = np.concatenate(([al], state.A, [ar]))
    Q = np.concatenate(([ql], state.Q, [qr]))
    zt = mesh.pseudo_altitude
    if bcs[0].kind == "periodic":
        zt_ext = np.concatenate(([zt[-1]], zt, [zt[0]]))
    else:
        zt_ext = np.concatenate(([zt[0]], zt, [zt[-1]]))
    U = Q / A
    fa, fqm, _, fqp = interface_flux_arrays(A[:-1], U[:-1], A[1:], U[1:], np.diff(zt_ext),
                                            constants.c, constants.g, equilibrium)
    # one mass flux per face keeps the update exactly conservative
    return fa[1:] - fa[:-1], fqm[1:] - fqp[:-1]


def step(state: FlowState, mesh: Mesh, dt: float, bcs, constants: PhysicalConstants,
         equilibrium: str = "flat", friction: bool = True) -> FlowState:
    """Advance ``state`` by ``dt``: kinetic transport, then friction."""
    da, dq = _flux_divergence(state, mesh, bcs, constants, equilibrium)
    ratio = dt / mesh.sizes
    A_new = state.A - ratio * da
    Q_new = state.Q - ratio * dq
    bad = np.flatnonzero(~(A_new > 0))
    if bad.size:
        i = int(bad[0])
        raise SimulationError(
            f"non-positive wet area A={A_new[i]:.6g} in cell {i} at t={state.t + dt:.6g}")
    new = FlowState(t=state.t + dt, A=A_new, Q=Q_new)
    if friction and constants.strickler is not None:
        new = apply_friction(new, mesh, dt, constants, speed=np.abs(state.Q / state.A))
    return new


@dataclass(frozen=True)
class Diagnostics:
    total_head: np.ndarray
    piezometric_head: np.ndarray
    entropy: float


def diagnostics(state: FlowState, mesh: Mesh, constants: PhysicalConstants) -> Diagnostics:
    """Heads in metres per cell and the total discrete entropy.

    Total head is ``(U^2/2 + c^2 ln A + g Zt) / g``, which equals
    ``U^2/2g + (c^2/g) ln(A/S) + Phi + Z``.  The entropy density is
    ``Q^2/2A + c^2 A ln A + g A Zt``, summed with cell sizes.
    """
    c2, g = constants.c**2, constants.g
    U = state.Q / state.A
    zt = mesh.pseudo_altitude
    total = (0.5 * U * U + c2 * np.log(state.A) + g * zt) / g
    piezo = mesh.z + c2 / g * (state.A / mesh.area - 1.0)
    e = 0.5 * state.Q * U + c2 * state.A * np.log(state.A) + g * state.A * zt
    return Diagnostics(total_head=total, piezometric_head=piezo,
                       entropy=float(np.sum(e * mesh.sizes)))


def still_water_state(mesh: Mesh, constants: PhysicalConstants, head: float,
                      t: float = 0.0) -> FlowState:
    """Fluid at rest with ``c^2 ln A + g Zt = g head`` in every cell."""
    A = np.exp(constants.g * (head - mesh.pseudo_altitude) / constants.c**2)
    return FlowState(t=t, A=A, Q=np.zeros_like(A))


def steady_flow_state(mesh: Mesh, constants: PhysicalConstants, head: float,
                      discharge: float, t: float = 0.0) -> FlowState:
    """Steady flow of ``discharge`` fed by a reservoir of total head ``head`` at X=0.

    Integrates the total-head balance ``dH/dX = -K(S) U|U|`` cell by cell and
    inverts the head relation for A in every cell.
    """
    k = friction_coefficient(mesh, constants)
    A = np.empty(mesh.n_cells)
    H = head
    a_prev = mesh.area[0]
    for i in range(mesh.n_cells):
        if i > 0:
            u_mid = discharge / (0.5 * (A[i - 1] + mesh.area[i]))
            H -= 0.5 * (k[i - 1] + k[i]) * u_mid * abs(u_mid) * (mesh.centers[i] - mesh.centers[i - 1])
        A[i] = _reservoir_area(H, mesh.pseudo_altitude[i], discharge, a_prev, constants)
        a_prev = A[i]
    return FlowState(t=t, A=A, Q=np.full(mesh.n_cells, float(discharge)))


def discrete_steady_state(mesh: Mesh, constants: PhysicalConstants, bcs,
                          discharge: float, head: float, equilibrium: str = "flat",
                          t: float = 0.0, tol: float = 1e-11, maxiter: int = 30) -> FlowState:
    """Exact fixed point of :func:`step` under the boundary pair ``bcs``.

    The continuous steady profile of :func:`steady_flow_state` is a fixed
    point of the scheme only up to truncation error, which is large across
    strong barriers.  Newton's method on the discrete balance

        F^-_{i+1/2} - F^+_{i-1/2} + h_i g K_i |U_i| Q_i = 0

    removes the residual.  The Jacobian is banded and built by coloured
    finite differences.
    """
    from scipy.linalg import solve_banded

    n = mesh.n_cells
    guess = steady_flow_state(mesh, constants, head, discharge)
    a_ref = guess.A.copy()
    q_ref = max(abs(discharge), 1e-3 * constants.c * float(np.max(a_ref)))
    f_ref = constants.c**2 * float(np.max(a_ref))
    kf = friction_coefficient(mesh, constants) * constants.g * mesh.sizes

    def unpack(x):
        return a_ref * x[0::2], q_ref * x[1::2]

    def residual(x):
        A, Q = unpack(x)
        state = FlowState(t=t, A=A, Q=Q)
        ra, rq = _flux_divergence(state, mesh, bcs, constants, equilibrium)
        rq = rq + kf * np.abs(Q / A) * Q
        out = np.empty(2 * n)
        out[0::2] = ra * constants.c / f_ref
        out[1::2] = rq / f_ref
        return out

    x = np.empty(2 * n)
    x[0::2] = 1.0
    x[1::2] = guess.Q / q_ref
    bw = 3
    r = residual(x)
    best = np.max(np.abs(r))
    for _ in range(maxiter):
        if best < tol:
            break
        band = np.zeros((2 * bw + 1, 2 * n))
        eps = 1e-7
        for color in range(2 * bw):
            cols = np.arange(color, 2 * n, 2 * bw)
            xp = x.copy()
            xp[cols] += eps
            dr = (residual(xp) - r) / eps
            for j in cols:
                # cell m touches the residual rows of cells m-1..m+1
                m = j // 2
                lo, hi = max(0, 2 * m - 2), min(2 * n, 2 * m + 4)
                band[bw + np.arange(lo, hi) - j, j] = dr[lo:hi]
        x_new = x - solve_banded((bw, bw), band, r)
        r_new = residual(x_new)
        norm = np.max(np.abs(r_new))
        if not norm < best:
            break
        x, r, best = x_new, r_new, norm
    if best >= tol:
        raise SimulationError(f"discrete steady state did not converge (residual {best:.3e})")
    A, Q = unpack(x)
    return FlowState(t=t, A=A, Q=Q)


@dataclass
class TimeSeries:
    """Gauge traces sampled at output times, plus optional full snapshots."""

    times: list = field(default_factory=list)
    gauges: tuple = ()
    discharge: list = field(default_factory=list)
    piezo_head: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    entropy_violations: list = field(default_factory=list)
    steps: int = 0

    def as_arrays(self):
        return (np.asarray(self.times), np.asarray(self.discharge).reshape(len(self.times), -1),
                np.asarray(self.piezo_head).reshape(len(self.times), -1))

    def gauge_trace(self, k: int = 0, quantity: str = "discharge"):
        t, q, h = self.as_arrays()
        return t, (q if quantity == "discharge" else h)[:, k]


def simulate(state: FlowState, mesh: Mesh, bcs, constants: PhysicalConstants,
             duration: float, courant: float = 0.8, gauges: Sequence[float] = (),
             output_interval: Optional[float] = None, snapshot_every: Optional[float] = None,
             equilibrium: str = "flat", friction: bool = True,
             entropy_rtol: float = 1e-8, max_steps: Optional[int] = None) -> TimeSeries:
    """Integrate from ``state`` over ``duration`` seconds.

    Gauges are sampled at the nearest cell centre on every output time
    (every step when ``output_interval`` is None).  Steps are clipped to
    land exactly on output times.  Entropy increases larger than
    ``entropy_rtol`` relative are logged, not raised.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    cells = [mesh.nearest_cell(x) for x in gauges]
    series = TimeSeries(gauges=tuple(float(x) for x in gauges))
    t_end = state.t + duration

    def record(s: FlowState, diag: Diagnostics):
        series.times.append(s.t)
        series.discharge.append([s.Q[i] for i in cells])
        series.piezo_head.append([diag.piezometric_head[i] for i in cells])

    diag = diagnostics(state, mesh, constants)
    record(state, diag)
    series.entropy.append(diag.entropy)
    if snapshot_every is not None:
        series.snapshots.append(state)
    t0 = state.t
    k_out = 1
    next_out = t0 + output_interval if output_interval else None
    next_snap = state.t + snapshot_every if snapshot_every else None

    n = 0
    while state.t < t_end * (1 - 1e-15) and t_end - state.t > 1e-12:
        dt = cfl_timestep(state, mesh, courant, constants.c)
        limit = t_end
        if next_out is not None:
            limit = min(limit, next_out)
        if dt >= limit - state.t:
            dt = limit - state.t
        try:
            state = step(state, mesh, dt, bcs, constants, equilibrium, friction)
        except SimulationError as exc:
            raise SimulationError(f"step {n + 1} (t={state.t:.6g}): {exc}") from exc
        n += 1
        diag = diagnostics(state, mesh, constants)
        e_prev = series.entropy[-1]
        if diag.entropy - e_prev > entropy_rtol * abs(e_prev):
            series.entropy_violations.append((n, state.t, diag.entropy - e_prev))
            log.info("entropy increase at step %d (t=%.6g): %.3e", n, state.t,
                     diag.entropy - e_prev)
        series.entropy.append(diag.entropy)
        at_output = next_out is None or abs(state.t - next_out) <= 1e-12 * max(1.0, next_out)
        if at_output or state.t >= t_end - 1e-12:
            record(state, diag)
            if next_out is not None:
                # multiples of the interval, so output times do not drift
                while next_out <= state.t + 1e-12:
                    k_out += 1
                    next_out = t0 + k_out * output_interval
        if next_snap is not None and state.t >= next_snap - 1e-12:
            series.snapshots.append(state)
            while next_snap <= state.t + 1e-12:
                next_snap += snapshot_every
        if max_steps is not None and n >= max_steps:
            break
    series.steps = n
    return series
