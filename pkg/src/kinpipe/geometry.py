"""Pipe geometry, pseudo-altitude and finite-volume mesh.

The pressurised-flow model collects slope, centre-of-mass curvature and
section change into one potential, the pseudo-altitude

    Zt(X) = Z(X) + Phi(X) - (c**2 / g) * ln S(X),

with ``Phi(X) = int_0^X Zbar d(cos theta)``.  The scheme only ever sees the
jumps of its piecewise-constant representation across cell interfaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class PhysicalConstants:
    """Physical constants of the water/pipe system.

    Either give the sonic speed ``c`` directly, or give ``beta`` and
    ``rho0`` (rigid pipe, ``c = 1/sqrt(beta*rho0)``), optionally with the
    wall data ``young``, ``thickness`` and ``diameter`` for the elastic
    correction ``c = 1/sqrt(rho0*(beta + D/(E*e)))``.
    """

    c: float
    g: float = 9.81
    beta: Optional[float] = None
    rho0: Optional[float] = None
    strickler: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"sonic speed must be positive, got {self.c}")
        if not self.g > 0:
            raise ValueError(f"gravity must be positive, got {self.g}")
        if self.strickler is not None and not self.strickler > 0:
            raise ValueError(f"Strickler coefficient must be positive, got {self.strickler}")
        if self.beta is not None and self.rho0 is not None:
            if self.beta <= 0 or self.rho0 <= 0:
                raise ValueError("beta and rho0 must be positive")

    @classmethod
    def from_compressibility(cls, beta, rho0, g=9.81, strickler=None,
                             young=None, thickness=None, diameter=None):
        """Build constants from water compressibility, with optional wall elasticity."""
        if beta <= 0 or rho0 <= 0:
            raise ValueError("beta and rho0 must be positive")
        compliance = beta
        wall = (young, thickness, diameter)
        if any(v is not None for v in wall):
            if any(v is None or v <= 0 for v in wall):
                raise ValueError("elastic correction needs positive young, thickness and diameter")
            compliance = beta + diameter / (young * thickness)
        c = 1.0 / np.sqrt(rho0 * compliance)
        return cls(c=float(c), g=g, beta=beta, rho0=rho0, strickler=strickler)


@dataclass(frozen=True)
class PipeProfile:
    """Sampled geometric description of a pipe along its axis.

    Arrays share one length; ``x`` starts at 0 and ends at ``length``.
    ``perimeter`` is the wetted perimeter of the full section.
    """

    length: float
    x: np.ndarray
    area: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    zbar: np.ndarray
    perimeter: np.ndarray

    def __post_init__(self):
        n = len(self.x)
        for name in ("area", "theta", "z", "zbar", "perimeter"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"profile field {name!r} has wrong length")
        if n < 2:
            raise ValueError("profile needs at least two samples")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("profile abscissae must be strictly increasing")
        if self.x[0] != 0.0 or not np.isclose(self.x[-1], self.length, rtol=1e-12, atol=0):
            raise ValueError("profile must span [0, length]")
        if np.any(self.area <= 0):
            raise ValueError("section area must be positive")
        if np.any(np.abs(self.theta) >= np.pi / 2):
            raise ValueError("|theta| must stay below pi/2")

    def interp(self, name: str, xq) -> np.ndarray:
        return np.interp(xq, self.x, getattr(self, name))


def _cumtrapz(y, x):
    out = np.zeros_like(x, dtype=float)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def build_profile(x_breaks: Sequence[float], radius: Sequence[float],
                  theta: Sequence[float] | float = 0.0, z0: float = 0.0,
                  zbar: Sequence[float] | None = None,
                  refine: int = 1) -> PipeProfile:
    """Build a circular pipe profile from a piecewise-linear radius law.

    Parameters
    ----------
    x_breaks : sequence of float
        Breakpoint abscissae, first one 0, strictly increasing (m).
    radius : sequence of float
        Radius at every breakpoint (m), linear in between.
    theta : float or sequence of float
        Slope angle (rad), scalar or one value per breakpoint.  Positive
        angles make the axis climb with X.
    z0 : float
        Altitude of the axis at X = 0 (m).
    zbar : sequence of float, optional
        Centre-of-mass offset per breakpoint; zero for circular sections.
    refine : int
        Extra samples per segment.  Radius is linear, so the section varies
        quadratically; refining only matters for quadrature of S-dependent
        terms.
    """
    xb = np.asarray(x_breaks, dtype=float)
    rb = np.asarray(radius, dtype=float)
    if xb.ndim != 1 or len(xb) < 2 or len(rb) != len(xb):
        raise ValueError("need at least two breakpoints with one radius each")
    if np.any(np.diff(xb) <= 0):
        raise ValueError("breakpoint abscissae must be strictly increasing")
    if xb[0] != 0.0:
        raise ValueError("first breakpoint must be at X = 0")
    if np.any(rb <= 0):
        raise ValueError("all radii must be positive")
    tb = np.broadcast_to(np.asarray(theta, dtype=float), xb.shape)
    zb = np.zeros_like(xb) if zbar is None else np.asarray(zbar, dtype=float)

    if refine > 1:
        pieces = [np.linspace(xb[k], xb[k + 1], refine + 1)[:-1] for k in range(len(xb) - 1)]
        x = np.concatenate(pieces + [xb[-1:]])
    else:
        x = xb.copy()
    r = np.interp(x, xb, rb)
    th = np.interp(x, xb, tb)
    zb = np.interp(x, xb, zb)
    z = z0 + _cumtrapz(np.sin(th), x)
    return PipeProfile(length=float(xb[-1]), x=x, area=np.pi * r**2, theta=th,
                       z=z, zbar=zb, perimeter=2.0 * np.pi * r)


def uniform_profile(length: float, area: float, theta: float = 0.0, z0: float = 0.0) -> PipeProfile:
    """Straight circular pipe of constant section."""
    radius = np.sqrt(area / np.pi)
    return build_profile([0.0, length], [radius, radius], theta=theta, z0=z0)


def cone_profile(length: float, r_upstream: float, r_downstream: float,
                 theta: float = 0.0, z0: float = 0.0, refine: int = 64) -> PipeProfile:
    """Conical pipe with linearly varying radius."""
    return build_profile([0.0, length], [r_upstream, r_downstream], theta=theta, z0=z0,
                         refine=refine)


def curvature_potential(profile: PipeProfile) -> np.ndarray:
    """Phi(X) = int_0^X Zbar d(cos theta), trapezoid rule on the samples."""
    dcos = np.diff(np.cos(profile.theta))
    out = np.zeros_like(profile.x)
    out[1:] = np.cumsum(0.5 * (profile.zbar[1:] + profile.zbar[:-1]) * dcos)
    return out


def pseudo_altitude(profile: PipeProfile, constants: PhysicalConstants) -> np.ndarray:
    """Pseudo-altitude at every profile sample (m)."""
    return (profile.z + curvature_potential(profile)
            - constants.c**2 / constants.g * np.log(profile.area))


@dataclass(frozen=True)
class Mesh:
    """Uniform cell decomposition of a pipe.

    Cell quantities are midpoint samples of the interpolated profile.
    ``barriers[k]`` is the pseudo-altitude jump across the interior
    interface between cells ``k`` and ``k+1``.
    """

    edges: np.ndarray
    centers: np.ndarray
    sizes: np.ndarray
    area: np.ndarray
    perimeter: np.ndarray
    z: np.ndarray
    phi: np.ndarray
    pseudo_altitude: np.ndarray
    barriers: np.ndarray = field(init=False)

    def __post_init__(self):
        if np.any(self.sizes <= 0) or np.any(self.area <= 0):
            raise ValueError("cell sizes and areas must be positive")
        object.__setattr__(self, "barriers", np.diff(self.pseudo_altitude))

    @property
    def n_cells(self) -> int:
        return len(self.centers)

    @property
    def length(self) -> float:
        return float(self.edges[-1] - self.edges[0])

    def nearest_cell(self, x: float) -> int:
        return int(np.clip(np.argmin(np.abs(self.centers - x)), 0, self.n_cells - 1))

    def with_pseudo_altitude(self, zt) -> "Mesh":
        """Copy of the mesh with a replaced pseudo-altitude field (manufactured cases)."""
        return Mesh(edges=self.edges, centers=self.centers, sizes=self.sizes, area=self.area,
                    perimeter=self.perimeter, z=self.z, phi=self.phi,
                    pseudo_altitude=np.asarray(zt, dtype=float))


def build_mesh(profile: PipeProfile, constants: PhysicalConstants, n_cells: int,
               zt_samples: np.ndarray | None = None) -> Mesh:
    """Discretise ``profile`` into ``n_cells`` uniform cells.

    ``zt_samples`` are pseudo-altitude values on the profile samples; they
    are recomputed from ``constants`` when omitted.
    """
    if n_cells < 2:
        raise ValueError(f"need at least 2 cells, got {n_cells}")
    if zt_samples is None:
        zt_samples = pseudo_altitude(profile, constants)
    edges = np.linspace(0.0, profile.length, n_cells + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])
    phi = np.interp(centers, profile.x, curvature_potential(profile))
    return Mesh(
        edges=edges,
        centers=centers,
        sizes=np.diff(edges),
        area=profile.interp("area", centers),
        perimeter=profile.interp("perimeter", centers),
        z=profile.interp("z", centers),
        phi=phi,
        pseudo_altitude=np.interp(centers, profile.x, zt_samples),
    )
