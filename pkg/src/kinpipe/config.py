"""Scenario configuration: one flat YAML document per run.

The accepted keys are the ``ScenarioConfig`` fields. Unknown keys, missing
required keys and invalid values are reported with the line they come from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from importlib import resources
from typing import Optional

import numpy as np
import yaml

from .geometry import Mesh, PhysicalConstants, PipeProfile, build_mesh, build_profile
from .solver import BoundaryLaw, FlowState, discrete_steady_state, still_water_state

BACKENDS = ("kinetic", "moc", "equivalent_pipe")


class ConfigError(ValueError):
    """Invalid scenario document; ``line`` is 1-based, or None for the whole document."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass
class ScenarioConfig:
    length: float
    duration: float
    name: str = "scenario"
    backend: str = "kinetic"
    # geometry: either a constant area, or radii at breakpoints
    area: Optional[float] = None
    radius_upstream: Optional[float] = None
    radius_downstream: Optional[float] = None
    radius_profile: Optional[list] = None
    slope_deg: float = 0.0
    z_upstream: float = 0.0
    # water and wall
    sonic_speed: Optional[float] = None
    compressibility: Optional[float] = None
    density: Optional[float] = None
    young_modulus: Optional[float] = None
    wall_thickness: Optional[float] = None
    gravity: float = 9.81
    strickler: Optional[float] = None
    # boundary laws and initial state
    upstream: str = "reservoir"
    upstream_head: Optional[float] = None
    downstream: str = "discharge"
    initial_discharge: float = 0.0
    closure_start: float = 0.0
    closure_duration: float = 0.0
    initial: str = "steady"
    initial_area: Optional[list] = None
    initial_flow: Optional[list] = None
    # numerics and outputs
    cells: int = 300
    courant: float = 0.8
    gauges: list = field(default_factory=list)
    output_interval: Optional[float] = None
    snapshot_interval: Optional[float] = None
    moc_reaches: int = 500
    equivalent_segments: int = 100
    output_path: Optional[str] = None

    # ------------------------------------------------------------ builders
    def constants(self) -> PhysicalConstants:
        if self.sonic_speed is not None:
            return PhysicalConstants(c=self.sonic_speed, g=self.gravity,
                                     beta=self.compressibility, rho0=self.density,
                                     strickler=self.strickler)
        diameter = None
        if self.young_modulus is not None:
            diameter = 2.0 * self.breakpoints()[1].max()
        return PhysicalConstants.from_compressibility(
            self.compressibility, self.density, g=self.gravity, strickler=self.strickler,
            young=self.young_modulus, thickness=self.wall_thickness, diameter=diameter)

    def breakpoints(self):
        """Radius breakpoints ``(x, r)`` describing the geometry."""
        if self.area is not None:
            r = math.sqrt(self.area / math.pi)
            return np.array([0.0, self.length]), np.array([r, r])
        if self.radius_profile is not None:
            pts = np.asarray(self.radius_profile, dtype=float)
            return pts[:, 0], pts[:, 1]
        return (np.array([0.0, self.length]),
                np.array([self.radius_upstream, self.radius_downstream]))

    @property
    def is_uniform(self) -> bool:
        _, r = self.breakpoints()
        return bool(np.all(r == r[0]))

    def profile(self) -> PipeProfile:
        xb, rb = self.breakpoints()
        refine = 1 if self.is_uniform else 64
        return build_profile(xb, rb, theta=math.radians(self.slope_deg), z0=self.z_upstream,
                             refine=refine)

    def mesh(self) -> Mesh:
        return build_mesh(self.profile(), self.constants(), self.cells)

    def boundary_laws(self):
        up = (BoundaryLaw.reservoir(self.upstream_head) if self.upstream == "reservoir"
              else BoundaryLaw.wall())
        if self.downstream == "discharge":
            down = BoundaryLaw.valve_closure(self.initial_discharge, self.closure_start,
                                             self.closure_duration)
        else:
            down = BoundaryLaw.wall()
        return up, down

    def initial_state(self, mesh: Optional[Mesh] = None) -> FlowState:
        mesh = self.mesh() if mesh is None else mesh
        k = self.constants()
        head = self.upstream_head
        if self.initial == "explicit":
            return FlowState(0.0, np.array(self.initial_area, dtype=float),
                             np.array(self.initial_flow, dtype=float))
        if self.initial == "rest" or self.initial_discharge == 0.0:
            if head is None:
                raise ConfigError("initial state needs upstream_head")
            return still_water_state(mesh, k, head)
        return discrete_steady_state(mesh, k, self.boundary_laws(), self.initial_discharge, head)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


REQUIRED = ("length", "duration")
KEYS = {f.name for f in fields(ScenarioConfig)}
_INT_KEYS = {"cells", "moc_reaches", "equivalent_segments"}
_STR_KEYS = {"name", "backend", "upstream", "downstream", "initial", "output_path"}
_FLOAT_LIST_KEYS = {"gauges", "initial_area", "initial_flow"}


def _key_lines(text: str) -> dict:
    node = yaml.compose(text, Loader=yaml.SafeLoader)
    if node is None:
        return {}
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("scenario document must be a mapping of keys to values",
                          node.start_mark.line + 1)
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def _coerce(key, value, line):
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError
            return int(value)
        if key in _STR_KEYS:
            return str(value)
        if key in _FLOAT_LIST_KEYS:
            return [float(v) for v in value]
        if key == "radius_profile":
            return [[float(x), float(r)] for x, r in value]
        if isinstance(value, bool):
            raise ValueError
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {value!r} for {key!r}", line) from None


def _validate(cfg: ScenarioConfig, lines: dict):
    def fail(msg, key):
        raise ConfigError(msg, lines.get(key))

    if not cfg.duration > 0:
        fail("duration must be positive", "duration")
    if not cfg.length > 0:
        fail("length must be positive", "length")
    if cfg.backend not in BACKENDS:
        fail(f"backend must be one of {BACKENDS}", "backend")
    geometry_keys = [k for k in ("area", "radius_profile") if getattr(cfg, k) is not None]
    cone = cfg.radius_upstream is not None or cfg.radius_downstream is not None
    if len(geometry_keys) + int(cone) != 1:
        fail("give exactly one of area, radius_upstream/radius_downstream, radius_profile",
             geometry_keys[0] if geometry_keys else "radius_upstream")
    if cone and (cfg.radius_upstream is None or cfg.radius_downstream is None):
        fail("cone geometry needs radius_upstream and radius_downstream", "radius_upstream")
    if cfg.area is not None and not cfg.area > 0:
        fail("area must be positive", "area")
    if cone and not (cfg.radius_upstream > 0 and cfg.radius_downstream > 0):
        fail("radii must be positive", "radius_upstream")
    if cfg.radius_profile is not None:
        pts = np.asarray(cfg.radius_profile, dtype=float)
        if (pts.ndim != 2 or len(pts) < 2 or pts[0, 0] != 0.0
                or not math.isclose(pts[-1, 0], cfg.length) or np.any(np.diff(pts[:, 0]) <= 0)):
            fail("radius_profile must be [[x, r], ...] increasing from 0 to length",
                 "radius_profile")
        if np.any(pts[:, 1] <= 0):
            fail("radii must be positive", "radius_profile")
    if not abs(cfg.slope_deg) < 90:
        fail("slope_deg must lie in (-90, 90)", "slope_deg")
    if cfg.sonic_speed is None:
        if cfg.compressibility is None or cfg.density is None:
            fail("give sonic_speed, or compressibility and density", "sonic_speed")
        wall = (cfg.young_modulus, cfg.wall_thickness)
        if (wall[0] is None) != (wall[1] is None):
            fail("young_modulus and wall_thickness go together", "young_modulus")
    else:
        if not cfg.sonic_speed > 0:
            fail("sonic_speed must be positive", "sonic_speed")
        if cfg.compressibility is not None and cfg.density is not None:
            c = 1.0 / math.sqrt(cfg.compressibility * cfg.density)
            if abs(c - cfg.sonic_speed) > 1e-12 * c:
                fail("sonic_speed inconsistent with compressibility and density", "sonic_speed")
    for key in ("compressibility", "density", "young_modulus", "wall_thickness", "strickler"):
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            fail(f"{key} must be positive", key)
    if not cfg.gravity > 0:
        fail("gravity must be positive", "gravity")
    if cfg.upstream not in ("reservoir", "wall"):
        fail("upstream must be 'reservoir' or 'wall'", "upstream")
    if cfg.downstream not in ("discharge", "wall"):
        fail("downstream must be 'discharge' or 'wall'", "downstream")
    if cfg.upstream == "reservoir" and cfg.upstream_head is None:
        fail("reservoir upstream needs upstream_head", "upstream")
    if cfg.initial not in ("steady", "rest", "explicit"):
        fail("initial must be 'steady', 'rest' or 'explicit'", "initial")
    if cfg.initial == "explicit":
        if cfg.backend != "kinetic":
            fail("explicit initial fields are only supported by the kinetic backend", "initial")
        for key in ("initial_area", "initial_flow"):
            v = getattr(cfg, key)
            if v is None or len(v) != cfg.cells:
                fail(f"{key} needs one value per cell ({cfg.cells})", key if v else "initial")
        if any(not a > 0 for a in cfg.initial_area):
            fail("initial_area values must be positive", "initial_area")
    elif cfg.initial_area is not None or cfg.initial_flow is not None:
        fail("initial_area/initial_flow need initial: explicit",
             "initial_area" if cfg.initial_area is not None else "initial_flow")
    if cfg.initial == "steady" and cfg.initial_discharge != 0.0:
        if cfg.upstream != "reservoir" or cfg.downstream != "discharge":
            fail("steady initial flow needs a reservoir upstream and a discharge downstream",
                 "initial")
    if cfg.closure_start < 0 or cfg.closure_duration < 0:
        fail("closure times must be non-negative", "closure_start")
    if cfg.cells < 2:
        fail("cells must be at least 2", "cells")
    if not 0 < cfg.courant < 1:
        fail("courant must lie in (0, 1)", "courant")
    for x in cfg.gauges:
        if not 0 <= x <= cfg.length:
            fail(f"gauge {x} outside [0, {cfg.length}]", "gauges")
    for key in ("output_interval", "snapshot_interval"):
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            fail(f"{key} must be positive", key)
    if cfg.backend == "moc" and not cfg.is_uniform:
        fail("moc backend requires a uniform pipe", "backend")
    if cfg.backend == "equivalent_pipe" and cfg.radius_upstream is None:
        fail("equivalent_pipe backend requires a cone (radius_upstream/radius_downstream)",
             "backend")
    if cfg.backend != "kinetic" and (cfg.upstream != "reservoir" or cfg.downstream != "discharge"):
        fail("reference backends need a reservoir upstream and a discharge downstream", "backend")
    if cfg.moc_reaches < 2 or cfg.equivalent_segments < 1:
        fail("moc_reaches >= 2 and equivalent_segments >= 1 required", "moc_reaches")


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document."""
    try:
        lines = _key_lines(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed document: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("scenario document must be a mapping of keys to values", 1)
    for key in raw:
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lines.get(key))
    for key in REQUIRED:
        if key not in raw or raw[key] is None:
            raise ConfigError(f"missing required key {key!r}")
    values = {k: _coerce(k, v, lines.get(k)) for k, v in raw.items()}
    cfg = ScenarioConfig(**values)
    _validate(cfg, lines)
    return cfg


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialise a config; ``parse_config(dump_config(c)) == c``."""
    data = {k: v for k, v in cfg.to_dict().items() if v is not None}
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


PRESETS = ("hammer_10s", "hammer_5s", "cone_R1_1.25")


def preset_text(name: str) -> str:
    """Commented YAML of a compiled-in preset.

    ``cone_R1_<r>`` accepts any positive upstream radius ``r``.
    """
    if name in ("hammer_10s", "hammer_5s", "cone_R1_1.25"):
        return resources.files("kinpipe.presets").joinpath(f"{name}.yaml").read_text("utf-8")
    if name.startswith("cone_R1_"):
        try:
            r1 = float(name[len("cone_R1_"):])
        except ValueError:
            raise ConfigError(f"unknown preset {name!r}") from None
        if not r1 > 0:
            raise ConfigError(f"unknown preset {name!r}")
        text = preset_text("cone_R1_1.25")
        return (text.replace("name: cone_R1_1.25", f"name: {name}")
                    .replace("radius_upstream: 1.25", f"radius_upstream: {r1!r}"))
    raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}, cone_R1_<r>")


def preset(name: str, **overrides) -> ScenarioConfig:
    cfg = parse_config(preset_text(name))
    if overrides:
        data = cfg.to_dict()
        data.update(overrides)
        cfg = parse_config(dump_config(ScenarioConfig(**data)))
    return cfg
