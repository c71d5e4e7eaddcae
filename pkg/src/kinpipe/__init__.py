"""Kinetic finite-volume solver for unsteady pressurised flow in closed pipes."""

from .config import ConfigError, ScenarioConfig, dump_config, load_config, parse_config, preset
from .geometry import (Mesh, PhysicalConstants, PipeProfile, build_mesh, build_profile,
                       cone_profile, pseudo_altitude, uniform_profile)
from .io import compare_rises, run, run_scenario, write_snapshots, write_timeseries
from .kinetic import (CellKineticState, FluxPair, exact_flux, interface_flux,
                      maxwellian_from_macro, partial_moments)
from .oracles import (equivalent_pipe, equivalent_pipe_rise, gauge_rise, joukowsky_rise,
                      moc_solve)
from .solver import (BoundaryLaw, FlowState, SimulationError, TimeSeries, cfl_timestep,
                     discrete_steady_state, simulate, step)

__all__ = [
    "BoundaryLaw", "CellKineticState", "ConfigError", "FlowState", "FluxPair", "Mesh",
    "PhysicalConstants", "PipeProfile", "ScenarioConfig", "SimulationError", "TimeSeries",
    "build_mesh", "build_profile", "cfl_timestep", "compare_rises", "cone_profile",
    "discrete_steady_state", "dump_config", "equivalent_pipe", "equivalent_pipe_rise",
    "exact_flux", "gauge_rise", "interface_flux", "joukowsky_rise", "load_config",
    "maxwellian_from_macro", "moc_solve", "parse_config", "partial_moments", "preset",
    "pseudo_altitude", "run", "run_scenario", "simulate", "step", "uniform_profile",
    "write_snapshots", "write_timeseries",
]
