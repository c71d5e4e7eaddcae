import math

import numpy as np
import pytest

from kinpipe.oracles import (MocGrid, equivalent_pipe, equivalent_pipe_rise, gauge_rise,
                             joukowsky_rise, moc_solve, moc_steady)
from kinpipe.solver import BoundaryLaw

G = 9.81


def test_joukowsky_values():
    assert joukowsky_rise(1400.0, 5.0) == pytest.approx(713.5575942915392, rel=1e-15)
    assert joukowsky_rise(1400.0, 5.0) == pytest.approx(713.56, abs=5e-3)
    assert joukowsky_rise(1400.0, 0.0) == 0.0
    assert joukowsky_rise(1400.0, 10.0) == 2 * joukowsky_rise(1400.0, 5.0)


def test_moc_grid_validation():
    with pytest.raises(ValueError):
        MocGrid(0.0, 1.0, 1.0, 10)
    with pytest.raises(ValueError):
        MocGrid(1.0, 1.0, 1.0, 1)
    g = MocGrid(100.0, 2.0, 1000.0, 50)
    assert g.dx == 2.0 and g.dt == 2e-3 and len(g.x) == 51


def test_moc_rejects_unsupported_boundaries():
    with pytest.raises(ValueError):
        moc_solve(100.0, 2.0, 1000.0, BoundaryLaw.periodic(), BoundaryLaw.periodic(), 1.0)


@pytest.mark.parametrize("strickler", [None, 60.0])
def test_moc_steady_state_is_preserved(strickler):
    up = BoundaryLaw.reservoir(300.0)
    down = BoundaryLaw.valve_closure(10.0, 1e9, 0.0)
    ts = moc_solve(2000.0, 2.0, 1000.0, up, down, 5.0, strickler=strickler, n_reaches=100,
                   gauges=[0.0, 1000.0, 2000.0])
    _, q, h = ts.as_arrays()
    np.testing.assert_allclose(q, 10.0, rtol=1e-13)
    np.testing.assert_allclose(h, np.broadcast_to(h[0], h.shape), rtol=1e-13)
    ref = moc_steady(MocGrid(2000.0, 2.0, 1000.0, 100), 300.0, 10.0, G, strickler)
    assert h[0, 1] == pytest.approx(ref[50], rel=1e-14)


def test_moc_square_wave():
    L, c, S, Q0 = 1000.0, 1400.0, 2.0, 10.0
    n = 200
    up = BoundaryLaw.reservoir(100.0)
    down = BoundaryLaw.valve_closure(Q0, 0.0, 0.0)
    ts = moc_solve(L, S, c, up, down, 4.0 * 4 * L / c, n_reaches=n, gauges=[L],
                   initial_discharge=Q0)
    t, h = ts.gauge_trace(0, "piezo")
    rise = h - h[0]
    dj = joukowsky_rise(c, Q0 / S)
    assert np.max(rise) == pytest.approx(dj, rel=1e-3)
    # frictionless reflection of a square wave: alternates +dj and -dj
    assert np.min(rise[1:]) == pytest.approx(-dj, rel=1e-3)
    up_cross = t[1:][(rise[1:] > 0) & (rise[:-1] <= 0)]
    period = np.diff(up_cross)
    dt = L / n / c
    assert np.all(np.abs(period - 4 * L / c) <= dt + 1e-12)


def test_gauge_rise_from_initial_value():
    up = BoundaryLaw.reservoir(100.0)
    down = BoundaryLaw.valve_closure(5.0, 0.0, 0.0)
    ts = moc_solve(500.0, 1.0, 1000.0, up, down, 0.9, gauges=[500.0], n_reaches=50,
                   initial_discharge=5.0)
    assert gauge_rise(ts) == pytest.approx(joukowsky_rise(1000.0, 5.0), rel=1e-3)


def test_equivalent_pipe_of_uniform_pipe():
    s_e, c_e = equivalent_pipe(1.0, 1.0, 1000.0, 1400.0)
    assert s_e == pytest.approx(math.pi, rel=1e-14) and c_e == pytest.approx(1400.0, rel=1e-14)


def test_equivalent_pipe_area_is_harmonic_mean():
    s_e, c_e = equivalent_pipe(2.0, 1.0, 1000.0, 1400.0, segments=4)
    r = np.array([1.875, 1.625, 1.375, 1.125])
    assert s_e == pytest.approx(4.0 / np.sum(1.0 / (math.pi * r**2)), rel=1e-14)
    assert c_e == pytest.approx(1400.0, rel=1e-14)


def test_equivalent_pipe_validation():
    with pytest.raises(ValueError):
        equivalent_pipe(0.0, 1.0, 10.0, 1.0)
    with pytest.raises(ValueError):
        equivalent_pipe(1.0, 1.0, 10.0, 1.0, segments=0)


def test_degenerate_cone_matches_uniform_moc():
    kw = dict(discharge=10.0, closure_start=1.5, closure_duration=0.0, gauge=96.0,
              strickler=9000.0)
    rise = equivalent_pipe_rise(1.0, 1.0, 1000.0, 1400.0, **kw)
    ts = moc_solve(1000.0, math.pi, 1400.0, BoundaryLaw.reservoir(100.0),
                   BoundaryLaw.valve_closure(10.0, 1.5, 0.0), 1.5 + 2000.0 / 1400.0,
                   strickler=9000.0, n_reaches=500, gauges=[96.0], initial_discharge=10.0)
    assert rise == pytest.approx(gauge_rise(ts), rel=1e-13)
    assert rise == pytest.approx(joukowsky_rise(1400.0, 10.0 / math.pi), rel=0.01)


@pytest.mark.parametrize("r1", [1.25, 2.5, 4.0])
def test_equivalent_pipe_segment_convergence(r1):
    kw = dict(discharge=10.0, closure_start=1.5, closure_duration=0.0, gauge=96.0,
              strickler=9000.0)
    coarse = equivalent_pipe_rise(r1, 1.0, 1000.0, 1400.0, segments=100, **kw)
    fine = equivalent_pipe_rise(r1, 1.0, 1000.0, 1400.0, segments=1000, **kw)
    assert abs(coarse - fine) < 0.005 * fine


def test_equivalent_rise_decreases_with_upstream_radius():
    kw = dict(discharge=10.0, closure_start=1.5, closure_duration=0.0, gauge=96.0,
              strickler=9000.0, n_reaches=200)
    rises = [equivalent_pipe_rise(r, 1.0, 1000.0, 1400.0, **kw) for r in (1.0, 2.0, 3.0, 4.0)]
    assert np.all(np.diff(rises) < 0)
