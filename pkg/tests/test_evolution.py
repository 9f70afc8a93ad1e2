from __future__ import annotations

import math

import numpy as np
import pytest

from alphapatch import evolution
from alphapatch.evolution import (PatchSystem, RedistributionParams, StopConditions, adaptive_dt,
                                  default_B, redistribute, redistribute_system, rk4_step, simulate)
from alphapatch.geometry import circle, contour_area, ellipse, hausdorff, min_chord
from alphapatch.kernel import ContactError
from alphapatch.scenarios import two_circles


def pair(n=64, alpha=0.7):
    return PatchSystem([circle(n, center=(-1.25, 0.0)), circle(n, center=(1.25, 0.0), phase=math.pi, id=1)],
                       alpha)


def test_rk4_keeps_point_symmetry():
    s = rk4_step(pair(), 0.02)
    a, b = s.contours
    assert np.max(np.abs(a.nodes + b.nodes)) <= 1e-10


def test_single_circle_centre_fixed():
    s0 = PatchSystem([circle(100)], 0.7)
    s1 = rk4_step(s0, 0.05)
    assert np.linalg.norm(s1.contours[0].nodes.mean(axis=0)) <= 1e-9
    assert s1.time == pytest.approx(0.05)


def test_rk4_refuses_zero_dt():
    with pytest.raises(ValueError):
        rk4_step(pair(16), 0.0)


def run_fixed(system, dt, t_end):
    for _ in range(int(round(t_end / dt))):
        system = rk4_step(system, dt)
    return system.state()


def test_rk4_fourth_order_self_convergence():
    s0 = pair(48)
    x1, x2, x3 = (run_fixed(s0, dt, 0.4) for dt in (0.1, 0.05, 0.025))
    ratio = np.max(np.abs(x1 - x2)) / np.max(np.abs(x2 - x3))
    assert 12.0 <= ratio <= 20.0


def test_backward_step_undoes_forward():
    s0 = pair(48)
    back = rk4_step(rk4_step(s0, 0.01), -0.01)
    assert np.max(np.abs(back.state() - s0.state())) <= 1e-9
    assert back.time == pytest.approx(0.0, abs=1e-15)


def test_adaptive_dt_chord():
    s = PatchSystem([circle(200)], 0.7)
    assert adaptive_dt(s, 0.5) == pytest.approx(0.5 * 2 * math.sin(math.pi / 200), rel=1e-12)
    assert adaptive_dt(s, 0.5) == pytest.approx(0.0157, abs=1e-4)
    assert adaptive_dt(s, 0.5, dt_max=0.01) == 0.01
    with pytest.raises(ValueError):
        adaptive_dt(s, 0.0)


def test_adaptive_dt_follows_smallest_chord():
    c = circle(200)
    nodes = c.nodes.copy()
    nodes[1] = nodes[0] + 0.1 * (nodes[1] - nodes[0])
    s0, s1 = PatchSystem([c], 0.7), PatchSystem([c.with_nodes(nodes)], 0.7)
    assert adaptive_dt(s1, 0.5) == pytest.approx(adaptive_dt(s0, 0.5) / 10, rel=1e-9)


def test_default_B():
    assert default_B(0.7) == 0.5


# ----------------------------------------------------------- redistribution

def hand_count(nu=0.05, L=3.0, a=2.0 / 3.0):
    # unit circle: every curvature average is 1
    k_tilde = (1.0 / (nu * L)) * L ** a + math.sqrt(2.0)
    return 2 * math.pi * k_tilde


def test_redistribute_unit_circle_count_and_spacing():
    assert hand_count() == pytest.approx(96.0, abs=0.1)
    out = redistribute(circle(200), RedistributionParams())
    assert len(out) in (97, 98, 99)
    chords = np.linalg.norm(np.roll(out.nodes, -1, axis=0) - out.nodes, axis=1)
    assert chords.max() / chords.min() - 1.0 <= 0.01


def test_redistribute_pins_node_zero():
    c = ellipse(150, 1.2, 0.8, center=(0.3, -0.2))
    assert np.array_equal(redistribute(c, RedistributionParams()).nodes[0], c.nodes[0])


def test_redistribute_uniform_circle_is_idempotent():
    p = RedistributionParams()
    once = redistribute(circle(200), p)
    twice = redistribute(once, p)
    assert len(twice) == len(once)
    assert np.max(np.linalg.norm(twice.nodes - once.nodes, axis=1)) < 1e-6


def test_redistribute_keeps_the_curve():
    c = circle(200)
    out = redistribute(c, RedistributionParams())
    assert hausdorff(c, out) <= 1e-5
    e = ellipse(300, 1.1, 1.0)
    assert hausdorff(e, redistribute(e, RedistributionParams())) <= 1e-5


def test_redistribute_spacing_floor():
    p = RedistributionParams(delta_min=0.1)
    out = redistribute(ellipse(200, 2.0, 0.3), p)
    assert min_chord([out]) >= p.delta_min / math.sqrt(2.0) * (1 - 1e-6)


def test_denser_with_smaller_nu():
    c = circle(200)
    assert len(redistribute(c, RedistributionParams(nu=0.03))) > len(redistribute(c, RedistributionParams()))


def test_redistribution_params_validation():
    with pytest.raises(ValueError):
        RedistributionParams(nu=0.0)


# ---------------------------------------------------------------- simulate

def test_zero_steps_yields_initial_state_only():
    s = pair(32)
    out = list(simulate(s, stop=StopConditions(max_steps=0)))
    assert len(out) == 1 and out[0][0] is s and out[0][1].step == 0


def test_simulate_needs_a_stop():
    with pytest.raises(ValueError):
        next(simulate(pair(32)))


def test_two_circles_approach_and_conserve_area():
    s = two_circles(0.7, n=100)
    recs = [r for _, r in simulate(s, stop=StopConditions(max_steps=40))]
    d = np.array([r.min_distance for r in recs])
    assert np.all(np.diff(d[5:]) < 0.0)
    a0 = np.array(recs[0].areas)
    assert np.max(np.abs(np.array(recs[-1].areas) / a0 - 1.0)) <= 1e-3
    t = np.array([r.t for r in recs])
    assert np.all(np.diff(t) > 0.0)


def test_t_end_is_hit_exactly():
    last = None
    for s, r in simulate(pair(32), stop=StopConditions(t_end=0.1)):
        last = s
    assert last.time == pytest.approx(0.1, abs=1e-14)


def test_backward_simulation_runs_time_backwards():
    recs = [r for _, r in simulate(pair(32), stop=StopConditions(max_steps=3), backward=True)]
    assert all(r.dt < 0 for r in recs[1:])
    assert recs[-1].t < 0.0


def test_stop_statuses():
    recs = [r for _, r in simulate(pair(32), stop=StopConditions(max_steps=50, max_nodes=10))]
    assert recs[-1].status == "max_nodes" and len(recs) == 2
    recs = [r for _, r in simulate(pair(32), stop=StopConditions(max_steps=50, min_distance=10.0))]
    assert recs[-1].status == "min_distance"


def test_contact_ends_run_with_last_good_state(monkeypatch):
    calls = {"n": 0}
    real = evolution.rk4_step

    def flaky(system, dt, workers=None):
        calls["n"] += 1
        if calls["n"] == 3:
            raise ContactError("touch")
        return real(system, dt, workers)

    monkeypatch.setattr(evolution, "rk4_step", flaky)
    out = list(simulate(pair(32), stop=StopConditions(max_steps=10)))
    assert out[-1][1].status == "contact"
    assert out[-1][1].step == 2
    assert out[-1][0] is out[-2][0]


def test_alpha_one_moves_along_normals_only():
    s = PatchSystem([ellipse(80, 1.2, 0.8)], 1.0)
    s1 = rk4_step(s, 0.01)
    a0 = contour_area(s.contours[0])[0]
    assert contour_area(s1.contours[0])[0] == pytest.approx(a0, rel=1e-3)


def test_redistribute_system_preserves_ids_and_strengths():
    s = PatchSystem([circle(50, strength=0.5, id=3), ellipse(60, 1.0, 0.5, (3.0, 0.0), id=7)], 0.7)
    r = redistribute_system(s, RedistributionParams())
    assert [c.id for c in r.contours] == [3, 7]
    assert r.contours[0].strength == 0.5
