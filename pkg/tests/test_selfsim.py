from __future__ import annotations

import math

import numpy as np
import pytest

from alphapatch.evolution import PatchSystem, RedistributionParams, redistribute_system
from alphapatch.geometry import (circle, contour_area, ellipse, eval_segment, min_distance,
                                 segment_geometry)
from alphapatch.kernel import ContactError
from alphapatch.selfsim import (RescaleMap, apex_deviation, backward_evolve, hyperbolic_profile,
                                make_wedge, normal_speed, rescale_physical_to_selfsim,
                                rescale_selfsim_to_physical, rescaled_velocities, rescaled_velocity,
                                to_physical, to_selfsimilar, wedge_system)

DELTA = 1.0 / 0.7


def test_unit_gap_is_identity_shift():
    rmap = RescaleMap(t_star=2.0, x_star=(0.5, -1.0))
    c = ellipse(30, 1.0, 0.5, (0.5, -1.0))
    (y,), tau = rescale_physical_to_selfsim([c], 1.0, rmap)
    assert tau == 0.0
    assert np.allclose(y.nodes, c.nodes - [0.5, -1.0], atol=1e-15)


def test_round_trip():
    rmap = RescaleMap(t_star=6.887794662, x_star=(1.36439899, -0.28345455))
    cs = [ellipse(40, 1.1, 1.0, (-1.25, 0.0)), ellipse(40, 1.1, 1.0, (1.25, 0.0), id=1)]
    ys, tau = rescale_physical_to_selfsim(cs, 6.5, rmap)
    back, t = rescale_selfsim_to_physical(ys, tau, rmap)
    assert t == pytest.approx(6.5, abs=1e-12)
    for a, b in zip(cs, back):
        assert np.max(np.abs(a.nodes - b.nodes)) <= 1e-12


def test_ellipse_run_numbers():
    rmap = RescaleMap(t_star=6.887794662, x_star=(1.36439899, -0.28345455))
    gap = 6.887794662 - 6.81482306
    assert gap == pytest.approx(0.072971602, abs=1e-12)
    assert rmap.tau(6.81482306) == pytest.approx(2.6177, abs=1e-4)
    c = circle(20, center=(2.0, 1.0))
    (y,), _ = rescale_physical_to_selfsim([c], 6.81482306, rmap)
    assert np.allclose(y.nodes, (c.nodes - rmap.x_star) * gap ** (-1 / 0.7), rtol=1e-13)


def test_area_factor():
    rmap = RescaleMap(t_star=1.0)
    c = ellipse(60, 0.3, 0.2, (0.1, 0.0))
    (y,), tau = rescale_physical_to_selfsim([c], 0.9, rmap)
    ratio = contour_area(y)[0] / contour_area(c)[0]
    assert ratio == pytest.approx(0.1 ** (-2 * DELTA), rel=1e-10)


def test_rescale_after_collapse_refused():
    with pytest.raises(ValueError):
        RescaleMap(t_star=1.0).tau(1.0)


def test_system_conversion_sets_mode_and_time():
    rmap = RescaleMap(t_star=3.0)
    s = PatchSystem([circle(20, center=(1.5, 0))], 0.7, time=2.0)
    ss = to_selfsimilar(s, rmap)
    assert ss.mode == "selfsimilar" and ss.time == pytest.approx(0.0)
    back = to_physical(ss, rmap)
    assert back.mode == "physical" and back.time == pytest.approx(2.0)


def test_drift_term_limit():
    # weak patches far from the origin: f(y) - f(0) is negligible. (Shrinking
    # the radius alone would not do, the self-induced speed goes like R**(1 - alpha).)
    s = PatchSystem([circle(40, 0.5, (50.0, 30.0), strength=-1e-9),
                     circle(40, 0.5, (-60.0, 10.0), strength=-1e-9, id=1)], 0.7, "selfsimilar")
    F = rescaled_velocities(s)
    y = s.state()
    assert np.max(np.linalg.norm(F - DELTA * y, axis=1) / np.linalg.norm(DELTA * y, axis=1)) <= 1e-6


def test_single_node_accessor_matches():
    s = PatchSystem([ellipse(40, 1.0, 0.6, (2.0, 0.0)), circle(30, 0.5, (-2.0, 1.0), id=5)], 0.7, "selfsimilar")
    F = rescaled_velocities(s)
    assert np.array_equal(rescaled_velocity(s, (5, 3)), F[40 + 3])
    with pytest.raises(KeyError):
        rescaled_velocity(s, (9, 0))


def test_rotation_equivariance():
    cs = [ellipse(40, 1.0, 0.6, (2.0, 0.5)), circle(30, 0.5, (-2.0, 1.0), id=1)]
    F = rescaled_velocities(PatchSystem(cs, 0.7, "selfsimilar"))
    ang = 0.9
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    Fr = rescaled_velocities(PatchSystem([c.rotated(ang) for c in cs], 0.7, "selfsimilar"))
    assert np.allclose(Fr, F @ rot.T, atol=1e-9)


def test_area_growth_rate_is_exact():
    """f is divergence free and f(0) a constant, so every patch's rescaled
    area grows like exp(2 delta tau)."""
    s = PatchSystem([ellipse(80, 1.0, 0.6, (1.3, 0.2)), ellipse(80, 0.8, 0.5, (-1.2, -0.3), id=1)],
                    0.7, "selfsimilar")
    F = rescaled_velocities(s)
    off = 0
    for c in s.contours:
        # dA/dtau = closed integral of F . n ds, with F interpolated linearly
        n = len(c)
        Fc = F[off:off + n]
        off += n
        x, y = c.nodes.T
        fx, fy = Fc.T
        # derivative of the shoelace polygon area along the node velocities
        dA = 0.5 * np.sum(fx * (np.roll(y, -1) - np.roll(y, 1)) - fy * (np.roll(x, -1) - np.roll(x, 1)))
        A = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        assert dA / A == pytest.approx(2 * DELTA, rel=2e-3)


def test_origin_on_contour_refused():
    cs = [circle(40, center=(1.0, 0.0)), circle(40, center=(-3.0, 0.0), id=1)]
    seg = segment_geometry(cs[0], 4)
    mid = eval_segment(seg, seg.base, 0.5)
    moved = PatchSystem([c.translated(-mid) for c in cs], 0.7, "selfsimilar")
    with pytest.raises(ContactError, match="origin"):
        rescaled_velocities(moved)


# -------------------------------------------------------------------- wedge

def test_exact_wedge_touches_at_origin():
    up, lo, geom = make_wedge()
    assert np.array_equal(up.nodes[0], [0.0, 0.0]) and np.array_equal(lo.nodes[0], [0.0, 0.0])
    assert geom.apex_gap == 0.0
    assert contour_area(up)[1] == 1 and contour_area(lo)[1] == 1


def test_perturbed_wedge_separates():
    up, lo, geom = make_wedge(perturbation=0.05, extension=5)
    d, pa, pb = min_distance(up, lo)
    assert d > 0.0 and d == pytest.approx(0.1, rel=1e-3)
    assert pa[1] > 0.0 > pb[1]


def test_crossing_perturbation_refused():
    with pytest.raises(ValueError):
        make_wedge(perturbation=(hyperbolic_profile(0.05), lambda x: -np.abs(x) - 0.2))


def test_wedge_validation():
    with pytest.raises(ValueError):
        make_wedge(x_max=0.0)
    with pytest.raises(ValueError):
        make_wedge(extension=0.5)


def stationarity(system, r_max=16.0):
    vn = normal_speed(system)
    y = system.state()
    return float(vn[np.hypot(y[:, 0], y[:, 1]) <= r_max].max())


def test_exact_wedge_is_stationary():
    assert stationarity(wedge_system(20.0)) <= 1e-3


def test_rotated_wedge_is_stationary():
    s = wedge_system(20.0, rotation=math.pi / 4)
    assert stationarity(s) <= 1e-3
    # the spline rounds the apex corner over ~h_apex
    assert apex_deviation(s, 16.0, math.pi / 4) <= 1e-6


def test_zero_backward_steps_is_identity():
    s = wedge_system(20.0, perturbation=0.05, extension=5)
    assert backward_evolve(s, 0, 0.05) is s


def test_backward_evolution_needs_selfsimilar_mode():
    with pytest.raises(ValueError):
        backward_evolve(PatchSystem([circle(20)], 0.7), 1, 0.05)


def test_backward_steps_approach_the_wedge():
    s = wedge_system(20.0, perturbation=0.05, extension=5)
    p = RedistributionParams()
    s = redistribute_system(s, p)
    devs = [apex_deviation(s, 1.0)]
    backward_evolve(s, 14, 0.05, p, callback=lambda k, sy: devs.append(apex_deviation(sy, 1.0)))
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_physical_units_remeshing_is_scale_free():
    p = RedistributionParams(physical_units=True)
    s = redistribute_system(wedge_system(20.0, perturbation=0.05, extension=5), p)
    grown = PatchSystem([c.with_nodes(c.nodes * math.exp(DELTA)) for c in s.contours], 0.7, "selfsimilar",
                        time=1.0)
    a, b = redistribute_system(s, p), redistribute_system(grown, p)
    assert a.node_counts == b.node_counts
    for ca, cb in zip(a.contours, b.contours):
        assert np.allclose(cb.nodes, ca.nodes * math.exp(DELTA), rtol=1e-9, atol=1e-9)
    fixed = redistribute_system(grown, RedistributionParams())
    assert sum(fixed.node_counts) > sum(a.node_counts)
