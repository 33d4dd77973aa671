import math

import numpy as np
import pytest

from singheat import derive
from singheat.errors import DomainError
from singheat.ode import (
    EventSpec, OdeSystem, TrajStatus, array_trajectory, bisect_parameter,
    integrate,
)
from singheat.stationary import lyapunov_energy_vals

COS = OdeSystem(rhs=lambda t, y, yp: -y)


def test_cosine():
    traj = integrate(COS, 0.0, 1.0, 0.0, math.pi, tol=(1e-12, 1e-10))
    y, yp = traj.eval(math.pi)
    assert y == pytest.approx(-1.0, abs=1e-8)
    assert traj.status is TrajStatus.COMPLETED


def test_dense_output_matches_nodes():
    traj = integrate(COS, 0.0, 1.0, 0.0, 5.0, tol=(1e-12, 1e-10))
    for t, y, yp in traj.nodes[:: max(1, len(traj.nodes) // 7)]:
        yd, ypd = traj.eval(t)
        assert yd == pytest.approx(y, abs=1e-12)
        assert ypd == pytest.approx(yp, abs=1e-12)


def test_tolerance_halving_reduces_error():
    ref = integrate(COS, 0.0, 1.0, 0.0, 7.0, tol=(1e-15, 1e-13))
    y_ref, _ = ref.eval(7.0)
    errs = []
    for rtol in (1e-6, 1e-7, 1e-8, 1e-9, 1e-10):
        traj = integrate(COS, 0.0, 1.0, 0.0, 7.0, tol=(rtol * 1e-2, rtol))
        errs.append(abs(traj.eval(7.0)[0] - y_ref))
    for a, b in zip(errs[:-1], errs[1:]):
        assert b <= 4.0 * a + 1e-15        # monotone within slack
    assert errs[-1] < 1e-3 * errs[0]


def test_backward_integration_roundtrip():
    tol = (1e-13, 1e-11)
    fwd = integrate(COS, 0.0, 1.0, 0.0, math.pi, tol=tol)
    y1, yp1 = fwd.eval(math.pi)
    back = integrate(COS, math.pi, y1, yp1, 0.0, tol=tol)
    y0, yp0 = back.eval(0.0)
    assert abs(y0 - 1.0) <= 10 * tol[1]
    assert abs(yp0 - 0.0) <= 10 * tol[1]


def test_stationary_fixed_point_of_oscillator():
    p = derive(5, 0.75)
    sys = OdeSystem(
        rhs=lambda s, v, vp: -p.gamma * vp + p.beta * v - abs(v) ** p.alpha * v
    )
    traj = integrate(sys, 0.0, p.B, 0.0, 30.0, tol=(1e-12, 1e-10))
    y, yp = traj.eval(30.0)
    assert abs(y - p.B) < 1e-10
    assert abs(yp) < 1e-10


def test_oscillator_energy_decreases_from_perturbed_start():
    p = derive(5, 0.75)
    sys = OdeSystem(
        rhs=lambda s, v, vp: -p.gamma * vp + p.beta * v - abs(v) ** p.alpha * v
    )
    traj = integrate(sys, 0.0, p.B + 0.1, 0.0, 30.0, tol=(1e-12, 1e-10))
    f = lyapunov_energy_vals(traj.ys, traj.yps, p)
    assert np.all(np.diff(f) <= 1e-10)
    assert f[-1] < f[0]
    # converging to a constant state (slow mode decays like e^{-s/3})
    assert abs(traj.eval(30.0)[1]) < 1e-5
    assert abs(traj.eval(30.0)[0] - p.B) < 1e-4


def test_events_located_and_reproducible():
    ev = EventSpec(kind="zero", fn=lambda t, y, yp: y)
    t1 = integrate(COS, 0.0, 1.0, 0.0, 10.0, tol=(1e-12, 1e-10), events=[ev])
    t2 = integrate(COS, 0.0, 1.0, 0.0, 10.0, tol=(1e-12, 1e-10), events=[ev])
    zeros1 = [e.t for e in t1.events_of("zero")]
    zeros2 = [e.t for e in t2.events_of("zero")]
    assert zeros1 == zeros2                      # bit-for-bit
    expected = [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2]
    assert len(zeros1) == 3
    for z, e in zip(zeros1, expected):
        assert z == pytest.approx(e, abs=1e-10)


def test_blowup_detection():
    sys = OdeSystem(rhs=lambda t, y, yp: y ** 3)
    traj = integrate(
        sys, 0.0, 1.0, 1.0, 100.0, tol=(1e-10, 1e-8), blowup_ceiling=1e6
    )
    assert traj.status is TrajStatus.BLOWUP
    assert abs(traj.ys[-1]) >= 0.99e6


def test_singular_point_inside_span_rejected():
    sys = OdeSystem(rhs=lambda t, y, yp: -y / t, singular_points=(0.0,))
    with pytest.raises(DomainError):
        integrate(sys, -1.0, 1.0, 0.0, 1.0)


def test_empty_span_rejected():
    with pytest.raises(DomainError):
        integrate(COS, 1.0, 1.0, 0.0, 1.0)


def test_array_trajectory_interpolates():
    ts = np.linspace(0.0, 2.0, 41)
    traj = array_trajectory(ts, np.sin(ts), np.cos(ts))
    y, yp = traj.eval(1.234)
    assert y == pytest.approx(math.sin(1.234), abs=1e-7)
    assert yp == pytest.approx(math.cos(1.234), abs=1e-5)


def test_bisect_sqrt2():
    c = bisect_parameter(lambda x: x * x > 2.0, 1.0, 2.0, 1e-12)
    assert c == pytest.approx(math.sqrt(2.0), abs=2e-12)


def test_bisect_rejects_degenerate_and_same_sign():
    with pytest.raises(DomainError):
        bisect_parameter(lambda x: x > 0, 1.0, 1.0, 1e-6)
    with pytest.raises(DomainError):
        bisect_parameter(lambda x: x > 0, 1.0, 2.0, 1e-6)
