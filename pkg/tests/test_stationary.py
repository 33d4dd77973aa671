import math

import numpy as np
import pytest

from singheat import derive
from singheat.errors import DomainError
from singheat import stationary as st

P = derive(5, 0.75)


class TestEmdenTransform:
    def test_homogeneous_is_fixed_point(self):
        for r in (0.3, 1.0, 7.5):
            u = P.B * r ** (-2 / P.alpha)
            up = -(2 / P.alpha) * P.B * r ** (-2 / P.alpha - 1)
            est = st.emden_forward(r, u, up, P)
            assert est.v == pytest.approx(P.B, rel=1e-13)
            assert abs(est.vprime) < 1e-13

    def test_round_trip_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            r = float(rng.uniform(0.05, 20.0))
            u = float(rng.uniform(-5.0, 5.0))
            up = float(rng.uniform(-5.0, 5.0))
            est = st.emden_forward(r, u, up, P)
            r2, u2, up2 = st.emden_backward(est, P)
            assert r2 == pytest.approx(r, rel=1e-13)
            assert u2 == pytest.approx(u, rel=1e-13, abs=1e-13)
            assert up2 == pytest.approx(up, rel=1e-13, abs=1e-13)

    def test_family_seed_state(self):
        seed = st.family_seed(1.0, 1.0, P)
        u0, up0 = st.seed_initial_data(seed, P)
        est = st.emden_forward(1.0, u0, up0, P)
        assert est.v == pytest.approx(P.B, rel=1e-13)
        assert est.vprime == pytest.approx(P.B * math.sqrt(8 / 33), rel=1e-12)

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(DomainError):
            st.emden_forward(0.0, 1.0, 0.0, P)


class TestEnergy:
    def test_minimum_at_homogeneous_state(self):
        f = st.lyapunov_energy(st.EmdenState(0.0, P.B, 0.0), P)
        assert f == pytest.approx(P.F_star, rel=1e-13)

    def test_simple_values(self):
        assert st.lyapunov_energy(st.EmdenState(0.0, 0.0, 0.0), P) == 0.0
        assert st.lyapunov_energy(st.EmdenState(0.0, 0.0, 1.0), P) == 0.5

    def test_bounded_below(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            f = st.lyapunov_energy(
                st.EmdenState(0.0, rng.uniform(-3, 3), rng.uniform(-3, 3)), P
            )
            assert f >= P.F_star - 1e-15


class TestFamilySeed:
    def test_exact_case(self):
        seed = st.family_seed(1.0, 1.0, P)
        assert seed.b == pytest.approx(8 / 3 + math.sqrt(8 / 33), rel=1e-15)
        # the seed sits exactly on the zero-energy set
        u0, up0 = st.seed_initial_data(seed, P)
        est = st.emden_forward(seed.r0, u0, up0, P)
        assert abs(st.lyapunov_energy(est, P)) < 1e-12

    def test_zero_energy_for_random_seeds(self):
        rng = np.random.default_rng(5)
        a_max = ((P.alpha + 2) / 2) ** (1 / P.alpha)
        for _ in range(50):
            r0 = float(rng.uniform(0.2, 5.0))
            a = float(rng.uniform(0.05, 0.95)) * a_max
            seed = st.family_seed(r0, a, P)
            assert seed.b > 2 * a / P.alpha
            u0, up0 = st.seed_initial_data(seed, P)
            est = st.emden_forward(r0, u0, up0, P)
            assert abs(st.lyapunov_energy(est, P)) < 1e-10

    def test_rejects_amplitude_outside_interval(self):
        a_max = ((P.alpha + 2) / 2) ** (1 / P.alpha)
        with pytest.raises(DomainError):
            st.family_seed(1.0, 0.0, P)
        with pytest.raises(DomainError):
            st.family_seed(1.0, a_max, P)
        with pytest.raises(DomainError):
            st.family_seed(1.0, 1.1 * a_max, P)


class TestSolveAndClassify:
    def test_exact_homogeneous(self):
        sol = st.solve_stationary(st.EmdenState(0.0, P.B, 0.0), P, (1e-6, 100.0))
        assert sol.classification.kind is st.ClassKind.EXACT_HOMOGENEOUS
        assert sol.origin_limit == pytest.approx(P.B)

    def test_constant_sign_singular(self):
        sol = st.solve_stationary(st.EmdenState(0.0, P.B + 0.05, 0.0), P, (1e-13, 50.0))
        assert sol.classification.kind is st.ClassKind.CONSTANT_SIGN_SINGULAR
        assert sol.classification.sign_at_origin is st.OriginSign.PLUS
        assert len(sol.zero_crossings) == 0

    def test_regular_seed_oscillates(self):
        sol = st.solve_stationary(st.RegularSeed(1.0), P, (0.0, 1e3))
        assert sol.classification.kind is st.ClassKind.REGULAR
        assert sol.origin_limit == pytest.approx(1.0)
        assert len(sol.zero_crossings) >= 3
        f = st.lyapunov_energy_vals(sol.traj.ys, sol.traj.yps, P)
        assert np.all(f > -1e-12)

    def test_family_member_full_story(self):
        seed = st.family_seed(1.0, 1.0, P)
        sol = st.solve_stationary(seed, P, (1e-13, 1e3))
        cls = sol.classification
        assert cls.kind is st.ClassKind.SIGN_CHANGING_SINGULAR
        assert abs(cls.s_zero_of_energy) < 1e-9
        assert sum(1 for z in sol.zero_crossings if 1 <= z <= 1e3) >= 3
        ob = st.origin_behavior(sol)
        assert ob.kind == "SingularAmplitude"
        assert ob.residual < 1e-4
        # derivative limit r^{2/alpha+1} u' -> -(2/alpha) B
        r = 1e-9
        _, up = sol.radial(np.array([r]))
        assert r ** (2 / P.alpha + 1) * up[0] == pytest.approx(
            -(2 / P.alpha) * P.B, rel=1e-3
        )

    def test_zero_crossings_recorded_in_decreasing_radius(self):
        seed = st.family_seed(1.0, 1.0, P)
        sol = st.solve_stationary(seed, P, (1e-13, 1e3))
        zs = sol.zero_crossings
        assert len(zs) >= 3
        assert all(a > b for a, b in zip(zs[:-1], zs[1:]))

    def test_energy_zero_is_unique_on_family_members(self):
        rng = np.random.default_rng(6)
        a_max = ((P.alpha + 2) / 2) ** (1 / P.alpha)
        for _ in range(12):
            r0 = float(rng.uniform(0.5, 2.0))
            a = float(rng.uniform(0.1, 0.9)) * a_max
            sol = st.solve_stationary(st.family_seed(r0, a, P), P, (1e-10, 1e2))
            assert sol.classification.kind is st.ClassKind.SIGN_CHANGING_SINGULAR
            order = np.argsort(sol.traj.ts)
            f = st.lyapunov_energy_vals(
                sol.traj.ys[order], sol.traj.yps[order], P
            )
            big = np.abs(f) > 1e-9
            crossings = int(np.sum(np.abs(np.diff(np.sign(f[big]))) > 1))
            assert crossings == 1
            assert sol.classification.s_zero_of_energy == pytest.approx(
                -math.log(r0), abs=1e-9
            )

    def test_energy_monotone_along_trajectories(self):
        rng = np.random.default_rng(7)
        for _ in range(6):
            v0 = float(rng.uniform(-2, 2))
            vp0 = float(rng.uniform(-2, 2))
            sol = st.solve_stationary(st.EmdenState(0.0, v0, vp0), P, (1e-13, 1.0))
            order = np.argsort(sol.traj.ts)
            f = st.lyapunov_energy_vals(sol.traj.ys[order], sol.traj.yps[order], P)
            assert np.all(np.diff(f) <= 1e-9)

    def test_decay_bound_running_max(self):
        seed = st.family_seed(1.0, 1.0, P)
        sol = st.solve_stationary(seed, P, (1e-13, 1e3))
        ss_ = np.linspace(-math.log(1e3), 0.0, 4000)
        v, _ = sol.traj.eval(ss_)
        q = np.exp(P.gamma * ss_) * np.abs(v)     # = r^{N-2-2/alpha} |u|
        r = np.exp(-ss_)
        run_max_all = np.max(q)
        run_max_r10 = np.max(q[r <= 10.0])
        assert run_max_all <= run_max_r10 * 1.05

    def test_undetermined_on_ambiguous_energy(self):
        from singheat.errors import UndeterminedError
        from singheat.ode import array_trajectory, CombinedTrajectory

        # a synthetic near-zero-energy trajectory cannot be classified
        ss_ = np.linspace(0.0, 1.0, 32)
        traj = CombinedTrajectory(
            [array_trajectory(ss_, 1e-7 * np.ones_like(ss_), np.zeros_like(ss_))]
        )
        with pytest.raises(UndeterminedError):
            st.classify_trajectory(traj, P)

    def test_inadmissible_regime_rejected(self):
        bad = derive(3, 1.0)
        with pytest.raises(DomainError):
            st.solve_stationary(st.RegularSeed(1.0), bad, (0.0, 10.0))


class TestRateFit:
    def test_synthetic_single_mode(self):
        s = np.linspace(5.0, 20.0, 100)
        slope, r2 = st.fit_log_slope(s, np.exp(-P.rho * s))
        assert slope == pytest.approx(P.rho, abs=1e-10)
        assert r2 > 1 - 1e-12

    def test_synthetic_two_mode_window_control(self):
        # early windows are polluted by the fast mode; late windows are clean
        z = lambda s: np.exp(-P.rho * s) + np.exp(-2 * P.mu2 * s)
        s_early = np.linspace(0.5, 3.0, 60)
        slope_early, _ = st.fit_log_slope(s_early, z(s_early))
        s_late = np.linspace(6.0, 16.0, 60)
        slope_late, _ = st.fit_log_slope(s_late, z(s_late))
        assert abs(slope_late - P.rho) / P.rho < 0.01
        assert abs(slope_late - P.rho) < abs(slope_early - P.rho)

    def test_family_rate_matches_rho(self):
        seed = st.family_seed(1.0, 1.0, P)
        sol = st.solve_stationary(seed, P, (1e-13, 1e3))
        slope, r2 = st.fit_singular_rate(sol, P, (10.0, 24.0))
        assert abs(slope - P.rho) / P.rho < 0.05
        assert r2 > 0.999

    def test_window_without_samples_rejected(self):
        sol = st.solve_stationary(st.EmdenState(0.0, P.B, 0.0), P, (1e-6, 100.0))
        with pytest.raises(DomainError):
            st.fit_singular_rate(sol, P, (5.0, 12.0))   # identically B: below floor


def test_homogeneous_residual_closed_form():
    r = np.geomspace(0.1, 10.0, 201)
    res = st.homogeneous_stationary_residual(P, r)
    assert np.max(np.abs(res)) < 1e-10
