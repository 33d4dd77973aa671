import math

import numpy as np
import pytest

from singheat import derive, characteristic_roots
from singheat.errors import DomainError
from singheat.params import Regime


def test_exact_rational_case_N5():
    p = derive(5, 0.75)
    assert p.alpha0 == pytest.approx(4 / 5, rel=1e-15)
    assert p.beta == pytest.approx(8 / 9, rel=1e-14)
    assert p.gamma == pytest.approx(7 / 3, rel=1e-14)
    assert p.Lambda == pytest.approx(25 / 144, rel=1e-14)
    assert p.mu1 == pytest.approx(1 / 6, rel=1e-14)
    assert p.mu2 == pytest.approx(1.0, rel=1e-14)
    assert p.rho == pytest.approx(1 / 3, rel=1e-14)
    assert p.eta == pytest.approx(2 / 3, rel=1e-14)
    assert p.vartheta == pytest.approx(5 / 6, rel=1e-14)
    assert p.kappa_hat == pytest.approx(1 / 4, rel=1e-14)
    assert p.B == pytest.approx((8 / 9) ** (4 / 3), rel=1e-14)
    assert p.F_star == pytest.approx(-(3 / 22) * (8 / 9) ** (11 / 3), rel=1e-13)
    assert p.regime is Regime.STRICT_SUB_HARDY


def test_N6_at_threshold_is_wide_stationary():
    alpha0 = (math.sqrt(5.0) - 1.0) / 2.0
    p = derive(6, alpha0)
    assert p.alpha0 == pytest.approx(alpha0, rel=1e-15)
    assert abs(p.Lambda) < 1e-14
    assert p.regime is Regime.WIDE_STATIONARY


def test_N3_small_alpha_inadmissible():
    p = derive(3, 1.0)
    assert p.regime is Regime.INADMISSIBLE
    # beta < 0 there, so the amplitude is not real
    assert math.isnan(p.B)


def test_boundary_band():
    lo = 2.0 / (5 - 2)
    p = derive(5, lo * (1 + 1e-14))
    assert p.regime is Regime.BOUNDARY


def test_rejects_bad_inputs():
    with pytest.raises(DomainError):
        derive(2, 0.5)
    with pytest.raises(DomainError):
        derive(5, 0.0)
    with pytest.raises(DomainError):
        derive(5, -1.0)
    with pytest.raises(DomainError):
        derive(5, math.inf)


def test_characteristic_roots_exact_case():
    p = derive(5, 0.75)
    r1, r2 = characteristic_roots(p)
    assert r1 == pytest.approx(1 / 3, rel=1e-12)
    assert r2 == pytest.approx(2.0, rel=1e-12)
    assert (r1, r2) == (min(r1, r2), max(r1, r2))


def test_characteristic_roots_vieta_sweep():
    rng = np.random.default_rng(11)
    for _ in range(50):
        N = int(rng.integers(3, 11))
        lo = 2.0 / (N - 2)
        a0 = 4.0 / (N - 4 + 2.0 * math.sqrt(N - 1.0))
        alpha = float(rng.uniform(lo * 1.02, a0 * 0.98))
        p = derive(N, alpha)
        r1, r2 = characteristic_roots(p)
        assert r1 + r2 == pytest.approx(p.gamma, rel=1e-12)
        assert r1 * r2 == pytest.approx(p.alpha * p.beta, rel=1e-12)
        assert r1 == pytest.approx(2 * p.mu1, rel=1e-12)
        assert r2 == pytest.approx(2 * p.mu2, rel=1e-12)


def test_characteristic_roots_need_sub_hardy():
    p = derive(5, 0.9)     # between alpha0 = 0.8 and 4/3
    assert p.regime is Regime.WIDE_STATIONARY
    with pytest.raises(DomainError):
        characteristic_roots(p)


def test_invariants_on_quasirandom_samples():
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    for k in range(1, 201):
        u = (0.5 + phi * k) % 1.0
        v = (0.5 + (math.sqrt(2.0) - 1.0) * k) % 1.0
        N = 3 + int(u * 8)
        lo = 2.0 / (N - 2)
        a0 = 4.0 / (N - 4 + 2.0 * math.sqrt(N - 1.0))
        alpha = lo + (0.02 + 0.96 * v) * (a0 - lo)
        p = derive(N, alpha)
        assert p.Lambda > 0
        assert p.beta * (alpha + 1) < (N - 2) ** 2 / 4
        assert 0 < p.mu1 < p.mu2
        assert p.rho == pytest.approx(2 * p.mu1, rel=1e-12)
        assert 0 < p.eta < (N - 2) / 2
        assert p.vartheta > 0
        disc = math.sqrt((N - 2) ** 2 / 4 - p.beta * (alpha + 1))
        assert p.eta + disc == pytest.approx((N - 2) / 2, rel=1e-12)


def test_equivalence_of_subhardy_predicates():
    for N in (3, 5, 8, 10):
        a0 = 4.0 / (N - 4 + 2.0 * math.sqrt(N - 1.0))
        hi = 4.0 / (N - 2)
        for alpha in np.linspace(0.01, hi * 0.999, 300):
            if abs(alpha - a0) < 1e-9:
                continue
            p = derive(N, float(alpha))
            a = alpha < a0
            b = p.Lambda > 0
            c = p.beta * (alpha + 1) < (N - 2) ** 2 / 4
            assert a == b == c


def test_as_dict_keys():
    keys = list(derive(5, 0.75).as_dict())
    assert keys == [
        "N", "alpha", "alpha0", "beta", "B", "gamma", "Lambda", "mu1", "mu2",
        "rho", "eta", "kappa_hat", "vartheta", "F_star", "regime",
    ]
