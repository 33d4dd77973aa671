"""Acceptance suites: every package-level correctness claim as one runnable check.

Each criterion function returns a CriterionResult whose details carry the
measured values next to their thresholds, so a failing run shows exactly
which number missed.  The CLI subcommand `verify` and the pytest module
tests/test_acceptance.py both execute these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import pde, selfsimilar as ss, stationary as st
from .errors import DomainError
from .ode import OdeSystem, integrate
from .params import Regime, characteristic_roots, derive
from .stationary import fit_log_slope

DEFAULT_SEED = 2024


@dataclass
class Check:
    label: str
    measured: float
    threshold: float
    ok: bool


@dataclass
class CriterionResult:
    index: int
    name: str
    budget_s: float
    checks: list = field(default_factory=list)
    elapsed_s: float = 0.0

    def add(self, label, measured, threshold, ok=None):
        if ok is None:
            ok = bool(measured <= threshold)
        self.checks.append(Check(label, float(measured), float(threshold), bool(ok)))

    @property
    def passed(self):
        return all(c.ok for c in self.checks)

    def lines(self):
        head = f"{'PASS' if self.passed else 'FAIL'} criterion {self.index}: {self.name} ({self.elapsed_s:.2f}s)"
        rows = [
            f"  [{'ok' if c.ok else 'XX'}] {c.label}: measured {c.measured:.6g} vs threshold {c.threshold:.6g}"
            for c in self.checks
        ]
        return [head] + rows


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        res.elapsed_s = time.perf_counter() - t0
        res.add("runtime [s]", res.elapsed_s, res.budget_s)
        return res
    return wrapper


def _golden_sequence(n, dims=2):
    """Deterministic low-discrepancy points in [0,1)^dims (Kronecker)."""
    irr = [(math.sqrt(5.0) - 1.0) / 2.0, math.sqrt(2.0) - 1.0, math.sqrt(3.0) - 1.0]
    k = np.arange(1, n + 1, dtype=float)
    return np.stack([np.mod(0.5 + irr[d] * k, 1.0) for d in range(dims)], axis=1)


# --------------------------------------------------------------------------- 1


@_timed
def criterion_exact_constants() -> CriterionResult:
    res = CriterionResult(1, "exact constants at (N, alpha) = (5, 3/4)", 1.0)
    p = derive(5, 0.75)
    exact = {
        "alpha0": 4.0 / 5.0, "beta": 8.0 / 9.0, "gamma": 7.0 / 3.0,
        "Lambda": 25.0 / 144.0, "mu1": 1.0 / 6.0, "mu2": 1.0,
        "rho": 1.0 / 3.0, "eta": 2.0 / 3.0, "vartheta": 5.0 / 6.0,
        "kappa_hat": 1.0 / 4.0,
    }
    for name, val in exact.items():
        got = getattr(p, name)
        res.add(f"|{name} - exact|/|exact|", abs(got - val) / abs(val), 1e-12)
    res.add(
        "regime is StrictSubHardy", 0.0, 0.5, ok=p.regime is Regime.STRICT_SUB_HARDY
    )
    return res


# --------------------------------------------------------------------------- 2


@_timed
def criterion_property_sweep() -> CriterionResult:
    res = CriterionResult(2, "derived-constant identities over 200 sampled (N, alpha)", 1.0)
    pts = _golden_sequence(200, 2)
    worst_rho = worst_vieta_s = worst_vieta_p = worst_eta = 0.0
    order_ok = True
    positive_ok = True
    for u, v in pts:
        N = 3 + int(u * 8.0)
        lo = 2.0 / (N - 2)
        a0 = 4.0 / (N - 4 + 2.0 * math.sqrt(N - 1.0))
        alpha = lo + (0.02 + 0.96 * v) * (a0 - lo)
        p = derive(N, alpha)
        worst_rho = max(worst_rho, abs(p.rho - 2.0 * p.mu1) / abs(p.rho))
        r1, r2 = characteristic_roots(p)
        worst_vieta_s = max(worst_vieta_s, abs(r1 + r2 - p.gamma) / p.gamma)
        worst_vieta_p = max(
            worst_vieta_p, abs(r1 * r2 - p.alpha * p.beta) / (p.alpha * p.beta)
        )
        worst_eta = max(
            worst_eta,
            abs(p.eta + math.sqrt((N - 2.0) ** 2 / 4.0 - p.beta * (alpha + 1.0))
                - (N - 2.0) / 2.0) / ((N - 2.0) / 2.0),
        )
        order_ok &= 0.0 < p.mu1 < p.mu2
        positive_ok &= (
            p.Lambda > 0 and p.rho > 0 and 0 < p.eta < (N - 2.0) / 2.0
            and p.vartheta > 0 and p.beta * (alpha + 1.0) < (N - 2.0) ** 2 / 4.0
        )
    res.add("max rel |rho - 2 mu1|", worst_rho, 1e-10)
    res.add("max rel Vieta sum defect", worst_vieta_s, 1e-10)
    res.add("max rel Vieta product defect", worst_vieta_p, 1e-10)
    res.add("max rel eta identity defect", worst_eta, 1e-10)
    res.add("0 < mu1 < mu2 everywhere", 0.0, 0.5, ok=order_ok)
    res.add("sign conditions everywhere", 0.0, 0.5, ok=positive_ok)

    # pointwise agreement of the three sub-Hardy predicates on an alpha grid
    agree = True
    for N in (3, 5, 8):
        a0 = 4.0 / (N - 4 + 2.0 * math.sqrt(N - 1.0))
        hi = 4.0 / (N - 2)
        for alpha in np.linspace(0.01, hi * 0.999, 400):
            if abs(alpha - a0) < 1e-9:
                continue
            p = derive(N, float(alpha))
            pred = (alpha < a0, p.Lambda > 0.0,
                    p.beta * (alpha + 1.0) < (N - 2.0) ** 2 / 4.0)
            agree &= pred[0] == pred[1] == pred[2]
    res.add("three predicates agree outside 1e-9 band", 0.0, 0.5, ok=agree)
    return res


# --------------------------------------------------------------------------- 3


@_timed
def criterion_explicit_residuals() -> CriterionResult:
    res = CriterionResult(3, "explicit homogeneous solutions solve both equations", 1.0)
    p = derive(5, 0.75)
    r = np.geomspace(0.1, 10.0, 201)
    res.add(
        "max |stationary residual| on [0.1, 10]",
        float(np.max(np.abs(st.homogeneous_stationary_residual(p, r)))), 1e-10,
    )
    res.add(
        "max |profile residual| on [0.1, 10]",
        float(np.max(np.abs(ss.homogeneous_profile_residual(p, r)))), 1e-10,
    )
    return res


# --------------------------------------------------------------------------- 4


@_timed
def criterion_lyapunov_decay(seed: int = DEFAULT_SEED) -> CriterionResult:
    res = CriterionResult(4, "energy decay law on 50 random log-radius trajectories", 10.0)
    p = derive(5, 0.75)
    rng = np.random.Generator(np.random.Philox(seed))
    sys = OdeSystem(
        rhs=lambda s, v, vp: -p.gamma * vp + p.beta * v - abs(v) ** p.alpha * v
    )
    gl_x, gl_w = np.polynomial.legendre.leggauss(6)
    tol = (1e-13, 1e-11)
    worst_mono = 0.0
    worst_ident = 0.0
    for _ in range(50):
        v0 = rng.uniform(-2.0, 2.0)
        vp0 = rng.uniform(-2.0, 2.0)
        traj = integrate(sys, 0.0, v0, vp0, 30.0, tol=tol)
        f = st.lyapunov_energy_vals(traj.ys, traj.yps, p)
        slack = 10.0 * (tol[0] + tol[1] * np.maximum(1.0, np.abs(f[:-1])))
        worst_mono = max(worst_mono, float(np.max(np.diff(f) - slack)))
        # gamma * integral of |v'|^2 via per-interval Gauss on dense output
        a_nodes, b_nodes = traj.ts[:-1], traj.ts[1:]
        half = 0.5 * (b_nodes - a_nodes)
        mids = 0.5 * (a_nodes + b_nodes)
        pts = mids[:, None] + half[:, None] * gl_x[None, :]
        _, vps = traj.eval(pts.ravel())
        integral = float(np.sum((vps.reshape(pts.shape) ** 2 * gl_w[None, :]).sum(axis=1) * half))
        lhs = f[0] - f[-1]
        rel = abs(lhs - p.gamma * integral) / max(abs(lhs), 1e-30)
        worst_ident = max(worst_ident, rel)
    res.add("max energy increase beyond 10x tol", worst_mono, 0.0, ok=worst_mono <= 0.0)
    res.add("max rel defect of decay identity", worst_ident, 1e-6)
    return res


# --------------------------------------------------------------------------- 5


@_timed
def criterion_family() -> CriterionResult:
    res = CriterionResult(5, "sign-changing stationary family seed (r0=1, a=1)", 10.0)
    p = derive(5, 0.75)
    seed = st.family_seed(1.0, 1.0, p)
    b_exact = 8.0 / 3.0 + math.sqrt(8.0 / 33.0)
    res.add("|b - closed form|", abs(seed.b - b_exact), 1e-12)
    sol = st.solve_stationary(seed, p, r_span=(1e-13, 1e3))
    res.add(
        "classified SignChangingSingular", 0.0, 0.5,
        ok=sol.classification.kind is st.ClassKind.SIGN_CHANGING_SINGULAR,
    )
    res.add("|s0| of the energy zero", abs(sol.classification.s_zero_of_energy), 1e-9)
    nz = sum(1 for z in sol.zero_crossings if 1.0 <= z <= 1e3)
    res.add("sign changes in r in [1, 1e3] (>= 3)", nz, 3.0, ok=nz >= 3)
    ob = st.origin_behavior(sol)
    res.add(
        "origin amplitude residual |v - (+/-B)|",
        ob.residual if ob.kind == "SingularAmplitude" else math.inf, 1e-4,
    )
    slope, _ = st.fit_singular_rate(sol, p, (10.0, 24.0))
    res.add("rate-fit slope rel error vs rho", abs(slope - p.rho) / p.rho, 0.05)
    return res


# --------------------------------------------------------------------------- 6


@_timed
def criterion_profiles() -> CriterionResult:
    res = CriterionResult(6, "self-similar profiles: homogeneous limit, rate, scan, envelope", 60.0)
    p = derive(5, 0.75)

    prof0 = ss.shoot_profile(0.0, p)
    mu0, err0 = ss.extract_mu(prof0)
    res.add("|mu(C1=0) - B|", abs(mu0 - p.B), 1e-8)

    prof = ss.shoot_profile(0.1, p)
    lo, _ = prof.traj.span
    xs = np.linspace(lo + 2.0, lo + 10.0, 200)
    g, _ = prof.traj.eval(xs)
    slope, _ = fit_log_slope(-xs, g - p.B)
    res.add("near-origin slope rel error vs rho", abs(slope - p.rho) / p.rho, 0.05)

    rows = ss.scan_sign_changing(p, (-0.3, 0.3), 7)
    hit = any(row.m >= 1 and row.converged for row in rows)
    res.add("scan found m >= 1 with converged mu", 0.0, 0.5, ok=hit)
    worst_err = max(
        row.mu_err / (1.0 + abs(row.mu))
        for row in rows if row.m >= 1 and row.converged
    )
    res.add("tail error of best sign-changing rows", worst_err, 1e-3)

    C_a = ss.envelope_check(prof, p, n_samples=2000)
    C_b = ss.envelope_check(prof, p, n_samples=4000)
    res.add("envelope constant finite", C_a, math.inf, ok=math.isfinite(C_a))
    res.add("envelope grid stability (rel change)", abs(C_a - C_b) / C_a, 0.05)
    return res


# --------------------------------------------------------------------------- 7


def _bump(r, center=3.0, halfwidth=1.0, height=0.5):
    x = (r - center) / halfwidth
    out = np.zeros_like(r)
    m = np.abs(x) < 1.0
    out[m] = height * np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    return out


@_timed
def criterion_perturbation() -> CriterionResult:
    res = CriterionResult(7, "persistent singularity under a bump perturbation", 120.0)
    p = derive(5, 0.75)
    grid = pde.log_grid(1e-3, 50.0, 512, N=5)
    bg = pde.homogeneous_background(p)
    w0 = pde.RadialField(grid, _bump(grid.r), 0.0)
    snap_times = [0.005, 0.01, 0.02, 0.04]

    _, rep = pde.run_perturbation(
        w0, bg, p, T=0.05, delta=1.0, dt_ctrl=(0.4, 1e-4), snapshot_times=snap_times
    )
    worst_amp = max(abs(v - p.B) / p.B for _, v in rep.sing_amp)
    res.add("max rel deviation of singular amplitude", worst_amp, 0.02)

    l1 = dict(rep.l1_errors)
    mono = all(
        l1[a] < l1[b] for a, b in zip(snap_times[:-1], snap_times[1:])
    )
    res.add("weighted L1 error decreases as t -> 0", 0.0, 0.5, ok=mono)

    _, rep_half = pde.run_perturbation(
        w0, bg, p, T=0.05, delta=1.0, dt_ctrl=(0.2, 5e-5), snapshot_times=snap_times
    )
    rel = abs(rep.C_fit_w - rep_half.C_fit_w) / rep.C_fit_w
    res.add("envelope constant change under halving dt", rel, 0.10)
    res.add(
        "envelope constant finite", rep.C_fit_w, math.inf, ok=math.isfinite(rep.C_fit_w)
    )
    return res


# --------------------------------------------------------------------------- 8


@_timed
def criterion_appendix(seed: int = DEFAULT_SEED) -> CriterionResult:
    res = CriterionResult(8, "inverse-square-potential flow: contraction, Hardy, envelope", 30.0)
    p = derive(5, 0.75)
    grid = pde.log_grid(1e-3, 50.0, 512, N=5)
    r = grid.r
    coeff = p.beta * (p.alpha + 1.0)

    w0 = pde.RadialField(grid, np.where(r > 1.0, 1.0, 0.0), 0.0)
    run = pde.run_linear(w0, coeff, p, T=0.5, dt=1e-3, snapshot_times=[0.1, 0.25])
    h = np.asarray(run.l2_history)
    worst = float(np.max(h[1:] / np.maximum(h[:-1], 1e-300)))
    res.add("max per-step L2 growth factor", worst, 1.0 + 1e-8)

    rng = np.random.Generator(np.random.Philox(seed))
    x = np.log(r)
    bound = 2.0 / (grid.N - 2)
    worst_ratio = 0.0
    for _ in range(20):
        v = np.zeros_like(r)
        for _ in range(3):
            c = rng.uniform(x[5], x[-5])
            width = rng.uniform(0.3, 2.0)
            amp = rng.uniform(-1.0, 1.0)
            v += amp * np.exp(-(((x - c) / width) ** 2))
        v[0] = v[-1] = 0.0
        worst_ratio = max(worst_ratio, pde.hardy_ratio(pde.RadialField(grid, v, 0.0)))
    res.add("max Hardy ratio of 20 random fields", worst_ratio, bound + 1e-6)

    C_512 = pde.h_envelope_fit(run.snapshots, p)
    grid2 = pde.log_grid(1e-3, 50.0, 1024, N=5)
    w02 = pde.RadialField(grid2, np.where(grid2.r > 1.0, 1.0, 0.0), 0.0)
    run2 = pde.run_linear(w02, coeff, p, T=0.5, dt=1e-3, snapshot_times=[0.1, 0.25])
    C_1024 = pde.h_envelope_fit(run2.snapshots, p)
    res.add("h-envelope constant finite", C_512, math.inf, ok=math.isfinite(C_512))
    res.add("h-envelope grid stability (rel change)", abs(C_512 - C_1024) / C_512, 0.10)

    refused = False
    try:
        pde.run_linear(w0, (grid.N - 2) ** 2 / 4.0, p, T=0.1)
    except DomainError:
        refused = True
    res.add("coefficient >= (N-2)^2/4 refused", 0.0, 0.5, ok=refused)
    return res


# ---------------------------------------------------------------------------

SUITES = {
    "params": (criterion_exact_constants, criterion_property_sweep),
    "stationary": (criterion_explicit_residuals, criterion_lyapunov_decay, criterion_family),
    "selfsimilar": (criterion_profiles,),
    "pde": (criterion_perturbation, criterion_appendix),
}
SUITES["all"] = (
    SUITES["params"] + SUITES["stationary"] + SUITES["selfsimilar"] + SUITES["pde"]
)


def run_suite(name: str, seed: int = DEFAULT_SEED):
    """Run a named suite; returns the list of CriterionResult."""
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    results = []
    for fn in SUITES[name]:
        if fn in (criterion_lyapunov_decay, criterion_appendix):
            results.append(fn(seed=seed))
        else:
            results.append(fn())
    return results
