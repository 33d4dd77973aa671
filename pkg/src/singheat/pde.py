"""Radial finite differences for the perturbation equation and the
inverse-square-potential heat flow.

Everything is posed on a truncated radial interval [r_1, r_M] (log-spaced
by default) for the perturbation w = u - U around a singular background U:

    w_t = Laplace_rad(w) + |U + w|^alpha (U + w) - |U|^alpha U,

with w = 0 at the inner end (the background carries the whole singularity;
the perturbation is lower order there) and Dirichlet or zero-Neumann at
the outer end.  The radial Laplacian u'' + (N-1)/r u' is discretized in
flux form, which makes it symmetric negative semidefinite in the measure
r^{N-1} dr and an M-matrix, so backward-Euler steps are weighted-L2
contractions and positivity is preserved.

Time stepping is IMEX: implicit diffusion (tridiagonal solve per step),
explicit nonlinear difference.  The step size is limited by the Lipschitz
constant of the explicit term, dt <= cfl / max((alpha+1) |U|^alpha), and
capped by dt_max.

The linear solver w_t = Laplace(w) + c r^{-2} w (backward Euler or
Crank-Nicolson) refuses c >= (N-2)^2/4, where the continuum problem is
ill-posed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import CflError, DomainError
from .params import Params
from .selfsimilar import ProfileSolution
from .stationary import StationarySolution

DEFAULT_CFL = 0.4


class InnerBC(Enum):
    MATCH_BACKGROUND = "MatchBackground"
    HOMOGENEOUS_DIRICHLET = "HomogeneousDirichletPerturbation"


class OuterBC(Enum):
    DIRICHLET = "Dirichlet"
    NEUMANN0 = "Neumann0"


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing positive nodes with the dimension N."""

    r: np.ndarray
    N: int
    inner: InnerBC = InnerBC.HOMOGENEOUS_DIRICHLET
    outer: OuterBC = OuterBC.DIRICHLET
    outer_value: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or len(r) < 64:
            raise DomainError("grid needs at least 64 nodes")
        if r[0] <= 0 or np.any(np.diff(r) <= 0):
            raise DomainError("grid nodes must be strictly increasing and positive")
        object.__setattr__(self, "r", r)

    @property
    def M(self):
        return len(self.r)

    def cell_weights(self):
        """Trapezoidal weights of the measure r^{N-1} dr (half cells at ends)."""
        r = self.r
        w = np.empty_like(r)
        w[1:-1] = 0.5 * (r[2:] - r[:-2])
        w[0] = 0.5 * (r[1] - r[0])
        w[-1] = 0.5 * (r[-1] - r[-2])
        return r ** (self.N - 1) * w


def log_grid(r1: float, rM: float, M: int = 512, N: int = 5, **kw) -> RadialGrid:
    if not (0 < r1 < rM):
        raise DomainError("need 0 < r1 < rM")
    return RadialGrid(r=np.geomspace(r1, rM, M), N=N, **kw)


@dataclass
class RadialField:
    grid: RadialGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.r.shape:
            raise DomainError("field shape does not match grid")
        if not np.all(np.isfinite(v)):
            raise DomainError("field contains non-finite values")
        self.values = v

    def weighted_l2(self):
        return math.sqrt(float(np.sum(self.values ** 2 * self.grid.cell_weights())))


class BackgroundKind(Enum):
    EXPLICIT_HOMOGENEOUS = "ExplicitHomogeneous"
    STATIONARY_SINGULAR = "StationarySingular"
    SELF_SIMILAR = "SelfSimilar"


@dataclass
class Background:
    """Singular background entering the perturbation equation analytically."""

    kind: BackgroundKind
    params: Params
    evaluate: Callable          # (t, r_array) -> (U, dU/dr, dU/dt)
    initial_value: Callable     # r_array -> U at t -> 0 (weak limit)
    r_span: tuple[float, float]


def homogeneous_background(p: Params) -> Background:
    a, B = p.alpha, p.B

    def ev(t, r):
        r = np.asarray(r, dtype=float)
        U = B * r ** (-2.0 / a)
        Ur = -(2.0 / a) * B * r ** (-2.0 / a - 1.0)
        return U, Ur, np.zeros_like(U)

    def init(r):
        r = np.asarray(r, dtype=float)
        return B * r ** (-2.0 / a)

    return Background(
        kind=BackgroundKind.EXPLICIT_HOMOGENEOUS, params=p,
        evaluate=ev, initial_value=init, r_span=(0.0, math.inf),
    )


def stationary_background(sol: StationarySolution, p: Params) -> Background:
    s_lo, s_hi = sol.traj.span
    r_span = (math.exp(-s_hi), math.exp(-s_lo))

    def ev(t, r):
        u, up = sol.radial(r)
        return u, up, np.zeros_like(np.asarray(u))

    def init(r):
        return sol.radial(r)[0]

    return Background(
        kind=BackgroundKind.STATIONARY_SINGULAR, params=p,
        evaluate=ev, initial_value=init, r_span=r_span,
    )


def selfsimilar_background(prof: ProfileSolution, p: Params) -> Background:
    if prof.mu is None:
        raise DomainError("profile has no far-field limit; cannot serve as background")
    a = p.alpha

    def ev(t, r):
        return prof.selfsimilar_field(t, r)

    def init(r):
        r = np.asarray(r, dtype=float)
        return prof.mu * r ** (-2.0 / a)

    # the profile extends below r_init by its series and above r_max by its
    # algebraic tail, so the usable radius span is unrestricted
    return Background(
        kind=BackgroundKind.SELF_SIMILAR, params=p,
        evaluate=ev, initial_value=init, r_span=(0.0, math.inf),
    )


# ---------------------------------------------------------------------------
# discrete operators


@dataclass
class _Operator:
    """Tridiagonal operator on the unknown nodes, symmetric in the weights."""

    grid: RadialGrid
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    idx: slice                      # unknown nodes within the full grid
    weights: np.ndarray             # measure weights of the unknowns

    def apply(self, w):
        out = self.diag * w
        out[1:] += self.sub[1:] * w[:-1]
        out[:-1] += self.sup[:-1] * w[1:]
        return out

    def solve_shifted(self, scale, rhs):
        """Solve (I - scale * L) x = rhs."""
        n = len(self.diag)
        ab = np.zeros((3, n))
        ab[0, 1:] = -scale * self.sup[:-1]
        ab[1, :] = 1.0 - scale * self.diag
        ab[2, :-1] = -scale * self.sub[1:]
        return solve_banded((1, 1), ab, rhs)


def radial_laplacian(grid: RadialGrid, potential: Optional[np.ndarray] = None) -> _Operator:
    """Flux-form discretization of u'' + (N-1)/r u' (+ potential) on the
    unknown nodes (interior; the last node too for a zero-Neumann outer end).
    """
    r = grid.r
    N = grid.N
    M = grid.M
    rf = 0.5 * (r[1:] + r[:-1])          # face radii
    area = rf ** (N - 1)
    hf = np.diff(r)
    cond = area / hf                     # face conductances
    vol = grid.cell_weights()

    last = M - 1 if grid.outer is OuterBC.NEUMANN0 else M - 2
    idx = slice(1, last + 1)
    n = last
    sub = np.zeros(n)
    diag = np.zeros(n)
    sup = np.zeros(n)
    for k in range(n):
        i = k + 1
        c_lo = cond[i - 1]
        c_hi = cond[i] if i < M - 1 else 0.0
        diag[k] = -(c_lo + c_hi) / vol[i]
        if k > 0:
            sub[k] = c_lo / vol[i]
        if k < n - 1:
            sup[k] = c_hi / vol[i]
    if potential is not None:
        diag += potential[idx]
    return _Operator(grid=grid, sub=sub, diag=diag, sup=sup, idx=idx, weights=vol[idx])


# ---------------------------------------------------------------------------
# linear flow with inverse-square potential


@dataclass
class LinearRunResult:
    snapshots: list            # RadialField at the requested times
    l2_history: list           # weighted L2 norm after every step
    dt: float


def run_linear(
    w0: RadialField,
    coeff: float,
    p: Params,
    T: float,
    dt: Optional[float] = None,
    scheme: str = "be",
    snapshot_times: Optional[list] = None,
) -> LinearRunResult:
    """Step w_t = Laplace(w) + coeff r^{-2} w to time T.

    coeff must stay strictly below the Hardy threshold (N-2)^2/4; at or
    above it the continuum problem is ill-posed and the run is refused.
    """
    grid = w0.grid
    hardy = (grid.N - 2) ** 2 / 4.0
    if coeff >= hardy:
        raise DomainError(
            f"potential coefficient {coeff} >= (N-2)^2/4 = {hardy}: the "
            "inverse-square-potential heat equation is ill-posed there; refusing"
        )
    if not (T > 0):
        raise DomainError("T must be positive")
    if dt is None:
        dt = T / 200.0
    if scheme not in ("be", "cn"):
        raise DomainError(f"unknown scheme {scheme!r} (use 'be' or 'cn')")

    pot = coeff / grid.r ** 2
    L = radial_laplacian(grid, potential=pot)
    idx = L.idx
    w = w0.values.copy()
    wts = grid.cell_weights()

    times = sorted(set(snapshot_times or [])) + [T]
    times = sorted(t for t in set(times) if 0 < t <= T)
    snaps = []
    l2_hist = [math.sqrt(float(np.sum(w ** 2 * wts)))]

    t = 0.0
    for t_stop in times:
        while t < t_stop - 1e-14:
            step = min(dt, t_stop - t)
            wi = w[idx]
            if scheme == "be":
                wi = L.solve_shifted(step, wi)
            else:
                wi = L.solve_shifted(0.5 * step, wi + 0.5 * step * L.apply(wi))
            w = w.copy()
            w[idx] = wi
            w[0] = 0.0
            if grid.outer is OuterBC.DIRICHLET:
                w[-1] = grid.outer_value(t + step) if grid.outer_value else 0.0
            t += step
            l2_hist.append(math.sqrt(float(np.sum(w ** 2 * wts))))
        snaps.append(RadialField(grid=grid, values=w.copy(), time=t_stop))
    return LinearRunResult(snapshots=snaps, l2_history=l2_hist, dt=dt)


# ---------------------------------------------------------------------------
# nonlinear perturbation flow


@dataclass
class EnvelopeReport:
    C_fit_w: float
    sing_amp: list             # (t, r1^{2/alpha} u(t, r1))
    l1_errors: list            # (t, weighted L1 distance of u(t) to u0 on [r1, R])


def _nonlinear_difference(U, w, alpha):
    return np.abs(U + w) ** alpha * (U + w) - np.abs(U) ** alpha * U


def run_perturbation(
    w0: RadialField,
    bg: Background,
    p: Params,
    T: float,
    delta: float,
    dt_ctrl: tuple[float, float] = (DEFAULT_CFL, 1e-4),
    snapshot_times: Optional[list] = None,
    t0: float = 0.0,
    envelope_R: Optional[float] = None,
) -> tuple[list, EnvelopeReport]:
    """IMEX evolution of the perturbation around the singular background.

    Returns the list of w snapshots and the envelope report.  The initial
    perturbation must vanish for r <= delta with delta above the inner
    grid radius, matching the construction in which the data agrees with
    the background near the singularity.
    """
    grid = w0.grid
    r = grid.r
    if not (delta > r[0]):
        raise DomainError(f"delta = {delta} must exceed the inner radius r1 = {r[0]}")
    if np.any(np.abs(w0.values[r <= delta]) > 0):
        raise DomainError("w0 must vanish on {r <= delta}")
    if not (T > t0):
        raise DomainError("final time must exceed the start time")
    lo, hi = bg.r_span
    if r[0] < lo or r[-1] > hi:
        raise DomainError(
            f"background defined on r in [{lo:.3g}, {hi:.3g}] does not cover the grid"
        )

    cfl, dt_max = dt_ctrl
    probe_t = max(t0, 1e-6) if bg.kind is BackgroundKind.SELF_SIMILAR else max(t0, 1.0)
    U_probe = bg.evaluate(probe_t, r)[0]
    lam = (p.alpha + 1.0) * float(np.max(np.abs(U_probe) ** p.alpha))
    dt = min(dt_max, cfl / lam) if lam > 0 else dt_max

    L = radial_laplacian(grid)
    idx = L.idx

    w = w0.values.copy()
    static_bg = bg.kind is not BackgroundKind.SELF_SIMILAR
    if static_bg:
        U_now = bg.evaluate(max(t0, 1.0), r)[0]

    times = sorted(t for t in set(snapshot_times or []) if t0 < t <= T)
    if not times or times[-1] < T:
        times = times + [T]
    snaps = []
    sup_seen = max(float(np.max(np.abs(w))), 1e-12)

    t = t0
    for t_stop in times:
        while t < t_stop - 1e-14:
            step = min(dt, t_stop - t)
            if not static_bg:
                U_now = bg.evaluate(max(t, 1e-300) if t > 0 else step, r)[0]
            rhs_ex = w[idx] + step * _nonlinear_difference(U_now[idx], w[idx], p.alpha)
            growth = float(np.max(np.abs(rhs_ex))) / max(float(np.max(np.abs(w[idx]))), 1e-300)
            if growth > 10.0 and float(np.max(np.abs(w[idx]))) > 1e-12:
                raise CflError(
                    "explicit nonlinear term grew more than tenfold in one step",
                    diagnostic={
                        "t": t, "dt": step, "growth": growth,
                        "lambda_max": lam, "suggestion": "reduce cfl or dt_max",
                    },
                )
            wi = L.solve_shifted(step, rhs_ex)
            w = w.copy()
            w[idx] = wi
            w[0] = 0.0
            if grid.outer is OuterBC.DIRICHLET:
                w[-1] = grid.outer_value(t + step) if grid.outer_value else 0.0
            t += step
            sup_seen = max(sup_seen, float(np.max(np.abs(w))))
        snaps.append(RadialField(grid=grid, values=w.copy(), time=t_stop))

    report = envelope_diagnostics(
        snaps, w0, bg, p, envelope_R if envelope_R is not None else min(r[-1], 10.0 * delta)
    )
    return snaps, report


def envelope_diagnostics(
    snapshots: list, w0: RadialField, bg: Background, p: Params, R: float
) -> EnvelopeReport:
    """Envelope constant, singular amplitude and initial-data attainment."""
    if not snapshots:
        raise DomainError("no snapshots to diagnose")
    grid = snapshots[0].grid
    r = grid.r
    env_weight = 1.0 + r ** (-p.eta)
    wts = grid.cell_weights()
    mask = r <= R
    u0 = bg.initial_value(r) + w0.values

    C_fit = 0.0
    sing = []
    l1 = []
    for snap in snapshots:
        t = snap.time
        C_fit = max(C_fit, float(np.max(np.abs(snap.values) / env_weight)))
        U = bg.evaluate(t if t > 0 else 1e-300, r)[0]
        u = U + snap.values
        sing.append((t, float(r[0] ** (2.0 / p.alpha) * u[0])))
        l1.append((t, float(np.sum(np.abs(u - u0)[mask] * wts[mask]))))
    return EnvelopeReport(C_fit_w=C_fit, sing_amp=sing, l1_errors=l1)


def h_envelope_fit(snapshots: list, p: Params) -> float:
    """Best constant in |w(t, r)| <= C (1 + sqrt(t)/r)^eta over the snapshots."""
    C = 0.0
    for snap in snapshots:
        h = (1.0 + math.sqrt(snap.time) / snap.grid.r) ** p.eta
        C = max(C, float(np.max(np.abs(snap.values) / h)))
    return C


def hardy_ratio(v: RadialField) -> float:
    """Discrete ||v/r|| / ||v'|| in the measure r^{N-1} dr.

    The field must vanish at both grid ends (a proxy for compact support);
    the gradient uses centered differences on the interior nodes.
    """
    grid = v.grid
    vals = v.values
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        raise DomainError("zero field has no Hardy ratio")
    if abs(vals[0]) > 1e-14 * scale or abs(vals[-1]) > 1e-14 * scale:
        raise DomainError("field must vanish at both grid ends")
    r = grid.r
    wts = grid.cell_weights()
    grad = (vals[2:] - vals[:-2]) / (r[2:] - r[:-2])
    num = float(np.sum((vals[1:-1] / r[1:-1]) ** 2 * wts[1:-1]))
    den = float(np.sum(grad ** 2 * wts[1:-1]))
    if den == 0.0:
        raise DomainError("zero gradient norm")
    return math.sqrt(num / den)
