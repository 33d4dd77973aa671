"""Command-line interface.

Subcommands: constants, stationary family|classify, profile shoot|scan,
pde perturb|linear, verify.  All numeric output uses 17 significant digits
so artifacts diff meaningfully; identical invocations produce byte-identical
files.  A flat key=value config file can be supplied with --config; explicit
flags override it.  SINGHEAT_WORKERS sets the worker-pool size for scans.

Exit codes: 0 success, 1 domain error (a named precondition failed),
2 numerical failure (with a machine-readable diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import pde, selfsimilar as ss, stationary as st, verify as vf
from .errors import CflError, DomainError, NumericalError
from .params import characteristic_roots, derive

FMT = "%.16e"       # 17 significant digits


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    if isinstance(x, (float, np.floating)):
        return FMT % x
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _parse_pair(text, name):
    parts = text.split(",")
    if len(parts) != 2:
        raise DomainError(f"{name} must be 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _load_config(path):
    cfg = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DomainError(f"config line without '=': {line!r}")
            key, val = line.split("=", 1)
            cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    return obj


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_constants(args):
    p = derive(args.N, args.alpha)
    d = p.as_dict()
    if args.json:
        print(json.dumps(_json_safe(d)))
    else:
        for k, v in d.items():
            print(f"{k} = {_fmt(v)}")
    return 0


def _stationary_rows(sol, p):
    order = np.argsort(sol.traj.ts)
    ss_ = sol.traj.ts[order]
    vv = sol.traj.ys[order]
    vp = sol.traj.yps[order]
    rows = []
    for s, v, vpr in zip(ss_, vv, vp):
        r = math.exp(-s)
        u = r ** (-2.0 / p.alpha) * v
        up = -(r ** (-2.0 / p.alpha - 1.0)) * ((2.0 / p.alpha) * v + vpr)
        f = st.lyapunov_energy_vals(v, vpr, p)
        rows.append((s, r, v, vpr, u, up, f))
    return ["s", "r", "v", "vprime", "u", "uprime", "energy"], rows


def _stationary_solution(args, p):
    if args.r0 is not None and args.a is not None:
        seed = st.family_seed(args.r0, args.a, p)
    elif args.regular is not None:
        seed = st.RegularSeed(args.regular)
    elif args.emden is not None:
        parts = [float(x) for x in args.emden.split(",")]
        if len(parts) != 3:
            raise DomainError("--emden expects 's,v,vprime'")
        seed = st.EmdenState(*parts)
    else:
        raise DomainError(
            "provide a seed: --r0 with --a, or --regular, or --emden"
        )
    span = _parse_pair(args.span, "--span") if args.span else (1e-13, 1e3)
    return st.solve_stationary(seed, p, r_span=span)


def _cmd_stationary(args):
    p = derive(args.N, args.alpha)
    sol = _stationary_solution(args, p)
    cls = sol.classification
    print(f"classification = {cls.kind}")
    if cls.s_zero_of_energy is not None:
        print(f"s_zero_of_energy = {_fmt(cls.s_zero_of_energy)}")
    print(f"sign_at_origin = {cls.sign_at_origin}")
    if sol.origin_limit is not None:
        print(f"origin_limit = {_fmt(sol.origin_limit)}")
    print(f"zero_crossings = {len(sol.zero_crossings)}")
    if args.mode == "family":
        try:
            ob = st.origin_behavior(sol)
            print(f"origin_behavior = {ob.kind} (residual {_fmt(ob.residual)})")
        except NumericalError as exc:
            print(f"origin_behavior = Undetermined ({exc})")
    if args.csv:
        header, rows = _stationary_rows(sol, p)
        _write_csv(args.csv, header, rows)
        print(f"wrote {args.csv}")
    if args.dump_trajectory:
        _write_csv(
            args.dump_trajectory, ["t", "y", "yprime"],
            list(zip(sol.traj.ts, sol.traj.ys, sol.traj.yps)),
        )
    return 0


def _profile_rows(prof, p):
    order = np.argsort(prof.traj.ts)
    xs = prof.traj.ts[order]
    gs = prof.traj.ys[order]
    gxs = prof.traj.yps[order]
    rows = []
    for x, g, gx in zip(xs, gs, gxs):
        r = math.exp(x)
        f = r ** (-2.0 / p.alpha) * g
        fp = r ** (-2.0 / p.alpha - 1.0) * (gx - (2.0 / p.alpha) * g)
        rows.append((r, f, fp, g))
    return ["r", "f", "fprime", "rpow_f"], rows


def _cmd_profile_shoot(args):
    p = derive(args.N, args.alpha)
    prof = ss.shoot_profile(args.C1, p, r_max=args.rmax)
    print(f"status = {prof.status}")
    print(f"r_init = {_fmt(prof.r_init)}")
    print(f"r_max = {_fmt(prof.r_max)}")
    print(f"zeros = {len(prof.zeros)}")
    for z in prof.zeros:
        print(f"  zero at r = {_fmt(z)}")
    if prof.mu is not None:
        print(f"mu = {_fmt(prof.mu)}")
        print(f"mu_err = {_fmt(prof.mu_err)}")
        print(f"mu_converged = {prof.mu_converged}")
    if args.csv:
        header, rows = _profile_rows(prof, p)
        _write_csv(args.csv, header, rows)
        print(f"wrote {args.csv}")
    if args.dump_trajectory:
        _write_csv(
            args.dump_trajectory, ["t", "y", "yprime"],
            list(zip(prof.traj.ts, prof.traj.ys, prof.traj.yps)),
        )
    return 0


def _cmd_profile_scan(args):
    p = derive(args.N, args.alpha)
    lo, hi = _parse_pair(args.C1_range, "--C1-range")
    workers = int(os.environ.get("SINGHEAT_WORKERS", "1"))
    rows = ss.scan_sign_changing(p, (lo, hi), args.n, r_max=args.rmax, workers=workers)
    header = ["C1", "m", "mu", "mu_err", "converged", "r_max", "status"]
    table = [
        (row.C1, row.m, row.mu, row.mu_err, row.converged, row.r_max, row.status)
        for row in rows
    ]
    for row in table:
        print(" ".join(f"{h}={_fmt(v)}" for h, v in zip(header, row)))
    if args.refine:
        for a, b in zip(rows[:-1], rows[1:]):
            if a.m >= 0 and b.m >= 0 and a.m != b.m:
                c = ss.refine_zero_transition(p, a.C1, b.C1, r_max=args.rmax)
                print(f"transition ({a.m} -> {b.m}) near C1 = {_fmt(c)}")
    if args.csv:
        _write_csv(args.csv, header, table)
        print(f"wrote {args.csv}")
    return 0


def _make_grid(args, N):
    if args.grid:
        parts = args.grid.split(",")
        if len(parts) != 3:
            raise DomainError("--grid expects 'M,r1,rM'")
        M, r1, rM = int(parts[0]), float(parts[1]), float(parts[2])
    else:
        M, r1, rM = 512, 1e-3 * args.delta, 50.0 * args.delta
    return pde.log_grid(r1, rM, M, N=N)


def _background_from_spec(text, p):
    if text == "homog":
        return pde.homogeneous_background(p)
    if text.startswith("stationary:"):
        cfg = _load_config(text.split(":", 1)[1])
        seed = st.family_seed(float(cfg["r0"]), float(cfg["a"]), p)
        span = (
            _parse_pair(cfg["span"], "span") if "span" in cfg else (1e-13, 1e3)
        )
        sol = st.solve_stationary(seed, p, r_span=span)
        return pde.stationary_background(sol, p)
    if text.startswith("profile:"):
        cfg = _load_config(text.split(":", 1)[1])
        prof = ss.shoot_profile(
            float(cfg["C1"]), p, r_max=float(cfg.get("rmax", 40.0))
        )
        return pde.selfsimilar_background(prof, p)
    raise DomainError(
        f"unknown background {text!r}; use homog, stationary:<file> or profile:<file>"
    )


def _snapshot_rows(w, bg, p):
    grid = w.grid
    r = grid.r
    t = w.time
    U = bg.evaluate(t if t > 0 else 1e-300, r)[0]
    u = U + w.values
    rp = r ** (2.0 / p.alpha) * u
    env = np.abs(w.values) / (1.0 + r ** (-p.eta))
    return (
        ["r", "U", "w", "u", "rpow_u", "envelope"],
        list(zip(r, U, w.values, u, rp, env)),
    )


def _cmd_pde_perturb(args):
    p = derive(args.N, args.alpha)
    grid = _make_grid(args, p.N)
    bg = _background_from_spec(args.background, p)
    center, width, height = (float(x) for x in args.bump.split(","))
    x = (grid.r - center) / width
    w0vals = np.zeros_like(grid.r)
    m = np.abs(x) < 1.0
    w0vals[m] = height * np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    w0vals[grid.r <= args.delta] = 0.0
    w0 = pde.RadialField(grid, w0vals, args.t0)
    snap_times = (
        [float(s) for s in args.snapshots.split(",")] if args.snapshots else None
    )
    snaps, rep = pde.run_perturbation(
        w0, bg, p, T=args.T, delta=args.delta,
        dt_ctrl=(args.cfl, args.dt_max), snapshot_times=snap_times, t0=args.t0,
    )
    print(f"C_fit_w = {_fmt(rep.C_fit_w)}")
    for t, v in rep.sing_amp:
        print(f"sing_amp t={_fmt(t)} value={_fmt(v)}")
    for t, e in rep.l1_errors:
        print(f"l1_error t={_fmt(t)} value={_fmt(e)}")
    if args.csv_dir:
        os.makedirs(args.csv_dir, exist_ok=True)
        for snap in snaps:
            header, rows = _snapshot_rows(snap, bg, p)
            _write_csv(
                os.path.join(args.csv_dir, f"snapshot_t{snap.time:.6f}.csv"),
                header, rows,
            )
        _write_csv(
            os.path.join(args.csv_dir, "report.csv"),
            ["t", "sing_amp", "l1_error"],
            [
                (t, v, e)
                for (t, v), (_, e) in zip(rep.sing_amp, rep.l1_errors)
            ],
        )
        print(f"wrote {args.csv_dir}")
    return 0


def _cmd_pde_linear(args):
    p = derive(args.N, args.alpha)
    grid = _make_grid(args, p.N)
    r = grid.r
    if args.coeff == "hardy-sub":
        coeff = p.beta * (p.alpha + 1.0)
    elif args.coeff == "zero":
        coeff = 0.0
    else:
        coeff = float(args.coeff)
    if args.w0 == "indicator":
        w0 = pde.RadialField(grid, np.where(r > 1.0, 1.0, 0.0), 0.0)
    else:
        w0 = pde.RadialField(grid, np.exp(-(r ** 2) / 0.2), 0.0)
    snap_times = (
        [float(s) for s in args.snapshots.split(",")] if args.snapshots else None
    )
    run = pde.run_linear(
        w0, coeff, p, T=args.T, dt=args.dt, scheme=args.scheme,
        snapshot_times=snap_times,
    )
    h = np.asarray(run.l2_history)
    print(f"steps = {len(h) - 1}")
    print(f"l2_initial = {_fmt(h[0])}")
    print(f"l2_final = {_fmt(h[-1])}")
    print(f"max_step_growth = {_fmt(float(np.max(h[1:] / np.maximum(h[:-1], 1e-300))))}")
    print(f"h_envelope_C = {_fmt(pde.h_envelope_fit(run.snapshots, p))}")
    if args.csv_dir:
        os.makedirs(args.csv_dir, exist_ok=True)
        for snap in run.snapshots:
            _write_csv(
                os.path.join(args.csv_dir, f"linear_t{snap.time:.6f}.csv"),
                ["r", "w"], list(zip(r, snap.values)),
            )
        _write_csv(
            os.path.join(args.csv_dir, "l2_history.csv"),
            ["step", "l2"], list(enumerate(run.l2_history)),
        )
        print(f"wrote {args.csv_dir}")
    return 0


def _cmd_verify(args):
    results = vf.run_suite(args.suite, seed=args.seed)
    ok = True
    for res in results:
        print("\n".join(res.lines()))
        ok &= res.passed
    print("VERIFY", "PASSED" if ok else "FAILED")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = _Parser(prog="singheat", description=__doc__)
    parser.add_argument("--config", help="flat key=value file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def common_na(sp):
        sp.add_argument("--N", type=int, default=5)
        sp.add_argument("--alpha", type=float, default=0.75)

    sp = sub.add_parser("constants", help="print every derived constant")
    common_na(sp)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_constants)
    registry["constants"] = sp

    sp = sub.add_parser("stationary", help="stationary solutions")
    stsub = sp.add_subparsers(dest="mode", required=True)
    for mode in ("family", "classify"):
        m = stsub.add_parser(mode)
        common_na(m)
        m.add_argument("--r0", type=float)
        m.add_argument("--a", type=float)
        m.add_argument("--regular", type=float, help="regular seed value u(0)")
        m.add_argument("--emden", help="seed state 's,v,vprime'")
        m.add_argument("--span", help="radius span 'lo,hi'")
        m.add_argument("--csv")
        m.add_argument("--dump-trajectory", dest="dump_trajectory")
        m.set_defaults(fn=_cmd_stationary)
        registry[f"stationary.{mode}"] = m

    sp = sub.add_parser("profile", help="self-similar profiles")
    prsub = sp.add_subparsers(dest="mode", required=True)
    m = prsub.add_parser("shoot")
    common_na(m)
    m.add_argument("--C1", type=float, required=True)
    m.add_argument("--rmax", type=float, default=40.0)
    m.add_argument("--csv")
    m.add_argument("--dump-trajectory", dest="dump_trajectory")
    m.set_defaults(fn=_cmd_profile_shoot)
    registry["profile.shoot"] = m
    m = prsub.add_parser("scan")
    common_na(m)
    m.add_argument("--C1-range", dest="C1_range", required=True)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--rmax", type=float, default=40.0)
    m.add_argument("--refine", action="store_true")
    m.add_argument("--csv")
    m.set_defaults(fn=_cmd_profile_scan)
    registry["profile.scan"] = m

    sp = sub.add_parser("pde", help="radial PDE runs")
    pdsub = sp.add_subparsers(dest="mode", required=True)
    m = pdsub.add_parser("perturb")
    common_na(m)
    m.add_argument("--background", default="homog")
    m.add_argument("--bump", default="3.0,1.0,0.5", help="center,width,height")
    m.add_argument("--delta", type=float, default=1.0)
    m.add_argument("--T", type=float, default=0.05)
    m.add_argument("--t0", type=float, default=0.0)
    m.add_argument("--grid", help="'M,r1,rM'")
    m.add_argument("--snapshots", help="comma-separated times")
    m.add_argument("--cfl", type=float, default=0.4)
    m.add_argument("--dt-max", dest="dt_max", type=float, default=1e-4)
    m.add_argument("--csv-dir", dest="csv_dir")
    m.set_defaults(fn=_cmd_pde_perturb)
    registry["pde.perturb"] = m
    m = pdsub.add_parser("linear")
    common_na(m)
    m.add_argument("--coeff", default="hardy-sub", help="hardy-sub, zero, or a number")
    m.add_argument("--T", type=float, default=0.5)
    m.add_argument("--dt", type=float, default=1e-3)
    m.add_argument("--scheme", choices=("be", "cn"), default="be")
    m.add_argument("--w0", choices=("indicator", "gaussian"), default="indicator")
    m.add_argument("--delta", type=float, default=1.0)
    m.add_argument("--grid", help="'M,r1,rM'")
    m.add_argument("--snapshots", default="0.1,0.25")
    m.add_argument("--csv-dir", dest="csv_dir")
    m.set_defaults(fn=_cmd_pde_linear)
    registry["pde.linear"] = m

    sp = sub.add_parser("verify", help="run acceptance suites")
    sp.add_argument(
        "--suite", choices=sorted(vf.SUITES), default="all"
    )
    sp.add_argument("--seed", type=int, default=vf.DEFAULT_SEED)
    sp.set_defaults(fn=_cmd_verify)
    registry["verify"] = sp

    return parser, registry


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()

    # apply --config as defaults before the real parse (flags still win)
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            parser.error("--config needs a path")
        cfg = _load_config(argv[i + 1])
        for sp in registry.values():
            known = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in cfg.items() if k in known})

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return 1
    except CflError as exc:
        sys.stderr.write(
            json.dumps({"error": "cfl", "message": str(exc), **_json_safe(exc.diagnostic)})
            + "\n"
        )
        return 2
    except NumericalError as exc:
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
