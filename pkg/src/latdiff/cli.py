"""Command-line front end: ``latdiff <figure|propagate|validate|sweep|difflength>``.

Every flag can also come from ``--config file.json`` whose keys are the flag
names without the leading dashes; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analytic, difflength, figures, validate
from .core import InitialState, site_indices
from .errors import ConfigError, InvalidParameter, LatDiffError
from .propagator import SCHEMES, PropagationConfig, evolve, population_snapshot

SWEEP_TARGETS = ("D", "L2", "t_p", "w_c")
GRID_KEYS = ("w", "k", "p", "gamma", "tau")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_rows(path, comments, columns, rows):
    lines = list(comments) + [",".join(columns)]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def parse_grid(text) -> list[float]:
    """``"a,b,c"`` lists values; ``"lo:hi:n"`` is an n-point linspace; JSON lists pass through."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {text!r} must read lo:hi:n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ConfigError(f"range {text!r} has no points")
        return list(np.linspace(lo, hi, n))
    return [float(x) for x in text.split(",")]


def default_jobs() -> int:
    return validate.default_jobs()


# ---------------------------------------------------------------------------
# commands


def _state_from(args, w=None, kp=None) -> InitialState:
    kind = args.state
    w = args.w if w is None else w
    if kind == "delta":
        return InitialState.delta()
    if kind == "gaussian":
        return InitialState.gaussian(w)
    if kind == "standing":
        return InitialState.standing(w, args.k if kp is None else kp)
    return InitialState.traveling(w, args.p if kp is None else kp)


def cmd_figure(args) -> int:
    panels = figures.PANELS if args.id == "all" else (args.id,)
    overrides = json.loads(args.params) if args.params else {}
    if args.id == "all":
        os.makedirs(args.out, exist_ok=True)
    for panel in panels:
        table = figures.figure_table(panel, overrides)
        path = os.path.join(args.out, f"{panel}.csv") if args.id == "all" else args.out
        if path in (None, "-"):
            sys.stdout.write(figures.format_csv(table))
        else:
            figures.write_csv(table, path)
    return 0


def cmd_propagate(args) -> int:
    state = _state_from(args)
    J, gamma = args.J, args.gamma
    scale = max(abs(J), gamma)
    dt = args.dt if args.dt is not None else 1e-3 / scale
    scheme = args.scheme or ("bloch_closed" if gamma == 0 else "rk4_dense")
    cfg = PropagationConfig.sized(state, J, args.t_end, Gamma=gamma, dt=dt,
                                  record_every=args.record_every, scheme=scheme)
    if args.n_sites is not None:
        cfg = PropagationConfig(n_sites=args.n_sites, dt=cfg.dt, t_end=cfg.t_end,
                                record_stride=cfg.record_stride, scheme=scheme)
    series = evolve(state, J, gamma, cfg)
    columns = ["t", "mean_n", "variance", "D_flux", "D_fd"]
    cols = [series.times, series.mean_n, series.variance, series.diffusivity_flux, series.diffusivity_fd]
    for l in range(1, 5):
        columns += [f"Re_rho_{l}", f"Im_rho_{l}"]
        cols += [series.rho_l(l).real, series.rho_l(l).imag]
    columns.append("boundary_mass")
    cols.append(series.boundary_mass)
    comments = [
        f"# propagate: {state.label()} J={_fmt(J)} Gamma={_fmt(gamma)} scheme={scheme}",
        figures.UNITS,
        f"# n_sites = {cfg.n_sites}, dt = {_fmt(cfg.dt)}, record_stride = {cfg.record_stride}",
    ]
    _write_rows(args.out, comments, columns, np.column_stack(cols))
    if args.snapshot_times:
        times = parse_grid(args.snapshot_times)
        pops = population_snapshot(state, J, gamma, times, cfg)
        _write_rows(args.snapshot_out, comments[:2], ["n"] + [f"P t={t:.6g}" for t in times],
                    np.column_stack([site_indices(cfg.n_sites)] + list(pops)))
    return 0


def cmd_validate(args) -> int:
    suites = validate.SUITES if args.suite == "all" else (args.suite,)
    override = json.loads(args.grid) if args.grid else None
    reports = []
    for suite in suites:
        reports += validate.run_suite(suite, override, jobs=args.jobs)
    if args.report:
        validate.write_report(reports, args.report)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        detail = r.error if r.error else f"rel={r.max_rel_err:.3g} abs={r.max_abs_err:.3g} tol={r.tolerance:g}"
        print(f"{status} {r.case_id} {detail}")
    print(f"{len(reports) - len(failed)}/{len(reports)} cases passed")
    return 1 if failed else 0


def _sweep_point(job):
    target, kind, J, t_star, numeric, point = job
    w, k, p, gamma, tau = (point[key] for key in GRID_KEYS)
    kp = k if kind == "standing" else p
    if target == "w_c":
        v = analytic.critical_width(kind, kp)
    elif target == "t_p":
        v = analytic.peak_time(kind, J, w, kp, gamma)
    else:
        state = {"delta": lambda: InitialState.delta(), "gaussian": lambda: InitialState.gaussian(w),
                 "standing": lambda: InitialState.standing(w, k),
                 "traveling": lambda: InitialState.traveling(w, p)}[kind]()
        if target == "D":
            if numeric:
                v = validate.numeric_diffusivity(state, J, gamma, t_star).diffusivity_flux[-1]
            else:
                v = analytic.diffusivity(kind, t_star, J, w, kp, gamma)
        elif numeric or kind in ("standing", "traveling"):
            v = difflength.l2_numeric(state, J, gamma, tau)
        elif kind == "delta":
            v = difflength.l2_delta(J, gamma, tau)
        else:
            v = difflength.l2_closed_gaussian(J, w, gamma, tau)
    return math.nan if v is None else float(v)


def cmd_sweep(args) -> int:
    if args.target == "D" and args.t is None:
        raise ConfigError("target D needs --t")
    axes = {key: parse_grid(getattr(args, key)) for key in GRID_KEYS}
    if any(len(v) == 0 for v in axes.values()):
        raise ConfigError("sweep grid is empty")
    points = [dict(zip(GRID_KEYS, combo)) for combo in itertools.product(*axes.values())]
    jobs_list = [(args.target, args.state, args.J, args.t, args.numeric, pt) for pt in points]
    jobs = args.jobs if args.jobs is not None else default_jobs()
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_sweep_point, jobs_list))
    else:
        values = [_sweep_point(j) for j in jobs_list]
    comments = [f"# sweep: target={args.target} state={args.state} J={_fmt(args.J)}"
                + (f" t={_fmt(args.t)}" if args.t is not None else ""),
                figures.UNITS, "# nan marks points where the target does not exist"]
    rows = [[pt[key] for key in GRID_KEYS] + [v] for pt, v in zip(points, values)]
    _write_rows(args.out, comments, list(GRID_KEYS) + [args.target], rows)
    return 0


def cmd_difflength(args) -> int:
    state = _state_from(args)
    J, gamma, tau = args.J, args.gamma, args.tau
    rows, columns = [], ["L2_numeric"]
    values = [difflength.l2_numeric(state, J, gamma, tau)] if args.numeric else []
    if not args.numeric:
        columns = []
    if state.kind == "gaussian":
        gm = difflength.gamma_max(state.w, tau)
        columns += ["L2_closed", "DeltaL2", "Delta_Gamma_L2", "Gamma_max"]
        values += [difflength.l2_closed_gaussian(J, state.w, gamma, tau),
                   difflength.delta_l2(J, state.w, gamma, tau),
                   difflength.delta_gamma_l2(J, state.w, gamma, tau),
                   math.nan if gm is None else gm]
    elif state.kind == "delta":
        columns.append("L2_closed")
        values.append(difflength.l2_delta(J, gamma, tau))
    if not values:
        raise ConfigError(f"no closed form for {state.kind} states; pass --numeric")
    rows.append(values)
    comments = [f"# difflength: {state.label()} J={_fmt(J)} Gamma={_fmt(gamma)} tau={_fmt(tau)}",
                figures.UNITS, "# Gamma_max is nan when L2 decreases monotonically with Gamma"]
    _write_rows(args.out, comments, columns, rows)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_state(p, default="gaussian"):
    p.add_argument("--state", choices=("delta", "gaussian", "standing", "traveling"), default=default)
    p.add_argument("--w", type=float, default=10.0, help="packet width in lattice constants")
    p.add_argument("--k", type=float, default=0.0, help="standing-wave number")
    p.add_argument("--p", type=float, default=0.0, help="traveling momentum")


def _add_common(p):
    p.add_argument("--config", help="JSON file of flag values (keys are flag names)")
    p.add_argument("--J", type=float, default=1.0, help="nearest-neighbour coupling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latdiff", description="Wave-packet diffusivity on a dephased chain.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("figure", help="write the curves of a figure panel as CSV")
    p.add_argument("id", choices=figures.PANELS + ("all",))
    p.add_argument("--out", default="-", help="output file ('-' for stdout); a directory for 'all'")
    p.add_argument("--params", help="JSON object overriding panel parameters")
    p.add_argument("--config", help="JSON file of flag values (keys are flag names)")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("propagate", help="propagate one initial state and write its observables")
    _add_common(p)
    _add_state(p)
    p.add_argument("--gamma", type=float, default=0.0, help="dephasing rate")
    p.add_argument("--t-end", type=float, default=8.0)
    p.add_argument("--dt", type=float, help="time step (default 1e-3/max(|J|, gamma))")
    p.add_argument("--record-every", type=float, help="time between recorded rows (default every step)")
    p.add_argument("--n-sites", type=int, help="chain length (default: sized from the light cone)")
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--out", default="-")
    p.add_argument("--snapshot-times", help="times for population snapshots, e.g. 0,5,10")
    p.add_argument("--snapshot-out", default="-")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("validate", help="run a validation suite; exit 1 on any failure")
    p.add_argument("suite", choices=validate.SUITES + ("all",))
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--grid", help="JSON object overriding the suite grid")
    p.add_argument("--jobs", type=int, help="worker processes (default $LATDIFF_JOBS or the core count)")
    p.add_argument("--config", help="JSON file of flag values (keys are flag names)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="evaluate a target over a parameter grid")
    _add_common(p)
    p.add_argument("--target", choices=SWEEP_TARGETS, required=True)
    p.add_argument("--state", choices=("delta", "gaussian", "standing", "traveling"), default="gaussian")
    p.add_argument("--w", default="10", help="grid: a,b,c or lo:hi:n")
    p.add_argument("--k", default="0")
    p.add_argument("--p", default="0")
    p.add_argument("--gamma", default="0")
    p.add_argument("--tau", default="5")
    p.add_argument("--t", type=float, help="evaluation time for target D")
    p.add_argument("--numeric", action="store_true", help="propagate instead of using closed forms")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("difflength", help="squared diffusion length of one state")
    _add_common(p)
    _add_state(p)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=5.0)
    p.add_argument("--numeric", action="store_true", help="also integrate a propagated MSD")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_difflength)
    return parser


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        return action.choices[name]


def _apply_config(parser, argv, args):
    """Re-parse with config-file values as defaults so explicit flags still win."""
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    sub = _subparser(parser, args.command)
    known = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                known[opt[2:]] = action
    defaults = {}
    for key, value in cfg.items():
        if key in known and key not in ("config", "help"):
            action = known[key]
            if action.type is not None and isinstance(value, str):
                value = action.type(value)
            if action.choices is not None and value not in action.choices:
                raise ConfigError(f"config {key}={value!r}; expected one of {list(action.choices)}")
            defaults[action.dest] = value
        else:
            raise ConfigError(f"unknown config key {key!r} for '{args.command}'")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            args = _apply_config(parser, argv, args)
        return args.func(args)
    except (InvalidParameter, ConfigError, json.JSONDecodeError) as exc:
        parser.exit(2, f"latdiff: error: {exc}\n")
    except (LatDiffError, OSError) as exc:
        parser.exit(1, f"latdiff: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
