"""Oracle-equivalence harness: closed forms against brute-force propagation.

Each suite expands a parameter grid into cases.  A case produces a numeric
curve and a reference curve; the report records the largest absolute error,
the error relative to the reference scale, and the first sample that breaks
the tolerance.  Cases that raise are reported as failures.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from . import analytic, difflength
from .core import InitialState
from .errors import InvalidParameter, NoSignChangeError
from .propagator import PropagationConfig, evolve

__all__ = [
    "ComparisonReport",
    "Case",
    "SUITES",
    "ABS_FLOOR",
    "default_grid",
    "build_cases",
    "run_case",
    "run_suite",
    "write_report",
    "critical_scan",
    "numeric_diffusivity",
]

ABS_FLOOR = 1e-9
TOL_DEFAULT = 1e-3
TOL_NARROW = 5e-3  # packets of width ~1 lattice constant
TOL_IDENTITY = 1e-8
TOL_COHERENCE = 1e-6  # absolute
TOL_L2 = 5e-3

SUITES = ("closed_system", "hsr", "coherence_law", "difflength", "identities")

_WAVES = [0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2]
_KS = [0.0, 0.4, math.pi / 4, 1.2, math.pi / 2]


def _state_grid():
    states = [InitialState.delta()]
    states += [InitialState.gaussian(w) for w in (1.0, 3.0, 10.0)]
    states += [InitialState.standing(10.0, k) for k in _KS]
    states += [InitialState.traveling(10.0, p) for p in _WAVES]
    return [s.to_dict() for s in states]


def default_grid(suite: str) -> dict:
    if suite == "closed_system":
        return {"states": _state_grid(), "J": 1.0, "t_end": 8.0}
    if suite == "hsr":
        return {"states": _state_grid(), "J": 1.0, "Gamma": [0.1, 1.0, 2.0], "t_end": 8.0}
    if suite == "coherence_law":
        states = [InitialState.delta(), InitialState.gaussian(3.0),
                  InitialState.standing(10.0, 0.4), InitialState.traveling(10.0, math.pi / 4)]
        return {"states": [s.to_dict() for s in states], "J": 1.0, "Gamma": [0.1, 1.0, 2.0], "t_end": 8.0}
    if suite == "difflength":
        return {"w": [1.0, 3.0, 10.0], "Gamma_tau": [0.25, 1.0, 4.0], "tau": 5.0, "J": 1.0,
                "delta_Gamma_tau": [0.0]}
    if suite == "identities":
        return {"q": _WAVES, "w_relation": 10.0, "w_green_kubo": [1.0, 3.0, 10.0],
                "Gamma": [0.0, 1.0], "J": 1.0, "t_end": 10.0}
    raise InvalidParameter(f"unknown suite {suite!r}; expected one of {SUITES}")


@dataclass
class ComparisonReport:
    case_id: str
    max_abs_err: float | None
    max_rel_err: float | None
    tolerance: float
    passed: bool
    grid: dict
    first_fail_index: int | None = None
    first_fail_time: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Case:
    case_id: str
    check: str
    params: dict = field(hash=False)


def _tol_for(state: dict) -> float:
    w = state.get("w")
    return TOL_NARROW if w is not None and w < 2 else TOL_DEFAULT


def _state_id(d: dict) -> str:
    return InitialState.from_dict(d).label()


def build_cases(suite: str, grid_override: dict | None = None) -> list[Case]:
    grid = default_grid(suite)
    if grid_override:
        unknown = set(grid_override) - set(grid)
        if unknown:
            raise InvalidParameter(f"unknown grid keys for {suite}: {sorted(unknown)}")
        grid.update(grid_override)
    J, cases = grid["J"], []
    if suite == "closed_system":
        for s in grid["states"]:
            cases.append(Case(f"closed/{_state_id(s)}", "diffusivity",
                              {"state": s, "J": J, "Gamma": 0.0, "t_end": grid["t_end"]}))
    elif suite == "hsr":
        for g in grid["Gamma"]:
            for s in grid["states"]:
                cases.append(Case(f"hsr/G={g:g}/{_state_id(s)}", "diffusivity",
                                  {"state": s, "J": J, "Gamma": g, "t_end": grid["t_end"]}))
    elif suite == "coherence_law":
        for g in grid["Gamma"]:
            for s in grid["states"]:
                cases.append(Case(f"coherence/G={g:g}/{_state_id(s)}", "coherence",
                                  {"state": s, "J": J, "Gamma": g, "t_end": grid["t_end"]}))
    elif suite == "difflength":
        tau = grid["tau"]
        for w in grid["w"]:
            for x in grid["Gamma_tau"]:
                s = InitialState.gaussian(w).to_dict()
                cases.append(Case(f"l2/w={w:g}/Gtau={x:g}", "l2",
                                  {"state": s, "J": J, "Gamma": x / tau, "tau": tau}))
        for x in grid["delta_Gamma_tau"]:
            cases.append(Case(f"l2/delta/Gtau={x:g}", "l2",
                              {"state": InitialState.delta().to_dict(), "J": J, "Gamma": x / tau, "tau": tau}))
    elif suite == "identities":
        t_end = grid["t_end"]
        for q in grid["q"]:
            cases.append(Case(f"identity/relation/q={q:.6g}", "relation",
                              {"J": J, "w": grid["w_relation"], "q": q, "t_end": t_end}))
        for w in grid["w_green_kubo"]:
            cases.append(Case(f"identity/green_kubo/w={w:g}", "green_kubo", {"J": J, "w": w}))
        for g in grid["Gamma"]:
            cases.append(Case(f"identity/kc_null/G={g:g}", "kc_null",
                              {"J": J, "w": grid["w_relation"], "Gamma": g, "t_end": t_end}))
            for w in grid["w_green_kubo"]:
                cases.append(Case(f"identity/reduction/w={w:g}/G={g:g}", "reduction",
                                  {"J": J, "w": w, "Gamma": g, "t_end": t_end}))
    return cases


def _config(state: InitialState, J: float, Gamma: float, t_end: float, record_every: float = 0.05):
    scale = max(abs(J), Gamma)
    scheme = "bloch_closed" if Gamma == 0 else "rk4_dense"
    return PropagationConfig.sized(state, J, t_end, Gamma=Gamma, dt=0.01 / scale,
                                   record_every=record_every / scale, scheme=scheme)


def numeric_diffusivity(state: InitialState, J: float, Gamma: float, t_end: float,
                        record_every: float = 0.05):
    """Propagated series with default sizing; Bloch for Gamma = 0, RK4 otherwise."""
    return evolve(state, J, Gamma, _config(state, J, Gamma, t_end, record_every))


def _check_diffusivity(p):
    state = InitialState.from_dict(p["state"])
    series = numeric_diffusivity(state, p["J"], p["Gamma"], p["t_end"])
    ref = analytic.diffusivity_curve(state, p["J"], p["Gamma"], series.times).values
    return series.times, series.diffusivity_flux, ref, _tol_for(p["state"]), None


def _check_coherence(p):
    state = InitialState.from_dict(p["state"])
    series = numeric_diffusivity(state, p["J"], p["Gamma"], p["t_end"])
    t = series.times
    num = series.rho_l_series
    ref = num[0] * np.exp(-p["Gamma"] * t)[:, None]
    # coherences are bounded by 1, so errors are judged on an absolute scale
    return t, num, ref, TOL_COHERENCE, 1.0


def _check_l2(p):
    state = InitialState.from_dict(p["state"])
    num = difflength.l2_numeric(state, p["J"], p["Gamma"], p["tau"])
    if state.kind == "delta":
        ref = difflength.l2_delta(p["J"], p["Gamma"], p["tau"])
    else:
        ref = difflength.l2_closed_gaussian(p["J"], state.w, p["Gamma"], p["tau"])
    return None, np.array([num]), np.array([ref]), TOL_L2, None


def _tgrid(p):
    return np.linspace(0.0, p["t_end"], 201)


def _check_relation(p):
    t = _tgrid(p)
    lhs, rhs = analytic.standing_traveling_relation_check(t, p["J"], p["w"], p["q"])
    return t, rhs, lhs, TOL_IDENTITY, None


def _check_green_kubo(p):
    num = analytic.green_kubo_gaussian_rate(p["w"], p["J"])
    ref = 2 * p["J"] ** 2 * (1 - math.exp(-1 / p["w"] ** 2))
    return None, np.array([num]), np.array([ref]), TOL_IDENTITY, None


def _check_kc_null(p):
    t = _tgrid(p)
    num = analytic.relative_diffusivity("standing", t, p["J"], p["w"], math.pi / 4, p["Gamma"], exact=False)
    scale = float(np.max(np.abs(analytic.d_delta(t, p["J"], p["Gamma"]))))
    return t, num, np.zeros_like(t), TOL_IDENTITY, scale


def _check_reduction(p):
    t = _tgrid(p)
    J, w, g = p["J"], p["w"], p["Gamma"]
    ref = analytic.d_gaussian(t, J, w, g)
    num = np.concatenate([analytic.d_standing(t, J, w, 0.0, g), analytic.d_traveling(t, J, w, 0.0, g)])
    return np.concatenate([t, t]), num, np.concatenate([ref, ref]), TOL_IDENTITY, None


_CHECKS = {
    "diffusivity": _check_diffusivity,
    "coherence": _check_coherence,
    "l2": _check_l2,
    "relation": _check_relation,
    "green_kubo": _check_green_kubo,
    "kc_null": _check_kc_null,
    "reduction": _check_reduction,
}


_ERROR_TOL = {"diffusivity": TOL_DEFAULT, "coherence": TOL_COHERENCE, "l2": TOL_L2}


def _compare(case: Case, times, num, ref, tol, scale) -> ComparisonReport:
    err = np.abs(np.asarray(num) - np.asarray(ref))
    if err.ndim > 1:
        err = err.max(axis=tuple(range(1, err.ndim)))
    if scale is None:
        scale = float(np.max(np.abs(ref)))
    max_abs = float(err.max())
    max_rel = max_abs / scale if scale > 0 else (0.0 if max_abs == 0 else math.inf)
    passed = bool(max_rel <= tol or max_abs <= ABS_FLOOR)
    report = ComparisonReport(case.case_id, max_abs, max_rel, tol, passed, case.params)
    if not passed:
        bad = np.nonzero((err > tol * scale) & (err > ABS_FLOOR))[0]
        if len(bad):
            i = int(bad[0])
            report.first_fail_index = i
            report.first_fail_time = None if times is None else float(times[i])
    return report


def run_case(case: Case) -> ComparisonReport:
    tol = _ERROR_TOL.get(case.check, TOL_IDENTITY)
    try:
        return _compare(case, *_CHECKS[case.check](case.params))
    except Exception as exc:  # recorded, not raised
        return ComparisonReport(case.case_id, None, None, tol, False, case.params,
                                error=f"{type(exc).__name__}: {exc}")


def default_jobs() -> int:
    env = os.environ.get("LATDIFF_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_suite(suite_name: str, grid_override: dict | None = None, jobs: int | None = None) -> list[ComparisonReport]:
    """Run every case of a suite; reports come back sorted by case id."""
    if suite_name not in SUITES:
        raise InvalidParameter(f"unknown suite {suite_name!r}; expected one of {SUITES}")
    cases = build_cases(suite_name, grid_override)
    jobs = default_jobs() if jobs is None else jobs
    if jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_case, cases))
    else:
        reports = [run_case(c) for c in cases]
    return sorted(reports, key=lambda r: r.case_id)


def write_report(reports: list[ComparisonReport], path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# critical parameters located from propagated dynamics


def _gain_gaussian(w, J, Gamma, t):
    """Propagated D(t; Gamma) - D(t; 0) for a Gaussian of width w (same integrator for both)."""
    state = InitialState.gaussian(w)
    dt = t / 100
    out = []
    for g in (Gamma, 0.0):
        cfg = PropagationConfig.sized(state, J, t, Gamma=g, dt=dt, record_every=t)
        out.append(evolve(state, J, g, cfg).diffusivity_flux[-1])
    return out[0] - out[1]


def _relative_standing(k, J, w, Gamma, t):
    """Propagated D_S(t) - D_delta(t)."""
    out = []
    for state in (InitialState.standing(w, k), InitialState.delta()):
        out.append(numeric_diffusivity(state, J, Gamma, t).diffusivity_flux[-1])
    return out[0] - out[1]


def _peak_indicator(p, J, w, Gamma, t_end):
    """Positive when the propagated D_T(t) has an interior maximum on [0, t_end]."""
    d = numeric_diffusivity(InitialState.traveling(w, p), J, Gamma, t_end).diffusivity_flux
    i = int(np.argmax(d))
    if i >= len(d) - 1:
        return -1.0
    return float(d[i] - d[-1]) - 1e-12 * float(np.max(np.abs(d)))


def critical_scan(kind: str, Gamma: float, tau_or_t: float, grid, J: float = 1.0, w: float = 10.0,
                  xtol: float = 1e-5) -> float:
    """Locate a critical parameter from numeric propagation.

    * ``gaussian``: width where D(t; Gamma) - D(t; 0) changes sign at t = ``tau_or_t``.
    * ``standing``: wave number where D_S(t) - D_delta(t) changes sign (width ``w``).
    * ``traveling``: momentum where an interior peak of D_T(t) on [0, ``tau_or_t``] appears.

    The first sign change along ``grid`` is refined by bisection.
    """
    if kind == "gaussian":
        f = lambda x: _gain_gaussian(x, J, Gamma, tau_or_t)  # noqa: E731
    elif kind == "standing":
        f = lambda x: _relative_standing(x, J, w, Gamma, tau_or_t)  # noqa: E731
    elif kind == "traveling":
        if not Gamma > 0:
            raise InvalidParameter("peak detection needs Gamma > 0")
        f = lambda x: _peak_indicator(x, J, w, Gamma, tau_or_t)  # noqa: E731
    else:
        raise InvalidParameter(f"unknown kind {kind!r}")
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise InvalidParameter("scan grid needs at least two points")
    vals = [f(grid[0])]
    for i in range(1, grid.size):
        vals.append(f(grid[i]))
        if np.sign(vals[-1]) != np.sign(vals[-2]):
            return float(optimize.brentq(f, grid[i - 1], grid[i], xtol=xtol)
                         if kind != "traveling" else
                         optimize.bisect(f, grid[i - 1], grid[i], xtol=xtol))
    raise NoSignChangeError(f"no sign change of the {kind} indicator on [{grid[0]}, {grid[-1]}]")
