"""Curve tables for the figure panels.

Every panel is a :class:`Table`: comment lines documenting units and
parameters, a header row, and one row per abscissa sample.  Only the
population panels (fig2*) propagate; the rest evaluate closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic, difflength
from .core import InitialState, site_indices
from .errors import ConfigError
from .propagator import PropagationConfig, auto_sites, population_snapshot

__all__ = ["PANELS", "Table", "panel_defaults", "figure_table", "write_csv", "format_csv"]

PANELS = ("fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig2c", "fig3",
          "fig4a", "fig4b", "fig4c", "fig4d", "fig5a", "fig5b", "fig5c")

UNITS = "# units: hbar = 1, lattice constant = 1; time in 1/|J|, D in J a^2, lengths in a"

_KS = [0.0, 0.4, math.pi / 4, 1.2, math.pi / 2]
_PS = [0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2]
_W_C = 1.0 / math.sqrt(math.log(2.0))


@dataclass
class Table:
    comments: list[str]
    columns: list[str]
    data: np.ndarray  # (rows, columns)


def panel_defaults(panel: str) -> dict:
    """Default parameters of a panel; any key can be overridden in :func:`figure_table`."""
    if panel in ("fig1a", "fig1b", "fig1c"):
        return {"J": 1.0, "w_min": 0.5, "w_max": 10.0, "points": 191,
                "waves": _KS if panel == "fig1a" else _PS}
    if panel in ("fig2a", "fig2c"):
        return {"J": 1.0, "w": 10.0, "Gamma": 0.0 if panel == "fig2a" else 1.0,
                "times": [0.0, 5.0, 10.0], "waves": _KS, "dt": 0.01}
    if panel == "fig2b":
        return {"J": -1.0, "w": 10.0, "Gamma": 0.0, "times": [0.0, 5.0, 10.0], "waves": _PS, "dt": 0.01}
    if panel == "fig3":
        return {"J": 1.0, "widths": [1.0, 3.0, 10.0], "gammas": [0.0, 0.2, 1.0], "t_max": 10.0, "points": 201}
    if panel in ("fig4a", "fig4b", "fig4c", "fig4d"):
        waves = _KS if panel in ("fig4a", "fig4b") else _PS
        return {"J": 1.0, "w": 10.0, "Gamma": 1.0, "waves": waves, "t_max": 10.0, "points": 201}
    if panel in ("fig5a", "fig5b"):
        return {"J": 1.0, "tau": 5.0, "widths": [0.5, 1.0, _W_C, 2.0, 10.0],
                "Gamma_max": 2.0, "points": 201}
    if panel == "fig5c":
        return {"J": 1.0, "widths": [0.5, 1.0, _W_C, 2.0, 10.0], "Gamma_tau_max": 10.0, "points": 201}
    raise ConfigError(f"unknown figure panel {panel!r}; expected one of {', '.join(PANELS)}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _lab(x: float) -> str:
    return format(float(x), ".6g")


def _param_lines(params: dict) -> list[str]:
    out = []
    for key in sorted(params):
        v = params[key]
        text = ", ".join(_fmt(x) for x in v) if isinstance(v, (list, tuple)) else _fmt(v)
        out.append(f"# {key} = {text}")
    return out


def _rates_vs_width(panel, p):
    J = p["J"]
    w = np.linspace(p["w_min"], p["w_max"], int(p["points"]))
    cols, data = ["w"], [w]
    for q in p["waves"]:
        if panel == "fig1a":
            cols.append(f"dDeltaD_S/dt k={_lab(q)}")
            data.append(-2 * J * J * np.exp(-1 / w**2) * math.cos(2 * q))
        elif panel == "fig1b":
            cols.append(f"dD_T/dt p={_lab(q)}")
            data.append(np.array([analytic.d_traveling(1.0, J, x, q) for x in w]))
        else:
            cols.append(f"|v| p={_lab(q)}")
            data.append(np.abs(2 * J * np.exp(-1 / (4 * w**2)) * math.sin(q)))
    titles = {"fig1a": "rate of D_S - D_delta in the isolated chain (wide-packet form)",
              "fig1b": "rate of D_T in the isolated chain",
              "fig1c": "centre-of-mass speed of the traveling packet in the isolated chain"}
    return titles[panel], cols, data


def _populations(panel, p):
    J, w, g = p["J"], p["w"], p["Gamma"]
    times = [float(t) for t in p["times"]]
    t_end = max(times)
    kind = "traveling" if panel == "fig2b" else "standing"
    n_sites = auto_sites(InitialState.gaussian(w), J, t_end)
    scale = max(abs(J), g)
    dt = p["dt"] / scale
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    cfg = PropagationConfig(n_sites=n_sites, dt=t_end / n_steps, t_end=t_end,
                            scheme="rk4_dense" if g > 0 else "bloch_closed")
    cols, data = ["n"], [site_indices(n_sites).astype(float)]
    for q in p["waves"]:
        state = InitialState.traveling(w, q) if kind == "traveling" else InitialState.standing(w, q)
        snaps = population_snapshot(state, J, g, times, cfg)
        for t, row in zip(times, snaps):
            cols.append(f"P {'p' if kind == 'traveling' else 'k'}={_lab(q)} t={_lab(t)}")
            data.append(row)
    title = f"site populations of the {kind} Gaussian" + (" with dephasing" if g > 0 else "")
    return title, cols, data


def _noisy_gaussian(panel, p):
    J = p["J"]
    t = np.linspace(0.0, p["t_max"], int(p["points"]))
    cols, data = ["t"], [t]
    for w in p["widths"]:
        for g in p["gammas"]:
            cols.append(f"D_G w={_lab(w)} Gamma={_lab(g)}")
            data.append(analytic.d_gaussian(t, J, w, g))
    return "Gaussian diffusivity for several widths and dephasing rates", cols, data


def _noisy_waves(panel, p):
    J, w, g = p["J"], p["w"], p["Gamma"]
    t = np.linspace(0.0, p["t_max"], int(p["points"]))
    kind = "standing" if panel in ("fig4a", "fig4b") else "traveling"
    sym = "k" if kind == "standing" else "p"
    name = "D_S" if kind == "standing" else "D_T"
    cols, data = ["t"], [t]
    for q in p["waves"]:
        if panel in ("fig4a", "fig4c"):
            cols += [f"{name} {sym}={_lab(q)} Gamma={_lab(g)}", f"{name} {sym}={_lab(q)} Gamma=0"]
            data += [analytic.diffusivity(kind, t, J, w, q, g), analytic.diffusivity(kind, t, J, w, q, 0.0)]
        else:
            cols.append(f"Delta{name} {sym}={_lab(q)} Gamma={_lab(g)}")
            data.append(analytic.relative_diffusivity(kind, t, J, w, q, g))
    what = "diffusivity" if panel in ("fig4a", "fig4c") else "diffusivity relative to a single site"
    return f"{kind} Gaussian {what}", cols, data


def _diffusion_length(panel, p):
    J = p["J"]
    if panel == "fig5c":
        x = np.linspace(0.0, p["Gamma_tau_max"], int(p["points"]))
        cols, data = ["Gamma tau"], [x]
        for w in p["widths"]:
            c = math.exp(-1 / w**2)
            cols.append(f"Delta_Gamma L2/(4 J^2 tau^2) w={_lab(w)}")
            data.append(x * ((2 + x) * c - (x + 1)) / (x + 1) ** 2)
        return "dephasing gain of the squared diffusion length, scaled by 4 J^2 tau^2", cols, data
    tau = p["tau"]
    gam = np.linspace(0.0, p["Gamma_max"], int(p["points"]))
    cols, data = ["Gamma"], [gam]
    f = difflength.l2_closed_gaussian if panel == "fig5a" else difflength.delta_l2
    for w in p["widths"]:
        cols.append(f"{'L2' if panel == 'fig5a' else 'DeltaL2'} w={_lab(w)}")
        data.append(np.array([f(J, w, g, tau) for g in gam]))
    what = "squared diffusion length" if panel == "fig5a" else "squared diffusion length minus that of a single site"
    return f"Gaussian {what}", cols, data


def figure_table(panel: str, overrides: dict | None = None) -> Table:
    params = panel_defaults(panel)
    if overrides:
        unknown = set(overrides) - set(params)
        if unknown:
            raise ConfigError(f"{panel} has no parameters {sorted(unknown)}; known: {sorted(params)}")
        params.update(overrides)
    if panel.startswith("fig1"):
        title, cols, data = _rates_vs_width(panel, params)
    elif panel.startswith("fig2"):
        title, cols, data = _populations(panel, params)
    elif panel == "fig3":
        title, cols, data = _noisy_gaussian(panel, params)
    elif panel.startswith("fig4"):
        title, cols, data = _noisy_waves(panel, params)
    else:
        title, cols, data = _diffusion_length(panel, params)
    comments = [f"# {panel}: {title}", UNITS] + _param_lines(params)
    return Table(comments, cols, np.column_stack([np.asarray(c, dtype=float) for c in data]))


def format_csv(table: Table) -> str:
    lines = list(table.comments)
    lines.append(",".join(table.columns))
    for row in table.data:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def write_csv(table: Table, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_csv(table))
