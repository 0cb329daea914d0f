"""Squared diffusion length with an exponential exciton-lifetime distribution.

``L^2 = int_0^inf R^2(t) P(t) dt`` with ``P(t) = exp(-t/tau)/tau`` and
``R^2(t) = <n^2(t)> - <n^2(0)>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import InitialState
from .errors import InvalidParameter, TailBoundError
from .propagator import PropagationConfig, evolve

__all__ = [
    "LifetimeModel",
    "l2_closed_gaussian",
    "l2_delta",
    "delta_l2",
    "delta_gamma_l2",
    "gamma_max",
    "l2_numeric",
    "l2_scan",
    "default_l2_config",
    "HORIZON",
]

HORIZON = 20.0  # lifetime weight is integrated to HORIZON * tau
TAIL_REL_TOL = 1e-3
L2_DT = 0.05  # in units of 1/max(|J|, Gamma); the largest step the integrator accepts
L2_RECORD = 0.1


@dataclass(frozen=True)
class LifetimeModel:
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameter(f"lifetime tau must be > 0, got {self.tau}")

    def density(self, t):
        return np.exp(-np.asarray(t, dtype=float) / self.tau) / self.tau


def _check(w, Gamma, tau):
    if not w > 0:
        raise InvalidParameter(f"w must be > 0, got {w}")
    if Gamma < 0:
        raise InvalidParameter(f"Gamma must be >= 0, got {Gamma}")
    LifetimeModel(tau)


def l2_closed_gaussian(J: float, w: float, Gamma: float, tau: float) -> float:
    """4 J^2 tau^2 (1 + Gamma tau - e^{-1/w^2}) / (Gamma tau + 1)^2."""
    _check(w, Gamma, tau)
    x = Gamma * tau
    return 4 * J * J * tau * tau * (1 + x - math.exp(-1 / w**2)) / (x + 1) ** 2


def l2_delta(J: float, Gamma: float, tau: float) -> float:
    LifetimeModel(tau)
    return 4 * J * J * tau * tau / (Gamma * tau + 1)


def delta_l2(J: float, w: float, Gamma: float, tau: float) -> float:
    """L^2 of the Gaussian minus that of a single-site state."""
    _check(w, Gamma, tau)
    return -4 * J * J * math.exp(-1 / w**2) * tau * tau / (Gamma * tau + 1) ** 2


def delta_gamma_l2(J: float, w: float, Gamma: float, tau: float) -> float:
    """L^2(Gamma) - L^2(0) for the Gaussian; positive iff e^{-1/w^2} > (1+Gamma tau)/(2+Gamma tau)."""
    _check(w, Gamma, tau)
    x = Gamma * tau
    return 4 * Gamma * J * J * tau**3 * ((2 + x) * math.exp(-1 / w**2) - (x + 1)) / (x + 1) ** 2


def gamma_max(w: float, tau: float) -> float | None:
    """Dephasing rate maximizing the Gaussian L^2; None when L^2 decreases monotonically.

    Setting dL^2/dGamma = 0 in the closed form gives Gamma tau = 2 e^{-1/w^2} - 1,
    which is positive exactly when w exceeds 1/sqrt(ln 2).
    """
    LifetimeModel(tau)
    x = 2 * math.exp(-1 / w**2) - 1
    if x <= 0:
        return None
    return x / tau


def default_l2_config(state: InitialState, J: float, Gamma: float, tau: float) -> PropagationConfig:
    t_max = HORIZON * tau
    scale = max(abs(J), Gamma)
    return PropagationConfig.sized(state, J, t_max, Gamma=Gamma, dt=L2_DT / scale,
                                   record_every=L2_RECORD / scale,
                                   scheme="rk4_dense" if Gamma > 0 else "bloch_closed")


def l2_numeric(state: InitialState, J: float, Gamma: float, tau: float,
               config: PropagationConfig | None = None, return_parts: bool = False):
    """L^2 from a propagated MSD: trapezoid rule on the record grid plus a tail term.

    Beyond the last record T the MSD is continued as a quadratic with the
    recorded slope 2D(T) and curvature 2 dD/dt(T), whose lifetime integral is
    e^{-T/tau} [R^2(T) + 2 tau D(T) + 2 tau^2 dD/dt(T)].
    """
    life = LifetimeModel(tau)
    if config is None:
        config = default_l2_config(state, J, Gamma, tau)
    if config.t_end < HORIZON * tau * (1 - 1e-12):
        raise InvalidParameter(f"propagation must reach {HORIZON:g} tau = {HORIZON * tau}, got {config.t_end}")
    series = evolve(state, J, Gamma, config)
    t = series.times
    r2 = series.msd
    body = float(np.trapezoid(r2 * life.density(t), t))
    d_end = series.diffusivity_flux[-1]
    slope = float(np.gradient(series.diffusivity_flux, t)[-1])
    tail = math.exp(-t[-1] / tau) * (r2[-1] + 2 * tau * d_end + 2 * tau * tau * slope)
    total = body + tail
    if abs(tail) > TAIL_REL_TOL * abs(total):
        raise TailBoundError(f"tail {tail:.3g} exceeds {TAIL_REL_TOL:g} of L^2 = {total:.6g}")
    if return_parts:
        return total, body, tail, series
    return total


def l2_scan(state: InitialState, J: float, gammas, tau: float) -> np.ndarray:
    """Numeric L^2 for each dephasing rate in ``gammas``."""
    return np.array([l2_numeric(state, J, g, tau) for g in gammas])
