"""Closed-form diffusivities, centre-of-mass motion and derived critical parameters.

Every function is vectorized over ``t``.  Units: time in 1/|J|, lengths in
lattice constants, diffusivity in J a^2.  ``Gamma = 0`` is the isolated chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .core import InitialState, wrap_phase
from .errors import InvalidParameter, NoRootError, QuadratureError

__all__ = [
    "Regime",
    "DiffusivityCurve",
    "d_delta",
    "d_gaussian",
    "d_standing",
    "d_traveling",
    "com_traveling",
    "velocity_traveling",
    "relative_diffusivity",
    "dephasing_gain",
    "standing_coherence_factor",
    "critical_width",
    "traveling_enhancement_coefficient",
    "peak_time",
    "green_kubo_gaussian_rate",
    "standing_traveling_relation_check",
    "diffusivity",
    "diffusivity_curve",
    "K_C",
]

K_C = math.pi / 4
SERIES_CUTOFF = 1e-8


@dataclass(frozen=True)
class Regime:
    dephasing_rate_Gamma: float = 0.0

    def __post_init__(self):
        if not self.dephasing_rate_Gamma >= 0:
            raise InvalidParameter(f"Gamma must be >= 0, got {self.dephasing_rate_Gamma}")

    @property
    def isolated(self) -> bool:
        return self.dephasing_rate_Gamma == 0


@dataclass(frozen=True)
class DiffusivityCurve:
    times: np.ndarray
    values: np.ndarray
    state_descriptor: InitialState
    regime: Regime


def _check_gamma(Gamma):
    if Gamma < 0:
        raise InvalidParameter(f"Gamma must be >= 0, got {Gamma}")


def _relax(t, Gamma):
    """(1 - exp(-Gamma t)) / Gamma, continuous at Gamma t -> 0."""
    t = np.asarray(t, dtype=float)
    x = Gamma * t
    small = np.abs(x) < SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        exact = -np.expm1(-x) / Gamma if Gamma != 0 else t
    series = t * (1 - x / 2 + x * x / 6 - x**3 / 24)
    out = np.where(small, series, exact)
    return out if out.ndim else float(out)


def _decay(t, Gamma):
    return np.exp(-Gamma * np.asarray(t, dtype=float))


def _coh2(w):
    return math.exp(-1.0 / w**2)


def standing_coherence_factor(w: float, k: float, exact: bool = True) -> float:
    """Re<rho(0)>_2 of the standing Gaussian.

    The exact continuum value is e^{-1/w^2} (e^{k^2 w^2} cos 2k + 1) / (e^{k^2 w^2} + 1);
    the wide-packet form drops the e^{-k^2 w^2} terms.
    """
    if not exact:
        return _coh2(w) * math.cos(2 * k)
    damp = math.exp(-((k * w) ** 2))
    return _coh2(w) * ((math.cos(2 * k) + damp) / (1.0 + damp))


def d_delta(t, J: float, Gamma: float = 0.0):
    """Diffusivity of a single-site initial state: 2J^2 (1 - e^{-Gamma t}) / Gamma."""
    _check_gamma(Gamma)
    return 2 * J * J * _relax(t, Gamma)


def _suppressed(t, J, Gamma, coh):
    t = np.asarray(t, dtype=float)
    out = 2 * J * J * (_relax(t, Gamma) - coh * _decay(t, Gamma) * t)
    return out if out.ndim else float(out)


def d_gaussian(t, J: float, w: float, Gamma: float = 0.0):
    _check_gamma(Gamma)
    return _suppressed(t, J, Gamma, _coh2(w))


def d_standing(t, J: float, w: float, k: float, Gamma: float = 0.0, exact: bool = True):
    _check_gamma(Gamma)
    k = wrap_phase(k, "k")
    return _suppressed(t, J, Gamma, standing_coherence_factor(w, k, exact))


def _traveling_terms(w, p):
    c = _coh2(w) * math.cos(2 * p)
    s = math.exp(-1.0 / (2 * w**2)) * math.sin(p) ** 2
    return c, s


def d_traveling(t, J: float, w: float, p: float, Gamma: float = 0.0):
    _check_gamma(Gamma)
    p = wrap_phase(p, "p")
    c, s = _traveling_terms(w, p)
    t = np.asarray(t, dtype=float)
    relax = _relax(t, Gamma)
    decay = _decay(t, Gamma)
    out = 2 * J * J * (relax - c * decay * t - 2 * s * relax * decay)
    return out if out.ndim else float(out)


def com_traveling(t, J: float, w: float, p: float, Gamma: float = 0.0):
    """Centre of mass: -2J e^{-1/(4w^2)} sin(p) (1 - e^{-Gamma t}) / Gamma."""
    _check_gamma(Gamma)
    p = wrap_phase(p, "p")
    return -2 * J * math.exp(-1.0 / (4 * w**2)) * math.sin(p) * _relax(t, Gamma)


def velocity_traveling(t, J: float, w: float, p: float, Gamma: float = 0.0):
    _check_gamma(Gamma)
    p = wrap_phase(p, "p")
    v = -2 * J * math.exp(-1.0 / (4 * w**2)) * math.sin(p) * _decay(t, Gamma)
    return v if np.ndim(v) else float(v)


def diffusivity(kind: str, t, J: float, w: float = 0.0, kp: float = 0.0, Gamma: float = 0.0,
                exact: bool = True):
    if kind == "delta":
        return d_delta(t, J, Gamma)
    if kind == "gaussian":
        return d_gaussian(t, J, w, Gamma)
    if kind == "standing":
        return d_standing(t, J, w, kp, Gamma, exact)
    if kind == "traveling":
        return d_traveling(t, J, w, kp, Gamma)
    raise InvalidParameter(f"unknown kind {kind!r}")


def diffusivity_curve(state: InitialState, J: float, Gamma: float, times, exact: bool = True) -> DiffusivityCurve:
    times = np.asarray(times, dtype=float)
    kp = state.k if state.kind == "standing" else state.p
    values = np.asarray(diffusivity(state.kind, times, J, state.w, kp, Gamma, exact), dtype=float)
    return DiffusivityCurve(times, values, state, Regime(Gamma))


def relative_diffusivity(kind: str, t, J: float, w: float, kp: float = 0.0, Gamma: float = 0.0,
                         exact: bool = True):
    """D_kind(t) - D_delta(t) from the closed forms."""
    _check_gamma(Gamma)
    t = np.asarray(t, dtype=float)
    decay = _decay(t, Gamma)
    if kind == "gaussian":
        out = -2 * J * J * _coh2(w) * decay * t
    elif kind == "standing":
        out = -2 * J * J * standing_coherence_factor(w, wrap_phase(kp, "k"), exact) * decay * t
    elif kind == "traveling":
        c, s = _traveling_terms(w, wrap_phase(kp, "p"))
        out = -2 * J * J * (c * decay * t + 2 * s * _relax(t, Gamma) * decay)
    else:
        raise InvalidParameter(f"unknown kind {kind!r}")
    return out if out.ndim else float(out)


def dephasing_gain(kind: str, t, J: float, w: float, kp: float = 0.0, Gamma: float = 0.0,
                   exact: bool = True):
    """D(t; Gamma) - D(t; 0): positive where noise speeds up the spreading."""
    return (np.asarray(diffusivity(kind, t, J, w, kp, Gamma, exact))
            - np.asarray(diffusivity(kind, t, J, w, kp, 0.0, exact)))


def traveling_enhancement_coefficient(w: float, p: float) -> float:
    """Leading short-time coefficient of D_T(t;Gamma) - D_T(t;0) in units of 2 J^2 Gamma t^2.

    Expanding the noisy traveling diffusivity to first order in Gamma t gives
    e^{-1/w^2} cos 2p + 3 e^{-1/(2w^2)} sin^2 p - 1/2.
    """
    c, s = _traveling_terms(w, p)
    return c + 3 * s - 0.5


def critical_width(kind: str, kp: float = 0.0) -> float | None:
    """Width above which dephasing transiently enhances the diffusivity."""
    if kind == "gaussian":
        return 1.0 / math.sqrt(math.log(2.0))
    if kind == "standing":
        k = abs(wrap_phase(kp, "k"))
        arg = 2 * math.cos(2 * k)
        if k >= math.pi / 6 or arg <= 1.0:
            return None
        return 1.0 / math.sqrt(math.log(arg))
    if kind == "traveling":
        p = wrap_phase(kp, "p")
        f = lambda w: traveling_enhancement_coefficient(w, p)  # noqa: E731
        lo, hi = 0.1, 10.0
        if f(lo) * f(hi) > 0:
            raise NoRootError(f"no sign change of the enhancement coefficient on [{lo}, {hi}] for p={p}")
        return optimize.bisect(f, lo, hi, xtol=1e-10, rtol=4 * np.finfo(float).eps)
    raise InvalidParameter(f"unknown kind {kind!r}")


def _golden_max(f, a, b, tol):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def peak_time(kind: str, J: float, w: float, kp: float, Gamma: float) -> float | None:
    """Time of the transient diffusivity maximum, or None when D(t) rises monotonically."""
    if not Gamma > 0:
        raise InvalidParameter("peak time needs Gamma > 0")
    if kind == "standing":
        coh = standing_coherence_factor(w, wrap_phase(kp, "k"), exact=False)
        if coh >= 0:
            return None
        return (1.0 - 1.0 / coh) / Gamma
    if kind == "traveling":
        p = wrap_phase(kp, "p")
        if abs(p) <= K_C:
            return None
        t_max = 20.0 / Gamma
        tol = 1e-6 / Gamma
        t_p = _golden_max(lambda t: d_traveling(t, J, w, p, Gamma), 0.0, t_max, tol)
        if t_p > t_max - 10 * tol:
            return None
        return t_p
    raise InvalidParameter(f"peak time defined for standing/traveling, got {kind!r}")


def _lattice_bloch_weight(nu, w):
    """|c_nu|^2 of the lattice Gaussian: a 2 pi-periodized Gaussian, squared."""
    m = np.arange(-3, 4)
    return np.sum(np.exp(-0.5 * w**2 * (nu - 2 * np.pi * m) ** 2)) ** 2


def green_kubo_gaussian_rate(w: float, J: float, weight: str = "lattice") -> float:
    """dD/dt of the Gaussian from the Bloch-state average of v_g^2.

    ``weight='lattice'`` uses the exact Bloch coefficients of the discrete
    Gaussian; ``'continuum'`` uses exp(-w^2 nu^2) restricted to [-pi, pi].
    """
    if w < 1:
        raise InvalidParameter(f"Green-Kubo check requires w >= 1, got {w}")
    if weight == "lattice":
        dens = lambda nu: _lattice_bloch_weight(nu, w)  # noqa: E731
    elif weight == "continuum":
        dens = lambda nu: math.exp(-(w * nu) ** 2)  # noqa: E731
    else:
        raise InvalidParameter(f"unknown weight {weight!r}")
    # the weight is sharply peaked at 0, so split there for quad
    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=200, points=[0.0])
    num, num_err = integrate.quad(lambda nu: (2 * J * math.sin(nu)) ** 2 * dens(nu), -math.pi, math.pi, **opts)
    den, den_err = integrate.quad(dens, -math.pi, math.pi, **opts)
    if num_err > 1e-10 or den_err > 1e-10:
        raise QuadratureError(f"quadrature error estimates {num_err:.2g}, {den_err:.2g} exceed 1e-10")
    return num / den


def standing_traveling_relation_check(t, J: float, w: float, q: float, Gamma: float = 0.0):
    """Both sides of D_S = D_T + (1/2) d<n>^2/dt with the wide-packet standing form."""
    if Gamma != 0:
        raise InvalidParameter("relation is stated for the isolated chain")
    lhs = d_standing(t, J, w, q, 0.0, exact=False)
    n = com_traveling(t, J, w, q, 0.0)
    v = velocity_traveling(t, J, w, q, 0.0)
    rhs = d_traveling(t, J, w, q, 0.0) + n * v
    return lhs, rhs
