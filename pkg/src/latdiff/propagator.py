"""Numerical propagation of the chain, used as an oracle for the closed forms.

Two schemes are provided:

* ``bloch_closed`` -- exact propagation of a pure state by phase rotation of
  its discrete Bloch transform (no dephasing).
* ``rk4_dense`` -- classical fourth-order Runge-Kutta on the full N x N
  density matrix for ``drho/dt = -i[H, rho] - Gamma * offdiag(rho)``.

Both record the same observables: population moments, the coherences
``<rho>_l`` and their first moments ``<n>_l`` for l = 1..4, and the population
held in the outermost ``boundary_margin`` sites on each side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import InitialState, LatticeModel, build_amplitudes, site_indices
from .errors import BoundaryLeakError, ConfigError, StepSizeError

__all__ = [
    "PropagationConfig",
    "ObservableSeries",
    "required_sites",
    "auto_sites",
    "evolve_closed_bloch",
    "evolve_hsr_rk4",
    "evolve",
    "diffusivity_from_coherences",
    "population_snapshot",
]

SCHEMES = ("rk4_dense", "bloch_closed")
N_L = _kernels.N_L
TRACE_TOL = 1e-8
MAX_DT_FACTOR = 0.05


def required_sites(state: InitialState, J: float, t_end: float, margin: int) -> int:
    """Light-cone lower bound on the chain length: 2*ceil(2|J|t) + 6w + margin."""
    n = 2 * math.ceil(2 * abs(J) * t_end) + math.ceil(6 * state.w) + margin
    return n + 1 - n % 2


def auto_sites(state: InitialState, J: float, t_end: float, margin: int = 4) -> int:
    """A chain length that keeps edge populations far below 1e-8 up to ``t_end``.

    Beyond the ballistic front at 2|J|t the population decays over an Airy
    layer of width ~ (2|J|t)^(1/3); Gaussian envelopes need about 5.1 w of
    room for a 1e-12 tail.
    """
    front = 2 * abs(J) * t_end
    half = math.ceil(front + 4 * front ** (1 / 3) + 8 + 5.1 * state.w) + margin
    return max(2 * half + 1, required_sites(state, J, t_end, margin))


@dataclass(frozen=True)
class PropagationConfig:
    n_sites: int
    dt: float
    t_end: float
    record_stride: int = 1
    boundary_margin: int = 4
    boundary_mass_tol: float = 1e-8
    scheme: str = "rk4_dense"

    def __post_init__(self):
        if self.n_sites < 3 or self.n_sites % 2 == 0:
            raise ConfigError(f"n_sites must be odd and >= 3, got {self.n_sites}")
        if not (self.dt > 0 and self.t_end > 0):
            raise ConfigError("dt and t_end must be positive")
        if self.record_stride < 1 or self.boundary_margin < 1:
            raise ConfigError("record_stride and boundary_margin must be >= 1")
        if 2 * self.boundary_margin >= self.n_sites:
            raise ConfigError("boundary margin covers the whole chain")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @classmethod
    def sized(cls, state: InitialState, J: float, t_end: float, *, Gamma: float = 0.0,
              dt: float | None = None, record_every: float | None = None,
              scheme: str = "rk4_dense", boundary_margin: int = 4, **kw) -> PropagationConfig:
        """Config with an automatically sized chain and a default time step.

        ``record_every`` is a time interval; it is rounded to a whole number
        of steps.
        """
        if dt is None:
            dt = 1e-3 / max(abs(J), Gamma)
        n_steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
        dt = t_end / n_steps
        stride = 1 if record_every is None else max(1, int(round(record_every / dt)))
        return cls(n_sites=auto_sites(state, J, t_end, boundary_margin), dt=dt, t_end=t_end,
                   record_stride=stride, boundary_margin=boundary_margin, scheme=scheme, **kw)

    def validate_for(self, state: InitialState, J: float, Gamma: float = 0.0):
        limit = MAX_DT_FACTOR / max(abs(J), Gamma)
        if self.dt > limit * (1 + 1e-12):
            raise ConfigError(f"dt={self.dt} exceeds 0.05/max(|J|, Gamma) = {limit}")
        need = required_sites(state, J, self.t_end, self.boundary_margin)
        if self.n_sites < need:
            raise ConfigError(
                f"chain of {self.n_sites} sites is inside the light cone; need >= {need} "
                f"for t_end={self.t_end}, w={state.w}"
            )


@dataclass
class ObservableSeries:
    """Observables of one propagation sampled on the record grid."""

    times: np.ndarray
    mean_n: np.ndarray
    second_moment: np.ndarray
    variance: np.ndarray
    diffusivity_flux: np.ndarray
    diffusivity_fd: np.ndarray
    rho_l_series: np.ndarray  # (T, 4) complex, columns l = 1..4
    n_l_series: np.ndarray  # (T, 4) complex
    boundary_mass: np.ndarray
    trace: np.ndarray
    J: float
    Gamma: float
    state: InitialState
    scheme: str
    final_rho: np.ndarray | None = field(default=None, repr=False)

    def rho_l(self, l: int) -> np.ndarray:
        return self.rho_l_series[:, l - 1]

    def n_l(self, l: int) -> np.ndarray:
        return self.n_l_series[:, l - 1]

    @property
    def msd(self) -> np.ndarray:
        """Relative mean square displacement <n^2(t)> - <n^2(0)>."""
        return self.second_moment - self.second_moment[0]


def diffusivity_from_coherences(series: ObservableSeries, J: float | None = None) -> np.ndarray:
    """D(t) from the population-flux identities; no numerical differentiation.

    d<n>/dt = 2J Im<rho>_1 and d<n^2>/dt = 4J Im<n>_1 + 2J Im<rho>_1, so
    D = 2J Im<n>_1 + J Im<rho>_1 - 2J <n> Im<rho>_1.
    """
    if J is None:
        J = series.J
    flux = series.rho_l(1).imag
    return 2 * J * series.n_l(1).imag + J * flux - 2 * J * series.mean_n * flux


def _assemble(times, trace, mean, second, edge, rho_l, n_l, *, J, Gamma, state, cfg,
              final_rho=None) -> ObservableSeries:
    variance = second - mean**2
    if len(times) >= 3:
        fd = 0.5 * np.gradient(variance, times, edge_order=2)
    else:
        fd = np.full_like(variance, np.nan)
    series = ObservableSeries(
        times=times, mean_n=mean, second_moment=second, variance=variance,
        diffusivity_flux=np.zeros_like(mean), diffusivity_fd=fd,
        rho_l_series=rho_l, n_l_series=n_l, boundary_mass=edge, trace=trace,
        J=J, Gamma=Gamma, state=state, scheme=cfg.scheme,
        final_rho=final_rho,
    )
    series.diffusivity_flux = diffusivity_from_coherences(series, J)
    _check_series(series, cfg)
    return series


def _check_series(series: ObservableSeries, cfg: PropagationConfig):
    # trace first: a diverging integration also floods the edges, and nan must count as drift
    drift = np.abs(series.trace - 1.0)
    bad = np.nonzero(~(drift <= TRACE_TOL))[0]
    if bad.size:
        i = bad[0]
        raise StepSizeError(f"trace drifted by {drift[i]:.3g} at t={series.times[i]:.6g}; reduce dt")
    leak = np.nonzero(~(series.boundary_mass <= cfg.boundary_mass_tol))[0]
    if leak.size:
        i = leak[0]
        raise BoundaryLeakError(
            f"edge population {series.boundary_mass[i]:.3g} > {cfg.boundary_mass_tol:g} "
            f"at t={series.times[i]:.6g}; enlarge n_sites (now {cfg.n_sites})"
        )


def _psi_observables(psi: np.ndarray, n: np.ndarray, margin: int):
    """Observables for a batch of pure states ``psi`` of shape (T, N)."""
    pops = np.abs(psi) ** 2
    trace = pops.sum(axis=1)
    mean = pops @ n
    second = pops @ (n * n)
    edge = pops[:, :margin].sum(axis=1) + pops[:, -margin:].sum(axis=1)
    T, N = psi.shape
    rho_l = np.empty((T, N_L), dtype=complex)
    n_l = np.empty((T, N_L), dtype=complex)
    for l in range(1, N_L + 1):
        band = psi[:, : N - l] * psi[:, l:].conj()
        rho_l[:, l - 1] = band.sum(axis=1)
        n_l[:, l - 1] = band @ n[: N - l]
    return trace, mean, second, edge, rho_l, n_l


def _bloch_evolver(psi0: np.ndarray, J: float):
    N = psi0.size
    nu = 2 * np.pi * np.fft.fftfreq(N)
    energy = LatticeModel(J).dispersion(nu)
    coeff = np.fft.fft(psi0)

    def at(times):
        phases = np.exp(-1j * np.outer(times, energy))
        return np.fft.ifft(phases * coeff, axis=1)

    return at


def evolve_closed_bloch(state: InitialState, J: float, config: PropagationConfig) -> ObservableSeries:
    """Exact closed-system evolution, psi(t) = F^-1[exp(-i E_nu t) F psi]."""
    if config.scheme != "bloch_closed":
        raise ConfigError(f"evolve_closed_bloch needs scheme 'bloch_closed', got {config.scheme!r}")
    config.validate_for(state, J)
    psi0 = build_amplitudes(state, config.n_sites)
    n = site_indices(config.n_sites).astype(float)
    times = np.arange(0, config.n_steps + 1, config.record_stride) * config.dt
    at = _bloch_evolver(psi0, J)
    parts = []
    chunk = max(1, 2_000_000 // config.n_sites)
    for i in range(0, len(times), chunk):
        parts.append(_psi_observables(at(times[i:i + chunk]), n, config.boundary_margin))
    cols = [np.concatenate(c) for c in zip(*parts)]
    return _assemble(times, *cols, J=J, Gamma=0.0, state=state, cfg=config)


def _padded_rho0(state: InitialState, n_sites: int) -> np.ndarray:
    psi = build_amplitudes(state, n_sites)
    rho = np.zeros((n_sites + 2, n_sites + 2), dtype=complex)
    rho[1:-1, 1:-1] = np.outer(psi, psi.conj())
    return rho


def _run_rk4(state, J, Gamma, config, snap_steps=None):
    rho = _padded_rho0(state, config.n_sites)
    sites = site_indices(config.n_sites).astype(float)
    if snap_steps is None:
        snap_steps = np.zeros(0, dtype=np.int64)
    snaps = np.zeros((len(snap_steps), config.n_sites))
    obs = _kernels.rk4_run(rho, float(J), float(Gamma), float(config.dt), config.n_steps,
                                  config.record_stride, sites, config.boundary_margin,
                                  np.asarray(snap_steps, dtype=np.int64), snaps)
    _kernels.mirror_upper(rho)
    return rho[1:-1, 1:-1], obs, snaps


def evolve_hsr_rk4(state: InitialState, J: float, Gamma: float, config: PropagationConfig,
                   keep_final: bool = False) -> ObservableSeries:
    """Integrate the dephasing master equation on the full density matrix."""
    if config.scheme != "rk4_dense":
        raise ConfigError(f"evolve_hsr_rk4 needs scheme 'rk4_dense', got {config.scheme!r}")
    if Gamma < 0:
        raise ConfigError(f"dephasing rate must be >= 0, got {Gamma}")
    config.validate_for(state, J, Gamma)
    rho, obs, _ = _run_rk4(state, J, Gamma, config)
    times = np.arange(obs.shape[0]) * config.record_stride * config.dt
    return _assemble(
        times, obs[:, 0].real, obs[:, 1].real, obs[:, 2].real, obs[:, 3].real,
        obs[:, 4::2].copy(), obs[:, 5::2].copy(),
        J=J, Gamma=Gamma, state=state, cfg=config,
        final_rho=rho.copy() if keep_final else None,
    )


def evolve(state: InitialState, J: float, Gamma: float, config: PropagationConfig) -> ObservableSeries:
    """Dispatch on ``config.scheme``; the Bloch scheme only accepts Gamma = 0."""
    if config.scheme == "bloch_closed":
        if Gamma != 0:
            raise ConfigError("bloch_closed propagates the isolated chain only (Gamma = 0)")
        return evolve_closed_bloch(state, J, config)
    return evolve_hsr_rk4(state, J, Gamma, config)


def population_snapshot(state: InitialState, J: float, Gamma: float, t_list,
                        config: PropagationConfig) -> np.ndarray:
    """Site populations at each time in ``t_list``; rows follow ``t_list``."""
    t_list = np.asarray(t_list, dtype=float)
    if t_list.size and t_list.max() > config.t_end * (1 + 1e-12):
        raise ConfigError(f"snapshot time {t_list.max()} beyond t_end={config.t_end}")
    if config.scheme == "bloch_closed":
        if Gamma != 0:
            raise ConfigError("bloch_closed propagates the isolated chain only (Gamma = 0)")
        config.validate_for(state, J)
        psi = _bloch_evolver(build_amplitudes(state, config.n_sites), J)(t_list)
        pops = np.abs(psi) ** 2
    else:
        config.validate_for(state, J, Gamma)
        steps = np.rint(t_list / config.dt).astype(np.int64)
        if np.any(np.abs(steps * config.dt - t_list) > 1e-9 * max(1.0, config.t_end)):
            raise ConfigError("snapshot times must be multiples of dt")
        order = np.argsort(steps, kind="stable")
        _, _, snaps = _run_rk4(state, J, Gamma, config, steps[order])
        pops = np.empty_like(snaps)
        pops[order] = snaps
    m = config.boundary_margin
    edge = pops[:, :m].sum(axis=1) + pops[:, -m:].sum(axis=1)
    if np.any(edge > config.boundary_mass_tol):
        raise BoundaryLeakError(f"edge population {edge.max():.3g} exceeds {config.boundary_mass_tol:g}")
    return pops
