"""Lattice, initial states, density matrices and coherence moments.

Sites of a finite chain of odd length ``N`` carry physical indices
``n = -(N // 2), ..., N // 2`` so that the central site is ``n = 0``.
Lengths are in lattice constants and ``hbar = 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import InvalidParameter, TailTruncationError

__all__ = [
    "LatticeModel",
    "InitialState",
    "DensityMatrix",
    "CoherenceMoments",
    "site_indices",
    "wrap_phase",
    "tail_mass",
    "build_amplitudes",
    "build_rho0",
    "coherence_moment",
    "weighted_coherence_moment",
    "population_moments",
    "initial_moment_table",
]

TAIL_ERROR = 1e-9
TAIL_WARN = 1e-12
L_MAX = 4


@dataclass(frozen=True)
class LatticeModel:
    """Homogeneous chain with nearest-neighbour coupling ``J``."""

    coupling_J: float = 1.0
    lattice_constant: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not np.isfinite(self.coupling_J) or self.coupling_J == 0:
            raise InvalidParameter(f"coupling J must be finite and nonzero, got {self.coupling_J}")

    def hamiltonian(self, n_sites: int) -> np.ndarray:
        """Dense tridiagonal Hamiltonian with open boundaries."""
        off = np.full(n_sites - 1, self.coupling_J)
        return np.diag(off, 1) + np.diag(off, -1)

    def dispersion(self, nu):
        return 2.0 * self.coupling_J * np.cos(nu)

    def group_velocity(self, nu):
        return -2.0 * self.coupling_J * np.sin(nu)


def wrap_phase(x: float, name: str = "k") -> float:
    """Reduce a wave number into [-pi/2, pi/2]; results repeat with period pi."""
    half = math.pi / 2
    if abs(x) <= half * (1 + 1e-14):
        return float(x)
    y = (x + half) % math.pi - half
    warnings.warn(f"{name}={float(x):.17g} outside [-pi/2, pi/2]; reduced to {float(y):.17g}", stacklevel=3)
    return y


_KINDS = ("delta", "gaussian", "standing", "traveling")


@dataclass(frozen=True)
class InitialState:
    """Pure initial state of one of four families.

    Use the constructors :meth:`delta`, :meth:`gaussian`, :meth:`standing`
    and :meth:`traveling` rather than the raw initializer.
    """

    kind: str
    width: float | None = None
    k: float = 0.0
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameter(f"unknown state kind {self.kind!r}")
        if self.kind == "delta":
            if self.width is not None:
                raise InvalidParameter("delta state takes no width")
            return
        if self.width is None or not self.width > 0 or not np.isfinite(self.width):
            raise InvalidParameter(f"width must be > 0, got {self.width}")
        if self.kind != "standing" and self.k != 0.0:
            raise InvalidParameter("wave number k only applies to standing states")
        if self.kind != "traveling" and self.p != 0.0:
            raise InvalidParameter("momentum p only applies to traveling states")
        object.__setattr__(self, "k", wrap_phase(self.k, "k"))
        object.__setattr__(self, "p", wrap_phase(self.p, "p"))

    @classmethod
    def delta(cls) -> InitialState:
        return cls("delta")

    @classmethod
    def gaussian(cls, w: float) -> InitialState:
        return cls("gaussian", w)

    @classmethod
    def standing(cls, w: float, k: float) -> InitialState:
        return cls("standing", w, k=k)

    @classmethod
    def traveling(cls, w: float, p: float) -> InitialState:
        return cls("traveling", w, p=p)

    @property
    def w(self) -> float:
        return 0.0 if self.width is None else self.width

    @property
    def is_real(self) -> bool:
        return self.kind != "traveling" or self.p == 0.0

    @property
    def has_stationary_cm(self) -> bool:
        return self.is_real

    def label(self) -> str:
        if self.kind == "delta":
            return "delta"
        if self.kind == "gaussian":
            return f"gaussian(w={self.width:g})"
        if self.kind == "standing":
            return f"standing(w={self.width:g},k={self.k:.6g})"
        return f"traveling(w={self.width:g},p={self.p:.6g})"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "w": self.width, "k": self.k, "p": self.p}

    @classmethod
    def from_dict(cls, d: dict) -> InitialState:
        kind = d["kind"]
        if kind == "delta":
            return cls.delta()
        if kind == "gaussian":
            return cls.gaussian(d["w"])
        if kind == "standing":
            return cls.standing(d["w"], d.get("k", 0.0))
        if kind == "traveling":
            return cls.traveling(d["w"], d.get("p", 0.0))
        raise InvalidParameter(f"unknown state kind {kind!r}")


def site_indices(n_sites: int) -> np.ndarray:
    """Physical lattice indices of a centred chain."""
    return np.arange(n_sites) - n_sites // 2


def tail_mass(width: float, n_max: int) -> float:
    """Continuum population of a width-``w`` Gaussian beyond ``|n| > n_max``."""
    return float(erfc(n_max / width))


def _check_sites(n_sites: int):
    if n_sites < 3 or n_sites % 2 == 0:
        raise InvalidParameter(f"n_sites must be odd and >= 3, got {n_sites}")


def build_amplitudes(state: InitialState, n_sites: int) -> np.ndarray:
    """Site amplitudes of ``state`` on a centred chain, renormalized to unit norm."""
    _check_sites(n_sites)
    n = site_indices(n_sites)
    psi = np.zeros(n_sites, dtype=complex)
    if state.kind == "delta":
        psi[n_sites // 2] = 1.0
        return psi

    w = state.width
    tail = tail_mass(w, n_sites // 2)
    if tail > TAIL_ERROR:
        raise TailTruncationError(
            f"chain of {n_sites} sites truncates {tail:.3g} of a w={w} packet; "
            f"need n_max/w >= {math.sqrt(-math.log(TAIL_ERROR)):.2f}"
        )
    if tail > TAIL_WARN:
        warnings.warn(f"truncated tail mass {tail:.3g} exceeds {TAIL_WARN:g}", stacklevel=2)

    envelope = np.exp(-(n**2) / (2.0 * w**2))
    # k = 0 and p = 0 share the Gaussian path so the vectors agree bitwise
    if state.kind == "gaussian" or (state.k == 0.0 and state.p == 0.0):
        psi[:] = envelope / math.sqrt(w * math.sqrt(math.pi))
    elif state.kind == "standing":
        k = state.k
        norm = math.sqrt(2.0) / math.sqrt(w * math.sqrt(math.pi) * (1.0 + math.exp(-(k * w) ** 2)))
        psi[:] = norm * np.cos(k * n) * envelope
    else:
        psi[:] = envelope * np.exp(1j * state.p * n) / math.sqrt(w * math.sqrt(math.pi))
    psi /= np.linalg.norm(psi)
    return psi


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace density matrix on a centred odd chain."""

    entries: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidParameter(f"density matrix must be square, got shape {a.shape}")
        _check_sites(a.shape[0])
        if self.check:
            herm = np.max(np.abs(a - a.conj().T))
            if herm > 1e-12:
                raise InvalidParameter(f"density matrix not Hermitian (drift {herm:.3g})")
            tr = np.trace(a).real
            if abs(tr - 1.0) > 1e-10:
                raise InvalidParameter(f"trace {tr!r} differs from 1")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n_sites(self) -> int:
        return self.entries.shape[0]

    @property
    def site_offset(self) -> int:
        return -(self.n_sites // 2)

    @property
    def sites(self) -> np.ndarray:
        return site_indices(self.n_sites)

    @property
    def populations(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    @classmethod
    def from_pure(cls, psi: np.ndarray) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class CoherenceMoments:
    """Spatial coherences ``sum_n rho[n, n+l]`` and their first moments."""

    rho_l: np.ndarray
    n_l: np.ndarray

    @property
    def l_max(self) -> int:
        return len(self.rho_l) - 1


def build_rho0(state: InitialState, n_sites: int) -> DensityMatrix:
    return DensityMatrix.from_pure(build_amplitudes(state, n_sites))


def coherence_moment(rho: DensityMatrix, l: int) -> complex:
    if not 0 <= l < rho.n_sites:
        raise InvalidParameter(f"l must lie in [0, {rho.n_sites}), got {l}")
    return complex(np.trace(rho.entries, offset=l))


def weighted_coherence_moment(rho: DensityMatrix, l: int) -> complex:
    if not 0 <= l < rho.n_sites:
        raise InvalidParameter(f"l must lie in [0, {rho.n_sites}), got {l}")
    band = np.diagonal(rho.entries, offset=l)
    return complex(np.dot(rho.sites[: rho.n_sites - l], band))


def population_moments(rho: DensityMatrix) -> tuple[float, float, float]:
    """Mean, second moment and variance of the site populations."""
    pops = rho.entries.diagonal().real
    n = rho.sites.astype(float)
    mean = float(np.dot(n, pops))
    second = float(np.dot(n * n, pops))
    return mean, second, second - mean * mean


def moments_from_rho(rho: DensityMatrix, l_max: int = L_MAX) -> CoherenceMoments:
    ls = range(l_max + 1)
    return CoherenceMoments(
        np.array([coherence_moment(rho, l) for l in ls]),
        np.array([weighted_coherence_moment(rho, l) for l in ls]),
    )


def initial_moment_table(state: InitialState, l_max: int = L_MAX) -> CoherenceMoments:
    """Continuum-integral values of the t = 0 coherences and their moments.

    Sums over sites are replaced by integrals, so the result differs from a
    direct lattice sum by aliasing terms of order ``exp(-w**2 (pi - |k|)**2)``.
    For every family the packet envelope is symmetric about ``n = -l/2``
    which gives ``n_l = -(l/2) rho_l``.
    """
    ls = np.arange(l_max + 1)
    if state.kind == "delta":
        rho = np.zeros(l_max + 1, dtype=complex)
        rho[0] = 1.0
        return CoherenceMoments(rho, np.zeros(l_max + 1, dtype=complex))

    w = state.width
    overlap = np.exp(-(ls**2) / (4.0 * w**2))
    if state.kind == "gaussian":
        rho = overlap.astype(complex)
    elif state.kind == "standing":
        k = state.k
        # written with exp(-k^2 w^2) so that large k*w cannot overflow
        damp = math.exp(-(k * w) ** 2)
        rho = (overlap * (np.cos(k * ls) + damp) / (1.0 + damp)).astype(complex)
    else:
        rho = overlap * np.exp(-1j * state.p * ls)
    return CoherenceMoments(rho, -0.5 * ls * rho)
