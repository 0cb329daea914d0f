"""Transient diffusivity and diffusion length of wave packets on a dephasing tight-binding chain."""

from .core import (
    CoherenceMoments,
    DensityMatrix,
    InitialState,
    LatticeModel,
    build_amplitudes,
    build_rho0,
    coherence_moment,
    initial_moment_table,
    population_moments,
    weighted_coherence_moment,
)
from .errors import (
    BoundaryLeakError,
    ConfigError,
    InvalidParameter,
    LatDiffError,
    NoRootError,
    NoSignChangeError,
    QuadratureError,
    StepSizeError,
    TailBoundError,
    TailTruncationError,
)
from .propagator import (
    ObservableSeries,
    PropagationConfig,
    diffusivity_from_coherences,
    evolve,
    evolve_closed_bloch,
    evolve_hsr_rk4,
    population_snapshot,
)

__version__ = "0.1.0"
