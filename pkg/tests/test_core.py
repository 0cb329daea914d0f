import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latdiff import (
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
from latdiff.core import moments_from_rho, site_indices, tail_mass
from latdiff.errors import InvalidParameter, TailTruncationError

HALF_PI = math.pi / 2


def chain_for(w):
    """Odd chain whose Gaussian tail is far below the warning level."""
    half = math.ceil(6.5 * w) + 2
    return 2 * half + 1


# --- lattice -----------------------------------------------------------------

def test_lattice_rejects_zero_coupling():
    with pytest.raises(InvalidParameter):
        LatticeModel(0.0)


def test_hamiltonian_is_nearest_neighbour():
    h = LatticeModel(-0.7).hamiltonian(5)
    expected = np.zeros((5, 5))
    for i in range(4):
        expected[i, i + 1] = expected[i + 1, i] = -0.7
    np.testing.assert_array_equal(h, expected)


def test_group_velocity_is_derivative_of_dispersion():
    m = LatticeModel(1.3)
    nu = np.linspace(-3, 3, 13)
    h = 1e-6
    fd = (m.dispersion(nu + h) - m.dispersion(nu - h)) / (2 * h)
    np.testing.assert_allclose(m.group_velocity(nu), fd, atol=1e-8)


# --- states and amplitudes ---------------------------------------------------

def test_delta_amplitudes():
    np.testing.assert_array_equal(build_amplitudes(InitialState.delta(), 5), [0, 0, 1, 0, 0])


def test_gaussian_neighbour_ratio():
    psi = build_amplitudes(InitialState.gaussian(1.0), 41).real
    c = 20
    assert psi[c] / psi[c + 1] == pytest.approx(math.exp(0.5), rel=1e-14)


def test_standing_prefactor_and_norm():
    w, k, n_sites = 10.0, HALF_PI, 129
    psi = build_amplitudes(InitialState.standing(w, k), n_sites)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    n = site_indices(n_sites)
    raw = math.sqrt(2) * np.cos(k * n) * np.exp(-n**2 / (2 * w**2))
    raw /= math.sqrt(w * math.sqrt(math.pi) * (1 + math.exp(-(k * w) ** 2)))
    # continuum prefactor is already normalized on the lattice to ~1e-10
    assert abs(np.sum(raw**2) - 1) < 1e-10
    np.testing.assert_allclose(psi.real, raw / np.linalg.norm(raw), atol=1e-15)


def test_even_chain_rejected():
    with pytest.raises(InvalidParameter):
        build_amplitudes(InitialState.delta(), 4)


def test_width_must_be_positive():
    with pytest.raises(InvalidParameter):
        InitialState.gaussian(0.0)
    with pytest.raises(InvalidParameter):
        InitialState.gaussian(-1.0)


def test_tail_truncation_error_and_warning():
    with pytest.raises(TailTruncationError):
        build_amplitudes(InitialState.gaussian(10.0), 41)
    # n_max / w = 4.7 gives a tail mass between 1e-12 and 1e-9
    assert 1e-12 < tail_mass(10.0, 47) < 1e-9
    with pytest.warns(UserWarning, match="tail"):
        build_amplitudes(InitialState.gaussian(10.0), 95)


def test_wave_numbers_outside_range_are_wrapped():
    with pytest.warns(UserWarning):
        s = InitialState.standing(5.0, math.pi / 2 + 0.3)
    assert s.k == pytest.approx(-math.pi / 2 + 0.3)


def test_state_roundtrip():
    for s in (InitialState.delta(), InitialState.gaussian(2.0),
              InitialState.standing(3.0, 0.4), InitialState.traveling(4.0, -0.5)):
        assert InitialState.from_dict(s.to_dict()) == s


def test_standing_k0_equals_gaussian():
    a = build_amplitudes(InitialState.standing(4.0, 0.0), 61)
    b = build_amplitudes(InitialState.gaussian(4.0), 61)
    np.testing.assert_array_equal(a, b)


# --- density matrices --------------------------------------------------------

def test_rho0_delta_n3():
    rho = build_rho0(InitialState.delta(), 3).entries
    np.testing.assert_array_equal(rho, np.diag([0, 1, 0]))


def test_rho0_is_outer_product_and_frozen():
    psi = build_amplitudes(InitialState.traveling(2.0, math.pi / 4), 41)
    rho = build_rho0(InitialState.traveling(2.0, math.pi / 4), 41)
    np.testing.assert_array_equal(rho.entries, np.outer(psi, psi.conj()))
    with pytest.raises(ValueError):
        rho.entries[0, 0] = 1.0


def test_gaussian_rho_positive_next_nearest():
    rho = build_rho0(InitialState.gaussian(1.0), 41)
    c = 20
    assert rho.entries[c, c + 2].real > 0 and rho.entries[c, c + 2].imag == 0


def test_traveling_coherence_phase():
    p = math.pi / 4
    rho = build_rho0(InitialState.traveling(2.0, p), 41).entries
    arg = np.angle(np.diagonal(rho, 1)[15:25])
    np.testing.assert_allclose(arg, -p, atol=1e-12)


def test_density_matrix_checks():
    with pytest.raises(InvalidParameter):
        DensityMatrix(np.array([[0.5, 0.1], [0.1, 0.5]]))  # even size
    bad = np.diag([0.2, 0.2, 0.2]).astype(complex)
    with pytest.raises(InvalidParameter):
        DensityMatrix(bad)
    nonherm = np.diag([0.0, 1.0, 0.0]).astype(complex)
    nonherm[0, 1] = 0.1j
    with pytest.raises(InvalidParameter):
        DensityMatrix(nonherm)


# --- moments -----------------------------------------------------------------

def test_trace_moment():
    rho = build_rho0(InitialState.standing(3.0, 0.7), chain_for(3.0))
    assert coherence_moment(rho, 0) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_second_coherence():
    rho = build_rho0(InitialState.gaussian(10.0), chain_for(10.0))
    assert coherence_moment(rho, 2) == pytest.approx(math.exp(-0.01), abs=1e-13)


def test_standing_kc_second_coherence_vanishes():
    rho = build_rho0(InitialState.standing(10.0, math.pi / 4), chain_for(10.0))
    assert abs(coherence_moment(rho, 2)) < 1e-12


def test_delta_weighted_moments_vanish():
    rho = build_rho0(InitialState.delta(), 9)
    for l in range(5):
        assert weighted_coherence_moment(rho, l) == 0


def test_symmetric_gaussian_weighted_zero():
    rho = build_rho0(InitialState.gaussian(5.0), chain_for(5.0))
    assert abs(weighted_coherence_moment(rho, 0)) < 1e-12


def test_gaussian_flux_zero_at_start():
    rho = build_rho0(InitialState.gaussian(10.0), chain_for(10.0))
    assert abs(weighted_coherence_moment(rho, 1).imag) < 1e-14


def test_moment_index_range():
    rho = build_rho0(InitialState.delta(), 5)
    with pytest.raises(InvalidParameter):
        coherence_moment(rho, 5)
    with pytest.raises(InvalidParameter):
        weighted_coherence_moment(rho, -1)


def test_population_moments():
    assert population_moments(build_rho0(InitialState.delta(), 7)) == (0.0, 0.0, 0.0)
    mean, second, var = population_moments(build_rho0(InitialState.gaussian(10.0), chain_for(10.0)))
    assert var == pytest.approx(50.0, rel=1e-3)
    mean, _, _ = population_moments(build_rho0(InitialState.traveling(10.0, HALF_PI), chain_for(10.0)))
    assert abs(mean) < 1e-12


def test_moment_table_examples():
    g = initial_moment_table(InitialState.gaussian(10.0))
    assert g.rho_l[2] == pytest.approx(math.exp(-0.01), rel=1e-15)
    t = initial_moment_table(InitialState.traveling(10.0, HALF_PI))
    assert t.rho_l[1].imag == pytest.approx(-math.exp(-1 / 400), rel=1e-14)
    assert t.rho_l[1].imag == pytest.approx(-0.9975, abs=5e-5)
    s = initial_moment_table(InitialState.standing(10.0, 0.0))
    np.testing.assert_array_equal(s.rho_l, g.rho_l)
    np.testing.assert_array_equal(s.n_l, g.n_l)
    d = initial_moment_table(InitialState.delta())
    assert d.rho_l[0] == 1 and np.all(d.rho_l[1:] == 0) and np.all(d.n_l == 0)


# --- properties --------------------------------------------------------------

widths = st.floats(min_value=1.0, max_value=12.0)
phases = st.floats(min_value=-HALF_PI, max_value=HALF_PI)


def _state(kind, w, q):
    if kind == "gaussian":
        return InitialState.gaussian(w)
    if kind == "standing":
        return InitialState.standing(w, q)
    return InitialState.traveling(w, q)


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(["gaussian", "standing", "traveling"]), w=widths, q=phases)
def test_trace_and_parity(kind, w, q):
    rho = build_rho0(_state(kind, w, q), chain_for(w))
    pops = rho.populations
    assert abs(pops.sum() - 1) < 1e-10
    np.testing.assert_allclose(pops, pops[::-1], atol=1e-15)
    assert abs(population_moments(rho)[0]) < 1e-12


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(["gaussian", "standing", "traveling"]), w=st.floats(3.0, 12.0), q=phases)
def test_moment_table_matches_summation(kind, w, q):
    # lattice sums differ from the continuum integrals by aliasing terms
    # ~exp(-w^2 (pi - |k|)^2), which stay below 1e-8 from w = 3 onwards
    state = _state(kind, w, q)
    direct = moments_from_rho(build_rho0(state, chain_for(w)))
    table = initial_moment_table(state)
    np.testing.assert_allclose(direct.rho_l, table.rho_l, atol=1e-8)
    np.testing.assert_allclose(direct.n_l, table.n_l, atol=1e-8 * w)


@settings(max_examples=25, deadline=None)
@given(kind=st.sampled_from(["gaussian", "standing", "traveling"]), w=widths)
def test_real_states_have_no_initial_flux(kind, w):
    state = _state(kind, w, 0.3) if kind == "standing" else _state(kind, w, 0.0)
    m = moments_from_rho(build_rho0(state, chain_for(w)))
    assert abs(m.rho_l[1].imag) < 1e-14


@settings(max_examples=25, deadline=None)
@given(kind=st.sampled_from(["standing", "traveling"]), w=st.floats(1.0, 8.0), q=st.floats(-1.5, 1.5))
def test_period_pi(kind, w, q):
    n_sites = chain_for(w)
    a = build_rho0(_state(kind, w, q), n_sites)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = build_rho0(_state(kind, w, q + math.pi), n_sites)
    np.testing.assert_allclose(a.populations, b.populations, atol=1e-12)
    assert abs(coherence_moment(a, 2)) == pytest.approx(abs(coherence_moment(b, 2)), abs=1e-12)
