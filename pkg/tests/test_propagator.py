import math

import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, settings
from hypothesis import strategies as st

import latdiff.propagator as prop
from latdiff import InitialState, LatticeModel, PropagationConfig, build_amplitudes, build_rho0
from latdiff.core import site_indices
from latdiff.errors import BoundaryLeakError, ConfigError, StepSizeError
from latdiff.propagator import (
    auto_sites,
    diffusivity_from_coherences,
    evolve,
    evolve_closed_bloch,
    evolve_hsr_rk4,
    population_snapshot,
    required_sites,
)

E01 = math.exp(-0.01)


def liouvillian(n_sites, J, gamma):
    """Dense superoperator of -i[H, rho] - gamma * offdiag(rho), row-major vec."""
    h = LatticeModel(J).hamiltonian(n_sites)
    eye = np.eye(n_sites)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    lv -= gamma * np.diag((1 - eye).reshape(-1))
    return lv


def unchecked(monkeypatch):
    """Allow chains smaller than the light-cone bound (small exact oracles)."""
    monkeypatch.setattr(PropagationConfig, "validate_for", lambda *a, **k: None)


# --- oracle: exact exponentials ------------------------------------------------

@pytest.mark.parametrize("state", [InitialState.traveling(2.0, 0.7), InitialState.standing(2.0, 1.1),
                                   InitialState.delta()])
@pytest.mark.parametrize("gamma", [0.0, 0.3, 2.0])
def test_rk4_matches_liouvillian_exponential(monkeypatch, state, gamma):
    unchecked(monkeypatch)
    n, J, t = 25, -0.8, 1.5
    cfg = PropagationConfig(n_sites=n, dt=0.005, t_end=t, boundary_mass_tol=1.0)
    series = evolve_hsr_rk4(state, J, gamma, cfg, keep_final=True)
    rho0 = build_rho0(state, n).entries
    exact = (sl.expm(liouvillian(n, J, gamma) * t) @ rho0.reshape(-1)).reshape(n, n)
    assert np.max(np.abs(series.final_rho - exact)) < 1e-9
    np.testing.assert_allclose(series.final_rho, series.final_rho.conj().T, atol=0)


def test_bloch_matches_unitary_exponential(monkeypatch):
    unchecked(monkeypatch)
    n, J, t = 61, 1.3, 3.0
    state = InitialState.traveling(4.0, 1.0)
    # large enough chain that the periodic wrap is invisible
    cfg = PropagationConfig(n_sites=n, dt=0.5, t_end=t, scheme="bloch_closed", boundary_mass_tol=1.0)
    series = evolve_closed_bloch(state, J, cfg)
    psi = sl.expm(-1j * LatticeModel(J).hamiltonian(n) * t) @ build_amplitudes(state, n)
    sites = site_indices(n)
    pops = np.abs(psi) ** 2
    assert series.mean_n[-1] == pytest.approx(np.dot(sites, pops), abs=1e-10)
    assert series.second_moment[-1] == pytest.approx(np.dot(sites**2, pops), abs=1e-9)


# --- closed-system examples -----------------------------------------------------

def bloch_config(state, J, t_end, dt=0.01):
    return PropagationConfig.sized(state, J, t_end, dt=dt, scheme="bloch_closed")


def test_bloch_delta_variance():
    s = evolve_closed_bloch(InitialState.delta(), 1.0, bloch_config(InitialState.delta(), 1.0, 1.0))
    assert s.variance[-1] == pytest.approx(2.0, rel=1e-12)
    assert abs(s.trace - 1).max() < 1e-12


def test_bloch_gaussian_variance_growth():
    st_ = InitialState.gaussian(10.0)
    s = evolve_closed_bloch(st_, 1.0, bloch_config(st_, 1.0, 10.0, dt=0.05))
    growth = s.variance[-1] - s.variance[0]
    assert growth == pytest.approx(2 * (1 - E01) * 100, rel=1e-8)


def test_bloch_traveling_centre_negative_coupling():
    st_ = InitialState.traveling(10.0, math.pi / 2)
    s = evolve_closed_bloch(st_, -1.0, bloch_config(st_, -1.0, 10.0, dt=0.05))
    assert s.mean_n[-1] == pytest.approx(2 * math.exp(-1 / 400) * 10, rel=1e-3)


def test_rk4_at_zero_gamma_matches_bloch():
    st_ = InitialState.traveling(3.0, 1.0)
    J, t = 1.0, 4.0
    cfg = PropagationConfig.sized(st_, J, t, dt=0.005, record_every=0.05)
    a = evolve(st_, J, 0.0, cfg)
    b = evolve(st_, J, 0.0, PropagationConfig(cfg.n_sites, cfg.dt, t, cfg.record_stride, scheme="bloch_closed"))
    for name in ("mean_n", "second_moment", "variance", "diffusivity_flux", "rho_l_series", "n_l_series"):
        np.testing.assert_allclose(getattr(a, name), getattr(b, name), atol=1e-8, err_msg=name)


def test_closed_system_conserves_coherences():
    st_ = InitialState.standing(3.0, 0.9)
    cfg = PropagationConfig.sized(st_, 1.0, 3.0, dt=0.01, record_every=0.1)
    s = evolve(st_, 1.0, 0.0, cfg)
    assert np.max(np.abs(s.rho_l_series - s.rho_l_series[0])) < 1e-9


# --- dephasing examples -----------------------------------------------------------

def test_delta_noisy_diffusivity():
    st_ = InitialState.delta()
    cfg = PropagationConfig.sized(st_, 1.0, 10.0, Gamma=1.0, dt=0.01, record_every=0.1)
    s = evolve(st_, 1.0, 1.0, cfg)
    ref = 2 * (1 - np.exp(-s.times))
    np.testing.assert_allclose(s.diffusivity_flux[1:], ref[1:], rtol=1e-4)
    assert s.diffusivity_flux[0] == 0


def test_gaussian_coherence_decay():
    st_ = InitialState.gaussian(10.0)
    cfg = PropagationConfig.sized(st_, 1.0, 5.0, Gamma=1.0, dt=0.01, record_every=0.1)
    s = evolve(st_, 1.0, 1.0, cfg)
    np.testing.assert_allclose(s.rho_l(2), E01 * np.exp(-s.times), atol=1e-6)


def test_flux_matches_finite_difference():
    st_ = InitialState.traveling(3.0, 0.6)
    cfg = PropagationConfig.sized(st_, 1.0, 2.0, Gamma=0.5, dt=1e-3)
    s = evolve(st_, 1.0, 0.5, cfg)
    assert np.max(np.abs(s.diffusivity_flux - s.diffusivity_fd)) < 1e-6


def test_stationary_states_reduce_to_single_flux_term():
    st_ = InitialState.standing(3.0, 0.4)
    cfg = PropagationConfig.sized(st_, 1.0, 2.0, Gamma=1.0, dt=0.01, record_every=0.1)
    s = evolve(st_, 1.0, 1.0, cfg)
    np.testing.assert_allclose(s.diffusivity_flux, 2 * s.n_l(1).imag, atol=1e-12)
    np.testing.assert_allclose(diffusivity_from_coherences(s), s.diffusivity_flux)


def test_positivity_small_chain(monkeypatch):
    unchecked(monkeypatch)
    cfg = PropagationConfig(n_sites=41, dt=0.01, t_end=3.0, boundary_mass_tol=1.0)
    s = evolve_hsr_rk4(InitialState.traveling(2.0, 1.2), 1.0, 0.7, cfg, keep_final=True)
    assert np.linalg.eigvalsh(s.final_rho).min() >= -1e-8


# --- snapshots ------------------------------------------------------------------

def test_wide_gaussian_barely_changes():
    st_ = InitialState.gaussian(10.0)
    cfg = bloch_config(st_, 1.0, 10.0)
    pops = population_snapshot(st_, 1.0, 0.0, [0.0, 10.0], cfg)
    change = np.max(np.abs(pops[1] - pops[0]))
    # the variance grows from 50 by 2(1 - e^{-0.01}) * 100; the profile stays
    # Gaussian, so the largest change is the drop of its peak
    var0, var1 = 50.0, 50.0 + 200 * (1 - E01)
    expected = (1 - math.sqrt(var0 / var1)) / math.sqrt(2 * math.pi * var0)
    assert change == pytest.approx(expected, rel=0.02)
    assert change < 0.02 * pops[0].max()


def test_standing_lobes_move_at_group_speed():
    st_ = InitialState.standing(10.0, math.pi / 2)
    cfg = bloch_config(st_, 1.0, 10.0)
    pops = population_snapshot(st_, 1.0, 0.0, [10.0], cfg)[0]
    smooth = np.convolve(pops, [0.25, 0.5, 0.25], "same")
    n = site_indices(cfg.n_sites)
    right = n[np.argmax(np.where(n > 0, smooth, 0))]
    left = n[np.argmax(np.where(n < 0, smooth, 0))]
    assert abs(right - 20) <= 1 and abs(left + 20) <= 1


@pytest.mark.parametrize("k", [0.4, math.pi / 4, 1.2, math.pi / 2])
def test_dephasing_washes_out_fringes(k):
    st_ = InitialState.standing(10.0, k)
    cfg = PropagationConfig.sized(st_, 1.0, 5.0, Gamma=1.0, dt=0.01)
    pops = population_snapshot(st_, 1.0, 1.0, [5.0], cfg)[0]
    contrast = np.max(np.abs(pops[1:-1] - 0.5 * (pops[:-2] + pops[2:]))) / pops.max()
    assert contrast < 0.05


def test_snapshot_order_follows_request():
    st_ = InitialState.standing(2.0, 1.0)
    cfg = PropagationConfig.sized(st_, 1.0, 2.0, Gamma=0.5, dt=0.01)
    a = population_snapshot(st_, 1.0, 0.5, [2.0, 0.0, 1.0], cfg)
    b = population_snapshot(st_, 1.0, 0.5, [0.0, 1.0, 2.0], cfg)
    np.testing.assert_array_equal(a, b[[2, 0, 1]])


# --- configuration and failure modes ------------------------------------------------

def test_light_cone_bound():
    st_ = InitialState.gaussian(10.0)
    need = required_sites(st_, 1.0, 8.0, 4)
    assert need % 2 == 1 and need >= 2 * 16 + 60 + 4
    assert auto_sites(st_, 1.0, 8.0) >= need
    cfg = PropagationConfig(n_sites=need - 2, dt=0.01, t_end=8.0)
    with pytest.raises(ConfigError):
        evolve(st_, 1.0, 0.5, cfg)


def test_time_step_limit():
    st_ = InitialState.delta()
    cfg = PropagationConfig.sized(st_, 1.0, 1.0, dt=0.05)
    evolve(st_, 1.0, 1.0, cfg)  # exactly at the limit
    cfg = PropagationConfig.sized(st_, 1.0, 1.0, dt=0.04)
    with pytest.raises(ConfigError):
        evolve(st_, 1.0, 2.0, cfg)  # limit is 0.025 for Gamma = 2


def test_config_validation():
    with pytest.raises(ConfigError):
        PropagationConfig(n_sites=10, dt=0.01, t_end=1.0)
    with pytest.raises(ConfigError):
        PropagationConfig(n_sites=11, dt=0.03, t_end=1.0)
    with pytest.raises(ConfigError):
        PropagationConfig(n_sites=11, dt=0.01, t_end=1.0, scheme="euler")
    with pytest.raises(ConfigError):
        evolve(InitialState.delta(), 1.0, 0.5,
               PropagationConfig(n_sites=21, dt=0.01, t_end=1.0, scheme="bloch_closed"))


def test_boundary_leak_is_an_error():
    st_ = InitialState.delta()
    cfg = PropagationConfig.sized(st_, 1.0, 8.0, Gamma=0.5, dt=0.01, boundary_mass_tol=1e-300)
    with pytest.raises(BoundaryLeakError):
        evolve(st_, 1.0, 0.5, cfg)


def test_diverging_integration_is_a_step_error(monkeypatch):
    monkeypatch.setattr(prop, "MAX_DT_FACTOR", 100.0)
    cfg = PropagationConfig(n_sites=301, dt=1.0, t_end=50.0)
    with np.errstate(all="ignore"), pytest.raises(StepSizeError):
        evolve(InitialState.delta(), 1.0, 0.0, cfg)


# --- properties -------------------------------------------------------------------

states = st.sampled_from([
    InitialState.delta(), InitialState.gaussian(1.5), InitialState.gaussian(3.0),
    InitialState.standing(3.0, 0.5), InitialState.standing(2.0, 1.4),
    InitialState.traveling(2.0, 0.8), InitialState.traveling(3.0, -1.2),
])


@settings(max_examples=15, deadline=None)
@given(state=states, gamma=st.floats(0.0, 3.0), J=st.sampled_from([1.0, -0.5, 2.0]))
def test_coherence_decay_law_and_trace(state, gamma, J):
    t_end = 2.0 / abs(J)
    scale = max(abs(J), gamma)
    cfg = PropagationConfig.sized(state, J, t_end, Gamma=gamma, dt=0.01 / scale, record_every=0.1 / scale)
    s = evolve(state, J, gamma, cfg)
    decay = np.exp(-gamma * s.times)[:, None]
    assert np.max(np.abs(s.rho_l_series - s.rho_l_series[0] * decay)) < 1e-6
    assert np.max(np.abs(s.trace - 1)) < 1e-8
    assert np.all(np.diff(s.times) > 0)


@settings(max_examples=10, deadline=None)
@given(state=states, gamma=st.floats(0.1, 2.0))
def test_rk4_is_deterministic(state, gamma):
    cfg = PropagationConfig.sized(state, 1.0, 1.0, Gamma=gamma, dt=0.01, record_every=0.1)
    a = evolve(state, 1.0, gamma, cfg)
    b = evolve(state, 1.0, gamma, cfg)
    np.testing.assert_array_equal(a.second_moment, b.second_moment)
    np.testing.assert_array_equal(a.rho_l_series, b.rho_l_series)
