import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from modumech.control import flagship_initial_state
from modumech.dynamics import SystemParams, kerr_rate, mechanical_moments, propagate
from modumech.hilbert import annihilator, basis_state, product_state
from modumech.modulation import (
    ModulationParams,
    _rotate_mechanics,
    cat_preparation,
    cat_schedule,
    coherent_amplitude,
    damped_mean_evolution,
    effective_kerr_rate,
    effective_params,
    inline_steady_state_phonons,
    kerr_rate_with_depth,
    max_displacement,
    max_displacement_with_depth,
    modulated_schedule,
    momentum_drift,
    rwa_error,
    rwa_validity_ratio,
    steady_state,
)


# --- parameters and schedules ----------------------------------------------------

@pytest.mark.parametrize("kw", [
    {"g_max": -1.0}, {"g_max": 1.0, "eta": 1.5}, {"g_max": 1.0, "nu": 0.0}, {"g_max": 1.0, "r": 0.0},
])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        ModulationParams(**kw)


def test_Omega_from_detuning():
    mp = ModulationParams(g_max=1.0, nu=50.0, delta=2.0)
    assert mp.Omega == 52.0
    assert ModulationParams(g_max=1.0).Omega is None


@given(st.floats(0, 10), st.floats(0, 1), st.floats(0.1, 100), st.floats(0, 50))
def test_coupling_range(g_max, eta, nu, t):
    g = ModulationParams(g_max, eta, nu).coupling(t)
    assert g_max * (1 - 2 * eta) - 1e-12 <= g <= g_max + 1e-12


def test_schedule_examples():
    mp = ModulationParams(g_max=2.0, eta=1.0, nu=4.0)
    s = modulated_schedule(mp, Omega=5.0, duration=1.0)
    assert s.coupling(0.0) == pytest.approx(2.0)
    assert s.coupling(math.pi / 8) == pytest.approx(0.0, abs=1e-15)
    half = ModulationParams(g_max=2.0, eta=0.5, nu=4.0)
    t = np.linspace(0, 3, 17)
    np.testing.assert_allclose(half.coupling(t), (2.0 / 2) * (1 + np.cos(4.0 * t)), atol=1e-15)
    assert s.Omega == 5.0 and s.nu == 4.0


def test_schedule_errors():
    mp = ModulationParams(g_max=1.0, nu=10.0, delta=1.0)
    with pytest.raises(ValueError):
        modulated_schedule(mp, 11.0, 0.0)
    with pytest.raises(ValueError):
        modulated_schedule(mp, 12.0, 1.0)


# --- effective model -------------------------------------------------------------

def test_effective_params_substitution():
    p = effective_params(0.2, 50.0, 0.1, omega=3.0)
    assert (p.omega, p.Omega, p.g) == (3.0, 0.1, 0.1)


def test_effective_kerr_examples():
    g = 0.4
    assert kerr_rate(effective_params(g, 100.0, g / 2).g, g / 2) == pytest.approx(g / 2)
    assert effective_kerr_rate(g, g / 2) == pytest.approx(g / 2)
    assert effective_kerr_rate(g, g) == pytest.approx(g / 4)
    assert effective_params(0.0, 10.0, 1.0).g == 0.0
    with pytest.raises(ZeroDivisionError):
        effective_kerr_rate(g, 0.0)


@given(st.floats(0.01, 1), st.floats(10, 1e4))
def test_enhancement_identity(g, Omega):
    ratio = effective_kerr_rate(g, g / 2) / kerr_rate(g, Omega)
    assert ratio == pytest.approx(Omega / (2 * g), rel=1e-12)


def test_validity_ratio_warning():
    assert rwa_validity_ratio(1.0, 100.0) == 0.01
    with pytest.warns(RuntimeWarning, match="RWA validity ratio large"):
        effective_params(0.5, 2.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        effective_params(0.01, 2.0, 1.0)


# --- rotating-wave error ---------------------------------------------------------

def _rwa_error(ratio, g=1.0, gt=math.pi / 2, g_max=None, eta=1.0):
    nu = g / ratio
    mp = ModulationParams(g if g_max is None else g_max, eta, nu)
    return rwa_error(mp, SystemParams(0.0, nu + g, 0.0), flagship_initial_state(3, 30), gt / g)


def test_rwa_error_zero_coupling():
    mp = ModulationParams(0.0, 1.0, 100.0)
    assert rwa_error(mp, SystemParams(0.4, 101.0, 0.0), flagship_initial_state(3, 30), 2.0) < 1e-10


def test_rwa_error_scaling():
    e2 = _rwa_error(0.02)
    e1 = _rwa_error(0.01)
    assert e2 / e1 >= 1.5


def test_rwa_error_bound():
    assert _rwa_error(0.01) < 0.05


def test_rwa_error_with_depth():
    # the constant part of a partial-depth drive is off resonance and averages out
    assert _rwa_error(0.01, g_max=2.0, eta=0.5) < 1e-3


# --- cat preparation -------------------------------------------------------------

def test_cat_schedule_examples():
    g = 0.8
    s = cat_schedule(g, 0.5)
    assert s.delta == pytest.approx(g)
    assert s.chi == pytest.approx(g / 4)
    assert s.tau == pytest.approx(2 * math.pi / g)
    assert s.chi_tau == pytest.approx(math.pi / 2)
    assert s.cat_ready and s.decoupled
    s1 = cat_schedule(g, 1.0)
    assert (s1.delta, s1.chi) == (pytest.approx(g / 2), pytest.approx(g / 2))
    assert s1.tau == pytest.approx(4 * math.pi / g)
    assert s1.chi_tau == pytest.approx(2 * math.pi)
    assert not s1.cat_ready
    assert cat_schedule(math.pi, 0.5).tau == pytest.approx(2.0)


@given(st.floats(0.01, 10), st.floats(0.05, 5))
def test_cat_schedule_invariants(g, r):
    s = cat_schedule(g, r)
    assert s.chi_tau == pytest.approx(2 * math.pi * r * r, rel=1e-12)
    assert s.decoupled


def test_cat_schedule_errors():
    with pytest.raises(ValueError):
        cat_schedule(0.0, 0.5)
    with pytest.raises(ValueError):
        cat_schedule(1.0, -0.5)


@pytest.mark.parametrize("omega", [0.0, 0.7])
def test_full_simulation_prepares_cat(omega):
    res = cat_preparation(1.0, 1.0, 100.0, (8, 50), omega=omega, tail_tol=None)
    assert res.theta == pytest.approx(-omega * 2 * math.pi)
    assert res.mechanical_tail < 1e-6
    assert res.fidelity >= 0.99


# --- photon pressure -------------------------------------------------------------

def test_momentum_drift_examples():
    assert momentum_drift(1.0, 0, 5.0) == 0.0
    assert momentum_drift(2.0, 3, 1.0) == pytest.approx(3 * math.sqrt(2))
    assert momentum_drift(4.0, 3, 1.0) / momentum_drift(4.0, 1, 1.0) == pytest.approx(3.0)


def test_momentum_drift_matches_simulation():
    g, nu, n, t = 1.0, 100.0, 2, 1.0
    mp = ModulationParams(g, 1.0, nu, delta=0.0)
    psi = product_state(basis_state(n, 3), basis_state(0, 30))
    lab = propagate(modulated_schedule(mp, nu, t), psi, t)
    _, p = mechanical_moments(_rotate_mechanics(lab, nu * t))
    # momentum decreases for p = -i(b - b^dag)/sqrt(2)
    assert p < 0
    assert abs(p) == pytest.approx(momentum_drift(g, n, t), rel=0.05)


def test_max_displacement_examples():
    assert max_displacement(1.0, 0, 2.0) == 0.0
    assert max_displacement(1445.0, 1, 1445.0) == pytest.approx(1 / math.sqrt(2), abs=1e-4)
    with pytest.raises(ValueError):
        max_displacement(1.0, 1, 0.0)


def test_max_displacement_matches_damped_steady_state():
    g, n, gamma = 3.0, 4, 0.5
    late = damped_mean_evolution(g, n, gamma, 60 / gamma)
    assert late.delta_s == pytest.approx(max_displacement(g, n, gamma), rel=0.01)


@pytest.mark.parametrize("eta", [0.0, 0.5, 1.0])
def test_depth_linearity(eta):
    assert kerr_rate_with_depth(8.0, eta) == pytest.approx(eta * kerr_rate_with_depth(8.0, 1.0))
    assert max_displacement_with_depth(8.0, eta, 3, 2.0) == pytest.approx(
        eta * max_displacement_with_depth(8.0, 1.0, 3, 2.0))
    assert kerr_rate_with_depth(8.0, eta) == pytest.approx(eta * 8.0 / 4)
    assert max_displacement_with_depth(8.0, eta, 3, 2.0) == pytest.approx(math.sqrt(2) * eta * 4.0 * 3)


def test_depth_validation():
    with pytest.raises(ValueError):
        kerr_rate_with_depth(1.0, 1.2)
    with pytest.raises(ValueError):
        max_displacement_with_depth(1.0, 0.5, 1, 0.0)


def test_coherent_amplitude_examples():
    assert coherent_amplitude(3.0, 2, 0.0).beta == 0
    r = coherent_amplitude(5780.0, 10, 1 / 5780.0)
    assert r.phonons == pytest.approx(25.0, rel=1e-12)
    r = coherent_amplitude(2.0, 1, 3.0)
    assert r.beta == pytest.approx(-3j)
    assert r.phonons == pytest.approx(9.0)
    assert r.delta_s == pytest.approx(3 * math.sqrt(2))


@given(st.floats(0, 10), st.integers(0, 20), st.floats(0, 10))
def test_report_invariants(g, n, t):
    r = coherent_amplitude(g, n, t)
    assert r.phonons == pytest.approx(abs(r.beta) ** 2)
    assert r.delta_s >= 0


def test_damped_example():
    r = damped_mean_evolution(1.0, 1, 1.0, 1.0)
    assert r.beta.imag == pytest.approx(-0.5 * (1 - math.exp(-1)), abs=1e-15)
    assert r.beta.imag == pytest.approx(-0.3161, abs=1e-4)
    assert r.beta.real == 0


def test_damped_small_gamma_limit():
    g, n, t = 2.0, 3, 0.5
    for gamma in (1e-3, 1e-5):
        damped = damped_mean_evolution(g, n, gamma, t).beta
        free = coherent_amplitude(g, n, t).beta
        assert abs(damped - free) <= abs(free) * gamma * t
    assert damped_mean_evolution(g, n, 0.0, t).beta == coherent_amplitude(g, n, t).beta


@given(st.floats(0.01, 10), st.integers(0, 30), st.floats(0.01, 10))
def test_damped_infinite_time(g, n, gamma):
    r = damped_mean_evolution(g, n, gamma, math.inf)
    assert r.delta_s == pytest.approx(g * n / (math.sqrt(2) * gamma), rel=1e-12)
    assert steady_state(g, n, gamma).delta_s == r.delta_s


def test_damped_matches_ode():
    g, n, gamma = 1.3, 2, 0.7

    def rhs(t, y):
        b = y[0] + 1j * y[1]
        d = -gamma * b - 0.5j * g * n
        return [d.real, d.imag]

    ts = np.linspace(0, 8, 9)
    sol = solve_ivp(rhs, (0, 8), [0.0, 0.0], t_eval=ts, rtol=1e-11, atol=1e-13)
    for t, re, im in zip(ts, *sol.y):
        assert damped_mean_evolution(g, n, gamma, t).beta == pytest.approx(re + 1j * im, abs=1e-9)


@given(st.floats(0.1, 5), st.integers(1, 10), st.floats(0.05, 3), st.floats(0, 10), st.floats(0, 10))
def test_damped_monotone(g, n, gamma, t1, t2):
    lo, hi = sorted((t1, t2))
    assert abs(damped_mean_evolution(g, n, gamma, lo).beta) <= abs(damped_mean_evolution(g, n, gamma, hi).beta) + 1e-12


def test_damped_mean_matches_master_equation():
    # Lindblad oracle: H = (g/2) n (b + b^dag), jump sqrt(2 gamma) b, so <b> decays at gamma
    g, n, gamma, dim = 1.0, 1, 1.0, 20
    b = annihilator(dim)
    H = 0.5 * g * n * (b + b.conj().T)
    L = math.sqrt(2 * gamma) * b
    LdL = L.conj().T @ L

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        d = -1j * (H @ rho - rho @ H) + L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
        return d.reshape(-1)

    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1
    for t in (0.5, 2.0, 12.0):
        sol = solve_ivp(rhs, (0, t), rho0.reshape(-1), rtol=1e-10, atol=1e-12)
        rho = sol.y[:, -1].reshape(dim, dim)
        b_mean = np.trace(b @ rho)
        assert b_mean == pytest.approx(damped_mean_evolution(g, n, gamma, t).beta, abs=1e-6)


def test_inline_alternative_is_four_times():
    g, n, gamma = 2.0, 3, 0.5
    assert inline_steady_state_phonons(g, n, gamma) == pytest.approx(4 * steady_state(g, n, gamma).phonons)
