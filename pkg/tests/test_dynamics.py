import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from modumech.dynamics import (
    ModulatedSchedule,
    PiecewiseSchedule,
    SystemParams,
    analytic_propagator,
    conditional_displacement,
    displacement_at_half_period,
    hamiltonian,
    kerr_propagator,
    kerr_rate,
    mechanical_moments,
    numeric_propagator,
    propagate,
    propagator_factors,
)
from modumech.errors import StepControlError, TruncationError
from modumech.hilbert import (
    FockSpace,
    StateVector,
    annihilator,
    basis_state,
    coherent_state,
    embed,
    entanglement_entropy,
    expm_hermitian,
    fidelity,
    number,
    product_state,
)


def uniform_lc(dim_b, dim_a=3):
    return product_state(StateVector.from_amplitudes(np.ones(dim_a)), basis_state(0, dim_b))


# --- SystemParams ----------------------------------------------------------------

@pytest.mark.parametrize("kw", [{"g": -1.0}, {"gamma": -0.1}, {"omega": math.nan}, {"Omega": math.inf}])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        SystemParams(**kw)


# --- Hamiltonian -----------------------------------------------------------------

def test_hamiltonian_decoupled_is_diagonal():
    sp = FockSpace(3, 5)
    H = hamiltonian(SystemParams(omega=2.0, Omega=0.7, g=0.0), sp)
    expected = [2.0 * a + 0.7 * b for a in range(3) for b in range(5)]
    np.testing.assert_allclose(H, np.diag(expected), atol=1e-15)


def test_hamiltonian_coupling_element():
    sp = FockSpace(3, 5)
    H = hamiltonian(SystemParams(omega=1.0, Omega=2.0, g=0.3), sp)
    assert H[sp.index(1, 1), sp.index(1, 0)] == pytest.approx(0.3, abs=1e-15)


@given(st.floats(0, 5), st.floats(0.1, 5), st.floats(0, 2))
def test_hamiltonian_hermitian_and_conserves_photons(omega, Omega, g):
    sp = FockSpace(3, 8)
    H = hamiltonian(SystemParams(omega, Omega, g), sp)
    assert np.max(np.abs(H - H.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(H)))
    na = embed(number(3), "A", sp)
    np.testing.assert_allclose(H @ na - na @ H, 0, atol=1e-12)


# --- propagator factors ----------------------------------------------------------

def test_factors_at_zero():
    f = propagator_factors(SystemParams(Omega=3.0, g=0.4), 0.0)
    assert (f.lambda_x, f.lambda_p, f.mu) == (0.0, 0.0, 0.0)


def test_factors_half_period():
    g, W = 0.4, 3.0
    f = propagator_factors(SystemParams(Omega=W, g=g), math.pi / W)
    assert f.lambda_x == pytest.approx(0.0, abs=1e-15)
    assert f.lambda_p == pytest.approx(2 * g / W, abs=1e-15)


def test_factors_full_period_mu():
    f = propagator_factors(SystemParams(Omega=10.0, g=1.0), 2 * math.pi / 10)
    assert f.mu == pytest.approx(0.0628319, abs=1e-7)
    assert abs(f.lambda_x) < 1e-15 and abs(f.lambda_p) < 1e-15


@given(st.integers(1, 5))
def test_factors_vanish_at_periods(m):
    p = SystemParams(Omega=2.5, g=0.7)
    t = 2 * math.pi * m / p.Omega
    f = propagator_factors(p, t)
    assert abs(f.lambda_x) < 1e-12 and abs(f.lambda_p) < 1e-12
    assert f.mu == pytest.approx(p.g ** 2 / p.Omega * t, rel=1e-12)


@given(st.floats(0.1, 10), st.floats(0, 3), st.floats(0, 20), st.floats(0, 20))
def test_mu_monotone(Omega, g, t1, t2):
    p = SystemParams(Omega=Omega, g=g)
    lo, hi = sorted((t1, t2))
    assert propagator_factors(p, lo).mu <= propagator_factors(p, hi).mu + 1e-12


@pytest.mark.parametrize("Omega", [0.0, -1.0])
def test_factors_need_positive_Omega(Omega):
    with pytest.raises(ValueError):
        propagator_factors(SystemParams(Omega=Omega, g=0.1), 1.0)


# --- analytic propagator ---------------------------------------------------------

def test_analytic_decoupled_is_free_rotation():
    sp = FockSpace(3, 6)
    p = SystemParams(omega=1.3, Omega=0.8, g=0.0)
    t = 2.1
    free = np.kron(np.diag(np.exp(-1j * 1.3 * np.arange(3) * t)), np.diag(np.exp(-1j * 0.8 * np.arange(6) * t)))
    np.testing.assert_allclose(analytic_propagator(p, t, sp), free, atol=1e-12)


@given(st.floats(0, 4 * math.pi), st.floats(0, 3))
def test_analytic_matches_exact_exponential(t, omega):
    sp = FockSpace(3, 30)
    p = SystemParams(omega=omega, Omega=1.0, g=0.1)
    psi0 = uniform_lc(30)
    a = analytic_propagator(p, t, sp) @ psi0.amplitudes
    b = expm_hermitian(hamiltonian(p, sp), t) @ psi0.amplitudes
    assert abs(abs(np.vdot(a, b)) - 1.0) < 1e-10


def test_analytic_unitary_on_guarded_states():
    sp = FockSpace(3, 30)
    p = SystemParams(omega=0.5, Omega=1.0, g=0.1)
    out = analytic_propagator(p, 2.3, sp) @ uniform_lc(30).amplitudes
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-10)


def test_conditional_displacement_sign():
    # <b> of the mechanics equals the predicted amplitude for each photon number
    p = SystemParams(omega=0.0, Omega=1.0, g=0.2)
    sp = FockSpace(3, 30)
    for t in (0.7, math.pi, 4.0):
        f = propagator_factors(p, t)
        for n in range(3):
            psi = analytic_propagator(p, t, sp) @ product_state(basis_state(n, 3), basis_state(0, 30)).amplitudes
            # the free mechanical factor acts first, on the vacuum, so it drops out
            x, pm = mechanical_moments(StateVector(psi, sp.dims))
            b_mean = complex(x, pm) / math.sqrt(2)
            assert abs(b_mean - conditional_displacement(f, n)) < 1e-10


def test_half_period_displacement_from_state():
    g, W = 0.1, 1.0
    sp = FockSpace(3, 30)
    for n in (1, 2):
        psi = analytic_propagator(SystemParams(Omega=W, g=g), math.pi / W, sp) @ \
            product_state(basis_state(n, 3), basis_state(0, 30)).amplitudes
        x, p = mechanical_moments(StateVector(psi, sp.dims))
        assert math.hypot(x, p) == pytest.approx(displacement_at_half_period(g, W, n), abs=1e-8)


def test_displacement_examples():
    assert displacement_at_half_period(0.3, 1.0, 0) == 0.0
    assert displacement_at_half_period(0.1, 1.0, 1) == pytest.approx(0.28284, abs=1e-5)
    with pytest.raises(ValueError):
        displacement_at_half_period(0.1, 0.0, 1)


# --- Kerr ------------------------------------------------------------------------

def test_kerr_rate_examples():
    assert kerr_rate(1.0, 100.0) == pytest.approx(0.01)
    assert kerr_rate(0.0, 3.0) == 0.0
    assert kerr_rate(2 * math.pi * 100, 2 * math.pi * 1e7) == pytest.approx(2 * math.pi * 1e-3, rel=1e-12)
    with pytest.raises(ValueError):
        kerr_rate(1.0, 0.0)


def test_kerr_propagator_free_limit():
    sp = FockSpace(3, 5)
    p = SystemParams(omega=0.4, Omega=2.0, g=0.0)
    tau = 2 * math.pi / 2.0
    np.testing.assert_allclose(kerr_propagator(p, 1, sp), analytic_propagator(p, tau, sp), atol=1e-12)


def test_kerr_relative_phase():
    sp = FockSpace(3, 4)
    p = SystemParams(omega=0.0, Omega=1.0, g=0.3)
    K = kerr_propagator(p, 1, sp)
    tau = 2 * math.pi
    ratio = K[sp.index(2, 0), sp.index(2, 0)] / K[sp.index(0, 0), sp.index(0, 0)]
    assert ratio == pytest.approx(np.exp(1j * 0.09 * 4 * tau), abs=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_kerr_matches_analytic(m):
    sp = FockSpace(3, 30)
    p = SystemParams(omega=0.9, Omega=1.7, g=0.2)
    tau = 2 * math.pi * m / p.Omega
    np.testing.assert_allclose(kerr_propagator(p, m, sp), analytic_propagator(p, tau, sp), atol=1e-10)


def test_kerr_needs_positive_integer():
    with pytest.raises(ValueError):
        kerr_propagator(SystemParams(), 0, FockSpace(2, 2))


# --- numeric propagation ---------------------------------------------------------

def test_constant_schedule_matches_spectral():
    sp = FockSpace(3, 12)
    p = SystemParams(omega=0.3, Omega=1.1, g=0.2)
    U = numeric_propagator(PiecewiseSchedule.constant(p, 5.0), 3.0, sp)
    np.testing.assert_allclose(U, expm_hermitian(hamiltonian(p, sp), 3.0), atol=1e-10)


def test_two_segments_are_a_product():
    sp = FockSpace(3, 10)
    p1 = SystemParams(omega=0.2, Omega=1.0, g=0.3)
    p2 = SystemParams(omega=0.5, Omega=2.0, g=0.1)
    sched = PiecewiseSchedule([0.4, 0.9], [0.2, 0.5], [1.0, 2.0], [0.3, 0.1])
    expected = expm_hermitian(hamiltonian(p2, sp), 0.9) @ expm_hermitian(hamiltonian(p1, sp), 0.4)
    np.testing.assert_allclose(numeric_propagator(sched, 1.3, sp), expected, atol=1e-10)


def test_numeric_unitary_and_conserves_photon_number():
    sp = FockSpace(3, 10)
    sched = ModulatedSchedule(0.5, 3.0, lambda t: 0.2 * np.cos(2.0 * t), 2.0, nu=2.0)
    U = numeric_propagator(sched, 2.0, sp)
    assert np.max(np.abs(U.conj().T @ U - np.eye(sp.dim))) <= 1e-10
    na = embed(number(3), "A", sp)
    np.testing.assert_allclose(U @ na - na @ U, 0, atol=1e-10)


def test_modulated_constant_coupling_matches_exact():
    sp = FockSpace(3, 20)
    p = SystemParams(omega=0.3, Omega=1.0, g=0.15)
    psi0 = uniform_lc(20)
    sched = ModulatedSchedule(p.omega, p.Omega, lambda t: np.full_like(t, p.g), 6.0)
    got = propagate(sched, psi0, 6.0)
    exact = expm_hermitian(hamiltonian(p, sp), 6.0) @ psi0.amplitudes
    assert np.max(np.abs(got.amplitudes - exact)) < 1e-7


def test_from_samples_interpolates():
    times = np.linspace(0, 4, 401)
    sched = ModulatedSchedule.from_samples(times, 0.1 * np.ones_like(times), omega=0.0, Omega=1.0)
    psi0 = uniform_lc(20)
    got = propagate(sched, psi0, 4.0)
    ref = propagate(PiecewiseSchedule.constant(SystemParams(0.0, 1.0, 0.1), 4.0), psi0, 4.0)
    assert fidelity(got, ref) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("method, order", [("midpoint", 2), ("cf4", 4)])
def test_integrator_order(method, order):
    from modumech.dynamics import _modulated_blocks
    sp = FockSpace(3, 15)
    sched = ModulatedSchedule(0.0, 1.0, lambda t: 0.3 * np.cos(1.7 * t), 3.0)
    cols = uniform_lc(15).blocks()[:, :, None]
    ref = _modulated_blocks(sched, 3.0, sp, cols, 4096, "cf4")
    e1 = np.max(np.abs(_modulated_blocks(sched, 3.0, sp, cols, 32, method) - ref))
    e2 = np.max(np.abs(_modulated_blocks(sched, 3.0, sp, cols, 64, method) - ref))
    assert math.log2(e1 / e2) == pytest.approx(order, abs=0.3)


def test_step_control_error():
    sched = ModulatedSchedule(0.0, 1.0, lambda t: 0.3 * np.cos(5 * t), 10.0, nu=5.0)
    with pytest.raises(StepControlError):
        propagate(sched, uniform_lc(10), 10.0, tol=1e-14, max_steps=64)


def test_t_beyond_schedule():
    sched = PiecewiseSchedule.constant(SystemParams(g=0.1), 1.0)
    with pytest.raises(ValueError):
        propagate(sched, uniform_lc(10), 2.0)


def test_propagate_tail_guard():
    p = SystemParams(Omega=1.0, g=1.0)
    psi0 = product_state(basis_state(2, 3), basis_state(0, 8))
    with pytest.raises(TruncationError):
        propagate(PiecewiseSchedule.constant(p, math.pi), psi0, math.pi)


@pytest.mark.parametrize("m", [1, 2])
def test_periodic_disentanglement(m):
    p = SystemParams(omega=0.4, Omega=1.3, g=0.2)
    t = 2 * math.pi * m / p.Omega
    state = propagate(PiecewiseSchedule.constant(p, t), uniform_lc(30), t)
    assert entanglement_entropy(state) < 1e-8


def test_entangled_between_periods():
    p = SystemParams(Omega=1.0, g=0.2)
    state = propagate(PiecewiseSchedule.constant(p, math.pi), uniform_lc(30), math.pi)
    assert entanglement_entropy(state) > 1e-3


def test_mechanical_moments_of_coherent():
    psi = product_state(basis_state(0, 2), coherent_state(0.3 + 0.4j, 25))
    x, p = mechanical_moments(psi)
    assert x == pytest.approx(math.sqrt(2) * 0.3, abs=1e-12)
    assert p == pytest.approx(math.sqrt(2) * 0.4, abs=1e-12)
    b = embed(annihilator(25), "B", psi.space)
    assert psi.expect(b) == pytest.approx(0.3 + 0.4j, abs=1e-12)
