"""Modulated coupling, its rotating-wave effective model and photon-pressure analytics.

Modulating the coupling as ``g(t) = g_max[(1 - eta) + eta cos(nu t)]`` with
``nu = Omega - delta`` and moving to the frame rotating at ``nu b^dag b`` gives,
after dropping terms oscillating at ``nu`` and faster,

    H_eff = omega n + delta N_b + (eta g_max / 2) n (b + b^dag),

i.e. the static model with ``Omega -> delta`` and ``g -> eta g_max / 2``. Its
Kerr rate ``(eta g_max)^2 / (4 delta)`` can far exceed the static ``g^2/Omega``.

Damping convention: ``gamma`` is the amplitude decay rate of ``<b>``,

    d<b>/dt = -gamma <b> - i (g/2) n,

so the steady-state phase-space distance is ``g n / (sqrt(2) gamma)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import ModulatedSchedule, SystemParams, PiecewiseSchedule, propagate
from .hilbert import (
    DEFAULT_TAIL_TOL,
    StateVector,
    basis_state,
    cat_state,
    coherent_state,
    fidelity,
    fidelity_with_pure,
    product_state,
    reduced_density_matrix,
)

__all__ = [
    "ModulationParams",
    "DisplacementReport",
    "CatSchedule",
    "CatPreparation",
    "RWA_WARN_RATIO",
    "modulated_schedule",
    "effective_params",
    "effective_kerr_rate",
    "rwa_validity_ratio",
    "rwa_error",
    "cat_schedule",
    "cat_preparation",
    "momentum_drift",
    "max_displacement",
    "max_displacement_with_depth",
    "kerr_rate_with_depth",
    "coherent_amplitude",
    "steady_state",
    "inline_steady_state_phonons",
    "damped_mean_evolution",
]

RWA_WARN_RATIO = 0.1


@dataclass(frozen=True)
class ModulationParams:
    """Drive parameters of the modulated coupling.

    ``delta`` and ``r`` are optional: ``delta`` fixes the mechanical frequency
    through ``Omega = nu + delta``, ``r`` records the detuning ratio
    ``delta = g/(2r)`` used for cat preparation.
    """

    g_max: float
    eta: float = 1.0
    nu: float = 1.0
    delta: float | None = None
    r: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.g_max) and self.g_max >= 0):
            raise ValueError(f"g_max must be finite and >= 0, got {self.g_max!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError(f"nu must be finite and > 0, got {self.nu!r}")
        if self.delta is not None and not np.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta!r}")
        if self.r is not None and not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r!r}")

    @property
    def Omega(self) -> float | None:
        return None if self.delta is None else self.nu + self.delta

    @property
    def effective_g(self) -> float:
        """Amplitude of the resonant part of the coupling, ``eta g_max``."""
        return self.eta * self.g_max

    def coupling(self, t):
        return self.g_max * ((1.0 - self.eta) + self.eta * np.cos(self.nu * np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class DisplacementReport:
    beta: complex
    phonons: float
    delta_s: float
    time: float


@dataclass(frozen=True)
class CatSchedule:
    """Cat-preparation timing for coupling ``g`` and detuning ratio ``r``.

    ``cat_ready`` says whether ``chi*tau = pi/2``; ``decoupled`` whether ``tau``
    is a whole number of effective mechanical periods ``2 pi / delta``.
    """

    g: float
    r: float
    delta: float
    tau: float
    chi: float
    chi_tau: float
    cat_ready: bool
    decoupled: bool


def modulated_schedule(mp: ModulationParams, Omega: float, duration: float,
                       omega: float = 0.0) -> ModulatedSchedule:
    """Lab-frame schedule with coupling ``mp.coupling(t)`` and constant ``Omega``, ``omega``."""
    if not duration > 0:
        raise ValueError(f"duration must be > 0, got {duration!r}")
    if mp.delta is not None and not math.isclose(mp.nu + mp.delta, Omega, rel_tol=1e-12, abs_tol=1e-12):
        raise ValueError(f"nu + delta = {mp.nu + mp.delta} does not match Omega = {Omega}")
    return ModulatedSchedule(float(omega), float(Omega), mp.coupling, float(duration), nu=mp.nu)


def rwa_validity_ratio(g: float, nu: float) -> float:
    """``g / nu``; the effective model needs this to be small."""
    if nu == 0:
        return math.inf
    return abs(g) / abs(nu)


def effective_params(g: float, Omega: float, delta: float, omega: float = 0.0) -> SystemParams:
    """Rotating-frame model of a coupling ``g cos(nu t)`` with ``nu = Omega - delta``.

    Warns (does not fail) when ``g / nu`` exceeds ``RWA_WARN_RATIO``.
    """
    ratio = rwa_validity_ratio(g, Omega - delta)
    if ratio > RWA_WARN_RATIO:
        warnings.warn(f"RWA validity ratio large: g/nu = {ratio:.3g}", RuntimeWarning, stacklevel=2)
    return SystemParams(omega=omega, Omega=delta, g=g / 2.0)


def effective_kerr_rate(g: float, delta: float) -> float:
    """``g^2 / (4 delta)``; undefined on resonance."""
    if delta == 0:
        raise ZeroDivisionError("effective Kerr rate diverges at delta = 0 (resonant drive)")
    return g * g / (4.0 * delta)


def _rotate_mechanics(state: StateVector, angle: float) -> StateVector:
    # exp(+i angle N_b)
    phases = np.exp(1j * angle * np.arange(state.dims[1]))
    return StateVector((state.blocks() * phases[None, :]).reshape(-1), state.dims)


def rwa_error(mp: ModulationParams, params: SystemParams, psi0: StateVector, t: float, *,
              tail_tol: float | None = DEFAULT_TAIL_TOL, tol: float = 1e-8, method: str = "cf4") -> float:
    """``1 - |<psi_eff(t)|exp(i nu N_b t) psi_lab(t)>|`` for the modulated drive.

    The lab-frame run uses ``params.omega`` and ``params.Omega`` with the coupling
    of ``mp``; ``params.g`` is not used. The comparison model is
    ``effective_params(eta g_max, Omega, Omega - nu)``.
    """
    delta = params.Omega - mp.nu
    if t == 0:
        return 0.0
    lab = propagate(modulated_schedule(replace(mp, delta=delta), params.Omega, t, params.omega),
                    psi0, t, tol=tol, tail_tol=tail_tol, method=method)
    rotated = _rotate_mechanics(lab, mp.nu * t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        eff = effective_params(mp.effective_g, params.Omega, delta, params.omega)
    ref = propagate(PiecewiseSchedule.constant(eff, t), psi0, t, tail_tol=tail_tol)
    return max(0.0, 1.0 - fidelity(ref, rotated))


def cat_schedule(g: float, r: float) -> CatSchedule:
    """Detuning, duration and Kerr rate for cat preparation with ``delta = g/(2r)``.

    ``chi = r g / 2`` and ``tau = 4 pi r / g``, so ``chi tau = 2 pi r^2``: the
    cat condition ``pi/2`` is met at ``r = 1/2``. Since ``tau delta = 2 pi``
    the mechanics always completes exactly one effective period.
    """
    if not g > 0:
        raise ValueError(f"g must be > 0, got {g!r}")
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r!r}")
    delta = g / (2.0 * r)
    chi = effective_kerr_rate(g, delta)
    tau = 4.0 * math.pi * r / g
    chi_tau = chi * tau
    periods = tau * delta / (2.0 * math.pi)
    return CatSchedule(
        g=g, r=r, delta=delta, tau=tau, chi=chi, chi_tau=chi_tau,
        cat_ready=math.isclose(chi_tau, math.pi / 2, rel_tol=1e-12),
        decoupled=abs(periods - round(periods)) < 1e-9 and round(periods) >= 1,
    )


@dataclass(frozen=True)
class CatPreparation:
    fidelity: float
    theta: float
    tau: float
    lc_density: np.ndarray
    mechanical_tail: float
    steps: int | None = None


def cat_preparation(alpha: float, g: float, nu: float, dims=(15, 40), *, omega: float = 0.0,
                    tail_tol: float | None = DEFAULT_TAIL_TOL, tol: float = 1e-8,
                    method: str = "cf4") -> CatPreparation:
    """Full lab-frame simulation of cat preparation with ``eta = 1`` and ``r = 1/2``.

    Starts from ``coherent(alpha) x |0>``, drives with ``g cos(nu t)`` at
    ``Omega = nu + g`` for ``tau = 2 pi / g`` and compares the LC reduced state
    with ``cat_state(alpha exp(i theta))``, where ``theta = -omega tau`` is the
    free LC rotation predicted by the effective model.
    """
    dim_a, dim_b = dims
    sched = cat_schedule(g, 0.5)
    mp = ModulationParams(g_max=g, eta=1.0, nu=nu, delta=sched.delta, r=0.5)
    lc = coherent_state(alpha, dim_a, tail_tol=tail_tol)
    psi0 = product_state(lc, basis_state(0, dim_b))
    final = propagate(modulated_schedule(mp, mp.Omega, sched.tau, omega), psi0, sched.tau,
                      tol=tol, tail_tol=tail_tol, method=method)
    theta = -omega * sched.tau
    target = cat_state(alpha * np.exp(1j * theta), dim_a, tail_tol=tail_tol)
    rho = reduced_density_matrix(final, "A")
    return CatPreparation(
        fidelity=fidelity_with_pure(rho, target),
        theta=theta,
        tau=sched.tau,
        lc_density=rho,
        mechanical_tail=float(final.populations("B")[-1]),
    )


def momentum_drift(g: float, n: int, t: float) -> float:
    """Magnitude ``sqrt(2) (g/2) n t`` of the momentum change under a resonant drive.

    With ``p = -i(b - b^dag)/sqrt(2)`` and ``H = (g/2) n (b + b^dag)`` the
    momentum decreases; the sign is left to the caller.
    """
    return math.sqrt(2) * (g / 2.0) * n * t


def max_displacement(g: float, n: int, gamma: float) -> float:
    """Steady-state phase-space distance ``g n / (sqrt(2) gamma)``."""
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    return g * n / (math.sqrt(2) * gamma)


def max_displacement_with_depth(g_max: float, eta: float, n: int, gamma: float) -> float:
    """Depth-reduced maximum displacement ``sqrt(2) eta (g_max/gamma) n``.

    This is the published reduced form. Substituting ``g -> eta g_max`` into
    :func:`max_displacement` instead gives half of it.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    return math.sqrt(2) * eta * (g_max / gamma) * n


def kerr_rate_with_depth(g_max: float, eta: float) -> float:
    """Effective Kerr rate ``eta g_max / 4`` at the optimal detuning ``delta = g``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    return eta * g_max / 4.0


def _report(beta: complex, t: float) -> DisplacementReport:
    return DisplacementReport(beta=beta, phonons=abs(beta) ** 2, delta_s=math.sqrt(2) * abs(beta), time=t)


def coherent_amplitude(g: float, n: int, t: float) -> DisplacementReport:
    """Undamped resonant drive from vacuum: ``beta = -i (g/2) n t``."""
    return _report(complex(0.0, -0.5 * g * n * t), t)


def steady_state(g: float, n: int, gamma: float) -> DisplacementReport:
    """``t -> inf`` limit of :func:`damped_mean_evolution`."""
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    return _report(complex(0.0, -g * n / (2.0 * gamma)), math.inf)


def inline_steady_state_phonons(g: float, n: int, gamma: float) -> float:
    """Alternative steady-state phonon figure ``(g n / gamma)^2``.

    Four times the phonon number implied by the damping convention used here;
    reported alongside it, never in its place.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    return (g * n / gamma) ** 2


def damped_mean_evolution(g: float, n: int, gamma: float, t: float) -> DisplacementReport:
    """Closed-form ``beta(t) = -i (g n / (2 gamma)) (1 - exp(-gamma t))`` from vacuum."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma!r}")
    if gamma == 0:
        return coherent_amplitude(g, n, t)
    if math.isinf(t):
        return steady_state(g, n, gamma)
    return _report(complex(0.0, -(g * n / (2.0 * gamma)) * -math.expm1(-gamma * t)), t)
