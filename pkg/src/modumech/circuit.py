"""SI parameter maps for the capacitively coupled LC circuit.

Two variants are covered: a fixed inductor ``L`` (``omega = 1/sqrt(L C)``) and a
pair of Josephson junctions whose inductance ``L_J / cos(pi phi)`` is tuned by
the external flux ``phi`` (in units of the flux quantum). All inputs and
outputs are SI: A, F, m, kg, H, rad/s, s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FluxBranchError
from .modulation import inline_steady_state_phonons, steady_state

__all__ = [
    "PLANCK",
    "ELEMENTARY_CHARGE",
    "HBAR",
    "PHI0",
    "CircuitParams",
    "DerivedCircuit",
    "AdiabaticityReport",
    "EnhancementReport",
    "derive",
    "lc_basic",
    "junction_inductance",
    "flux_frequency",
    "flux_coupling",
    "flux_waveform",
    "adiabaticity_report",
    "enhancement_estimates",
    "constants",
]

# exact SI defining constants
PLANCK = 6.62607015e-34  # J s
ELEMENTARY_CHARGE = 1.602176634e-19  # C
HBAR = PLANCK / (2 * math.pi)  # 1.054571817e-34 J s
PHI0 = PLANCK / (2 * ELEMENTARY_CHARGE)  # 2.067833848e-15 Wb

ADIABATIC_THRESHOLD = 0.01
OMEGA_FLOOR_FRACTION = 1e-3


def constants() -> dict:
    return {"h_J_s": PLANCK, "e_C": ELEMENTARY_CHARGE, "hbar_J_s": HBAR, "phi0_Wb": PHI0}


def _positive(**kwargs):
    for name, value in kwargs.items():
        if not (np.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class CircuitParams:
    """Hardware parameters. ``L`` is only used by the fixed-inductor variant."""

    I0: float
    C: float
    d: float
    m: float
    Omega_si: float
    Q: float = 1e5
    L: float | None = None

    def __post_init__(self):
        _positive(I0=self.I0, C=self.C, d=self.d, m=self.m, Omega_si=self.Omega_si, Q=self.Q)
        if self.L is not None:
            _positive(L=self.L)


@dataclass(frozen=True)
class DerivedCircuit:
    omega_max: float
    x_zp: float
    g_max: float
    L_J: float


def derive(cp: CircuitParams) -> DerivedCircuit:
    """Maximum LC frequency, zero-point motion, maximum coupling and junction inductance."""
    omega_max = math.sqrt(4 * math.pi * cp.I0 / (PHI0 * cp.C))
    x_zp = math.sqrt(HBAR / (2 * cp.m * cp.Omega_si))
    return DerivedCircuit(
        omega_max=omega_max,
        x_zp=x_zp,
        g_max=omega_max * x_zp / (2 * cp.d),
        L_J=PHI0 / (4 * math.pi * cp.I0),
    )


def lc_basic(L: float, C: float, d: float, m_kg: float, Omega_si: float) -> tuple[float, float]:
    """``(omega, g)`` of the fixed-inductor circuit: ``1/sqrt(LC)`` and ``omega x_zp / (2d)``."""
    _positive(L=L, C=C, d=d, m_kg=m_kg, Omega_si=Omega_si)
    omega = 1.0 / math.sqrt(L * C)
    x_zp = math.sqrt(HBAR / (2 * m_kg * Omega_si))
    return omega, omega * x_zp / (2 * d)


def _reduce(phi):
    # map to [-1, 1)
    return np.mod(np.asarray(phi, dtype=float) + 1.0, 2.0) - 1.0


def _cos_pi(phi):
    # cos(pi phi) = sin(pi (1/2 - |phi|)); exact zero at |phi| = 1/2
    return np.sin(np.pi * (0.5 - np.abs(_reduce(phi))))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def junction_inductance(phi, I0: float):
    """``phi0 / (4 pi I0 cos(pi phi))``; requires ``cos(pi phi) > 0``."""
    _positive(I0=I0)
    c = _cos_pi(phi)
    if np.any(c <= 0):
        raise FluxBranchError(f"flux outside the branch |phi mod 2| < 1/2: phi = {phi!r}")
    return _scalar(PHI0 / (4 * math.pi * I0 * c))


def _sqrt_cos(phi):
    c = _cos_pi(phi)
    if np.any(c < 0):
        raise FluxBranchError(f"flux outside the branch |phi mod 2| <= 1/2: phi = {phi!r}")
    return np.sqrt(c)


def flux_frequency(phi, cp: CircuitParams):
    """LC frequency ``omega_max sqrt(cos(pi phi))``."""
    return _scalar(derive(cp).omega_max * _sqrt_cos(phi))


def flux_coupling(phi, cp: CircuitParams):
    """Coupling ``g_max sqrt(cos(pi phi))``."""
    return _scalar(derive(cp).g_max * _sqrt_cos(phi))


def _check_depth(eta):
    if not 0.0 <= eta <= 0.5:
        raise ValueError(f"flux modulation depth must lie in [0, 1/2], got {eta!r}")


def flux_waveform(nu: float, t, eta: float = 0.5):
    """Flux ``phi(t)`` in ``[0, 1/2]`` with ``sqrt(cos(pi phi)) = (1 - eta) + eta cos(nu t)``.

    The default ``eta = 1/2`` gives ``(1 + cos(nu t))/2``, the deepest modulation
    that keeps the coupling nonnegative.
    """
    _check_depth(eta)
    s = (1.0 - eta) + eta * np.cos(nu * np.asarray(t, dtype=float))
    return _scalar(np.arccos(np.clip(s * s, 0.0, 1.0)) / np.pi)


@dataclass(frozen=True)
class AdiabaticityReport:
    """Adiabaticity of the flux waveform at modulation frequency ``nu``.

    ``ratio_nu_omega`` is ``nu / max(omega_min, omega_floor)`` over one period
    and decides ``ok``. ``ratio_nu_omega_max`` uses ``omega_max`` instead and
    shows how the same drive looks away from the turning point.
    """

    nu: float
    omega_min: float
    omega_floor: float
    ratio_nu_omega: float
    ratio_nu_omega_max: float
    max_dphi_dt: float
    dphi_per_period: float
    threshold: float
    ok: bool


def adiabaticity_report(nu: float, cp: CircuitParams, *, eta: float = 0.5,
                        threshold: float = ADIABATIC_THRESHOLD, omega_floor: float | None = None,
                        samples: int = 4001) -> AdiabaticityReport:
    """Compare the modulation rate with the LC frequency along the flux waveform.

    The LC frequency follows ``omega_max [(1 - eta) + eta cos(nu t)]`` and its
    minimum sets the adiabaticity ratio. At ``eta = 1/2`` the waveform reaches
    ``phi = 1/2`` where the frequency vanishes; ``omega_floor`` (default
    ``1e-3 omega_max``) keeps the ratios finite there and the report is
    flagged not-ok whenever the minimum falls to the floor.
    """
    _check_depth(eta)
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu!r}")
    omega_max = derive(cp).omega_max
    floor = OMEGA_FLOOR_FRACTION * omega_max if omega_floor is None else float(omega_floor)
    if nu == 0:
        return AdiabaticityReport(0.0, omega_max * (1 - 2 * eta), floor, 0.0, 0.0, 0.0, 0.0, threshold, True)
    theta = np.linspace(0.0, 2 * np.pi, samples)
    s = (1.0 - eta) + eta * np.cos(theta)
    omega_min = float(omega_max * s.min())
    # d phi / d theta of arccos(s^2)/pi; finite limit sqrt(2 eta)/pi where s -> 1
    gap = np.sqrt(np.clip(1.0 - s ** 4, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        dphi = 2 * s * eta * np.sin(theta) / (np.pi * gap)
    dphi = np.where(gap > 0, dphi, math.sqrt(2 * eta) / math.pi)
    max_rate = float(np.max(np.abs(dphi)) * nu)
    effective = max(omega_min, floor)
    ratio = nu / effective
    return AdiabaticityReport(
        nu=nu,
        omega_min=omega_min,
        omega_floor=floor,
        ratio_nu_omega=ratio,
        ratio_nu_omega_max=nu / omega_max,
        max_dphi_dt=max_rate,
        dphi_per_period=max_rate * 2 * math.pi / effective,
        threshold=threshold,
        ok=bool(ratio < threshold and omega_min > floor),
    )


@dataclass(frozen=True)
class EnhancementReport:
    """Order-of-magnitude estimates for the modulated scheme.

    ``steady_state`` holds one entry per ``gamma``-from-``Q`` convention, each
    with the phase-space distance, the phonon number it implies and the
    alternative ``(g n / gamma)^2`` figure. ``reference_phonons_reproduced``
    says whether any of them lands within a factor 1.5 of ``reference_phonons``.
    """

    g: float
    Omega: float
    eta: float
    n: int
    Q: float
    chi_modulated: float
    chi_static: float
    enhancement_ratio: float
    g_pressure: float
    displacement_time: float
    displacement_phonons: float
    steady_state: dict = field(default_factory=dict)
    reference_phonons: float = 90.0
    reference_phonons_reproduced: bool = False


def enhancement_estimates(g: float, Omega: float, eta: float, n: int = 10, Q: float = 1e5,
                          g_pressure: float | None = None, reference_phonons: float = 90.0
                          ) -> EnhancementReport:
    """Kerr enhancement and photon-pressure numbers from rates in s^-1.

    ``g`` and ``Omega`` set the Kerr comparison ``eta g / 4`` versus
    ``g^2 / Omega``; ``g_pressure`` (default ``g``) drives the photon-pressure
    displacement of ``n`` photons, evaluated at ``t = 1/g_pressure`` and in the
    damped steady state.
    """
    _positive(g=g, Omega=Omega, Q=Q)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n!r}")
    gp = g if g_pressure is None else float(g_pressure)
    _positive(g_pressure=gp)
    chi_mod = eta * g / 4.0
    chi_static = g * g / Omega
    t_disp = 1.0 / gp
    phonons = (gp * n * t_disp / 2.0) ** 2
    steady = {}
    for label, gamma in (("gamma=Omega/Q", Omega / Q), ("gamma=Omega/(2Q)", Omega / (2 * Q))):
        ss = steady_state(gp, n, gamma)
        steady[label] = {
            "gamma": gamma,
            "delta_s": ss.delta_s,
            "phonons": ss.phonons,
            "phonons_alternative": inline_steady_state_phonons(gp, n, gamma),
        }
    candidates = [v for entry in steady.values() for v in (entry["phonons"], entry["phonons_alternative"])]
    reproduced = any(reference_phonons / 1.5 <= v <= reference_phonons * 1.5 for v in candidates)
    return EnhancementReport(
        g=g, Omega=Omega, eta=eta, n=n, Q=Q,
        chi_modulated=chi_mod,
        chi_static=chi_static,
        enhancement_ratio=chi_mod / chi_static,
        g_pressure=gp,
        displacement_time=t_disp,
        displacement_phonons=phonons,
        steady_state=steady,
        reference_phonons=reference_phonons,
        reference_phonons_reproduced=reproduced,
    )
