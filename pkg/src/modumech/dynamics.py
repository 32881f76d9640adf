"""Optomechanical dynamics for ``H = w a^dag a + W b^dag b + g a^dag a (b + b^dag)``.

Units are dimensionless with hbar = 1. Two propagation routes are provided and
are meant to check each other:

* :func:`analytic_propagator` evaluates the closed-form factorization
  ``exp(-i w n t) exp(i mu n^2) exp(-i n sqrt2 (lx x - lp p)) exp(-i W N_b t)``;
* :func:`numeric_propagator` / :func:`propagate` time-order piecewise
  exponentials of the Hamiltonian (exact per segment for piecewise-constant
  schedules, fourth-order split stepping for a modulated coupling).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .errors import StepControlError
from .hilbert import (
    DEFAULT_TAIL_TOL,
    FockSpace,
    StateVector,
    annihilator,
    check_tail,
    expm_hermitian,
    quadratures,
)

__all__ = [
    "SystemParams",
    "PropagatorFactors",
    "PiecewiseSchedule",
    "ModulatedSchedule",
    "hamiltonian",
    "propagator_factors",
    "conditional_displacement",
    "analytic_propagator",
    "kerr_propagator",
    "kerr_rate",
    "displacement_at_half_period",
    "numeric_propagator",
    "propagate",
    "mechanical_moments",
    "block_diag",
]

STEPS_PER_PERIOD = 200
MIN_STEPS = 16
MAX_STEPS = 2 ** 22
STEP_TOL = 1e-8

# two-exponential commutator-free Magnus scheme, order 4
_CF4_NODES = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
_CF4_A1 = (3 - 2 * math.sqrt(3)) / 12
_CF4_A2 = (3 + 2 * math.sqrt(3)) / 12


def _require_positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Rates of the optomechanical Hamiltonian (hbar = 1).

    ``Omega`` may be zero or negative when the object describes a rotating-frame
    effective model; functions that divide by it check it themselves.
    """

    omega: float = 0.0
    Omega: float = 1.0
    g: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("omega", "Omega", "g", "gamma"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")


@dataclass(frozen=True)
class PropagatorFactors:
    lambda_x: float
    lambda_p: float
    mu: float
    t: float


def _mech_ops(dim_b):
    b = annihilator(dim_b).real
    X = b + b.T
    ndiag = np.arange(dim_b, dtype=float)
    return X, ndiag


def block_diag(blocks: np.ndarray) -> np.ndarray:
    """Assemble per-photon-number blocks ``(A, B, B)`` into a joint ``(AB, AB)`` matrix."""
    A, B, _ = blocks.shape
    out = np.zeros((A * B, A * B), dtype=np.complex128)
    for n in range(A):
        out[n * B:(n + 1) * B, n * B:(n + 1) * B] = blocks[n]
    return out


def hamiltonian(params: SystemParams, space: FockSpace) -> np.ndarray:
    X, ndiag = _mech_ops(space.dim_b)
    na = np.diag(np.arange(space.dim_a, dtype=float))
    H = (
        params.omega * np.kron(na, np.eye(space.dim_b))
        + params.Omega * np.kron(np.eye(space.dim_a), np.diag(ndiag))
        + params.g * np.kron(na, X)
    )
    return H.astype(np.complex128)


def propagator_factors(params: SystemParams, t: float) -> PropagatorFactors:
    _require_positive("Omega", params.Omega)
    W, g = params.Omega, params.g
    s, c = math.sin(W * t), math.cos(W * t)
    return PropagatorFactors(
        lambda_x=(g / W) * s,
        lambda_p=(g / W) * (1.0 - c),
        mu=(g * g / W) * (t - s / W),
        t=t,
    )


def conditional_displacement(factors: PropagatorFactors, n: int) -> complex:
    """Coherent amplitude imprinted on the mechanics (from vacuum) by ``n`` photons.

    ``exp(-i n sqrt2 (lx x - lp p)) = D(alpha_n)`` with ``alpha_n = -n (lp + i lx)``.
    """
    return -n * complex(factors.lambda_p, factors.lambda_x)


def analytic_propagator(params: SystemParams, t: float, space: FockSpace) -> np.ndarray:
    """Closed-form propagator as the ordered product of its four factors."""
    f = propagator_factors(params, t)
    na = np.repeat(np.arange(space.dim_a, dtype=float), space.dim_b)
    nb = np.tile(np.arange(space.dim_b, dtype=float), space.dim_a)
    free_lc = np.diag(np.exp(-1j * params.omega * na * t))
    kerr = np.diag(np.exp(1j * f.mu * na ** 2))
    free_mech = np.diag(np.exp(-1j * params.Omega * nb * t))
    x, p = quadratures(space.dim_b)
    G = math.sqrt(2) * (f.lambda_x * x - f.lambda_p * p)
    disp = block_diag(np.stack([expm_hermitian(n * G) for n in range(space.dim_a)]))
    return free_lc @ kerr @ disp @ free_mech


def kerr_propagator(params: SystemParams, m: int, space: FockSpace) -> np.ndarray:
    """Diagonal evolution ``exp[-i(w n + W N_b - (g^2/W) n^2) tau]`` at ``tau = 2 pi m / W``."""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    tau = 2 * math.pi * m / params.Omega
    chi = kerr_rate(params.g, params.Omega)
    na = np.repeat(np.arange(space.dim_a, dtype=float), space.dim_b)
    nb = np.tile(np.arange(space.dim_b, dtype=float), space.dim_a)
    return np.diag(np.exp(-1j * (params.omega * na + params.Omega * nb - chi * na ** 2) * tau))


def kerr_rate(g: float, Omega: float) -> float:
    _require_positive("Omega", Omega)
    return g * g / Omega


def displacement_at_half_period(g: float, Omega: float, n: int) -> float:
    """Phase-space distance ``sqrt(8) (g/W) n`` reached by the mechanics at ``t = pi/W``."""
    _require_positive("Omega", Omega)
    return math.sqrt(8) * (g / Omega) * n


def mechanical_moments(state: StateVector) -> tuple[float, float]:
    """``(<x>, <p>)`` of the mechanical mode of a joint state."""
    m = state.amplitudes.reshape(state.dims)
    n = np.arange(1, state.dims[1])
    b_mean = np.sum(m[:, :-1].conj() * m[:, 1:] * np.sqrt(n))
    return float(math.sqrt(2) * b_mean.real), float(math.sqrt(2) * b_mean.imag)


# --- schedules -----------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseSchedule:
    """Piecewise-constant ``(omega, Omega, g)`` over consecutive segments."""

    durations: np.ndarray
    omega: np.ndarray
    Omega: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        arrays = [np.atleast_1d(np.asarray(getattr(self, k), dtype=float))
                  for k in ("durations", "omega", "Omega", "g")]
        size = max(a.size for a in arrays)
        arrays = [np.broadcast_to(a, (size,)).copy() for a in arrays]
        if np.any(arrays[0] < 0):
            raise ValueError("segment durations must be nonnegative")
        for name, arr in zip(("durations", "omega", "Omega", "g"), arrays):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def constant(cls, params: SystemParams, duration: float) -> "PiecewiseSchedule":
        return cls([duration], [params.omega], [params.Omega], [params.g])

    @property
    def duration(self) -> float:
        return float(np.sum(self.durations))


@dataclass(frozen=True)
class ModulatedSchedule:
    """Constant ``omega`` and ``Omega`` with a time-dependent coupling ``g(t)``.

    ``coupling`` must accept an array of times. ``nu`` (if given) is the
    modulation frequency and sets the floor of steps per modulation period.
    """

    omega: float
    Omega: float
    coupling: Callable[[np.ndarray], np.ndarray]
    duration: float
    nu: float | None = None

    @classmethod
    def from_samples(cls, times, g_samples, omega=0.0, Omega=1.0, nu=None):
        """Coupling linearly interpolated from samples."""
        times = np.asarray(times, dtype=float)
        g_samples = np.asarray(g_samples, dtype=float)
        return cls(omega, Omega, lambda t: np.interp(t, times, g_samples), float(times[-1]), nu)


def _segment_blocks(omega, Omega, g, dt, dim_a, X, ndiag):
    nvals = np.arange(dim_a, dtype=float)
    H = Omega * np.diag(ndiag)[None] + g * nvals[:, None, None] * X[None]
    lam, W = np.linalg.eigh(H)
    phase = np.exp(-1j * dt * (lam + omega * nvals[:, None]))
    return np.einsum("aij,aj,akj->aik", W, phase, W)


def _piecewise_blocks(schedule: PiecewiseSchedule, t, space, columns):
    X, ndiag = _mech_ops(space.dim_b)
    out = columns
    remaining = t
    for dur, w, W, g in zip(schedule.durations, schedule.omega, schedule.Omega, schedule.g):
        if remaining <= 0:
            break
        dt = min(dur, remaining)
        remaining -= dt
        if dt > 0:
            out = _segment_blocks(w, W, g, dt, space.dim_a, X, ndiag) @ out
    if remaining > 1e-12 * max(1.0, t):
        raise ValueError(f"t={t} exceeds schedule duration {schedule.duration}")
    return out


def _modulated_betas(schedule: ModulatedSchedule, t, n_steps, method):
    dt = t / n_steps
    starts = np.arange(n_steps) * dt

    def amp(times):
        return np.asarray(schedule.coupling(times), dtype=float) * np.exp(-1j * schedule.Omega * times)

    if method == "midpoint":
        return dt * amp(starts + 0.5 * dt)
    if method != "cf4":
        raise ValueError(f"unknown integrator {method!r}")
    c1 = amp(starts + _CF4_NODES[0] * dt)
    c2 = amp(starts + _CF4_NODES[1] * dt)
    betas = np.empty(2 * n_steps, dtype=np.complex128)
    betas[0::2] = dt * (_CF4_A2 * c1 + _CF4_A1 * c2)
    betas[1::2] = dt * (_CF4_A1 * c1 + _CF4_A2 * c2)
    return betas


def _modulated_blocks(schedule: ModulatedSchedule, t, space, columns, n_steps, method):
    X, ndiag = _mech_ops(space.dim_b)
    x, V = np.linalg.eigh(X)
    nvals = np.arange(space.dim_a, dtype=float)
    betas = _modulated_betas(schedule, t, n_steps, method)
    out = kernels.coupling_sweep(columns, nvals, x, V, betas)
    # back from the frame rotating with omega*n + Omega*N_b
    free = np.exp(-1j * t * (schedule.omega * nvals[:, None] + schedule.Omega * ndiag[None, :]))
    return out * free[:, :, None]


def _initial_steps(schedule, t, steps_per_period, min_steps):
    steps = min_steps
    if schedule.nu:
        steps = max(steps, math.ceil(steps_per_period * abs(schedule.nu) * t / (2 * math.pi)))
    # the free mechanical rotation is handled exactly; the coupling still
    # oscillates at Omega in the interaction frame
    steps = max(steps, math.ceil(steps_per_period * abs(schedule.Omega) * t / (2 * math.pi)))
    return steps


def _evolve_blocks(schedule, t, space, columns, tol, method, steps_per_period, min_steps, max_steps):
    """Return ``(blocks, n_steps)``; ``n_steps`` is 0 for exactly integrated schedules."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return columns.copy(), 0
    if isinstance(schedule, PiecewiseSchedule):
        return _piecewise_blocks(schedule, t, space, columns), 0
    if not isinstance(schedule, ModulatedSchedule):
        raise TypeError(f"unsupported schedule type {type(schedule).__name__}")
    if t > schedule.duration * (1 + 1e-12):
        raise ValueError(f"t={t} exceeds schedule duration {schedule.duration}")
    n = _initial_steps(schedule, t, steps_per_period, min_steps)
    previous = _modulated_blocks(schedule, t, space, columns, n, method)
    while True:
        n *= 2
        if n > max_steps:
            raise StepControlError(
                f"step-size control did not reach tol={tol:.1e} within {max_steps} steps")
        current = _modulated_blocks(schedule, t, space, columns, n, method)
        if np.max(np.abs(current - previous)) < tol:
            return current, n
        previous = current


def numeric_propagator(schedule, t: float, space: FockSpace, *, tol: float = STEP_TOL,
                       method: str = "cf4", steps_per_period: int = STEPS_PER_PERIOD,
                       min_steps: int = MIN_STEPS, max_steps: int = MAX_STEPS) -> np.ndarray:
    """Time-ordered propagator over ``[0, t]`` as a joint ``(AB, AB)`` matrix.

    Piecewise-constant schedules are integrated exactly, one spectral exponential
    per block and segment. For a :class:`ModulatedSchedule` the coupling is
    frozen on sub-steps in the frame rotating with ``omega*n + Omega*N_b``
    (``method='midpoint'`` freezes it at the midpoint, ``'cf4'`` uses the
    fourth-order two-exponential Gauss-point variant); the step count doubles
    until the result changes by less than ``tol`` in every matrix element.
    """
    eye = np.broadcast_to(np.eye(space.dim_b, dtype=np.complex128), (space.dim_a, space.dim_b, space.dim_b))
    blocks, _ = _evolve_blocks(schedule, t, space, np.array(eye), tol, method,
                               steps_per_period, min_steps, max_steps)
    return block_diag(blocks)


def propagate(schedule, psi0: StateVector, t: float, *, tol: float = STEP_TOL,
              tail_tol: float | None = DEFAULT_TAIL_TOL, method: str = "cf4",
              steps_per_period: int = STEPS_PER_PERIOD, min_steps: int = MIN_STEPS,
              max_steps: int = MAX_STEPS) -> StateVector:
    """Apply the time-ordered propagator to a joint state (cheaper than building it).

    The result is checked against the mechanical tail guard unless ``tail_tol``
    is None.
    """
    space = psi0.space
    columns = psi0.blocks()[:, :, None]
    blocks, _ = _evolve_blocks(schedule, t, space, columns, tol, method,
                               steps_per_period, min_steps, max_steps)
    state = StateVector(blocks[:, :, 0].reshape(-1), space.dims)
    if tail_tol is not None:
        # photon number is conserved, so only the mechanical truncation can leak
        check_tail(state, tail_tol, modes=("B",))
    return state
