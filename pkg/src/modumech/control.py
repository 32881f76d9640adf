"""Minimum-time synthesis of the Kerr unitary ``V = exp(i pi n^2 / 2)``.

The coupling ``g`` and mechanical frequency ``Omega`` are piecewise constant on
``N`` equal segments of ``[0, tau]``. The figure of merit is the pure-state
fidelity ``F = |<V psi0|U(tau) psi0>|`` with the mechanics starting (and
required to end) in vacuum; ``epsilon = 1 - F``.

The LC frequency is set to zero (rotating frame of the LC mode) in both the
target and the dynamics.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .dynamics import _mech_ops
from .errors import DimensionError
from .hilbert import FockSpace, StateVector, basis_state, check_tail, product_state

log = logging.getLogger(__name__)

__all__ = [
    "ControlSchedule",
    "OptimizationConfig",
    "OptimizationResult",
    "ScanRow",
    "flagship_initial_state",
    "target_state",
    "objective",
    "gradient",
    "fidelity_and_gradient",
    "optimize",
    "tau_scan",
]


@dataclass(frozen=True)
class ControlSchedule:
    """``N`` uniform segments of duration ``tau/N`` with controls ``(g_k, Omega_k)``."""

    g_values: np.ndarray
    Omega_values: np.ndarray
    tau: float
    g_max: float

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.g_values, dtype=float)).copy()
        Om = np.atleast_1d(np.asarray(self.Omega_values, dtype=float)).copy()
        if g.ndim != 1 or g.shape != Om.shape or g.size < 1:
            raise ValueError("g_values and Omega_values must be equal-length 1-d arrays")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if not self.g_max > 0:
            raise ValueError(f"g_max must be > 0, got {self.g_max}")
        if np.any(g < 0) or np.any(g > self.g_max * (1 + 1e-12)):
            raise ValueError("g_values must lie in [0, g_max]")
        g.flags.writeable = False
        Om.flags.writeable = False
        object.__setattr__(self, "g_values", g)
        object.__setattr__(self, "Omega_values", Om)

    @property
    def N(self) -> int:
        return self.g_values.size

    @property
    def segment_duration(self) -> float:
        return self.tau / self.N


@dataclass(frozen=True)
class OptimizationConfig:
    N: int = 10
    tau: float = 1.0
    g_max: float = math.pi
    Omega_bounds: tuple[float, float] | None = None  # default (0, 10 g_max)
    Omega_init_max: float | None = None  # default 3 g_max
    restarts: int = 20
    seed: int = 0
    max_iters: int = 3000
    tol: float = 1e-16  # L-BFGS-B ftol (relative decrease), at machine precision
    momentum_steps: int = 60
    dim_a: int = 3
    dim_b: int = 30
    omega: float = 0.0
    lc_amplitudes: tuple[complex, ...] | None = None  # default uniform over dim_a levels
    target: str = "kerr"  # or "identity"
    n_jobs: int = 1

    def resolved_bounds(self) -> tuple[float, float]:
        if self.Omega_bounds is None:
            return (0.0, 10.0 * self.g_max)
        lo, hi = self.Omega_bounds
        if not lo <= hi:
            raise ValueError(f"bad Omega_bounds {self.Omega_bounds}")
        return (float(lo), float(hi))

    def resolved_init_max(self) -> float:
        lo, hi = self.resolved_bounds()
        top = 3.0 * self.g_max if self.Omega_init_max is None else self.Omega_init_max
        return min(max(top, lo), hi)


@dataclass(frozen=True)
class OptimizationResult:
    schedule: ControlSchedule
    fidelity: float
    epsilon: float
    iterations: int
    restarts_used: int
    seed: int
    converged: bool
    restart_epsilons: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class ScanRow:
    tau: float
    epsilon: dict  # N -> best epsilon
    best: float
    monotone_violation: bool


def flagship_initial_state(dim_a: int = 3, dim_b: int = 30, amplitudes=None) -> StateVector:
    """LC superposition (uniform over ``dim_a`` levels by default) times mechanical vacuum."""
    amps = np.ones(dim_a) if amplitudes is None else np.asarray(amplitudes, dtype=complex)
    if amps.size != dim_a:
        raise DimensionError(f"{amps.size} LC amplitudes for dim_a={dim_a}")
    lc = StateVector.from_amplitudes(amps, (dim_a,))
    return product_state(lc, basis_state(0, dim_b))


def target_state(psi0_lc: StateVector, space: FockSpace) -> StateVector:
    """``(V x 1)(psi0_lc x |0>_b)`` with ``V|n> = exp(i pi n^2/2)|n>``."""
    if psi0_lc.dims != (space.dim_a,):
        raise DimensionError(f"LC state dims {psi0_lc.dims} do not match dim_a={space.dim_a}")
    n = np.arange(space.dim_a)
    lc = StateVector(psi0_lc.amplitudes * np.exp(0.5j * math.pi * n ** 2), (space.dim_a,))
    return product_state(lc, basis_state(0, space.dim_b))


def _kerr_target(psi0: StateVector) -> StateVector:
    blocks = psi0.blocks()
    n = np.arange(psi0.dims[0])
    return StateVector((blocks * np.exp(0.5j * math.pi * n ** 2)[:, None]).reshape(-1), psi0.dims)


def _sweep(schedule: ControlSchedule, psi0: StateVector, target: StateVector, omega: float):
    if psi0.dims != target.dims or len(psi0.dims) != 2:
        raise DimensionError("psi0 and target must be joint states on the same space")
    dim_a, dim_b = psi0.dims
    X, ndiag = _mech_ops(dim_b)
    return kernels.grape_sweep(
        schedule.g_values, schedule.Omega_values, schedule.segment_duration, omega,
        np.arange(dim_a, dtype=float), psi0.blocks(), target.blocks(), X, ndiag,
    )


def fidelity_and_gradient(schedule, psi0, target, omega=0.0):
    """``(F, dF)`` with ``dF = [dF/dg_1..dF/dg_N, dF/dOmega_1..dF/dOmega_N]``."""
    z, dg, dO = _sweep(schedule, psi0, target, omega)
    F = abs(z)
    if F < 1e-300:
        return 0.0, np.zeros(2 * schedule.N)
    grad = np.concatenate([(np.conj(z) * dg).real, (np.conj(z) * dO).real]) / F
    return min(F, 1.0), grad


def objective(schedule: ControlSchedule, psi0: StateVector, target: StateVector,
              omega: float = 0.0, tail_tol: float | None = None) -> float:
    """Fidelity ``|<target|U_N ... U_1|psi0>|``.

    With ``tail_tol`` set, the propagated state is checked against the
    mechanical tail guard (costs one extra forward pass).
    """
    if schedule.tau == 0:
        return float(min(1.0, abs(np.vdot(target.amplitudes, psi0.amplitudes))))
    if tail_tol is not None:
        from .dynamics import PiecewiseSchedule, propagate
        dt = schedule.segment_duration
        ps = PiecewiseSchedule(np.full(schedule.N, dt), omega, schedule.Omega_values, schedule.g_values)
        final = propagate(ps, psi0, schedule.tau, tail_tol=None)
        check_tail(final, tail_tol, modes=("B",))
    return fidelity_and_gradient(schedule, psi0, target, omega)[0]


def gradient(schedule: ControlSchedule, psi0: StateVector, target: StateVector,
             omega: float = 0.0) -> np.ndarray:
    return fidelity_and_gradient(schedule, psi0, target, omega)[1]


# --- optimizer -------------------------------------------------------------------


def _problem(config: OptimizationConfig):
    psi0 = flagship_initial_state(config.dim_a, config.dim_b, config.lc_amplitudes)
    if config.target == "kerr":
        target = _kerr_target(psi0)
    elif config.target == "identity":
        target = psi0
    else:
        raise ValueError(f"unknown target {config.target!r}")
    return psi0, target


def _momentum_descent(fun, x, lower, upper, steps, lr=0.05, beta1=0.9, beta2=0.999):
    """Projected gradient descent with adaptive per-coordinate steps and momentum."""
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    scale = upper - lower
    for k in range(1, steps + 1):
        _, grad = fun(x)
        grad = grad * scale
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad ** 2
        step = lr * (m / (1 - beta1 ** k)) / (np.sqrt(v / (1 - beta2 ** k)) + 1e-12)
        x = np.clip(x - step * scale, lower, upper)
    return x


def _single_restart(config: OptimizationConfig, seed_seq: np.random.SeedSequence):
    psi0, target = _problem(config)
    N, tau, gmax = config.N, config.tau, config.g_max
    lo, hi = config.resolved_bounds()
    rng = np.random.default_rng(seed_seq)
    x0 = np.concatenate([rng.uniform(0.0, gmax, N), rng.uniform(lo, config.resolved_init_max(), N)])
    lower = np.concatenate([np.zeros(N), np.full(N, lo)])
    upper = np.concatenate([np.full(N, gmax), np.full(N, hi)])

    def fun(x):
        sched = ControlSchedule(np.clip(x[:N], 0, gmax), x[N:], tau, gmax)
        F, dF = fidelity_and_gradient(sched, psi0, target, config.omega)
        return 1.0 - F, -dF

    x = _momentum_descent(fun, x0, lower, upper, config.momentum_steps)
    res = minimize(fun, x, jac=True, method="L-BFGS-B", bounds=list(zip(lower, upper)),
                   options={"maxiter": config.max_iters, "ftol": config.tol, "gtol": 1e-12})
    x = np.clip(res.x, lower, upper)
    eps = float(fun(x)[0])
    return eps, x, int(res.nit) + config.momentum_steps, bool(res.success)


def optimize(config: OptimizationConfig) -> OptimizationResult:
    """Best of ``config.restarts`` independent local optimizations (deterministic per seed)."""
    if config.N < 1 or config.restarts < 1:
        raise ValueError("N and restarts must be >= 1")
    if config.tau == 0:
        psi0, target = _problem(config)
        sched = ControlSchedule(np.zeros(config.N), np.zeros(config.N), 0.0, config.g_max)
        F = objective(sched, psi0, target, config.omega)
        return OptimizationResult(sched, F, 1.0 - F, 0, 0, config.seed, True, (1.0 - F,))
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            runs = list(pool.map(_single_restart, [config] * config.restarts, seeds))
    else:
        runs = [_single_restart(config, s) for s in seeds]
    # ordered by epsilon, ties broken by restart index
    best = min(range(len(runs)), key=lambda i: (runs[i][0], i))
    eps, x, nit, ok = runs[best]
    N = config.N
    sched = ControlSchedule(x[:N], x[N:], config.tau, config.g_max)
    log.debug("tau=%g N=%d best eps=%.3e (restart %d)", config.tau, N, eps, best)
    return OptimizationResult(
        schedule=sched,
        fidelity=1.0 - eps,
        epsilon=eps,
        iterations=nit,
        restarts_used=len(runs),
        seed=config.seed,
        converged=ok,
        restart_epsilons=tuple(r[0] for r in runs),
    )


def tau_scan(config: OptimizationConfig, tau_list, segment_counts=(10, 15)) -> list[ScanRow]:
    """Best epsilon per ``tau`` for each segment count, sorted by ``tau``.

    A row is flagged when its best epsilon exceeds that of a shorter duration,
    which can only be optimizer noise.
    """
    rows = []
    for tau in sorted(float(t) for t in tau_list):
        eps = {}
        for N in segment_counts:
            eps[int(N)] = optimize(replace(config, tau=tau, N=int(N))).epsilon
        rows.append(ScanRow(tau, eps, min(eps.values()), False))
    running = math.inf
    for i, row in enumerate(rows):
        if row.best > running * (1 + 1e-6) + 1e-12:
            rows[i] = replace(row, monotone_violation=True)
        running = min(running, row.best)
    return rows
