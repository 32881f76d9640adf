"""Truncated Fock spaces for the LC mode (``a``) and the mechanics (``b``).

Joint basis ordering is row-major in photon number::

    index = n_a * dim_b + n_b

so ``np.kron(op_a, op_b)`` acts as ``op_a`` on the LC mode and ``op_b`` on the
mechanics. Operators are plain dense ``numpy`` arrays; states are wrapped in
:class:`StateVector`, which enforces unit norm and (optionally) the truncation
tail guard.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DimensionError, TruncationError

DEFAULT_TAIL_TOL = 1e-8
NORM_TOL = 1e-10

Mode = Literal["A", "B"]

__all__ = [
    "DEFAULT_TAIL_TOL",
    "FockSpace",
    "StateVector",
    "annihilator",
    "number",
    "quadratures",
    "embed",
    "basis_state",
    "coherent_amplitudes",
    "coherent_state",
    "cat_state",
    "product_state",
    "fidelity",
    "fidelity_with_pure",
    "reduced_density_matrix",
    "entanglement_entropy",
    "check_tail",
    "expm_hermitian",
]


@dataclass(frozen=True)
class FockSpace:
    """Truncated two-mode space: ``dim_a`` LC levels times ``dim_b`` mechanical levels."""

    dim_a: int
    dim_b: int

    def __post_init__(self):
        for name in ("dim_a", "dim_b"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DimensionError(f"{name} must be a positive integer, got {value!r}")

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dim_a, self.dim_b)

    def index(self, n_a: int, n_b: int) -> int:
        if not (0 <= n_a < self.dim_a and 0 <= n_b < self.dim_b):
            raise DimensionError(f"level ({n_a}, {n_b}) outside space {self.dims}")
        return n_a * self.dim_b + n_b

    def levels(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.dim:
            raise DimensionError(f"index {index} outside joint dimension {self.dim}")
        return divmod(index, self.dim_b)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state on a single mode (``dims=(d,)``) or both modes.

    The amplitude array is stored flat and made read-only.
    """

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if len(dims) not in (1, 2) or any(d < 1 for d in dims):
            raise DimensionError(f"bad dims {dims!r}")
        if amps.size != int(np.prod(dims)):
            raise DimensionError(f"{amps.size} amplitudes do not fit dims {dims}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm = {norm:.15g})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_amplitudes(cls, amplitudes, dims=None, normalize=True, tail_tol=None):
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        dims = (amps.size,) if dims is None else tuple(dims)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        state = cls(amps, dims)
        if tail_tol is not None:
            check_tail(state, tail_tol)
        return state

    @property
    def space(self) -> FockSpace:
        if len(self.dims) != 2:
            raise DimensionError("single-mode state has no joint FockSpace")
        return FockSpace(*self.dims)

    def blocks(self) -> np.ndarray:
        """Amplitudes reshaped to ``(dim_a, dim_b)`` (a copy)."""
        return self.amplitudes.reshape(self.dims).copy()

    def populations(self, mode: Mode = "A") -> np.ndarray:
        """Marginal Fock-level populations of one mode."""
        probs = np.abs(self.amplitudes.reshape(self.dims)) ** 2
        if len(self.dims) == 1:
            return probs
        return probs.sum(axis=1) if mode == "A" else probs.sum(axis=0)

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))


def check_tail(state: StateVector, tol: float = DEFAULT_TAIL_TOL, modes=None) -> float:
    """Raise :class:`TruncationError` if a mode's top level holds more than ``tol``.

    ``modes`` defaults to every mode of the state. Returns the largest tail
    population found among the checked modes.
    """
    if modes is None:
        modes = ("A",) if len(state.dims) == 1 else ("A", "B")
    worst = 0.0
    for mode in modes:
        tail = float(state.populations(mode)[-1])
        worst = max(worst, tail)
        if tol is not None and tail > tol:
            raise TruncationError(
                f"mode {mode}: population {tail:.3e} in top Fock level exceeds tail tolerance {tol:.1e}",
                tail_mass=tail,
                mode=mode,
            )
    return worst


def _check_dim(dim, minimum=1):
    if int(dim) != dim or dim < minimum:
        raise DimensionError(f"dimension must be an integer >= {minimum}, got {dim!r}")
    return int(dim)


def annihilator(dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(np.complex128)


def number(dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(np.complex128)


def quadratures(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Dimensionless ``x = (b + b^dag)/sqrt(2)`` and ``p = -i(b - b^dag)/sqrt(2)``."""
    b = annihilator(_check_dim(dim, 2))
    bd = b.conj().T
    return (b + bd) / np.sqrt(2), -1j * (b - bd) / np.sqrt(2)


def embed(op: np.ndarray, which_mode: Mode, space: FockSpace) -> np.ndarray:
    """Tensor ``op`` with the identity on the other mode."""
    op = np.asarray(op)
    if which_mode == "A":
        if op.shape != (space.dim_a, space.dim_a):
            raise DimensionError(f"operator shape {op.shape} does not match dim_a={space.dim_a}")
        return np.kron(op, np.eye(space.dim_b))
    if which_mode == "B":
        if op.shape != (space.dim_b, space.dim_b):
            raise DimensionError(f"operator shape {op.shape} does not match dim_b={space.dim_b}")
        return np.kron(np.eye(space.dim_a), op)
    raise ValueError(f"which_mode must be 'A' or 'B', got {which_mode!r}")


def expm_hermitian(H: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(-i H t)`` for Hermitian ``H`` via spectral decomposition (exactly unitary)."""
    lam, W = np.linalg.eigh(H)
    return (W * np.exp(-1j * t * lam)) @ W.conj().T


def basis_state(levels: int | Sequence[int], dims: int | Sequence[int]) -> StateVector:
    dims = (dims,) if np.isscalar(dims) else tuple(dims)
    levels = (levels,) if np.isscalar(levels) else tuple(levels)
    if len(levels) != len(dims):
        raise DimensionError("levels and dims have different lengths")
    amps = np.zeros(dims, dtype=np.complex128)
    amps[levels] = 1.0
    return StateVector(amps.reshape(-1), dims)


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Untruncated-normalization amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)``, n < dim."""
    dim = _check_dim(dim)
    amps = np.empty(dim, dtype=np.complex128)
    amps[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return amps


def coherent_state(alpha: complex, dim: int, tail_tol: float | None = DEFAULT_TAIL_TOL) -> StateVector:
    """Coherent state renormalized on the retained ``dim`` levels."""
    return StateVector.from_amplitudes(coherent_amplitudes(alpha, dim), (dim,), tail_tol=tail_tol)


def cat_state(alpha: complex, dim: int, tail_tol: float | None = DEFAULT_TAIL_TOL) -> StateVector:
    """``(|alpha> - i|-alpha>)/norm`` built from the truncated coherent states."""
    plus = coherent_state(alpha, dim, tail_tol).amplitudes
    minus = coherent_state(-alpha, dim, tail_tol).amplitudes
    return StateVector.from_amplitudes(plus - 1j * minus, (dim,), tail_tol=tail_tol)


def product_state(psi_a: StateVector, psi_b: StateVector) -> StateVector:
    if len(psi_a.dims) != 1 or len(psi_b.dims) != 1:
        raise DimensionError("product_state expects two single-mode states")
    amps = np.kron(psi_a.amplitudes, psi_b.amplitudes)
    return StateVector.from_amplitudes(amps, (psi_a.dims[0], psi_b.dims[0]))


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """Pure-state fidelity ``|<psi|phi>|`` (not squared)."""
    if psi.dims != phi.dims:
        raise DimensionError(f"state dims differ: {psi.dims} vs {phi.dims}")
    return float(min(1.0, abs(np.vdot(psi.amplitudes, phi.amplitudes))))


def fidelity_with_pure(rho: np.ndarray, phi: StateVector) -> float:
    """``Tr sqrt(sqrt(s) rho sqrt(s))`` with ``s = |phi><phi|``, i.e. ``sqrt(<phi|rho|phi>)``."""
    if rho.shape != (phi.amplitudes.size,) * 2:
        raise DimensionError(f"density matrix {rho.shape} does not match state dims {phi.dims}")
    overlap = np.vdot(phi.amplitudes, rho @ phi.amplitudes).real
    return float(np.sqrt(min(1.0, max(0.0, overlap))))


def reduced_density_matrix(state: StateVector, keep: Mode = "A") -> np.ndarray:
    if len(state.dims) != 2:
        raise DimensionError("reduced_density_matrix needs a two-mode state")
    m = state.amplitudes.reshape(state.dims)
    return m @ m.conj().T if keep == "A" else m.T @ m.conj()


def entanglement_entropy(state: StateVector) -> float:
    """Von Neumann entropy (nats) of the LC reduced state."""
    w = np.linalg.eigvalsh(reduced_density_matrix(state, "A"))
    w = w[w > 1e-15]
    return max(0.0, float(-np.sum(w * np.log(w))))
