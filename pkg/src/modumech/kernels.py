"""Hot inner loops, each with a numba and a pure-numpy implementation.

Both kernels exploit the block structure of the optomechanical Hamiltonian:
photon number ``n`` of the LC mode is conserved, so the joint state is stored
as an array ``psi[n_a, n_b, ...]`` and every propagator acts block by block
on the mechanical index.

The implementation used by :func:`coupling_sweep` and :func:`grape_sweep` is
chosen from ``MODUMECH_BACKEND`` (``numba`` or ``numpy``) at import time; the
``*_numpy`` and ``*_numba`` functions can always be called directly.
"""
import numpy as np

from ._backend import HAS_NUMBA, requested_backend

__all__ = [
    "BACKEND",
    "coupling_sweep",
    "coupling_sweep_numpy",
    "grape_sweep",
    "grape_sweep_numpy",
]


def coupling_sweep_numpy(psi, nvals, x, V, betas):
    """Apply ``prod_k exp(-i n (beta_k b + conj(beta_k) b^dag))`` to ``psi``.

    Parameters
    ----------
    psi : complex array, shape (A, B, K)
        ``K`` column vectors, blocked by LC photon number.
    nvals : float array, shape (A,)
        Photon number of each block.
    x, V : eigen-decomposition ``b + b^dag = V diag(x) V^T`` of the truncated
        mechanical coupling operator.
    betas : complex array, shape (M,)
        Generator amplitudes, applied in order (``betas[0]`` acts first).
    """
    psi = np.array(psi, dtype=np.complex128, copy=True)
    levels = np.arange(x.shape[0])
    Vt = V.T
    for beta in betas:
        mag = abs(beta)
        if mag == 0.0:
            continue
        rot = np.exp(1j * np.angle(beta) * levels)[None, :, None]
        psi *= rot
        y = Vt @ psi
        y *= np.exp(-1j * mag * np.outer(nvals, x))[:, :, None]
        psi = V @ y
        psi *= rot.conj()
    return psi


def _divided_exp(lam, dt):
    # divided differences of exp(-i dt lambda); stable at degeneracies
    mean = 0.5 * (lam[..., :, None] + lam[..., None, :])
    half = 0.5 * dt * (lam[..., :, None] - lam[..., None, :])
    return -1j * dt * np.exp(-1j * dt * mean) * np.sinc(half / np.pi)


def grape_sweep_numpy(g, Om, dt, omega, nvals, psi0, target, X, ndiag):
    """Overlap ``z = <target|U_N...U_1|psi0>`` and its exact control derivatives.

    Segment ``k`` has block Hamiltonians
    ``H_{k,n} = omega*n + Om[k]*N_b + g[k]*n*(b + b^dag)`` applied for ``dt``.
    Derivatives of each segment exponential use the Daleckii-Krein formula in
    the eigenbasis, so they are exact up to round-off.

    Returns
    -------
    z : complex
    dz_dg, dz_dOm : complex arrays, shape (N,)
    """
    nseg = g.shape[0]
    A, B = psi0.shape
    phis = np.empty((nseg + 1, A, B), dtype=np.complex128)
    phis[0] = psi0
    Ws = np.empty((nseg, A, B, B))
    lams = np.empty((nseg, A, B))
    block_phase = np.exp(-1j * omega * nvals * dt)
    N_op = np.diag(ndiag)
    for k in range(nseg):
        H = Om[k] * N_op[None] + g[k] * nvals[:, None, None] * X[None]
        lam, W = np.linalg.eigh(H)
        Ws[k], lams[k] = W, lam
        c = np.einsum("aji,aj->ai", W, phis[k])
        c *= np.exp(-1j * dt * lam) * block_phase[:, None]
        phis[k + 1] = np.einsum("aij,aj->ai", W, c)
    z = np.vdot(target, phis[-1])

    dz_dg = np.empty(nseg, dtype=np.complex128)
    dz_dOm = np.empty(nseg, dtype=np.complex128)
    chi = np.array(target, dtype=np.complex128)
    for k in range(nseg - 1, -1, -1):
        W, lam = Ws[k], lams[k]
        cphi = np.einsum("aji,aj->ai", W, phis[k])
        cchi = np.einsum("aji,aj->ai", W, chi)
        gam = _divided_exp(lam, dt) * block_phase[:, None, None]
        Mg = nvals[:, None, None] * np.einsum("aji,jk,akl->ail", W, X, W)
        Mo = np.einsum("aji,j,ajl->ail", W, ndiag, W)
        dz_dg[k] = np.einsum("ai,aij,aj->", cchi.conj(), gam * Mg, cphi)
        dz_dOm[k] = np.einsum("ai,aij,aj->", cchi.conj(), gam * Mo, cphi)
        cchi *= np.exp(1j * dt * lam) * block_phase.conj()[:, None]
        chi = np.einsum("aij,aj->ai", W, cchi)
    return z, dz_dg, dz_dOm


if HAS_NUMBA:
    from numba import njit

    @njit(cache=True, fastmath=True)
    def coupling_sweep_numba(psi, nvals, x, V, betas):
        A, B, K = psi.shape
        out = psi.copy()
        Vt = np.ascontiguousarray(V.T)
        w = np.empty(B, dtype=np.complex128)
        tmp = np.empty(B, dtype=np.complex128)
        rot = np.empty(B, dtype=np.complex128)
        kick = np.empty(B, dtype=np.complex128)
        for m in range(betas.shape[0]):
            beta = betas[m]
            mag = abs(beta)
            if mag == 0.0:
                continue
            ang = np.angle(beta)
            for j in range(B):
                rot[j] = np.exp(1j * ang * j)
            for a in range(A):
                nm = nvals[a] * mag
                if nm == 0.0:
                    continue
                for j in range(B):
                    kick[j] = np.exp(-1j * nm * x[j])
                for k in range(K):
                    for i in range(B):
                        w[i] = rot[i] * out[a, i, k]
                    for j in range(B):
                        acc = 0j
                        for i in range(B):
                            acc += Vt[j, i] * w[i]
                        tmp[j] = acc * kick[j]
                    for i in range(B):
                        acc = 0j
                        for j in range(B):
                            acc += V[i, j] * tmp[j]
                        out[a, i, k] = acc * np.conj(rot[i])
        return out

    @njit(cache=True)
    def _sinc(u):
        if abs(u) < 1e-8:
            return 1.0 - u * u / 6.0
        return np.sin(u) / u

    @njit(cache=True)
    def grape_sweep_numba(g, Om, dt, omega, nvals, psi0, target, X, ndiag):
        nseg = g.shape[0]
        A, B = psi0.shape
        phis = np.empty((nseg + 1, A, B), dtype=np.complex128)
        phis[0] = psi0
        Ws = np.empty((nseg, A, B, B))
        lams = np.empty((nseg, A, B))
        c = np.empty(B, dtype=np.complex128)
        for k in range(nseg):
            for a in range(A):
                H = g[k] * nvals[a] * X
                for j in range(B):
                    H[j, j] += Om[k] * ndiag[j]
                lam, W = np.linalg.eigh(H)
                Ws[k, a] = W
                lams[k, a] = lam
                ph = np.exp(-1j * omega * nvals[a] * dt)
                for i in range(B):
                    acc = 0j
                    for j in range(B):
                        acc += W[j, i] * phis[k, a, j]
                    c[i] = acc * np.exp(-1j * dt * lam[i]) * ph
                for i in range(B):
                    acc = 0j
                    for j in range(B):
                        acc += W[i, j] * c[j]
                    phis[k + 1, a, i] = acc
        z = 0j
        for a in range(A):
            for i in range(B):
                z += np.conj(target[a, i]) * phis[nseg, a, i]

        dz_dg = np.zeros(nseg, dtype=np.complex128)
        dz_dOm = np.zeros(nseg, dtype=np.complex128)
        chi = target.astype(np.complex128)
        cphi = np.empty(B, dtype=np.complex128)
        cchi = np.empty(B, dtype=np.complex128)
        for k in range(nseg - 1, -1, -1):
            for a in range(A):
                W = np.ascontiguousarray(Ws[k, a])
                lam = lams[k, a]
                ph = np.exp(-1j * omega * nvals[a] * dt)
                for i in range(B):
                    accp = 0j
                    accc = 0j
                    for j in range(B):
                        accp += W[j, i] * phis[k, a, j]
                        accc += W[j, i] * chi[a, j]
                    cphi[i] = accp
                    cchi[i] = accc
                Mg = nvals[a] * (W.T @ (X @ W))
                sg = 0j
                so = 0j
                for i in range(B):
                    for j in range(B):
                        gam = (-1j * dt * np.exp(-0.5j * dt * (lam[i] + lam[j]))
                               * _sinc(0.5 * dt * (lam[i] - lam[j])) * ph)
                        mo = 0.0
                        for l in range(B):
                            mo += W[l, i] * ndiag[l] * W[l, j]
                        w = np.conj(cchi[i]) * gam * cphi[j]
                        sg += w * Mg[i, j]
                        so += w * mo
                dz_dg[k] += sg
                dz_dOm[k] += so
                for i in range(B):
                    cchi[i] *= np.exp(1j * dt * lam[i]) * np.conj(ph)
                for i in range(B):
                    acc = 0j
                    for j in range(B):
                        acc += W[i, j] * cchi[j]
                    chi[a, i] = acc
        return z, dz_dg, dz_dOm

    __all__ += ["coupling_sweep_numba", "grape_sweep_numba"]


BACKEND = requested_backend()

if BACKEND == "numba":
    _coupling_impl = coupling_sweep_numba
    _grape_impl = grape_sweep_numba
else:
    _coupling_impl = coupling_sweep_numpy
    _grape_impl = grape_sweep_numpy


def coupling_sweep(psi, nvals, x, V, betas):
    """Dispatching front end for the coupling sweep (see the numpy version)."""
    return _coupling_impl(
        np.ascontiguousarray(psi, dtype=np.complex128),
        np.ascontiguousarray(nvals, dtype=np.float64),
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(V, dtype=np.float64),
        np.ascontiguousarray(betas, dtype=np.complex128),
    )


def grape_sweep(g, Om, dt, omega, nvals, psi0, target, X, ndiag):
    """Dispatching front end for the GRAPE forward/backward sweep."""
    return _grape_impl(
        np.ascontiguousarray(g, dtype=np.float64),
        np.ascontiguousarray(Om, dtype=np.float64),
        float(dt),
        float(omega),
        np.ascontiguousarray(nvals, dtype=np.float64),
        np.ascontiguousarray(psi0, dtype=np.complex128),
        np.ascontiguousarray(target, dtype=np.complex128),
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(ndiag, dtype=np.float64),
    )
