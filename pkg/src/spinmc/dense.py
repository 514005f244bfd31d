"""Dense Lindblad integration: independent ground truth for small systems.

Integrates d/dt rho = -i[H, rho] + sum_A (A rho A+ - {A+A, rho}/2) with
fixed-step RK4 on the full 2^N x 2^N density matrix and extracts the
projector probabilities p_C = <C|rho|C> / 3^N over all 6^N configurations.
"""

from __future__ import annotations

import numpy as np

from .configspace import AXES, Configuration, ModelSpec, SINGLE_FAMILIES
from .opbasis import SIGMA, SIGMA_MINUS, SIGMA_PLUS, STATE_VECTORS

MAX_DENSE_SITES = 8
HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8


def _embed(op, sites, n: int) -> np.ndarray:
    """Tensor-embed a single-site operator (or a pair of them) into N qubits."""
    if len(sites) == 2:
        a, b = sites
        return _embed(op[0], (a,), n) @ _embed(op[1], (b,), n)
    out = np.ones((1, 1), dtype=complex)
    for i in range(n):
        out = np.kron(out, op if i == sites[0] else np.eye(2))
    return out


def hamiltonian_matrix(spec: ModelSpec) -> np.ndarray:
    n = spec.lattice.n_sites
    H = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for site, h in spec.local_fields.items():
        for ia, a in enumerate(AXES):
            if h[ia] != 0.0:
                H += h[ia] * _embed(SIGMA[a], (site,), n)
    for link, J in spec.pair_couplings.items():
        J = np.asarray(J, dtype=float)
        for ia, a in enumerate(AXES):
            for ib, b in enumerate(AXES):
                if J[ia, ib] != 0.0:
                    H += J[ia, ib] * _embed((SIGMA[a], SIGMA[b]), link, n)
    return H


def jump_operators(spec: ModelSpec):
    """(operator, weight) list, with the global gamma prefactor applied."""
    n = spec.lattice.n_sites
    single_ops = dict(zip("xyz", (SIGMA["x"], SIGMA["y"], SIGMA["z"])))
    single_ops["+"] = SIGMA_PLUS
    single_ops["-"] = SIGMA_MINUS
    out = []
    for site, fams in spec.local_noise.items():
        for fam in SINGLE_FAMILIES:
            w = fams.get(fam, 0.0)
            if w != 0.0:
                out.append((_embed(single_ops[fam], (site,), n),
                            spec.gamma * w))
    for link, fams in spec.pair_noise.items():
        for (a, b), w in fams.items():
            if w != 0.0:
                out.append((_embed((SIGMA[a], SIGMA[b]), link, n),
                            spec.gamma * w))
    return out


class DenseGenerator:
    """Precomputed dense Lindbladian for one model."""

    def __init__(self, spec: ModelSpec):
        if spec.lattice.n_sites > MAX_DENSE_SITES:
            raise ValueError(f"dense oracle limited to N <= {MAX_DENSE_SITES}")
        self.spec = spec
        self.n = spec.lattice.n_sites
        self.H = hamiltonian_matrix(spec)
        self.jumps = jump_operators(spec)
        # anticommutator part folded into an effective non-Hermitian drift
        K = -1j * self.H
        for A, w in self.jumps:
            K = K - 0.5 * w * (A.conj().T @ A)
        self.K = K

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = self.K @ rho + rho @ self.K.conj().T
        for A, w in self.jumps:
            out += w * (A @ rho @ A.conj().T)
        return out

    def apply_dual(self, X: np.ndarray) -> np.ndarray:
        out = 1j * (self.H @ X - X @ self.H)
        for A, w in self.jumps:
            Ad = A.conj().T
            out += w * (Ad @ X @ A - 0.5 * (Ad @ A @ X + X @ Ad @ A))
        return out

    def rate_scale(self) -> float:
        s = np.abs(self.H).sum(axis=1).max() if self.H.size else 0.0
        for A, w in self.jumps:
            s += w * np.abs(A.conj().T @ A).sum(axis=1).max()
        return max(s, 1.0)


def check_state(rho: np.ndarray) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > HERM_TOL:
        raise ValueError("density matrix lost Hermiticity")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL or abs(np.trace(rho).imag) > TRACE_TOL:
        raise ValueError("density matrix lost unit trace")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -PSD_TOL:
        raise ValueError(f"density matrix not PSD: min eigenvalue {w.min():.3g}")


def integrate(spec: ModelSpec, rho0: np.ndarray, grid, dt: float | None = None,
              check: bool = True):
    """RK4-integrate rho through the sorted grid times; returns list of rho."""
    gen = DenseGenerator(spec)
    if dt is None:
        dt = 1e-3 / gen.rate_scale()
    grid = np.asarray(grid, dtype=float)
    if grid.size and (np.any(np.diff(grid) <= 0) or grid[0] < 0):
        raise ValueError("grid must be strictly increasing and non-negative")
    rho = np.array(rho0, dtype=complex)
    check_state(rho)
    out = []
    t = 0.0
    for tg in grid:
        span = tg - t
        if span > 0:
            steps = max(1, int(np.ceil(span / dt)))
            h = span / steps
            for _ in range(steps):
                k1 = gen.apply(rho)
                k2 = gen.apply(rho + 0.5 * h * k1)
                k3 = gen.apply(rho + 0.5 * h * k2)
                k4 = gen.apply(rho + h * k3)
                rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = tg
        if check:
            check_state(rho)
        out.append(rho.copy())
    return out


def projector_probabilities(rho: np.ndarray, n: int) -> np.ndarray:
    """p_C over all 6^n configurations, ordered by configuration key.

    Contracts one site at a time against the 6 per-site basis states, so
    the cost is 6^n at the end rather than 6^n full traces.
    """
    if rho.shape != (2 ** n, 2 ** n):
        raise ValueError("density matrix / site count mismatch")
    S = STATE_VECTORS  # 6 x 2, rows in state-index order
    m, a = 1, 2 ** n
    T = rho.reshape((1, a, a))
    for _ in range(n):
        a //= 2
        T = T.reshape((m, 2, a, 2, a))
        T = np.einsum("sq,sp,uqrpt->usrt", S.conj(), S, T)
        m *= 6
        T = T.reshape((m, a, a))
    return T.real.reshape(m) / 3 ** n


def observable_expectation(rho: np.ndarray, sites, axes, n: int) -> float:
    op = np.eye(2 ** n, dtype=complex)
    for s, a in zip(sites, axes):
        op = op @ _embed(SIGMA[AXES[a] if isinstance(a, int) else a],
                         (s,), n)
    return float(np.real(np.trace(rho @ op)))


def config_projector(config: Configuration) -> np.ndarray:
    """Rank-1 projector onto the product state of one configuration."""
    v = np.ones(1, dtype=complex)
    for idx in config.indices():
        v = np.kron(v, STATE_VECTORS[idx])
    return np.outer(v, v.conj())


def dual_generator_action(spec: ModelSpec, config: Configuration) -> np.ndarray:
    """Dense dual action L*(P_C) for one configuration."""
    return DenseGenerator(spec).apply_dual(config_projector(config))


def product_state(config: Configuration) -> np.ndarray:
    """Pure density matrix |C><C|."""
    return config_projector(config)


def bell_pair_state(n_sites: int, pairs, phases, base=None) -> np.ndarray:
    """Density matrix of phase-shifted Bell pairs (unpaired sites from base)."""
    if base is None:
        base = [4] * n_sites  # (+z)
    site_vecs = [STATE_VECTORS[base[i]].astype(complex)
                 for i in range(n_sites)]
    psi = np.zeros(2 ** n_sites, dtype=complex)
    # sum over the 2^{n_pairs} up/down branch products
    paired = {}
    for k, (j, l) in enumerate(pairs):
        paired[j] = (k, 0)
        paired[l] = (k, 1)
    up = np.array([1.0, 0.0], dtype=complex)
    dn = np.array([0.0, 1.0], dtype=complex)
    K = len(pairs)
    for branch in range(2 ** K):
        amp = 1.0 + 0.0j
        vec = np.ones(1, dtype=complex)
        for i in range(n_sites):
            if i in paired:
                k, _pos = paired[i]
                bit = (branch >> k) & 1
                vec = np.kron(vec, dn if bit else up)
            else:
                vec = np.kron(vec, site_vecs[i])
        for k in range(K):
            if (branch >> k) & 1:
                amp *= np.exp(1j * phases[k])
        psi = psi + amp * vec
    psi /= np.sqrt(2.0 ** K)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
