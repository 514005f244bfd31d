"""Gauge freedom of the transition-rate representation.

A gauge transformation is a q^k x q^k matrix L with L A = 0 (rows in the
null space of A^T) and zero column sums; adding it to a rate matrix leaves
the averaged dynamics unchanged.  This module enumerates a complete basis
of such matrices (dimension (q^k - 4^k)(q^k - 1): 10 for k=1, 700 for k=2),
provides the closed-form canonical gauges that push the negative weights of
Hamiltonian terms onto dissipator positions, and minimizes the negative
off-diagonal mass over the gauge orbit by linear programming.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .configspace import AXES
from .opbasis import LocalRateMatrix, ProjectorBasis, _axis, _eps, _sign, projector_basis
from .simplex import minimize_negative_mass

CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class GaugeBasis:
    k: int
    elements: np.ndarray          # (dim, q, q)
    dim: int
    _offdiag_cache: dict = field(default_factory=dict, repr=False)

    def offdiag_matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, G) with G[r, g] the off-diagonal entries of element g."""
        if "G" not in self._offdiag_cache:
            q = self.elements.shape[1]
            rows, cols = np.nonzero(~np.eye(q, dtype=bool))
            G = self.elements[:, rows, cols].T.copy()
            self._offdiag_cache.update(rows=rows, cols=cols, G=G)
        c = self._offdiag_cache
        return c["rows"], c["cols"], c["G"]


@dataclass(frozen=True)
class GaugeParam:
    lam: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.lam)):
            raise ValueError("gauge coefficients must be finite")


@lru_cache(maxsize=None)
def gauge_basis(k: int) -> GaugeBasis:
    """Complete basis of valid gauge matrices for k sites."""
    basis = projector_basis(k)
    return _gauge_basis_for(basis)


def _gauge_basis_for(basis: ProjectorBasis) -> GaugeBasis:
    A = basis.A
    q, p = A.shape
    # Orthonormal basis of null(A^T): rows of Vh with vanishing singular value.
    _, svals, Vh = np.linalg.svd(A.T, full_matrices=True)
    null_dim = q - np.sum(svals > 1e-10)
    N = Vh[q - null_dim:]
    if null_dim != q - p:
        raise AssertionError("unexpected null space dimension")
    elements = np.zeros(((q - p) * (q - 1), q, q))
    g = 0
    for r in range(q - p):
        for i in range(q - 1):
            elements[g, i] = N[r]
            elements[g, q - 1] = -N[r]
            g += 1
    out = GaugeBasis(basis.k, elements, g)
    flat = elements.reshape(g, q * q)
    if np.linalg.matrix_rank(flat) != g:
        raise AssertionError("gauge basis is rank deficient")
    return out


def gauge_matrix(basis: GaugeBasis, param: GaugeParam) -> np.ndarray:
    return np.tensordot(param.lam, basis.elements, axes=1)


def canonical_gauge_single(a: str) -> np.ndarray:
    """Closed-form 6x6 gauge for a single-site Hamiltonian term along axis a."""
    ai = AXES.index(a)
    L = np.zeros((6, 6))
    for C in range(6):
        al = _axis(C)
        for Cp in range(6):
            alp = _axis(Cp)
            L[C, Cp] = _eps(ai, al, alp) ** 2 - (ai != al) * (al == alp)
    return L


def canonical_gauge_pair(a: str, b: str) -> np.ndarray:
    """Closed-form 36x36 gauge for the pair Hamiltonian term sigma_a sigma_b."""
    ai, bi = AXES.index(a), AXES.index(b)

    def half(ai, bi, al, alp, be, bep, s2, s2p):
        t = ((_eps(ai, al, alp) ** 2 - (ai != al) * (al == alp))
             * (bi == bep) * (1 + (bi == be) * s2 * s2p))
        t += ((ai != al) * (al == alp)
              * ((bi == be) * (1 - 3 * (bi == bep)) + (bi == bep) - (be == bep)))
        return t

    L = np.zeros((36, 36))
    for C in range(36):
        s1, al = _sign(C // 6), _axis(C // 6)
        s2, be = _sign(C % 6), _axis(C % 6)
        for Cp in range(36):
            s1p, alp = _sign(Cp // 6), _axis(Cp // 6)
            s2p, bep = _sign(Cp % 6), _axis(Cp % 6)
            L[C, Cp] = 0.5 * (half(ai, bi, al, alp, be, bep, s2, s2p)
                              + half(bi, ai, be, bep, al, alp, s1, s1p))
    return L


def is_valid_gauge(L: np.ndarray, basis: ProjectorBasis, tol: float = 1e-12) -> bool:
    """Check L A = 0 and zero column sums."""
    return (np.max(np.abs(L @ basis.A)) <= tol
            and np.max(np.abs(L.sum(axis=0))) <= tol)


def _solve_highs(m: np.ndarray, G: np.ndarray) -> tuple[np.ndarray, float]:
    from scipy.optimize import linprog

    R, K = G.shape
    A_ub = np.hstack([-np.eye(R), -G])  # -t - G lam <= m  <=>  t + G lam >= -m
    c = np.concatenate([np.ones(R), np.zeros(K)])
    bounds = [(0, None)] * R + [(None, None)] * K
    res = linprog(c, A_ub=A_ub, b_ub=m, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"gauge LP failed: {res.message}")
    lam = res.x[R:]
    t = np.maximum(0.0, -(m + G @ lam))
    return lam, float(t.sum())


def optimize_gauge(M: LocalRateMatrix, basis: GaugeBasis | None = None,
                   backend: str = "auto",
                   ) -> tuple[GaugeParam, LocalRateMatrix, float]:
    """Minimize the negative off-diagonal mass of M over the gauge orbit.

    Returns (lambda, gauged matrix, objective).  The objective is the exact
    LP optimum of sum_{C != C'} max(0, -[M + Lambda(lambda)]_{CC'}); entries
    of the gauged matrix within CLAMP_TOL of zero are clamped to zero and
    the diagonal is rebuilt so columns still sum to zero.

    backend: "embedded" (own tableau simplex, fine for k=1 problem sizes),
    "highs" (scipy), or "auto" (embedded for k=1, highs for k=2, where the
    700-variable LP makes the dense tableau impractically slow).
    """
    basis = basis if basis is not None else gauge_basis(M.k)
    if basis.k != M.k:
        raise ValueError("gauge basis / rate matrix size mismatch")
    rows, cols, G = basis.offdiag_matrix()
    m = M.M[rows, cols]
    if backend == "auto":
        backend = "embedded" if M.k == 1 else "highs"
    if backend == "embedded":
        res = minimize_negative_mass(m, G)
        lam, objective = res.lam, res.objective
    elif backend == "highs":
        lam, objective = _solve_highs(m, G)
    else:
        raise ValueError(f"unknown LP backend: {backend}")
    if objective < CLAMP_TOL:
        objective = 0.0
    param = GaugeParam(lam)
    gauged = M.M + gauge_matrix(basis, param)
    gauged[np.abs(gauged) < CLAMP_TOL] = 0.0
    np.fill_diagonal(gauged, 0.0)
    np.fill_diagonal(gauged, -gauged.sum(axis=0))
    return param, LocalRateMatrix.from_dense(gauged, M.k), objective
