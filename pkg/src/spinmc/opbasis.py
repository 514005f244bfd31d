"""Projector basis, superoperator matrices and local transition-rate matrices.

The 6^k spin projectors P_C (k = 1 or 2 sites) are expanded over the
Hermitian Pauli-string basis, giving a real matrix A with rows vec(P_C).
Any Hermiticity-preserving generator L* has a matrix representation MM in
the same operator basis, and the (gauge-dependent) transition-rate matrix
follows from the left pseudoinverse, M = A MM A+.  Closed forms for all
supported Hamiltonian and dissipator terms are implemented independently
and cross-checked against the pseudoinverse route via A MM = M A.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .configspace import AXES, PAIR_FAMILIES, SINGLE_FAMILIES, ModelSpec

# The y axis is oriented so that the worked single-qubit rate matrix of the
# rotation+dephasing model comes out of the pseudoinverse construction
# entrywise (left-handed frame; the complex-conjugate representation of the
# usual one, so all probabilities p_C are unchanged).
SIGMA = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)   # |+z><-z|
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |-z><+z|

# Eigenvectors of sigma_a, in site-state order (x+), (x-), (y+), (y-), (z+), (z-).
STATE_VECTORS = np.array([
    [1, 1],
    [1, -1],
    [1, -1j],
    [1, 1j],
    [np.sqrt(2), 0],
    [0, np.sqrt(2)],
], dtype=complex) / np.sqrt(2)

EPS_SIGN = 1e-12  # entries below this are treated as exactly zero


def _axis(idx6: int) -> int:
    return idx6 // 2


def _sign(idx6: int) -> int:
    return 1 - 2 * (idx6 % 2)


def _eps(a: int, b: int, c: int) -> int:
    """Levi-Civita symbol on axis indices 0..2."""
    return (a - b) * (b - c) * (c - a) // 2


@lru_cache(maxsize=None)
def pauli_basis(k: int):
    """Hermitian operator basis for k sites: all Pauli strings, index base 4."""
    if k == 1:
        return tuple(SIGMA[c] for c in "ixyz")
    ops1 = pauli_basis(1)
    return tuple(np.kron(p, q) for p in ops1 for q in ops1)


def state_vector(idx6: int) -> np.ndarray:
    return STATE_VECTORS[idx6]


def projector(idx6: int) -> np.ndarray:
    v = STATE_VECTORS[idx6]
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class ProjectorBasis:
    k: int
    A: np.ndarray       # 6^k x 4^k, real
    A_pinv: np.ndarray  # 4^k x 6^k left inverse


@lru_cache(maxsize=None)
def projector_basis(k: int) -> ProjectorBasis:
    """Expansion of all 6^k projectors over the Pauli-string basis."""
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or 2, got {k}")
    basis = pauli_basis(k)
    dim = 2 ** k
    q = 6 ** k
    A = np.empty((q, len(basis)))
    for c in range(q):
        if k == 1:
            P = projector(c)
        else:
            P = np.kron(projector(c // 6), projector(c % 6))
        for m, E in enumerate(basis):
            coeff = np.trace(E @ P) / dim
            if abs(coeff.imag) > 1e-14:
                raise AssertionError("projector expansion must be real")
            A[c, m] = coeff.real
    if np.linalg.matrix_rank(A) != len(basis):
        raise AssertionError("A must have full column rank")
    A_pinv = np.linalg.solve(A.T @ A, A.T)
    return ProjectorBasis(k, A, A_pinv)


@dataclass(frozen=True)
class SuperoperatorMatrix:
    """Matrix of L* in the Pauli-string basis: L*(E_m) = sum_n MM[m,n] E_n."""

    k: int
    MM: np.ndarray


def _superop_from_action(k: int, lstar) -> SuperoperatorMatrix:
    basis = pauli_basis(k)
    dim = 2 ** k
    MM = np.empty((len(basis), len(basis)), dtype=complex)
    for m, Em in enumerate(basis):
        img = lstar(Em)
        for n, En in enumerate(basis):
            MM[m, n] = np.trace(En @ img) / dim
    return SuperoperatorMatrix(k, MM)


def _pauli_string(axes) -> np.ndarray:
    ops = [SIGMA[a] for a in axes]
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def superop_unitary(axes, coeff: float) -> SuperoperatorMatrix:
    """Dual generator of -i coeff [H, .] for H a Pauli string on k sites.

    axes entries may be 'x', 'y', 'z' or 'i' (identity factor).
    """
    axes = (axes,) if isinstance(axes, str) else tuple(axes)
    if any(a not in SIGMA for a in axes):
        raise ValueError(f"not a Pauli string: {axes}")
    k = len(axes)
    H = _pauli_string(axes)
    return _superop_from_action(k, lambda X: 1j * float(coeff) * (H @ X - X @ H))


def _jump_operator(jump) -> np.ndarray:
    jump = (jump,) if isinstance(jump, str) else tuple(jump)
    if jump == ("+",):
        return SIGMA_PLUS
    if jump == ("-",):
        return SIGMA_MINUS
    if all(a in ("x", "y", "z", "i") for a in jump) and len(jump) in (1, 2):
        return _pauli_string(jump)
    raise ValueError(f"unsupported jump operator: {jump}")


def superop_dissipator(jump, weight: float) -> SuperoperatorMatrix:
    """Dual of weight * (A rho A+ - {A+A, rho}/2) for a jump operator A."""
    if weight < 0:
        raise ValueError(f"dissipator weight must be >= 0: {weight}")
    A = _jump_operator(jump)
    k = int(np.log2(A.shape[0]))
    AH = A.conj().T
    AHA = AH @ A
    w = float(weight)

    def lstar(X):
        return w * (AH @ X @ A - 0.5 * (AHA @ X + X @ AHA))

    return _superop_from_action(k, lstar)


def embed_superop(sup: SuperoperatorMatrix, which: int) -> SuperoperatorMatrix:
    """Embed a single-site superoperator into the two-site operator basis."""
    if sup.k != 1:
        raise ValueError("can only embed k=1 superoperators")
    eye = np.eye(4)
    MM = np.kron(sup.MM, eye) if which == 0 else np.kron(eye, sup.MM)
    return SuperoperatorMatrix(2, MM)


@dataclass(frozen=True)
class LocalRateMatrix:
    """Signed local rate matrix with positive/negative split and escape rates.

    M[C, C'] is the rate of the transition C' -> C.  Columns sum to zero.
    M_plus and M_minus hold the off-diagonal positive/negative parts (both
    stored non-negative); tau[C'] = sum_{C != C'} |M[C, C']|.
    """

    k: int
    M: np.ndarray
    M_plus: np.ndarray
    M_minus: np.ndarray
    tau: np.ndarray

    @classmethod
    def from_dense(cls, M: np.ndarray, k: int) -> "LocalRateMatrix":
        M = np.array(M, dtype=float)
        M[np.abs(M) < EPS_SIGN] = 0.0
        q = 6 ** k
        if M.shape != (q, q):
            raise ValueError(f"rate matrix must be {q}x{q}")
        colsum = M.sum(axis=0)
        if np.max(np.abs(colsum)) > 1e-9:
            raise ValueError("rate matrix columns must sum to zero")
        off = M.copy()
        np.fill_diagonal(off, 0.0)
        return cls(k, M, np.maximum(off, 0.0), np.maximum(-off, 0.0),
                   np.abs(off).sum(axis=0))

    @property
    def negative_mass(self) -> float:
        """Total negative off-diagonal weight, sum of M_minus."""
        return float(self.M_minus.sum())

    def scaled(self, c: float) -> "LocalRateMatrix":
        return LocalRateMatrix.from_dense(c * self.M, self.k)


def rates_from_superop(sup: SuperoperatorMatrix,
                       basis: ProjectorBasis | None = None) -> LocalRateMatrix:
    """Pseudoinverse construction M = A MM A+ of the local rate matrix."""
    basis = basis if basis is not None else projector_basis(sup.k)
    if basis.k != sup.k:
        raise ValueError("basis/superoperator size mismatch")
    M = basis.A @ sup.MM @ basis.A_pinv.astype(complex)
    if np.max(np.abs(M.imag)) > 1e-10:
        raise ValueError("superoperator is not Hermiticity-preserving: "
                         f"imaginary residue {np.max(np.abs(M.imag)):.3g}")
    return LocalRateMatrix.from_dense(M.real, sup.k)


def _S(a: int, alpha: int) -> int:
    return 1 if a == alpha else -1


def _table_H_single(a: int) -> np.ndarray:
    M = np.zeros((6, 6))
    for C in range(6):
        s, al = _sign(C), _axis(C)
        for Cp in range(6):
            sp, alp = _sign(Cp), _axis(Cp)
            M[C, Cp] = -s * sp * _eps(a, alp, al)
    return M


def _table_H_pair(a: int, b: int) -> np.ndarray:
    M = np.zeros((36, 36))
    for C in range(36):
        s1, al = _sign(C // 6), _axis(C // 6)
        s2, be = _sign(C % 6), _axis(C % 6)
        for Cp in range(36):
            s1p, alp = _sign(Cp // 6), _axis(Cp // 6)
            s2p, bep = _sign(Cp % 6), _axis(Cp % 6)
            t1 = (_eps(a, alp, al) * s1 * s1p * (s2p + s2 * (b == be))
                  * (b == bep))
            t2 = (_eps(b, bep, be) * s2 * s2p * (s1p + s1 * (a == al))
                  * (a == alp))
            M[C, Cp] = -0.5 * (t1 + t2)
    return M


def _table_D_single(a: int) -> np.ndarray:
    M = np.zeros((6, 6))
    for C in range(6):
        s, al = _sign(C), _axis(C)
        src = 2 * al + (0 if _S(a, al) * s > 0 else 1)
        M[C, src] += 1.0
        M[C, C] -= 1.0
    return M


def _table_D_ladder(pm: int) -> np.ndarray:
    # pm = +1 for sigma_+, -1 for sigma_-
    M = np.zeros((6, 6))
    z = 2
    for C in range(6):
        s, al = _sign(C), _axis(C)
        for Cp in range(6):
            sp, alp = _sign(Cp), _axis(Cp)
            if al != alp:
                continue
            nz = 1 if al != z else 0
            M[C, Cp] = -(s / 4.0) * (sp * nz + 2 * (al == z) * (sp - pm))
    return M


def _table_D_pair(a: int, b: int) -> np.ndarray:
    M = np.zeros((36, 36))
    for C in range(36):
        s1, al = _sign(C // 6), _axis(C // 6)
        s2, be = _sign(C % 6), _axis(C % 6)
        i1 = 2 * al + (0 if _S(a, al) * s1 > 0 else 1)
        i2 = 2 * be + (0 if _S(b, be) * s2 > 0 else 1)
        M[C, 6 * i1 + i2] += 1.0
        M[C, C] -= 1.0
    return M


def table_rates(term, coeff: float = 1.0) -> LocalRateMatrix:
    """Closed-form rate matrix for one generator term.

    term is ("H", a), ("H", a, b), ("L", a), ("L", "+"/"-") or ("L", a, b)
    with a, b in {"x", "y", "z"}.
    """
    kind, *args = term
    if kind == "H":
        if len(args) == 1:
            M = coeff * _table_H_single(AXES.index(args[0]))
            return LocalRateMatrix.from_dense(M, 1)
        if len(args) == 2:
            M = coeff * _table_H_pair(AXES.index(args[0]), AXES.index(args[1]))
            return LocalRateMatrix.from_dense(M, 2)
    elif kind == "L":
        if args in (["+"], ["-"]):
            M = coeff * _table_D_ladder(+1 if args[0] == "+" else -1)
            return LocalRateMatrix.from_dense(M, 1)
        if len(args) == 1 and args[0] in AXES:
            M = coeff * _table_D_single(AXES.index(args[0]))
            return LocalRateMatrix.from_dense(M, 1)
        if len(args) == 2:
            M = coeff * _table_D_pair(AXES.index(args[0]), AXES.index(args[1]))
            return LocalRateMatrix.from_dense(M, 2)
    raise ValueError(f"unknown term id: {term}")


def _term_superop(term, coeff: float = 1.0) -> SuperoperatorMatrix:
    kind, *args = term
    if kind == "H":
        return superop_unitary(tuple(args), coeff)
    return superop_dissipator(tuple(args), coeff)


@lru_cache(maxsize=1)
def validate_conventions() -> bool:
    """Cross-check every closed-form term against the pseudoinverse route.

    Gauge equivalence A MM = M A must hold entrywise; a mismatch means the
    index conventions of the closed forms were transposed somewhere.
    """
    terms = [("H", a) for a in AXES]
    terms += [("H", a, b) for a in AXES for b in AXES]
    terms += [("L", a) for a in AXES] + [("L", "+"), ("L", "-")]
    terms += [("L", a, b) for a in AXES for b in AXES]
    for term in terms:
        M = table_rates(term, 1.0)
        basis = projector_basis(M.k)
        sup = _term_superop(term, 1.0)
        lhs = basis.A.astype(complex) @ sup.MM
        rhs = M.M @ basis.A
        if np.max(np.abs(lhs - rhs)) > 1e-12:
            raise AssertionError(
                f"closed-form term {term} is not gauge-equivalent to the "
                "pseudoinverse construction")
    return True


@dataclass(frozen=True)
class AssembledModel:
    """Per-link (and isolated per-site) local rate matrices of a model."""

    spec: ModelSpec
    link_matrices: dict   # link -> LocalRateMatrix (k=2)
    site_matrices: dict   # isolated site -> LocalRateMatrix (k=1)

    @property
    def groups(self):
        """(sites, LocalRateMatrix) pairs covering the whole generator."""
        out = [((i, j), m) for (i, j), m in self.link_matrices.items()]
        out += [((i,), m) for i, m in self.site_matrices.items()]
        return out


def _single_site_terms(spec: ModelSpec, site: int):
    """(term, coeff) pairs for one site, with the gamma prefactor on noise."""
    out = []
    h = spec.local_fields.get(site)
    if h is not None:
        for a, ha in zip(AXES, h):
            if ha != 0.0:
                out.append((("H", a), float(ha)))
    nu = spec.local_noise.get(site, {})
    for fam in SINGLE_FAMILIES:
        w = nu.get(fam, 0.0)
        if w != 0.0:
            out.append((("L", fam), spec.gamma * float(w)))
    return out


def assemble_model(spec: ModelSpec) -> AssembledModel:
    """Build per-link rate matrices, closed forms, with single-site terms
    distributed over the links of each endpoint (1/degree weighting)."""
    validate_conventions()
    lat = spec.lattice
    degree = [lat.degree(i) for i in range(lat.n_sites)]
    eye6 = np.eye(6)
    link_matrices = {}
    for link in lat.links:
        M = np.zeros((36, 36))
        J = spec.pair_couplings.get(link)
        if J is not None:
            J = np.asarray(J, dtype=float)
            for ia, a in enumerate(AXES):
                for ib, b in enumerate(AXES):
                    if J[ia, ib] != 0.0:
                        M += table_rates(("H", a, b), J[ia, ib]).M
        mu = spec.pair_noise.get(link, {})
        for (a, b), w in mu.items():
            if w != 0.0:
                M += table_rates(("L", a, b), spec.gamma * float(w)).M
        for pos, site in enumerate(link):
            for term, coeff in _single_site_terms(spec, site):
                M1 = table_rates(term, coeff / degree[site]).M
                M += np.kron(M1, eye6) if pos == 0 else np.kron(eye6, M1)
        link_matrices[link] = LocalRateMatrix.from_dense(M, 2)
    site_matrices = {}
    for site in range(lat.n_sites):
        if degree[site] == 0:
            M = np.zeros((6, 6))
            for term, coeff in _single_site_terms(spec, site):
                M += table_rates(term, coeff).M
            site_matrices[site] = LocalRateMatrix.from_dense(M, 1)
    return AssembledModel(spec, link_matrices, site_matrices)


def global_rate_matrix(model: AssembledModel) -> np.ndarray:
    """Dense 6^N x 6^N rate matrix from the link embedding (small N only)."""
    n = model.spec.lattice.n_sites
    if n > 6:
        raise ValueError("dense global rate matrix limited to N <= 6")
    dim = 6 ** n
    G = np.zeros((dim, dim))
    strides = [6 ** (n - 1 - i) for i in range(n)]
    for sites, local in model.groups:
        rest = [i for i in range(n) if i not in sites]
        q = local.M.shape[0]
        rest_dim = 6 ** len(rest)
        for other in range(rest_dim):
            base = 0
            o = other
            for i in reversed(rest):
                base += (o % 6) * strides[i]
                o //= 6
            idx = np.empty(q, dtype=int)
            for loc in range(q):
                g = base
                l = loc
                for i in reversed(sites):
                    g += (l % 6) * strides[i]
                    l //= 6
                idx[loc] = g
            G[np.ix_(idx, idx)] += local.M
    return G


def format_matrix(M: np.ndarray, k: int) -> str:
    """Labeled plain-text dump of a q^k x q^k matrix in site-state order."""
    labels1 = ["+x", "-x", "+y", "-y", "+z", "-z"]
    if k == 1:
        labels = labels1
    else:
        labels = [f"{p},{q}" for p in labels1 for q in labels1]
    width = max(12, max(len(l) for l in labels) + 2)
    lines = [" " * (len(labels[0]) + 2)
             + "".join(f"{l:>{width}}" for l in labels)]
    for i, l in enumerate(labels):
        row = "".join(f"{M[i, j]:>{width}.6g}" for j in range(len(labels)))
        lines.append(f"{l:<{len(labels[0]) + 2}}" + row)
    return "\n".join(lines) + "\n"
