"""Design of classicalizing noise and the critical noise rate.

Dissipator rate matrices only have positive off-diagonal entries at
sign-flip positions (axes unchanged), giving 27 admissible two-site
patterns: 3 sign-flip choices x 9 axis pairs.  After the canonical gauge,
the negative weights of any local/pairwise Hamiltonian sit on those same
positions, so finding classicalizing noise weights x reduces to the linear
cover Q x >= y with x >= 0, minimized in L1 norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .configspace import AXES, PAIR_FAMILIES, SINGLE_FAMILIES
from .gauge import canonical_gauge_pair, canonical_gauge_single, optimize_gauge
from .opbasis import LocalRateMatrix, table_rates
from .simplex import SimplexError, minimize_weighted_cover

FLIPS = ((1, 0), (0, 1), (1, 1))  # flip site 1 / site 2 / both


@dataclass(frozen=True)
class LPattern:
    """One admissible positive off-diagonal pattern (fixed axes, sign flips)."""

    flips: tuple[int, int]
    axes: tuple[str, str]
    positions: tuple[tuple[int, int], ...]  # (row C, col C') pairs, 36-indexed
    witness: tuple  # one dissipator family realizing the pattern


@dataclass(frozen=True)
class LSet:
    patterns: tuple[LPattern, ...]

    def __len__(self):
        return len(self.patterns)


def _state36(s1: int, a1: int, s2: int, a2: int) -> int:
    return 6 * (2 * a1 + (0 if s1 > 0 else 1)) + 2 * a2 + (0 if s2 > 0 else 1)


@lru_cache(maxsize=1)
def build_L_set() -> LSet:
    """All 27 admissible positive off-diagonal patterns with witnesses."""
    patterns = []
    for flips in FLIPS:
        for a1, a2 in product(range(3), range(3)):
            pos = []
            for s1, s2 in product((1, -1), (1, -1)):
                src = _state36(s1, a1, s2, a2)
                dst = _state36(-s1 if flips[0] else s1, a1,
                               -s2 if flips[1] else s2, a2)
                pos.append((dst, src))
            # witness: sigma_a sigma_b with a != axis iff the site flips
            wa = AXES[(a1 + 1) % 3] if flips[0] else AXES[a1]
            wb = AXES[(a2 + 1) % 3] if flips[1] else AXES[a2]
            witness = ("L", wa, wb)
            W = table_rates(witness).M
            if any(W[r, c] <= 0 for r, c in pos):
                raise AssertionError("pattern witness does not realize pattern")
            patterns.append(LPattern(flips, (AXES[a1], AXES[a2]),
                                     tuple(pos), witness))
    return LSet(tuple(patterns))


@lru_cache(maxsize=1)
def _single_L_patterns():
    """Single-site analogue: sign flip at fixed axis, 3 patterns."""
    out = []
    for a in range(3):
        pos = tuple((_state36(-s, a, 1, 0) // 6, _state36(s, a, 1, 0) // 6)
                    for s in (1, -1))
        out.append((AXES[a], pos))
    return tuple(out)


def _embed_single(M1: np.ndarray, which: int) -> np.ndarray:
    eye = np.eye(6)
    return np.kron(M1, eye) if which == 0 else np.kron(eye, M1)


def link_hamiltonian_matrix(h_fields, J: np.ndarray | None, d: int) -> np.ndarray:
    """Link rate matrix of the Hamiltonian part: pair term + 1/(2d)-scaled
    single-site terms on both endpoints.  h_fields is a pair of 3-vectors."""
    M = np.zeros((36, 36))
    if J is not None:
        J = np.asarray(J, dtype=float)
        for ia, a in enumerate(AXES):
            for ib, b in enumerate(AXES):
                if J[ia, ib] != 0.0:
                    M += table_rates(("H", a, b), J[ia, ib]).M
    for pos, h in enumerate(h_fields):
        for ia, a in enumerate(AXES):
            if h[ia] != 0.0:
                M += _embed_single(table_rates(("H", a), h[ia] / (2 * d)).M, pos)
    return M


def link_canonical_gauge(h_fields, J: np.ndarray | None, d: int) -> np.ndarray:
    """Canonical gauge matching link_hamiltonian_matrix, coefficient-scaled."""
    L = np.zeros((36, 36))
    if J is not None:
        J = np.asarray(J, dtype=float)
        for ia, a in enumerate(AXES):
            for ib, b in enumerate(AXES):
                if J[ia, ib] != 0.0:
                    L += abs(J[ia, ib]) * canonical_gauge_pair(a, b)
    for pos, h in enumerate(h_fields):
        for ia, a in enumerate(AXES):
            if h[ia] != 0.0:
                L += _embed_single(abs(h[ia] / (2 * d))
                                   * canonical_gauge_single(a), pos)
    return L


def family_link_matrix(fam, d: int) -> np.ndarray:
    """Unit-weight link rate matrix of one jump family.

    Pair families (a, b) act directly; single-site families act on both
    endpoints with the 1/(2d) local rescaling.
    """
    if fam in PAIR_FAMILIES:
        return table_rates(("L",) + tuple(fam)).M
    if fam in SINGLE_FAMILIES:
        M1 = table_rates(("L", fam), 1.0 / (2 * d)).M
        return _embed_single(M1, 0) + _embed_single(M1, 1)
    raise ValueError(f"unknown jump family: {fam}")


@dataclass(frozen=True)
class NoiseDesign:
    families: tuple
    x: np.ndarray
    Q: np.ndarray
    y: np.ndarray
    objective: float

    def weights(self) -> dict:
        return {fam: float(w) for fam, w in zip(self.families, self.x)
                if w > 1e-12}


def _pattern_cover_problem(M_H_gauged: np.ndarray, families, d: int):
    lset = build_L_set()
    n_pat = len(lset)
    y = np.zeros(n_pat)
    covered = np.zeros((36, 36), dtype=bool)
    for p, pat in enumerate(lset.patterns):
        vals = [M_H_gauged[r, c] for r, c in pat.positions]
        y[p] = max(0.0, -min(vals))
        for r, c in pat.positions:
            covered[r, c] = True
    # the canonical gauge must confine every negative entry to the patterns
    off = M_H_gauged - np.diag(np.diag(M_H_gauged))
    stray = (off < -1e-9) & ~covered
    if np.any(stray):
        raise SimplexError("Hamiltonian negatives escape the admissible "
                           "pattern set: gauge convention bug")
    Q = np.zeros((n_pat, len(families)))
    for f, fam in enumerate(families):
        Mf = family_link_matrix(fam, d)
        for p, pat in enumerate(lset.patterns):
            Q[p, f] = min(Mf[r, c] for r, c in pat.positions)
    return Q, y


def design_noise(h_fields=((0.0,) * 3, (0.0,) * 3), J=None, d: int = 1,
                 families=PAIR_FAMILIES + SINGLE_FAMILIES) -> NoiseDesign:
    """L1-minimal noise weights rendering one link's Hamiltonian classical.

    h_fields: local fields (3-vectors) of the two endpoints; J: 3x3 pair
    coupling; families: the jump families the design may use.
    """
    families = tuple(families)
    MH = link_hamiltonian_matrix(h_fields, J, d)
    gauged = MH + link_canonical_gauge(h_fields, J, d)
    Q, y = _pattern_cover_problem(gauged, families, d)
    if np.max(y) == 0.0:
        x = np.zeros(len(families))
        obj = 0.0
    else:
        x, obj = minimize_weighted_cover(Q, y, np.ones(len(families)))
    design = NoiseDesign(families, x, Q, y, obj)
    # hard verification through the full gauge optimizer
    M_noise = sum((w * family_link_matrix(fam, d)
                   for fam, w in zip(families, x)), np.zeros((36, 36)))
    total = LocalRateMatrix.from_dense(MH + M_noise, 2)
    _, _, residual = optimize_gauge(total)
    if residual > 1e-7:
        raise SimplexError(
            f"designed noise failed gauge verification (residual {residual:.3g})")
    return design


def design_noise_single(h, families=("x", "y", "z", "+", "-")) -> NoiseDesign:
    """Single-site analogue of design_noise for an isolated site."""
    families = tuple(families)
    MH = np.zeros((6, 6))
    L = np.zeros((6, 6))
    for ia, a in enumerate(AXES):
        if h[ia] != 0.0:
            MH += table_rates(("H", a), h[ia]).M
            L += abs(h[ia]) * canonical_gauge_single(a)
    gauged = MH + L
    pats = _single_L_patterns()
    y = np.array([max(0.0, -min(gauged[r, c] for r, c in pos))
                  for _, pos in pats])
    Q = np.zeros((len(pats), len(families)))
    for f, fam in enumerate(families):
        Mf = table_rates(("L", fam)).M
        for p, (_, pos) in enumerate(pats):
            Q[p, f] = min(Mf[r, c] for r, c in pos)
    if np.max(y) == 0.0:
        x = np.zeros(len(families))
        obj = 0.0
    else:
        x, obj = minimize_weighted_cover(Q, y, np.ones(len(families)))
    design = NoiseDesign(families, x, Q, y, obj)
    M_noise = sum((w * table_rates(("L", fam)).M for fam, w in zip(families, x)),
                  np.zeros((6, 6)))
    total = LocalRateMatrix.from_dense(MH + M_noise, 1)
    _, _, residual = optimize_gauge(total)
    if residual > 1e-9:
        raise SimplexError(
            f"designed noise failed gauge verification (residual {residual:.3g})")
    return design


def tfim_noise_template(J: float, h: float, d: int) -> dict:
    """Classicalizing pair-noise weights for the transverse-field Ising
    link (critical prefactor exactly 1)."""
    template = {}
    for a, b in PAIR_FAMILIES:
        template[(a, b)] = abs(J) / 2
    template[("x", "x")] += abs(J)
    for fam in (("x", "z"), ("z", "x"), ("y", "z"), ("z", "y")):
        template[fam] += abs(h) / (2 * d)
    return template


def depolarizing_template() -> tuple[dict, dict]:
    """Uniform single + two-site depolarizing weights (local, pair)."""
    local = {a: 1.0 for a in AXES}
    pair = {fam: 1.0 for fam in PAIR_FAMILIES}
    return local, pair


def critical_gamma(M_H: LocalRateMatrix, M_noise_unit: LocalRateMatrix,
                   tol: float = 1e-6, gamma_cap_scale: float = 2 ** 16,
                   ) -> float:
    """Smallest gamma >= 0 making M_H + gamma * M_noise classicalizable.

    Feasibility (gauge-LP objective exactly 0) is monotone in gamma; the
    root is bracketed by doubling and then bisected to tol.
    """
    if M_H.k != M_noise_unit.k:
        raise ValueError("rate matrix sizes differ")
    if M_noise_unit.negative_mass > 1e-12:
        raise ValueError("noise template must have no negative off-diagonals")
    if float(np.abs(M_noise_unit.M).sum()) == 0.0:
        raise ValueError("noise template must not be zero")

    def objective(gamma: float) -> float:
        total = LocalRateMatrix.from_dense(M_H.M + gamma * M_noise_unit.M,
                                           M_H.k)
        return optimize_gauge(total)[2]

    if objective(0.0) == 0.0:
        return 0.0
    h_scale = max(1.0, float(np.max(np.abs(M_H.M))))
    hi = 1.0
    while objective(hi) > 0.0:
        hi *= 2.0
        if hi > gamma_cap_scale * h_scale:
            raise RuntimeError(
                f"critical gamma not bracketed below {hi:.3g}")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if objective(mid) == 0.0:
            hi = mid
        else:
            lo = mid
    # monotonicity spot check above the threshold
    if objective(hi + max(tol, 0.05 * hi)) != 0.0:
        raise RuntimeError("feasibility is not monotone above the threshold")
    return 0.5 * (lo + hi)
