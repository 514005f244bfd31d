"""Dense tableau simplex solver for the gauge / noise linear programs.

Solves   min 1.t   over t >= 0 and free lam,
subject to   t_r + (G lam)_r >= -m_r   for every row r.

The slack structure admits an obvious feasible basis (t_r basic where
m_r < 0, surplus basic elsewhere), so no phase-1 is needed.  Pricing is
Dantzig's rule with a permanent switch to Bland's rule after a long run of
degenerate pivots, which guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-10
DEGENERATE_LIMIT = 200


class SimplexError(RuntimeError):
    """Internal solver failure (unbounded or stalled LP)."""


@dataclass
class LPResult:
    lam: np.ndarray
    t: np.ndarray
    objective: float
    iterations: int


def minimize_negative_mass(m: np.ndarray, G: np.ndarray,
                           max_iter: int | None = None) -> LPResult:
    """Minimize sum_r max(0, -(m + G lam)_r) exactly via its LP form."""
    m = np.asarray(m, dtype=float)
    G = np.asarray(G, dtype=float)
    R, K = G.shape
    if m.shape != (R,):
        raise ValueError("m/G shape mismatch")
    if max_iter is None:
        max_iter = 200 * (R + 2 * K) + 10_000

    # Columns: t (R) | u (K) | v (K) | s (R); constraint t + G(u-v) - s = -m.
    n_cols = 2 * R + 2 * K
    b = -m.copy()
    flip = b < 0
    ncon = R
    T = np.zeros((ncon + 1, n_cols + 1))
    rows = np.arange(R)
    sgn = np.where(flip, -1.0, 1.0)
    T[rows, rows] = sgn                       # t columns
    T[:R, R:R + K] = sgn[:, None] * G         # u columns
    T[:R, R + K:R + 2 * K] = -sgn[:, None] * G  # v columns
    T[rows, R + 2 * K + rows] = -sgn          # s columns
    T[:R, -1] = np.abs(b)

    basis = np.where(flip, R + 2 * K + rows, rows)
    # Objective row: reduced costs d_j = c_j - c_B . T[:, j]; c = 1 on t.
    c = np.zeros(n_cols + 1)
    c[:R] = 1.0
    c_B = c[basis]
    T[R, :] = c - c_B @ T[:R, :]

    bland = False
    degen_run = 0
    it = 0
    while True:
        d = T[R, :n_cols]
        if bland:
            neg = np.flatnonzero(d < -FEAS_TOL)
            if neg.size == 0:
                break
            q = neg[0]
        else:
            q = int(np.argmin(d))
            if d[q] >= -FEAS_TOL:
                break
        col = T[:R, q]
        pos = col > PIVOT_TOL
        if not np.any(pos):
            raise SimplexError("LP unbounded: solver or constraint bug")
        ratios = np.full(R, np.inf)
        ratios[pos] = T[:R, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios - rmin <= 1e-12 * max(1.0, abs(rmin)))
        r = int(ties[np.argmin(basis[ties])]) if bland else int(ties[0])

        piv = T[r, q]
        T[r, :] /= piv
        colvals = T[:, q].copy()
        colvals[r] = 0.0
        T -= np.outer(colvals, T[r, :])
        T[:, q] = 0.0
        T[r, q] = 1.0
        basis[r] = q

        if rmin < 1e-12:
            degen_run += 1
            if degen_run > DEGENERATE_LIMIT:
                bland = True
        else:
            degen_run = 0
        it += 1
        if it > max_iter:
            raise SimplexError(f"simplex did not converge in {max_iter} pivots")

    x = np.zeros(n_cols)
    x[basis] = T[:R, -1]
    t = x[:R]
    lam = x[R:R + K] - x[R + K:R + 2 * K]
    objective = float(t.sum())
    return LPResult(lam=lam, t=t, objective=objective, iterations=it)


def minimize_weighted_cover(Q: np.ndarray, y: np.ndarray,
                            cost: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize cost.x over x >= 0 subject to Q x >= y (small LPs).

    Returns (x, objective).  Raises SimplexError if infeasible.
    """
    Q = np.asarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    cost = np.asarray(cost, dtype=float)
    R, K = Q.shape
    # Phase 1 via big-M on artificial variables: x (K) | s (R) | a (R).
    BIG_M = 1e7 * max(1.0, float(np.max(np.abs(cost))))
    n_cols = K + 2 * R
    T = np.zeros((R + 1, n_cols + 1))
    flip = y < 0
    sgn = np.where(flip, -1.0, 1.0)
    rows = np.arange(R)
    T[:R, :K] = sgn[:, None] * Q
    T[rows, K + rows] = -sgn
    T[:R, -1] = np.abs(y)
    # Rows with y <= 0 are satisfied by the surplus alone; others need an
    # artificial variable.
    need_art = ~flip & (y > 0)
    basis = np.where(need_art, K + R + rows, K + rows)
    T[rows[need_art], K + R + rows[need_art]] = 1.0
    c = np.zeros(n_cols + 1)
    c[:K] = cost
    c[K + R:K + 2 * R] = BIG_M
    c_B = c[basis]
    T[R, :] = c - c_B @ T[:R, :]

    it = 0
    bland = False
    degen_run = 0
    while True:
        d = T[R, :n_cols]
        if bland:
            neg = np.flatnonzero(d < -FEAS_TOL)
            if neg.size == 0:
                break
            q = neg[0]
        else:
            q = int(np.argmin(d))
            if d[q] >= -FEAS_TOL:
                break
        col = T[:R, q]
        pos = col > PIVOT_TOL
        if not np.any(pos):
            raise SimplexError("LP unbounded")
        ratios = np.full(R, np.inf)
        ratios[pos] = T[:R, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios - rmin <= 1e-12 * max(1.0, abs(rmin)))
        r = int(ties[np.argmin(basis[ties])]) if bland else int(ties[0])
        piv = T[r, q]
        T[r, :] /= piv
        colvals = T[:, q].copy()
        colvals[r] = 0.0
        T -= np.outer(colvals, T[r, :])
        T[:, q] = 0.0
        T[r, q] = 1.0
        basis[r] = q
        degen_run = degen_run + 1 if rmin < 1e-12 else 0
        if degen_run > DEGENERATE_LIMIT:
            bland = True
        it += 1
        if it > 100 * n_cols + 10_000:
            raise SimplexError("simplex did not converge")

    x_full = np.zeros(n_cols)
    x_full[basis] = T[:R, -1]
    art = x_full[K + R:]
    if np.max(art, initial=0.0) > 1e-7:
        raise SimplexError("LP infeasible: artificial variables remain basic")
    x = x_full[:K]
    return x, float(cost @ x)
