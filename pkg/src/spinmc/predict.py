"""Heuristic particle-growth analytics: rate mu, saturation, and fits.

The negative off-diagonal mass of the gauged local rate matrix sets the
expected early-time growth Omega(t) ~ e^{mu t N}, with
mu = (2d/6^k) sum M^-; the saturation plateau follows from balancing
creation against annihilation on the occupied fraction of configuration
space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .opbasis import LocalRateMatrix


def growth_rate(M_local: LocalRateMatrix, d: int) -> float:
    """mu = (2d / 6^k) * total negative off-diagonal mass."""
    if M_local.k not in (1, 2):
        raise ValueError("growth rate defined for k in {1, 2}")
    return 2.0 * d / 6 ** M_local.k * M_local.negative_mass


def growth_rate_model(compiled, n_sites: int | None = None) -> float:
    """mu for a compiled model: per-group negative masses summed, per site.

    For N*d identical link matrices this reduces to growth_rate exactly.
    """
    n = n_sites if n_sites is not None else compiled.n_sites
    mu_n = 0.0
    for _sites, m in compiled.groups:
        mu_n += 2.0 / 6 ** m.k * m.negative_mass
    return mu_n / n


def omega_saturation(M_local: LocalRateMatrix, N: int) -> tuple[float, float]:
    """(exact, large-N approximation) saturation particle count.

    r = sum M^- / sum |M| off-diagonal; exact form log(1-r)/log(1-6^-N/2),
    approximation -2 * 6^N * log(1-r).  Raises on r >= 1 (divergent).
    """
    total = float(M_local.M_plus.sum() + M_local.M_minus.sum())
    if total == 0.0:
        return 0.0, 0.0
    r = M_local.negative_mass / total
    return _saturation_forms(r, N)


def omega_saturation_model(compiled, N: int | None = None) -> tuple[float, float]:
    """Model-level saturation from mass totals aggregated over all groups."""
    N = N if N is not None else compiled.n_sites
    neg = 0.0
    total = 0.0
    for _sites, m in compiled.groups:
        neg += m.negative_mass
        total += float(m.M_plus.sum() + m.M_minus.sum())
    if total == 0.0:
        return 0.0, 0.0
    return _saturation_forms(neg / total, N)


def _saturation_forms(r: float, N: int) -> tuple[float, float]:
    if r >= 1.0:
        raise ValueError(f"negative-mass fraction r={r:.6g} >= 1: "
                         "saturation diverges")
    if r == 0.0:
        return 0.0, 0.0
    exact = math.log1p(-r) / math.log1p(-(6.0 ** -N) / 2.0)
    approx = -2.0 * 6.0 ** N * math.log1p(-r)
    return exact, approx


@dataclass
class GrowthFit:
    mu_fit: float
    residual: float
    window: tuple      # (first index, last index) inclusive, or ()
    rejected: bool     # no exponential window found (e.g. Omega stays 1)


def fit_growth(t, omega, N: int, omega_sat_pred: float,
               min_points: int = 5) -> GrowthFit:
    """Least-squares slope of log Omega vs t*N on the early-time window
    Omega < omega_sat_pred / 10 (and Omega > 1 so the log is informative)."""
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    cut = omega_sat_pred / 10.0 if omega_sat_pred > 0 else np.inf
    mask = (omega >= 1.0) & (omega < cut)
    # require actual growth inside the window, not a flat Omega = 1 line
    if mask.sum() < min_points or omega[mask].max() <= 1.0 + 1e-12:
        return GrowthFit(0.0, 0.0, (), True)
    idx = np.flatnonzero(mask)
    x = t[idx] * N
    y = np.log(omega[idx])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, _rank, _sv = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(res[0] / len(x))) if res.size else 0.0
    return GrowthFit(float(coef[0]), resid, (int(idx[0]), int(idx[-1])),
                     False)


@dataclass
class GrowthReport:
    mu_pred: float
    mu_fit: float
    fit_residual: float
    fit_rejected: bool
    omega_sat_exact: float
    omega_sat_approx: float
    omega_sat_meas: float
    omega_sat_meas_err: float


def plateau(omega, stderr=None, fraction: float = 0.25) -> tuple[float, float]:
    """Late-time plateau mean over the trailing fraction of the series."""
    omega = np.asarray(omega, dtype=float)
    k = max(1, int(round(fraction * omega.size)))
    tail = omega[-k:]
    mean = float(tail.mean())
    if stderr is not None:
        err = float(np.sqrt(np.mean(np.asarray(stderr)[-k:] ** 2)))
    else:
        err = float(tail.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    return mean, err


def growth_report(compiled, t, omega_mean, omega_stderr=None) -> GrowthReport:
    """Bundle predictions and measured fits for one run."""
    N = compiled.n_sites
    mu_pred = growth_rate_model(compiled)
    sat_exact, sat_approx = omega_saturation_model(compiled)
    fit = fit_growth(t, omega_mean, N, sat_exact)
    meas, err = plateau(omega_mean, omega_stderr)
    return GrowthReport(mu_pred, fit.mu_fit, fit.residual, fit.rejected,
                        sat_exact, sat_approx, meas, err)
