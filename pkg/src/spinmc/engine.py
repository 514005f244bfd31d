"""Trajectory simulator: signed-particle ensembles over compiled models.

A model is compiled into flat rate tables (one 36x36 or 6x6 signed matrix
per interaction group, deduplicated); trajectories run in the jitted kernels
with a treap-indexed particle ensemble.  Trajectory i always draws from
stream (base_seed, i), so ensemble averages do not depend on the thread
count, and the reduction over chunks happens in chunk-index order.
"""

from __future__ import annotations

import os
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .configspace import AXES, Configuration, ModelSpec, state_index
from .gauge import optimize_gauge
from .opbasis import LocalRateMatrix, assemble_model

DEFAULT_OMEGA_MAX = 10 ** 7
CHUNK = 1024


class EnsembleError(RuntimeError):
    """Internal ensemble invariant violated (should never happen)."""


# ---------------------------------------------------------------------------
# Initial states

@dataclass(frozen=True)
class InitialState:
    """Product configuration or phase-shifted Bell pairs (unpaired sites
    fall back to the product sampler on `base`)."""

    kind: str                      # "product" | "bell_pairs"
    base: tuple                    # per-site state indices (0..5)
    pairs: tuple = ()
    phases: tuple = ()

    def __post_init__(self):
        if self.kind not in ("product", "bell_pairs"):
            raise ValueError(f"unknown initial state kind: {self.kind}")
        n = len(self.base)
        if not all(0 <= s < 6 for s in self.base):
            raise ValueError("base states must be in 0..5")
        if self.kind == "product" and self.pairs:
            raise ValueError("product state takes no pairs")
        if len(self.pairs) != len(self.phases):
            raise ValueError("need one phase per pair")
        seen = set()
        for (j, l) in self.pairs:
            if not (0 <= j < n and 0 <= l < n) or j == l:
                raise ValueError(f"bad pair: {(j, l)}")
            if j in seen or l in seen:
                raise ValueError("bell pairs must be disjoint")
            seen.update((j, l))
        if not all(np.isfinite(p) for p in self.phases):
            raise ValueError("phases must be finite reals")

    @classmethod
    def product(cls, config) -> "InitialState":
        if isinstance(config, Configuration):
            config = config.indices()
        return cls("product", tuple(int(s) for s in config))

    @classmethod
    def bell_pairs(cls, n_sites, pairs, phases, base=None) -> "InitialState":
        if base is None:
            base = (state_index("z", +1),) * n_sites
        return cls("bell_pairs", tuple(base),
                   tuple((int(j), int(l)) for j, l in pairs),
                   tuple(float(p) for p in phases))

    def kernel_arrays(self):
        base = np.array(self.base, dtype=np.int64)
        paired = np.zeros(len(self.base), dtype=np.int64)
        pj = np.array([p[0] for p in self.pairs], dtype=np.int64)
        pl = np.array([p[1] for p in self.pairs], dtype=np.int64)
        paired[pj] = 1
        paired[pl] = 1
        cos_t = np.cos(np.array(self.phases, dtype=float))
        sin_t = np.sin(np.array(self.phases, dtype=float))
        kind = 0 if self.kind == "product" else 1
        return kind, base, paired, pj, pl, cos_t, sin_t


def kernel_stream(base_seed: int, idx: int = 0) -> np.ndarray:
    """Seeded xoshiro256** state usable by the sampler kernels."""
    state = np.empty(4, dtype=np.uint64)
    _k.seed_stream(state, base_seed, idx)
    return state


def sample_product_state(c0: Configuration, rng_state) -> Configuration:
    base = np.array(c0.indices(), dtype=np.int64)
    sbuf = np.empty_like(base)
    _k.sample_product(rng_state, base, sbuf)
    return Configuration.from_indices(sbuf)


def sample_bell_state(pairs, phases, rng_state, n_sites,
                      base=None) -> Configuration:
    init = InitialState.bell_pairs(n_sites, pairs, phases, base)
    _kind, b, paired, pj, pl, ct, st = init.kernel_arrays()
    sbuf = np.empty(n_sites, dtype=np.int64)
    _k.sample_bell(rng_state, b, paired, pj, pl, ct, st, sbuf)
    return Configuration.from_indices(sbuf)


# ---------------------------------------------------------------------------
# Observables

@dataclass(frozen=True)
class ObservableTracker:
    """Pauli string over a site region; tracked value is
    3^{N_A} * sum over particles of (prod_j s_j delta_{axis}) * species."""

    name: str
    sites: tuple
    axes: tuple   # axis indices 0/1/2 per site

    def __post_init__(self):
        if len(self.sites) != len(self.axes) or not self.sites:
            raise ValueError("one axis per site, at least one site")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("duplicate site in Pauli string")

    @property
    def prefactor(self) -> float:
        return 3.0 ** len(self.sites)

    @classmethod
    def parse(cls, text: str) -> "ObservableTracker":
        """Parse strings like "z0", "y1 x3" (axis letter + site index)."""
        sites, axes = [], []
        for tok in text.replace("*", " ").split():
            ax = tok[0].lower()
            if ax not in AXES:
                raise ValueError(f"bad Pauli token: {tok}")
            sites.append(int(tok[1:]))
            axes.append(AXES.index(ax))
        return cls(" ".join(f"{AXES[a]}{s}" for a, s in zip(axes, sites)),
                   tuple(sites), tuple(axes))

    def evaluate(self, config: Configuration, species: int = 1) -> float:
        """Direct contraction for one particle (used by checks)."""
        p = species
        for s, a in zip(self.sites, self.axes):
            st = config.site_index(s)
            if st >> 1 != a:
                return 0.0
            p = -p if st & 1 else p
        return self.prefactor * p


def tracker_arrays(observables):
    ptr = np.zeros(len(observables) + 1, dtype=np.int64)
    sites, axes, pref = [], [], []
    for i, ob in enumerate(observables):
        sites.extend(ob.sites)
        axes.extend(ob.axes)
        ptr[i + 1] = len(sites)
        pref.append(ob.prefactor)
    return (ptr, np.array(sites, dtype=np.int64),
            np.array(axes, dtype=np.int64), np.array(pref, dtype=float))


# ---------------------------------------------------------------------------
# Compiled model

@dataclass(frozen=True)
class CompiledModel:
    spec: ModelSpec
    groups: tuple          # (sites, gauged LocalRateMatrix) per group
    gauge_objective: float
    grp_s1: np.ndarray
    grp_s2: np.ndarray
    grp_mat: np.ndarray
    mat_coloff: np.ndarray
    colsum: np.ndarray
    colptr: np.ndarray
    ent_tgt: np.ndarray
    ent_abs: np.ndarray
    ent_sign: np.ndarray
    m_max: float
    site_grp_ptr: np.ndarray
    site_grp_idx: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.spec.lattice.n_sites

    @property
    def n_words(self) -> int:
        return (self.n_sites + _k.SITES_PER_WORD - 1) // _k.SITES_PER_WORD

    def kernel_args(self):
        return (self.grp_s1, self.grp_s2, self.grp_mat, self.mat_coloff,
                self.colsum, self.colptr, self.ent_tgt, self.ent_abs,
                self.ent_sign, self.m_max, self.site_grp_ptr,
                self.site_grp_idx)


def _canonical_gauge_for(spec: ModelSpec, sites) -> np.ndarray:
    """Coefficient-scaled closed-form gauge for one group's Hamiltonian
    part, matching the 1/degree single-site embedding of assemble_model."""
    from .gauge import canonical_gauge_pair, canonical_gauge_single
    deg = [spec.lattice.degree(s) for s in sites]
    if len(sites) == 1:
        L = np.zeros((6, 6))
        h = spec.local_fields.get(sites[0])
        if h is not None:
            for ia, a in enumerate(AXES):
                if h[ia] != 0.0:
                    L += abs(h[ia]) * canonical_gauge_single(a)
        return L
    L = np.zeros((36, 36))
    J = spec.pair_couplings.get(tuple(sites))
    if J is not None:
        J = np.asarray(J, dtype=float)
        for ia, a in enumerate(AXES):
            for ib, b in enumerate(AXES):
                if J[ia, ib] != 0.0:
                    L += abs(J[ia, ib]) * canonical_gauge_pair(a, b)
    eye6 = np.eye(6)
    for pos, site in enumerate(sites):
        h = spec.local_fields.get(site)
        if h is None:
            continue
        for ia, a in enumerate(AXES):
            if h[ia] != 0.0:
                L1 = abs(h[ia]) / deg[pos] * canonical_gauge_single(a)
                L += np.kron(L1, eye6) if pos == 0 else np.kron(eye6, L1)
    return L


def compile_model(spec: ModelSpec, gauge: bool = True, backend: str = "auto",
                  mode: str = "lp") -> CompiledModel:
    """Assemble, gauge-optimize (per distinct local matrix) and flatten.

    mode "lp" minimizes the negative mass over the full gauge orbit;
    "canonical" applies the closed-form gauges scaled by the Hamiltonian
    coefficients (must already be classical, i.e. leave no negatives)."""
    asm = assemble_model(spec)
    raw_groups = asm.groups
    unique = {}
    gauged_of = {}
    objective = 0.0
    for sites, local in raw_groups:
        h = local.M.tobytes()
        if h in unique:
            continue
        if not gauge or local.negative_mass == 0:
            gauged = local
        elif mode == "canonical":
            G = local.M + _canonical_gauge_for(spec, sites)
            G[np.abs(G) < 1e-9] = 0.0
            np.fill_diagonal(G, 0.0)
            if G.min() < 0:
                raise ValueError("canonical gauge leaves negative rates; "
                                 "use mode='lp'")
            np.fill_diagonal(G, -G.sum(axis=0))
            gauged = LocalRateMatrix.from_dense(G, local.k)
        elif mode == "lp":
            _, gauged, obj = optimize_gauge(local, backend=backend)
            objective += obj
        else:
            raise ValueError(f"unknown gauge mode: {mode}")
        unique[h] = len(unique)
        gauged_of[h] = gauged
    resolved = [(sites, gauged_of[local.M.tobytes()])
                for sites, local in raw_groups]
    return compile_groups(spec, resolved, objective)


def compile_groups(spec: ModelSpec, groups,
                   objective: float = 0.0) -> CompiledModel:
    """Flatten explicit (sites, LocalRateMatrix) groups into kernel tables.

    Lets callers pin a particular gauge representative per group; the
    matrices must already carry whatever gauge the run should use."""
    unique = {}
    gauged_of = {}
    for _sites, local in groups:
        h = local.M.tobytes()
        if h not in unique:
            unique[h] = len(unique)
            gauged_of[h] = local
    raw_groups = groups

    mats = [None] * len(unique)
    for h, i in unique.items():
        mats[i] = gauged_of[h]
    groups = []
    grp_s1, grp_s2, grp_mat = [], [], []
    for sites, local in raw_groups:
        mid = unique[local.M.tobytes()]
        groups.append((sites, mats[mid]))
        grp_s1.append(sites[0])
        grp_s2.append(sites[1] if len(sites) == 2 else -1)
        grp_mat.append(mid)

    mat_coloff = np.zeros(len(mats) + 1, dtype=np.int64)
    for i, m in enumerate(mats):
        mat_coloff[i + 1] = mat_coloff[i] + m.M.shape[0]
    total_cols = int(mat_coloff[-1])
    colsum = np.zeros(total_cols, dtype=float)
    colptr = np.zeros(total_cols + 1, dtype=np.int64)
    tgt, absr, sign = [], [], []
    for i, m in enumerate(mats):
        q = m.M.shape[0]
        for c in range(q):
            fc = int(mat_coloff[i]) + c
            for r in range(q):
                v = m.M[r, c]
                if r == c or v == 0.0:
                    continue
                tgt.append(r)
                absr.append(abs(v))
                sign.append(1 if v > 0 else -1)
            colptr[fc + 1] = len(tgt)
            colsum[fc] = m.tau[c]
    m_max = float(colsum.max()) if total_cols else 0.0

    n = spec.lattice.n_sites
    adj = [[] for _ in range(n)]
    for g, (sites, _m) in enumerate(groups):
        for s in sites:
            adj[s].append(g)
    site_grp_ptr = np.zeros(n + 1, dtype=np.int64)
    site_grp_idx = []
    for s in range(n):
        site_grp_idx.extend(adj[s])
        site_grp_ptr[s + 1] = len(site_grp_idx)

    return CompiledModel(
        spec, tuple(groups), objective,
        np.array(grp_s1, dtype=np.int64), np.array(grp_s2, dtype=np.int64),
        np.array(grp_mat, dtype=np.int64), mat_coloff, colsum, colptr,
        np.array(tgt, dtype=np.int64), np.array(absr, dtype=float),
        np.array(sign, dtype=np.int64), m_max,
        site_grp_ptr, np.array(site_grp_idx, dtype=np.int64))


# ---------------------------------------------------------------------------
# Workspaces

class Workspace:
    """Grow-on-demand node arrays plus scratch for one running trajectory."""

    def __init__(self, n_words, n_trackers, n_grid, n_sites, cap=4096):
        self.cap = cap
        self.n_words = n_words
        self.keys = np.zeros((cap, n_words), dtype=np.int64)
        self.child = np.full((cap, 2), -1, dtype=np.int64)
        self.prio = np.zeros(cap, dtype=np.uint64)
        self.nb = np.zeros(cap, dtype=np.int64)
        self.no = np.zeros(cap, dtype=np.int64)
        self.tau = np.zeros(cap, dtype=float)
        self.agg_n = np.zeros(cap, dtype=np.int64)
        self.agg_p = np.zeros(cap, dtype=np.int64)
        self.agg_r = np.zeros(cap, dtype=float)
        self.freelist = np.zeros(cap, dtype=np.int64)
        self.dstack = np.zeros(cap + 2, dtype=np.int64)
        self.path = np.zeros(_k.MAXD, dtype=np.int64)
        self.pdir = np.zeros(_k.MAXD, dtype=np.int64)
        self.tmp = np.zeros(n_words, dtype=np.int64)
        self.sbuf = np.zeros(n_sites, dtype=np.int64)
        self.st_i = np.zeros(_k.ST_I_LEN, dtype=np.int64)
        self.st_i[_k.ROOT] = -1
        self.st_f = np.zeros(1, dtype=float)
        self.rng = np.zeros(4, dtype=np.uint64)
        self.trk_sum = np.zeros(n_trackers, dtype=float)
        self.rec_omega = np.zeros(n_grid, dtype=float)
        self.rec_occ = np.zeros(n_grid, dtype=float)
        self.rec_trk = np.zeros((n_grid, n_trackers), dtype=float)

    def grow(self):
        old = self.cap
        self.cap = old * 2
        for name in ("keys", "child", "prio", "nb", "no", "tau",
                     "agg_n", "agg_p", "agg_r", "freelist"):
            arr = getattr(self, name)
            shape = (self.cap,) + arr.shape[1:]
            new = np.zeros(shape, dtype=arr.dtype)
            if name == "child":
                new[:] = -1
            new[:old] = arr
            setattr(self, name, new)
        self.dstack = np.zeros(self.cap + 2, dtype=np.int64)

    def tree_args(self):
        return (self.keys, self.child, self.prio, self.nb, self.no, self.tau,
                self.agg_n, self.agg_p, self.agg_r, self.freelist)


# ---------------------------------------------------------------------------
# Results

@dataclass
class TrajectoryRecord:
    grid: np.ndarray
    omega: np.ndarray
    omega_occ: np.ndarray
    values: np.ndarray       # (n_grid, n_observables), prefactor applied
    recorded: int            # grid points actually reached
    events: int
    branch_events: int
    seed: int
    aborted: bool


@dataclass
class EnsembleResult:
    grid: np.ndarray
    names: list
    counts: np.ndarray
    obs_mean: np.ndarray
    obs_stderr: np.ndarray
    omega_mean: np.ndarray
    omega_stderr: np.ndarray
    occ_mean: np.ndarray
    n_traj: int
    aborted: int
    events: int
    branch_events: int
    wall_time: float


def _finalize(grid, names, acc, n_traj, wall):
    cnt, om, om2, occ, trk, trk2, totals = acc
    cnt_f = np.maximum(cnt, 1).astype(float)
    om_mean = om / cnt_f
    occ_mean = occ / cnt_f
    trk_mean = trk / cnt_f[:, None]
    om_err = np.where(cnt > 1,
                      np.sqrt(np.maximum(om2 / cnt_f - om_mean ** 2, 0.0)
                              / np.maximum(cnt_f - 1, 1)), 0.0)
    trk_err = np.where(cnt[:, None] > 1,
                       np.sqrt(np.maximum(trk2 / cnt_f[:, None]
                                          - trk_mean ** 2, 0.0)
                               / np.maximum(cnt_f[:, None] - 1, 1)), 0.0)
    return EnsembleResult(grid, names, cnt, trk_mean, trk_err, om_mean,
                          om_err, occ_mean, n_traj, int(totals[2]),
                          int(totals[0]), int(totals[1]), wall)


# ---------------------------------------------------------------------------
# Drivers

def _chunk_task(model, init_args, trk, grid, t_max, omega_max, debug,
                base_seed, traj_start, n_traj, ws):
    G = grid.shape[0]
    T = ws.trk_sum.shape[0]
    acc_cnt = np.zeros(G, dtype=np.int64)
    acc_om = np.zeros(G)
    acc_om2 = np.zeros(G)
    acc_occ = np.zeros(G)
    acc_trk = np.zeros((G, T))
    acc_trk2 = np.zeros((G, T))
    totals = np.zeros(4, dtype=np.int64)
    kind, base, paired, pj, pl, ct, st = init_args
    trk_ptr, trk_site, trk_axis, trk_pref = trk
    ws.st_i[_k.TRAJ] = 0
    ws.st_i[_k.RESUME] = 0
    while True:
        status = _k.run_chunk(
            *ws.tree_args(), *model.kernel_args(),
            trk_ptr, trk_site, trk_axis, ws.trk_sum, trk_pref,
            kind, base, paired, pj, pl, ct, st, ws.sbuf,
            ws.st_i, ws.st_f, ws.rng, grid,
            ws.rec_omega, ws.rec_occ, ws.rec_trk,
            t_max, omega_max, 1 if debug else 0,
            base_seed, traj_start, n_traj,
            acc_cnt, acc_om, acc_om2, acc_occ, acc_trk, acc_trk2,
            totals, ws.path, ws.pdir, ws.tmp, ws.dstack)
        if status == 1:
            ws.grow()
            continue
        if status == 3:
            raise EnsembleError("ensemble invariant violated during run")
        return acc_cnt, acc_om, acc_om2, acc_occ, acc_trk, acc_trk2, totals


def run_ensemble(model, init: InitialState, observables, grid, t_max,
                 n_traj, base_seed, threads=None,
                 omega_max=DEFAULT_OMEGA_MAX, debug=False,
                 chunk=CHUNK) -> EnsembleResult:
    """Mean and standard error of tracked observables over n_traj runs."""
    if isinstance(model, ModelSpec):
        model = compile_model(model)
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    grid = np.asarray(grid, dtype=float)
    if grid.size and np.any(np.diff(grid) <= 0):
        raise ValueError("grid times must be strictly increasing")
    if grid.size and (grid[0] < 0 or grid[-1] > t_max):
        raise ValueError("grid must lie in [0, t_max]")
    threads = threads or os.cpu_count() or 1
    init_args = init.kernel_arrays()
    trk = tracker_arrays(observables)
    names = [ob.name for ob in observables]
    start = time.monotonic()

    chunks = [(i * chunk, min(chunk, n_traj - i * chunk))
              for i in range((n_traj + chunk - 1) // chunk)]
    ws_pool = queue.SimpleQueue()
    n_workers = min(threads, len(chunks))
    for _ in range(n_workers):
        ws_pool.put(Workspace(model.n_words, len(observables), grid.size,
                              model.n_sites))

    def work(args):
        traj_start, n = args
        ws = ws_pool.get()
        try:
            return _chunk_task(model, init_args, trk, grid, t_max, omega_max,
                               debug, base_seed, traj_start, n, ws)
        finally:
            ws_pool.put(ws)

    if n_workers == 1:
        results = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            results = list(ex.map(work, chunks))

    acc = [np.zeros_like(a) for a in results[0]]
    for res in results:          # chunk order: deterministic reduction
        for tot, part in zip(acc, res):
            tot += part
    return _finalize(grid, names, acc, n_traj, time.monotonic() - start)


def run_trajectory(model, init: InitialState, observables, grid, t_max,
                   seed, omega_max=DEFAULT_OMEGA_MAX,
                   debug=False) -> TrajectoryRecord:
    """Single trajectory with the full per-grid-time record."""
    if isinstance(model, ModelSpec):
        model = compile_model(model)
    grid = np.asarray(grid, dtype=float)
    init_args = init.kernel_arrays()
    trk = tracker_arrays(observables)
    ws = Workspace(model.n_words, len(observables), grid.size, model.n_sites)
    acc = _chunk_task(model, init_args, trk, grid, t_max, omega_max, debug,
                      seed, 0, 1, ws)
    totals = acc[6]
    _ptr, _s, _a, pref = trk
    return TrajectoryRecord(
        grid, ws.rec_omega.copy().astype(np.int64),
        ws.rec_occ.copy().astype(np.int64),
        ws.rec_trk * pref[None, :], int(ws.st_i[_k.GI]),
        int(totals[0]), int(totals[1]), seed, bool(totals[2]))


# ---------------------------------------------------------------------------
# Step-by-step ensemble (tests / inspection)

class Ensemble:
    """Python-facing ensemble with explicit particle placement and single
    stepping; shares all kernel code with the batch drivers."""

    def __init__(self, model, seed=0, observables=(), omega_max=DEFAULT_OMEGA_MAX,
                 debug=False):
        if isinstance(model, ModelSpec):
            model = compile_model(model)
        self.model = model
        self.omega_max = omega_max
        self.debug = debug
        self.observables = tuple(observables)
        self.trk = tracker_arrays(self.observables)
        self.ws = Workspace(model.n_words, len(self.observables), 0,
                            model.n_sites)
        _k.seed_stream(self.ws.rng, seed, 0)
        self.ws.st_i[_k.SIGNED] = 0
        self._grid = np.zeros(0, dtype=float)

    def add_particle(self, config: Configuration, species: int = 1, n: int = 1):
        ws = self.ws
        ws.tmp[:] = np.array(config.words, dtype=np.int64)
        node, depth, found = _k._find(ws.keys, ws.child, ws.st_i, ws.tmp,
                                      ws.path, ws.pdir)
        if not found:
            tau0 = _k.tau_full(ws.tmp, *self.model.kernel_args()[:5])
            node = _k._insert(*ws.tree_args(), ws.st_i, ws.tmp, ws.path,
                              ws.pdir, depth,
                              _k.rng_next(ws.rng) >> np.uint64(1), tau0,
                              n if species > 0 else 0,
                              0 if species > 0 else n)
        else:
            if species > 0:
                ws.nb[node] += n
            else:
                ws.no[node] += n
            _k._update_path(ws.child, ws.nb, ws.no, ws.tau, ws.agg_n,
                            ws.agg_p, ws.agg_r, ws.path, depth)
        trk_ptr, trk_site, trk_axis, _pref = self.trk
        _k._trk_apply(ws.keys, node, trk_ptr, trk_site, trk_axis, ws.trk_sum,
                      n if species > 0 else 0, 0 if species > 0 else n)
        ws.st_i[_k.SIGNED] += n if species > 0 else -n

    def step(self) -> float:
        """Apply exactly one Gillespie event; returns the waiting time."""
        ws = self.ws
        if self.tau_tot <= 0:
            raise RuntimeError("stationary ensemble: no event to draw")
        t0 = ws.st_f[0]
        trk_ptr, trk_site, trk_axis, _pref = self.trk
        status = _k.advance(
            *ws.tree_args(), *self.model.kernel_args(),
            trk_ptr, trk_site, trk_axis, ws.trk_sum,
            ws.st_i, ws.st_f, ws.rng, self._grid,
            ws.rec_omega, ws.rec_occ, ws.rec_trk,
            np.inf, self.omega_max, ws.st_i[_k.EVENTS] + 1,
            1 if self.debug else 0, ws.path, ws.pdir, ws.tmp, ws.dstack)
        if status == 1:
            self.ws.grow()
            return self.step()
        if status == 3:
            raise EnsembleError("ensemble invariant violated")
        if status == 2:
            raise RuntimeError("particle cap exceeded")
        return ws.st_f[0] - t0

    @property
    def time(self) -> float:
        return float(self.ws.st_f[0])

    @property
    def tau_tot(self) -> float:
        root = self.ws.st_i[_k.ROOT]
        return float(self.ws.agg_r[root]) if root >= 0 else 0.0

    @property
    def omega(self) -> int:
        root = self.ws.st_i[_k.ROOT]
        return int(self.ws.agg_p[root]) if root >= 0 else 0

    @property
    def omega_occ(self) -> int:
        root = self.ws.st_i[_k.ROOT]
        return int(self.ws.agg_n[root]) if root >= 0 else 0

    @property
    def events(self) -> int:
        return int(self.ws.st_i[_k.EVENTS])

    @property
    def branch_events(self) -> int:
        return int(self.ws.st_i[_k.BRANCH])

    @property
    def signed_total(self) -> int:
        return int(self.ws.st_i[_k.SIGNED])

    def tracker_values(self):
        _ptr, _s, _a, pref = self.trk
        return {ob.name: float(v * p) for ob, v, p in
                zip(self.observables, self.ws.trk_sum, pref)}

    def contents(self):
        """{Configuration: (n_bullet, n_circle, tau)} via in-order walk."""
        ws = self.ws
        out = {}
        stack = []
        node = ws.st_i[_k.ROOT]
        while stack or node >= 0:
            while node >= 0:
                stack.append(node)
                node = ws.child[node, 0]
            node = stack.pop()
            cfg = Configuration(self.model.n_sites,
                                tuple(int(w) for w in ws.keys[node]))
            out[cfg] = (int(ws.nb[node]), int(ws.no[node]),
                        float(ws.tau[node]))
            node = ws.child[node, 1]
        return out

    def validate(self) -> int:
        ws = self.ws
        trk_ptr, trk_site, trk_axis, _pref = self.trk
        return int(_k.validate_ensemble(
            ws.keys, ws.child, ws.prio, ws.nb, ws.no, ws.tau,
            ws.agg_n, ws.agg_p, ws.agg_r, ws.st_i,
            *self.model.kernel_args()[:5],
            trk_ptr, trk_site, trk_axis, ws.trk_sum, ws.dstack, ws.tmp))
