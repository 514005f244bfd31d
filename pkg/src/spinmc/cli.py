"""Config-driven command line frontend.

Every subcommand reads one TOML experiment config (see config.py) and writes
analysis-ready text files into the configured output directory.  A few
common fields can be overridden by flags; flags win over the config file.

Exit codes: 0 ok, 1 bad config, 2 run aborted at the particle cap
(partial data written and flagged), 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import dense, predict
from .config import ConfigError, ExperimentConfig
from .configspace import AXES, Configuration, all_configurations
from .engine import EnsembleError, compile_model, run_ensemble
from .gauge import gauge_basis, optimize_gauge
from .noise import critical_gamma, design_noise, design_noise_single
from .opbasis import LocalRateMatrix, assemble_model, format_matrix
from .simplex import SimplexError

F = "{:.17g}".format  # lossless float text


def _load_config(args) -> ExperimentConfig:
    cfg = cfgmod.load(args.config)
    ov = {k: getattr(args, k, None) for k in
          ("n_traj", "t_max", "base_seed", "threads", "omega_max", "gamma")}
    if ov["gamma"] is not None:
        cfg.model["gamma"] = ov["gamma"]
    for k in ("n_traj", "t_max", "base_seed", "threads", "omega_max"):
        if ov[k] is not None:
            cfg.run[k] = ov[k]
    if getattr(args, "outdir", None):
        cfg.outputs["directory"] = args.outdir
    return cfg


def _outdir(cfg: ExperimentConfig) -> Path:
    d = Path(cfg.outputs.get("directory", "out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(path)


def _sign_summary(name: str, m: LocalRateMatrix) -> str:
    off = m.M.copy()
    np.fill_diagonal(off, 0.0)
    return (f"{name}: negative off-diagonal entries "
            f"{int((off < 0).sum())}, negative mass {F(m.negative_mass)}, "
            f"absolute mass {F(np.abs(off).sum())}")


def _model_groups(cfg: ExperimentConfig):
    """Distinct local rate matrices of the model, with their site groups."""
    assembled = assemble_model(cfg.model_spec())
    distinct = {}
    for sites, m in assembled.groups:
        key = m.M.tobytes()
        distinct.setdefault(key, (m, []))[1].append(sites)
    return list(distinct.values())


def cmd_build_matrix(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    spec = cfg.model_spec()
    ham_cfg = ExperimentConfig(**vars(cfg))
    ham_cfg.model = dict(cfg.model, gamma=0.0)
    summary = []
    for gi, (m_full, sites_list) in enumerate(_model_groups(cfg)):
        tag = f"group{gi}"
        header = (f"# sites {sites_list[0]}"
                  + (f" and {len(sites_list) - 1} equivalent group(s)"
                     if len(sites_list) > 1 else "") + "\n")
        _write(out / f"{tag}_combined.txt", header + format_matrix(m_full.M, m_full.k))
        _, gauged, obj = optimize_gauge(m_full, backend=cfg.gauge.get("backend", "auto"))
        _write(out / f"{tag}_gauged.txt",
               header + f"# gauge LP objective {F(obj)}\n"
               + format_matrix(gauged.M, gauged.k))
        summary.append(_sign_summary(f"{tag} combined", m_full))
        summary.append(_sign_summary(f"{tag} gauged", gauged))
    # Hamiltonian-only and noise-only views of the same groups
    for gi, (m_h, sites_list) in enumerate(_model_groups(ham_cfg)):
        _write(out / f"group{gi}_hamiltonian.txt",
               f"# sites {sites_list[0]}\n" + format_matrix(m_h.M, m_h.k))
        summary.append(_sign_summary(f"group{gi} hamiltonian", m_h))
    if spec.gamma > 0:
        noise_cfg = ExperimentConfig(**vars(cfg))
        if cfg.model.get("kind", "tfim") == "tfim":
            noise_cfg.model = dict(cfg.model, J=0.0, h=0.0)
        else:
            noise_cfg.model = dict(cfg.model, fields={}, couplings={})
        for gi, (m_n, sites_list) in enumerate(_model_groups(noise_cfg)):
            _write(out / f"group{gi}_noise.txt",
                   f"# sites {sites_list[0]}\n" + format_matrix(m_n.M, m_n.k))
            summary.append(_sign_summary(f"group{gi} noise", m_n))
    _write(out / "sign_summary.txt", "\n".join(summary) + "\n")
    return 0


def cmd_optimize_gauge(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    lines = []
    for gi, (m, sites_list) in enumerate(_model_groups(cfg)):
        _, gauged, obj = optimize_gauge(m, backend=cfg.gauge.get("backend", "auto"))
        _write(out / f"group{gi}_gauged.txt",
               f"# sites {sites_list[0]}\n# gauge LP objective {F(obj)}\n"
               + format_matrix(gauged.M, gauged.k))
        lines.append(f"group{gi} objective = {F(obj)}")
        lines.append(f"group{gi} classical = {str(obj == 0.0).lower()}")
    _write(out / "gauge_objective.txt", "\n".join(lines) + "\n")
    return 0


def cmd_design_noise(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    spec = cfg.model_spec()
    lat = spec.lattice
    lines = []
    seen = set()
    linked = {s for link in lat.links for s in link}
    for i in range(lat.n_sites):
        if i in linked:
            continue
        h = tuple(spec.local_fields.get(i, (0.0,) * 3))
        if ("site", h) in seen:
            continue
        seen.add(("site", h))
        des = design_noise_single(h)
        lines.append(f"[site.\"{i}\"]")
        lines.append(f"objective = {F(des.objective)}")
        for fam, w in sorted(des.weights().items(), key=str):
            lines.append(f"\"{fam}\" = {F(w)}")
        lines.append("")
    for (i, j) in lat.links:
        h_i = spec.local_fields.get(i, (0.0,) * 3)
        h_j = spec.local_fields.get(j, (0.0,) * 3)
        J = spec.pair_couplings.get((i, j))
        key = (tuple(h_i), tuple(h_j),
               None if J is None else np.asarray(J).tobytes())
        if key in seen:
            continue
        seen.add(key)
        des = design_noise((h_i, h_j), J, lat.dim)
        lines.append(f"[link.\"{i},{j}\"]")
        lines.append(f"objective = {F(des.objective)}")
        for fam, w in sorted(des.weights().items(), key=str):
            name = fam if isinstance(fam, str) else "".join(fam)
            lines.append(f"\"{name}\" = {F(w)}")
        lines.append("")
    _write(out / "noise_weights.toml", "\n".join(lines))
    return 0


def _link_matrices(cfg: ExperimentConfig):
    """(Hamiltonian-only, unit-noise) local matrices of the first link."""
    spec = cfg.model_spec()
    ham = assemble_model(type(spec)(spec.lattice, spec.local_fields,
                                    spec.pair_couplings, {}, {}, gamma=0.0))
    unit = assemble_model(type(spec)(spec.lattice, {}, {}, spec.local_noise,
                                     spec.pair_noise, gamma=1.0))
    groups_h = dict((tuple(s), m) for s, m in ham.groups)
    groups_n = dict((tuple(s), m) for s, m in unit.groups)
    return groups_h, groups_n


def cmd_critical_gamma(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    groups_h, groups_n = _link_matrices(cfg)
    lines = []
    seen = set()
    for sites, m_h in groups_h.items():
        m_n = groups_n.get(sites)
        if m_n is None or float(np.abs(m_n.M).sum()) == 0.0:
            continue
        key = (m_h.M.tobytes(), m_n.M.tobytes())
        if key in seen:
            continue
        seen.add(key)
        gc = critical_gamma(m_h, m_n, tol=args.tol)
        lines.append(f"sites {sites}: gamma_c = {F(gc)}")
        print(lines[-1])
    if not lines:
        raise ConfigError("model has no noise template to scale")
    _write(out / "critical_gamma.txt", "\n".join(lines) + "\n")
    return 0


def _write_series_csv(path: Path, grid, names, mean, stderr) -> None:
    rows = ["t,name,mean,stderr"]
    for ti, t in enumerate(grid):
        for oi, name in enumerate(names):
            rows.append(f"{F(t)},{name},{F(mean[ti, oi])},{F(stderr[ti, oi])}")
    _write(path, "\n".join(rows) + "\n")


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    model = compile_model(cfg.model_spec(),
                          gauge=cfg.gauge.get("optimize", True),
                          backend=cfg.gauge.get("backend", "auto"))
    obs = cfg.trackers()
    grid = cfg.grid()
    res = run_ensemble(model, cfg.initial_state(), obs, grid,
                       **cfg.run_params())
    _write_series_csv(out / "observables.csv", res.grid, res.names,
                      res.obs_mean, res.obs_stderr)
    rows = ["t,omega_mean,omega_occ_mean,stderr"]
    for ti, t in enumerate(res.grid):
        rows.append(f"{F(t)},{F(res.omega_mean[ti])},"
                    f"{F(res.occ_mean[ti])},{F(res.omega_stderr[ti])}")
    _write(out / "particles.csv", "\n".join(rows) + "\n")
    _write(out / "run_summary.txt", "\n".join([
        f"trajectories = {res.n_traj}",
        f"aborted_at_cap = {res.aborted}",
        f"events = {res.events}",
        f"branch_events = {res.branch_events}",
        f"wall_time_s = {F(res.wall_time)}",
    ]) + "\n")
    if res.aborted:
        print(f"warning: {res.aborted}/{res.n_traj} trajectories hit the "
              "particle cap; data is partial", file=sys.stderr)
        return 2
    return 0


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    spec = cfg.model_spec()
    n = spec.lattice.n_sites
    obs = cfg.trackers()
    grid = cfg.grid()
    init = cfg.initial_state()
    if init.kind == "product":
        rho0 = dense.product_state(Configuration.from_indices(init.base))
    else:
        rho0 = dense.bell_pair_state(n, init.pairs, init.phases,
                                     base=list(init.base))
    rhos = dense.integrate(spec, rho0, grid)
    mean = np.empty((len(grid), len(obs)))
    for ti, rho in enumerate(rhos):
        for oi, ob in enumerate(obs):
            mean[ti, oi] = dense.observable_expectation(
                rho, ob.sites, [AXES[a] for a in ob.axes], n)
    _write_series_csv(out / "observables.csv", grid,
                      [ob.name for ob in obs], mean, np.zeros_like(mean))
    rows = ["t,config,p"]
    configs = [repr(c) for c in all_configurations(n)]
    for ti, rho in enumerate(rhos):
        p = dense.projector_probabilities(rho, n)
        for c, pc in zip(configs, p):
            rows.append(f"{F(grid[ti])},{c},{F(pc)}")
    _write(out / "probabilities.csv", "\n".join(rows) + "\n")
    return 0


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    model = compile_model(cfg.model_spec(),
                          gauge=cfg.gauge.get("optimize", True),
                          backend=cfg.gauge.get("backend", "auto"))
    mu = predict.growth_rate_model(model)
    sat_e, sat_a = predict.omega_saturation_model(model)
    lines = [f"n_sites = {model.n_sites}",
             f"mu_pred = {F(mu)}",
             f"omega_sat_exact = {F(sat_e)}",
             f"omega_sat_approx = {F(sat_a)}"]
    if args.particles:
        t, om, om_err = _read_particles(args.particles)
        rep = predict.growth_report(model, t, om, om_err)
        lines += [f"mu_fit = {F(rep.mu_fit)}",
                  f"fit_rejected = {str(rep.fit_rejected).lower()}",
                  f"omega_plateau = {F(rep.omega_sat_meas)}",
                  f"omega_plateau_err = {F(rep.omega_sat_meas_err)}"]
    _write(out / "predictions.txt", "\n".join(lines) + "\n")
    return 0


def _read_particles(path):
    rows = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not rows or rows[0] != "t,omega_mean,omega_occ_mean,stderr":
        raise ConfigError(f"{path} is not a particles.csv file")
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    return data[:, 0], data[:, 1], data[:, 3]


CSV_HELP = """\
output files:
  observables.csv   header t,name,mean,stderr; one row per grid time per
                    observable; floats printed with 17 significant digits
  particles.csv     header t,omega_mean,omega_occ_mean,stderr; mean total
                    walker count and occupied-configuration count
  run_summary.txt   trajectory counts, event totals, wall time
"""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spinmc",
        description="signed-Markov-chain simulation of open spin lattices",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, epilog=None):
        sp = sub.add_parser(
            name, help=help_, epilog=epilog,
            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("config", help="TOML experiment config file")
        sp.add_argument("--outdir", help="override output directory")
        sp.add_argument("--gamma", type=float, help="override noise prefactor")
        sp.set_defaults(fn=fn)
        return sp

    add("build-matrix", cmd_build_matrix,
        "dump local rate matrices (plain, gauged, noise, combined)")
    add("optimize-gauge", cmd_optimize_gauge,
        "minimize negative off-diagonal mass over the gauge orbit")
    add("design-noise", cmd_design_noise,
        "LP-design classicalizing noise weights for each link")
    sp = add("critical-gamma", cmd_critical_gamma,
             "bisect the critical noise prefactor per link")
    sp.add_argument("--tol", type=float, default=1e-6,
                    help="bisection tolerance (default 1e-6)")
    sp = add("simulate", cmd_simulate,
             "run the stochastic engine and write time-series CSVs",
             epilog=CSV_HELP)
    sp.add_argument("--n-traj", dest="n_traj", type=int,
                    help="override trajectory count")
    sp.add_argument("--t-max", dest="t_max", type=float,
                    help="override final time")
    sp.add_argument("--seed", dest="base_seed", type=int,
                    help="override base seed")
    sp.add_argument("--threads", type=int,
                    help=f"override worker threads (also env "
                         f"{cfgmod.THREADS_ENV_VAR})")
    sp.add_argument("--omega-max", dest="omega_max", type=int,
                    help="override walker cap per trajectory")
    add("oracle", cmd_oracle,
        "dense integration ground truth in the same CSV schema",
        epilog=CSV_HELP.replace("run_summary.txt   trajectory counts, "
                                "event totals, wall time",
                                "probabilities.csv header t,config,p"))
    sp = add("predict", cmd_predict,
             "growth-rate and saturation predictions (optionally fitted)")
    sp.add_argument("--particles", help="particles.csv from a simulate run "
                    "to fit against the predictions")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.time()
    try:
        rc = args.fn(args)
    except (ConfigError, FileNotFoundError, SimplexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except EnsembleError as e:
        print(f"internal invariant failure: {e}", file=sys.stderr)
        return 3
    if rc == 0:
        print(f"done in {time.time() - t0:.2f}s")
    return rc


if __name__ == "__main__":
    sys.exit(main())
