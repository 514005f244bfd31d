"""Experiment configuration files: TOML in, TOML out.

One document describes a full experiment (model, initial state, observables,
run parameters, gauge options, output directory).  serialize() emits a
document that parse() maps back to an equal ExperimentConfig, so configs
can be archived alongside their outputs and re-run verbatim.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import tomli

from .configspace import (AXES, Lattice, ModelSpec, SINGLE_FAMILIES,
                          state_index, state_axis_sign, tfim_model)
from .engine import DEFAULT_OMEGA_MAX, InitialState, ObservableTracker

THREADS_ENV_VAR = "SPINMC_THREADS"


def state_token(idx: int) -> str:
    axis, sign = state_axis_sign(idx)
    return ("+" if sign > 0 else "-") + axis


def parse_state_token(tok: str) -> int:
    """'+z' / '-x' -> site-state index."""
    tok = tok.strip()
    if len(tok) != 2 or tok[0] not in "+-" or tok[1] not in AXES:
        raise ConfigError(f"bad site-state token: {tok!r}")
    return state_index(tok[1], 1 if tok[0] == "+" else -1)


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass
class ExperimentConfig:
    """All knobs of one experiment, in plain-data form."""

    model: dict = field(default_factory=dict)
    init: dict = field(default_factory=lambda: {"kind": "product",
                                                "base": "+z"})
    observables: list = field(default_factory=list)
    run: dict = field(default_factory=dict)
    gauge: dict = field(default_factory=lambda: {"optimize": True,
                                                 "backend": "auto"})
    outputs: dict = field(default_factory=lambda: {"directory": "out"})

    # -- builders ---------------------------------------------------------

    def lattice(self) -> Lattice:
        lat = self.model.get("lattice")
        if not isinstance(lat, dict):
            raise ConfigError("missing [model.lattice] table")
        try:
            return Lattice(lat.get("kind", "chain1D"),
                           tuple(int(x) for x in lat.get("extent", ())),
                           lat.get("boundary", "periodic"))
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def model_spec(self) -> ModelSpec:
        m = self.model
        kind = m.get("kind", "tfim")
        lattice = self.lattice()
        gamma = float(m.get("gamma", 0.0))
        try:
            if kind == "tfim":
                return tfim_model(lattice, float(m.get("J", 0.5)),
                                  float(m.get("h", 1.0)), gamma=gamma,
                                  with_noise=bool(m.get("with_noise", True)))
            if kind == "custom":
                fields = {int(k): tuple(float(x) for x in v)
                          for k, v in m.get("fields", {}).items()}
                coup = {_parse_link(k): np.array(v, dtype=float)
                        for k, v in m.get("couplings", {}).items()}
                site_noise = {int(k): {f: float(w) for f, w in v.items()}
                              for k, v in m.get("site_noise", {}).items()}
                link_noise = {}
                for k, v in m.get("link_noise", {}).items():
                    link_noise[_parse_link(k)] = {
                        _parse_pair_family(f): float(w) for f, w in v.items()}
                return ModelSpec(lattice, fields, coup, site_noise,
                                 link_noise, gamma=gamma)
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e)) from e
        raise ConfigError(f"unknown model kind: {kind!r}")

    def initial_state(self) -> InitialState:
        kind = self.init.get("kind", "product")
        n = self.lattice().n_sites
        try:
            if kind == "product":
                base = self.init.get("base", "+z")
                if isinstance(base, str):
                    c0 = [parse_state_token(base)] * n
                else:
                    c0 = [parse_state_token(t) for t in base]
                if len(c0) != n:
                    raise ConfigError("base state length != number of sites")
                return InitialState.product(c0)
            if kind == "bell_pairs":
                pairs = [tuple(int(x) for x in p)
                         for p in self.init.get("pairs", [])]
                phases = [float(x) for x in self.init.get("phases", [])]
                base = self.init.get("base", "+z")
                if isinstance(base, str):
                    base = [base] * n
                return InitialState.bell_pairs(
                    n, pairs, phases,
                    base=[parse_state_token(t) for t in base])
            raise ConfigError(f"unknown init kind: {kind!r}")
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def trackers(self) -> tuple:
        try:
            return tuple(ObservableTracker.parse(s) for s in self.observables)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def grid(self) -> np.ndarray:
        g = self.run.get("grid")
        if isinstance(g, dict):
            return np.linspace(float(g["start"]), float(g["stop"]),
                               int(g["num"]))
        if g is None:
            t_max = self.t_max()
            return np.linspace(t_max / 20.0, t_max, 20)
        return np.asarray([float(x) for x in g])

    def t_max(self) -> float:
        g = self.run.get("grid")
        default = None
        if isinstance(g, dict):
            default = float(g["stop"])
        elif g:
            default = float(g[-1])
        t = float(self.run.get("t_max", default if default else 1.0))
        return t

    def threads(self) -> int | None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env:
            return max(1, int(env))
        t = int(self.run.get("threads", 0))
        return t if t > 0 else None

    def run_params(self) -> dict:
        return {
            "t_max": self.t_max(),
            "n_traj": int(self.run.get("n_traj", 1000)),
            "base_seed": int(self.run.get("base_seed", 1)),
            "threads": self.threads(),
            "omega_max": int(self.run.get("omega_max", DEFAULT_OMEGA_MAX)),
            "debug": bool(self.run.get("debug_checks", False)),
        }


def _parse_link(key: str) -> tuple[int, int]:
    parts = key.replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"bad link key: {key!r}")
    return int(parts[0]), int(parts[1])


def _parse_pair_family(key: str) -> tuple[str, str]:
    if len(key) != 2 or key[0] not in AXES or key[1] not in AXES:
        raise ConfigError(f"bad pair jump family: {key!r}")
    return key[0], key[1]


def parse(text: str) -> ExperimentConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"config is not valid TOML: {e}") from e
    known = {"model", "init", "observables", "run", "gauge", "outputs"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    cfg = ExperimentConfig()
    for k in known & set(doc):
        setattr(cfg, k, doc[k])
    if not isinstance(cfg.observables, list):
        raise ConfigError("observables must be a list of Pauli strings")
    return cfg


def load(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse(f.read())


# -- writer ---------------------------------------------------------------
# tomli only reads; the writer below covers the value types configs use
# (str, bool, int, float, lists, nested dicts).

def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize value of type {type(v).__name__}")


def _bare_key(k: str) -> str:
    if k and all(c.isalnum() or c in "-_" for c in k):
        return k
    return _fmt_value(k)


def _emit_table(lines, name, table):
    scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
    subs = {k: v for k, v in table.items() if isinstance(v, dict)}
    if scalars or not subs:
        lines.append(f"[{name}]")
        for k, v in scalars.items():
            lines.append(f"{_bare_key(k)} = {_fmt_value(v)}")
        lines.append("")
    for k, v in subs.items():
        _emit_table(lines, f"{name}.{_bare_key(k)}", v)


def serialize(cfg: ExperimentConfig) -> str:
    lines = []
    if cfg.observables:
        lines.append(f"observables = {_fmt_value(cfg.observables)}")
        lines.append("")
    for name in ("model", "init", "run", "gauge", "outputs"):
        table = getattr(cfg, name)
        if table:
            _emit_table(lines, name, table)
    return "\n".join(lines).rstrip() + "\n"


def dump(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize(cfg))
