import re

import numpy as np
import pytest

from spinmc.cli import main

SINGLE = """
observables = ["z0"]

[model]
kind = "custom"
gamma = {gamma}

[model.lattice]
kind = "chain1D"
extent = [1]
boundary = "open"

[model.fields]
0 = [0.5, 0.0, 0.0]

[model.site_noise.0]
x = 1.0

[run]
t_max = 2.0
grid = {{ start = 0.4, stop = 2.0, num = 5 }}
n_traj = 2000
base_seed = 11
{extra}
[outputs]
directory = "{outdir}"
"""


def write_cfg(tmp_path, gamma=0.75, extra=""):
    p = tmp_path / "exp.toml"
    p.write_text(SINGLE.format(gamma=gamma, outdir=tmp_path / "out",
                               extra=extra))
    return str(p)


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_simulate_writes_csvs(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["simulate", cfg]) == 0
    hdr, rows = read_csv(tmp_path / "out" / "observables.csv")
    assert hdr == ["t", "name", "mean", "stderr"]
    assert len(rows) == 5
    hdr2, rows2 = read_csv(tmp_path / "out" / "particles.csv")
    assert hdr2 == ["t", "omega_mean", "omega_occ_mean", "stderr"]
    # classical regime: omega pinned at 1
    assert all(float(r[1]) == 1.0 for r in rows2)


def test_simulate_is_byte_deterministic(tmp_path):
    cfg = write_cfg(tmp_path)
    main(["simulate", cfg])
    a = (tmp_path / "out" / "observables.csv").read_bytes()
    main(["simulate", cfg])
    assert (tmp_path / "out" / "observables.csv").read_bytes() == a


def test_floats_have_full_precision(tmp_path):
    cfg = write_cfg(tmp_path)
    main(["simulate", cfg])
    text = (tmp_path / "out" / "observables.csv").read_text()
    val = text.splitlines()[1].split(",")[2]
    assert float(val) == float(repr(float(val)))   # lossless round trip
    # at least one float needs >10 digits, i.e. we are not truncating
    assert any(len(re.sub(r"[^0-9]", "", v)) > 10
               for v in text.split(",")[4:])


def test_engine_agrees_with_oracle_cli(tmp_path):
    cfg = write_cfg(tmp_path, gamma=0.25)
    main(["simulate", cfg])
    _, sim = read_csv(tmp_path / "out" / "observables.csv")
    main(["oracle", cfg, "--outdir", str(tmp_path / "oracle")])
    _, ora = read_csv(tmp_path / "oracle" / "observables.csv")
    for s, o in zip(sim, ora):
        assert abs(float(s[2]) - float(o[2])) < 5 * max(float(s[3]), 1e-3)


def test_config_error_exit_code(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("definitely not toml ===")
    assert main(["simulate", str(p)]) == 1


def test_missing_file_exit_code(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.toml")]) == 1


def test_omega_cap_exit_code(tmp_path):
    # gamma=0 single qubit: unbounded growth, tiny cap -> abort, exit 2
    cfg = write_cfg(tmp_path, gamma=0.0,
                    extra="omega_max = 20\n")
    rc = main(["simulate", cfg])
    assert rc == 2
    # partial data still written and flagged
    summary = (tmp_path / "out" / "run_summary.txt").read_text()
    assert re.search(r"aborted_at_cap = [1-9]", summary)


def test_build_matrix_and_gauge_dumps(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["build-matrix", cfg, "--outdir", str(tmp_path / "bm")]) == 0
    files = {p.name for p in (tmp_path / "bm").iterdir()}
    assert {"group0_combined.txt", "group0_gauged.txt",
            "group0_hamiltonian.txt", "group0_noise.txt",
            "sign_summary.txt"} <= files
    gauged = (tmp_path / "bm" / "group0_gauged.txt").read_text()
    assert "objective 0" in gauged
    assert main(["optimize-gauge", cfg, "--outdir", str(tmp_path / "og")]) == 0
    obj = (tmp_path / "og" / "gauge_objective.txt").read_text()
    assert "classical = true" in obj


def test_gamma_override_flag(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["optimize-gauge", cfg, "--gamma", "0.1",
                 "--outdir", str(tmp_path / "og")]) == 0
    obj = (tmp_path / "og" / "gauge_objective.txt").read_text()
    assert "classical = false" in obj


def test_critical_gamma_single_qubit(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["critical-gamma", cfg, "--outdir",
                 str(tmp_path / "cg")]) == 0
    text = (tmp_path / "cg" / "critical_gamma.txt").read_text()
    val = float(text.split("=")[1])
    assert abs(val - 0.5) < 1e-5


def test_design_noise_single_qubit(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["design-noise", cfg, "--outdir", str(tmp_path / "dn")]) == 0
    text = (tmp_path / "dn" / "noise_weights.toml").read_text()
    assert 'objective = 0.5' in text


def test_predict_output(tmp_path):
    cfg = write_cfg(tmp_path, gamma=0.25)
    main(["simulate", cfg])
    assert main(["predict", cfg, "--particles",
                 str(tmp_path / "out" / "particles.csv"),
                 "--outdir", str(tmp_path / "pr")]) == 0
    text = (tmp_path / "pr" / "predictions.txt").read_text()
    assert "mu_pred" in text and "mu_fit" in text
