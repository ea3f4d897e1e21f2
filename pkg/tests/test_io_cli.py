import csv
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import synthetic_problem
from evykit import PERU_PARAMS, HarvestPolicy, LotkaVolterra, ConstraintSet, PERU_MIN_BIOMASS, run
from evykit.cli import main
from evykit.io import (
    ConfigError,
    DataError,
    parse_config,
    read_observations,
    read_trajectory,
    sig3,
    write_observations,
    write_trajectory,
)

MODEL = """
[model]
R = 2.25
L = 0.945
alpha = 1.22e-6
beta = 4.845e-8
K = 37285000
"""
CONSTRAINTS = """
[constraints]
min_biomass = 7000000, 200000
min_catch = {catch}
"""
STATE0 = """
[state0]
y = 12000000
z = 300000
"""


def write_config(path, *blocks, catch="0, 0"):
    text = "".join(blocks).replace("{catch}", catch)
    path.write_text(text)
    return str(path)


def data_rows(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def report(path):
    out = {}
    for line in open(path):
        if " = " in line and not line.startswith("#"):
            k, v = line.rstrip("\n").split(" = ", 1)
            out[k] = v
    return out


# --- config -------------------------------------------------------------------


def test_parse_full_config():
    cfg = parse_config(MODEL + CONSTRAINTS.replace("{catch}", "1, 2") + STATE0 + """
[grid]
bounds = 0, 4e7, 0, 1.5e6
resolution = 100
[fit]
weight_prey = 1
weight_pred = 2
[simulate]
policy = constant_effort
values = 0.1, 0.2
horizon = 20
[msy]
resolution = 51
[output]
dir = results
""")
    assert cfg.model == PERU_PARAMS
    assert cfg.constraints.min_catch == (1.0, 2.0)
    np.testing.assert_array_equal(cfg.state0, [1.2e7, 3e5])
    assert cfg.grid.resolution == (100, 100)
    assert cfg.grid.bounds.tolist() == [[0, 4e7], [0, 1.5e6]]
    assert cfg.fit.species_weights == (1.0, 2.0)
    assert cfg.simulate.policy == HarvestPolicy.constant_effort((0.1, 0.2))
    assert cfg.simulate.horizon == 20
    assert cfg.msy.resolution == 51
    assert cfg.output_dir == "results"
    assert len(cfg.sha256) == 64


@pytest.mark.parametrize("text, message", [
    ("[modle]\nR = 2", "unknown section"),
    (MODEL + "gamma = 1\n", "unknown key"),
    (MODEL.replace("L = 0.945", "L = 1.5"), "L must lie"),
    (MODEL.replace("L = 0.945\n", ""), "missing key"),
    (MODEL.replace("2.25", "two"), "not a number"),
    ("[constraints]\nmin_catch = 0, 0\n", "min_biomass"),
    ("[constraints]\nmin_biomass = 1, 2, 3\n", "expected 2"),
    ("[constraints]\nmin_biomass = -1, 2\n", "negative"),
    ("[simulate]\npolicy = constant_catch\n", "needs key: values"),
    ("[simulate]\nhorizon = 0\n", "at least 1"),
    ("[grid]\nbounds = 1, 0, 0, 1\n", "lo < hi"),
    ("[fit]\nweight_prey = 1\n", "both"),
    ("not an ini file", "ini"),
])
def test_config_rejected(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


@pytest.mark.parametrize("x, expected", [
    (5_399_248.22, "5400000"),
    (56_830.0, "56800"),
    (0.87573, "0.876"),
    (123.4, "123"),
    (0.0, "0"),
    (-1234.5, "-1230"),
])
def test_sig3(x, expected):
    assert sig3(x) == expected


@given(st.floats(1e-6, 1e12))
def test_sig3_three_figures(x):
    s = sig3(x)
    assert "," not in s
    assert float(s) == pytest.approx(x, rel=5e-3)


# --- CSV ------------------------------------------------------------------------


def test_observation_round_trip(tmp_path):
    s = synthetic_problem()
    path = tmp_path / "obs.csv"
    with open(path, "w") as fh:
        write_observations(fh, s, header=["# a comment"])
    back = read_observations(path)
    assert np.array_equal(back.years, s.years)
    assert np.array_equal(back.biomass, s.biomass)
    assert np.array_equal(back.catches, s.catches)
    assert path.read_text().splitlines()[1] == "year,biomass_prey,biomass_pred,catch_prey,catch_pred"


def test_observation_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("year,prey\n1,2\n")
    with pytest.raises(DataError, match="header"):
        read_observations(p)
    p.write_text("year,biomass_prey,biomass_pred,catch_prey,catch_pred\n1,2,3,4,x\n2,1,1,1,1\n")
    with pytest.raises(DataError, match="bad value"):
        read_observations(p)
    p.write_text("year,biomass_prey,biomass_pred,catch_prey,catch_pred\n1,2,3,4,5\n3,1,1,1,1\n")
    with pytest.raises(DataError, match="consecutive"):
        read_observations(p)
    with pytest.raises(DataError):
        read_observations(tmp_path / "missing.csv")


def test_trajectory_round_trip(tmp_path, peru, peru_evy):
    traj = run(peru, (1.2e7, 3e5), HarvestPolicy.viable_min(), peru_evy, horizon=5, start_year=2000)
    path = tmp_path / "t.csv"
    with open(path, "w") as fh:
        write_trajectory(fh, traj)
    rows = data_rows(path)
    assert rows[0] == ["year", "y", "z", "v", "w", "catch_y", "catch_z", "in_kernel", "constraints_ok"]
    assert rows[-1][3:7] == ["", "", "", ""]
    assert rows[1][-2:] == ["1", "1"]
    back = read_trajectory(path)
    assert np.array_equal(back.states, traj.states)
    assert np.array_equal(back.efforts, traj.efforts)
    assert back.start_year == 2000


def test_observations_read_as_trajectory(tmp_path):
    s = synthetic_problem()
    path = tmp_path / "obs.csv"
    with open(path, "w") as fh:
        write_observations(fh, s)
    traj = read_trajectory(path)
    np.testing.assert_allclose(traj.catches, s.catches[:-1], rtol=1e-15)


# --- commands -----------------------------------------------------------------


def test_evy_command(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS, STATE0)
    assert main(["evy", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    row = dict(zip(*data_rows(tmp_path / "o" / "evy.csv")))
    assert float(row["evy_prey"]) == pytest.approx(5_399_248.223146038, rel=1e-12)
    assert float(row["evy_pred"]) == pytest.approx(56_830, rel=1e-12)
    assert row["branch_prey"] == "equilibrium-capped" and row["favorable"] == "yes"
    rep = report(tmp_path / "o" / "evy.txt")
    assert rep["evy_prey"] == "5400000" and rep["evy_pred"] == "56800"
    assert rep["status"] == "ok"


def test_evy_output_header_and_determinism(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS, STATE0)
    texts = []
    for d in ("a", "b"):
        assert main(["evy", "--config", cfg, "--out", str(tmp_path / d)]) == 0
        texts.append([(tmp_path / d / f).read_text().splitlines() for f in ("evy.txt", "evy.csv")])
    for a, b in zip(*texts):
        assert a[0] == "# evykit 0.1.0"
        assert a[1].startswith("# config_sha256 ")
        assert a[2].startswith("# generated ")
        assert [l for l in a if not l.startswith("# generated")] == [l for l in b if not l.startswith("# generated")]


def test_evy_catch_above_yield(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS, catch="6000000, 0")
    assert main(["evy", "--config", cfg, "--out", str(tmp_path)]) == 3
    rep = report(tmp_path / "evy.txt")
    assert "exceeds evy" in rep["violation_prey"]


def test_evy_precondition_failure(tmp_path, caplog):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS, STATE0.replace("12000000", "6000000"))
    assert main(["evy", "--config", cfg, "--out", str(tmp_path)]) == 3
    assert "y0 >= y_min" in caplog.text


def test_missing_constraints(tmp_path, caplog):
    cfg = write_config(tmp_path / "c.ini", MODEL)
    assert main(["evy", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "[constraints]" in caplog.text


def test_io_errors(tmp_path):
    assert main(["evy", "--config", str(tmp_path / "none.ini")]) == 2
    cfg = write_config(tmp_path / "c.ini", MODEL)
    assert main(["fit", "--config", cfg, "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 4
    assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == 2
    (tmp_path / "file").write_text("")
    cfg2 = write_config(tmp_path / "c2.ini", MODEL, CONSTRAINTS)
    assert main(["evy", "--config", cfg2, "--out", str(tmp_path / "file" / "sub")]) == 4


def test_kernel_command(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS, "[grid]\nresolution = 60\n")
    assert main(["kernel", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = report(tmp_path / "kernel.txt")
    assert float(rep["agreement_percent"]) >= 99
    assert int(rep["stationary_index"]) <= 2
    assert len(data_rows(tmp_path / "kernel.csv")) == 1 + 3600


def test_kernel_smoke_and_empty(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS, "[grid]\nresolution = 2, 2\n")
    assert main(["kernel", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert 0 <= float(report(tmp_path / "a" / "kernel.txt")["agreement_percent"]) <= 100
    cfg = write_config(tmp_path / "d.ini", MODEL, CONSTRAINTS, "[grid]\nbounds = 0, 5e6, 0, 1e5\nresolution = 10\n")
    assert main(["kernel", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    rep = report(tmp_path / "b" / "kernel.txt")
    assert rep["kernel_cells"] == "0" and rep["empty"] == "yes"


def test_fit_command(tmp_path):
    obs = tmp_path / "obs.csv"
    with open(obs, "w") as fh:
        write_observations(fh, synthetic_problem())
    guess = PERU_PARAMS.as_array() * np.array([0.8, 0.8, 1.2, 0.8, 1.2])
    fit_block = "[fit]\n" + "".join(f"{k} = {float(v)!r}\n" for k, v in zip(("R", "L", "alpha", "beta", "K"), guess))
    cfg = write_config(tmp_path / "c.ini", fit_block)
    assert main(["fit", "--config", cfg, "--data", str(obs), "--out", str(tmp_path)]) == 0
    row = dict(zip(*data_rows(tmp_path / "fit_params.csv")))
    est = np.array([float(row[k]) for k in ("R", "L", "alpha", "beta", "K")])
    np.testing.assert_allclose(est, PERU_PARAMS.as_array(), rtol=0.05)
    assert float(row["objective"]) <= 1e-4 * float(row["initial_objective"])
    assert len(data_rows(tmp_path / "fit_trajectory.csv")) == 12


def test_simulate_command(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS, STATE0, "[simulate]\npolicy = viable_min\nhorizon = 100\n",
                       catch="5399248, 56829")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = report(tmp_path / "simulate.txt")
    assert rep["violations"] == "0"
    assert len(data_rows(tmp_path / "trajectory.csv")) == 1 + 101


def test_simulate_viable_needs_constraints(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, STATE0)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_msy_single_species(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL.replace("1.22e-6", "0").replace("4.845e-8", "0"),
                       "[msy]\nsearch_bounds = 0, 1.25, 0, 0.5\n")
    assert main(["msy", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = data_rows(tmp_path / "msy.csv")
    prey = dict(zip(rows[0], rows[1]))
    assert float(prey["msy"]) == pytest.approx(11_651_562.5, rel=1e-9)
    assert rows[2][1] == ""  # no predator equilibrium


def test_audit_command(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS, STATE0)
    assert main(["audit", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    m = LotkaVolterra(PERU_PARAMS)
    traj = run(m, (1.2e7, 3e5), HarvestPolicy.constant_effort((0.9, 0.1)), horizon=10)
    path = tmp_path / "t.csv"
    with open(path, "w") as fh:
        write_trajectory(fh, traj)
    assert main(["audit", "--config", cfg, "--data", str(path), "--out", str(tmp_path / "b")]) == 3
    rep = report(tmp_path / "b" / "audit.txt")
    assert int(rep["violations"]) > 0
    assert len(data_rows(tmp_path / "b" / "audit.csv")) == 1 + int(rep["violations"])


def test_console_script(tmp_path):
    cfg = write_config(tmp_path / "c.ini", MODEL, CONSTRAINTS)
    r = subprocess.run([sys.executable, "-m", "evykit.cli", "evy", "--config", cfg, "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run([sys.executable, "-m", "evykit.cli", "bogus", "--config", cfg], capture_output=True, text=True)
    assert r.returncode == 2
