import os

import pytest
from hypothesis import given, settings, strategies as st

from bscch.cli import main
from bscch.config import KEY_REGISTRY, build_run_config, parse_config, resolve, serialize_config
from bscch.errors import ValidationError
from bscch.mesh import read_mesh

SHORT_CFG = """
mesh.nb = 16
mesh.nr = 4
model.K = 1
model.L = 1
time.tau = 1e-4
time.T = 5e-4
init.mode = random
init.amplitude = 0.2
init.seed = 7
potential.bulk = log
potential.surf = log
yosida.eps = 0.05
output.every = 1
"""


@pytest.fixture()
def cfg_file(tmp_path):
    p = tmp_path / "short.cfg"
    p.write_text(SHORT_CFG + f"output.dir = {tmp_path / 'out'}\n")
    return str(p)


# -- config --------------------------------------------------------------------

def test_parse_serialize_round_trip():
    cfg = parse_config(SHORT_CFG)
    assert parse_config(serialize_config(cfg)) == cfg


@settings(max_examples=50, deadline=None)
@given(keys=st.lists(st.sampled_from(sorted(KEY_REGISTRY)), unique=True),
       values=st.lists(st.text(
           alphabet=st.characters(min_codepoint=33, max_codepoint=126,
                                  exclude_characters="#="),
           min_size=1).map(str.strip).filter(bool), min_size=50, max_size=50))
def test_round_trip_property(keys, values):
    cfg = dict(zip(keys, values))
    assert parse_config(serialize_config(cfg)) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ValidationError, match="unknown config keys"):
        resolve({"model.Q": "1"})


def test_extended_parameters_accept_inf():
    cfg = resolve(parse_config("model.K = inf\nmodel.L = 0"))
    assert cfg["model.K"] == float("inf")
    assert cfg["model.L"] == 0.0


def test_malformed_lines_rejected():
    with pytest.raises(ValidationError):
        parse_config("just words\n")
    with pytest.raises(ValidationError):
        parse_config("a.b = 1\na.b = 2\n")


def test_build_run_config_revalidates():
    cfg = parse_config(SHORT_CFG)
    cfg["time.tau"] = "-1"
    with pytest.raises(Exception):
        build_run_config(cfg)


# -- subcommands ----------------------------------------------------------------

def test_mesh_subcommand(tmp_path, capsys):
    out = str(tmp_path / "m.mesh")
    assert main(["mesh", "--nb", "16", "--nr", "4", "--out", out]) == 0
    mesh = read_mesh(out)
    assert mesh.n_vertices == 65


def test_potential_check_admissible(capsys):
    assert main(["potential-check", "--pair", "log,log", "--alpha", "0.5"]) == 0
    assert "admissible" in capsys.readouterr().out


def test_potential_check_inadmissible(capsys):
    assert main(["potential-check", "--pair", "log,obst", "--alpha", "1.0"]) == 1
    assert "inadmissible: |alpha| >= 1" in capsys.readouterr().err


def test_elliptic_mms_subcommand(capsys):
    assert main(["elliptic-mms", "--K", "inf", "--levels", "2"]) == 0
    out = capsys.readouterr().out
    ratios = [float(line.split()[1]) for line in out.splitlines()
              if line.startswith("ratio")]
    assert ratios and all(r >= 3.4 for r in ratios)


def test_poincare_subcommand(capsys):
    assert main(["poincare", "--K", "0", "--nb", "16", "--nr", "4"]) == 0
    assert "C_P" in capsys.readouterr().out


def test_unknown_subcommand_exits_1(capsys):
    assert main(["frobnicate"]) == 1


def test_unknown_flag_exits_1(capsys):
    assert main(["mesh", "--nb", "16", "--sides", "3", "--out", "x"]) == 1


def test_run_deterministic_and_csv_header(cfg_file, tmp_path):
    assert main(["run", "--config", cfg_file]) == 0
    series = tmp_path / "out" / "series.csv"
    first = series.read_bytes()
    header = first.decode().splitlines()[0]
    assert header == ("t,mass_bulk,mass_surf,mass_combined,energy,diss_bulk,"
                      "diss_surf,diss_robin,conv_power_bulk,conv_power_surf,"
                      "energy_residual,sep_margin_bulk,sep_margin_surf,newton_iters")
    assert main(["run", "--config", cfg_file]) == 0
    assert series.read_bytes() == first


def test_run_vtk_output(tmp_path):
    p = tmp_path / "v.cfg"
    p.write_text(SHORT_CFG + f"output.dir = {tmp_path / 'out'}\noutput.vtk = true\n")
    assert main(["run", "--config", str(p)]) == 0
    files = os.listdir(tmp_path / "out")
    assert any(f.startswith("bulk_") for f in files)
    assert any(f.startswith("surf_") for f in files)


def test_run_bad_config_exits_1(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("model.Q = 1\n")
    assert main(["run", "--config", str(p)]) == 1


def test_limit_study_subcommand(cfg_file, capsys):
    assert main(["limit-study", "--config", cfg_file,
                 "--parameter", "K->0", "--schedule", "1,0.5"]) == 0
    assert "decreasing" in capsys.readouterr().out


def test_cont_dep_subcommand(tmp_path, capsys):
    p = tmp_path / "c.cfg"
    p.write_text(SHORT_CFG.replace("init.mode = random", "init.mode = bubbles")
                 + "velocity.bulk = rigid_rotation\nvelocity.omega = 1\n")
    assert main(["cont-dep", "--config", str(p), "--amplitudes", "0,1e-3"]) == 0
    assert "zero_is_zero: True" in capsys.readouterr().out
