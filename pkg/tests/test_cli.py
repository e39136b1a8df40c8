"""End-to-end tests for the command-line interface and its exit-code contract."""

import json
import shutil
import subprocess

import pytest

from indefstring import catalog
from indefstring.cli import main
from indefstring.coefficients import spec_from_json, spec_discrepancy, spec_to_json
from indefstring.convergence import mollify_string

ATOM_MID = {"L": 1.0, "omega": {"atoms": [{"x": 0.5, "mass": 1.0}]}}
UNIFORM = {"L": 1.0, "omega": {"density": [{"a": 0.0, "b": 1.0, "value": 1.0}]}}
HALFLINE = {"L": "inf", "omega": {"density": [{"a": 0.0, "b": "inf", "value": 1.0}]}}
HAMILTONIAN = {
    "pieces": [
        {"len": 5.0, "h11": 0.8, "h12": 0.4},
        {"len": "inf", "h11": 1.0, "h12": 0.0},
    ]
}


def _dump(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture
def grid_csv(tmp_path):
    path = tmp_path / "grid.csv"
    path.write_text("re_z,im_z\n0,1\n2,0.5\n", encoding="utf-8")
    return str(path)


# -- forward ------------------------------------------------------------------


def test_forward_writes_m_samples(tmp_path, grid_csv):
    spec = _dump(tmp_path / "spec.json", ATOM_MID)
    out = tmp_path / "m.csv"
    assert main(["forward", "--spec", spec, "--grid", grid_csv, "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "re_z,im_z,re_m,im_m,trunc_x,est_err"
    assert len(lines) == 3
    row = lines[1].split(",")
    assert row[0] == "0" and row[1] == "1"
    # closed form at z=i: -1/z + 1/(4 - z)
    z = 1j
    expected = -1 / z + 1 / (4 - z)
    assert float(row[2]) == pytest.approx(expected.real, abs=1e-10)
    assert float(row[3]) == pytest.approx(expected.imag, abs=1e-10)
    assert float(row[4]) == 1.0  # finite string: evaluated at its endpoint
    assert float(row[5]) == 0.0


def test_forward_output_is_byte_stable_across_runs_and_jobs(tmp_path, grid_csv):
    spec = _dump(tmp_path / "spec.json", HALFLINE)
    outs = []
    for name, jobs in (("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")):
        out = tmp_path / name
        rc = main(["forward", "--spec", spec, "--grid", grid_csv, "--out", str(out),
                   "--jobs", jobs])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_forward_optionally_writes_hamiltonian(tmp_path, grid_csv):
    spec = _dump(tmp_path / "spec.json", ATOM_MID)
    ham = tmp_path / "h.json"
    rc = main(["forward", "--spec", spec, "--grid", grid_csv,
               "--out", str(tmp_path / "m.csv"), "--hamiltonian", str(ham)])
    assert rc == 0
    doc = json.loads(ham.read_text(encoding="utf-8"))
    assert set(doc) == {"pieces"}
    assert set(doc["pieces"][0]) == {"len", "h11", "h12"}
    assert doc["pieces"][-1]["len"] == "inf"


def test_forward_rejects_real_axis_grid_points(tmp_path):
    spec = _dump(tmp_path / "spec.json", ATOM_MID)
    grid = tmp_path / "grid.csv"
    grid.write_text("re_z,im_z\n2,0\n", encoding="utf-8")
    rc = main(["forward", "--spec", spec, "--grid", str(grid),
               "--out", str(tmp_path / "m.csv")])
    assert rc == 1


# -- inverse ------------------------------------------------------------------


def test_inverse_recovers_string_from_hamiltonian(tmp_path):
    ham = _dump(tmp_path / "h.json", HAMILTONIAN)
    out = tmp_path / "spec.json"
    assert main(["inverse", "--hamiltonian", ham, "--out", str(out)]) == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    spec = spec_from_json(doc)
    assert spec.length == pytest.approx(1.0, abs=1e-12)
    assert len(spec.omega.atoms) == 1
    x, mass = spec.omega.atoms[0]
    assert x == 0.0
    assert mass == pytest.approx(2.0, abs=1e-12)


# -- roundtrip ----------------------------------------------------------------


def test_roundtrip_passes_on_atomic_string(tmp_path, capsys):
    spec = _dump(tmp_path / "spec.json", ATOM_MID)
    report = tmp_path / "report.json"
    rc = main(["roundtrip", "--spec", spec, "--out", str(report)])
    assert rc == 0
    assert "roundtrip max discrepancy" in capsys.readouterr().out
    doc = json.loads(report.read_text(encoding="utf-8"))
    assert doc["passed"] is True
    assert doc["overall"] <= doc["tol"]
    assert {"length", "atoms", "distributions"} <= set(doc)


def test_roundtrip_flags_mesh_limited_density_at_tight_tolerance(tmp_path):
    # a meshed density reconstructs only to mesh accuracy, far above 1e-9
    spec = _dump(tmp_path / "spec.json", UNIFORM)
    report = tmp_path / "report.json"
    rc = main(["roundtrip", "--spec", spec, "--out", str(report)])
    assert rc == 3
    doc = json.loads(report.read_text(encoding="utf-8"))
    assert doc["passed"] is False


# -- spectrum -----------------------------------------------------------------


def test_spectrum_finds_the_atom(tmp_path, capsys):
    spec = _dump(tmp_path / "spec.json", ATOM_MID)
    out = tmp_path / "mu.json"
    rc = main(["spectrum", "--spec", spec, "--window", "1", "6", "--out", str(out)])
    assert rc == 0
    assert "1 atom(s)" in capsys.readouterr().out
    doc = json.loads(out.read_text(encoding="utf-8"))
    (atom,) = doc["atoms"]
    assert atom["lambda"] == pytest.approx(4.0, abs=1e-3)
    assert atom["mass"] == pytest.approx(1.0, abs=1e-3)


# -- classify -----------------------------------------------------------------


def test_classify_prints_and_writes_flags(tmp_path, capsys):
    spec = _dump(tmp_path / "spec.json",
                 {"L": 1.0, "omega": {"density": [{"a": 0.0, "b": 1.0, "value": -1.0}]}})
    out = tmp_path / "flags.json"
    rc = main(["classify", "--spec", spec, "--out", str(out)])
    assert rc == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["herglotz"] is True
    assert printed["stieltjes"] is False
    assert printed == json.loads(out.read_text(encoding="utf-8"))


# -- converge -----------------------------------------------------------------


def test_converge_reports_verdict_for_mollified_family(tmp_path, capsys):
    base = catalog.omega_atom_origin(mass=1.0)
    family = tmp_path / "family"
    family.mkdir()
    for n in (4, 16, 64):
        _dump(family / f"member_{n:03d}.json", spec_to_json(mollify_string(base, n)))
    limit = _dump(tmp_path / "limit.json", spec_to_json(base))
    out = tmp_path / "report.json"
    rc = main(["converge", "--family", str(family), "--limit", limit, "--out", str(out)])
    assert rc == 0
    assert "verdict: converges" in capsys.readouterr().out
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["verdict"] == "converges"
    assert len(doc["per_member"]) == 3


def test_converge_rejects_empty_family_dir(tmp_path):
    family = tmp_path / "family"
    family.mkdir()
    assert main(["converge", "--family", str(family)]) == 1


# -- exit codes ---------------------------------------------------------------


def test_usage_error_exits_1():
    with pytest.raises(SystemExit) as err:
        main(["forward"])  # missing required flags
    assert err.value.code == 1


def test_unknown_command_exits_1():
    with pytest.raises(SystemExit) as err:
        main(["transmogrify"])
    assert err.value.code == 1


def test_missing_file_exits_1(tmp_path, grid_csv):
    rc = main(["forward", "--spec", str(tmp_path / "nope.json"),
               "--grid", grid_csv, "--out", str(tmp_path / "m.csv")])
    assert rc == 1


def test_bad_json_exits_1(tmp_path, grid_csv):
    spec = tmp_path / "spec.json"
    spec.write_text("{not json", encoding="utf-8")
    rc = main(["forward", "--spec", str(spec), "--grid", grid_csv,
               "--out", str(tmp_path / "m.csv")])
    assert rc == 1


def test_invalid_spec_exits_1(tmp_path, grid_csv):
    spec = _dump(tmp_path / "spec.json", {"L": 0.0})
    rc = main(["forward", "--spec", spec, "--grid", grid_csv,
               "--out", str(tmp_path / "m.csv")])
    assert rc == 1


def test_nonconvergence_exits_2(tmp_path, grid_csv):
    spec = _dump(tmp_path / "spec.json", HALFLINE)
    rc = main(["forward", "--spec", spec, "--grid", grid_csv,
               "--out", str(tmp_path / "m.csv"), "--tol", "1e-30"])
    assert rc == 2


# -- console script -----------------------------------------------------------


def test_console_script_help():
    exe = shutil.which("indefstring")
    assert exe is not None
    done = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert done.returncode == 0
    assert "forward" in done.stdout


def test_cli_roundtrip_agrees_with_library(tmp_path, grid_csv):
    spec_doc = spec_to_json(catalog.upsilon_atom_origin())
    spec = _dump(tmp_path / "spec.json", spec_doc)
    ham = tmp_path / "h.json"
    back = tmp_path / "back.json"
    assert main(["forward", "--spec", spec, "--grid", grid_csv,
                 "--out", str(tmp_path / "m.csv"), "--hamiltonian", str(ham)]) == 0
    assert main(["inverse", "--hamiltonian", str(ham), "--out", str(back)]) == 0
    recovered = spec_from_json(json.loads(back.read_text(encoding="utf-8")))
    parts = spec_discrepancy(spec_from_json(spec_doc), recovered)
    assert parts["overall"] < 1e-9
