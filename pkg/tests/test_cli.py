import json
import math

import pytest

from isodense.cli import RunConfig, build_parser, config_from_args, main
from isodense.spectral import GridDomain
from isodense.symmetrize import ColumnarSet


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_profile_example(capsys):
    code, out, _ = run(capsys, "profile", "--density", "exp(x)", "--volume", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "isodense/1"
    res = doc["result"]
    assert res["infimum_perimeter"] == pytest.approx(3.0, abs=1e-9)
    assert res["minimizers"][0]["kind"] == "half-line-left"
    assert res["minimizers"][0]["params"]["x"] == pytest.approx(math.log(3), abs=1e-9)


def test_stability_example(capsys):
    code, out, _ = run(capsys, "stability", "--delta", "-sqrt(r^2+1)", "--r", "1", "--n", "1")
    assert code == 0 and json.loads(out)["result"]["stable"] is False


def test_existence_example(capsys):
    code, out, _ = run(capsys, "existence", "--density", "exp(r^2)", "--n", "1", "--m-max", "20")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "m,log_zeta"
    assert lines[1] == "0,-2.0" and lines[-2] == "20,158.0"
    assert "diverges" in lines[-1]
    code, out, _ = run(capsys, "existence", "--density", "exp(r^2)", "--n", "1", "--m-max", "20", "--format", "json")
    assert json.loads(out)["result"]["verdict"] == "diverges"


def test_profile_sweep_csv(capsys):
    code, out, _ = run(capsys, "profile", "--density", "gauss", "--sweep", "0.2:0.8:3", "--format", "csv")
    rows = out.splitlines()
    assert rows[0] == "volume,infimum_perimeter,attained,kinds,fleeing_end"
    assert len(rows) == 4 and rows[2].split(",")[3] == "half-line-left;half-line-right"


def test_not_attained_reports_inf(capsys):
    code, out, _ = run(capsys, "profile", "--density", "houseroof-decay", "--volume", "0.3333333333333333")
    assert json.loads(out)["result"]["fleeing_end"] == "+inf"


def test_deterministic_bytes(capsys):
    argv = ("profile", "--density", "laplace", "--volume", "1")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_other_subcommands(capsys):
    code, out, _ = run(capsys, "classify", "--density", "exp(-abs(x))")
    assert json.loads(out)["result"]["kind"] == "increasing-decreasing"
    code, out, _ = run(capsys, "meancurv", "--delta", "r^2", "--n", "2", "--sphere", "1")
    assert json.loads(out)["result"]["H"] == pytest.approx(4.0)
    code, out, _ = run(capsys, "meancurv", "--delta", "r^3", "--n", "1", "--hyperplane", "1", "--point", "1.7320508075688772,1")
    assert json.loads(out)["result"]["H"] == pytest.approx(-6.0)
    code, out, _ = run(capsys, "firstvar", "--delta", "r^2", "--sphere", "1", "--step", "0.001")
    assert json.loads(out)["result"]["residual_P"] < 1e-3
    code, out, _ = run(capsys, "oracle", "--density", "exp(x)", "--volume", "3", "--window", "-5,5", "--grid", "0.1")
    res = json.loads(out)["result"]
    assert abs(res["perimeter"] - 3.0) <= res["allowance"]


def test_symmetrize_and_annulus(capsys, tmp_path):
    cs = ColumnarSet.random_union(5, h=1 / 32, c=1.0)
    path = tmp_path / "set.json"
    path.write_text(cs.to_json())
    final = tmp_path / "final.json"
    code, out, _ = run(capsys, "symmetrize", "--input", str(path), "--axis", "1", "--output-set", str(final))
    assert code == 0
    res = json.loads(out)["result"]
    assert res["volume_after"] == pytest.approx(res["volume_before"], rel=1e-9)
    assert ColumnarSet.from_json(final.read_text()).h == cs.h
    code, out, _ = run(capsys, "symmetrize", "--seed", "2", "--h", "0.03125", "--converge")
    assert code == 0 and out.splitlines()[0].startswith("step,angle")
    code, out, _ = run(capsys, "symmetrize", "--seed", "2", "--h", "0.03125", "--converge", "--max-steps", "2")
    assert code == 2
    disk = tmp_path / "disk.json"
    from isodense.symmetrize import Disk
    disk.write_text(ColumnarSet.from_shapes([Disk(3.0, 0.0, 0.2)], h=1 / 64, c=0.1).to_json())
    code, out, _ = run(capsys, "annulus-check", "--input", str(disk), "--r0", "1")
    assert code == 0 and json.loads(out)["result"]["holds"] is True


def test_eigen_and_faber_krahn(capsys, tmp_path):
    mask = tmp_path / "mask.json"
    mask.write_text(GridDomain.disk(0.7, 1 / 32, center=(0.2, 0.1)).to_json())
    code, out, _ = run(capsys, "eigen", "--mask", str(mask), "--c", "1")
    res = json.loads(out)["result"]
    assert code == 0 and res["converged"] and res["convention"] == "paper"
    code, out, _ = run(capsys, "faber-krahn", "--mask", str(mask), "--convention", "weighted-laplacian")
    assert code == 0 and json.loads(out)["result"]["holds"] is True


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "profile", "--density", "exp(x)", "--volume", "1", "--output", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["command"] == "profile"


@pytest.mark.parametrize("argv", [
    ("profile", "--density", "exp(", "--volume", "1"),
    ("profile", "--density", "nonsense_name", "--volume", "1"),
    ("profile", "--density", "gauss", "--volume", "2"),
    ("profile", "--density", "gauss", "--volume", "0.5", "--sweep", "0.1:0.2:2"),
    ("profile", "--density", "missing.csv", "--volume", "1"),
    ("eigen", "--mask", "missing.json"),
    ("meancurv", "--delta", "r^2", "--sphere", "1", "--hyperplane", "1"),
    ("profile", "--density", "exp(x)", "--volume", "1", "--param", "bad"),
])
def test_input_errors_exit_1(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and err.startswith("isodense:")


def test_bad_mask_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "eigen", "--mask", str(bad))[0] == 1


def test_threads_env(capsys, monkeypatch):
    monkeypatch.setenv("ISODENSE_THREADS", "3")
    code, out, _ = run(capsys, "profile", "--density", "exp(x)", "--sweep", "1:3:3", "--format", "csv")
    assert code == 0 and out.splitlines()[3].startswith("3.0,")


def test_run_config_round_trip():
    args = build_parser().parse_args(["profile", "--density", "gauss", "--volume", "0.5", "--seed", "7"])
    cfg = config_from_args(args)
    assert cfg.seed == 7 and cfg.format == "json"
    assert RunConfig.from_json(cfg.to_json()) == cfg
