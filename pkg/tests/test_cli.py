import json

import lrp


def write_ode_config(tmp_path, kind="ode"):
    path = tmp_path / "ode.conf"
    path.write_text(f"kind = {kind}\noptions.r_max = 1e6\noptions.points = 41\n", encoding="utf-8")
    return path


def test_dry_run_validates_only(tmp_path, capsys):
    out = tmp_path / "out"
    assert lrp.main(["ode", "-c", str(write_ode_config(tmp_path)), "-o", str(out), "--dry-run"]) == 0
    assert "Config is valid" in capsys.readouterr().out
    assert not (out / "ode.jsonl").exists()


def test_kind_must_match_config(tmp_path, capsys):
    assert lrp.main(["kappa", "-c", str(write_ode_config(tmp_path))]) == lrp.EXIT_ERROR
    assert "field 'kind'" in capsys.readouterr().err


def test_bad_config_exits_with_error(tmp_path, capsys):
    path = tmp_path / "bad.conf"
    path.write_text("kind = ode\nkernel.alpha = 3\n", encoding="utf-8")
    assert lrp.main(["ode", "-c", str(path)]) == lrp.EXIT_ERROR
    assert "line 2" in capsys.readouterr().err


def test_full_run_writes_records(tmp_path, capsys):
    out = tmp_path / "out"
    assert lrp.main(["ode", "-c", str(write_ode_config(tmp_path)), "-o", str(out), "--seed", "4", "-q"]) == 0
    lines = (out / "ode.jsonl").read_text(encoding="utf-8").splitlines()
    records = [json.loads(line) for line in lines]
    assert {r["seed"] for r in records} == {4}
    assert "Records written" in capsys.readouterr().out
