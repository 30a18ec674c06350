import csv
import json

import pytest

from curvedecay import cli


def test_defaults_materialised():
    cfg = cli.resolve_config({"command": "decay", "d": "3", "alpha": "2.5"})
    assert set(cfg) == set(cli.KEYS)
    assert cfg["count"] == cli.KEYS["count"].default


@pytest.mark.parametrize(
    "values, key",
    [
        ({"alpha": "3.5"}, "alpha"),
        ({"bogus": "1"}, "bogus"),
        ({"count": "many"}, "count"),
        ({"d": "2.5"}, "d"),
        ({"command": "frobnicate"}, "command"),
        ({"measure": "dust"}, "measure"),
    ],
)
def test_config_errors_name_the_key(values, key):
    with pytest.raises(cli.ConfigError) as err:
        cli.resolve_config(values)
    assert err.value.key == key


def test_read_config_text():
    text = "# comment\ncommand = exponents\nalpha = 2.0  # trailing\n\n"
    assert cli.read_config_text(text) == {"command": "exponents", "alpha": "2.0"}
    with pytest.raises(cli.ConfigError):
        cli.read_config_text("alpha 2.0")


def test_echo_round_trip():
    cfg = cli.resolve_config({"command": "sharpness", "alpha": "2.25", "ell": "1", "tolerance": "1e-4"})
    again = cli.resolve_config(cli.read_config_text(cli.format_config(cfg)))
    assert again == cfg


def test_print_config_reflects_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("command = decay\ncount = 5\n")
    assert cli.main(["decay", "--config", str(conf), "count=7", "--print-config"]) == 0
    out = capsys.readouterr().out
    assert "count = 7" in out


def test_exponent_table_row_at_q2():
    rows, scalars = cli.exponent_table(cli.resolve_config({"command": "exponents", "d": 3, "alpha": 2.5}))
    row = [r for r in rows if r["q"] == 2.0 and r["ell"] == 1]
    assert row and row[0]["kappa"] == pytest.approx(0.125)
    assert scalars["delta"] == pytest.approx(0.75)
    assert scalars["min_kappa"] == pytest.approx(0.125)


def test_exponents_command_writes_csv(tmp_path):
    assert cli.main(["exponents", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "exponents.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["q", "ell", "J_lo", "J_hi", "kappa", "kappa_circ", "branch"]
    # branch endpoints appear once each per ell
    for ell in {r["ell"] for r in rows}:
        qs = [r["q"] for r in rows if r["ell"] == ell]
        assert len(qs) == len(set(qs))


def test_usage_error_exit_code(tmp_path, capsys):
    assert cli.main(["decay", "alpha=3.5", "--out", str(tmp_path)]) == 1
    assert "alpha" in capsys.readouterr().err
    assert cli.main(["not-a-command"]) == 1


def test_budget_exit_code(tmp_path):
    assert cli.main(["decay", "measure=point", "--max-lambda", "100", "--out", str(tmp_path)]) == 2
    assert (tmp_path / "decay.json").exists()


def test_verdict_exit_code(tmp_path):
    code = cli.main(["decay", "measure=point", "count=5", "--out", str(tmp_path)])
    assert code == 3
    doc = json.loads((tmp_path / "decay.json").read_text())
    assert doc["reports"][0]["verdict"] == "FAIL"


def test_determinism_hash_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["decay", "measure=cantor", "depth=6", "count=4", "alpha=1.5"]
    assert cli.main(args + ["--out", str(a)]) == cli.main(args + ["--out", str(b), "--threads", "2"])
    ha = json.loads((a / "decay.json").read_text())["hash"]
    hb = json.loads((b / "decay.json").read_text())["hash"]
    assert ha == hb
    assert (a / "decay.csv").read_bytes() == (b / "decay.csv").read_bytes()
