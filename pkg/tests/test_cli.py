import json
import math

import pytest

from henon_lab import MapConfig
from henon_lab.cli import main
from henon_lab.config import parse_config_text


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_periodic_orbits_n1(capsys):
    code, out = run(capsys, "periodic-orbits", "--n", "1")
    assert code == 0
    doc = json.loads(out.out)
    res = doc["result"]
    assert res["orbit_count"] == 2 and res["point_count"] == 2
    words = sorted(o["word"] for o in res["orbits"])
    assert words == ["0", "1"]
    q = next(o for o in res["orbits"] if o["word"] == "0")
    assert q["logJu_sum"] == pytest.approx(math.log(4.0), abs=1e-4)
    assert len(doc["manifest_hash"]) == 64


def test_pressure_at_zero_is_log2(capsys, tmp_path):
    f = tmp_path / "p.csv"
    code, _ = run(capsys, "pressure-curve", "--n", "12", "--t", "0", "--out", str(f))
    assert code == 0
    lines = f.read_text().splitlines()
    assert lines[0].startswith("# manifest_hash ")
    head = lines[1].split(",")
    row = dict(zip(head, lines[2].split(",")))
    assert float(row["P_n"]) == pytest.approx(math.log(2.0), abs=1e-15)
    side = json.loads((tmp_path / "p.csv.manifest.json").read_text())
    assert side["manifest_hash"] == lines[0].split()[-1]


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for f in (a, b):
        assert main(["periodic-orbits", "--n", "4", "--out", str(f)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_print_config_round_trips(capsys):
    code, out = run(capsys, "print-config", "--b", "0.001", "--set", "seed=3")
    assert code == 0
    cfg = MapConfig.from_mapping(parse_config_text(out.out))
    assert cfg.b == 0.001 and cfg.seed == 3


def test_config_file_layering(capsys, tmp_path):
    f = tmp_path / "lab.cfg"
    f.write_text("b = 0.01\neps = 0.05\n")
    code, out = run(capsys, "print-config", "--config", str(f), "--eps", "0.2")
    cfg = MapConfig.from_mapping(parse_config_text(out.out))
    assert (cfg.b, cfg.eps) == (0.01, 0.2)


@pytest.mark.parametrize("argv,code", [
    (["no-such-command"], 2),
    (["print-config", "--set", "nope=1"], 2),
    (["print-config", "--b", "2.0"], 2),
    (["pressure-curve", "--t", "abc"], 2),
    (["code", "encode", "--point", "5", "0", "--n", "3"], 3),
])
def test_exit_codes(capsys, argv, code):
    assert main(argv) == code
    assert "henon-lab" in capsys.readouterr().err or code == 2


def test_decode_encode_agree(capsys):
    word = "01" * 30 + "1"
    code, out = run(capsys, "code", "decode", "--word", word, "--anchor", "30")
    assert code == 0
    pt = json.loads(out.out)["result"]["point"]
    code, out = run(capsys, "code", "encode", "--point", repr(pt[0]), repr(pt[1]), "--n", "6")
    assert code == 0
    assert json.loads(out.out)["result"]["word"] == word[30:36]
