import csv
import io
import json

import pytest

from coherencelab import cli
from coherencelab.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main, normalize_spec


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


SWEEP = {
    "L": 12, "t": 2, "p_m": 0.1, "p_y": 0.25, "init": "pure_product", "seed": 5,
    "grid": {"delta_x": [0.2, 0.4]}, "realizations": 3, "probes": ["S_half", "C_x", "I_3"], "samples": 3,
}


def test_sweep_is_byte_identical_across_runs_and_workers(tmp_path):
    cfg = write_json(tmp_path / "s.json", SWEEP)
    outs = []
    for i, extra in enumerate(([], [], ["-j", "2"])):
        out = tmp_path / f"o{i}.csv"
        assert main(["sweep", cfg, "-o", str(out), *extra]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    lines = outs[0].decode().splitlines()
    assert lines[0].startswith("# {")
    assert lines[1] == "L,delta_x,probe,t,mean,stderr,n"
    assert len(lines) == 2 + 2 * 3 * 3


@pytest.mark.parametrize("fmt, suffix", [("csv", "csv"), ("jsonl", "jsonl")])
def test_echo_reproduces_output(tmp_path, fmt, suffix):
    cfg = write_json(tmp_path / "s.json", SWEEP)
    a, b = tmp_path / f"a.{suffix}", tmp_path / f"b.{suffix}"
    assert main(["sweep", cfg, "--format", fmt, "-o", str(a)]) == EXIT_OK
    assert main(["sweep", str(a), "--format", fmt, "-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_normalize_spec_is_idempotent():
    once = normalize_spec(SWEEP)
    assert normalize_spec(once) == once


@pytest.mark.parametrize(
    "spec, needle",
    [
        ({**SWEEP, "colour": 1}, "unknown config keys"),
        ({**SWEEP, "probes": ["I3"]}, "unknown probes"),
        ({**SWEEP, "grid": {"delta_x": [0.2, 1.5]}}, "grid point {'delta_x': 1.5}"),
        ({**SWEEP, "grid": {"spin": [1]}}, "unknown parameter"),
        ({**SWEEP, "grid": {"delta_x": []}}, "non-empty list"),
        ({**SWEEP, "realizations": 0}, "realizations"),
        ({**SWEEP, "times": [5.0]}, "beyond run duration"),
        ({**SWEEP, "format": "xml"}, "format"),
    ],
)
def test_sweep_usage_errors(tmp_path, capsys, spec, needle):
    cfg = write_json(tmp_path / "bad.json", spec)
    assert main(["sweep", cfg]) == EXIT_USAGE
    assert needle in capsys.readouterr().err


def test_bad_json_and_missing_file(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert main(["sweep", str(p)]) == EXIT_USAGE
    assert "invalid JSON" in capsys.readouterr().err
    assert main(["sweep", str(tmp_path / "nope.json")]) == EXIT_USAGE


def test_parser_errors_exit_with_usage_code():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main(["codes", "--basis", "W"])
    assert e.value.code == EXIT_USAGE


def test_purify_requires_register(tmp_path, capsys):
    cfg = write_json(tmp_path / "p.json", {"L": 8, "init": "pure_product"})
    assert main(["purify", cfg]) == EXIT_USAGE
    assert "register" in capsys.readouterr().err


def test_purify_classical_register(tmp_path, capsys):
    cfg = write_json(tmp_path / "p.json", {
        "L": 8, "ancillas": 2, "p_e": 0.1, "t": 2, "init": "classical_register",
        "eraser": "coherence_maintaining", "realizations": 2, "samples": 3,
    })
    assert main(["purify", cfg]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out.split("\n", 1)[1])))
    assert {r["probe"] for r in rows} == {"coherent_info", "S_sys", "I_x"}
    assert [float(r["mean"]) for r in rows if r["probe"] == "I_x"][0] == 2.0


def test_codes_table(capsys):
    assert main(["codes", "repetition", "5", "--basis", "X"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[[5,1]]" in out and "XXXXX" in out
    row = [ln for ln in out.splitlines() if ln.startswith("XXXXX")][0].split()
    assert row[1:] == ["1", "1", "1", "1", "0"]


def test_codes_json_and_random_bases(capsys):
    assert main(["codes", "steane", "--basis", "X", "Z", "Y", "--random-bases", "2", "--json"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["d"] == 3 and len(rep["rows"]) == 5
    assert all(r["d"] <= r["tight"] <= r["C_PD"] for r in rep["rows"])


def test_codes_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.code"
    bad.write_text("# header\n3 1\nXXI\nIXQ\nXXX ZZZ\n")
    assert main(["codes", "--file", str(bad)]) == EXIT_USAGE
    assert "line 4" in capsys.readouterr().err
    good = tmp_path / "rep.code"
    good.write_text("3 1\nXXI\nIXX\nZZZ XII\n")
    assert main(["codes", "--file", str(good), "--basis", "X"]) == EXIT_OK
    assert "code rep" in capsys.readouterr().out
    css = tmp_path / "c.css"
    css.write_text("Hx\n1111\nHz\n1101\n")
    assert main(["codes", "--css", str(css)]) == EXIT_USAGE
    assert "orthogonal" in capsys.readouterr().err
    assert main(["codes", "toric"]) == EXIT_USAGE
    assert main(["codes", "steane", "--budget", "10"]) == EXIT_USAGE
    assert "budget" in capsys.readouterr().err


def test_codes_violation_exit(monkeypatch, capsys):
    def boom(*a, **k):
        raise cli.BoundViolation("tight bound above C_PD")

    monkeypatch.setattr(cli, "verify_coherence_bound", boom)
    assert main(["codes", "steane"]) == EXIT_VIOLATION
    assert "VIOLATION" in capsys.readouterr().err


def test_walker_outputs(tmp_path):
    out, hist = tmp_path / "w.csv", tmp_path / "h.csv"
    argv = ["walker", "--rates", "0.2", "0.3", "0.5", "--L", "30", "--steps", "400",
            "--trajectories", "2", "--stride", "100", "--hist", str(hist), "-o", str(out), "--seed", "3"]
    assert main(argv) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 * 5 and rows[0] == {"trajectory": "0", "m": "0", "N_x": "10", "N_z": "10"}
    counts = [int(r["count"]) for r in csv.DictReader(hist.open())]
    assert sum(counts) == 2 * 201
    first = out.read_bytes()
    assert main(argv) == EXIT_OK and out.read_bytes() == first


def test_walker_xi_and_errors(capsys):
    assert main(["walker", "--rates", "0.2", "0.3", "0.5", "--L", "50", "--xi", "4"]) == EXIT_OK
    row = json.loads(capsys.readouterr().out)
    assert row["residual"] < 1e-9
    assert main(["walker", "--rates", "0.5", "0.5", "0.5"]) == EXIT_USAGE
    assert main(["walker", "--rates", "0.2", "0.3", "0.5", "--L", "5", "--start", "4", "4"]) == EXIT_USAGE


def collapse_table(tmp_path, beta=None):
    lines = ["L,delta_x,probe,t,mean,stderr,n"]
    for L in (32, 64, 128):
        for k in range(12):
            d = 0.2 + 0.025 * k
            x = (d - 0.33) * L ** (1 / 1.1)
            v = 1 - 0.3 * x + 0.01 * x * x
            if beta is not None:
                v *= L ** (beta / 1.1)
            lines.append(f"{L},{d},I_3,{5 * L},{v},0,10")
    p = tmp_path / "c.csv"
    p.write_text("\n".join(lines) + "\n")
    return str(p)


def test_collapse_i3(tmp_path, capsys):
    assert main(["collapse", collapse_table(tmp_path), "--probe", "I_3"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    (fit,) = out["fits"]
    assert fit["t"] == 5.0
    assert fit["delta_c"] == pytest.approx(0.33, abs=0.005)
    assert out["nu_mean"] == pytest.approx(1.1, abs=0.05)


def test_collapse_coherent_info(tmp_path, capsys):
    path = collapse_table(tmp_path, beta=0.65)
    assert main(["collapse", path, "--form", "coherent_info", "--fixed-nu", "1.1"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["beta_mean"] == pytest.approx(0.65, abs=0.05)


def test_collapse_errors(tmp_path, capsys):
    path = collapse_table(tmp_path)
    assert main(["collapse", path, "--probe", "C_x"]) == EXIT_USAGE
    assert main(["collapse", path, "--x", "p_R"]) == EXIT_USAGE
    assert "not found" in capsys.readouterr().err
