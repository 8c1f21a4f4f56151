import csv
import io
import json
import subprocess
import sys

import pytest

from debruijn_census.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    assert not any(line.startswith("#") for line in lines[1:])
    header = lines[0][2:].split(",")
    return header, list(csv.reader(io.StringIO("\n".join(lines[1:]))))


def test_count_rows(capsys):
    code, out, _ = run(capsys, "count", "--family", "index", "--bound", "1", "--max-size", "5", "--format", "csv")
    assert code == 0
    assert out.splitlines()[1:] == ["2,1", "3,1", "4,2", "5,5"]


def test_count_json_matches_csv(capsys):
    _, out_csv, _ = run(capsys, "count", "--family", "levels", "--bound", "2", "--max-size", "12")
    _, out_json, _ = run(capsys, "count", "--family", "levels", "--bound", "2", "--max-size", "12", "--format", "json")
    header, rows = csv_rows(out_csv)
    assert [{h: int(v) for h, v in zip(header, r)} for r in rows] == json.loads(out_json)


def test_moments(capsys):
    code, out, _ = run(capsys, "moments", "--bound", "1", "--size", "5")
    header, rows = csv_rows(out)
    assert code == 0
    assert dict(zip(header, rows[0])) == {"n": "5", "count": "5", "mean": "9/5", "mean_decimal": "1.8",
                                          "variance": "4/25", "variance_decimal": "0.16"}


def test_moments_decimal_precision(capsys):
    _, out, _ = run(capsys, "moments", "--family", "levels", "--bound", "3", "--size", "40", "--format", "json")
    row = json.loads(out)[0]
    digits = row["mean_decimal"].replace(".", "").lstrip("0")
    assert len(digits) == 15


def test_dist(capsys):
    _, out, _ = run(capsys, "dist", "--bound", "1", "--size", "5", "--format", "json")
    assert json.loads(out) == [{"value": 1, "count": 1}, {"value": 2, "count": 4}]
    _, out, _ = run(capsys, "dist", "--family", "levels", "--bound", "2", "--size", "2", "--mark", "unary@0")
    assert out.splitlines()[1:] == ["1,1"]


def test_table1(capsys):
    code, out, _ = run(capsys, "table1", "--from", "2", "--to", "12")
    header, rows = csv_rows(out)
    assert code == 0
    assert header == ["k", "j_plus_1", "sigma_sq_expr", "B_prime_1"]
    assert [r[0] for r in rows] == [str(k) for k in range(2, 13)]
    k2 = rows[0]
    assert k2[1] == "2" and abs(float(k2[2]) - 0.0385234386) < 1e-6 and abs(float(k2[3]) - 0.4381229337) < 1e-6
    k8 = rows[6]
    assert k8[1] == "3" and abs(float(k8[3]) - 0.4583333333) < 1e-6


def test_singularity_json(capsys):
    code, out, _ = run(capsys, "singularity", "--family", "levels", "--bound", "8", "--format", "json")
    report = json.loads(out)
    assert code == 0
    assert abs(report["rho"] - 1 / 6) < 1e-9
    assert report["vanishing_indices"] == [2, 3] and report["boundary"] is True


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--max-size", "10", "--bound", "2", "--family", "levels")
    assert code == 0 and out.strip() == "OK"


def test_sample_and_stats(capsys):
    _, a, _ = run(capsys, "sample", "--bound", "2", "--size", "30", "--samples", "4", "--seed", "1")
    _, b, _ = run(capsys, "sample", "--bound", "2", "--size", "30", "--samples", "4", "--seed", "1")
    assert a == b and len(a.splitlines()) == 5
    _, j, _ = run(capsys, "sample", "--bound", "2", "--size", "30", "--samples", "4", "--seed", "1", "--format", "json")
    assert len(json.loads(j)) == 4
    code, out, _ = run(capsys, "stats", "--family", "levels", "--bound", "1", "--size", "2", "--samples", "10",
                       "--format", "json")
    stats = json.loads(out)
    assert code == 0 and stats["empirical_variance"] == 0 and stats["sample_count"] == 10


def test_profile_outputs(capsys):
    _, out, _ = run(capsys, "profile", "--family", "levels", "--bound", "4", "--size", "40")
    header, rows = csv_rows(out)
    assert header == ["level", "kind", "n", "mean_numer", "mean_denom", "regime", "limit_constant"]
    assert len(rows) == 15
    _, out, _ = run(capsys, "profile", "--family", "levels", "--bound", "2", "--size", "40", "--emit-plot-data",
                    "--sizes", "10,20")
    header, rows = csv_rows(out)
    assert header == ["level", "kind", "n", "mean"] and len(rows) == 3 * 3 * 2


def test_domain_error_exit_1(capsys):
    code, out, err = run(capsys, "moments", "--bound", "1", "--size", "3", "--family", "levels")
    assert code == 1 and out == ""
    assert json.loads(err)["error"] == "EmptySize"
    code, _, err = run(capsys, "table1", "--from", "1", "--to", "3")
    assert code == 1 and json.loads(err)["error"] == "DegenerateBound"


@pytest.mark.parametrize("argv", [
    ["count", "--bound", "1"],
    ["count", "--bound", "1", "--size", "3", "--max-size", "4"],
    ["moments", "--bound", "1", "--size", "5", "--mark", "leaves@1"],
    ["moments", "--family", "levels", "--bound", "2", "--size", "5", "--mark", "leaves@3"],
    ["moments", "--bound", "1"],
    ["profile", "--family", "index", "--bound", "2", "--size", "10"],
    ["dist", "--size", "5"],
    ["count", "--bound", "0", "--size", "3"],
    ["table1", "--from", "5", "--to", "3"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "debruijn_census", "count", "--bound", "1", "--size", "5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.splitlines() == ["# n,count", "5,5"]
    proc = subprocess.run([sys.executable, "-m", "debruijn_census", "count"], capture_output=True, text=True)
    assert proc.returncode == 2


def test_cache_dir_flag(tmp_path, capsys, monkeypatch):
    # main() exports the directory through the environment; restore it afterwards
    monkeypatch.delenv("DEBRUIJN_CENSUS_CACHE", raising=False)
    run(capsys, "moments", "--bound", "2", "--size", "20", "--cache-dir", str(tmp_path))
    assert any(tmp_path.iterdir())
