import csv
import io
import json
import subprocess
import sys

import pytest

from triaffine.cli import main
from triaffine.estimate import CLOUD_MAGIC


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_system(tmp_path, maps, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps({"label": "t", "maps": maps}))
    return str(p)


class TestDim:
    def test_j49(self, capsys):
        code, out, _ = run(capsys, "dim", "--example", "j49")
        rep = json.loads(out)
        assert code == 0
        assert rep["affinity"]["dim_aff"] == pytest.approx(1.279468, abs=1e-6)
        assert rep["verdict"]["theorem"] == "ThmA"

    def test_j33(self, capsys):
        code, out, _ = run(capsys, "dim", "--example", "j33")
        rep = json.loads(out)
        assert code == 0 and rep["verdict"]["theorem"] == "ThmC"
        assert rep["verdict"]["formula_value"] == pytest.approx(1.084963, abs=1e-6)

    def test_invalid_file(self, capsys, tmp_path):
        path = write_system(tmp_path, [{"c": "0", "b": "0.5", "d": "0", "u": "0", "v": "0"},
                                       {"c": "0.5", "b": "2", "d": "0", "u": "0", "v": "0"}])
        code, out, err = run(capsys, "dim", "--system", path)
        assert code == 2 and out == ""
        assert "map 1: c out of (0,1)" in err and "map 2: b out of (0,1)" in err

    def test_syntax_error(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code, _, err = run(capsys, "dim", "--system", str(p))
        assert code == 2 and "line 1" in err

    def test_no_theorem(self, capsys, tmp_path):
        path = write_system(tmp_path, [{"c": "0.7", "b": "0.1", "d": "0", "u": "0", "v": "0"},
                                       {"c": "0.6", "b": "0.2", "d": "0", "u": "0.4", "v": "0.5"}])
        code, out, _ = run(capsys, "dim", "--system", path)
        assert code == 3 and json.loads(out)["verdict"]["theorem"] == "none"


class TestEstimate:
    def test_csv_layout(self, capsys):
        code, out, _ = run(capsys, "estimate", "--example", "j29", "--points", "20000", "--scales", "2:6")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "scale,statistic,log_scale,log_statistic"
        rows = list(csv.reader(io.StringIO("\n".join(lines[1:-1]))))
        assert len(rows) == 5 and float(rows[0][0]) == 0.25
        assert lines[-1].startswith("# method=box estimate=")

    def test_out_file(self, capsys, tmp_path):
        out_path = tmp_path / "e.csv"
        code, out, _ = run(capsys, "estimate", "--example", "j49", "--method", "corr", "--points", "5000",
                           "--scales", "1:5", "--out", str(out_path))
        assert code == 0 and out.startswith("# method=correlation")
        assert out_path.read_text().startswith("scale,statistic")

    def test_empty_cloud(self, capsys, tmp_path):
        p = tmp_path / "empty.bin"
        p.write_bytes(CLOUD_MAGIC)
        code, _, err = run(capsys, "estimate", "--cloud", str(p), "--method", "box")
        assert code == 2 and "empty" in err

    def test_zero_points(self, capsys):
        code, _, _ = run(capsys, "estimate", "--example", "j49", "--points", "0")
        assert code == 2

    def test_sparse_strip(self, capsys):
        code, _, err = run(capsys, "estimate", "--example", "j49", "--method", "slice", "--points", "1000")
        assert code == 2 and "strip" in err

    def test_lq(self, capsys):
        code, out, _ = run(capsys, "estimate", "--example", "j48", "--method", "lq", "--points", "20000",
                           "--bins", "64")
        rep = json.loads(out)
        assert code == 0 and rep["bins"] == 64 and rep["C_q_estimate"] > 0

    def test_bad_scales(self):
        with pytest.raises(SystemExit):
            main(["estimate", "--example", "j49", "--scales", "4:5"])


class TestCheck:
    def test_delta(self, capsys):
        code, out, _ = run(capsys, "check", "--kind", "delta", "--scalar", "1/2:0,1/2:1", "--n", "5")
        assert code == 0 and out == "1/16\n"

    def test_delta_projection_with_surd(self, capsys):
        code, out, _ = run(capsys, "check", "--kind", "delta", "--example", "j33", "--projection", "H", "--n", "4")
        rep = json.loads(out)
        assert code == 0 and rep["bound_holds"] and rep["certified_floor"] is not None

    def test_delta_guard(self, capsys):
        code, _, err = run(capsys, "check", "--kind", "delta", "--scalar", "1/2:0,1/2:1", "--n", "80")
        assert code == 4 and "guard" in err

    def test_ssp(self, capsys):
        code, out, _ = run(capsys, "check", "--kind", "ssp", "--example", "j29", "--max-level", "8")
        rep = json.loads(out)
        assert code == 0 and rep["found"] and rep["margin"] > 0 and rep["level"] <= 8

    def test_pairs(self, capsys):
        code, out, _ = run(capsys, "check", "--kind", "pairs", "--example", "j49", "--level", "10", "--L", "1")
        rep = json.loads(out)
        assert code == 0 and rep["even"] and rep["count"] > 0
        assert rep["bound"] == pytest.approx(0.672944, abs=1e-6)

    def test_pairs_guard(self, capsys):
        code, _, _ = run(capsys, "check", "--kind", "pairs", "--example", "j29", "--level", "20")
        assert code == 4

    def test_needs_system(self, capsys):
        code, _, _ = run(capsys, "check", "--kind", "ssp")
        assert code == 2


class TestSweep:
    def test_phase(self, capsys):
        code, out, _ = run(capsys, "sweep", "--c", "0.888889", "--steps", "50")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 50
        assert float(rows[0]["breakpoint"]) == pytest.approx(0.375, abs=1e-6)
        assert float(rows[-1]["dim"]) == 2.0

    def test_single_step(self, capsys):
        code, out, _ = run(capsys, "sweep", "--c", "0.888889", "--steps", "1")
        assert code == 0 and len(out.splitlines()) == 2

    def test_never_two(self, capsys):
        code, out, _ = run(capsys, "sweep", "--c", "0.7", "--steps", "20")
        dims = [float(r["dim"]) for r in csv.DictReader(io.StringIO(out))]
        assert max(dims) < 2 and dims == sorted(dims)

    def test_bad_c(self, capsys):
        code, _, _ = run(capsys, "sweep", "--c", "0.5")
        assert code == 2


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["estimate", "--example", "j48", "--points", "600000", "--scales", "3:8"],
        ["estimate", "--example", "j49", "--method", "corr", "--points", "600000"],
    ])
    def test_threads_and_reruns(self, capsys, argv):
        outs = {run(capsys, *argv, "--threads", str(t))[1] for t in (1, 1, 3)}
        assert len(outs) == 1

    def test_sample_files(self, capsys, tmp_path):
        paths = []
        for t in (1, 4):
            p = tmp_path / f"s{t}.bin"
            assert run(capsys, "sample", "--example", "j29", "--points", "300000", "--seed", "9",
                       "--threads", str(t), "--out", str(p))[0] == 0
            paths.append(p.read_bytes())
        assert paths[0] == paths[1] and paths[0][:8] == CLOUD_MAGIC
        csv_path = tmp_path / "s.csv"
        run(capsys, "sample", "--example", "j29", "--points", "10", "--out", str(csv_path))
        assert csv_path.read_text().startswith("x,y\n")


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "triaffine.cli", "check", "--kind", "delta",
                          "--scalar", "1/2:0,1/2:1", "--n", "3"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "1/4\n"
