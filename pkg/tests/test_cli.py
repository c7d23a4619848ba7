import csv
import io
import json
import subprocess
import sys

import pytest

from nlpersp.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_OK, main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


class TestEval:
    def test_example61(self):
        code, text = run("eval", "--preset", "example61")
        assert code == EXIT_OK
        assert "branch C305_i (general case T55_i)" in text
        # the y = 0.2 point sits on the plateau where the perspective is |x|
        assert "x=(0.3) y=(0.2) prepersp=+inf persp=0.3" in text

    def test_classical(self):
        code, text = run("eval", "--preset", "classical")
        assert code == EXIT_OK
        assert "prepersp=0.5 persp=0.5" in text

    def test_conjugate_points(self, tmp_path):
        cfg = {"phi": {"family": "norm_power", "p": 2.0}, "s": {"family": "identity"},
               "points": [{"x": 2.0, "y": 4.0}],
               "conjugate_points": [{"xstar": 1.0, "ystar": -0.5}, {"xstar": 1.0, "ystar": -0.4}]}
        path = tmp_path / "job.json"
        path.write_text(json.dumps(cfg))
        code, text = run("eval", "--config", str(path))
        assert code == EXIT_OK
        assert "conjugate=0.0" in text and "conjugate=+inf" in text

    def test_malformed_family(self):
        code, _ = run("eval", "--preset", "classical", "--set", "phi.family=nope")
        assert code == EXIT_CONFIG

    def test_bad_parameter(self):
        assert run("eval", "--preset", "classical", "--set", "phi.p=-1")[0] == EXIT_CONFIG

    def test_unknown_preset_and_bad_json(self, tmp_path):
        assert run("eval", "--preset", "nope")[0] == EXIT_CONFIG
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert run("eval", "--config", str(bad))[0] == EXIT_CONFIG
        assert run("eval")[0] == EXIT_CONFIG
        assert run("frobnicate")[0] == EXIT_CONFIG

    def test_degenerate_is_hypothesis_violation(self):
        code, _ = run("eval", "--set", 'phi={"family": "point_indicator", "center": [0.0], "value": -1.0}',
                      "--set", 's={"family": "power", "q": 2.0}', "--set", 'points=[{"x": 0, "y": 1}]')
        assert code == EXIT_HYPOTHESIS


class TestVerify:
    def test_example61_passes(self):
        code, text = run("verify", "--preset", "example61")
        assert code == EXIT_OK and "PASS" in text

    def test_wrong_branch_fails(self):
        code, text = run("verify", "--preset", "example61", "--force-branch", "T55_ii")
        assert code == EXIT_FAIL and "FAIL" in text

    def test_missing_grid(self):
        code, _ = run("verify", "--set", "phi.family=huber", "--set", "s.family=identity")
        assert code == EXIT_CONFIG

    def test_tolerance_validation(self):
        assert run("verify", "--preset", "example61", "--set", "tolerance=0")[0] == EXIT_CONFIG


class TestSurface:
    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("surface", "--preset", "figure2", "--out-dir", str(a))[0] == EXIT_OK
        assert run("surface", "--preset", "figure2", "--out-dir", str(b))[0] == EXIT_OK
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        assert len(names) == 6
        for n in names:
            assert (a / n).read_bytes() == (b / n).read_bytes()

    def test_csv_schema(self, tmp_path):
        assert run("surface", "--preset", "figure4", "--out-dir", str(tmp_path))[0] == EXIT_OK
        with open(tmp_path / "figure4.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x0", "y0", "prepersp", "persp", "branch"]
        assert len(rows) == 1 + 61 * 36
        assert {r[4] for r in rows[1:]} == {"T55_vb"}
        doc = json.loads((tmp_path / "figure4.json").read_text())
        assert {"norm", "params", "grid", "version"} <= set(doc["metadata"])

    def test_figure1(self, tmp_path):
        assert run("surface", "--preset", "figure1", "--out-dir", str(tmp_path))[0] == EXIT_OK
        with open(tmp_path / "figure1.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x0", "x1", "huber", "berhu", "max", "f"]
        for r in rows[1:]:
            assert float(r[4]) == pytest.approx(float(r[5]))


class TestClassifyAndConvergence:
    def test_classify(self):
        code, text = run("classify", "--preset", "figure2")
        assert code == EXIT_OK
        doc = json.loads(text)
        assert doc["phi1"]["sign_class"]["variant"] == "NonPositive"
        assert doc["phi2"]["sign_class"]["variant"] == "NonNegative"
        assert doc["phi3"]["sign_class"]["variant"] == "Mixed"
        assert doc["phi1"]["convexity_conditions"]["P30_iii"] is True

    def test_convergence(self):
        code, text = run("convergence", "--set", "phi.family=huber", "--set", "phi.alpha=1",
                         "--set", "phi.p=2", "--set",
                         'grids.primal={"lower": [-4], "upper": [4], "counts": [81]}')
        assert code == EXIT_OK
        doc = json.loads(text)
        assert len(doc["spacings"]) == 3 and "metadata" in doc

    def test_convergence_needs_levels(self):
        code, _ = run("convergence", "--set", "phi.family=huber", "--set", "levels=1", "--set",
                      'grids.primal={"lower": [-4], "upper": [4], "counts": [81]}')
        assert code == EXIT_CONFIG


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nlpersp", "eval", "--preset", "classical"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "persp=0.5" in proc.stdout
