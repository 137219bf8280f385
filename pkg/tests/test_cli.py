import csv
import json
import subprocess
import sys

import pytest

from copier_cascade import FORMAT_VERSION
from copier_cascade.cli import main
from copier_cascade.scheme import OutcomeTable


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def as_dict(csv_text):
    rows = list(csv.reader(csv_text.splitlines()))
    assert rows[0] == ["quantity", "value"]
    return dict(rows[1:])


class TestDetect:
    def test_perfect_copier_effective_efficiency(self, capsys):
        code, out, _ = run(capsys, "detect", "--eta", "0.6", "--xi", "0", "--eps", "1", "--mu", "-1", "--N", "1", "--p", "0.5")
        assert code == 0
        vals = as_dict(out)
        assert float(vals["eta_e"]) == pytest.approx(0.84, abs=1e-8)
        assert float(vals["checks.eta_e_closed_form"]) == pytest.approx(0.84, abs=1e-15)
        assert vals["spec_version"] == FORMAT_VERSION

    def test_perfect_detector(self, capsys):
        code, out, _ = run(capsys, "detect", "--N", "0", "--eta", "1", "--xi", "0", "--p", "0.5")
        vals = as_dict(out)
        assert code == 0
        assert float(vals["I_m"]) == pytest.approx(1.0, abs=1e-15)
        assert float(vals["ml.Q"]) == 1.0

    def test_invalid_eps(self, capsys):
        code, out, err = run(capsys, "detect", "--eta", "0.6", "--eps", "1.2", "--N", "1")
        assert code == 2
        assert out == ""
        assert err.count("\n") == 1 and err.startswith("error:") and "eps" in err

    @pytest.mark.parametrize(
        "argv",
        [
            ["detect", "--eta", "abc"],
            ["detect", "--eta", "0.5", "--N", "1"],  # no eps
            ["detect", "--eta", "0.5", "--N", "5", "--eps", "1"],
            ["detect", "--eta", "0.5", "--xi", "1"],
            ["detect", "--eta", "0.5", "--N", "1", "--copier", "ab", "--A", "2"],
            ["nonsense"],
        ],
    )
    def test_usage_errors(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 2
        assert err.count("\n") == 1 and err.startswith("error:")

    def test_json_output(self, capsys, tmp_path):
        out_file = tmp_path / "detect.json"
        code, _, _ = run(capsys, "detect", "--eta", "0.4", "--eps", "0.7", "--xi", "0.02", "--N", "2", "--format", "json", "--out", str(out_file))
        assert code == 0
        data = json.loads(out_file.read_text())
        assert data["spec_version"] == FORMAT_VERSION
        table = OutcomeTable.from_dict(data["table"])
        assert table.n_detectors == 4
        assert len(data["ml"]["estimator"]) == 16

    def test_other_copiers(self, capsys):
        code, out, _ = run(capsys, "detect", "--eta", "0.6", "--N", "1", "--copier", "ab", "--A", "2", "--B", "0")
        assert code == 0
        assert float(as_dict(out)["eta_e"]) == pytest.approx(0.84, abs=1e-8)
        code, out, _ = run(capsys, "detect", "--eta", "0.6", "--N", "1", "--copier", "classical")
        assert code == 0
        assert float(as_dict(out)["eta_e"]) < 0.6

    def test_config_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# point\neta = 0.6\neps = 0.5\nN = 1\n")
        _, out, _ = run(capsys, "detect", "--config", str(cfg))
        assert as_dict(out)["parameters.eps"] == "0.5"
        _, out, _ = run(capsys, "detect", "--config", str(cfg), "--eps", "1")
        vals = as_dict(out)
        assert vals["parameters.eps"] == "1"
        assert float(vals["eta_e"]) == pytest.approx(0.84, abs=1e-8)

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("eta: 0.6\n")
        code, _, err = run(capsys, "detect", "--config", str(cfg))
        assert code == 2 and err.startswith("error:")
        code, _, err = run(capsys, "detect", "--config", str(tmp_path / "missing.cfg"))
        assert code == 2 and err.startswith("error:")

    def test_deterministic_output(self, capsys):
        argv = ["detect", "--eta", "0.3", "--eps", "0.9", "--mu", "0.2", "--xi", "0.05", "--N", "3", "--p", "0.3"]
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert a == b


class TestMLCompare:
    def test_closed_forms(self, capsys):
        code, out, _ = run(capsys, "mlcompare", "--eta", "0.6", "--xi", "0.01", "--eps", "0.8", "--p", "0.5")
        vals = as_dict(out)
        assert code == 0
        assert float(vals["Q1_closed_form"]) == pytest.approx(float(vals["Q1"]), abs=1e-12)
        assert float(vals["Q0_closed_form"]) == pytest.approx(0.797, abs=1e-12)
        assert vals["gain_condition"] == "1"
        assert vals["usefulness"] == "useful-count-means-photon"

    def test_no_gain(self, capsys):
        _, out, _ = run(capsys, "mlcompare", "--eta", "0.6", "--eps", "0.5")
        vals = as_dict(out)
        assert vals["gain_condition"] == "0"
        assert float(vals["Q1_minus_Q0"]) < 0


class TestRegion:
    def test_writes_grid_and_boundary(self, capsys, tmp_path):
        code, _, _ = run(capsys, "region", "--x", "eta:0:1:21", "--y", "eps:0:1:21", "--xi", "0", "--mu", "-1", "--p", "0.5", "--out", str(tmp_path))
        assert code == 0
        with open(tmp_path / "region_boundary.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["eta", "eps"]
        for eta, eps in rows[1:]:
            assert float(eps) == pytest.approx(1 / (2 - float(eta)), abs=1e-5)
        meta = json.loads((tmp_path / "region.json").read_text())
        assert meta["spec_version"] == FORMAT_VERSION

    def test_ab_plane(self, capsys, tmp_path):
        code, _, _ = run(capsys, "region", "--x", "A:0:2:11", "--y", "B:0:2:11", "--eta", "0.001", "--p", "0.5", "--out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "region_grid.csv").exists()

    @pytest.mark.parametrize(
        "x,y",
        [("eta:0:1", "eps:0:x"), ("eta:0", "eps:0:1"), ("eta:0:1", "eta:0:1"), ("eta:0:1:21", "eps:0:1.5")],
    )
    def test_bad_axes(self, capsys, tmp_path, x, y):
        code, _, err = run(capsys, "region", "--x", x, "--y", y, "--out", str(tmp_path))
        assert code == 2 and err.startswith("error:")

    def test_missing_fixed(self, capsys, tmp_path):
        # eta has no default
        code, _, err = run(capsys, "region", "--x", "A:0:2:5", "--y", "B:0:2:5", "--out", str(tmp_path))
        assert code == 2
        assert err.startswith("error:") and "eta" in err


class TestFigure:
    def test_fig3(self, capsys, tmp_path):
        code, _, _ = run(capsys, "figure", "fig3", "-o", str(tmp_path), "--steps", "11")
        assert code == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["fig3.json", "fig3_N0.csv", "fig3_N1.csv", "fig3_N2.csv", "fig3_N3.csv", "fig3_limit.csv"]

    def test_fig7(self, capsys, tmp_path):
        code, _, _ = run(capsys, "figure", "fig7", "-o", str(tmp_path), "--steps", "11")
        assert code == 0
        with open(tmp_path / "fig7_landmarks.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert {(r["landmark"], r["gain"]) for r in rows} == {("wootters-zurek", "1"), ("uqcm", "0")}

    def test_json_format(self, capsys, tmp_path):
        code, _, _ = run(capsys, "figure", "fig3", "-o", str(tmp_path), "--steps", "5", "--format", "json")
        assert code == 0
        data = json.loads((tmp_path / "fig3.json").read_text())
        assert data["spec_version"] == FORMAT_VERSION
        assert len(data["tables"]["N1"]) == 5

    def test_bit_identical(self, capsys, tmp_path):
        for sub in ("a", "b"):
            run(capsys, "figure", "fig5", "-o", str(tmp_path / sub), "--steps", "11")
        for f in (tmp_path / "a").iterdir():
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_unknown(self, capsys, tmp_path):
        code, _, err = run(capsys, "figure", "fig9", "-o", str(tmp_path))
        assert code == 2 and "fig9" in err


class TestOracle:
    def test_default_passes(self, capsys):
        code, out, _ = run(capsys, "oracle")
        assert code == 0
        assert out.strip().endswith("PASS")
        assert "trials=1000000" in out

    def test_zero_trials(self, capsys):
        code, _, err = run(capsys, "oracle", "--trials", "0")
        assert code == 2 and err.startswith("error:")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "copier_cascade", "detect", "--eta", "0.6", "--N", "0"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("quantity,value")
