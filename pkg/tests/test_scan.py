import csv
import json

import numpy as np
import pytest

from copier_cascade import FORMAT_VERSION
from copier_cascade.metrics import eta_e_recursion
from copier_cascade.scan import (
    FIG7_P,
    Axis,
    Dataset,
    SweepSpec,
    Table,
    boundary_shift,
    evaluate,
    figure_preset,
    fmt,
    min_gain_eps,
    run_sweep,
)

NOISELESS = {"xi": 0.0, "mu": -1.0, "p": 0.5}


def eta_eps(steps, fixed=NOISELESS, comparison="info-gain", layers=1, eps=(0.0, 1.0)):
    return SweepSpec(Axis("eta", 0.0, 1.0, steps), Axis("eps", *eps, steps), dict(fixed), layers, comparison)


@pytest.fixture(scope="module")
def grid101():
    return run_sweep(eta_eps(101))


class TestGainBoundary:
    def test_follows_simple_condition(self, grid101):
        b = grid101.boundary
        assert len(b) == 99  # eta = 0 never gains; at eta = 1 the threshold is eps = 1 itself
        np.testing.assert_allclose(b[:, 1], 1 / (2 - b[:, 0]), atol=grid101.spec.y.step)
        assert np.max(np.abs(b[:, 1] - 1 / (2 - b[:, 0]))) < 1e-5

    def test_weak_detector_end_near_half(self, grid101):
        first = grid101.boundary[np.argmin(grid101.boundary[:, 0])]
        assert first[0] == pytest.approx(0.01)
        assert first[1] == pytest.approx(0.5, abs=0.01)
        assert np.all(grid101.boundary[:, 1] > 0.5)

    def test_low_efficiency_never_gains(self):
        grid = run_sweep(eta_eps(41, eps=(0.0, 0.4)))
        assert not grid.gain.any()
        assert len(grid.boundary) == 0

    def test_refinement_stability(self, grid101):
        fine = run_sweep(eta_eps(201))
        assert boundary_shift(grid101, fine) < grid101.spec.y.step

    def test_info_and_ml_boundaries_coincide(self, grid101):
        ml = run_sweep(eta_eps(101, comparison="ml-gain"))
        assert boundary_shift(grid101, ml) < grid101.spec.y.step

    def test_reruns_bit_identical(self):
        a = run_sweep(eta_eps(31, fixed={"xi": 0.02, "mu": 0.3, "p": 0.4}))
        b = run_sweep(eta_eps(31, fixed={"xi": 0.02, "mu": 0.3, "p": 0.4}))
        assert a.values.tobytes() == b.values.tobytes()
        assert a.gain.tobytes() == b.gain.tobytes()
        assert a.boundary.tobytes() == b.boundary.tobytes()

    def test_large_N_uses_recursion(self):
        spec = eta_eps(11, comparison="eta_e-ratio", layers=6)
        vals = evaluate(spec, 0.3, 0.9)
        assert float(vals) == pytest.approx(eta_e_recursion(0.9, 0.3, 6) / 0.3, abs=1e-8)

    def test_exact_and_recursion_agree_at_N3(self):
        spec = eta_eps(11, comparison="eta_e-ratio", layers=3)
        assert float(evaluate(spec, 0.3, 0.9)) == pytest.approx(eta_e_recursion(0.9, 0.3, 3) / 0.3, abs=1e-8)

    def test_min_gain_eps(self):
        assert min_gain_eps(0.4, NOISELESS) == pytest.approx(1 / 1.6, abs=1e-5)
        assert min_gain_eps(0.0, NOISELESS) == np.inf


class TestSweepSpecValidation:
    def test_unknown_parameter(self):
        with pytest.raises(ValueError, match="unknown"):
            SweepSpec(Axis("zeta", 0, 1, 5), Axis("eps", 0, 1, 5), NOISELESS)

    def test_missing_fixed(self):
        with pytest.raises(ValueError, match="missing fixed value for mu"):
            SweepSpec(Axis("eta", 0, 1, 5), Axis("eps", 0, 1, 5), {"xi": 0.0, "p": 0.5})

    def test_out_of_domain(self):
        with pytest.raises(ValueError, match="eps"):
            SweepSpec(Axis("eta", 0, 1, 5), Axis("eps", 0, 1.2, 5), NOISELESS)
        with pytest.raises(ValueError, match="xi"):
            SweepSpec(Axis("eta", 0, 1, 5), Axis("xi", 0, 1, 5), {"eps": 1.0, "mu": -1.0, "p": 0.5})

    def test_large_N_needs_noiseless(self):
        with pytest.raises(ValueError, match="exact enumeration"):
            eta_eps(5, fixed={"xi": 0.01, "mu": -1.0, "p": 0.5}, layers=5)
        with pytest.raises(ValueError, match="exact enumeration"):
            eta_eps(5, comparison="ml-gain", layers=5)

    def test_bad_axes(self):
        with pytest.raises(ValueError):
            SweepSpec(Axis("eta", 0, 1, 1), Axis("eps", 0, 1, 5), NOISELESS)
        with pytest.raises(ValueError):
            SweepSpec(Axis("eta", 0.5, 0.2, 5), Axis("eps", 0, 1, 5), NOISELESS)
        with pytest.raises(ValueError):
            SweepSpec(Axis("eta", 0, 1, 5), Axis("eta", 0, 1, 5), NOISELESS)
        with pytest.raises(ValueError):
            eta_eps(5, comparison="entropy")


class TestFigures:
    def test_fig3_threshold(self):
        ds = figure_preset("fig3", steps=71)  # eps grid contains 5/7
        for N in (1, 2, 3):
            rows = dict(ds.tables[f"N{N}"].rows)
            eps = min(rows, key=lambda e: abs(e - 5 / 7))
            assert eps == pytest.approx(5 / 7, abs=1e-15)
            assert rows[eps] == pytest.approx(0.6, abs=1e-8)
        assert dict(ds.tables["N0"].rows)[0.5] == pytest.approx(0.6, abs=1e-8)
        limit = dict(ds.tables["limit"].rows)
        assert limit[1.0] == 1.0
        assert limit[0.0] == 0.0

    def test_fig7_landmarks(self):
        ds = figure_preset("fig7", steps=21)
        marks = ds.tables["landmarks"].rows
        assert {m[3] for m in marks} == set(FIG7_P)
        for name, A, B, p, value, gain in marks:
            assert gain == (name == "wootters-zurek")

    def test_fig7_weak_limit_stable(self):
        def sweep(eta):
            return run_sweep(SweepSpec(Axis("A", 0, 2, 101), Axis("B", 0, 2, 101), {"eta": eta, "xi": 0.0, "p": 0.3}))

        assert boundary_shift(sweep(1e-3), sweep(5e-4)) < 1e-3

    @pytest.mark.parametrize("fig,family", [("fig4", "xi"), ("fig5", "mu"), ("fig6", "p")])
    def test_family_datasets(self, fig, family):
        ds = figure_preset(fig, steps=11)
        assert ds.metadata["family"] == family
        assert len(ds.tables) == 2 * len(ds.metadata["members"])

    def test_unknown_figure(self):
        with pytest.raises(ValueError, match="fig9"):
            figure_preset("fig9")


class TestOutput:
    def test_fmt(self):
        assert fmt(0.1) == "0.10000000000000001"
        assert float(fmt(1 / 3)) == 1 / 3
        assert fmt(True) == "1"
        assert fmt(np.int64(4)) == "4"

    def test_write_roundtrip(self, tmp_path):
        grid = run_sweep(eta_eps(11))
        ds = Dataset("demo", {"grid": Table(("eta", "eps", "value", "gain"), list(grid.grid_rows()))}, {"note": "x"})
        paths = ds.write(tmp_path)
        assert [p.name for p in paths] == ["demo_grid.csv", "demo.json"]
        with open(tmp_path / "demo_grid.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["eta", "eps", "value", "gain"]
        vals = np.array([float(r[2]) for r in rows[1:]])
        assert vals.tobytes() == grid.values.ravel().tobytes()
        meta = json.loads((tmp_path / "demo.json").read_text())
        assert meta["spec_version"] == FORMAT_VERSION
        assert meta["files"] == ["demo_grid.csv"]

    def test_json_dict(self):
        ds = Dataset("d", {"t": Table(("a", "b"), [(np.float64(np.nan), np.bool_(True))])}, {})
        out = ds.to_json_dict()
        assert out["tables"]["t"] == [{"a": None, "b": True}]
        json.dumps(out)
