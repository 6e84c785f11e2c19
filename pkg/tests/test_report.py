import csv

import numpy as np
import pytest

from gjd import cli, market_data, paramdoc, report, simulate
from gjd.errors import ValidationError
from gjd.jump_model import JumpParams

from test_cli import spy_history


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    market_data.write_prices(root / "p.csv",
                             simulate.prices_from_returns(spy_history(20, seed=2)))
    paramdoc.write(root / "spy.json", paramdoc.SPY_REFERENCE)
    assert cli.main(["fit", "--prices", str(root / "p.csv"), "--out", str(root / "fit")]) == 0
    assert cli.main(["smile", "--params", str(root / "spy.json"), "--spot", "492.44",
                     "--maturities-days", "1,14", "--n-strikes", "7", "--out", str(root / "smile")]) == 0
    return root


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_report_outputs(runs):
    out = runs / "rep"
    paths = report.build_report(runs / "fit", [runs / "smile"], out, seed=3)
    assert (out / "summary.txt").exists()
    for name in ("qq_truncated", "block_diagnostics", "density_overlay", "mixing_overlay",
                 "nb_overlay", "smile_T001", "smile_T014"):
        assert (out / "figures" / f"{name}.png").read_bytes()[:4] == b"\x89PNG"
    assert len(list((out / "data").glob("qq_block_*.csv"))) == 6
    assert all(str(p).startswith(str(out)) for p in paths)
    smile = read(out / "data" / "smile_tables.csv")
    assert len(smile) == 14


def test_density_overlay_coverage(runs):
    out = runs / "rep_cov"
    report.build_report(runs / "fit", [], out, figures=False)
    rows = read(out / "data" / "density_overlay.csv")
    returns = read(runs / "fit" / "returns.csv")
    x = np.array([float(r["log_return"]) for r in returns
                  if r["is_outlier"] == "0" and r["block_index"] != "-1"])
    x = x[x != 0]
    x = x - x.mean()
    lo, hi = float(rows[0]["z_left"]), float(rows[-1]["z_right"])
    assert np.mean((x >= lo) & (x <= hi)) >= 0.999 - 1.0 / x.size


def test_nb_overlay_bins():
    rows = report.nb_overlay(np.array([0, 3, 7, 12, 4]), JumpParams(3.4, 0.244))
    assert [(a, b) for a, b, _, _ in rows] == [(0, 5), (5, 10), (10, 15)]
    assert [o for _, _, o, _ in rows] == [3, 1, 1]


def test_report_is_deterministic(runs):
    a, b = runs / "det_a", runs / "det_b"
    report.build_report(runs / "fit", [runs / "smile"], a, seed=7)
    report.build_report(runs / "fit", [runs / "smile"], b, seed=7)
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_missing_inputs(tmp_path, capsys):
    with pytest.raises(ValidationError, match="params.json"):
        report.build_report(tmp_path, [], tmp_path / "out")
    assert cli.main(["report", "--fit-dir", str(tmp_path), "--out", str(tmp_path / "o")]) == 1
    assert "[report]" in capsys.readouterr().err


def test_qq_pairs_normal_quantiles():
    theo, samp = report.qq_pairs(np.arange(10.0))
    assert theo[0] == pytest.approx(-theo[-1])
    assert np.all(np.diff(samp) > 0)
