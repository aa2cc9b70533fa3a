import datetime as dt
import json

import numpy as np
import pytest
from click.testing import CliRunner

from volconn.cli import main
from volconn.realized import RealizedPanel, write_panel
from volconn.synth import DgpSpec, simulate_var


@pytest.fixture
def runner():
    return CliRunner()


def write_sim_panel(path, T=300, seed=0, n=2, rho=0.3):
    sigma = np.full((n, n), rho)
    np.fill_diagonal(sigma, 1.0)
    x = simulate_var(DgpSpec(phi=(0.3 * np.eye(n),), sigma=sigma, T=T, seed=seed))
    x = x - x.min() + 0.1
    dates = tuple(dt.date(2014, 1, 1) + dt.timedelta(days=i) for i in range(T))
    panel = RealizedPanel(dates=dates, assets=tuple(f"A{i + 1}" for i in range(n)), values=x)
    write_panel(panel, path)
    return panel


PRICES = """timestamp,symbol,price
2010-01-05T10:00:00-06:00,CL,80.0
2010-01-05T10:05:00-06:00,CL,80.4
2010-01-05T10:10:00-06:00,CL,80.1
2010-01-06T10:00:00-06:00,CL,81.0
2010-01-06T10:05:00-06:00,CL,80.6
2010-01-05T10:00:00-06:00,EUR,1.44
2010-01-05T10:05:00-06:00,EUR,1.45
2010-01-05T10:10:00-06:00,EUR,1.43
2010-01-06T10:00:00-06:00,EUR,1.46
2010-01-06T10:05:00-06:00,EUR,1.44
"""


def test_ingest_and_measures(runner, tmp_path):
    prices = tmp_path / "prices.csv"
    prices.write_text(PRICES)
    sessions = tmp_path / "sessions.json"
    res = runner.invoke(main, ["ingest", "--input", str(prices), "--out", str(sessions)])
    assert res.exit_code == 0, res.output
    payload = json.loads(sessions.read_text())
    assert set(payload["series"]) == {"CL", "EUR"}

    out = tmp_path / "meas"
    res = runner.invoke(main, ["measures", "--sessions", str(sessions), "--out-dir", str(out)])
    assert res.exit_code == 0, res.output
    for name in ("measures_CL.csv", "panel_rv.csv", "panel_rs_minus.csv", "panel_rs_plus.csv"):
        assert (out / name).exists()
    header = (out / "panel_rv.csv").read_text().splitlines()[0]
    assert header == "date,CL,EUR"
    rv_line = (out / "measures_CL.csv").read_text().splitlines()[1].split(",")
    rv, rs_m, rs_p = float(rv_line[1]), float(rv_line[2]), float(rv_line[3])
    assert rv == pytest.approx(rs_m + rs_p, rel=1e-12)


def test_simulate_and_connect(runner, tmp_path):
    panel = tmp_path / "panel.csv"
    res = runner.invoke(main, ["simulate", "--n-assets", "3", "-T", "400", "--seed", "7",
                               "--out", str(panel)])
    assert res.exit_code == 0, res.output
    table = tmp_path / "table.csv"
    res = runner.invoke(main, ["connect", "--panel", str(panel), "--out", str(table)])
    assert res.exit_code == 0, res.output
    lines = table.read_text().strip().splitlines()
    assert lines[0] == ",A1,A2,A3,FROM"
    assert lines[-1].startswith("TO,")


def test_bands_command(runner, tmp_path):
    panel = tmp_path / "panel.csv"
    write_sim_panel(panel)
    out = tmp_path / "bands.csv"
    res = runner.invoke(main, ["bands", "--panel", str(panel), "--out", str(out)])
    assert res.exit_code == 0, res.output
    text = out.read_text()
    for name in ("1-5", "5-20", "20-300"):
        assert f"{name}," in text


def test_sam_command(runner, tmp_path):
    pp, pm = tmp_path / "plus.csv", tmp_path / "minus.csv"
    write_sim_panel(pp, T=140, seed=1)
    write_sim_panel(pm, T=140, seed=2)
    out = tmp_path / "sam.csv"
    res = runner.invoke(main, ["sam", "--panel-plus", str(pp), "--panel-minus", str(pm),
                               "--window", "130", "--lag", "1", "--bootstrap", "100",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    header = out.read_text().splitlines()[0]
    assert header == "date,sam,sam_lo,sam_hi,reject"


def test_regress_command(runner, tmp_path):
    dates = [f"2015-01-{d:02d}" for d in range(1, 21)]
    (tmp_path / "series.csv").write_text(
        "date,total\n" + "\n".join(f"{d},{2.0 * i}" for i, d in enumerate(dates)) + "\n")
    (tmp_path / "exog.csv").write_text(
        "date,x\n" + "\n".join(f"{d},{float(i)}" for i, d in enumerate(dates)) + "\n")
    out = tmp_path / "ols.json"
    res = runner.invoke(main, ["regress", "--series", str(tmp_path / "series.csv"),
                               "--exog", str(tmp_path / "exog.csv"), "--out", str(out)])
    assert res.exit_code == 0, res.output
    result = json.loads(out.read_text())
    assert result["coefficients"][1] == pytest.approx(2.0, abs=1e-8)
    assert result["r_squared"] == pytest.approx(1.0, abs=1e-10)


def make_config(tmp_path, panel_path, out_dir, extra=""):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        f"""[input]
panel = {panel_path}
[rolling]
window = 150
lag = 1
step = 10
[bootstrap]
enabled = false
[run]
seed = 3
out_dir = {out_dir}
{extra}"""
    )
    return cfg


def test_run_pipeline_and_manifest(runner, tmp_path):
    panel = tmp_path / "panel.csv"
    write_sim_panel(panel, T=250, seed=4)
    out = tmp_path / "out"
    cfg = make_config(tmp_path, panel, out)
    res = runner.invoke(main, ["run", "--config", str(cfg)])
    assert res.exit_code == 0, res.output
    manifest = json.loads((out / "manifest.json").read_text())
    for name in ("connectedness_table.csv", "spillover_series.csv"):
        assert (out / name).exists()
        assert name in manifest["outputs"]
    series = (out / "spillover_series.csv").read_text()
    assert "band_1-5" in series.splitlines()[0]


def test_run_determinism(runner, tmp_path):
    panel = tmp_path / "panel.csv"
    write_sim_panel(panel, T=250, seed=5)
    outs = []
    for sub in ("out1", "out2"):
        cfg = make_config(tmp_path, panel, tmp_path / sub)
        res = runner.invoke(main, ["run", "--config", str(cfg)])
        assert res.exit_code == 0, res.output
        outs.append(tmp_path / sub)
    for name in ("connectedness_table.csv", "spillover_series.csv", "spillover_series.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_run_missing_input_exits_3(runner, tmp_path):
    cfg = make_config(tmp_path, tmp_path / "nope.csv", tmp_path / "out")
    res = runner.invoke(main, ["run", "--config", str(cfg)])
    assert res.exit_code == 3
    assert not (tmp_path / "out").exists()
    report = json.loads(res.output.strip().splitlines()[-1])
    assert report["stage"] == "run"


def test_run_bad_config_exits_2(runner, tmp_path):
    cfg = tmp_path / "empty.ini"
    cfg.write_text("[input]\n")
    res = runner.invoke(main, ["run", "--config", str(cfg)])
    assert res.exit_code == 2


def test_numeric_failure_exits_4(runner, tmp_path):
    # constant panel: VAR regressors are rank-deficient
    dates = [f"2015-01-{d:02d}" for d in range(1, 31)]
    panel = tmp_path / "flat.csv"
    panel.write_text("date,A,B\n" + "\n".join(f"{d},1.0,1.0" for d in dates) + "\n")
    out = tmp_path / "t.csv"
    res = runner.invoke(main, ["connect", "--panel", str(panel), "--out", str(out)])
    assert res.exit_code == 4
