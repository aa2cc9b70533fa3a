"""Command-line front end for the connectedness pipeline.

Exit codes: 0 ok, 2 config error, 3 input error, 4 numeric failure.
"""

from __future__ import annotations

import configparser
import datetime as dt
import hashlib
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import click
import numpy as np

from volconn import __version__
from volconn.connectedness import ConnectednessError, connectedness_table, gfevd
from volconn.ingest import (
    IngestError,
    IngestReport,
    SessionSpec,
    assign_sessions,
    holiday_file_rule,
    is_excluded_date,
    parse_price_records,
)
from volconn.realized import PanelError, RealizedPanel, build_panel, read_panel, realized_measures, write_panel
from volconn.rolling import (
    RollingConfig,
    RollingError,
    bootstrap_sam_test,
    ols_regress,
    rolling_connectedness,
    spillover_asymmetry,
)
from volconn.spectral import SpectralError, band_connectedness, band_fevd, frequency_response, make_bands
from volconn.synth import DgpSpec, SimulationError, simulate_var
from volconn.varmodel import VarFitError, fit_var, ma_coefficients, select_lag_aic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4


class ConfigError(Exception):
    pass


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _parse_bands(text: str):
    """'1-5,5-20,20-300' -> ((1, 5), (5, 20), (20, 300))."""
    ranges = []
    for part in text.split(","):
        lo, _, hi = part.strip().partition("-")
        try:
            ranges.append((float(lo), float(hi)))
        except ValueError as exc:
            raise ConfigError(f"bad band range {part!r}") from exc
    return tuple(ranges)


def _parse_time(text: str) -> dt.time:
    try:
        return dt.time.fromisoformat(text)
    except ValueError as exc:
        raise ConfigError(f"bad clock time {text!r}") from exc


def _session_spec(session_start, session_end, timezone, holidays, resample) -> SessionSpec:
    rules = [is_excluded_date]
    if holidays:
        rules = [holiday_file_rule(holidays)]
    minutes = None
    if resample and resample != "off":
        minutes = int(resample)
    return SessionSpec(
        session_start=_parse_time(session_start),
        session_end=_parse_time(session_end),
        timezone=timezone,
        holiday_rules=tuple(rules),
        resample_minutes=minutes,
    )


def _fail(code: int, stage: str, exc: Exception) -> None:
    report = {"stage": stage, "error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(report, sort_keys=True), err=True)
    sys.exit(code)


def _guarded(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (FileNotFoundError, IngestError, PanelError) as exc:
        _fail(EXIT_INPUT, stage, exc)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, stage, exc)
    except (VarFitError, ConnectednessError, SpectralError, RollingError, SimulationError,
            np.linalg.LinAlgError) as exc:
        _fail(EXIT_NUMERIC, stage, exc)


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command("ingest")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--timestamp-col", default="timestamp", show_default=True)
@click.option("--symbol-col", default="symbol", show_default=True)
@click.option("--price-col", default="price", show_default=True)
@click.option("--session-start", default="17:00", show_default=True)
@click.option("--session-end", default="16:00", show_default=True)
@click.option("--timezone", default="America/Chicago", show_default=True)
@click.option("--holidays", type=click.Path(), default=None, help="File of ISO dates to exclude.")
@click.option("--resample", default="off", show_default=True, help="Grid minutes, or 'off'.")
def ingest_cmd(input_path, out_path, timestamp_col, symbol_col, price_col,
               session_start, session_end, timezone, holidays, resample):
    """Parse raw intraday prices into session-bucketed series (JSON)."""

    def run():
        spec = _session_spec(session_start, session_end, timezone, holidays, resample)
        report = IngestReport()
        with open(input_path) as fh:
            by_symbol = parse_price_records(fh, timestamp_col, symbol_col, price_col, report=report)
        if not by_symbol:
            raise IngestError(f"no records parsed from {input_path}")
        payload = {"version": __version__, "report": {}, "series": {}}
        for symbol in sorted(by_symbol):
            series = assign_sessions(by_symbol[symbol], spec, report=report)
            payload["series"][symbol] = {
                d.isoformat(): [float(x) for x in np.exp(p)] for d, p in series.sessions
            }
        payload["report"] = {
            "rejected_rows": report.rejected_rows,
            "gap_records": report.gap_records,
            "holiday_records": report.holiday_records,
            "dropped_sessions": report.dropped_sessions,
        }
        _atomic_write(Path(out_path), json.dumps(payload, sort_keys=True, indent=1))
        click.echo(f"wrote {out_path} ({len(payload['series'])} assets)")

    _guarded("ingest", run)


def _measures_from_sessions(sessions_path):
    with open(sessions_path) as fh:
        payload = json.load(fh)
    series = {}
    for symbol, sessions in payload["series"].items():
        measures = []
        for date_str in sorted(sessions):
            prices = np.asarray(sessions[date_str], dtype=float)
            r = np.diff(np.log(prices))
            measures.append(realized_measures(r, session_date=dt.date.fromisoformat(date_str)))
        series[symbol] = measures
    return series


@main.command("measures")
@click.option("--sessions", "sessions_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--transform", type=click.Choice(["raw", "log"]), default="raw", show_default=True)
@click.option("--log-floor", default=1e-12, show_default=True)
def measures_cmd(sessions_path, out_dir, transform, log_floor):
    """Daily realized measures per asset plus the three aligned panels."""

    def run():
        series = _measures_from_sessions(sessions_path)
        out = Path(out_dir)
        for symbol, measures in series.items():
            lines = ["date,rv,rs_minus,rs_plus,n_returns"]
            for m in measures:
                lines.append(f"{m.session_date.isoformat()},{m.rv:.12g},{m.rs_minus:.12g},"
                             f"{m.rs_plus:.12g},{m.n_returns}")
            _atomic_write(out / f"measures_{symbol}.csv", "\n".join(lines) + "\n")
        for measure in ("rv", "rs_minus", "rs_plus"):
            panel = build_panel(series, measure=measure, transform=transform, log_floor=log_floor)
            write_panel(panel, out / f"panel_{measure}.csv")
        click.echo(f"wrote measures and panels to {out_dir}")

    _guarded("measures", run)


@main.command("connect")
@click.option("--panel", "panel_path", required=True, type=click.Path())
@click.option("--horizon", default=10, show_default=True)
@click.option("--lag", default=2, show_default=True)
@click.option("--select-lag", is_flag=True)
@click.option("--lag-max", default=5, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of delimited text.")
def connect_cmd(panel_path, horizon, lag, select_lag, lag_max, out_path, as_json):
    """Full-sample connectedness table for a panel."""

    def run():
        panel = read_panel(panel_path)
        p = select_lag_aic(panel.values, lag_max) if select_lag else lag
        model = fit_var(panel.values, p)
        psi = ma_coefficients(model, horizon)
        table = connectedness_table(gfevd(psi, model.sigma, horizon, assets=panel.assets))
        text = table.to_json(indent=1) if as_json else table.to_delimited()
        _atomic_write(Path(out_path), text)
        click.echo(f"total connectedness {table.total:.2f} -> {out_path}")

    _guarded("connect", run)


@main.command("bands")
@click.option("--panel", "panel_path", required=True, type=click.Path())
@click.option("--bands", "bands_text", default="1-5,5-20,20-300", show_default=True)
@click.option("--lag", default=2, show_default=True)
@click.option("--resolution", default=100, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def bands_cmd(panel_path, bands_text, lag, resolution, out_path):
    """Frequency-band connectedness tables (one block per band)."""

    def run():
        panel = read_panel(panel_path)
        ranges = _parse_bands(bands_text)
        model = fit_var(panel.values, lag)
        bands = make_bands(ranges, resolution)
        psi = ma_coefficients(model, resolution)
        grid = frequency_response(psi, resolution)
        lines = []
        for bf in band_fevd(grid, model.sigma, bands, assets=panel.assets):
            table = band_connectedness(bf)
            for row in table.to_delimited().splitlines():
                lines.append(f"{bf.band.name},{row}")
        _atomic_write(Path(out_path), "\n".join(lines) + "\n")
        click.echo(f"wrote band tables -> {out_path}")

    _guarded("bands", run)


@main.command("sam")
@click.option("--panel-plus", required=True, type=click.Path())
@click.option("--panel-minus", required=True, type=click.Path())
@click.option("--window", default=200, show_default=True)
@click.option("--horizon", default=10, show_default=True)
@click.option("--lag", default=2, show_default=True)
@click.option("--step", default=1, show_default=True)
@click.option("--bootstrap", "n_boot", default=500, show_default=True)
@click.option("--block-len", default=None, type=int)
@click.option("--level", default=0.95, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def sam_cmd(panel_plus, panel_minus, window, horizon, lag, step, n_boot, block_len,
            level, seed, out_path):
    """Spillover asymmetry series with bootstrap bands and symmetry test."""

    def run():
        pp = read_panel(panel_plus)
        pm = read_panel(panel_minus)
        cfg = RollingConfig(window=window, horizon=horizon, lag=lag, step=step)
        series = bootstrap_sam_test(pp, pm, cfg, n_boot=n_boot, block_len=block_len,
                                    level=level, seed=seed)
        _atomic_write(Path(out_path), series.to_frame().to_csv(float_format="%.10g"))
        click.echo(f"wrote SAM series -> {out_path}")

    _guarded("sam", run)


@main.command("simulate")
@click.option("--spec", "spec_path", type=click.Path(), default=None,
              help="JSON with phi, sigma, T, burn_in, seed.")
@click.option("--n-assets", default=2, show_default=True)
@click.option("--diag", default=0.5, show_default=True, help="Diagonal AR coefficient.")
@click.option("--cross", default=0.1, show_default=True, help="Off-diagonal AR coefficient.")
@click.option("--rho", default=0.3, show_default=True, help="Innovation correlation.")
@click.option("-T", "--length", "length", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def simulate_cmd(spec_path, n_assets, diag, cross, rho, length, seed, out_path):
    """Simulate a VAR panel in the panel text format."""

    def run():
        if spec_path:
            with open(spec_path) as fh:
                raw = json.load(fh)
            spec = DgpSpec(
                phi=tuple(np.asarray(m, dtype=float) for m in raw["phi"]),
                sigma=np.asarray(raw["sigma"], dtype=float),
                T=int(raw.get("T", length)),
                burn_in=int(raw.get("burn_in", 500)),
                seed=int(raw.get("seed", seed)),
            )
        else:
            phi = np.full((n_assets, n_assets), cross)
            np.fill_diagonal(phi, diag)
            from volconn.varmodel import spectral_radius

            sr = spectral_radius([phi])
            if sr >= 0.95:  # keep the built-in generator stable at any size
                phi *= 0.9 / sr
            sigma = np.full((n_assets, n_assets), rho)
            np.fill_diagonal(sigma, 1.0)
            spec = DgpSpec(phi=(phi,), sigma=sigma, T=length, seed=seed)
        values = simulate_var(spec)
        # simulated volatilities are shifted to be positive like real RVs
        values = values - values.min() + 0.1
        dates = tuple(dt.date(2000, 1, 3) + dt.timedelta(days=i) for i in range(spec.T))
        assets = tuple(f"A{i + 1}" for i in range(values.shape[1]))
        panel = RealizedPanel(dates=dates, assets=assets, values=values)
        tmp = Path(out_path)
        tmp.parent.mkdir(parents=True, exist_ok=True)
        write_panel(panel, tmp)
        click.echo(f"wrote simulated panel {values.shape} -> {out_path}")

    _guarded("simulate", run)


@main.command("regress")
@click.option("--series", "series_path", required=True, type=click.Path())
@click.option("--column", default="total", show_default=True)
@click.option("--exog", "exog_path", required=True, type=click.Path())
@click.option("--standardize", is_flag=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def regress_cmd(series_path, column, exog_path, standardize, out_path):
    """OLS of a spillover series on date-aligned exogenous drivers."""

    def run():
        import pandas as pd

        y_df = pd.read_csv(series_path, index_col=0)
        x_df = pd.read_csv(exog_path, index_col=0)
        if column not in y_df.columns:
            raise ConfigError(f"column {column!r} not in {series_path}")
        joined = y_df[[column]].join(x_df, how="inner").dropna()
        if joined.empty:
            raise PanelError("no overlapping dates between series and exogenous data")
        result = ols_regress(
            joined[column].to_numpy(),
            joined.drop(columns=[column]).to_numpy(),
            names=tuple(joined.columns.drop(column)),
            standardize=standardize,
        )
        _atomic_write(Path(out_path), json.dumps(result.to_dict(), sort_keys=True, indent=1))
        click.echo(f"R^2 {result.r_squared:.3f} -> {out_path}")

    _guarded("regress", run)


DEFAULT_CONFIG = {
    "input": {"prices": "", "panel_plus": "", "panel_minus": "", "panel": ""},
    "session": {"start": "17:00", "end": "16:00", "timezone": "America/Chicago",
                "holidays": "", "resample": "off"},
    "panel": {"transform": "raw", "log_floor": "1e-12"},
    "rolling": {"window": "200", "horizon": "10", "lag": "2", "step": "1",
                "bands": "1-5,5-20,20-300", "resolution": "100"},
    "bootstrap": {"enabled": "true", "replicates": "500", "block_len": "", "level": "0.95"},
    "run": {"seed": "0", "out_dir": "out"},
}


def _load_config(path: str, overrides) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.read_dict(DEFAULT_CONFIG)
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found or unreadable")
    for item in overrides:
        try:
            key, value = item.split("=", 1)
            section, option = key.split(".", 1)
            cp.set(section, option, value)
        except (ValueError, configparser.NoSectionError) as exc:
            raise ConfigError(f"bad override {item!r} (use section.key=value)") from exc
    return cp


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--set", "overrides", multiple=True, help="Override as section.key=value.")
def run_cmd(config_path, overrides):
    """Full pipeline: ingest -> measures -> rolling/band/asymmetry analysis."""

    def run():
        cp = _load_config(config_path, overrides)
        out_dir = Path(cp.get("run", "out_dir"))
        seed = cp.getint("run", "seed")
        manifest = {
            "version": __version__,
            "seed": seed,
            "config_sha256": hashlib.sha256(Path(config_path).read_bytes()).hexdigest(),
            "overrides": sorted(overrides),
            "outputs": {},
            "report": {},
        }
        outputs: list[Path] = []

        prices = cp.get("input", "prices")
        if prices:
            if not os.path.exists(prices):
                raise FileNotFoundError(f"input prices file {prices!r} does not exist")
            spec = _session_spec(
                cp.get("session", "start"), cp.get("session", "end"),
                cp.get("session", "timezone"), cp.get("session", "holidays") or None,
                cp.get("session", "resample"),
            )
            report = IngestReport()
            with open(prices) as fh:
                by_symbol = parse_price_records(fh, report=report)
            series = {}
            for symbol in sorted(by_symbol):
                bucketed = assign_sessions(by_symbol[symbol], spec, report=report)
                series[symbol] = [realized_measures(r, session_date=d)
                                  for d, r in bucketed.session_returns()]
            manifest["report"] = {
                "rejected_rows": report.rejected_rows,
                "gap_records": report.gap_records,
                "holiday_records": report.holiday_records,
                "dropped_sessions": report.dropped_sessions,
            }
            transform = cp.get("panel", "transform")
            log_floor = cp.getfloat("panel", "log_floor")
            panels = {}
            for measure in ("rv", "rs_minus", "rs_plus"):
                panels[measure] = build_panel(series, measure=measure, transform=transform,
                                              log_floor=log_floor)
            for symbol, measures in series.items():
                lines = ["date,rv,rs_minus,rs_plus,n_returns"]
                for m in measures:
                    lines.append(f"{m.session_date.isoformat()},{m.rv:.12g},{m.rs_minus:.12g},"
                                 f"{m.rs_plus:.12g},{m.n_returns}")
                path = out_dir / f"measures_{symbol}.csv"
                _atomic_write(path, "\n".join(lines) + "\n")
                outputs.append(path)
            for measure, panel in panels.items():
                path = out_dir / f"panel_{measure}.csv"
                out_dir.mkdir(parents=True, exist_ok=True)
                write_panel(panel, path)
                outputs.append(path)
            panel_rv, panel_plus, panel_minus = panels["rv"], panels["rs_plus"], panels["rs_minus"]
        else:
            panel_file = cp.get("input", "panel")
            if not panel_file:
                raise ConfigError("config needs input.prices or input.panel")
            if not os.path.exists(panel_file):
                raise FileNotFoundError(f"input panel file {panel_file!r} does not exist")
            panel_rv = read_panel(panel_file)
            pp, pm = cp.get("input", "panel_plus"), cp.get("input", "panel_minus")
            panel_plus = read_panel(pp) if pp else None
            panel_minus = read_panel(pm) if pm else None

        bands_text = cp.get("rolling", "bands")
        cfg = RollingConfig(
            window=cp.getint("rolling", "window"),
            horizon=cp.getint("rolling", "horizon"),
            lag=cp.getint("rolling", "lag"),
            step=cp.getint("rolling", "step"),
            band_day_ranges=_parse_bands(bands_text) if bands_text else None,
            resolution=cp.getint("rolling", "resolution"),
        )

        # full-sample table
        model = fit_var(panel_rv.values, cfg.lag)
        psi = ma_coefficients(model, cfg.horizon)
        table = connectedness_table(gfevd(psi, model.sigma, cfg.horizon, assets=panel_rv.assets))
        path = out_dir / "connectedness_table.csv"
        _atomic_write(path, table.to_delimited())
        outputs.append(path)
        path = out_dir / "connectedness_table.json"
        _atomic_write(path, table.to_json(indent=1))
        outputs.append(path)

        # rolling series
        series_roll = rolling_connectedness(panel_rv, cfg)
        path = out_dir / "spillover_series.csv"
        _atomic_write(path, series_roll.to_frame().to_csv(float_format="%.10g"))
        outputs.append(path)
        path = out_dir / "spillover_series.json"
        _atomic_write(path, series_roll.to_frame().to_json(orient="index", date_format="iso"))
        outputs.append(path)

        # asymmetry (needs both semivariance panels)
        if panel_plus is not None and panel_minus is not None:
            sam_stage_ok = True
            try:
                if cp.getboolean("bootstrap", "enabled"):
                    block = cp.get("bootstrap", "block_len")
                    sam_series = bootstrap_sam_test(
                        panel_plus, panel_minus, cfg,
                        n_boot=cp.getint("bootstrap", "replicates"),
                        block_len=int(block) if block else None,
                        level=cp.getfloat("bootstrap", "level"),
                        seed=seed,
                    )
                else:
                    sam_series = spillover_asymmetry(panel_plus, panel_minus, cfg)
            except (RollingError, VarFitError) as exc:
                sam_stage_ok = False
                manifest["report"]["sam_error"] = str(exc)
                logger.warning("asymmetry stage failed, earlier outputs kept: %s", exc)
            if sam_stage_ok:
                path = out_dir / "sam_series.csv"
                _atomic_write(path, sam_series.to_frame().to_csv(float_format="%.10g"))
                outputs.append(path)

        for path in outputs:
            manifest["outputs"][path.name] = _sha256(path)
        _atomic_write(out_dir / "manifest.json", json.dumps(manifest, sort_keys=True, indent=1))
        click.echo(f"pipeline complete: {len(outputs)} artifacts in {out_dir}")

    _guarded("run", run)


if __name__ == "__main__":
    main()
