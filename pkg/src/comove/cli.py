"""Command line front end for the analysis pipelines and data generators.

Exit codes: 0 on success, 1 for validation problems (bad flags, config
or file contents), 2 when the data is insufficient for the request, and
3 when a computation fails numerically.
"""

from __future__ import annotations

import sys

import click
import numpy as np

from .data import parse_session, write_daily_csv, write_ticks_csv
from .errors import InsufficientDataError, NumericalError, ValidationError
from .pipeline import ESTIMATORS, MODES, load_config, run_pipeline
from .synth import (
    DiffusionSpec,
    default_symbols,
    equicorrelated,
    planted_daily,
    simulate_sessions,
    trading_days,
)


@click.group()
@click.version_option(package_name="comove")
def cli() -> None:
    """Correlation structure analytics for tick, binned and daily data."""


@cli.command("run")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; flags override its entries.")
@click.option("--mode", type=click.Choice(MODES), default=None,
              help="Input kind: raw ticks, a binned panel, or daily closes.")
@click.option("--input", "input_path", type=click.Path(), default=None,
              help="Input data file.")
@click.option("--out", type=click.Path(), default=None,
              help="Artifact directory.")
@click.option("--bin-width", type=int, default=None,
              help="Intraday bin width in seconds.")
@click.option("--session", default=None,
              help="Trading session as HH:MM-HH:MM.")
@click.option("--window", type=int, default=None,
              help="Daily window width in trading days.")
@click.option("--step", type=int, default=None,
              help="Daily window step; defaults to the width.")
@click.option("--estimator", type=click.Choice(ESTIMATORS), default=None,
              help="Correlation estimator; defaults per mode.")
@click.option("--clean/--no-clean", "clean", default=None,
              help="Flatten the noise eigenvalue band per window.")
@click.option("--seed", type=int, default=None,
              help="Seed for every stochastic stage.")
@click.option("--penalty-weight", type=float, default=None,
              help="Warm-start anchor weight; defaults to an automatic scale.")
@click.option("--skip-windows", is_flag=True, default=False,
              help="Skip windows with undefined pairs instead of "
                   "dropping symbols.")
@click.option("--workers", type=int, default=None,
              help="Threads for pairwise estimation.")
@click.option("--dim", "n_dim", type=int, default=None,
              help="Embedding dimension.")
def run(config_path, skip_windows, **overrides) -> None:
    """Run a full analysis described by a config and/or flags."""
    if skip_windows:
        overrides["drop_policy"] = "skip-windows"
    overrides["input"] = overrides.pop("input_path")
    config = load_config(config_path, overrides)
    manifest = run_pipeline(config)
    click.echo(
        f"wrote {len(manifest['artifacts'])} artifacts to {config.out} "
        f"(config {manifest['config_hash'][:12]})"
    )


def _parse_rates(raw: str, n: int) -> np.ndarray:
    try:
        values = [float(v) for v in raw.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad rates {raw!r}") from exc
    if len(values) == 1:
        values = values * n
    if len(values) != n:
        raise ValidationError(f"{len(values)} rates for {n} assets")
    return np.array(values)


@cli.command("synth-ticks")
@click.option("--assets", type=int, default=8, show_default=True)
@click.option("--days", type=int, default=5, show_default=True)
@click.option("--rho", type=float, default=0.4, show_default=True,
              help="Pair correlation of every asset pair.")
@click.option("--rates", default="0.1", show_default=True,
              help="Ticks per second, one value or one per asset.")
@click.option("--vol", type=float, default=2e-4, show_default=True,
              help="Volatility per sqrt(second).")
@click.option("--session", default="10:00-16:00", show_default=True)
@click.option("--start-date", default="2020-01-06", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def synth_ticks(assets, days, rho, rates, vol, session, start_date, seed,
                out) -> None:
    """Write a synthetic tick CSV with a known pair correlation."""
    start_s, end_s = parse_session(session)
    spec = DiffusionSpec(
        symbols=default_symbols(assets),
        correlation=equicorrelated(assets, rho),
        vols=vol,
        tick_rates=_parse_rates(rates, assets),
        session_length_s=float(end_s - start_s),
        seed=seed,
    )
    day_list = trading_days(start_date, days)
    ticks = simulate_sessions(spec, day_list, start_s)
    write_ticks_csv(out, ticks, [
        f"synthetic ticks, rho={rho}, seed={seed}",
        f"days: {day_list[0]}..{day_list[-1]}, session {session}",
    ])
    total = sum(len(t) for t in ticks)
    click.echo(f"wrote {total} ticks for {assets} assets to {out}")


@cli.command("synth-daily")
@click.option("--assets", type=int, default=30, show_default=True)
@click.option("--days", type=int, default=120, show_default=True)
@click.option("--rho", type=float, default=0.3, show_default=True,
              help="Pair correlation of daily returns.")
@click.option("--shift-rho", type=float, default=None,
              help="Correlation after the shift day, for regime studies.")
@click.option("--shift-at", type=int, default=None,
              help="First day index under the shifted correlation.")
@click.option("--vol", type=float, default=0.01, show_default=True,
              help="Daily return scale.")
@click.option("--start-date", default="2020-01-06", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def synth_daily(assets, days, rho, shift_rho, shift_at, vol, start_date,
                seed, out) -> None:
    """Write a synthetic daily close CSV with a known pair correlation."""
    if (shift_rho is None) != (shift_at is None):
        raise ValidationError("--shift-rho and --shift-at go together")
    all_days = trading_days(start_date, days + 1)
    profile = np.full(days, float(rho))
    if shift_rho is not None:
        if not 0 <= shift_at <= days:
            raise ValidationError(f"--shift-at must be in [0, {days}]")
        profile[shift_at:] = float(shift_rho)
    panel = planted_daily(all_days[1:], assets, profile, vol, seed)
    closes = np.empty((assets, days + 1))
    closes[:, 0] = 100.0
    closes[:, 1:] = 100.0 * np.exp(np.cumsum(panel.values, axis=1))
    write_daily_csv(out, panel.symbols, all_days, closes, [
        f"synthetic closes, rho={rho}, seed={seed}",
    ])
    click.echo(f"wrote {assets} assets x {days + 1} days to {out}")


def main(argv: list[str] | None = None) -> int:
    """Entry point translating failures into the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except InsufficientDataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except NumericalError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
