"""
dex-multifractal CLI

Multifractal and detrended cross-correlation analysis of exchange-rate data.

Usage:
    dex-multifractal ingest FILES... [--dialect D] [--min-volume USD] [--output CSV]
    dex-multifractal aggregate TICKS [--dt-ms MS] --outdir DIR
    dex-multifractal acf SERIES [--max-lag N] [--abs] [--output CSV]
    dex-multifractal ccdf SERIES [--abs] [--tail-quantile Q | --x-min X] [--hill] --outdir DIR
    dex-multifractal mfdfa SERIES [--q SPEC] [--m M] [--fit-range S1 S2] --outdir DIR
    dex-multifractal mfcca X Y [--q SPEC] [--m M] --outdir DIR
    dex-multifractal rho X Y [--q Q ...] [--m M] [--outdir DIR]
    dex-multifractal surrogate SERIES --kind KIND [--seed S] --output FILE
    dex-multifractal synth cascade --levels N --p P --output FILE
    dex-multifractal synth fgn --hurst H --length T --seed S --output FILE
    dex-multifractal report OUTDIR
    dex-multifractal run CONFIG [--outdir DIR] [--workers N]

Exit codes: 0 success, 1 invalid input or usage, 2 analysis failure.
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape

from . import __version__
from .config import PipelineConfig, ScaleConfig
from .detrend import fluctuation_xy, fluctuation_zz
from .errors import AnalysisError, ValidationError
from .export import (
    acf_frame,
    ccdf_frame,
    dumps,
    gap_frame,
    histogram_frame,
    hurst_frame,
    lambda_frame,
    rho_frame,
    spectrum_frame,
    surface_frame,
    write_csv,
    write_json,
)
from .ingest import load_pools, tick_stats, write_ticks
from .mfcca import avg_hurst, cross_gap, lambda_exponent, rho_surfaces
from .mfdfa import (
    MIN_SPECTRUM_POINTS,
    generalized_hurst,
    singularity_spectrum,
    spectrum_metrics,
)
from .models import CascadeParams, QGrid, RegularSeries, ScaleGrid, SurrogateKind, SurrogateSpec
from .pipeline import run_pipeline
from .render import (
    render_hurst,
    render_lambda,
    render_manifest_summary,
    render_report,
    render_rho,
    render_tick_stats,
)
from .series import (
    absolute,
    aggregate,
    align_pair,
    check_aligned,
    load_series,
    normalize,
    save_series,
)
from .stats import (
    acf,
    ccdf,
    fit_powerlaw_tail,
    fit_stretched_exp,
    hill_tail,
    return_histogram,
    tail_threshold,
)
from .surrogates import make_surrogate, surrogate_spectrum
from .synth import binomial_cascade, fgn

console = Console()
err_console = Console(stderr=True)

LOGGER_NAME = "dex-multifractal"


def _configure_logging(verbose: bool) -> None:
    """Send package logs to stderr through rich; replaces earlier handlers."""
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = RichHandler(console=err_console, show_time=False, show_path=False, markup=False)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False


def _fail(message: str, code: int) -> None:
    err_console.print(f"[red]Error: {escape(message)}[/red]", markup=True, highlight=False)
    sys.exit(code)


class ExitCodeGroup(click.Group):
    """Click group that maps errors onto the documented exit codes."""

    def main(self, *args: Any, standalone_mode: bool = True, **kwargs: Any) -> Any:
        try:
            rv = super().main(*args, standalone_mode=False, **kwargs)
        except click.exceptions.Abort:
            _fail("aborted", 1)
        except click.ClickException as e:
            e.show()
            sys.exit(1)
        except ValidationError as e:
            _fail(str(e), 1)
        except AnalysisError as e:
            stage = f" [{e.stage}]" if e.stage else ""
            _fail(f"{e}{stage}", 2)
        if standalone_mode:
            sys.exit(rv if isinstance(rv, int) else 0)
        return rv


@click.group(cls=ExitCodeGroup)
@click.version_option(__version__, package_name="dex-multifractal")
@click.option("--verbose", "-v", is_flag=True, help="Debug-level logging on stderr")
def main(verbose: bool):
    """Multifractal analysis of exchange-rate tick data."""
    _configure_logging(verbose)


# ── Shared options ──────────────────────────────────────────────────────


def series_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    """--kind / --dt-ms, used when a series comes from a bare CSV."""
    fn = click.option(
        "--kind",
        default=None,
        help="Series kind for CSV input (log_return, volume, volatility)",
    )(fn)
    fn = click.option(
        "--dt-ms", "dt_ms", type=int, default=300_000, show_default=True,
        help="Interval length for CSV input",
    )(fn)
    return fn


def scale_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Detrending order, scale grid and threads."""
    fn = click.option(
        "--m", "m", type=int, default=2, show_default=True, help="Detrending order"
    )(fn)
    fn = click.option("--s-min", type=int, default=16, show_default=True, help="Smallest scale")(fn)
    fn = click.option("--s-max", type=int, default=None, help="Largest scale [default: T/4]")(fn)
    fn = click.option(
        "--count", type=int, default=40, show_default=True, help="Number of scales"
    )(fn)
    fn = click.option(
        "--dyadic", is_flag=True, help="Use powers of two from s-min to s-max (ignores --count)"
    )(fn)
    fn = click.option("--workers", type=int, default=1, show_default=True, help="Threads")(fn)
    return fn


def fit_option(fn: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--fit-range",
        type=(float, float),
        default=None,
        help="Scale range S1 S2 for the fits [default: central half in log space]",
    )(fn)


def _read_series(path: str, kind: str | None, dt_ms: int) -> RegularSeries:
    return load_series(path, kind=kind, dt_ms=dt_ms)


def _scales(length: int, s_min: int, s_max: int | None, count: int, dyadic: bool) -> ScaleGrid:
    spacing = "dyadic" if dyadic else "log"
    return ScaleConfig(s_min=s_min, s_max=s_max, count=count, spacing=spacing).grid(length)


# ── Data preparation ────────────────────────────────────────────────────


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path())
@click.option("--dialect", "-d", default="generic", show_default=True,
              help="Tick file layout (generic, binance_aggtrades)")
@click.option("--pair-id", default=None, help="Label of the merged series")
@click.option("--min-volume", type=float, default=0.01, show_default=True,
              help="Drop trades below this USD volume (per file, before merging)")
@click.option("--dedup", is_flag=True, help="Remove exact duplicate trades")
@click.option("--output", "-o", type=click.Path(), default=None, help="Canonical CSV output")
@click.option("--json", "as_json", is_flag=True, help="Print statistics as JSON")
def ingest(files, dialect, pair_id, min_volume, dedup, output, as_json):
    """Parse, filter and merge tick files; print trade statistics."""
    pair_id = pair_id or Path(files[0]).stem
    ticks = load_pools([(f, dialect) for f in files], pair_id, min_volume, dedup)
    stats = tick_stats(ticks)
    if output:
        write_ticks(ticks, output)
    if as_json:
        click.echo(dumps({"pair_id": pair_id, **stats.to_dict()}), nl=False)
    else:
        render_tick_stats(pair_id, stats, console)
        if output:
            console.print(f"[green]Wrote[/green] {output}")


@main.command("aggregate")
@click.argument("ticks_file", type=click.Path())
@click.option("--dialect", "-d", default="generic", show_default=True)
@click.option("--dt-ms", "dt_ms", type=int, default=300_000, show_default=True,
              help="Interval length in milliseconds")
@click.option("--min-volume", type=float, default=0.01, show_default=True)
@click.option("--pair-id", default=None)
@click.option("--outdir", type=click.Path(), required=True)
def aggregate_cmd(ticks_file, dialect, dt_ms, min_volume, pair_id, outdir):
    """Aggregate ticks into log-return and volume series."""
    pair_id = pair_id or Path(ticks_file).stem
    ticks = load_pools([(ticks_file, dialect)], pair_id, min_volume)
    returns, volume, report = aggregate(ticks, dt_ms)
    out = Path(outdir)
    save_series(returns, out / "log_return.json")
    save_series(volume, out / "volume.json")
    write_json(out / "aggregation.json", report.to_dict())
    console.print(
        f"[bold]{pair_id}[/bold]: {report.n_bins} bins, "
        f"{report.zero_return_fraction:.2%} zero returns, "
        f"⟨V_Δt⟩ = {report.mean_bin_volume:,.2f} USD"
    )


# ── Diagnostics ─────────────────────────────────────────────────────────


@main.command("acf")
@click.argument("series_file", type=click.Path())
@series_options
@click.option("--max-lag", type=int, default=500, show_default=True)
@click.option("--abs", "use_abs", is_flag=True, help="Use |values| (volatility)")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="CSV output [default: stdout]")
def acf_cmd(series_file, kind, dt_ms, max_lag, use_abs, output):
    """Autocorrelation function with lags in samples and seconds."""
    series = _read_series(series_file, kind, dt_ms)
    if use_abs:
        series = absolute(series)
    frame = acf_frame(acf(series, min(max_lag, len(series) - 1)), series.dt_ms)
    if output:
        write_csv(Path(output), frame)
    else:
        click.echo(frame.to_csv(index=False, lineterminator="\n", float_format="%.17g"), nl=False)


@main.command("ccdf")
@click.argument("series_file", type=click.Path())
@series_options
@click.option("--abs", "use_abs", is_flag=True, help="Use |values| (volatility)")
@click.option("--tail-quantile", type=float, default=0.99, show_default=True,
              help="x_min for the power-law fit as a sample quantile")
@click.option("--x-min", type=float, default=None, help="Explicit x_min (σ units)")
@click.option("--hill", is_flag=True, help="Also report the Hill estimate (secondary)")
@click.option("--histogram", "bins", type=int, default=None,
              help="Also write a return density histogram with this many bins")
@click.option("--outdir", type=click.Path(), required=True)
def ccdf_cmd(series_file, kind, dt_ms, use_abs, tail_quantile, x_min, hill, bins, outdir):
    """CCDF in σ units with power-law and stretched-exponential fits."""
    series = _read_series(series_file, kind, dt_ms)
    if use_abs:
        series = absolute(series)
    out = Path(outdir)
    if bins:
        centers, density = return_histogram(series, bins)
        write_csv(out / "histogram.csv", histogram_frame(centers, density))

    scaled = normalize(series, center=False)
    curve = ccdf(scaled.values)
    write_csv(out / "ccdf.csv", ccdf_frame(curve))
    threshold = x_min if x_min is not None else tail_threshold(scaled.values, tail_quantile)
    tail = fit_powerlaw_tail(curve, threshold)
    fits = {"x_min": threshold, "units": "sigma", "powerlaw": tail.to_dict()}
    console.print(f"γ = [bold]{tail.gamma:.3f}[/bold] ± {tail.stderr:.3f} ({tail.n_tail} points)")
    if hill:
        secondary = hill_tail(scaled.values, threshold)
        fits["hill"] = secondary.to_dict()
        console.print(f"[dim]Hill γ = {secondary.gamma:.3f} ± {secondary.stderr:.3f}[/dim]")
    try:
        stretched = fit_stretched_exp(curve)
    except (AnalysisError, ValidationError) as e:
        fits["stretched_exp"] = {"error": str(e)}
        console.print(f"[yellow]Stretched exponential: {e}[/yellow]")
    else:
        fits["stretched_exp"] = stretched.to_dict()
        console.print(f"β = [bold]{stretched.beta:.3f}[/bold]  x0 = {stretched.x0:.3g}")
    write_json(out / "fits.json", fits)


# ── Multifractal analysis ───────────────────────────────────────────────


@main.command("mfdfa")
@click.argument("series_file", type=click.Path())
@series_options
@click.option("--q", "q_spec", default="-4:4:0.2", show_default=True,
              help="q grid as start:stop:step or a comma list")
@scale_options
@fit_option
@click.option("--outdir", type=click.Path(), required=True)
def mfdfa_cmd(series_file, kind, dt_ms, q_spec, m, s_min, s_max, count, dyadic, workers,
              fit_range, outdir):
    """F(q,s), h(q) and the singularity spectrum of one series."""
    series = _read_series(series_file, kind, dt_ms)
    grid = QGrid.from_spec(q_spec)
    scales = _scales(len(series), s_min, s_max, count, dyadic)
    surface = fluctuation_zz(series, grid, scales, m, workers=workers)
    hurst = generalized_hurst(surface, fit_range)

    out = Path(outdir)
    write_csv(out / "F.csv", surface_frame(surface))
    write_csv(out / "hq.csv", hurst_frame(hurst))
    metrics = None
    # A short q list (e.g. 1,2,3) still yields h(q); f(α) needs a denser grid.
    if len(hurst) >= MIN_SPECTRUM_POINTS:
        spectrum = singularity_spectrum(hurst)
        metrics = spectrum_metrics(spectrum)
        write_csv(out / "spectrum.csv", spectrum_frame(spectrum))
    write_json(
        out / "metrics.json",
        {"H": hurst.H, "width": metrics[0] if metrics else None,
         "asymmetry": metrics[1] if metrics else None, "min_r2": hurst.min_r2,
         "fit_range": list(hurst.fit_range), "unusable_scales": surface.unusable_scales},
    )
    render_hurst(hurst, title=f"h(q): {series.label}", metrics=metrics, console=console)


def _pair(x_file: str, y_file: str, kind: str | None, dt_ms: int, align: bool):
    x = _read_series(x_file, kind, dt_ms)
    y = _read_series(y_file, kind, dt_ms)
    if align:
        x, y = align_pair(x, y)
    check_aligned(x, y)
    return x, y


@main.command("mfcca")
@click.argument("x_file", type=click.Path())
@click.argument("y_file", type=click.Path())
@series_options
@click.option("--q", "q_spec", default="-4:4:0.2", show_default=True)
@scale_options
@fit_option
@click.option("--align", is_flag=True, help="Trim both series to their common window first")
@click.option("--all-q", is_flag=True, help="Fit λ(q) for q ≤ 0 as well")
@click.option("--outdir", type=click.Path(), required=True)
def mfcca_cmd(x_file, y_file, kind, dt_ms, q_spec, m, s_min, s_max, count, dyadic, workers,
              fit_range, align, all_q, outdir):
    """λ(q) and the averaged Hurst benchmark h_xy(q) for a pair of series."""
    x, y = _pair(x_file, y_file, kind, dt_ms, align)
    grid = QGrid.from_spec(q_spec)
    scales = _scales(len(x), s_min, s_max, count, dyadic)
    fxy = fluctuation_xy(x, y, grid, scales, m, workers=workers)
    lam = lambda_exponent(fxy, fit_range, positive_only=not all_q)
    hxy = avg_hurst(
        generalized_hurst(fluctuation_zz(x, grid, scales, m, workers=workers), fit_range),
        generalized_hurst(fluctuation_zz(y, grid, scales, m, workers=workers), fit_range),
    )
    q_gap, gap = cross_gap(lam, hxy)

    out = Path(outdir)
    write_csv(out / "F_xy.csv", surface_frame(fxy))
    write_csv(out / "lambda.csv", lambda_frame(lam))
    write_json(out / "lambda.json", lam.to_dict())
    write_csv(out / "h_xy.csv", hurst_frame(hxy))
    write_csv(out / "gap.csv", gap_frame(q_gap, gap))
    render_lambda(lam, console)


@main.command("rho")
@click.argument("x_file", type=click.Path())
@click.argument("y_file", type=click.Path())
@series_options
@click.option("--q", "q_values", type=float, multiple=True, default=(2.0,), show_default=True,
              help="q value(s) for ρ(q, s); repeat for several")
@scale_options
@click.option("--align", is_flag=True, help="Trim both series to their common window first")
@click.option("--outdir", type=click.Path(), default=None, help="Write rho_q<q>.csv files here")
def rho_cmd(x_file, y_file, kind, dt_ms, q_values, m, s_min, s_max, count, dyadic, workers,
            align, outdir):
    """Detrended cross-correlation coefficient ρ(q, s)."""
    x, y = _pair(x_file, y_file, kind, dt_ms, align)
    scales = _scales(len(x), s_min, s_max, count, dyadic)
    surfaces = rho_surfaces(x, y, list(q_values), scales, m, workers=workers)
    if outdir:
        for surface in surfaces:
            write_csv(Path(outdir) / f"rho_q{surface.q:g}.csv", rho_frame(surface))
    render_rho(surfaces, console)


# ── Surrogates and synthetic data ───────────────────────────────────────


@main.command("surrogate")
@click.argument("series_file", type=click.Path())
@click.option("--series-kind", "kind", default=None, help="Series kind for CSV input")
@click.option("--dt-ms", "dt_ms", type=int, default=300_000, show_default=True)
@click.option("--kind", "surrogate_kind", type=click.Choice(["shuffle", "fourier"]),
              required=True, help="Randomization scheme")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--replicate", type=int, default=0, show_default=True, help="Replicate index")
@click.option("--spectrum", is_flag=True,
              help="Write the replicate-averaged f(α) instead of one surrogate series")
@click.option("--replicates", type=int, default=10, show_default=True)
@click.option("--q", "q_spec", default="-4:4:0.2", show_default=True)
@scale_options
@fit_option
@click.option("--output", "-o", type=click.Path(), required=True)
def surrogate_cmd(series_file, kind, dt_ms, surrogate_kind, seed, replicate, spectrum,
                  replicates, q_spec, m, s_min, s_max, count, dyadic, workers, fit_range, output):
    """Shuffled or Fourier phase-randomized surrogates."""
    series = _read_series(series_file, kind, dt_ms)
    skind = SurrogateKind.from_string(surrogate_kind)
    if spectrum:
        averaged = surrogate_spectrum(
            series,
            skind,
            QGrid.from_spec(q_spec),
            _scales(len(series), s_min, s_max, count, dyadic),
            m,
            fit_range,
            replicates=replicates,
            seed=seed,
            workers=workers,
        )
        write_csv(Path(output), spectrum_frame(averaged))
        console.print(f"surrogate Δα = [bold]{averaged.width:.4f}[/bold] ({replicates} replicates)")
        return
    spec = SurrogateSpec(kind=skind, seed=seed, replicate_index=replicate)
    save_series(make_surrogate(series, spec), output, extra={"surrogate": spec.to_dict()})
    console.print(f"[green]Wrote[/green] {output}")


@main.group()
def synth():
    """Synthetic series with known exponents."""
    pass


@synth.command("cascade")
@click.option("--levels", type=int, default=16, show_default=True, help="Series length 2^levels")
@click.option("--p", "p", type=float, default=0.75, show_default=True, help="Cascade weight")
@click.option("--output", "-o", type=click.Path(), required=True)
def synth_cascade(levels, p, output):
    """Deterministic binomial multiplicative cascade."""
    series = binomial_cascade(CascadeParams(levels=levels, p=p))
    save_series(series, output)
    console.print(f"[green]Wrote[/green] {output} ({len(series)} points)")


@synth.command("fgn")
@click.option("--hurst", "-H", "hurst", type=float, required=True, help="Hurst exponent in (0, 1)")
@click.option("--length", type=int, default=2**16, show_default=True, help="Power of two ≥ 1024")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(), required=True)
def synth_fgn(hurst, length, seed, output):
    """Fractional Gaussian noise by circulant embedding."""
    series = fgn(hurst, length, seed)
    save_series(series, output)
    console.print(f"[green]Wrote[/green] {output} ({len(series)} points)")


# ── Pipeline ────────────────────────────────────────────────────────────


@main.command("run")
@click.argument("config_file", type=click.Path())
@click.option("--outdir", type=click.Path(), default=None, help="Override the output directory")
@click.option("--workers", type=int, default=None, help="Override the thread count")
@click.option("--q", "q_spec", default=None, help="Override the q grid")
@click.option("--m", "m", type=int, default=None, help="Override the detrending order")
@click.option("--dt-ms", "dt_ms", type=int, default=None, help="Override the interval length")
def run_cmd(config_file, outdir, workers, q_spec, m, dt_ms):
    """Run the whole pipeline described by a config file."""
    config = PipelineConfig.load(Path(config_file))
    if outdir is not None:
        config.outdir = str(Path(outdir).resolve())
    if workers is not None:
        config.workers = workers
    if q_spec is not None:
        config.q = q_spec
    if m is not None:
        config.m = m
    if dt_ms is not None:
        config.dt_ms = dt_ms

    report = run_pipeline(config)
    render_manifest_summary(
        {
            "pairs": [u.to_dict() for u in report.pairs],
            "cross": [u.to_dict() for u in report.cross],
        },
        console,
    )
    console.print(f"Manifest: {report.manifest_path}")
    if report.exit_code:
        failed = ", ".join(f"{u.name} [{u.failed_stage}]" for u in report.failures)
        _fail(f"stage failure in {failed}", report.exit_code)


@main.command("report")
@click.argument("outdir", type=click.Path())
def report_cmd(outdir):
    """Summarize a results directory."""
    render_report(Path(outdir), console)


if __name__ == "__main__":
    main()
