"""
Terminal rendering using the rich library.

Summaries of single analyses and of a whole results directory.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .errors import ValidationError
from .models import HurstCurve, LambdaCurve, RhoSurface, TickStats

STATUS_COLORS = {
    "ok": "green",
    "FAILED": "red",
}


def _fmt(value: Any, digits: int = 4) -> str:
    if value is None:
        return "[dim]n/a[/dim]"
    if isinstance(value, float):
        if not math.isfinite(value):
            return "[dim]n/a[/dim]"
        return f"{value:.{digits}f}"
    return str(value)


def render_tick_stats(pair_id: str, stats: TickStats, console: Console | None = None) -> None:
    """One-row table of N, ⟨δt⟩, ⟨V⟩ and V_max."""
    if console is None:
        console = Console()
    table = Table(title=f"Trades: {pair_id}", box=box.ROUNDED, header_style="bold")
    table.add_column("N", justify="right")
    table.add_column("⟨δt⟩ [s]", justify="right")
    table.add_column("⟨V⟩ [USD]", justify="right")
    table.add_column("V_max [USD]", justify="right")
    table.add_row(
        f"{stats.n:,}",
        _fmt(stats.mean_interval_s, 2),
        _fmt(stats.mean_volume_usd, 2),
        _fmt(stats.max_volume_usd, 2),
    )
    console.print(table)


def render_hurst(
    curve: HurstCurve,
    title: str = "Generalized Hurst exponents",
    metrics: tuple[float, float] | None = None,
    console: Console | None = None,
    q_values: tuple[float, ...] = (-4.0, -2.0, 0.0, 2.0, 4.0),
) -> None:
    """h(q) at a few representative q, plus spectrum width and asymmetry."""
    if console is None:
        console = Console()
    assert curve.r2 is not None
    table = Table(title=title, box=box.ROUNDED, header_style="bold")
    table.add_column("q", justify="right")
    table.add_column("h(q)", justify="right")
    table.add_column("stderr", justify="right")
    table.add_column("R²", justify="right")
    for q in q_values:
        try:
            h = curve.at(q)
        except ValidationError:
            continue
        i = int(abs(curve.q - q).argmin())
        table.add_row(f"{q:g}", _fmt(h), _fmt(float(curve.stderr[i])), _fmt(float(curve.r2[i])))
    console.print(table)

    lines = [f"H = h(2): [bold]{_fmt(curve.H)}[/bold]"]
    lines.append(f"fit range: {curve.fit_range[0]:.0f} ≤ s ≤ {curve.fit_range[1]:.0f}")
    if curve.min_r2 < 0.98:
        lines.append(f"[yellow]weak scaling: min R² = {curve.min_r2:.3f}[/yellow]")
    if metrics is not None:
        width, asymmetry = metrics
        lines.append(f"Δα = {_fmt(width)}   A_α = {_fmt(asymmetry)}")
    console.print("\n".join(lines))


def render_lambda(curve: LambdaCurve, console: Console | None = None) -> None:
    if console is None:
        console = Console()
    table = Table(title="Cross-correlation exponents λ(q)", box=box.ROUNDED, header_style="bold")
    table.add_column("q", justify="right")
    table.add_column("λ(q)", justify="right")
    table.add_column("stderr", justify="right")
    for q, lam, err in zip(curve.q, curve.lam, curve.stderr):
        table.add_row(f"{q:g}", _fmt(float(lam)), _fmt(float(err)))
    console.print(table)
    if curve.excluded:
        excluded = ", ".join(f"{q:g}" for q in curve.excluded)
        console.print(f"[yellow]excluded (no uniform sign): q = {excluded}[/yellow]")


def render_rho(surfaces: list[RhoSurface], console: Console | None = None) -> None:
    """ρ(q, s) with one column per q."""
    if console is None:
        console = Console()
    if not surfaces:
        return
    table = Table(title="Detrended cross-correlation ρ(q, s)", box=box.ROUNDED, header_style="bold")
    table.add_column("s", justify="right")
    for surface in surfaces:
        table.add_column(f"q={surface.q:g}", justify="right")
    for j, s in enumerate(surfaces[0].scales.scales):
        table.add_row(str(s), *[_fmt(float(surface.rho[j]), 3) for surface in surfaces])
    console.print(table)


# ── Results directories ─────────────────────────────────────────────────


def _load_json(path: Path) -> dict[str, Any] | None:
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None


def render_manifest_summary(manifest: dict[str, Any], console: Console | None = None) -> None:
    """Status of every pair and cross entry."""
    if console is None:
        console = Console()
    table = Table(box=box.ROUNDED, header_style="bold", expand=False)
    table.add_column("Unit")
    table.add_column("Source")
    table.add_column("Status")
    table.add_column("Files", justify="right")
    table.add_column("Detail")
    for unit in [*manifest.get("pairs", []), *manifest.get("cross", [])]:
        color = STATUS_COLORS.get(unit["status"], "white")
        detail = ""
        if unit["status"] != "ok":
            detail = f"{unit.get('failed_stage')}: {unit.get('error')}"
        table.add_row(
            unit["name"],
            unit["source"],
            f"[{color}]{unit['status']}[/{color}]",
            str(len(unit.get("artifacts", []))),
            detail,
        )
    console.print(table)


def render_report(outdir: Path, console: Console | None = None) -> None:
    """Summarize a results directory written by run_pipeline."""
    if console is None:
        console = Console()
    manifest = _load_json(outdir / "manifest.json")
    if manifest is None:
        raise ValidationError(f"No readable manifest.json in {outdir}")

    console.print()
    console.print(
        Panel(
            f"[bold]dex-multifractal results[/bold]  {outdir}\n"
            f"[dim]config {manifest.get('config_hash', '')[:16]}  "
            f"version {manifest.get('version', '?')}[/dim]",
            border_style="cyan",
        )
    )
    render_manifest_summary(manifest, console)

    spectra = Table(title="Spectra", box=box.ROUNDED, header_style="bold")
    spectra.add_column("Unit")
    spectra.add_column("Series")
    spectra.add_column("H", justify="right")
    spectra.add_column("Δα", justify="right")
    spectra.add_column("A_α", justify="right")
    spectra.add_column("min R²", justify="right")
    cross = Table(title="Cross-correlations", box=box.ROUNDED, header_style="bold")
    cross.add_column("Unit")
    cross.add_column("λ(2)", justify="right")
    cross.add_column("ρ(2, s_min)", justify="right")
    cross.add_column("ρ(2, s_max)", justify="right")
    cross.add_column("excluded q", justify="right")

    for unit in [*manifest.get("pairs", []), *manifest.get("cross", [])]:
        for rel in unit.get("artifacts", []):
            path = outdir / rel
            if rel.endswith("_metrics.json"):
                metrics = _load_json(path) or {}
                spectra.add_row(
                    unit["name"],
                    path.stem.removesuffix("_metrics"),
                    _fmt(metrics.get("H")),
                    _fmt(metrics.get("width")),
                    _fmt(metrics.get("asymmetry")),
                    _fmt(metrics.get("min_r2")),
                )
            elif rel.endswith("mfcca/lambda.json"):
                lam = _load_json(path) or {}
                q = lam.get("q", [])
                lam2 = lam["lambda"][q.index(2.0)] if 2.0 in q else None
                rho = _load_json(path.parent.parent / "rho" / "rho_q2.json") or {}
                values = rho.get("rho") or [None]
                cross.add_row(
                    unit["name"],
                    _fmt(lam2),
                    _fmt(values[0], 3),
                    _fmt(values[-1], 3),
                    str(len(lam.get("excluded", {}))),
                )
    if spectra.row_count:
        console.print(spectra)
    if cross.row_count:
        console.print(cross)
    console.print()
