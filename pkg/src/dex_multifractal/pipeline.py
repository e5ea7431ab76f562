"""
End-to-end analysis pipeline.

For every configured pair this runs, in dependency order:
- ingest / aggregate (tick pairs) or load / generate (series, synthetic)
- acf and ccdf diagnostics with tail fits
- mfdfa: F_ZZ surfaces, h(q), f(α), spectrum metrics
- surrogates: averaged surrogate spectra when requested
- mfcca and rho: volatility-volume cross-correlations (tick pairs) and any
  extra cross entries from the config

Results land in <outdir>/<pair>/<stage>/<name>.{csv,json}; manifest.json
indexes every file together with the config hash. A failing stage marks
its pair FAILED in the manifest and keeps what was already written.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import CrossConfig, PairConfig, PipelineConfig
from .detrend import fluctuation_xy, fluctuation_zz
from .errors import AnalysisError, ValidationError
from .export import (
    ArtifactWriter,
    acf_frame,
    ccdf_frame,
    gap_frame,
    hurst_frame,
    lambda_frame,
    rho_frame,
    spectrum_frame,
    surface_frame,
    write_json,
)
from .ingest import load_pools, tick_stats
from .mfcca import avg_hurst, cross_gap, lambda_exponent, rho_from_surfaces
from .mfdfa import generalized_hurst, singularity_spectrum, spectrum_metrics
from .models import CascadeParams, QGrid, RegularSeries, ScaleGrid, SeriesKind
from .series import absolute, aggregate, align_pair, check_aligned, load_series, normalize
from .stats import acf, ccdf, fit_powerlaw_tail, fit_stretched_exp, hill_tail, tail_threshold
from .surrogates import surrogate_spectrum
from .synth import binomial_cascade, fgn

logger = logging.getLogger("dex-multifractal.pipeline")

MANIFEST_NAME = "manifest.json"
STATUS_OK = "ok"
STATUS_FAILED = "FAILED"
RUNTIME_ERROR_TYPES = ("analysis", "internal")


@dataclass
class UnitResult:
    """Outcome of one pair (or one cross entry)."""

    name: str
    source: str
    status: str = STATUS_OK
    failed_stage: str | None = None
    error: str | None = None
    error_type: str | None = None
    artifacts: list[str] = field(default_factory=list)
    series: dict[str, RegularSeries] = field(default_factory=dict, repr=False)

    @property
    def failed(self) -> bool:
        return self.status == STATUS_FAILED

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "name": self.name,
            "source": self.source,
            "status": self.status,
            "artifacts": self.artifacts,
        }
        if self.failed:
            data["failed_stage"] = self.failed_stage
            data["error"] = self.error
            data["error_type"] = self.error_type
        return data


@dataclass
class PipelineReport:
    """What run_pipeline did; mirrors manifest.json."""

    outdir: Path
    config_hash: str
    pairs: list[UnitResult]
    cross: list[UnitResult]

    @property
    def failures(self) -> list[UnitResult]:
        return [u for u in [*self.pairs, *self.cross] if u.failed]

    @property
    def exit_code(self) -> int:
        """0 on success, 2 if any analysis or internal error, else 1 for validation failures."""
        failures = self.failures
        if not failures:
            return 0
        return 2 if any(u.error_type in RUNTIME_ERROR_TYPES for u in failures) else 1

    @property
    def manifest_path(self) -> Path:
        return self.outdir / MANIFEST_NAME


class _Analysis:
    """Shared analysis settings and the stage implementations."""

    def __init__(self, config: PipelineConfig, outdir: Path, scale_workers: int):
        self.config = config
        self.outdir = outdir
        self.q = config.q_grid()
        self.scale_workers = scale_workers

    # ── helpers ──

    def scales_for(self, series: RegularSeries) -> ScaleGrid:
        return self.config.scales.grid(len(series))

    def _run_stage(self, unit: UnitResult, stage: str, fn: Any, *args: Any) -> Any:
        unit.failed_stage = stage
        logger.debug("stage start unit=%s stage=%s", unit.name, stage)
        result = fn(*args)
        unit.failed_stage = None
        return result

    # ── loading ──

    def load(self, pair: PairConfig, unit: UnitResult, writer: ArtifactWriter) -> None:
        group = pair.pair_id
        if pair.ticks:
            ticks = self._run_stage(
                unit,
                "ingest",
                load_pools,
                [(self.config.resolve(t.path), t.dialect) for t in pair.ticks],
                pair.pair_id,
                self.config.min_volume_usd,
                self.config.dedup,
            )
            writer.json(group, "ticks", "tick_stats", tick_stats(ticks).to_dict())
            returns, volume, report = self._run_stage(
                unit, "aggregate", aggregate, ticks, self.config.dt_ms
            )
            writer.json(group, "ticks", "aggregation", report.to_dict())
            writer.json(group, "series", "log_return", returns.to_dict())
            writer.json(group, "series", "volume", volume.to_dict())
            volatility = self._run_stage(unit, "series", absolute, returns)
            volatility, volume_aligned = self._run_stage(
                unit, "align", align_pair, volatility, volume
            )
            unit.series.update(
                {"log_return": returns, "volatility": volatility, "volume": volume_aligned}
            )
            return

        if pair.series is not None:
            series = self._run_stage(
                unit,
                "ingest",
                load_series,
                self.config.resolve(pair.series),
                pair.kind,
                self.config.dt_ms,
            )
        else:
            series = self._run_stage(unit, "synth", _generate, pair)
            writer.json(group, "series", "synthetic", series.to_dict())
        unit.series["series"] = series
        unit.series[series.kind.value] = series
        if series.kind is SeriesKind.LOG_RETURN:
            unit.series["volatility"] = self._run_stage(unit, "series", absolute, series)

    # ── single-series stages ──

    def diagnostics(self, unit: UnitResult, writer: ArtifactWriter, name: str) -> None:
        series = unit.series[name]
        max_lag = min(self.config.acf_max_lag, len(series) - 1)
        values = self._run_stage(unit, "acf", acf, series, max_lag)
        writer.csv(unit.name, "acf", name, acf_frame(values, series.dt_ms))

        scaled = self._run_stage(unit, "ccdf", normalize, series, False)
        curve = self._run_stage(unit, "ccdf", ccdf, scaled.values)
        writer.csv(unit.name, "ccdf", name, ccdf_frame(curve))
        x_min = tail_threshold(scaled.values, self.config.tail_quantile)
        fits: dict[str, Any] = {"x_min": x_min, "units": "sigma"}
        for key, fit in (
            ("powerlaw", lambda: fit_powerlaw_tail(curve, x_min).to_dict()),
            ("hill", lambda: hill_tail(scaled.values, x_min).to_dict()),
            ("stretched_exp", lambda: fit_stretched_exp(curve).to_dict()),
        ):
            try:
                fits[key] = fit()
            except (AnalysisError, ValidationError) as e:
                logger.warning(
                    "tail fit skipped unit=%s series=%s fit=%s reason=%s", unit.name, name, key, e
                )
                fits[key] = {"error": str(e)}
        writer.json(unit.name, "ccdf", f"{name}_fits", fits)

    def mfdfa(self, unit: UnitResult, writer: ArtifactWriter, name: str) -> None:
        series = unit.series[name]
        scales = self._run_stage(unit, "mfdfa", self.scales_for, series)
        surface = self._run_stage(
            unit, "mfdfa", fluctuation_zz, series, self.q, scales, self.config.m, self.scale_workers
        )
        writer.csv(unit.name, "mfdfa", f"{name}_F", surface_frame(surface))
        writer.json(unit.name, "mfdfa", f"{name}_F", surface.to_dict())
        hurst = self._run_stage(unit, "mfdfa", generalized_hurst, surface, self.config.fit_range)
        spectrum = self._run_stage(unit, "mfdfa", singularity_spectrum, hurst)
        width, asymmetry = self._run_stage(unit, "mfdfa", spectrum_metrics, spectrum)
        writer.csv(unit.name, "mfdfa", f"{name}_hq", hurst_frame(hurst))
        writer.json(unit.name, "mfdfa", f"{name}_hq", hurst.to_dict())
        writer.csv(unit.name, "mfdfa", f"{name}_spectrum", spectrum_frame(spectrum))
        writer.json(
            unit.name,
            "mfdfa",
            f"{name}_metrics",
            {
                "H": hurst.H,
                "width": width,
                "asymmetry": asymmetry,
                "min_r2": hurst.min_r2,
                "fit_range": list(hurst.fit_range),
                "unusable_scales": surface.unusable_scales,
            },
        )
        logger.info(
            "mfdfa done unit=%s series=%s H=%s width=%.4f asymmetry=%.4f",
            unit.name,
            name,
            "n/a" if hurst.H is None else f"{hurst.H:.4f}",
            width,
            asymmetry,
        )

        for kind in self.config.surrogates.kinds:
            averaged = self._run_stage(
                unit,
                "surrogates",
                surrogate_spectrum,
                series,
                kind,
                self.q,
                scales,
                self.config.m,
                self.config.fit_range,
                self.config.surrogates.replicates,
                self.config.surrogates.seed,
                self.scale_workers,
            )
            writer.csv(unit.name, "surrogates", f"{name}_{kind}_spectrum", spectrum_frame(averaged))

    # ── cross stages ──

    def cross_q_grid(self) -> QGrid:
        values = np.concatenate([self.q.values, np.asarray(self.config.rho_q, dtype=np.float64)])
        return QGrid(np.unique(np.round(values, 10)))

    def cross(
        self, unit: UnitResult, writer: ArtifactWriter, x: RegularSeries, y: RegularSeries
    ) -> None:
        self._run_stage(unit, "mfcca", check_aligned, x, y)
        scales = self._run_stage(unit, "mfcca", self.scales_for, x)
        grid = self.cross_q_grid()
        m = self.config.m
        fxy = self._run_stage(
            unit, "mfcca", fluctuation_xy, x, y, grid, scales, m, self.scale_workers
        )
        fxx = self._run_stage(unit, "mfcca", fluctuation_zz, x, grid, scales, m, self.scale_workers)
        fyy = self._run_stage(unit, "mfcca", fluctuation_zz, y, grid, scales, m, self.scale_workers)
        writer.csv(unit.name, "mfcca", "F_xy", surface_frame(fxy))
        writer.json(unit.name, "mfcca", "F_xy", fxy.to_dict())

        for q in self.config.rho_q:
            surface = self._run_stage(unit, "rho", rho_from_surfaces, fxy, fxx, fyy, q)
            writer.csv(unit.name, "rho", f"rho_q{q:g}", rho_frame(surface))
            writer.json(unit.name, "rho", f"rho_q{q:g}", surface.to_dict())

        lam = self._run_stage(unit, "mfcca", lambda_exponent, fxy, self.config.fit_range)
        writer.csv(unit.name, "mfcca", "lambda", lambda_frame(lam))
        writer.json(unit.name, "mfcca", "lambda", lam.to_dict())
        hx = self._run_stage(unit, "mfcca", generalized_hurst, fxx, self.config.fit_range)
        hy = self._run_stage(unit, "mfcca", generalized_hurst, fyy, self.config.fit_range)
        hxy = self._run_stage(unit, "mfcca", avg_hurst, hx, hy)
        writer.csv(unit.name, "mfcca", "h_xy", hurst_frame(hxy))
        q_gap, gap = cross_gap(lam, hxy)
        writer.csv(unit.name, "mfcca", "gap", gap_frame(q_gap, gap))
        logger.info(
            "mfcca done unit=%s lambda_q=%d excluded=%d", unit.name, len(lam), len(lam.excluded)
        )


def _generate(pair: PairConfig) -> RegularSeries:
    spec = pair.synthetic or {}
    if spec.get("kind") == "cascade":
        params = CascadeParams(levels=int(spec.get("levels", 16)), p=float(spec.get("p", 0.75)))
        return binomial_cascade(params)
    return fgn(
        float(spec.get("H", 0.5)), int(spec.get("length", 2**16)), int(spec.get("seed", 0))
    )


def _fail(unit: UnitResult, error: Exception) -> None:
    unit.status = STATUS_FAILED
    unit.failed_stage = unit.failed_stage or "unknown"
    unit.error = str(error) or type(error).__name__
    if isinstance(error, AnalysisError):
        unit.error_type = "analysis"
    elif isinstance(error, ValidationError):
        unit.error_type = "validation"
    else:
        unit.error_type = "internal"
        logger.exception(
            "unexpected error unit=%s stage=%s", unit.name, unit.failed_stage, exc_info=error
        )
        return
    logger.error(
        "stage failed unit=%s stage=%s error=%s", unit.name, unit.failed_stage, unit.error
    )


def _analyze_pair(analysis: _Analysis, pair: PairConfig) -> UnitResult:
    unit = UnitResult(name=pair.pair_id, source=pair.source)
    writer = ArtifactWriter(analysis.outdir)
    try:
        analysis.load(pair, unit, writer)
        if pair.ticks:
            for name in ("volatility", "volume"):
                analysis.diagnostics(unit, writer, name)
            for name in ("log_return", "volume"):
                analysis.mfdfa(unit, writer, name)
            analysis.cross(unit, writer, unit.series["volatility"], unit.series["volume"])
        else:
            name = unit.series["series"].kind.value
            analysis.diagnostics(unit, writer, name)
            analysis.mfdfa(unit, writer, name)
    except Exception as e:
        _fail(unit, e)
    unit.artifacts = writer.artifacts_for(pair.pair_id)
    return unit


def _analyze_cross(
    analysis: _Analysis, entry: CrossConfig, pairs: dict[str, UnitResult]
) -> UnitResult:
    unit = UnitResult(name=entry.label, source="cross")
    writer = ArtifactWriter(analysis.outdir)
    try:
        unit.failed_stage = "lookup"
        sides = []
        for ref in (entry.x, entry.y):
            pair_id, key = CrossConfig.split(ref)
            owner = pairs[pair_id]
            if owner.failed or key not in owner.series:
                raise ValidationError(f"Series {ref!r} is not available")
            sides.append(owner.series[key])
        unit.failed_stage = None
        x, y = analysis._run_stage(unit, "align", align_pair, sides[0], sides[1])
        analysis.cross(unit, writer, x, y)
    except Exception as e:
        _fail(unit, e)
    unit.artifacts = writer.artifacts_for(entry.label)
    return unit


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    """Run every configured analysis and write the manifest.

    Pairs run in parallel when ``workers`` > 1 and there are several pairs;
    a single pair spends its workers on the scale loop instead. Outputs are
    identical either way.
    """
    config.validate()
    outdir = config.output_dir()
    outdir.mkdir(parents=True, exist_ok=True)
    config_hash = config.content_hash()
    pair_workers = min(config.workers, len(config.pairs))
    scale_workers = config.workers if pair_workers <= 1 else 1
    analysis = _Analysis(config, outdir, scale_workers)
    logger.info(
        "pipeline start pairs=%d cross=%d workers=%d outdir=%s hash=%s",
        len(config.pairs),
        len(config.cross),
        config.workers,
        outdir,
        config_hash[:12],
    )

    def analyze(pair: PairConfig) -> UnitResult:
        return _analyze_pair(analysis, pair)

    if pair_workers > 1:
        with ThreadPoolExecutor(max_workers=pair_workers) as pool:
            pairs = list(pool.map(analyze, config.pairs))
    else:
        pairs = [analyze(p) for p in config.pairs]

    by_id = {u.name: u for u in pairs}
    cross = [_analyze_cross(analysis, entry, by_id) for entry in config.cross]

    report = PipelineReport(outdir=outdir, config_hash=config_hash, pairs=pairs, cross=cross)
    write_json(report.manifest_path, build_manifest(config, report))
    logger.info(
        "pipeline done failures=%d manifest=%s", len(report.failures), report.manifest_path
    )
    return report


def build_manifest(config: PipelineConfig, report: PipelineReport) -> dict[str, Any]:
    """Manifest document; free of timestamps and host details so reruns are byte-identical."""
    return {
        "tool": "dex-multifractal",
        "version": __version__,
        "config_hash": report.config_hash,
        "config": config.analysis_dict(),
        "status": STATUS_FAILED if report.failures else STATUS_OK,
        "pairs": [u.to_dict() for u in report.pairs],
        "cross": [u.to_dict() for u in report.cross],
    }
