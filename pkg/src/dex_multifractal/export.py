"""
Export functionality for dex-multifractal.

Provides:
- Tables (pandas DataFrames) for every result type, ready for CSV
- Deterministic JSON and CSV writers
- ArtifactWriter, which lays files out as <outdir>/<pair>/<stage>/<name>.<ext>
  and remembers every file it wrote for the manifest
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .models import (
    CcdfCurve,
    FluctuationSurface,
    HurstCurve,
    LambdaCurve,
    RhoSurface,
    Spectrum,
)

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]+")


def sanitize_name(name: str) -> str:
    """Make a pair id or series name usable as a path component."""
    cleaned = _UNSAFE.sub("_", name).strip("._")
    return cleaned or "unnamed"


def _jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dumps(data: Any) -> str:
    """Stable JSON text: sorted keys, two-space indent, NaN as null."""
    return json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data))
    return path


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    return path


# ── Tables ──────────────────────────────────────────────────────────────


def acf_frame(values: np.ndarray, dt_ms: int) -> pd.DataFrame:
    """ACF with both the lag in samples and the lag in seconds."""
    lags = np.arange(values.size)
    return pd.DataFrame({"lag": lags, "tau_s": lags * dt_ms / 1000.0, "acf": values})


def ccdf_frame(curve: CcdfCurve) -> pd.DataFrame:
    return pd.DataFrame({"x": curve.x, "p": curve.p})


def histogram_frame(centers: np.ndarray, density: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"x": centers, "density": density})


def surface_frame(surface: FluctuationSurface) -> pd.DataFrame:
    """Long form ``q,s,F``, q-major."""
    q = np.repeat(surface.q_grid.values, surface.scales.count)
    s = np.tile(np.asarray(surface.scales.scales, dtype=np.int64), len(surface.q_grid))
    return pd.DataFrame({"q": q, "s": s, "F": surface.F.ravel()})


def hurst_frame(curve: HurstCurve) -> pd.DataFrame:
    return pd.DataFrame({"q": curve.q, "h": curve.h, "stderr": curve.stderr, "r2": curve.r2})


def spectrum_frame(spec: Spectrum) -> pd.DataFrame:
    return pd.DataFrame({"q": spec.q, "alpha": spec.alpha, "f": spec.f_alpha})


def lambda_frame(curve: LambdaCurve) -> pd.DataFrame:
    return pd.DataFrame({"q": curve.q, "lambda": curve.lam, "stderr": curve.stderr})


def rho_frame(surface: RhoSurface) -> pd.DataFrame:
    scales = np.asarray(surface.scales.scales, dtype=np.int64)
    return pd.DataFrame({"s": scales, "rho": surface.rho})


def gap_frame(q: np.ndarray, gap: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"q": q, "gap": gap})


# ── Artifact layout ─────────────────────────────────────────────────────


class ArtifactWriter:
    """Writes result files under one output root and records their paths."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.written: list[str] = []

    def path(self, group: str, stage: str, name: str, ext: str) -> Path:
        return self.root / sanitize_name(group) / stage / f"{sanitize_name(name)}.{ext}"

    def _record(self, path: Path) -> Path:
        rel = path.relative_to(self.root).as_posix()
        if rel not in self.written:
            self.written.append(rel)
        return path

    def json(self, group: str, stage: str, name: str, data: Any) -> Path:
        return self._record(write_json(self.path(group, stage, name, "json"), data))

    def csv(self, group: str, stage: str, name: str, frame: pd.DataFrame) -> Path:
        return self._record(write_csv(self.path(group, stage, name, "csv"), frame))

    def artifacts_for(self, group: str) -> list[str]:
        prefix = f"{sanitize_name(group)}/"
        return sorted(p for p in self.written if p.startswith(prefix))
