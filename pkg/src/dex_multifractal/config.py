"""
Pipeline configuration for dex-multifractal.

A config is a single document (JSON, or YAML for hand-written files)
listing the pairs to analyze and the analysis parameters. Relative paths
are resolved against the directory of the config file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ValidationError
from .export import sanitize_name
from .fitting import dyadic_scale_grid, log_scale_grid
from .models import CascadeParams, Dialect, QGrid, ScaleGrid, SeriesKind, SurrogateKind

SYNTHETIC_KINDS = ("cascade", "fgn")
SCALE_SPACINGS = ("log", "dyadic")
RUNTIME_FIELDS = ("workers", "outdir")


@dataclass
class TickSource:
    """One tick file of a pair; several files are merged in order."""

    path: str
    dialect: str = "generic"

    @classmethod
    def from_dict(cls, data: dict[str, Any] | str) -> TickSource:
        if isinstance(data, str):
            return cls(path=data)
        return cls(path=data["path"], dialect=data.get("dialect", "generic"))

    def to_dict(self) -> dict[str, Any]:
        return {"path": self.path, "dialect": self.dialect}


@dataclass
class PairConfig:
    """One analysis unit: ticks to aggregate, a ready series, or a generator."""

    pair_id: str
    ticks: list[TickSource] = field(default_factory=list)
    series: str | None = None
    kind: str | None = None
    synthetic: dict[str, Any] | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PairConfig:
        if "pair_id" not in data:
            raise ValidationError(f"Pair entry without pair_id: {data}")
        return cls(
            pair_id=str(data["pair_id"]),
            ticks=[TickSource.from_dict(t) for t in data.get("ticks", [])],
            series=data.get("series"),
            kind=data.get("kind"),
            synthetic=data.get("synthetic"),
        )

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"pair_id": self.pair_id}
        if self.ticks:
            data["ticks"] = [t.to_dict() for t in self.ticks]
        if self.series is not None:
            data["series"] = self.series
        if self.kind is not None:
            data["kind"] = self.kind
        if self.synthetic is not None:
            data["synthetic"] = self.synthetic
        return data

    @property
    def source(self) -> str:
        if self.ticks:
            return "ticks"
        if self.series is not None:
            return "series"
        return "synthetic"


@dataclass
class CrossConfig:
    """An extra MFCCA pair, each side written ``<pair_id>:<series kind>``."""

    x: str
    y: str

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CrossConfig:
        try:
            return cls(x=str(data["x"]), y=str(data["y"]))
        except KeyError as e:
            raise ValidationError(f"Cross entry needs x and y: {data}") from e

    def to_dict(self) -> dict[str, Any]:
        return {"x": self.x, "y": self.y}

    @staticmethod
    def split(ref: str) -> tuple[str, str]:
        pair_id, sep, kind = ref.rpartition(":")
        if not sep or not pair_id:
            raise ValidationError(f"Series reference must look like '<pair_id>:<kind>': {ref!r}")
        return pair_id, kind

    @property
    def label(self) -> str:
        return f"{self.x}~{self.y}"


@dataclass
class ScaleConfig:
    """Scale grid, log-spaced or dyadic; a null s_max means T/4."""

    s_min: int = 16
    s_max: int | None = None
    count: int = 40
    spacing: str = "log"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScaleConfig:
        return cls(
            s_min=int(data.get("s_min", 16)),
            s_max=None if data.get("s_max") is None else int(data["s_max"]),
            count=int(data.get("count", 40)),
            spacing=str(data.get("spacing", "log")),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "s_min": self.s_min,
            "s_max": self.s_max,
            "count": self.count,
            "spacing": self.spacing,
        }

    def grid(self, length: int) -> ScaleGrid:
        s_max = self.s_max if self.s_max is not None else length // 4
        if s_max > length:
            raise ValidationError(f"s_max {s_max} exceeds series length {length}")
        if self.spacing == "dyadic":
            return dyadic_scale_grid(self.s_min, s_max)
        return log_scale_grid(self.s_min, s_max, self.count)


@dataclass
class SurrogateConfig:
    """Surrogate spectra to compute next to each single-series spectrum."""

    kinds: list[str] = field(default_factory=list)
    replicates: int = 10
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SurrogateConfig:
        return cls(
            kinds=list(data.get("kinds", [])),
            replicates=int(data.get("replicates", 10)),
            seed=int(data.get("seed", 0)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {"kinds": list(self.kinds), "replicates": self.replicates, "seed": self.seed}


@dataclass
class PipelineConfig:
    """Everything run_pipeline needs."""

    pairs: list[PairConfig] = field(default_factory=list)
    cross: list[CrossConfig] = field(default_factory=list)
    min_volume_usd: float = 0.01
    dedup: bool = False
    dt_ms: int = 300_000
    q: str = "-4:4:0.2"
    scales: ScaleConfig = field(default_factory=ScaleConfig)
    m: int = 2
    fit_range: list[float] | None = None
    acf_max_lag: int = 500
    tail_quantile: float = 0.99
    rho_q: list[float] = field(default_factory=lambda: [2.0])
    surrogates: SurrogateConfig = field(default_factory=SurrogateConfig)
    workers: int = 1
    outdir: str = "results"
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: Path | None = None) -> PipelineConfig:
        """Create PipelineConfig from dictionary, applying defaults for missing fields."""
        if not isinstance(data, dict):
            raise ValidationError("Config document must be a mapping")
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"Unknown config field(s): {', '.join(unknown)}")
        fit_range = data.get("fit_range")
        return cls(
            pairs=[PairConfig.from_dict(p) for p in data.get("pairs", [])],
            cross=[CrossConfig.from_dict(c) for c in data.get("cross", [])],
            min_volume_usd=float(data.get("min_volume_usd", 0.01)),
            dedup=bool(data.get("dedup", False)),
            dt_ms=int(data.get("dt_ms", 300_000)),
            q=str(data.get("q", "-4:4:0.2")),
            scales=ScaleConfig.from_dict(data.get("scales") or {}),
            m=int(data.get("m", 2)),
            fit_range=None if fit_range is None else [float(v) for v in fit_range],
            acf_max_lag=int(data.get("acf_max_lag", 500)),
            tail_quantile=float(data.get("tail_quantile", 0.99)),
            rho_q=[float(v) for v in data.get("rho_q", [2.0])],
            surrogates=SurrogateConfig.from_dict(data.get("surrogates") or {}),
            workers=int(data.get("workers", 1)),
            outdir=str(data.get("outdir", "results")),
            base_dir=base_dir,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "pairs": [p.to_dict() for p in self.pairs],
            "cross": [c.to_dict() for c in self.cross],
            "min_volume_usd": self.min_volume_usd,
            "dedup": self.dedup,
            "dt_ms": self.dt_ms,
            "q": self.q,
            "scales": self.scales.to_dict(),
            "m": self.m,
            "fit_range": self.fit_range,
            "acf_max_lag": self.acf_max_lag,
            "tail_quantile": self.tail_quantile,
            "rho_q": list(self.rho_q),
            "surrogates": self.surrogates.to_dict(),
            "workers": self.workers,
            "outdir": self.outdir,
        }

    @classmethod
    def load(cls, path: Path) -> PipelineConfig:
        """Load config from a JSON or YAML file."""
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"Config file not found: {path}")
        text = path.read_text()
        try:
            data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ValidationError(f"Cannot parse config {path}: {e}") from e
        return cls.from_dict(data or {}, base_dir=path.resolve().parent)

    def save(self, path: Path) -> None:
        """Save config as JSON (``.json``) or YAML."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == ".json":
            path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        else:
            with open(path, "w") as f:
                yaml.dump(self.to_dict(), f, default_flow_style=False, sort_keys=True)

    def analysis_dict(self) -> dict[str, Any]:
        """The fields that determine results (no thread count, no output location)."""
        data = self.to_dict()
        for runtime_field in RUNTIME_FIELDS:
            data.pop(runtime_field)
        return data

    def content_hash(self) -> str:
        """SHA-256 of the canonical JSON form of the analysis fields."""
        canonical = json.dumps(self.analysis_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def resolve(self, path: str) -> Path:
        candidate = Path(path)
        if candidate.is_absolute() or self.base_dir is None:
            return candidate
        return self.base_dir / candidate

    def q_grid(self) -> QGrid:
        return QGrid.from_spec(self.q)

    def output_dir(self) -> Path:
        return self.resolve(self.outdir)

    def validate(self) -> None:
        """Check parameter bounds and that every referenced file exists."""
        problems: list[str] = []
        if not self.pairs:
            problems.append("no pairs configured")
        seen: set[str] = set()
        for pair in self.pairs:
            if pair.pair_id in seen:
                problems.append(f"duplicate pair_id {pair.pair_id!r}")
            seen.add(pair.pair_id)
            sources = [bool(pair.ticks), pair.series is not None, pair.synthetic is not None]
            if sum(sources) != 1:
                problems.append(
                    f"pair {pair.pair_id!r} needs exactly one of ticks, series, synthetic"
                )
                continue
            for tick in pair.ticks:
                if not self.resolve(tick.path).exists():
                    problems.append(f"tick file not found: {tick.path}")
                try:
                    Dialect.from_string(tick.dialect)
                except ValidationError as e:
                    problems.append(str(e))
            if pair.series is not None and not self.resolve(pair.series).exists():
                problems.append(f"series file not found: {pair.series}")
            if pair.kind is not None:
                try:
                    SeriesKind.from_string(pair.kind)
                except ValidationError as e:
                    problems.append(str(e))
            if pair.synthetic is not None:
                problems.extend(_synthetic_problems(pair))
        for cross in self.cross:
            for ref in (cross.x, cross.y):
                try:
                    pair_id, _ = CrossConfig.split(ref)
                except ValidationError as e:
                    problems.append(str(e))
                    continue
                if pair_id not in seen:
                    problems.append(f"cross entry refers to unknown pair {pair_id!r}")
        problems.extend(_output_collisions(self))
        if self.scales.spacing not in SCALE_SPACINGS:
            problems.append(f"scales.spacing must be one of {SCALE_SPACINGS}")
        for kind in self.surrogates.kinds:
            try:
                SurrogateKind.from_string(kind)
            except ValidationError as e:
                problems.append(str(e))
        if self.surrogates.replicates < 1:
            problems.append("surrogates.replicates must be positive")
        if self.min_volume_usd < 0:
            problems.append("min_volume_usd must be non-negative")
        if self.dt_ms <= 0:
            problems.append("dt_ms must be positive")
        if not 1 <= self.m <= 4:
            problems.append("m must lie in [1, 4]")
        if self.acf_max_lag < 1:
            problems.append("acf_max_lag must be at least 1")
        if not 0 < self.tail_quantile < 1:
            problems.append("tail_quantile must lie in (0, 1)")
        if self.workers < 1:
            problems.append("workers must be at least 1")
        if self.fit_range is not None and (
            len(self.fit_range) != 2 or not 0 < self.fit_range[0] < self.fit_range[1]
        ):
            problems.append("fit_range must be [s1, s2] with 0 < s1 < s2")
        try:
            self.q_grid()
        except ValidationError as e:
            problems.append(str(e))
        if problems:
            raise ValidationError("Invalid config: " + "; ".join(problems))


def _output_collisions(config: PipelineConfig) -> list[str]:
    """Units whose names sanitize to the same output directory."""
    owners: dict[str, str] = {}
    problems: list[str] = []
    names = [p.pair_id for p in config.pairs] + [c.label for c in config.cross]
    for name in dict.fromkeys(names):
        folder = sanitize_name(name)
        if folder in owners:
            problems.append(
                f"{name!r} and {owners[folder]!r} share output directory {folder!r}"
            )
        else:
            owners[folder] = name
    return problems


def _synthetic_problems(pair: PairConfig) -> list[str]:
    spec = pair.synthetic or {}
    kind = spec.get("kind")
    if kind not in SYNTHETIC_KINDS:
        return [f"pair {pair.pair_id!r}: synthetic kind must be one of {SYNTHETIC_KINDS}"]
    try:
        if kind == "cascade":
            CascadeParams(levels=int(spec.get("levels", 16)), p=float(spec.get("p", 0.75)))
        elif not 0 < float(spec.get("H", 0.5)) < 1:
            return [f"pair {pair.pair_id!r}: fgn H must lie in (0, 1)"]
    except (ValidationError, TypeError, ValueError) as e:
        return [f"pair {pair.pair_id!r}: {e}"]
    return []
