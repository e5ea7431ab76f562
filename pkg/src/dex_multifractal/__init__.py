"""
dex-multifractal - multifractal analysis of exchange-rate tick data.

From raw trades to h(q), f(α), λ(q) and ρ(q, s), with synthetic series
whose exponents are known in closed form.
"""

__version__ = "0.3.0"

from .errors import AnalysisError, ValidationError
from .models import (
    AggregationReport,
    CascadeParams,
    CcdfCurve,
    Dialect,
    FluctuationSurface,
    HurstCurve,
    LambdaCurve,
    LinFit,
    QGrid,
    RegularSeries,
    RhoSurface,
    ScaleGrid,
    SeriesKind,
    Spectrum,
    StretchedFit,
    SurrogateKind,
    SurrogateSpec,
    TailFit,
    TickRecord,
    TickSeries,
    TickStats,
)

__all__ = [
    "__version__",
    "AnalysisError",
    "ValidationError",
    "AggregationReport",
    "CascadeParams",
    "CcdfCurve",
    "Dialect",
    "FluctuationSurface",
    "HurstCurve",
    "LambdaCurve",
    "LinFit",
    "QGrid",
    "RegularSeries",
    "RhoSurface",
    "ScaleGrid",
    "SeriesKind",
    "Spectrum",
    "StretchedFit",
    "SurrogateKind",
    "SurrogateSpec",
    "TailFit",
    "TickRecord",
    "TickSeries",
    "TickStats",
]
