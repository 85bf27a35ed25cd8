"""Steady-state manifolds of open quantum systems from one known steady state."""

__version__ = "0.1.0"

from .errors import InputError, NumericalError, SSMError, StageError  # noqa: E402
from .model import ChannelSpec, DensityMatrix  # noqa: E402
from .pipeline import AnalysisRequest, AnalysisReport, analyze, builtin_example, run_analysis  # noqa: E402

__all__ = [
    "AnalysisReport",
    "AnalysisRequest",
    "ChannelSpec",
    "DensityMatrix",
    "InputError",
    "NumericalError",
    "SSMError",
    "StageError",
    "analyze",
    "builtin_example",
    "run_analysis",
]
