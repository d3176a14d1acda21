"""Hourly heat-load modelling for district-heated buildings.

Seasonal, time-of-week ARX models fitted per (season, day type) segment,
with ingestion, outlier cleaning, lag and calendar selection, recursive
forecasting, evaluation and a synthetic ground-truth generator.
"""
__version__ = "0.1.0"

from .calendar import SEGMENTS, DayType, HourOfWeek, Season, SegmentKey
from .errors import (
    EmptySegmentError, HeatLoadError, InputError, InsufficientDataError, NumericalError,
    ParseError,
)
from .features import LagSpec, Scenario, build_design_matrix
from .forecast import ForecastRequest, ForecastResult, forecast_recursive
from .regression import FittedModel, fit_ols
from .selection import SelectionConfig, fit_segment

__all__ = [
    "SEGMENTS", "DayType", "HourOfWeek", "Season", "SegmentKey",
    "EmptySegmentError", "HeatLoadError", "InputError", "InsufficientDataError",
    "NumericalError", "ParseError",
    "LagSpec", "Scenario", "build_design_matrix",
    "ForecastRequest", "ForecastResult", "forecast_recursive",
    "FittedModel", "fit_ols", "SelectionConfig", "fit_segment",
]
