"""Threshold-crossing probability for continuous events.

A continuous event resolves Yes when a series crosses a threshold. Given
a point forecast for the resolution date, a logistic map turns signed
threshold distance into a probability. A least-squares trend forecaster
is included so the pipeline runs without an external model; any point
forecast can be supplied in its place.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SHARPNESS_K = 1.5
SCALE_FLOOR = 1e-9


class ThresholdDirection(enum.Enum):
    AT_LEAST = "at_least"
    AT_MOST = "at_most"


@dataclass(frozen=True)
class ThresholdSpec:
    """Resolution rule: the series ends at least (or at most) `t`."""

    t: float
    direction: ThresholdDirection

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ConfigError("threshold must be finite")


@dataclass(frozen=True)
class PointForecast:
    x_hat: float
    scale: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.x_hat):
            raise ConfigError("point forecast must be finite")
        if not (self.scale > 0):
            raise ConfigError("forecast scale must be positive")


def sigmoid(z: float) -> float:
    # Split on sign so exp never overflows.
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def calibrate(forecast: PointForecast, threshold: ThresholdSpec,
              k: float = SHARPNESS_K) -> float:
    """P(threshold crossed) from the scaled signed distance to it.

    The AtMost branch is the AtLeast branch with the distance negated,
    which by logistic symmetry equals one minus the AtLeast probability,
    so one expression covers both directions.
    """
    signed = (forecast.x_hat - threshold.t) / forecast.scale
    if threshold.direction is ThresholdDirection.AT_MOST:
        signed = -signed
    return sigmoid(k * signed)


def baseline_forecast(series, horizon: int) -> PointForecast:
    """Least-squares linear trend pushed `horizon` steps past the series end.

    Scale is the sample standard deviation so calibration sharpness is
    unit-free; a floor keeps constant series usable.
    """
    values = np.asarray(series, dtype=float)
    if values.ndim != 1 or values.size < 3:
        raise ConfigError("baseline forecast needs at least 3 observations")
    if not np.all(np.isfinite(values)):
        raise ConfigError("series contains non-finite values")
    if horizon < 0:
        raise ConfigError("horizon must be nonnegative")
    x = np.arange(values.size, dtype=float)
    slope, intercept = np.polyfit(x, values, 1)
    x_hat = float(intercept + slope * (values.size - 1 + horizon))
    scale = max(float(values.std(ddof=1)), SCALE_FLOOR)
    return PointForecast(x_hat=x_hat, scale=scale)
