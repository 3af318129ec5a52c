"""Channel calibration: fit signal speed and transmission error from RTT samples.

A probe's one-way travel time is half its measured round trip.  Over a set
of manually measured (time, distance) pairs the channel is modelled as a
line ``S = V*T + C``: V is the signal speed in m/s (regression slope) and C
the transmission error in meters (intercept, absorbing systematic delay).
The fit is the classic least-squares slope/intercept computed through
population (divide-by-N) means of deviations:

    M_T  = mean(T_i)            M_S   = mean(S_i)
    MS_T = mean((T_i - M_T)^2)  MS_ST = mean((T_i - M_T)(S_i - M_S))
    V    = MS_ST / MS_T         C     = M_S - M_T * V

At least five samples are required, with at least two distinct times.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import TrackingError

MIN_SAMPLES = 5

CSV_HEADER = ("distance_m", "total_time_s")


class InvalidSample(TrackingError):
    """A sample has a non-positive time or a negative/non-finite distance."""


class InsufficientSamples(TrackingError):
    """Fewer than :data:`MIN_SAMPLES` distance-time pairs were provided."""


class DegenerateTimes(TrackingError):
    """All sample times are equal; the slope is undefined."""


class CalibrationFormatError(TrackingError):
    """A calibration CSV file is malformed."""


@dataclass(frozen=True)
class RttSample:
    """One measurement: round-trip total (s) against the measured distance (m)."""

    total_time_s: float
    distance_m: float

    def __post_init__(self) -> None:
        if not (isinstance(self.total_time_s, (int, float)) and math.isfinite(self.total_time_s)) or self.total_time_s <= 0:
            raise InvalidSample(f"total time must be finite and > 0, got {self.total_time_s!r}")
        if not (isinstance(self.distance_m, (int, float)) and math.isfinite(self.distance_m)) or self.distance_m < 0:
            raise InvalidSample(f"distance must be finite and >= 0, got {self.distance_m!r}")


def half_time(sample: RttSample) -> float:
    """One-way travel time: half the round-trip total."""
    if sample.total_time_s <= 0:
        raise InvalidSample(f"total time must be > 0, got {sample.total_time_s!r}")
    return sample.total_time_s / 2.0


@dataclass(frozen=True)
class CalibrationSet:
    """An ordered batch of RTT samples ready for fitting."""

    samples: tuple[RttSample, ...]

    def __len__(self) -> int:
        return len(self.samples)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "CalibrationSet":
        """Build from (distance_m, total_time_s) pairs, one sample each."""
        return cls(tuple(RttSample(total_time_s=t, distance_m=s) for s, t in pairs))

    @classmethod
    def from_repeated_times(
        cls, groups: Iterable[tuple[float, Sequence[float]]]
    ) -> "CalibrationSet":
        """Build from (distance_m, [total_time_s, ...]) groups.

        Repeated round-trip measurements at the same measured distance are
        averaged into a single sample before the half-time is taken.
        """
        samples = []
        for distance, times in groups:
            times = list(times)
            if not times:
                raise InvalidSample(f"no times recorded for distance {distance!r}")
            for t in times:
                RttSample(total_time_s=t, distance_m=distance)  # validate each draw
            samples.append(RttSample(total_time_s=sum(times) / len(times), distance_m=distance))
        return cls(tuple(samples))

    def half_times(self) -> np.ndarray:
        return np.array([half_time(s) for s in self.samples], dtype=float)

    def distances(self) -> np.ndarray:
        return np.array([s.distance_m for s in self.samples], dtype=float)


@dataclass(frozen=True)
class ChannelParams:
    """Fitted channel: speed V (m/s), error C (m), plus fit diagnostics."""

    speed_mps: float
    error_m: float
    mean_time_s: float
    mean_distance_m: float
    time_variance_s2: float
    time_distance_cov: float
    residual_rms_m: float
    n_samples: int


def fit(cal: CalibrationSet) -> ChannelParams:
    """Least-squares fit of (V, C) from a calibration set.

    Raises :class:`InsufficientSamples` below five samples and
    :class:`DegenerateTimes` when every half-time is identical.
    """
    n = len(cal)
    if n < MIN_SAMPLES:
        raise InsufficientSamples(
            f"calibration needs at least {MIN_SAMPLES} distance-time pairs, got {n}"
        )
    t = cal.half_times()
    s = cal.distances()
    mean_t = t.sum() / n
    mean_s = s.sum() / n
    dev_t = t - mean_t
    dev_s = s - mean_s
    ms_t = float((dev_t**2).sum() / n)
    ms_st = float((dev_t * dev_s).sum() / n)
    if ms_t == 0.0:
        raise DegenerateTimes("all sample times are equal; signal speed is undefined")
    speed = ms_st / ms_t
    error = float(mean_s - mean_t * speed)
    residuals = s - (speed * t + error)
    rms = float(np.sqrt((residuals**2).sum() / n))
    return ChannelParams(
        speed_mps=float(speed),
        error_m=error,
        mean_time_s=float(mean_t),
        mean_distance_m=float(mean_s),
        time_variance_s2=ms_t,
        time_distance_cov=ms_st,
        residual_rms_m=rms,
        n_samples=n,
    )


class DistanceEstimate(NamedTuple):
    meters: float
    clamped: bool


def distance_from_time(params: ChannelParams, total_time_s: float) -> DistanceEstimate:
    """Convert a round-trip total into a distance: ``V * (t/2) + C``.

    Negative predictions (possible for short ranges when C < 0) are clamped
    to zero with the ``clamped`` flag raised rather than treated as fatal.
    """
    if not math.isfinite(total_time_s) or total_time_s <= 0:
        raise InvalidSample(f"total time must be finite and > 0, got {total_time_s!r}")
    raw = params.speed_mps * (total_time_s / 2.0) + params.error_m
    if raw < 0.0:
        return DistanceEstimate(0.0, True)
    return DistanceEstimate(raw, False)


def load_calibration_csv(path: str | Path) -> CalibrationSet:
    """Read samples from a CSV file with the required ``distance_m,total_time_s`` header."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CalibrationFormatError(f"{path}: empty file, header row required") from None
        if tuple(cell.strip() for cell in header) != CSV_HEADER:
            raise CalibrationFormatError(
                f"{path}: expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}"
            )
        pairs = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise CalibrationFormatError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                pairs.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise CalibrationFormatError(f"{path}:{lineno}: {exc}") from exc
    return CalibrationSet.from_pairs(pairs)


def save_calibration_csv(path: str | Path, cal: CalibrationSet) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for sample in cal.samples:
            writer.writerow([repr(sample.distance_m), repr(sample.total_time_s)])


def export_params(params: ChannelParams) -> str:
    """Structured-text document for the fitted channel (JSON, stable keys)."""
    return json.dumps(
        {
            "speed_mps": params.speed_mps,
            "error_m": params.error_m,
            "residual_rms_m": params.residual_rms_m,
            "n_samples": params.n_samples,
        },
        sort_keys=True,
    )
