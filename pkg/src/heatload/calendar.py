"""Season, day-type and hour-of-week semantics on naive hourly timestamps.

Timestamps are naive local clock time. Scalars may be ``datetime.datetime``
or ``numpy.datetime64``; arrays are ``datetime64[h]``.
"""
from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InputError

DAY_NAMES = ("MON", "TUE", "WED", "THU", "FRI", "SAT", "SUN")
HOURS_PER_WEEK = 168

_LABEL_RE = re.compile(r"^(MON|TUE|WED|THU|FRI|SAT|SUN)_(\d{1,2})h$")
_TS_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}$")


class Season(str, Enum):
    WINTER = "winter"
    SHOULDER = "shoulder"
    SUMMER = "summer"


class DayType(str, Enum):
    WORKDAY = "workday"
    WEEKEND = "weekend"


_SEASON_BY_MONTH = {
    12: Season.WINTER, 1: Season.WINTER, 2: Season.WINTER,
    3: Season.SHOULDER, 4: Season.SHOULDER, 5: Season.SHOULDER,
    9: Season.SHOULDER, 10: Season.SHOULDER, 11: Season.SHOULDER,
    6: Season.SUMMER, 7: Season.SUMMER, 8: Season.SUMMER,
}
# code per month index 0..12 (0 unused): 0 winter, 1 shoulder, 2 summer
_SEASON_CODE = np.array([-1, 0, 0, 1, 1, 1, 2, 2, 2, 1, 1, 1, 0], dtype=np.int8)
_SEASON_FROM_CODE = (Season.WINTER, Season.SHOULDER, Season.SUMMER)


@dataclass(frozen=True)
class SegmentKey:
    """One of the four modelled (season, day-type) cells."""

    season: Season
    daytype: DayType

    def __post_init__(self):
        if Season(self.season) is Season.SUMMER:
            raise InputError("summer is not a modelled season")
        object.__setattr__(self, "season", Season(self.season))
        object.__setattr__(self, "daytype", DayType(self.daytype))

    @property
    def slug(self) -> str:
        return f"{self.season.value}-{self.daytype.value}"

    @classmethod
    def parse(cls, text: str) -> "SegmentKey":
        try:
            season, daytype = text.strip().lower().split("-")
            return cls(Season(season), DayType(daytype))
        except (ValueError, InputError):
            raise InputError(f"unknown segment {text!r}; expected e.g. 'winter-workday'") from None

    def __str__(self):
        return self.slug


SEGMENTS = (
    SegmentKey(Season.WINTER, DayType.WORKDAY),
    SegmentKey(Season.WINTER, DayType.WEEKEND),
    SegmentKey(Season.SHOULDER, DayType.WORKDAY),
    SegmentKey(Season.SHOULDER, DayType.WEEKEND),
)


@dataclass(frozen=True, order=True)
class HourOfWeek:
    """Hour slot within a Monday-based week, ``index = 24 * dow + hour``."""

    index: int

    def __post_init__(self):
        if not 0 <= int(self.index) < HOURS_PER_WEEK:
            raise InputError(f"hour-of-week index {self.index} outside 0..167")
        object.__setattr__(self, "index", int(self.index))

    @property
    def dow(self) -> int:
        return self.index // 24

    @property
    def hour(self) -> int:
        return self.index % 24

    @property
    def label(self) -> str:
        return f"{DAY_NAMES[self.dow]}_{self.hour}h"

    @property
    def daytype(self) -> DayType:
        return DayType.WORKDAY if self.dow < 5 else DayType.WEEKEND

    @classmethod
    def from_label(cls, label: str) -> "HourOfWeek":
        m = _LABEL_RE.match(label)
        if m is None or int(m.group(2)) > 23:
            raise InputError(f"bad hour-of-week label {label!r}")
        return cls(24 * DAY_NAMES.index(m.group(1)) + int(m.group(2)))

    @classmethod
    def of(cls, dow: int, hour: int) -> "HourOfWeek":
        return cls(24 * dow + hour)

    def __str__(self):
        return self.label


def eligible_hours(daytype: DayType) -> tuple[HourOfWeek, ...]:
    """Hour-of-week slots that can occur on ``daytype`` rows (120 or 48)."""
    if DayType(daytype) is DayType.WORKDAY:
        return tuple(HourOfWeek(i) for i in range(0, 120))
    return tuple(HourOfWeek(i) for i in range(120, 168))


# -- scalar conversions ------------------------------------------------------

def to_hour64(ts) -> np.datetime64:
    """Coerce a scalar timestamp to ``datetime64[h]``, rejecting sub-hour parts."""
    if isinstance(ts, str):
        return parse_timestamp(ts)
    t = np.datetime64(ts)
    h = t.astype("datetime64[h]")
    if h != t:
        raise InputError(f"timestamp {ts} is not on a whole hour")
    return h


def parse_timestamp(text: str) -> np.datetime64:
    """Parse ``YYYY-MM-DDTHH:00`` into ``datetime64[h]``."""
    text = text.strip()
    if not _TS_RE.match(text):
        raise InputError(f"timestamp {text!r} is not of the form YYYY-MM-DDTHH:MM")
    try:
        t = np.datetime64(text, "m")
    except ValueError:
        raise InputError(f"invalid timestamp {text!r}") from None
    h = t.astype("datetime64[h]")
    if h != t:
        raise InputError(f"timestamp {text!r} is not on a whole hour")
    return h


def format_timestamp(ts) -> str:
    return str(np.datetime64(ts, "h").astype("datetime64[m]"))


def format_timestamps(ts: np.ndarray) -> list[str]:
    return np.datetime_as_string(np.asarray(ts, dtype="datetime64[m]"), unit="m").tolist()


# -- vectorized field extraction ---------------------------------------------

def _as_hours(ts) -> np.ndarray:
    return np.asarray(ts, dtype="datetime64[h]")


def months(ts) -> np.ndarray:
    t = _as_hours(ts)
    return (t.astype("datetime64[M]").astype(np.int64) % 12 + 1).astype(np.int64)


def days_of_month(ts) -> np.ndarray:
    t = _as_hours(ts)
    return (t.astype("datetime64[D]") - t.astype("datetime64[M]")).astype(np.int64) + 1


def hours_of_day(ts) -> np.ndarray:
    t = _as_hours(ts)
    return (t - t.astype("datetime64[D]")).astype(np.int64)


def days_of_week(ts) -> np.ndarray:
    """Monday = 0 ... Sunday = 6 (1970-01-01 was a Thursday)."""
    days = _as_hours(ts).astype("datetime64[D]").astype(np.int64)
    return (days + 3) % 7


def hour_of_week_index(ts) -> np.ndarray:
    return 24 * days_of_week(ts) + hours_of_day(ts)


def season_codes(ts) -> np.ndarray:
    return _SEASON_CODE[months(ts)]


def segment_mask(ts, segment: SegmentKey) -> np.ndarray:
    """Rows whose season and day type both match ``segment``."""
    code = _SEASON_FROM_CODE.index(segment.season)
    weekend = days_of_week(ts) >= 5
    want_weekend = segment.daytype is DayType.WEEKEND
    return (season_codes(ts) == code) & (weekend == want_weekend)


def segment_of(ts) -> SegmentKey | None:
    """Segment of a single timestamp, or None in summer."""
    season = classify_season(int(months(np.atleast_1d(to_hour64(ts)))[0]))
    if season is Season.SUMMER:
        return None
    return SegmentKey(season, classify_daytype(ts))


# -- spec operations ---------------------------------------------------------

def classify_season(month: int) -> Season:
    if isinstance(month, bool) or int(month) != month or month not in _SEASON_BY_MONTH:
        raise InputError(f"month must be an integer in 1..12, got {month!r}")
    return _SEASON_BY_MONTH[int(month)]


def classify_daytype(ts) -> DayType:
    dow = int(days_of_week(np.atleast_1d(to_hour64(ts)))[0])
    return DayType.WORKDAY if dow < 5 else DayType.WEEKEND


def hour_of_week(ts) -> HourOfWeek:
    return HourOfWeek(int(hour_of_week_index(np.atleast_1d(to_hour64(ts)))[0]))


def split_train_test(timestamps) -> tuple[np.ndarray, np.ndarray]:
    """Odd days of the month train, even days test."""
    if len(timestamps) and isinstance(timestamps[0], (_dt.datetime, str)):
        ts = np.array([to_hour64(t) for t in timestamps], dtype="datetime64[h]")
    else:
        ts = _as_hours(timestamps)
    train = days_of_month(ts) % 2 == 1
    return train, ~train
