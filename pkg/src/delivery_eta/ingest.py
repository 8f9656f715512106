"""Reading and cleaning the raw food-delivery order CSV."""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
import os
import re
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from typing import IO, Iterable, Sequence

# Raw header names, in file order, mapped to record attribute names.
RAW_COLUMNS = (
    ("ID", "id"),
    ("Delivery_person_ID", "delivery_person_id"),
    ("Delivery_person_Age", "delivery_person_age"),
    ("Delivery_person_Ratings", "delivery_person_ratings"),
    ("Restaurant_latitude", "restaurant_lat"),
    ("Restaurant_longitude", "restaurant_lon"),
    ("Delivery_location_latitude", "delivery_lat"),
    ("Delivery_location_longitude", "delivery_lon"),
    ("Order_Date", "order_date"),
    ("Time_Orderd", "time_ordered"),
    ("Time_Order_picked", "time_order_picked"),
    ("Weatherconditions", "weather"),
    ("Road_traffic_density", "traffic_density"),
    ("Vehicle_condition", "vehicle_condition"),
    ("Type_of_order", "order_type"),
    ("Type_of_vehicle", "vehicle_type"),
    ("multiple_deliveries", "multiple_deliveries"),
    ("Festival", "festival"),
    ("City", "city"),
    ("Time_taken(min)", "time_taken_raw"),
)
TARGET_COLUMN = "Time_taken(min)"
HEADER_OF = {attr: name for name, attr in RAW_COLUMNS}

DEFAULT_SENTINELS = frozenset({"", "NaN", "nan", "null"})
DEFAULT_PREFIXES = {"weather": "conditions "}

CATEGORY_FIELDS = ("weather", "traffic_density", "order_type", "vehicle_type", "festival", "city")
NUMERIC_FIELDS = (
    "delivery_person_age",
    "delivery_person_ratings",
    "restaurant_lat",
    "restaurant_lon",
    "delivery_lat",
    "delivery_lon",
    "vehicle_condition",
    "multiple_deliveries",
)


class SchemaError(ValueError):
    """Header row does not match the dataset schema."""


class ExtractionError(ValueError):
    def __init__(self, text):
        super().__init__(f"no integer found in {text!r}")
        self.text = text


def _norm_header(name):
    return re.sub(r"\s+", "", name).lower()


_NORMALIZED = {_norm_header(name): attr for name, attr in RAW_COLUMNS}


@dataclass(frozen=True)
class RawOrderRecord:
    id: str
    delivery_person_id: str
    delivery_person_age: str
    delivery_person_ratings: str
    restaurant_lat: str
    restaurant_lon: str
    delivery_lat: str
    delivery_lon: str
    order_date: str
    time_ordered: str
    time_order_picked: str
    weather: str
    traffic_density: str
    vehicle_condition: str
    order_type: str
    vehicle_type: str
    multiple_deliveries: str
    festival: str
    city: str
    time_taken_raw: str = ""


@dataclass(frozen=True)
class CleanOrderRecord:
    id: str
    delivery_person_id: str
    delivery_person_age: int
    delivery_person_ratings: float
    restaurant_lat: float
    restaurant_lon: float
    delivery_lat: float
    delivery_lon: float
    order_date: dt.date
    time_ordered: int  # minutes since midnight
    time_order_picked: int
    weather: str
    traffic_density: str
    vehicle_condition: int
    order_type: str
    vehicle_type: str
    multiple_deliveries: int
    festival: str
    city: str
    time_taken_min: int | None


@dataclass
class Reject:
    row: int  # 1-based line number; the header is row 1
    reason: str
    fields: list[str]


@dataclass
class ParseResult:
    records: list[RawOrderRecord]
    rejects: list[Reject]
    has_target: bool = True

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


@dataclass
class DatasetSummary:
    raw_rows: int
    clean_rows: int
    dropped_by_reason: dict[str, int] = field(default_factory=dict)
    category_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    numeric_stats: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"), newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # assume a binary stream
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def parse_records(source, require_target: bool = True) -> ParseResult:
    """Parse the raw CSV into string records.

    ``source`` may be a path, raw bytes, or a text/binary stream. Header
    names are matched after case folding and whitespace removal, in any
    order. Rows with the wrong number of fields are collected in
    ``rejects`` together with their line number.

    With ``require_target=False`` the target column may be absent (as for
    rows that are to be scored).
    """
    stream, owned = _open_text(source)
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("missing header row") from None
        attrs = []
        for name in header:
            attr = _NORMALIZED.get(_norm_header(name))
            if attr is None:
                raise SchemaError(f"unexpected column {name.strip()!r}")
            if attr in attrs:
                raise SchemaError(f"duplicate column {name.strip()!r}")
            attrs.append(attr)
        missing = [HEADER_OF[a] for _, a in RAW_COLUMNS if a not in attrs]
        has_target = "time_taken_raw" in attrs
        if not require_target and missing == [TARGET_COLUMN]:
            missing = []
        if missing:
            raise SchemaError(f"missing column {missing[0]!r}")

        records, rejects = [], []
        width = len(attrs)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                rejects.append(Reject(lineno, f"column_count:{len(row)}", row))
                continue
            records.append(RawOrderRecord(**dict(zip(attrs, row))))
        return ParseResult(records, rejects, has_target)
    except UnicodeDecodeError as exc:
        raise OSError(f"source is not valid UTF-8: {exc}") from exc
    finally:
        if owned:
            stream.close()


def serialize_records(records: Iterable[RawOrderRecord], stream: IO[str], include_target: bool = True):
    """Write raw records back out in the dataset's CSV layout."""
    cols = RAW_COLUMNS if include_target else RAW_COLUMNS[:-1]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([name for name, _ in cols])
    for rec in records:
        writer.writerow([getattr(rec, attr) for _, attr in cols])


_INT_RE = re.compile(r"\d+")


def extract_target_minutes(time_taken_raw: str) -> int:
    """First unsigned integer in the text, e.g. ``"(min) 24"`` -> 24."""
    m = _INT_RE.search(time_taken_raw)
    if m is None:
        raise ExtractionError(time_taken_raw)
    return int(m.group())


def parse_time_of_day(text: str) -> int:
    """``HH:MM`` or ``HH:MM:SS`` to minutes since midnight; hour 24 wraps to 0."""
    parts = text.strip().split(":")
    if len(parts) not in (2, 3) or not all(p.isdigit() for p in parts):
        raise ValueError(text)
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    if h > 24 or m > 59 or s > 59:
        raise ValueError(text)
    return (h % 24) * 60 + m


_DATE_FORMATS = ("%d-%m-%Y", "%Y-%m-%d", "%d/%m/%Y")


def parse_date(text: str) -> dt.date:
    text = text.strip()
    for fmt in _DATE_FORMATS:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            pass
    raise ValueError(text)


def _parse_int(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        # "2.0" style integers
        v = float(text)
        if not v.is_integer():
            raise
        return int(v)


def _near_null_island(lat, lon):
    return abs(lat) < 0.5 and abs(lon) < 0.5


def clean_records(
    raw: Sequence[RawOrderRecord],
    sentinels: Iterable[str] = DEFAULT_SENTINELS,
    prefixes: dict[str, str] | None = None,
    require_target: bool = True,
    return_drops: bool = False,
):
    """Drop incomplete rows and coerce the survivors to typed records.

    A field counts as missing when, after trimming whitespace (and stripping
    the column's configured prefix), it is one of ``sentinels``. Each
    dropped row is charged to a single reason: the first missing column in
    schema order, else the first unparseable column, else a range check.

    Returns ``(clean, summary)``; with ``return_drops=True`` a third element
    lists ``(index, reason)`` for every dropped input record.
    """
    sentinels = frozenset(s.strip() for s in sentinels)
    prefixes = DEFAULT_PREFIXES if prefixes is None else prefixes
    attrs = [attr for _, attr in RAW_COLUMNS]
    if not require_target:
        attrs = attrs[:-1]

    clean, drops = [], []
    dropped = Counter()
    for idx, rec in enumerate(raw):
        values = {}
        reason = None
        for attr in attrs:
            text = getattr(rec, attr).strip()
            prefix = prefixes.get(attr)
            if prefix and text.startswith(prefix.strip()):
                text = text[len(prefix.strip()):].strip()
            if text in sentinels:
                reason = f"missing:{HEADER_OF[attr]}"
                break
            values[attr] = text
        if reason is None:
            out, reason = _coerce(values, require_target)
        if reason is not None:
            dropped[reason] += 1
            drops.append((idx, reason))
            continue
        clean.append(out)

    summary = DatasetSummary(
        raw_rows=len(raw),
        clean_rows=len(clean),
        dropped_by_reason=dict(sorted(dropped.items())),
    )
    _fill_profile(summary, clean)
    if return_drops:
        return clean, summary, drops
    return clean, summary


def _coerce(v, require_target):
    out = {"id": v["id"], "delivery_person_id": v["delivery_person_id"]}
    for attr, conv in (
        ("delivery_person_age", _parse_int),
        ("delivery_person_ratings", float),
        ("restaurant_lat", float),
        ("restaurant_lon", float),
        ("delivery_lat", float),
        ("delivery_lon", float),
        ("order_date", parse_date),
        ("time_ordered", parse_time_of_day),
        ("time_order_picked", parse_time_of_day),
        ("vehicle_condition", _parse_int),
        ("multiple_deliveries", _parse_int),
    ):
        try:
            out[attr] = conv(v[attr])
        except (ValueError, OverflowError):
            return None, f"unparseable:{HEADER_OF[attr]}"
        if isinstance(out[attr], float) and out[attr] != out[attr]:
            return None, f"unparseable:{HEADER_OF[attr]}"
    for attr in CATEGORY_FIELDS:
        out[attr] = v[attr]
    if require_target:
        try:
            out["time_taken_min"] = extract_target_minutes(v["time_taken_raw"])
        except ExtractionError:
            return None, f"unparseable:{TARGET_COLUMN}"
        if out["time_taken_min"] <= 0:
            return None, f"out_of_range:{TARGET_COLUMN}"
    else:
        out["time_taken_min"] = None

    for lat, lon in (("restaurant_lat", "restaurant_lon"), ("delivery_lat", "delivery_lon")):
        if not -90.0 <= out[lat] <= 90.0:
            return None, f"out_of_range:{HEADER_OF[lat]}"
        if not -180.0 <= out[lon] <= 180.0:
            return None, f"out_of_range:{HEADER_OF[lon]}"
    if _near_null_island(out["restaurant_lat"], out["restaurant_lon"]) or _near_null_island(
        out["delivery_lat"], out["delivery_lon"]
    ):
        return None, "invalid_coordinates"
    if out["multiple_deliveries"] < 0:
        return None, "out_of_range:multiple_deliveries"
    return CleanOrderRecord(**out), None


def _fill_profile(summary, clean):
    for attr in CATEGORY_FIELDS:
        counts = Counter(getattr(r, attr) for r in clean)
        summary.category_counts[attr] = dict(sorted(counts.items()))
    for attr in NUMERIC_FIELDS + ("time_taken_min",):
        vals = [getattr(r, attr) for r in clean if getattr(r, attr) is not None]
        if vals:
            summary.numeric_stats[attr] = {
                "min": float(min(vals)),
                "max": float(max(vals)),
                "mean": float(sum(vals) / len(vals)),
            }


def check_record(rec: CleanOrderRecord):
    """Assert the per-record invariants of a cleaned order."""
    for f in fields(rec):
        assert getattr(rec, f.name) is not None or f.name == "time_taken_min", f.name
    assert -90 <= rec.restaurant_lat <= 90 and -90 <= rec.delivery_lat <= 90
    assert -180 <= rec.restaurant_lon <= 180 and -180 <= rec.delivery_lon <= 180
    assert rec.time_taken_min is None or rec.time_taken_min > 0
    assert rec.multiple_deliveries >= 0
    assert 0 <= rec.time_ordered < 1440 and 0 <= rec.time_order_picked < 1440


def load_clean(path, **kw):
    """Parse then clean a CSV file; returns ``(clean, summary, parse_result)``."""
    parsed = parse_records(path)
    clean, summary = clean_records(parsed.records, **kw)
    return clean, summary, parsed
