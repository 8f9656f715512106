"""Design-matrix construction: distances, time features, category codes."""
from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ingest import CleanOrderRecord

log = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0
MAX_DISTANCE_KM = 100.0


class FeatureGroup(str, enum.Enum):
    TRAFFIC = "Traffic"
    WEATHER = "Weather"
    GEOSPATIAL = "Geospatial"
    PERSONNEL = "Personnel"
    ORDER = "Order"
    TEMPORAL = "Temporal"
    VEHICLE = "Vehicle"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for g in cls:
            if g.value.lower() == str(value).strip().lower():
                return g
        raise ValueError(f"unknown feature group {value!r}")


class EncodingError(ValueError):
    def __init__(self, column, value, row=None):
        where = f" (row {row})" if row is not None else ""
        super().__init__(f"unseen category {value!r} in column {column!r}{where}")
        self.column = column
        self.value = value
        self.row = row


TRAFFIC_ORDER = ("Low", "Medium", "High", "Jam")


@dataclass(frozen=True)
class EncodingMap:
    column: str
    kind: str  # "ordinal" | "label"
    mapping: dict
    unknown_policy: str = "error"  # "error" | "reserve_code"

    def __post_init__(self):
        if self.kind not in ("ordinal", "label"):
            raise ValueError(f"bad encoding kind {self.kind!r}")
        if self.unknown_policy not in ("error", "reserve_code"):
            raise ValueError(f"bad unknown policy {self.unknown_policy!r}")
        codes = sorted(self.mapping.values())
        if codes != list(range(len(codes))):
            raise ValueError(f"codes for {self.column!r} are not dense 0..k-1")

    @classmethod
    def ordinal(cls, column, order, unknown_policy="error"):
        return cls(column, "ordinal", {c: i for i, c in enumerate(order)}, unknown_policy)

    @classmethod
    def label(cls, column, values, unknown_policy="error"):
        cats = sorted(set(values))
        return cls(column, "label", {c: i for i, c in enumerate(cats)}, unknown_policy)

    @property
    def reserve_code(self):
        return len(self.mapping)

    def to_dict(self):
        return {
            "column": self.column,
            "kind": self.kind,
            "categories": sorted(self.mapping, key=self.mapping.__getitem__),
            "unknown_policy": self.unknown_policy,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["column"], d["kind"], {c: i for i, c in enumerate(d["categories"])}, d["unknown_policy"])


def encode_categorical(values: Sequence[str], enc: EncodingMap) -> list[int]:
    out = []
    for i, v in enumerate(values):
        code = enc.mapping.get(v)
        if code is None:
            if enc.unknown_policy == "error":
                raise EncodingError(enc.column, v, i)
            code = enc.reserve_code
        out.append(code)
    return out


def save_encodings(encodings: dict[str, EncodingMap], path):
    doc = {"version": 1, "encodings": [e.to_dict() for e in encodings.values()]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def load_encodings(path) -> dict[str, EncodingMap]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return {d["column"]: EncodingMap.from_dict(d) for d in doc["encodings"]}


# -- geometry ---------------------------------------------------------------


def haversine_km(lat1, lon1, lat2, lon2, radius=EARTH_RADIUS_KM):
    """Great-circle distance in km. Accepts scalars or numpy arrays."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2) ** 2
    d = 2 * radius * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    if np.ndim(d) == 0:
        return float(d)
    return d


# -- time -------------------------------------------------------------------


def temporal_features(rec: CleanOrderRecord):
    """(prep_minutes, order_hour, day_of_week, is_weekend) for one order."""
    prep = (rec.time_order_picked - rec.time_ordered) % 1440
    dow = rec.order_date.weekday()
    return float(prep), rec.time_ordered // 60, dow, int(dow >= 5)


# -- matrix -----------------------------------------------------------------

G = FeatureGroup

# name -> (group, source). Source is a record attribute, a categorical
# attribute (encoded), or a derived quantity.
COLUMN_SPECS = {
    "traffic_density": (G.TRAFFIC, "cat"),
    "weather": (G.WEATHER, "cat"),
    "distance_km": (G.GEOSPATIAL, "derived"),
    "delivery_person_ratings": (G.PERSONNEL, "num"),
    "delivery_person_age": (G.PERSONNEL, "num"),
    "multiple_deliveries": (G.ORDER, "num"),
    "order_type": (G.ORDER, "cat"),
    "festival": (G.ORDER, "cat"),
    "city": (G.GEOSPATIAL, "cat"),
    "vehicle_condition": (G.VEHICLE, "num"),
    "vehicle_type": (G.VEHICLE, "cat"),
    "prep_minutes": (G.TEMPORAL, "derived"),
    "order_hour": (G.TEMPORAL, "derived"),
    "day_of_week": (G.TEMPORAL, "derived"),
    "is_weekend": (G.TEMPORAL, "derived"),
}
DEFAULT_FEATURE_SET = tuple(COLUMN_SPECS)
CATEGORICAL_COLUMNS = tuple(c for c, (_, src) in COLUMN_SPECS.items() if src == "cat")


def fit_encodings(records: Sequence[CleanOrderRecord], unknown_policy="error") -> dict[str, EncodingMap]:
    """Ordinal map for traffic, lexicographic label maps for the rest."""
    encs = {"traffic_density": EncodingMap.ordinal("traffic_density", TRAFFIC_ORDER, unknown_policy)}
    for col in CATEGORICAL_COLUMNS:
        if col != "traffic_density":
            encs[col] = EncodingMap.label(col, (getattr(r, col) for r in records), unknown_policy)
    return encs


@dataclass
class FeatureMatrix:
    values: np.ndarray
    target: np.ndarray | None
    column_names: list[str]
    column_groups: list[FeatureGroup]
    # index of each row in the record sequence it was built from
    source_rows: np.ndarray | None = None
    dropped: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be 2-D")
        n, p = self.values.shape
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=np.float64)
            if self.target.shape != (n,):
                raise ValueError("target length does not match row count")
        if len(self.column_names) != p or len(self.column_groups) != p:
            raise ValueError("column metadata does not match column count")
        self.column_names = list(self.column_names)
        self.column_groups = [FeatureGroup.parse(g) for g in self.column_groups]
        if self.source_rows is None:
            self.source_rows = np.arange(n)

    @classmethod
    def from_arrays(cls, X, y=None, names=None, groups=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        p = X.shape[1]
        names = list(names) if names is not None else [f"x{j}" for j in range(p)]
        groups = list(groups) if groups is not None else [FeatureGroup.ORDER] * p
        return cls(X, y, names, groups)

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    def take_rows(self, idx):
        idx = np.asarray(idx)
        if idx.dtype != bool:
            idx = idx.astype(np.int64)
        return FeatureMatrix(
            self.values[idx],
            None if self.target is None else self.target[idx],
            self.column_names,
            self.column_groups,
            self.source_rows[idx],
        )

    def select_columns(self, names):
        pos = [self.column_names.index(n) for n in names]
        return FeatureMatrix(
            self.values[:, pos],
            self.target,
            [self.column_names[j] for j in pos],
            [self.column_groups[j] for j in pos],
            self.source_rows,
        )

    def check(self):
        assert np.all(np.isfinite(self.values)), "non-finite feature value"
        if self.target is not None:
            assert np.all(np.isfinite(self.target)), "non-finite target"


def build_matrix(
    records: Sequence[CleanOrderRecord],
    encodings: dict[str, EncodingMap],
    feature_set: Sequence[str] | None = None,
    max_distance_km: float | None = MAX_DISTANCE_KM,
) -> FeatureMatrix:
    """Numeric design matrix for ``records``.

    Rows whose restaurant-to-customer distance exceeds ``max_distance_km``
    are left out; their indices and the reason are kept in ``.dropped``.
    The target is attached when every record carries one.
    """
    feature_set = list(DEFAULT_FEATURE_SET if feature_set is None else feature_set)
    for col in feature_set:
        if col not in COLUMN_SPECS:
            raise ValueError(f"unknown feature column {col!r}")
        if COLUMN_SPECS[col][1] == "cat" and col not in encodings:
            raise ValueError(f"no encoding for categorical column {col!r}")
    n = len(records)
    cols = {}
    lat1 = np.array([r.restaurant_lat for r in records], dtype=np.float64)
    lon1 = np.array([r.restaurant_lon for r in records], dtype=np.float64)
    lat2 = np.array([r.delivery_lat for r in records], dtype=np.float64)
    lon2 = np.array([r.delivery_lon for r in records], dtype=np.float64)
    dist = haversine_km(lat1, lon1, lat2, lon2) if n else np.zeros(0)
    cols["distance_km"] = np.asarray(dist, dtype=np.float64)
    temporal = np.array([temporal_features(r) for r in records], dtype=np.float64).reshape(n, 4)
    for j, name in enumerate(("prep_minutes", "order_hour", "day_of_week", "is_weekend")):
        cols[name] = temporal[:, j]

    values = np.empty((n, len(feature_set)), dtype=np.float64)
    for j, col in enumerate(feature_set):
        src = COLUMN_SPECS[col][1]
        if src == "derived":
            values[:, j] = cols[col]
        elif src == "num":
            values[:, j] = [getattr(r, col) for r in records]
        else:
            enc = encodings[col]
            for i, r in enumerate(records):
                v = getattr(r, col)
                code = enc.mapping.get(v)
                if code is None:
                    if enc.unknown_policy == "error":
                        raise EncodingError(col, v, i)
                    code = enc.reserve_code
                values[i, j] = code

    keep = np.ones(n, dtype=bool)
    dropped = []
    if max_distance_km is not None:
        far = cols["distance_km"] > max_distance_km
        if far.any():
            keep &= ~far
            dropped = [(int(i), "distance_outlier") for i in np.flatnonzero(far)]
            log.info("dropped %d rows with distance > %.0f km", len(dropped), max_distance_km)

    target = None
    if n == 0 or all(r.time_taken_min is not None for r in records):
        target = np.array([r.time_taken_min for r in records], dtype=np.float64)[keep]
    fm = FeatureMatrix(
        values[keep],
        target,
        feature_set,
        [COLUMN_SPECS[c][0] for c in feature_set],
        np.flatnonzero(keep),
    )
    fm.dropped = dropped
    return fm


def drop_feature_group(m: FeatureMatrix, group) -> FeatureMatrix:
    group = FeatureGroup.parse(group)
    names = [n for n, g in zip(m.column_names, m.column_groups) if g != group]
    return m.select_columns(names)
