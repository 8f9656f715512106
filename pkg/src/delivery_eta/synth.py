"""Synthetic order tables in the raw dataset layout.

Used for tests, benchmarks and CI runs where the real dataset is not
available. Targets are a known function of the features plus noise, so
feature-group effects can be checked against ground truth.
"""
from __future__ import annotations

import datetime as dt
import io

import numpy as np

from .ingest import RAW_COLUMNS, RawOrderRecord, serialize_records

TRAFFIC_EFFECT = {"Low": 0.0, "Medium": 4.0, "High": 7.0, "Jam": 12.0}
WEATHER_EFFECT = {"Sunny": 0.0, "Cloudy": 2.0, "Windy": 2.0, "Fog": 5.0, "Stormy": 4.0, "Sandstorms": 4.0}
CITY_EFFECT = {"Urban": 2.0, "Metropolitian": 4.0, "Semi-Urban": 6.0}
ORDER_TYPES = ("Snack", "Meal", "Drinks", "Buffet")
VEHICLES = ("motorcycle", "scooter", "electric_scooter", "bicycle")
HUBS = ((12.97, 77.59), (19.07, 72.88), (22.57, 88.36), (17.38, 78.48), (26.91, 75.79), (23.02, 72.57))
SIGNALS = ("full", "traffic_only")


def _hms(minutes):
    minutes = int(minutes) % 1440
    return f"{minutes // 60:02d}:{minutes % 60:02d}:00"


def synth_records(n: int, seed: int = 0, signal: str = "full", noise: float = 2.0, missing_rate: float = 0.0):
    """Generate ``n`` raw records.

    Parameters
    ----------
    signal : {"full", "traffic_only"}
        ``"full"`` makes the target depend on distance, traffic, weather,
        personnel, order, vehicle and city fields. ``"traffic_only"`` makes
        traffic density the sole informative column.
    noise : float
        Standard deviation of the additive Gaussian noise, in minutes.
    missing_rate : float
        Probability that a row has one field replaced by ``"NaN "``.
    """
    if signal not in SIGNALS:
        raise ValueError(f"signal must be one of {SIGNALS}")
    rng = np.random.default_rng(seed)
    traffic = rng.choice(list(TRAFFIC_EFFECT), size=n, p=[0.35, 0.25, 0.15, 0.25])
    weather = rng.choice(list(WEATHER_EFFECT), size=n)
    city = rng.choice(list(CITY_EFFECT), size=n, p=[0.3, 0.6, 0.1])
    hub = rng.integers(0, len(HUBS), size=n)
    r_lat = np.array([HUBS[h][0] for h in hub]) + rng.uniform(-0.2, 0.2, n)
    r_lon = np.array([HUBS[h][1] for h in hub]) + rng.uniform(-0.2, 0.2, n)
    d_lat = r_lat + rng.uniform(-0.12, 0.12, n)
    d_lon = r_lon + rng.uniform(-0.12, 0.12, n)
    age = rng.integers(20, 40, size=n)
    rating = np.round(rng.uniform(2.5, 5.0, n), 1)
    vcond = rng.integers(0, 4, size=n)
    multi = rng.integers(0, 4, size=n)
    festival = rng.random(n) < 0.05
    otype = rng.choice(ORDER_TYPES, size=n)
    vtype = rng.choice(VEHICLES, size=n)
    day0 = dt.date(2022, 2, 11)
    day = rng.integers(0, 60, size=n)
    ordered = rng.integers(8 * 60, 23 * 60 + 50, size=n)
    prep = rng.choice([5, 10, 15], size=n)

    from .features import haversine_km

    dist = haversine_km(r_lat, r_lon, d_lat, d_lon)
    eps = rng.normal(0.0, noise, n)
    if signal == "full":
        t = (
            12.0
            + 1.1 * dist
            + np.array([TRAFFIC_EFFECT[v] for v in traffic])
            + np.array([WEATHER_EFFECT[v] for v in weather])
            + np.array([CITY_EFFECT[v] for v in city])
            + 3.0 * (5.0 - rating)
            + 0.2 * (age - 30)
            + 3.0 * multi
            + 8.0 * festival
            + (3 - vcond)
            + eps
        )
    else:
        t = 20.0 + 2.0 * np.array([TRAFFIC_EFFECT[v] for v in traffic]) + eps
    minutes = np.maximum(np.rint(t), 1).astype(int)

    drop_field = np.where(rng.random(n) < missing_rate, rng.integers(2, len(RAW_COLUMNS) - 1, size=n), -1)
    out = []
    for i in range(n):
        row = {
            "id": f"0x{rng.integers(0, 16**4):04x}",
            "delivery_person_id": f"HUB{hub[i]}RES{i % 20:02d}DEL{i % 3 + 1:02d}",
            "delivery_person_age": str(age[i]),
            "delivery_person_ratings": f"{rating[i]:.1f}",
            "restaurant_lat": f"{r_lat[i]:.6f}",
            "restaurant_lon": f"{r_lon[i]:.6f}",
            "delivery_lat": f"{d_lat[i]:.6f}",
            "delivery_lon": f"{d_lon[i]:.6f}",
            "order_date": (day0 + dt.timedelta(days=int(day[i]))).strftime("%d-%m-%Y"),
            "time_ordered": _hms(ordered[i]),
            "time_order_picked": _hms(ordered[i] + prep[i]),
            "weather": f"conditions {weather[i]}",
            "traffic_density": f"{traffic[i]} ",
            "vehicle_condition": str(vcond[i]),
            "order_type": f"{otype[i]} ",
            "vehicle_type": f"{vtype[i]} ",
            "multiple_deliveries": str(multi[i]),
            "festival": "Yes " if festival[i] else "No ",
            "city": f"{city[i]} ",
            "time_taken_raw": f"(min) {minutes[i]}",
        }
        if drop_field[i] >= 0:
            row[RAW_COLUMNS[drop_field[i]][1]] = "NaN "
        out.append(RawOrderRecord(**row))
    return out


def synth_csv(path=None, n: int = 1000, seed: int = 0, include_target: bool = True, **kw) -> str:
    """Write a synthetic CSV to ``path`` (if given) and return its text."""
    buf = io.StringIO()
    serialize_records(synth_records(n, seed, **kw), buf, include_target=include_target)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
