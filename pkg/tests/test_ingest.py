import dataclasses
import io

import pytest

from delivery_eta.ingest import (
    RAW_COLUMNS,
    ExtractionError,
    SchemaError,
    check_record,
    clean_records,
    extract_target_minutes,
    parse_records,
    parse_time_of_day,
    serialize_records,
)
from delivery_eta.synth import synth_csv, synth_records

HEADER = ",".join(name for name, _ in RAW_COLUMNS)


def _csv(records, include_target=True):
    buf = io.StringIO()
    serialize_records(records, buf, include_target)
    return buf.getvalue().encode()


def test_header_only_gives_empty_sequence():
    res = parse_records((HEADER + "\n").encode())
    assert res.records == [] and res.rejects == []


def test_short_row_is_rejected_with_line_number():
    row = ",".join(["x"] * 19)
    res = parse_records(f"{HEADER}\n{row}\n".encode())
    assert len(res.records) == 0
    assert len(res.rejects) == 1 and res.rejects[0].row == 2


def test_header_is_case_and_space_insensitive_and_any_order():
    names = [name for name, _ in RAW_COLUMNS][::-1]
    text = ",".join(f" {n.upper()} " for n in names) + "\n" + ",".join(str(i) for i in range(20)) + "\n"
    res = parse_records(text.encode())
    assert res.records[0].id == "19" and res.records[0].time_taken_raw == "0"


def test_bad_header_names_the_column():
    with pytest.raises(SchemaError, match="Weather"):
        parse_records(HEADER.replace("Weatherconditions", "Weather").encode() + b"\n")
    with pytest.raises(SchemaError, match="City"):
        parse_records(HEADER.replace(",City", "").encode() + b"\n")


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(OSError):
        parse_records(tmp_path / "absent.csv")


def test_quoted_fields_allowed():
    recs = synth_records(1, seed=1)
    text = _csv(recs).decode().replace("conditions ", '"conditions ', 1)
    # close the quote right after the weather value
    lines = text.splitlines()
    parts = lines[1].split(",")
    w = [i for i, p in enumerate(parts) if p.startswith('"')][0]
    parts[w] += '"'
    res = parse_records((lines[0] + "\n" + ",".join(parts) + "\n").encode())
    assert res.records[0].weather == recs[0].weather


@pytest.mark.parametrize("text, minutes", [("(min) 24", 24), ("32", 32), ("(min) 7 ", 7)])
def test_extract_target(text, minutes):
    assert extract_target_minutes(text) == minutes


def test_extract_target_without_digits():
    with pytest.raises(ExtractionError) as err:
        extract_target_minutes("(min) ")
    assert "(min) " in str(err.value)


@pytest.mark.parametrize("text, minutes", [("11:30", 690), ("11:30:59", 690), ("24:00", 0), ("00:10:00", 10)])
def test_time_of_day(text, minutes):
    assert parse_time_of_day(text) == minutes


def test_no_sentinels_keeps_every_row():
    recs = synth_records(50, seed=2)
    clean, summary = clean_records(recs)
    assert summary.clean_rows == summary.raw_rows == 50
    assert summary.dropped_by_reason == {}


def test_three_empty_ratings_dropped():
    recs = synth_records(10, seed=3)
    recs = [dataclasses.replace(r, delivery_person_ratings="") if i in (1, 4, 7) else r for i, r in enumerate(recs)]
    clean, summary = clean_records(recs)
    assert len(clean) == 7
    assert summary.dropped_by_reason == {"missing:Delivery_person_Ratings": 3}


@pytest.mark.parametrize("sentinel", ["", "NaN", "NaN ", "nan", "null", "conditions NaN"])
def test_sentinels(sentinel):
    rec = dataclasses.replace(synth_records(1, seed=4)[0], weather=sentinel)
    clean, summary = clean_records([rec])
    assert clean == [] and summary.dropped_by_reason == {"missing:Weatherconditions": 1}


def test_unparseable_and_coordinates_drop_without_abort():
    recs = synth_records(4, seed=5)
    recs[0] = dataclasses.replace(recs[0], delivery_person_age="abc")
    recs[1] = dataclasses.replace(recs[1], restaurant_lat="0.0", restaurant_lon="-0.1")
    clean, summary = clean_records(recs)
    assert len(clean) == 2
    assert summary.dropped_by_reason == {"unparseable:Delivery_person_Age": 1, "invalid_coordinates": 1}


def test_prefix_and_whitespace_stripped():
    clean, _ = clean_records(synth_records(20, seed=6))
    assert all(not r.weather.startswith("conditions") for r in clean)
    assert all(r.city == r.city.strip() and r.festival in ("Yes", "No") for r in clean)


def test_summary_conservation_and_record_invariants():
    recs = synth_records(400, seed=7, missing_rate=0.2)
    clean, summary = clean_records(recs)
    assert summary.clean_rows + sum(summary.dropped_by_reason.values()) == summary.raw_rows
    assert 0 < summary.clean_rows < 400
    for r in clean:
        check_record(r)
    assert summary.to_json()


def test_clean_is_idempotent():
    recs = synth_records(300, seed=8, missing_rate=0.2)
    clean, _, drops = clean_records(recs, return_drops=True)
    dropped = {i for i, _ in drops}
    survivors = [r for i, r in enumerate(recs) if i not in dropped]
    again, summary = clean_records(survivors)
    assert summary.dropped_by_reason == {} and again == clean


def test_parse_serialize_roundtrip():
    text = synth_csv(n=100, seed=9).encode()
    first = parse_records(text).records
    second = parse_records(_csv(first)).records
    assert first == second


def test_scoring_input_may_omit_target():
    res = parse_records(_csv(synth_records(5, seed=10), include_target=False), require_target=False)
    assert len(res.records) == 5 and not res.has_target
    clean, summary = clean_records(res.records, require_target=False)
    assert len(clean) == 5 and all(r.time_taken_min is None for r in clean)
    with pytest.raises(SchemaError, match="Time_taken"):
        parse_records(_csv(synth_records(1), include_target=False))
