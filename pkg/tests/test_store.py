"""Indexed event store: ingest semantics and query correctness."""

import json

import pytest

from adhound import EventStore, QueryFilter
from adhound.events import header_line, serialize_event
from adhound.forge import forge, playbook_scenario


@pytest.fixture(scope="module")
def dataset():
    return forge(playbook_scenario("PassTheHash", 3, duration_hours=1.0)).events


@pytest.fixture(scope="module")
def store(dataset):
    s = EventStore()
    s.add_events(dataset)
    return s


def write_file(path, events):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header_line() + "\n")
        for e in events:
            fh.write(serialize_event(e) + "\n")


def test_ingest_accepts_all_forged_records(tmp_path, dataset):
    path = tmp_path / "events.jsonl"
    write_file(path, dataset)
    s = EventStore()
    report = s.ingest(path)
    assert report.accepted == len(dataset)
    assert report.rejected == 0
    assert len(s.events) == len(dataset)


def test_ingest_is_idempotent(tmp_path, dataset):
    path = tmp_path / "events.jsonl"
    write_file(path, dataset[:200])
    s = EventStore()
    first = s.ingest(path)
    second = s.ingest(path)
    assert first.accepted == 200
    assert second.accepted == 0
    assert second.duplicates == 200
    assert len(s.events) == 200


def test_ingest_rejects_malformed_lines(tmp_path, dataset):
    path = tmp_path / "events.jsonl"
    lines = [serialize_event(e) for e in dataset[:5]]
    lines.insert(2, "{broken json")
    lines.insert(4, json.dumps({"type": "auth"}))  # missing required fields
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    s = EventStore()
    report = s.ingest(path)
    assert report.accepted == 5
    assert report.rejected == 2
    assert len(report.violations) == 2


def test_ingest_missing_file_raises():
    with pytest.raises(OSError):
        EventStore().ingest("/nonexistent/events.jsonl")


def test_query_ordering_and_time_window(store):
    events = store.query(QueryFilter())
    times = [(e.time) for e in events]
    assert times == sorted(times)
    t0 = events[len(events) // 4].time
    t1 = events[3 * len(events) // 4].time + 1
    windowed = store.query(QueryFilter(time_range=(t0, t1)))
    assert windowed
    assert all(t0 <= e.time < t1 for e in windowed)


def test_query_filters_compose(store):
    some = store.query(QueryFilter(kinds=frozenset({"ProcessCreate"})))
    host = some[0].host.fqdn
    both = store.query(QueryFilter(kinds=frozenset({"ProcessCreate"}),
                                   host=host))
    assert both
    assert all(e.kind == "ProcessCreate" and e.host.fqdn == host for e in both)


def test_query_invalid_time_range_rejected():
    with pytest.raises(ValueError):
        QueryFilter(time_range=(10, 10))


def test_every_read_bumps_query_counter(store):
    before = store.query_count
    store.query(QueryFilter(host="nosuch.host"))
    store.session_events(store.events[0].session
                         if hasattr(store.events[0], "session")
                         else store.query(QueryFilter(
                             kinds=frozenset({"logon"})))[0].session)
    assert store.query_count >= before + 2


def test_indexes_match_rebuild(store):
    assert store.audit_indexes()


def test_guid_chain_accessor(store):
    guids = [e.logon_guid for e in store.all_auth_events() if e.logon_guid]
    assert guids
    chain = store.auth_chain_for_guid(guids[0])
    assert chain["auth_events"]
    for e in chain["auth_events"] + chain["logon_events"]:
        assert e.logon_guid == guids[0]
