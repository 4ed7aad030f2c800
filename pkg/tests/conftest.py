"""Shared fixtures: expensive forged datasets are built once per session."""

import pytest

from adhound import EventStore, run_detection
from adhound.forge import four_hop_scenario, forge, playbook_scenario


def build_store(events) -> EventStore:
    store = EventStore()
    store.add_events(events)
    return store


@pytest.fixture(scope="session")
def fourhop_bundle():
    """The four-hop lateral-movement scenario with quiet benign background."""
    res = forge(four_hop_scenario(seed=1))
    store = build_store(res.events)
    result = run_detection(store)
    return res, store, result


@pytest.fixture(scope="session")
def mixed_bundle():
    """One attack plus noisy benign data with 5% log truncation, sized so
    stage 1 produces well over twenty false alerts."""
    cfg = playbook_scenario("PassTheHash", 7, duration_hours=10.0,
                            truncation_fraction=0.05)
    res = forge(cfg)
    store = build_store(res.events)
    result = run_detection(store)
    return res, store, result
