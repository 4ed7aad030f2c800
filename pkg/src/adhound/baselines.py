"""Naive cross-machine edge baselines.

These are the dependency-explosion strawmen: counting every network
connection (or every remote logon) between domain hosts as a lateral-movement
edge, instead of requiring causal agreement between connection, logon and
authentication. The causal tracer should beat both by a wide margin.
"""

from __future__ import annotations

from .events import LogonEvent, SystemEvent
from .store import EventStore, QueryFilter


def domain_hosts(store: EventStore) -> set:
    hosts = set()
    for e in store.query(QueryFilter()):
        if isinstance(e, (LogonEvent, SystemEvent)):
            hosts.add(e.host.fqdn)
    return hosts


def connection_edge_count(store: EventStore, hosts: set = None) -> int:
    """One edge per network connection between two known domain hosts."""
    if hosts is None:
        hosts = domain_hosts(store)
    n = 0
    for e in store.query(QueryFilter(kinds={"NetworkConnect"})):
        if not isinstance(e, SystemEvent):
            continue
        dst = e.object.remote_host
        if dst in hosts and dst != e.host.fqdn:
            n += 1
    return n


def logon_edge_count(store: EventStore, hosts: set = None) -> int:
    """One edge per remote logon event between two known domain hosts."""
    if hosts is None:
        hosts = domain_hosts(store)
    n = 0
    for fqdn in sorted(hosts):
        for l in store.host_logon_events(fqdn):
            if (l.kind in ("logon", "reconnect") and l.source_host is not None
                    and l.source_host.fqdn != l.host.fqdn
                    and l.source_host.fqdn in hosts):
                n += 1
    return n
