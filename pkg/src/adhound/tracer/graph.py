"""Attack graph assembled by the provenance tracer.

Nodes are processes, files, sockets, principals, hosts and collapsed meta
nodes; every edge carries the event ids it came from. Cross-machine movement
and local privilege transitions are additionally kept as structured lists so
scoring does not have to re-derive them from the drawing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..events import Event, LogonEvent, ObjectRef, ProcessRef, SystemEvent
from ..forge.truth import session_to_dict


def proc_node_id(p: ProcessRef) -> str:
    return f"proc:{p.host.fqdn}:{p.pid}:{p.start_time}"


EDGE_KINDS = ("spawned", "read", "wrote", "connected", "accessed",
              "logged_on", "escalated", "moved_to")


@dataclass
class MetaPattern:
    """Known-benign process fanout that can be folded into one node."""

    name: str
    root_images: frozenset
    member_images: frozenset
    min_size: int = 5


DEFAULT_META_PATTERNS = (
    MetaPattern("logon-scripts", frozenset({"gpscript.exe"}),
                frozenset({"cscript.exe", "wscript.exe", "conhost.exe"})),
    MetaPattern("service-starts", frozenset({"services.exe"}),
                frozenset({"svchost.exe", "taskhostw.exe"})),
)


class AttackGraph:
    def __init__(self) -> None:
        self.nodes: dict[str, dict] = {}
        self.edges: list[dict] = []
        self._edge_keys: set = set()
        self.cross_edges: list[dict] = []
        self.escalations: list[dict] = []
        self.alert_ids: list[str] = []

    # -- construction ---------------------------------------------------------

    def add_node(self, node_id: str, kind: str, label: str, *, host: str = None,
                 session: str = None, image: str = None) -> dict:
        node = self.nodes.get(node_id)
        if node is None:
            node = {"id": node_id, "kind": kind, "label": label, "host": host,
                    "session": session, "image": image, "ttp_hit": False}
            self.nodes[node_id] = node
        else:
            if host and not node.get("host"):
                node["host"] = host
            if session and not node.get("session"):
                node["session"] = session
        return node

    def add_proc_node(self, p: ProcessRef, session: str = None) -> str:
        nid = proc_node_id(p)
        self.add_node(nid, "process", p.image_name, host=p.host.fqdn,
                      session=session, image=p.image_name)
        return nid

    def add_edge(self, src: str, dst: str, kind: str, time: int,
                 event_ids: list) -> Optional[dict]:
        key = (src, dst, kind, tuple(event_ids))
        if key in self._edge_keys:
            return None
        self._edge_keys.add(key)
        edge = {"src": src, "dst": dst, "kind": kind, "time": time,
                "event_ids": list(event_ids)}
        self.edges.append(edge)
        return edge

    def add_event(self, event: Event, session_label: str = None) -> None:
        """Project one raw event onto graph nodes and edges."""
        if isinstance(event, LogonEvent):
            p = event.principal
            pid = f"principal:{p.realm}\\{p.name}"
            self.add_node(pid, "principal", p.name)
            hid = f"host:{event.host.fqdn}"
            self.add_node(hid, "host", event.host.fqdn, host=event.host.fqdn)
            self.add_edge(pid, hid, "logged_on", event.time, [event.event_id])
            return
        if not isinstance(event, SystemEvent):
            return
        label = session_label or event.session.short()
        src = self.add_proc_node(event.subject_process, label)
        obj: ObjectRef = event.object
        if event.kind == "ProcessCreate" and obj.process is not None:
            dst = self.add_proc_node(obj.process, label)
            self.add_edge(src, dst, "spawned", event.time, [event.event_id])
        elif event.kind == "ProcessAccess" and obj.process is not None:
            dst = self.add_proc_node(obj.process, label)
            self.add_edge(src, dst, "accessed", event.time, [event.event_id])
        elif event.kind in ("FileRead", "FileWrite", "RegistryAccess"):
            nid = f"file:{event.host.fqdn}:{obj.path}"
            self.add_node(nid, "file", obj.path or "?", host=event.host.fqdn)
            kind = "wrote" if event.kind == "FileWrite" else "read"
            self.add_edge(src, nid, kind, event.time, [event.event_id])
        elif event.kind == "NetworkConnect":
            nid = f"socket:{obj.remote_host}:{obj.port}"
            self.add_node(nid, "socket", f"{obj.remote_host}:{obj.port}")
            self.add_edge(src, nid, "connected", event.time, [event.event_id])

    def add_cross_edge(self, *, src_session, dst_session, access_type, principal,
                       time, logon_event_id, auth_event_ids, src_host, dst_host,
                       alert_id=None) -> Optional[dict]:
        for e in self.cross_edges:
            if (e["logon_event_id"] == logon_event_id
                    and e["src_session"] == session_to_dict(src_session)):
                return None
        edge = {
            "src_session": session_to_dict(src_session),
            "dst_session": session_to_dict(dst_session),
            "access_type": access_type,
            "principal": principal.to_record(),
            "time": time,
            "logon_event_id": logon_event_id,
            "auth_event_ids": list(auth_event_ids),
            "src_host": src_host,
            "dst_host": dst_host,
            "alert_id": alert_id,
        }
        self.cross_edges.append(edge)
        hsrc, hdst = f"host:{src_host}", f"host:{dst_host}"
        self.add_node(hsrc, "host", src_host, host=src_host)
        self.add_node(hdst, "host", dst_host, host=dst_host)
        self.add_edge(hsrc, hdst, "moved_to", time,
                      [logon_event_id] + list(auth_event_ids))
        return edge

    def add_escalation(self, *, host, src_session, dst_session, time, reason,
                       event_ids) -> Optional[dict]:
        for e in self.escalations:
            if (e["src_session"] == session_to_dict(src_session)
                    and e["dst_session"] == session_to_dict(dst_session)):
                return None
        mark = {
            "host": host,
            "src_session": session_to_dict(src_session),
            "dst_session": session_to_dict(dst_session),
            "time": time,
            "reason": reason,
            "event_ids": list(event_ids),
        }
        self.escalations.append(mark)
        return mark

    # -- meta collapse --------------------------------------------------------

    def collapse_meta_nodes(self, patterns=DEFAULT_META_PATTERNS) -> int:
        """Fold known benign fanouts into meta nodes. Nodes that scored a
        TTP hit are never folded. Returns the number of nodes removed."""
        children = {}
        for e in self.edges:
            if e["kind"] == "spawned":
                children.setdefault(e["src"], []).append(e["dst"])
        removed = 0
        for pattern in patterns:
            for nid, node in list(self.nodes.items()):
                if node["kind"] != "process" or node.get("collapsed"):
                    continue
                if node.get("image") not in pattern.root_images:
                    continue
                members = [c for c in children.get(nid, [])
                           if c in self.nodes
                           and self.nodes[c].get("image") in pattern.member_images
                           and not self.nodes[c]["ttp_hit"]]
                if len(members) < pattern.min_size:
                    continue
                removed += self._fold(nid, members, pattern)
        return removed

    def _fold(self, root_id: str, members: list, pattern: MetaPattern) -> int:
        meta_id = f"meta:{pattern.name}:{root_id}"
        member_set = set(members)
        event_ids = []
        keep = []
        for e in self.edges:
            involved = e["src"] in member_set or e["dst"] in member_set
            if not involved:
                keep.append(e)
                continue
            event_ids.extend(e["event_ids"])
            src = meta_id if e["src"] in member_set else e["src"]
            dst = meta_id if e["dst"] in member_set else e["dst"]
            if src == dst == meta_id:
                continue
            keep.append({**e, "src": src, "dst": dst})
        host = self.nodes[root_id].get("host")
        node = self.add_node(meta_id, "meta",
                             f"{pattern.name} x{len(member_set)}", host=host)
        node["member_count"] = len(member_set)
        node["event_ids"] = sorted(set(event_ids))
        for m in member_set:
            del self.nodes[m]
        # dedupe folded parallel edges
        self.edges = []
        self._edge_keys = set()
        for e in keep:
            self.add_edge(e["src"], e["dst"], e["kind"], e["time"], e["event_ids"])
        return len(member_set)

    # -- export ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "alert_ids": self.alert_ids,
            "nodes": list(self.nodes.values()),
            "edges": self.edges,
            "cross_edges": self.cross_edges,
            "escalations": self.escalations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackGraph":
        graph = cls()
        graph.alert_ids = list(data.get("alert_ids", []))
        for node in data["nodes"]:
            graph.nodes[node["id"]] = dict(node)
        for e in data["edges"]:
            graph.add_edge(e["src"], e["dst"], e["kind"], e["time"],
                           e["event_ids"])
        graph.cross_edges = [dict(e) for e in data.get("cross_edges", [])]
        graph.escalations = [dict(e) for e in data.get("escalations", [])]
        return graph

    def to_dot(self) -> str:
        shape = {"process": "box", "file": "note", "socket": "oval",
                 "principal": "hexagon", "host": "house", "meta": "box3d"}
        lines = ["digraph attack {", "  rankdir=LR;", "  node [fontsize=10];"]
        by_host: dict[str, list] = {}
        floating = []
        for node in self.nodes.values():
            (by_host.setdefault(node["host"], []) if node.get("host")
             else floating).append(node)
        idx = {}

        def emit(node, indent):
            nid = f"n{len(idx)}"
            idx[node["id"]] = nid
            label = str(node["label"]).replace('"', "'")
            if node.get("session"):
                label += f"\\n{node['session']}"
            style = ' style=filled fillcolor="#ffcccc"' if node["ttp_hit"] else ""
            sess = f' session="{node["session"]}"' if node.get("session") else ""
            lines.append(f'{indent}{nid} [label="{label}" '
                         f'shape={shape.get(node["kind"], "box")}{style}{sess}];')

        for i, (host, nodes) in enumerate(sorted(by_host.items())):
            lines.append(f"  subgraph cluster_{i} {{")
            lines.append(f'    label="{host}";')
            for node in nodes:
                emit(node, "    ")
            lines.append("  }")
        for node in floating:
            emit(node, "  ")
        for e in self.edges:
            style = (' color=red penwidth=2 style=bold'
                     if e["kind"] == "moved_to" else "")
            lines.append(f'  {idx[e["src"]]} -> {idx[e["dst"]]} '
                         f'[label="{e["kind"]}"{style}];')
        lines.append("}")
        return "\n".join(lines)
