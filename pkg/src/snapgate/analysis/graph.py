"""Ancilla transition graph and the path-independence check.

Nodes are ancilla states (optionally split by cavity parity sector); each
edge carries the logical operator enacted on the encoded subsystem and its
kind (coherent drive or decoherence jump).  The protocol is path-independent
when every closed loop composes to the logical identity, so the measured
final ancilla state alone determines the applied operation.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Optional

import numpy as np


@dataclasses.dataclass(frozen=True)
class GraphEdge:
    frm: str
    to: str
    kind: str  # "drive" | "jump"
    action: np.ndarray

    def __post_init__(self):
        if self.kind not in ("drive", "jump"):
            raise ValueError("edge kind must be 'drive' or 'jump'")
        mat = np.asarray(self.action, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("edge action must be a square matrix")
        object.__setattr__(self, "action", mat)


@dataclasses.dataclass(frozen=True)
class TransitionGraph:
    nodes: tuple
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        dims = {e.action.shape[0] for e in self.edges}
        if len(dims) > 1:
            raise ValueError("all edge actions must act on the same logical space")
        for e in self.edges:
            if e.frm not in self.nodes or e.to not in self.nodes:
                raise ValueError(f"edge {e.frm}->{e.to} references unknown nodes")

    @property
    def dim(self) -> int:
        return self.edges[0].action.shape[0] if self.edges else 1

    @staticmethod
    def from_json(text: str) -> "TransitionGraph":
        payload = json.loads(text)
        edges = []
        for entry in payload["edges"]:
            edges.append(GraphEdge(
                frm=entry["from"], to=entry["to"], kind=entry["kind"],
                action=_action_from_spec(entry["action"]),
            ))
        return TransitionGraph(nodes=tuple(payload["nodes"]), edges=tuple(edges))

    def to_json(self) -> str:
        payload = {
            "nodes": list(self.nodes),
            "edges": [
                {"from": e.frm, "to": e.to, "kind": e.kind,
                 "action": {"type": "matrix",
                            "re": e.action.real.tolist(),
                            "im": e.action.imag.tolist()}}
                for e in self.edges
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _action_from_spec(spec) -> np.ndarray:
    kind = spec["type"]
    if kind == "identity":
        return np.eye(int(spec.get("dim", 2)), dtype=complex)
    if kind == "logical_z_rotation":
        theta = float(spec["theta"])
        return np.diag([1.0, np.exp(1j * theta)])
    if kind == "matrix":
        return np.asarray(spec["re"], dtype=float) + 1j * np.asarray(spec.get("im", 0.0), dtype=float)
    raise ValueError(f"unknown action type {kind!r}")


@dataclasses.dataclass(frozen=True)
class PathIndependenceReport:
    passed: bool
    violations: tuple  # of (loop node tuple, net action ndarray)

    def describe(self) -> str:
        if self.passed:
            return "path independence holds: every basis loop composes to the identity"
        lines = ["path independence violated:"]
        for loop, action in self.violations:
            lines.append(f"  loop {' -> '.join(loop)} has net logical action\n{np.round(action, 6)}")
        return "\n".join(lines)


def _is_identity_up_to_phase(mat: np.ndarray, tol: float) -> bool:
    d = mat.shape[0]
    tr = np.trace(mat)
    if abs(tr) < 1e-12:
        return False
    phase = tr / abs(tr)
    return bool(np.max(np.abs(mat - phase * np.eye(d))) < tol)


def check_path_independence(graph: TransitionGraph, start: Optional[str] = None,
                            tol: float = 1e-9) -> PathIndependenceReport:
    """Enumerate a spanning-tree cycle basis and compose each loop's action.

    Every edge action must be unitary on its support; drive edges must come
    in inverse pairs.  Basis-loop identity implies identity for all loops.
    """
    if not graph.edges:
        return PathIndependenceReport(passed=True, violations=())
    d = graph.dim
    eye = np.eye(d)
    for e in graph.edges:
        if np.max(np.abs(e.action.conj().T @ e.action - eye)) > 1e-10:
            raise ValueError(f"edge {e.frm}->{e.to} action is not unitary")
    for e in graph.edges:
        if e.kind != "drive":
            continue
        partners = [o for o in graph.edges if o.kind == "drive" and o.frm == e.to and o.to == e.frm]
        if not any(_is_identity_up_to_phase(o.action @ e.action, 1e-9) for o in partners):
            raise ValueError(f"drive edge {e.frm}->{e.to} lacks an inverse partner")

    start = start or graph.nodes[0]
    # undirected adjacency carrying (edge, forward?) annotations
    adj = {n: [] for n in graph.nodes}
    for e in graph.edges:
        adj[e.frm].append((e.to, e, True))
        adj[e.to].append((e.frm, e, False))

    # BFS spanning tree from the start node
    parent = {start: None}
    order = [start]
    queue = [start]
    while queue:
        node = queue.pop(0)
        for other, edge, forward in adj[node]:
            if other not in parent:
                parent[other] = (node, edge, forward)
                order.append(other)
                queue.append(other)
    reachable = set(parent)

    def action_along(edge: GraphEdge, forward: bool) -> np.ndarray:
        return edge.action if forward else edge.action.conj().T

    def path_action_from_start(node: str) -> np.ndarray:
        # composed action walking start -> node through the tree
        chain = []
        cur = node
        while parent[cur] is not None:
            prev, edge, forward = parent[cur]
            chain.append((edge, forward))
            cur = prev
        out = np.eye(d, dtype=complex)
        for edge, forward in reversed(chain):
            out = action_along(edge, forward) @ out
        return out

    def node_path(node: str) -> list:
        chain = [node]
        cur = node
        while parent[cur] is not None:
            cur = parent[cur][0]
            chain.append(cur)
        return list(reversed(chain))

    tree_edges = {id(info[1]) for info in parent.values() if info is not None}
    violations = []
    for e in graph.edges:
        if id(e) in tree_edges or e.frm not in reachable or e.to not in reachable:
            continue
        # loop: start -> frm, edge, to -> start
        to_frm = path_action_from_start(e.frm)
        to_to = path_action_from_start(e.to)
        loop_action = to_to.conj().T @ e.action @ to_frm
        if not _is_identity_up_to_phase(loop_action, tol):
            loop_nodes = tuple(node_path(e.frm)) + (e.to,)
            violations.append((loop_nodes, loop_action))
    return PathIndependenceReport(passed=not violations, violations=tuple(violations))


def protocol_graph(theta: float, include_eg_relaxation: bool = False) -> TransitionGraph:
    """The gate's ancilla transition graph: drives g<->f carrying the logical
    rotation, relaxation f->e carrying identity, optionally the second-order
    e->g relaxation that closes a non-trivial loop."""
    s = np.diag([1.0, np.exp(1j * theta)])
    ident = np.eye(2, dtype=complex)
    edges = [
        GraphEdge("g", "f", "drive", s),
        GraphEdge("f", "g", "drive", s.conj().T),
        GraphEdge("f", "e", "jump", ident),
    ]
    if include_eg_relaxation:
        edges.append(GraphEdge("e", "g", "jump", ident))
    return TransitionGraph(nodes=("g", "e", "f"), edges=tuple(edges))
