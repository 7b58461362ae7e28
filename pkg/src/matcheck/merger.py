"""Flattening a checked composition into one merged netlist.

Each instance's internal nets are seeded as separate union-find nodes;
signal edges unify the nets their endpoint ports bind, and rail
attachments unify port nets with the rail's node.  Classes become merged
nets, named by precedence: rail name, then the smallest user-assigned edge
name, then the smallest qualified internal net name.  Components keep
their identity under a ``<instance>.<refdes>`` qualification — nothing is
renumbered and support circuitry is never deduplicated.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .composition import ResolvedComposition
from .diagnostics import Diagnostic
from .model import NC
from .parsing import SCHEMA_VERSION, canonical_json_bytes


class MergeRefused(Exception):
    """The composition carries error-severity diagnostics; nothing merged."""

    def __init__(self, blocking: Sequence[Diagnostic]):
        codes = sorted({d.code for d in blocking})
        super().__init__(f"merge refused; blocking diagnostics: {', '.join(codes)}")
        self.blocking = list(blocking)
        self.codes = codes


class InternalInconsistency(AssertionError):
    """A bug guard: the unification produced an impossible state (for
    example two distinct rails in one net class)."""


# Union-find node keys.  Rail nodes live under a reserved prefix that the
# identifier rules keep out of user net names.
_Node = tuple  # ("net", instance, net) | ("rail", rail_name)


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[_Node, _Node] = {}

    def add(self, node: _Node) -> None:
        self.parent.setdefault(node, node)

    def find(self, node: _Node) -> _Node:
        root = node
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[node] != root:  # path compression
            self.parent[node], node = root, self.parent[node]
        return root

    def union(self, a: _Node, b: _Node) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def classes(self) -> list[list[_Node]]:
        byroot: dict[_Node, list[_Node]] = {}
        for node in self.parent:
            byroot.setdefault(self.find(node), []).append(node)
        return [sorted(members) for members in byroot.values()]


@dataclass(frozen=True)
class MergedComponent:
    refdes: str  # qualified: "<instance>.<refdes>"
    part_value: str
    footprint: str
    pins: tuple[tuple[str, str], ...]  # (pin, merged net name or NC)


@dataclass(frozen=True)
class MergedSchematic:
    design_name: str
    components: tuple[MergedComponent, ...]
    nets: Mapping[str, tuple[tuple[str, str], ...]]  # name -> ((refdes, pin), ...)
    provenance: Mapping[str, tuple[str, str, str]]  # refdes -> (instance, block_id, version)


class NetNameAllocator:
    """Assigns merged-net names by precedence: rail > user net name >
    smallest qualified internal name.  A pure function of the class
    contents; a user name claimed by two disconnected classes goes to the
    class with the smallest qualified member, the rest fall back."""

    def __init__(self) -> None:
        self.taken: set[str] = set()

    def allocate(self, rail: Optional[str], user_names: Sequence[str],
                 fallback: str) -> str:
        if rail is not None:
            if rail in self.taken:
                raise InternalInconsistency(f"rail name {rail!r} allocated twice")
            self.taken.add(rail)
            return rail
        for name in sorted(user_names):
            if name not in self.taken:
                self.taken.add(name)
                return name
        if fallback in self.taken:
            raise InternalInconsistency(f"fallback name {fallback!r} allocated twice")
        self.taken.add(fallback)
        return fallback


def merge(resolved: ResolvedComposition,
          diagnostics: Sequence[Diagnostic]) -> MergedSchematic:
    """Flatten a resolved composition.

    ``diagnostics`` is the output of ``check``; any error-severity entry
    raises :class:`MergeRefused` (warnings never block).  The result is
    invariant under permutation of the input lists and conserves every
    component of every resolved instance.
    """
    blocking = [d for d in diagnostics if d.severity == "error"]
    if blocking:
        raise MergeRefused(blocking)

    doc = resolved.doc
    uf = _UnionFind()
    for inst in doc.instances:
        block = resolved.blocks[inst.instance_name]
        for net in sorted(block.internal_nets):
            uf.add(("net", inst.instance_name, net))
    for rail in doc.rails:
        uf.add(("rail", rail.name))

    for edge in doc.edges:
        (ia, pa), (ib, pb) = edge.endpoints
        net_a = resolved.port(ia, pa).bound_net
        net_b = resolved.port(ib, pb).bound_net
        uf.union(("net", ia, net_a), ("net", ib, net_b))
    for att in doc.attachments:
        net = resolved.port(att.instance_name, att.port_name).bound_net
        uf.union(("net", att.instance_name, net), ("rail", att.rail_name))

    # user net names propagate to the class containing their edge
    user_names: dict[_Node, set[str]] = {}
    for edge in doc.edges:
        if edge.user_net_name is None:
            continue
        (ia, pa), _ = edge.endpoints
        root = uf.find(("net", ia, resolved.port(ia, pa).bound_net))
        user_names.setdefault(root, set()).add(edge.user_net_name)

    # pins per class
    pins_of: dict[_Node, list[tuple[str, str]]] = {}
    for inst in doc.instances:
        block = resolved.blocks[inst.instance_name]
        for comp in block.components:
            qualified = f"{inst.instance_name}.{comp.refdes}"
            for pin, net in comp.pins:
                if net == NC:
                    continue
                root = uf.find(("net", inst.instance_name, net))
                pins_of.setdefault(root, []).append((qualified, pin))

    # split classes into rail-named and deferred; drop orphans (no pins)
    named: list[tuple[str, _Node, list[tuple[str, str]]]] = []
    deferred: list[tuple[str, _Node, list[tuple[str, str]]]] = []
    for members in uf.classes():
        root = uf.find(members[0])
        pins = sorted(pins_of.get(root, []))
        if not pins:
            continue
        rails = [m[1] for m in members if m[0] == "rail"]
        if len(rails) > 1:
            raise InternalInconsistency(
                f"net class contains {len(rails)} rails: {', '.join(sorted(rails))}")
        net_members = [m for m in members if m[0] == "net"]
        fallback = min(f"{inst}.{net}" for _, inst, net in net_members)
        if rails:
            named.append((rails[0], root, pins))
        else:
            deferred.append((fallback, root, pins))

    return _assemble(resolved, uf, named, deferred, user_names)


def _assemble(resolved: ResolvedComposition, uf: _UnionFind,
              named: list, deferred: list, user_names: dict) -> MergedSchematic:
    allocator = NetNameAllocator()
    root_name: dict[_Node, str] = {}
    nets: dict[str, tuple[tuple[str, str], ...]] = {}
    for rail_name, root, pins in sorted(named, key=lambda t: t[0]):
        name = allocator.allocate(rail_name, (), "")
        root_name[root] = name
        nets[name] = tuple(pins)
    for fallback, root, pins in sorted(deferred, key=lambda t: t[0]):
        name = allocator.allocate(None, sorted(user_names.get(root, ())), fallback)
        root_name[root] = name
        nets[name] = tuple(pins)

    doc = resolved.doc
    components: list[MergedComponent] = []
    provenance: dict[str, tuple[str, str, str]] = {}
    for inst in doc.instances:
        block = resolved.blocks[inst.instance_name]
        for comp in block.components:
            qualified = f"{inst.instance_name}.{comp.refdes}"
            pins = []
            for pin, net in comp.pins:
                if net == NC:
                    pins.append((pin, NC))
                    continue
                root = uf.find(("net", inst.instance_name, net))
                name = root_name.get(root)
                if name is None:
                    # only reachable for a pin on a class with no pins — impossible
                    raise InternalInconsistency(f"pin {qualified}.{pin} on unnamed net")
                pins.append((pin, name))
            components.append(MergedComponent(
                refdes=qualified, part_value=comp.part_value,
                footprint=comp.footprint, pins=tuple(pins)))
            provenance[qualified] = (inst.instance_name, inst.block_id, inst.version)

    components.sort(key=lambda c: c.refdes)
    return MergedSchematic(
        design_name=doc.name,
        components=tuple(components),
        nets={name: nets[name] for name in sorted(nets)},
        provenance={k: provenance[k] for k in sorted(provenance)},
    )


def flat_json_obj(merged: MergedSchematic) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "design_name": merged.design_name,
        "components": [
            {"refdes": c.refdes, "part_value": c.part_value,
             "footprint": c.footprint,
             "pins": [{"pin": pin, "net": net} for pin, net in c.pins]}
            for c in merged.components
        ],
        "nets": {name: [[refdes, pin] for refdes, pin in pins]
                 for name, pins in merged.nets.items()},
        "provenance": {
            refdes: {"instance": inst, "block_id": block_id, "version": version}
            for refdes, (inst, block_id, version) in merged.provenance.items()
        },
    }


def export_flat_json(merged: MergedSchematic) -> bytes:
    """Canonical flattened-netlist bytes (stable across runs and input
    orderings)."""
    return canonical_json_bytes(flat_json_obj(merged))


def export_bom_csv(merged: MergedSchematic) -> bytes:
    """RFC-4180 CSV with one row per component, sorted by qualified refdes."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["refdes", "part_value", "footprint"])
    for comp in merged.components:  # already sorted by refdes
        writer.writerow([comp.refdes, comp.part_value, comp.footprint])
    return buffer.getvalue().encode("utf-8")
