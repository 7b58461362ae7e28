"""Composition documents: block instances over a power-rail forest plus a
binary signal-edge graph.

Power distribution is not drawn as wires; supply ports attach to named
rails.  Data connections are binary edges between (instance, port)
endpoints — a bus is simply a connected component of edges.  Documents are
immutable values; edit operations validate, then return a new document, so
a failed edit leaves the original untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

from .diagnostics import (
    Diagnostic,
    ResolveError,
    make_diagnostic,
    subject_instance,
    subject_port,
    subject_rail,
)
from .model import (
    GROUND,
    POWER,
    SUPPLY_KINDS,
    ConfigError,
    InterfaceType,
    ModelError,
    Port,
    SchematicBlock,
    VoltageRange,
    _require,
    apply_config,
    valid_instance_name,
    valid_name,
)

Endpoint = tuple[str, str]  # (instance_name, port_name)


class EditError(ValueError):
    """An edit operation could not be applied; the document is unchanged."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class ResolveFailure(ValueError):
    """A composition does not resolve against the block library."""

    def __init__(self, errors: Sequence[ResolveError]):
        super().__init__("; ".join(f"{e.code}: {e.message}" for e in errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class PowerRail:
    """A named supply with a voltage envelope.  Ground rails are exactly
    [0, 0].  ``parent`` expresses derivation (e.g. 3V3 regulated from 5V)
    and must keep the rails a forest."""

    name: str
    voltage: VoltageRange
    parent: Optional[str] = None
    supply_milliamps: Optional[float] = None

    def __post_init__(self) -> None:
        _require(valid_name(self.name), f"invalid rail name {self.name!r}")
        if self.parent is not None:
            _require(valid_name(self.parent), f"invalid parent rail {self.parent!r}")
        if self.supply_milliamps is not None:
            _require(
                isinstance(self.supply_milliamps, (int, float))
                and not isinstance(self.supply_milliamps, bool)
                and self.supply_milliamps >= 0,
                "supply_milliamps must be a number >= 0",
            )

    def is_ground(self) -> bool:
        return self.voltage.is_zero()


@dataclass(frozen=True)
class BlockInstance:
    instance_name: str
    block_id: str
    version: str
    config_selections: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        _require(valid_instance_name(self.instance_name),
                 f"invalid instance name {self.instance_name!r}")
        _require(isinstance(self.block_id, str) and len(self.block_id) > 0,
                 "block_id must be a non-empty string")
        _require(isinstance(self.version, str) and len(self.version) > 0,
                 "version must be a non-empty string")
        object.__setattr__(self, "config_selections",
                           tuple(sorted(self.config_selections)))
        _require(len({k for k, _ in self.config_selections}) == len(self.config_selections),
                 f"instance {self.instance_name!r} selects an option twice")

    def selections(self) -> dict[str, str]:
        return dict(self.config_selections)


@dataclass(frozen=True)
class RailAttachment:
    instance_name: str
    port_name: str
    rail_name: str

    def __post_init__(self) -> None:
        _require(valid_instance_name(self.instance_name),
                 f"invalid instance name {self.instance_name!r}")
        _require(valid_name(self.port_name), f"invalid port name {self.port_name!r}")
        _require(valid_name(self.rail_name), f"invalid rail name {self.rail_name!r}")


@dataclass(frozen=True)
class SignalEdge:
    """A binary connection between two data ports.  Endpoints are stored in
    sorted order, so edge identity is order-insensitive."""

    edge_id: str
    endpoints: tuple[Endpoint, Endpoint]
    user_net_name: Optional[str] = None

    def __post_init__(self) -> None:
        _require(valid_name(self.edge_id), f"invalid edge id {self.edge_id!r}")
        a, b = self.endpoints
        for inst, port in (a, b):
            _require(valid_instance_name(inst), f"invalid instance name {inst!r} in edge")
            _require(valid_name(port), f"invalid port name {port!r} in edge")
        _require(a != b, f"edge {self.edge_id!r} connects a port to itself")
        object.__setattr__(self, "endpoints", tuple(sorted(self.endpoints)))
        if self.user_net_name is not None:
            _require(valid_name(self.user_net_name),
                     f"invalid user net name {self.user_net_name!r}")


@dataclass(frozen=True)
class CompositionDocument:
    """A complete design: instances, rails, attachments and edges.

    ``layout_hint`` is an opaque side channel for UI geometry; it has no
    semantic effect and round-trips through serialization untouched.
    """

    name: str
    instances: tuple[BlockInstance, ...] = ()
    rails: tuple[PowerRail, ...] = ()
    attachments: tuple[RailAttachment, ...] = ()
    edges: tuple[SignalEdge, ...] = ()
    layout_hint: Any = None

    def __post_init__(self) -> None:
        _require(valid_name(self.name), f"invalid composition name {self.name!r}")
        object.__setattr__(self, "instances",
                           tuple(sorted(self.instances, key=lambda i: i.instance_name)))
        object.__setattr__(self, "rails", tuple(sorted(self.rails, key=lambda r: r.name)))
        object.__setattr__(self, "attachments",
                           tuple(sorted(self.attachments,
                                        key=lambda a: (a.instance_name, a.port_name))))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.edge_id)))

        inst_names = [i.instance_name for i in self.instances]
        _require(len(set(inst_names)) == len(inst_names), "duplicate instance name")
        rail_names = [r.name for r in self.rails]
        _require(len(set(rail_names)) == len(rail_names), "duplicate rail name")
        rail_set = set(rail_names)
        inst_set = set(inst_names)

        for rail in self.rails:
            if rail.parent is not None:
                _require(rail.parent in rail_set,
                         f"rail {rail.name!r} has unknown parent {rail.parent!r}")
        _require(_rails_acyclic(self.rails), "rail parent references form a cycle")

        seen_pairs: set[Endpoint] = set()
        for att in self.attachments:
            _require(att.instance_name in inst_set,
                     f"attachment references unknown instance {att.instance_name!r}")
            _require(att.rail_name in rail_set,
                     f"attachment references unknown rail {att.rail_name!r}")
            pair = (att.instance_name, att.port_name)
            _require(pair not in seen_pairs,
                     f"port {att.instance_name}.{att.port_name} attached twice")
            seen_pairs.add(pair)

        edge_ids = [e.edge_id for e in self.edges]
        _require(len(set(edge_ids)) == len(edge_ids), "duplicate edge id")
        for edge in self.edges:
            for inst, _port in edge.endpoints:
                _require(inst in inst_set,
                         f"edge {edge.edge_id!r} references unknown instance {inst!r}")
            if edge.user_net_name is not None:
                _require(edge.user_net_name not in rail_set,
                         f"user net name {edge.user_net_name!r} collides with a rail name")

    # -- lookups ---------------------------------------------------------

    def instance(self, name: str) -> BlockInstance:
        for inst in self.instances:
            if inst.instance_name == name:
                return inst
        raise KeyError(name)

    def rail(self, name: str) -> PowerRail:
        for rail in self.rails:
            if rail.name == name:
                return rail
        raise KeyError(name)

    def has_instance(self, name: str) -> bool:
        return any(i.instance_name == name for i in self.instances)

    def has_rail(self, name: str) -> bool:
        return any(r.name == name for r in self.rails)

    def attachment_for(self, instance: str, port: str) -> Optional[RailAttachment]:
        for att in self.attachments:
            if att.instance_name == instance and att.port_name == port:
                return att
        return None

    def edge(self, edge_id: str) -> SignalEdge:
        for e in self.edges:
            if e.edge_id == edge_id:
                return e
        raise KeyError(edge_id)


def _rails_acyclic(rails: Sequence[PowerRail]) -> bool:
    parent = {r.name: r.parent for r in rails}
    for start in parent:
        seen = set()
        node: Optional[str] = start
        while node is not None:
            if node in seen:
                return False
            seen.add(node)
            node = parent.get(node)
    return True


@dataclass(frozen=True)
class ResolvedComposition:
    """A composition whose instances are bound to config-resolved blocks.

    ``blocks`` maps instance name to the resolved block (overrides applied,
    disabled components removed); ``source_blocks`` keeps the library
    originals, which still carry their config options (the I2C address
    search needs them).
    """

    doc: CompositionDocument
    blocks: Mapping[str, SchematicBlock]
    source_blocks: Mapping[str, SchematicBlock]

    def port(self, instance: str, port_name: str) -> Port:
        return self.blocks[instance].port(port_name)

    def iface(self, instance: str, port_name: str) -> InterfaceType:
        return self.blocks[instance].port(port_name).iface


def resolve(doc: CompositionDocument,
            library: Mapping[str, SchematicBlock]) -> ResolvedComposition:
    """Bind every instance to its library block and apply its config
    selections.  Collects all failures and raises :class:`ResolveFailure`
    rather than stopping at the first."""
    errors: list[ResolveError] = []
    blocks: dict[str, SchematicBlock] = {}
    sources: dict[str, SchematicBlock] = {}

    for inst in doc.instances:
        block = library.get(inst.block_id)
        if block is None:
            errors.append(ResolveError(
                "R001", subject_instance(inst.instance_name),
                f"instance {inst.instance_name!r} references unknown block "
                f"{inst.block_id!r}"))
            continue
        if block.version != inst.version:
            errors.append(ResolveError(
                "R001", subject_instance(inst.instance_name),
                f"instance {inst.instance_name!r} pins {inst.block_id!r} version "
                f"{inst.version!r} but the library provides {block.version!r}"))
            continue
        try:
            blocks[inst.instance_name] = apply_config(block, inst.selections())
            sources[inst.instance_name] = block
        except ConfigError as exc:
            errors.append(ResolveError(
                "R003", subject_instance(inst.instance_name),
                f"instance {inst.instance_name!r}: {exc}"))

    def port_of(inst_name: str, port_name: str) -> Optional[Port]:
        block = blocks.get(inst_name)
        if block is None or not block.has_port(port_name):
            return None
        return block.port(port_name)

    for att in doc.attachments:
        if att.instance_name not in blocks and doc.has_instance(att.instance_name):
            continue  # instance itself already failed
        port = port_of(att.instance_name, att.port_name)
        if port is None:
            errors.append(ResolveError(
                "R002", subject_port(att.instance_name, att.port_name),
                f"attachment references unknown port "
                f"{att.instance_name}.{att.port_name}"))
        elif port.iface.kind not in SUPPLY_KINDS:
            errors.append(ResolveError(
                "R004", subject_port(att.instance_name, att.port_name),
                f"attachment targets {port.iface.kind} port "
                f"{att.instance_name}.{att.port_name}; only power/ground ports "
                f"attach to rails"))

    for edge in doc.edges:
        for inst_name, port_name in edge.endpoints:
            if inst_name not in blocks and doc.has_instance(inst_name):
                continue
            port = port_of(inst_name, port_name)
            if port is None:
                errors.append(ResolveError(
                    "R002", subject_port(inst_name, port_name),
                    f"edge {edge.edge_id!r} references unknown port "
                    f"{inst_name}.{port_name}"))
            elif port.iface.kind in SUPPLY_KINDS:
                errors.append(ResolveError(
                    "R004", subject_port(inst_name, port_name),
                    f"edge {edge.edge_id!r} endpoint {inst_name}.{port_name} is a "
                    f"{port.iface.kind} port; power routing uses rail attachments"))

    if errors:
        raise ResolveFailure(sorted(errors, key=lambda e: (e.code, e.subject.render(),
                                                           e.message)))
    return ResolvedComposition(doc=doc, blocks=blocks, source_blocks=sources)


# -- automatic power attachment -----------------------------------------


def rail_candidates(iface: InterfaceType, rails: Sequence[PowerRail]) -> list[PowerRail]:
    """Rails an unattached supply port could be auto-attached to.

    Ground ports go to ground rails ([0,0]); power ports go to non-ground
    rails whose whole envelope sits inside the port's accepted range
    (containment, not mere overlap — a rail that only partially fits is not
    a safe default).
    """
    if iface.kind == GROUND:
        return [r for r in rails if r.is_ground()]
    if iface.kind == POWER:
        accepted = iface.range
        assert accepted is not None
        return [r for r in rails if not r.is_ground() and accepted.contains(r.voltage)]
    return []


def _unattached_supply_ports(resolved: ResolvedComposition) -> list[tuple[str, Port]]:
    out = []
    for inst in resolved.doc.instances:
        block = resolved.blocks[inst.instance_name]
        for port in block.ports:
            if port.iface.kind not in SUPPLY_KINDS:
                continue
            if resolved.doc.attachment_for(inst.instance_name, port.name) is None:
                out.append((inst.instance_name, port))
    return out


def attachment_warnings(resolved: ResolvedComposition) -> list[Diagnostic]:
    """W101/W102 for every still-unattached supply port."""
    diags = []
    for inst_name, port in _unattached_supply_ports(resolved):
        candidates = rail_candidates(port.iface, resolved.doc.rails)
        if len(candidates) > 1:
            names = ", ".join(r.name for r in candidates)
            diags.append(make_diagnostic(
                "W101", (subject_port(inst_name, port.name),),
                f"auto-attach for {inst_name}.{port.name} is ambiguous; "
                f"candidates: {names}"))
        elif not candidates:
            diags.append(make_diagnostic(
                "W102", (subject_port(inst_name, port.name),),
                f"no rail fits {inst_name}.{port.name}; attach it manually or "
                f"add a suitable rail"))
    return diags


def auto_attach_power(doc: CompositionDocument,
                      library: Mapping[str, SchematicBlock],
                      ) -> tuple[CompositionDocument, list[Diagnostic]]:
    """Attach every unattached supply port whose candidate rail is unique.

    Existing attachments are never touched; ambiguous ports get W101 (with
    the candidate list), portless ports get W102.  Idempotent: a second run
    changes nothing and reports the same diagnostics.
    """
    resolved = resolve(doc, library)
    new_attachments = list(doc.attachments)
    diags: list[Diagnostic] = []
    for inst_name, port in _unattached_supply_ports(resolved):
        candidates = rail_candidates(port.iface, doc.rails)
        if len(candidates) == 1:
            new_attachments.append(RailAttachment(
                instance_name=inst_name, port_name=port.name,
                rail_name=candidates[0].name))
        elif len(candidates) > 1:
            names = ", ".join(r.name for r in candidates)
            diags.append(make_diagnostic(
                "W101", (subject_port(inst_name, port.name),),
                f"auto-attach for {inst_name}.{port.name} is ambiguous; "
                f"candidates: {names}"))
        else:
            diags.append(make_diagnostic(
                "W102", (subject_port(inst_name, port.name),),
                f"no rail fits {inst_name}.{port.name}; attach it manually or "
                f"add a suitable rail"))
    new_doc = replace(doc, attachments=tuple(new_attachments))
    return new_doc, sorted(diags, key=lambda d: d.sort_key())


# -- edit operations -----------------------------------------------------


def add_instance(doc: CompositionDocument, instance_name: str, block_id: str,
                 version: str,
                 selections: Optional[Mapping[str, str]] = None) -> CompositionDocument:
    if doc.has_instance(instance_name):
        raise EditError("X002", f"instance {instance_name!r} already exists")
    try:
        inst = BlockInstance(instance_name=instance_name, block_id=block_id,
                             version=version,
                             config_selections=tuple(sorted((selections or {}).items())))
    except ModelError as exc:
        raise EditError("X003", str(exc)) from None
    return replace(doc, instances=doc.instances + (inst,))


def remove_instance(doc: CompositionDocument, instance_name: str) -> CompositionDocument:
    """Remove an instance and cascade: its attachments and any edge touching
    it go too."""
    if not doc.has_instance(instance_name):
        raise EditError("X001", f"unknown instance {instance_name!r}")
    return replace(
        doc,
        instances=tuple(i for i in doc.instances if i.instance_name != instance_name),
        attachments=tuple(a for a in doc.attachments if a.instance_name != instance_name),
        edges=tuple(e for e in doc.edges
                    if all(inst != instance_name for inst, _ in e.endpoints)),
    )


def add_rail(doc: CompositionDocument, name: str, voltage: VoltageRange,
             parent: Optional[str] = None,
             supply_milliamps: Optional[float] = None) -> CompositionDocument:
    if doc.has_rail(name):
        raise EditError("X002", f"rail {name!r} already exists")
    if parent is not None and not doc.has_rail(parent):
        raise EditError("X001", f"unknown parent rail {parent!r}")
    try:
        rail = PowerRail(name=name, voltage=voltage, parent=parent,
                         supply_milliamps=supply_milliamps)
    except ModelError as exc:
        raise EditError("X003", str(exc)) from None
    return replace(doc, rails=doc.rails + (rail,))


def remove_rail(doc: CompositionDocument, name: str) -> CompositionDocument:
    """Remove a rail; its attachments are cascaded away and child rails are
    promoted to roots."""
    if not doc.has_rail(name):
        raise EditError("X001", f"unknown rail {name!r}")
    rails = tuple(
        replace(r, parent=None) if r.parent == name else r
        for r in doc.rails if r.name != name
    )
    return replace(
        doc,
        rails=rails,
        attachments=tuple(a for a in doc.attachments if a.rail_name != name),
    )


def attach_power(doc: CompositionDocument, instance_name: str, port_name: str,
                 rail_name: str) -> CompositionDocument:
    """Attach a supply port to a rail, replacing any previous attachment of
    that port.  Port-kind validity is established at resolve time."""
    if not doc.has_instance(instance_name):
        raise EditError("X001", f"unknown instance {instance_name!r}")
    if not doc.has_rail(rail_name):
        raise EditError("X001", f"unknown rail {rail_name!r}")
    try:
        att = RailAttachment(instance_name=instance_name, port_name=port_name,
                             rail_name=rail_name)
    except ModelError as exc:
        raise EditError("X003", str(exc)) from None
    rest = tuple(a for a in doc.attachments
                 if not (a.instance_name == instance_name and a.port_name == port_name))
    return replace(doc, attachments=rest + (att,))


def detach_power(doc: CompositionDocument, instance_name: str,
                 port_name: str) -> CompositionDocument:
    if doc.attachment_for(instance_name, port_name) is None:
        raise EditError("X001", f"{instance_name}.{port_name} is not attached")
    return replace(doc, attachments=tuple(
        a for a in doc.attachments
        if not (a.instance_name == instance_name and a.port_name == port_name)))


def remove_edge(doc: CompositionDocument, edge_id: str) -> CompositionDocument:
    if not any(e.edge_id == edge_id for e in doc.edges):
        raise EditError("X001", f"unknown edge {edge_id!r}")
    return replace(doc, edges=tuple(e for e in doc.edges if e.edge_id != edge_id))


def select_config(doc: CompositionDocument, instance_name: str, option: str,
                  variant: str) -> CompositionDocument:
    """Record an option selection on an instance.  Whether the option and
    variant exist on the block is established at resolve time (the document
    alone has no library)."""
    if not doc.has_instance(instance_name):
        raise EditError("X001", f"unknown instance {instance_name!r}")
    if not (valid_name(option) and valid_name(variant)):
        raise EditError("X003", f"invalid option/variant name {option!r}={variant!r}")
    updated = []
    for inst in doc.instances:
        if inst.instance_name == instance_name:
            sels = dict(inst.config_selections)
            sels[option] = variant
            inst = replace(inst, config_selections=tuple(sorted(sels.items())))
        updated.append(inst)
    return replace(doc, instances=tuple(updated))


def next_edge_id(doc: CompositionDocument) -> str:
    """Deterministic fresh edge id: smallest eN not in use."""
    used = {e.edge_id for e in doc.edges}
    n = 1
    while f"e{n}" in used:
        n += 1
    return f"e{n}"


def connect_signal(doc: CompositionDocument,
                   library: Mapping[str, SchematicBlock],
                   a: Endpoint, b: Endpoint,
                   user_net_name: Optional[str] = None,
                   ) -> tuple[CompositionDocument, str]:
    """Draw a signal edge between two data ports, allocating a fresh edge id.

    Errors: X001 for unknown endpoints, C001 when an endpoint is a
    power/ground port, C002 when the endpoints are already directly
    connected (order-insensitive).
    """
    for inst_name, port_name in (a, b):
        if not doc.has_instance(inst_name):
            raise EditError("X001", f"unknown instance {inst_name!r}")
        inst = doc.instance(inst_name)
        block = library.get(inst.block_id)
        if block is None or block.version != inst.version:
            raise EditError("X001", f"instance {inst_name!r} does not resolve "
                                    f"against the library")
        resolved_block = apply_config(block, inst.selections())
        if not resolved_block.has_port(port_name):
            raise EditError("X001", f"unknown port {inst_name}.{port_name}")
        if resolved_block.port(port_name).iface.kind in SUPPLY_KINDS:
            raise EditError(
                "C001", f"{inst_name}.{port_name} is a "
                f"{resolved_block.port(port_name).iface.kind} port; attach it to a "
                f"rail instead of drawing an edge")
    if a == b:
        raise EditError("X003", "an edge needs two distinct endpoints")
    pair = tuple(sorted((a, b)))
    for edge in doc.edges:
        if edge.endpoints == pair:
            raise EditError("C002", f"endpoints already connected by edge "
                                    f"{edge.edge_id!r}")
    edge_id = next_edge_id(doc)
    try:
        edge = SignalEdge(edge_id=edge_id, endpoints=(a, b),
                          user_net_name=user_net_name)
        new_doc = replace(doc, edges=doc.edges + (edge,))
    except ModelError as exc:
        raise EditError("X003", str(exc)) from None
    return new_doc, edge_id
