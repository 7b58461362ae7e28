"""Connection checking: bus grouping, electrical propagation, rule catalog.

``check`` is a pure function of a resolved composition.  It derives wire
groups from the signal-edge graph, propagates supply envelopes into
per-instance operating voltages and per-port logic levels, then runs every
rule.  Output is deterministically ordered by (severity, code, subjects),
so equal designs produce byte-identical diagnostic lists.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

from .composition import ResolvedComposition, attachment_warnings
from .diagnostics import (
    Diagnostic,
    make_diagnostic,
    subject_port,
    subject_rail,
)
from .model import (
    DATA_KINDS,
    GROUND,
    I2C,
    POWER,
    ROLE_CONTROLLER,
    ROLE_PERIPHERAL,
    ROLE_PULLUP,
    SPI,
    SUPPLY_KINDS,
    CURRENT_DRAWS,
    CURRENT_SUPPLIES,
    LogicLevel,
    SchematicBlock,
    VoltageRange,
    apply_config,
    derive_logic_level,
)

Endpoint = tuple[str, str]


@dataclass(frozen=True)
class BusGroup:
    """A connected component of the signal-edge graph.

    ``protocol`` is the plurality interface kind of the member ports;
    ``mixed`` flags components whose members disagree on the kind (those
    carry E001 and are skipped by the protocol rules).
    """

    protocol: str
    members: tuple[Endpoint, ...]
    edge_ids: tuple[str, ...]
    mixed: bool


def group_buses(resolved: ResolvedComposition) -> list[BusGroup]:
    """Connected components of the signal-edge graph, deterministically
    ordered by their smallest member.  Ports with no edges form no group."""
    adjacency: dict[Endpoint, set[Endpoint]] = {}
    edges_at: dict[Endpoint, set[str]] = {}
    for edge in resolved.doc.edges:
        a, b = edge.endpoints
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
        edges_at.setdefault(a, set()).add(edge.edge_id)
        edges_at.setdefault(b, set()).add(edge.edge_id)

    groups: list[BusGroup] = []
    visited: set[Endpoint] = set()
    for start in sorted(adjacency):
        if start in visited:
            continue
        stack = [start]
        members: set[Endpoint] = set()
        while stack:
            node = stack.pop()
            if node in members:
                continue
            members.add(node)
            stack.extend(adjacency[node] - members)
        visited |= members
        member_list = tuple(sorted(members))
        edge_ids = tuple(sorted(set().union(*(edges_at[m] for m in member_list))))
        kinds = [resolved.iface(inst, port).kind for inst, port in member_list]
        counts: dict[str, int] = {}
        for kind in kinds:
            counts[kind] = counts.get(kind, 0) + 1
        protocol = max(sorted(counts), key=lambda k: counts[k])
        groups.append(BusGroup(protocol=protocol, members=member_list,
                               edge_ids=edge_ids, mixed=len(counts) > 1))
    return groups


@dataclass(frozen=True)
class PropagationState:
    """Electrical facts derived from the rail forest.

    ``operating_voltage`` maps instance name to the intersection of its
    attached rails' envelopes with the power ports' accepted ranges (None
    when no power port is attached, or when the intersection is empty —
    the latter instances are listed in ``supply_conflicts``).  Port logic
    levels are block-declared where present, otherwise derived from the
    operating voltage; derived ports are listed in ``derived_levels``.
    Rail loads are summed in canonical attachment order.
    """

    operating_voltage: Mapping[str, Optional[VoltageRange]]
    supply_conflicts: frozenset[str]
    port_levels: Mapping[Endpoint, Optional[LogicLevel]]
    derived_levels: frozenset[Endpoint]
    rail_draw: Mapping[str, float]
    rail_supply: Mapping[str, float]


def propagate(resolved: ResolvedComposition) -> PropagationState:
    doc = resolved.doc
    rails = {r.name: r for r in doc.rails}

    operating: dict[str, Optional[VoltageRange]] = {}
    conflicts: set[str] = set()
    for inst in doc.instances:
        name = inst.instance_name
        envelope: Optional[VoltageRange] = None
        attached_any = False
        conflict = False
        for port in resolved.blocks[name].ports:
            if port.iface.kind != POWER:
                continue
            attachment = doc.attachment_for(name, port.name)
            if attachment is None:
                continue
            attached_any = True
            assert port.iface.range is not None
            term = rails[attachment.rail_name].voltage.intersect(port.iface.range)
            if term is None:
                conflict = True
                break
            envelope = term if envelope is None else envelope.intersect(term)
            if envelope is None:
                conflict = True
                break
        if conflict:
            conflicts.add(name)
            operating[name] = None
        else:
            operating[name] = envelope if attached_any else None

    levels: dict[Endpoint, Optional[LogicLevel]] = {}
    derived: set[Endpoint] = set()
    for inst in doc.instances:
        name = inst.instance_name
        for port in resolved.blocks[name].ports:
            if port.iface.kind not in DATA_KINDS:
                continue
            key = (name, port.name)
            if port.iface.level is not None:
                levels[key] = port.iface.level
            else:
                supply = operating[name]
                level = derive_logic_level(supply) if supply is not None else None
                levels[key] = level
                if level is not None:
                    derived.add(key)

    draw = {r.name: 0.0 for r in doc.rails}
    supply_sum = {r.name: 0.0 for r in doc.rails}
    for attachment in doc.attachments:  # canonical order: deterministic float sums
        iface = resolved.iface(attachment.instance_name, attachment.port_name)
        if iface.kind != POWER or iface.current is None:
            continue
        if iface.current.kind == CURRENT_DRAWS:
            draw[attachment.rail_name] += iface.current.max_milliamps
        elif iface.current.kind == CURRENT_SUPPLIES:
            supply_sum[attachment.rail_name] += iface.current.max_milliamps
    supply = {
        r.name: (r.supply_milliamps if r.supply_milliamps is not None
                 else supply_sum[r.name])
        for r in doc.rails
    }

    return PropagationState(
        operating_voltage=operating,
        supply_conflicts=frozenset(conflicts),
        port_levels=levels,
        derived_levels=frozenset(derived),
        rail_draw=draw,
        rail_supply=supply,
    )


def _fmt(value: float) -> str:
    return format(value, "g")


def _fmt_volts(rng: VoltageRange) -> str:
    return f"[{_fmt(rng.min_volts)}, {_fmt(rng.max_volts)}] V"


def _fmt_addr(addr: int) -> str:
    return f"0x{addr:02x}"


# -- rules ---------------------------------------------------------------


def _rule_group_protocols(resolved: ResolvedComposition,
                          groups: list[BusGroup]) -> list[Diagnostic]:
    diags = []
    for group in groups:
        if group.mixed:
            kinds = sorted({resolved.iface(i, p).kind for i, p in group.members})
            diags.append(make_diagnostic(
                "E001", tuple(subject_port(i, p) for i, p in group.members),
                f"signal group mixes interface kinds: {', '.join(kinds)}"))
            continue
        if group.protocol in (I2C, SPI):
            controllers = [m for m in group.members
                           if resolved.iface(*m).role == ROLE_CONTROLLER]
            if len(controllers) != 1:
                subjects = controllers if len(controllers) > 1 else list(group.members)
                diags.append(make_diagnostic(
                    "E002", tuple(subject_port(i, p) for i, p in subjects),
                    f"{group.protocol} group has {len(controllers)} controllers; "
                    f"exactly one is required"))
    return diags


def _pair_voltage_problem(resolved: ResolvedComposition, state: PropagationState,
                          a: Endpoint, b: Endpoint) -> Optional[str]:
    """The first voltage-compatibility violation between two connected data
    ports, as a message, or None when the pair is fine."""
    level_a = state.port_levels.get(a)
    level_b = state.port_levels.get(b)

    # 1. explicit threshold checks, both drive directions
    for driver, dlevel, receiver, rlevel in ((a, level_a, b, level_b),
                                             (b, level_b, a, level_a)):
        if dlevel is None or rlevel is None:
            continue
        if dlevel.voh_min < rlevel.vih_min:
            return (f"driver {driver[0]}.{driver[1]} high level "
                    f"(voh_min {_fmt(dlevel.voh_min)} V) misses receiver "
                    f"{receiver[0]}.{receiver[1]} threshold "
                    f"(vih_min {_fmt(rlevel.vih_min)} V)")
        if dlevel.vol_max > rlevel.vil_max:
            return (f"driver {driver[0]}.{driver[1]} low level "
                    f"(vol_max {_fmt(dlevel.vol_max)} V) exceeds receiver "
                    f"{receiver[0]}.{receiver[1]} threshold "
                    f"(vil_max {_fmt(rlevel.vil_max)} V)")

    # 2. drive against a declared absolute window
    for driver, dlevel, receiver in ((a, level_a, b), (b, level_b, a)):
        window = resolved.iface(*receiver).range
        if dlevel is None or window is None:
            continue
        if dlevel.voh_min > window.max_volts:
            return (f"driver {driver[0]}.{driver[1]} high level "
                    f"(voh_min {_fmt(dlevel.voh_min)} V) exceeds the absolute "
                    f"window {_fmt_volts(window)} of {receiver[0]}.{receiver[1]}")
        if dlevel.vol_max < window.min_volts:
            return (f"driver {driver[0]}.{driver[1]} low level "
                    f"(vol_max {_fmt(dlevel.vol_max)} V) falls below the absolute "
                    f"window {_fmt_volts(window)} of {receiver[0]}.{receiver[1]}")

    # 3. two declared windows that cannot meet
    window_a = resolved.iface(*a).range
    window_b = resolved.iface(*b).range
    if window_a is not None and window_b is not None:
        if window_a.intersect(window_b) is None:
            return (f"signal windows {_fmt_volts(window_a)} of {a[0]}.{a[1]} and "
                    f"{_fmt_volts(window_b)} of {b[0]}.{b[1]} are disjoint")

    # 4. disjoint supplies while a level had to be derived from the supply
    op_a = state.operating_voltage.get(a[0])
    op_b = state.operating_voltage.get(b[0])
    if (op_a is not None and op_b is not None
            and op_a.intersect(op_b) is None
            and (a in state.derived_levels or b in state.derived_levels)):
        return (f"{a[0]} operates at {_fmt_volts(op_a)} and {b[0]} at "
                f"{_fmt_volts(op_b)}; the supplies are disjoint and the signal "
                f"levels are supply-derived")
    return None


def _rule_voltage(resolved: ResolvedComposition, groups: list[BusGroup],
                  state: PropagationState) -> list[Diagnostic]:
    diags = []
    for group in groups:
        if group.mixed:
            continue
        for a, b in itertools.combinations(group.members, 2):
            problem = _pair_voltage_problem(resolved, state, a, b)
            if problem is not None:
                diags.append(make_diagnostic(
                    "E003", (subject_port(*a), subject_port(*b)), problem))
    return diags


def _rule_power_overdraw(resolved: ResolvedComposition,
                         state: PropagationState) -> list[Diagnostic]:
    diags = []
    for rail in resolved.doc.rails:
        draw = state.rail_draw[rail.name]
        supply = state.rail_supply[rail.name]
        if draw > supply:
            diags.append(make_diagnostic(
                "E004", (subject_rail(rail.name),),
                f"draw {_fmt(draw)} mA exceeds supply {_fmt(supply)} mA on rail "
                f"{rail.name}"))
    return diags


def achievable_address_sets(block: SchematicBlock, selections: Mapping[str, str],
                            port_name: str) -> list[frozenset[int]]:
    """Every address set the given i2c port can take under some combination
    of the block's config variants.  Deterministic order; the currently
    selected combination is always part of the space."""
    option_names = [o.name for o in block.configs]
    spaces = [[v.name for v in o.variants] for o in block.configs]
    seen: set[frozenset[int]] = set()
    out: list[frozenset[int]] = []
    for combo in itertools.product(*spaces):
        resolved = apply_config(block, dict(zip(option_names, combo)))
        addresses = resolved.port(port_name).iface.addresses or frozenset()
        if addresses not in seen:
            seen.add(addresses)
            out.append(addresses)
    return sorted(out, key=lambda s: sorted(s))


def _disjoint_assignment_exists(choice_lists: list[list[frozenset[int]]]) -> bool:
    def rec(index: int, chosen: list[frozenset[int]]) -> bool:
        if index == len(choice_lists):
            return True
        for candidate in choice_lists[index]:
            if all(not (candidate & prior) for prior in chosen):
                if rec(index + 1, chosen + [candidate]):
                    return True
        return False

    return rec(0, [])


def _rule_i2c_addresses(resolved: ResolvedComposition,
                        groups: list[BusGroup]) -> list[Diagnostic]:
    diags = []
    for group in groups:
        if group.mixed or group.protocol != I2C:
            continue
        peripherals = [m for m in group.members
                       if resolved.iface(*m).role == ROLE_PERIPHERAL]
        if len(peripherals) < 2:
            continue
        choice_lists = []
        for inst_name, port_name in peripherals:
            source = resolved.source_blocks[inst_name]
            selections = resolved.doc.instance(inst_name).selections()
            choice_lists.append(achievable_address_sets(source, selections, port_name))
        if _disjoint_assignment_exists(choice_lists):
            continue
        current = {m: resolved.iface(*m).addresses or frozenset() for m in peripherals}
        conflicting_addrs: set[int] = set()
        conflicted_ports: set[Endpoint] = set()
        for (ma, mb) in itertools.combinations(peripherals, 2):
            overlap = current[ma] & current[mb]
            if overlap:
                conflicting_addrs |= overlap
                conflicted_ports |= {ma, mb}
        diags.append(make_diagnostic(
            "E005",
            tuple(subject_port(*m) for m in sorted(conflicted_ports)),
            "no combination of config variants gives these peripherals disjoint "
            "i2c addresses; conflicting: "
            + ", ".join(_fmt_addr(a) for a in sorted(conflicting_addrs))))
    return diags


def _rule_required_ports(resolved: ResolvedComposition) -> list[Diagnostic]:
    connected: set[Endpoint] = set()
    for edge in resolved.doc.edges:
        connected.update(edge.endpoints)
    diags = []
    for inst in resolved.doc.instances:
        name = inst.instance_name
        for port in resolved.blocks[name].ports:
            if not port.required:
                continue
            if port.iface.kind in SUPPLY_KINDS:
                if resolved.doc.attachment_for(name, port.name) is None:
                    diags.append(make_diagnostic(
                        "E006", (subject_port(name, port.name),),
                        f"required {port.iface.kind} port {name}.{port.name} is "
                        f"attached to no rail"))
            else:
                if (name, port.name) not in connected:
                    diags.append(make_diagnostic(
                        "E006", (subject_port(name, port.name),),
                        f"required {port.iface.kind} port {name}.{port.name} has "
                        f"no connection"))
    return diags


def _rule_attachment_ranges(resolved: ResolvedComposition) -> list[Diagnostic]:
    diags = []
    ground_window = VoltageRange(0.0, 0.0)
    for attachment in resolved.doc.attachments:
        iface = resolved.iface(attachment.instance_name, attachment.port_name)
        if iface.kind == POWER:
            accepted = iface.range
        elif iface.kind == GROUND:
            accepted = ground_window
        else:
            continue  # resolve() already rejected these
        assert accepted is not None
        rail = resolved.doc.rail(attachment.rail_name)
        if rail.voltage.intersect(accepted) is None:
            diags.append(make_diagnostic(
                "E007",
                (subject_port(attachment.instance_name, attachment.port_name),
                 subject_rail(attachment.rail_name)),
                f"rail {rail.name} at {_fmt_volts(rail.voltage)} is outside the "
                f"accepted range {_fmt_volts(accepted)} of "
                f"{attachment.instance_name}.{attachment.port_name}"))
    return diags


def _rule_i2c_pullups(resolved: ResolvedComposition,
                      groups: list[BusGroup]) -> list[Diagnostic]:
    diags = []
    for group in groups:
        if group.mixed or group.protocol != I2C:
            continue
        if any(resolved.iface(*m).role == ROLE_PULLUP for m in group.members):
            continue
        diags.append(make_diagnostic(
            "W103", tuple(subject_port(*m) for m in group.members),
            "i2c group has no pullup-provider member; the open-drain bus needs "
            "pull-ups"))
    return diags


def _rule_floating_optional(resolved: ResolvedComposition,
                            groups: list[BusGroup]) -> list[Diagnostic]:
    protocols = {g.protocol for g in groups if not g.mixed}
    if not protocols:
        return []
    connected: set[Endpoint] = set()
    for edge in resolved.doc.edges:
        connected.update(edge.endpoints)
    diags = []
    for inst in resolved.doc.instances:
        name = inst.instance_name
        for port in resolved.blocks[name].ports:
            if port.required or port.iface.kind not in DATA_KINDS:
                continue
            if (name, port.name) in connected:
                continue
            if port.iface.kind in protocols:
                diags.append(make_diagnostic(
                    "W104", (subject_port(name, port.name),),
                    f"optional {port.iface.kind} port {name}.{port.name} is "
                    f"unconnected while a {port.iface.kind} group exists"))
    return diags


def check(resolved: ResolvedComposition) -> list[Diagnostic]:
    """Run the full rule catalog; deterministic order, no early exit."""
    groups = group_buses(resolved)
    state = propagate(resolved)
    diags: list[Diagnostic] = []
    diags += _rule_group_protocols(resolved, groups)
    diags += _rule_voltage(resolved, groups, state)
    diags += _rule_power_overdraw(resolved, state)
    diags += _rule_i2c_addresses(resolved, groups)
    diags += _rule_required_ports(resolved)
    diags += _rule_attachment_ranges(resolved)
    diags += attachment_warnings(resolved)
    diags += _rule_i2c_pullups(resolved, groups)
    diags += _rule_floating_optional(resolved, groups)
    return sorted(diags, key=lambda d: d.sort_key())


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)
