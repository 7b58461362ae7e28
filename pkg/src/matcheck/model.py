"""Domain model for annotated schematic blocks.

A block is a reusable netlist fragment: components wired to internal nets,
with a typed port boundary.  The interface types carry the electrical facts
(voltage envelopes, current budgets, logic thresholds, protocol roles) that
connection checking and merging run on.  Everything here is an immutable
value; constructors validate their invariants and raise :class:`ModelError`
on violation, so any object that exists is well-formed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Mapping, Optional

# Interface kinds.
POWER = "power"
GROUND = "ground"
GPIO = "gpio"
ANALOG = "analog"
I2C = "i2c"
SPI = "spi"
UART = "uart"

KINDS = (POWER, GROUND, GPIO, ANALOG, I2C, SPI, UART)
SUPPLY_KINDS = (POWER, GROUND)
DATA_KINDS = (GPIO, ANALOG, I2C, SPI, UART)
BUS_KINDS = (I2C, SPI, UART)

ROLE_CONTROLLER = "controller"
ROLE_PERIPHERAL = "peripheral"
ROLE_PULLUP = "pullup-provider"

ROLES = {
    I2C: (ROLE_CONTROLLER, ROLE_PERIPHERAL, ROLE_PULLUP),
    SPI: (ROLE_CONTROLLER, ROLE_PERIPHERAL),
    UART: ("dte", "dce"),
}

CURRENT_SUPPLIES = "supplies"
CURRENT_DRAWS = "draws"

#: Reserved no-connect token in component pin maps.
NC = "NC"

#: Name prefix reserved for rail nodes in the merged-net namespace.
RAIL_NET_PREFIX = "rail:"

_INSTANCE_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_+\-]*$")
_BLOCK_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.\-]*$")


class ModelError(ValueError):
    """A domain value violates one of its structural invariants."""


class ConfigError(ModelError):
    """A configuration selection does not fit the block it targets."""


class UnknownOption(ConfigError):
    pass


class UnknownVariant(ConfigError):
    pass


def valid_instance_name(name: object) -> bool:
    return isinstance(name, str) and bool(_INSTANCE_NAME_RE.match(name))


def valid_name(name: object) -> bool:
    """Identifier rule for nets, rails, ports, refdes, options, variants,
    edge ids and user net names.  Dots are excluded so qualified names
    (``instance.net``) stay unambiguous; ``NC`` is reserved."""
    return (
        isinstance(name, str)
        and bool(_NAME_RE.match(name))
        and name != NC
        and not name.startswith(RAIL_NET_PREFIX)
    )


def valid_block_id(name: object) -> bool:
    return isinstance(name, str) and bool(_BLOCK_ID_RE.match(name))


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ModelError(message)


def _finite_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


@dataclass(frozen=True)
class VoltageRange:
    """Closed voltage interval [min_volts, max_volts], both finite."""

    min_volts: float
    max_volts: float

    def __post_init__(self) -> None:
        _require(_finite_number(self.min_volts), "min_volts must be a finite number")
        _require(_finite_number(self.max_volts), "max_volts must be a finite number")
        _require(
            self.min_volts <= self.max_volts,
            "voltage range requires min_volts <= max_volts "
            f"(got [{self.min_volts}, {self.max_volts}])",
        )

    def contains(self, other: "VoltageRange") -> bool:
        return self.min_volts <= other.min_volts and other.max_volts <= self.max_volts

    def intersect(self, other: "VoltageRange") -> Optional["VoltageRange"]:
        lo = max(self.min_volts, other.min_volts)
        hi = min(self.max_volts, other.max_volts)
        if lo > hi:
            return None
        return VoltageRange(lo, hi)

    def is_zero(self) -> bool:
        return self.min_volts == 0.0 and self.max_volts == 0.0


def voltage_ranges_intersect(a: VoltageRange, b: VoltageRange) -> Optional[VoltageRange]:
    """Intersection of two ranges, or None when they are disjoint."""
    return a.intersect(b)


@dataclass(frozen=True)
class CurrentSpec:
    """A port's current contribution: it either supplies or draws up to
    max_milliamps on the net it is attached to."""

    kind: str
    max_milliamps: float

    def __post_init__(self) -> None:
        _require(
            self.kind in (CURRENT_SUPPLIES, CURRENT_DRAWS),
            f"current kind must be '{CURRENT_SUPPLIES}' or '{CURRENT_DRAWS}' (got {self.kind!r})",
        )
        _require(
            _finite_number(self.max_milliamps) and self.max_milliamps >= 0,
            "max_milliamps must be a finite number >= 0",
        )


@dataclass(frozen=True)
class LogicLevel:
    """Static logic thresholds: input low/high bounds and output drive bounds."""

    vil_max: float
    vih_min: float
    vol_max: float
    voh_min: float

    def __post_init__(self) -> None:
        for name in ("vil_max", "vih_min", "vol_max", "voh_min"):
            _require(_finite_number(getattr(self, name)), f"{name} must be a finite number")
        _require(self.vil_max < self.vih_min, "logic level requires vil_max < vih_min")
        _require(self.vol_max < self.voh_min, "logic level requires vol_max < voh_min")


@dataclass(frozen=True)
class InterfaceType:
    """The type of a port.

    Exactly which fields apply depends on ``kind``:

    * ``power``  — ``range`` (accepted supply window) and ``current``.
    * ``ground`` — nothing else.
    * ``gpio`` / ``analog`` — at most one of ``level`` (explicit thresholds)
      or ``range`` (absolute signal window).
    * ``i2c`` — ``role``; peripherals carry a non-empty 7-bit ``addresses`` set.
    * ``spi`` / ``uart`` — ``role``.
    """

    kind: str
    range: Optional[VoltageRange] = None
    current: Optional[CurrentSpec] = None
    level: Optional[LogicLevel] = None
    role: Optional[str] = None
    addresses: Optional[frozenset[int]] = None

    def __post_init__(self) -> None:
        _require(self.kind in KINDS, f"unknown interface kind {self.kind!r}")
        if self.kind == POWER:
            _require(self.range is not None, "power interface requires a voltage range")
            _require(self.current is not None, "power interface requires a current spec")
            _require(self.level is None, "power interface takes no logic level")
            _require(self.role is None and self.addresses is None,
                     "power interface takes no role or addresses")
        elif self.kind == GROUND:
            _require(
                self.range is None and self.current is None and self.level is None
                and self.role is None and self.addresses is None,
                "ground interface carries no attributes",
            )
        elif self.kind in (GPIO, ANALOG):
            _require(self.current is None, f"{self.kind} interface takes no current spec")
            _require(self.role is None and self.addresses is None,
                     f"{self.kind} interface takes no role or addresses")
            _require(
                self.level is None or self.range is None,
                f"{self.kind} interface takes a level or a range, not both",
            )
        else:  # bus kinds
            _require(self.range is None and self.current is None and self.level is None,
                     f"{self.kind} interface carries role information only")
            _require(
                self.role in ROLES[self.kind],
                f"{self.kind} role must be one of {', '.join(ROLES[self.kind])} (got {self.role!r})",
            )
            if self.kind == I2C and self.role == ROLE_PERIPHERAL:
                _require(
                    self.addresses is not None and len(self.addresses) > 0,
                    "i2c peripheral requires a non-empty address set",
                )
                for addr in self.addresses or ():
                    _require(
                        isinstance(addr, int) and not isinstance(addr, bool) and 0 <= addr <= 127,
                        f"i2c address must be a 7-bit integer (got {addr!r})",
                    )
            else:
                _require(self.addresses is None,
                         f"{self.kind} {self.role} interface takes no address set")


@dataclass(frozen=True)
class Port:
    """A typed boundary point of a block, bound to one internal net."""

    name: str
    iface: InterfaceType
    bound_net: str
    required: bool = False

    def __post_init__(self) -> None:
        _require(valid_name(self.name), f"invalid port name {self.name!r}")
        _require(valid_name(self.bound_net), f"invalid bound net {self.bound_net!r}")
        _require(isinstance(self.required, bool), "required must be a bool")


@dataclass(frozen=True)
class ComponentInstance:
    """One physical part inside a block.  ``pins`` maps pin name to an
    internal net name or the reserved ``NC`` token; it is normalized to
    pin-name order at construction (pin names, not positions, carry
    identity)."""

    refdes: str
    part_value: str
    footprint: str
    pins: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        _require(valid_name(self.refdes), f"invalid refdes {self.refdes!r}")
        _require(isinstance(self.part_value, str), "part_value must be a string")
        _require(isinstance(self.footprint, str), "footprint must be a string")
        seen = set()
        for pin, net in self.pins:
            _require(valid_name(pin), f"invalid pin name {pin!r} on {self.refdes}")
            _require(pin not in seen, f"duplicate pin {pin!r} on {self.refdes}")
            seen.add(pin)
            _require(
                net == NC or valid_name(net),
                f"invalid net {net!r} on pin {self.refdes}.{pin}",
            )
        object.__setattr__(self, "pins", tuple(sorted(self.pins)))

    def connected_nets(self) -> set[str]:
        return {net for _, net in self.pins if net != NC}


@dataclass(frozen=True)
class PortOverride:
    """Per-variant replacement of port attributes.  ``None`` fields are left
    untouched.  Setting ``level`` clears a declared ``range`` on gpio/analog
    ports and vice versa (the two are mutually exclusive on the port)."""

    port: str
    addresses: Optional[frozenset[int]] = None
    range: Optional[VoltageRange] = None
    level: Optional[LogicLevel] = None
    current: Optional[CurrentSpec] = None
    required: Optional[bool] = None

    def __post_init__(self) -> None:
        _require(valid_name(self.port), f"invalid port name {self.port!r} in override")
        _require(
            any(v is not None for v in (self.addresses, self.range, self.level,
                                        self.current, self.required)),
            f"override for port {self.port!r} changes nothing",
        )
        _require(self.level is None or self.range is None,
                 "override may set level or range, not both")


@dataclass(frozen=True)
class ComponentToggle:
    refdes: str
    enabled: bool

    def __post_init__(self) -> None:
        _require(valid_name(self.refdes), f"invalid refdes {self.refdes!r} in toggle")
        _require(isinstance(self.enabled, bool), "enabled must be a bool")


@dataclass(frozen=True)
class Variant:
    name: str
    default: bool = False
    port_overrides: tuple[PortOverride, ...] = ()
    component_toggles: tuple[ComponentToggle, ...] = ()

    def __post_init__(self) -> None:
        _require(valid_name(self.name), f"invalid variant name {self.name!r}")
        _require(isinstance(self.default, bool), "default must be a bool")
        object.__setattr__(self, "port_overrides",
                           tuple(sorted(self.port_overrides, key=lambda o: o.port)))
        object.__setattr__(self, "component_toggles",
                           tuple(sorted(self.component_toggles, key=lambda t: t.refdes)))
        _require(len({o.port for o in self.port_overrides}) == len(self.port_overrides),
                 f"variant {self.name!r} overrides a port twice")
        _require(len({t.refdes for t in self.component_toggles}) == len(self.component_toggles),
                 f"variant {self.name!r} toggles a component twice")


@dataclass(frozen=True)
class ConfigOption:
    """A named choice (e.g. an address-select strap) with one default variant."""

    name: str
    variants: tuple[Variant, ...]

    def __post_init__(self) -> None:
        _require(valid_name(self.name), f"invalid option name {self.name!r}")
        _require(len(self.variants) > 0, f"option {self.name!r} has no variants")
        object.__setattr__(self, "variants",
                           tuple(sorted(self.variants, key=lambda v: v.name)))
        _require(len({v.name for v in self.variants}) == len(self.variants),
                 f"option {self.name!r} has duplicate variant names")
        defaults = [v for v in self.variants if v.default]
        _require(len(defaults) == 1,
                 f"option {self.name!r} must mark exactly one default variant")

    def default_variant(self) -> Variant:
        return next(v for v in self.variants if v.default)

    def variant(self, name: str) -> Variant:
        for v in self.variants:
            if v.name == name:
                return v
        raise UnknownVariant(f"option {self.name!r} has no variant {name!r}")


@dataclass(frozen=True)
class SchematicBlock:
    """An annotated schematic fragment with a typed port boundary.

    All collections are normalized to canonical (identity-key) order at
    construction, so structural equality and canonical serialization agree
    regardless of declaration order.
    """

    block_id: str
    version: str
    components: tuple[ComponentInstance, ...]
    internal_nets: frozenset[str]
    ports: tuple[Port, ...]
    configs: tuple[ConfigOption, ...] = ()

    def __post_init__(self) -> None:
        _require(valid_block_id(self.block_id), f"invalid block_id {self.block_id!r}")
        _require(isinstance(self.version, str) and len(self.version) > 0,
                 "version must be a non-empty string")
        object.__setattr__(self, "components",
                           tuple(sorted(self.components, key=lambda c: c.refdes)))
        object.__setattr__(self, "ports", tuple(sorted(self.ports, key=lambda p: p.name)))
        object.__setattr__(self, "configs", tuple(sorted(self.configs, key=lambda c: c.name)))
        object.__setattr__(self, "internal_nets", frozenset(self.internal_nets))

        _require(len({c.refdes for c in self.components}) == len(self.components),
                 "duplicate refdes in block")
        _require(len({p.name for p in self.ports}) == len(self.ports),
                 "duplicate port name in block")
        _require(len({c.name for c in self.configs}) == len(self.configs),
                 "duplicate option name in block")
        for net in self.internal_nets:
            _require(valid_name(net), f"invalid net name {net!r}")

        referenced: set[str] = set()
        for comp in self.components:
            for pin, net in comp.pins:
                if net == NC:
                    continue
                _require(net in self.internal_nets,
                         f"pin {comp.refdes}.{pin} references unknown net {net!r}")
                referenced.add(net)
        port_names = {p.name for p in self.ports}
        for port in self.ports:
            _require(port.bound_net in self.internal_nets,
                     f"port {port.name!r} binds unknown net {port.bound_net!r}")
            referenced.add(port.bound_net)
        _require(referenced == set(self.internal_nets),
                 "every internal net must be referenced by a pin or a port "
                 f"(unreferenced: {sorted(set(self.internal_nets) - referenced)})")

        refdes_set = {c.refdes for c in self.components}
        ports_by_name = {p.name: p for p in self.ports}
        for option in self.configs:
            for variant in option.variants:
                for override in variant.port_overrides:
                    _require(override.port in port_names,
                             f"option {option.name!r} overrides unknown port {override.port!r}")
                    _check_override_applies(ports_by_name[override.port], override,
                                            option.name, variant.name)
                for toggle in variant.component_toggles:
                    _require(toggle.refdes in refdes_set,
                             f"option {option.name!r} toggles unknown component {toggle.refdes!r}")

    def port(self, name: str) -> Port:
        for p in self.ports:
            if p.name == name:
                return p
        raise KeyError(name)

    def has_port(self, name: str) -> bool:
        return any(p.name == name for p in self.ports)

    def option(self, name: str) -> ConfigOption:
        for c in self.configs:
            if c.name == name:
                return c
        raise UnknownOption(f"block {self.block_id!r} has no option {name!r}")


def _check_override_applies(port: Port, override: PortOverride,
                            option_name: str, variant_name: str) -> None:
    where = f"option {option_name!r} variant {variant_name!r}"
    kind = port.iface.kind
    if override.addresses is not None:
        _require(kind == I2C and port.iface.role == ROLE_PERIPHERAL,
                 f"{where}: addresses override applies only to i2c peripheral ports")
    if override.current is not None:
        _require(kind == POWER, f"{where}: current override applies only to power ports")
    if override.range is not None:
        _require(kind in (POWER, GPIO, ANALOG),
                 f"{where}: range override applies only to power/gpio/analog ports")
    if override.level is not None:
        _require(kind in (GPIO, ANALOG),
                 f"{where}: level override applies only to gpio/analog ports")


def _apply_override(port: Port, override: PortOverride) -> Port:
    iface = port.iface
    changes: dict[str, object] = {}
    if override.addresses is not None:
        changes["addresses"] = frozenset(override.addresses)
    if override.current is not None:
        changes["current"] = override.current
    if override.range is not None:
        changes["range"] = override.range
        if iface.kind in (GPIO, ANALOG):
            changes["level"] = None
    if override.level is not None:
        changes["level"] = override.level
        changes["range"] = None
    if changes:
        iface = replace(iface, **changes)
    required = port.required if override.required is None else override.required
    return Port(name=port.name, iface=iface, bound_net=port.bound_net, required=required)


def apply_config(block: SchematicBlock, selections: Mapping[str, str]) -> SchematicBlock:
    """Resolve a block against option selections.

    Unselected options take their default variant.  Overrides are applied in
    option-name order; disabled components are removed, their pins detached,
    and internal nets left with zero references are deleted.  The resolved
    block carries no configs (its choices are burned in).

    Raises :class:`UnknownOption` / :class:`UnknownVariant` for selections
    that do not fit the block.
    """
    option_names = {o.name for o in block.configs}
    for name in selections:
        if name not in option_names:
            raise UnknownOption(f"block {block.block_id!r} has no option {name!r}")
    chosen: list[Variant] = []
    for option in block.configs:  # already in canonical name order
        variant_name = selections.get(option.name)
        chosen.append(option.default_variant() if variant_name is None
                      else option.variant(variant_name))

    ports = {p.name: p for p in block.ports}
    enabled = {c.refdes: True for c in block.components}
    for variant in chosen:
        for override in variant.port_overrides:
            ports[override.port] = _apply_override(ports[override.port], override)
        for toggle in variant.component_toggles:
            enabled[toggle.refdes] = toggle.enabled

    components = tuple(c for c in block.components if enabled[c.refdes])
    referenced: set[str] = set()
    for comp in components:
        referenced |= comp.connected_nets()
    referenced |= {p.bound_net for p in ports.values()}
    nets = frozenset(n for n in block.internal_nets if n in referenced)
    return SchematicBlock(
        block_id=block.block_id,
        version=block.version,
        components=components,
        internal_nets=nets,
        ports=tuple(ports.values()),
        configs=(),
    )


def derive_logic_level(supply: VoltageRange) -> Optional[LogicLevel]:
    """Logic thresholds derived from a supply envelope [Vmin, Vmax] by the
    standard CMOS rule of thumb: vih_min = 0.7*Vmin, vil_max = 0.3*Vmax,
    voh_min = Vmin - 0.4, vol_max = 0.4.

    Returns None when the envelope is too low for the rule to produce
    ordered thresholds (sub-~1.4 V supplies).
    """
    vih_min = 0.7 * supply.min_volts
    vil_max = 0.3 * supply.max_volts
    voh_min = supply.min_volts - 0.4
    vol_max = 0.4
    if not (vil_max < vih_min and vol_max < voh_min):
        return None
    return LogicLevel(vil_max=vil_max, vih_min=vih_min, vol_max=vol_max, voh_min=voh_min)
