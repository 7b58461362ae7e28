"""Reading and writing the on-disk formats.

Two document kinds: block packages (``*.block.json``) and compositions
(``*.mat.json``), both JSON with a ``"schema": 1`` version key and a strict
schema — unknown keys are rejected so typos fail loudly.  Parsers never
throw anything but :class:`ParseFailure`; every finding carries a JSON
pointer into the input.  Serialization is canonical: object keys sorted,
arrays in identity-key order, so equal values produce identical bytes.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from .composition import (
    BlockInstance,
    CompositionDocument,
    PowerRail,
    RailAttachment,
    SignalEdge,
)
from .diagnostics import ParseDiagnostic
from .model import (
    ANALOG,
    GPIO,
    GROUND,
    I2C,
    KINDS,
    NC,
    POWER,
    ROLES,
    ROLE_PERIPHERAL,
    SPI,
    UART,
    ComponentInstance,
    ComponentToggle,
    ConfigOption,
    CurrentSpec,
    InterfaceType,
    LogicLevel,
    ModelError,
    Port,
    PortOverride,
    SchematicBlock,
    Variant,
    VoltageRange,
    valid_block_id,
    valid_instance_name,
    valid_name,
)

SCHEMA_VERSION = 1

BLOCK_SUFFIX = ".block.json"
COMPOSITION_SUFFIX = ".mat.json"
FLAT_SUFFIX = ".flat.json"


class ParseFailure(ValueError):
    """The input does not parse; carries the full diagnostic list."""

    def __init__(self, diagnostics: list[ParseDiagnostic]):
        super().__init__("; ".join(f"{d.code} at {d.path or '/'}: {d.message}"
                                   for d in diagnostics[:4])
                         + ("" if len(diagnostics) <= 4 else " …"))
        self.diagnostics = diagnostics


class _DuplicateKey(Exception):
    def __init__(self, key: str):
        self.key = key


def _strict_pairs(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise _DuplicateKey(key)
        seen.add(key)
    return dict(pairs)


def _reject_constant(token: str):
    raise ValueError(f"non-finite number {token}")


def _escape_pointer(part: object) -> str:
    return str(part).replace("~", "~0").replace("/", "~1")


def _join(path: str, *parts: object) -> str:
    for part in parts:
        path = f"{path}/{_escape_pointer(part)}"
    return path


class _Ctx:
    """Diagnostic collector for one parse run."""

    def __init__(self) -> None:
        self.diags: list[ParseDiagnostic] = []

    def error(self, code: str, path: str, message: str) -> None:
        self.diags.append(ParseDiagnostic(code=code, path=path, message=message))

    # -- shape helpers ---------------------------------------------------

    def check_keys(self, obj: dict, path: str, required: tuple[str, ...],
                   optional: tuple[str, ...]) -> bool:
        ok = True
        for key in sorted(obj):
            if key not in required and key not in optional:
                self.error("P002", _join(path, key), f"unknown key {key!r}")
                ok = False
        for key in required:
            if key not in obj or obj[key] is None:
                self.error("P001", path, f"missing required key {key!r}")
                ok = False
        return ok

    def get_obj(self, obj: dict, key: str, path: str) -> Optional[dict]:
        value = obj.get(key)
        if value is None:
            return None
        if not isinstance(value, dict):
            self.error("P005", _join(path, key), f"{key!r} must be an object")
            return None
        return value

    def get_list(self, obj: dict, key: str, path: str) -> Optional[list]:
        value = obj.get(key)
        if value is None:
            return None
        if not isinstance(value, list):
            self.error("P005", _join(path, key), f"{key!r} must be an array")
            return None
        return value

    def get_str(self, obj: dict, key: str, path: str) -> Optional[str]:
        value = obj.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            self.error("P005", _join(path, key), f"{key!r} must be a string")
            return None
        return value

    def get_num(self, obj: dict, key: str, path: str) -> Optional[float]:
        value = obj.get(key)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.error("P005", _join(path, key), f"{key!r} must be a number")
            return None
        return value

    def get_bool(self, obj: dict, key: str, path: str) -> Optional[bool]:
        value = obj.get(key)
        if value is None:
            return None
        if not isinstance(value, bool):
            self.error("P005", _join(path, key), f"{key!r} must be a boolean")
            return None
        return value

    def name(self, value: Optional[str], path: str, what: str) -> Optional[str]:
        if value is None:
            return None
        if not valid_name(value):
            self.error("P005", path, f"invalid {what} {value!r}")
            return None
        return value


def _load_root(data: bytes | str, ctx: _Ctx) -> Optional[dict]:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            ctx.error("P001", "", f"input is not valid UTF-8: {exc}")
            return None
    else:
        text = data
    try:
        root = json.loads(text, object_pairs_hook=_strict_pairs,
                          parse_constant=_reject_constant)
    except _DuplicateKey as exc:
        ctx.error("P004", "", f"duplicate key {exc.key!r} in object")
        return None
    except RecursionError:
        ctx.error("P001", "", "invalid JSON: nesting too deep")
        return None
    except ValueError as exc:
        ctx.error("P001", "", f"invalid JSON: {exc}")
        return None
    if not isinstance(root, dict):
        ctx.error("P001", "", "top level must be an object")
        return None
    return root


def _check_schema_version(root: dict, ctx: _Ctx) -> None:
    version = root.get("schema")
    if isinstance(version, bool) or not isinstance(version, int) or version != SCHEMA_VERSION:
        ctx.error("P001", "/schema",
                  f"unsupported schema version {version!r} (expected {SCHEMA_VERSION})")


# ----------------------------------------------------------------------
# block packages
# ----------------------------------------------------------------------


def _walk_voltage_range(obj: dict, path: str, ctx: _Ctx) -> Optional[VoltageRange]:
    if not ctx.check_keys(obj, path, ("min_volts", "max_volts"), ()):
        return None
    lo = ctx.get_num(obj, "min_volts", path)
    hi = ctx.get_num(obj, "max_volts", path)
    if lo is None or hi is None:
        return None
    if lo > hi:
        ctx.error("P005", path, f"voltage range [{lo}, {hi}] has min above max")
        return None
    try:
        return VoltageRange(lo, hi)
    except ModelError as exc:
        ctx.error("P005", path, str(exc))
        return None


def _walk_current(obj: dict, path: str, ctx: _Ctx) -> Optional[CurrentSpec]:
    if not ctx.check_keys(obj, path, ("kind", "max_milliamps"), ()):
        return None
    kind = ctx.get_str(obj, "kind", path)
    amount = ctx.get_num(obj, "max_milliamps", path)
    if kind is None or amount is None:
        return None
    try:
        return CurrentSpec(kind=kind, max_milliamps=amount)
    except ModelError as exc:
        ctx.error("P005", path, str(exc))
        return None


def _walk_level(obj: dict, path: str, ctx: _Ctx) -> Optional[LogicLevel]:
    fields = ("vil_max", "vih_min", "vol_max", "voh_min")
    if not ctx.check_keys(obj, path, fields, ()):
        return None
    values = [ctx.get_num(obj, f, path) for f in fields]
    if any(v is None for v in values):
        return None
    try:
        return LogicLevel(*values)  # type: ignore[arg-type]
    except ModelError as exc:
        ctx.error("P005", path, str(exc))
        return None


def _walk_iface(obj: dict, path: str, ctx: _Ctx) -> Optional[InterfaceType]:
    kind = ctx.get_str(obj, "kind", path)
    if kind is None:
        ctx.error("P001", path, "missing required key 'kind'")
        return None
    if kind not in KINDS:
        ctx.error("P005", _join(path, "kind"), f"unknown interface kind {kind!r}")
        return None

    if kind == POWER:
        if not ctx.check_keys(obj, path, ("kind", "range", "current"), ()):
            return None
        range_obj = ctx.get_obj(obj, "range", path)
        current_obj = ctx.get_obj(obj, "current", path)
        rng = _walk_voltage_range(range_obj, _join(path, "range"), ctx) if range_obj else None
        cur = _walk_current(current_obj, _join(path, "current"), ctx) if current_obj else None
        if rng is None or cur is None:
            return None
        return InterfaceType(kind=POWER, range=rng, current=cur)

    if kind == GROUND:
        if not ctx.check_keys(obj, path, ("kind",), ()):
            return None
        return InterfaceType(kind=GROUND)

    if kind in (GPIO, ANALOG):
        if not ctx.check_keys(obj, path, ("kind",), ("level", "range")):
            return None
        level_obj = ctx.get_obj(obj, "level", path)
        range_obj = ctx.get_obj(obj, "range", path)
        if level_obj is not None and range_obj is not None:
            ctx.error("P005", path, f"{kind} interface takes 'level' or 'range', not both")
            return None
        level = _walk_level(level_obj, _join(path, "level"), ctx) if level_obj else None
        rng = _walk_voltage_range(range_obj, _join(path, "range"), ctx) if range_obj else None
        if (level_obj is not None and level is None) or (range_obj is not None and rng is None):
            return None
        return InterfaceType(kind=kind, level=level, range=rng)

    # bus kinds
    if kind == I2C:
        if not ctx.check_keys(obj, path, ("kind", "role"), ("addresses",)):
            return None
    else:
        if not ctx.check_keys(obj, path, ("kind", "role"), ()):
            return None
    role = ctx.get_str(obj, "role", path)
    if role is None:
        return None
    if role not in ROLES[kind]:
        ctx.error("P005", _join(path, "role"),
                  f"{kind} role must be one of {', '.join(ROLES[kind])} (got {role!r})")
        return None
    addresses: Optional[frozenset[int]] = None
    if kind == I2C:
        raw = obj.get("addresses")
        if role == ROLE_PERIPHERAL:
            if raw is None:
                ctx.error("P001", path, "i2c peripheral requires 'addresses'")
                return None
            addresses = _walk_addresses(raw, _join(path, "addresses"), ctx)
            if addresses is None:
                return None
        elif raw is not None:
            ctx.error("P005", _join(path, "addresses"),
                      f"addresses apply only to i2c peripherals (role is {role!r})")
            return None
    try:
        return InterfaceType(kind=kind, role=role, addresses=addresses)
    except ModelError as exc:
        ctx.error("P005", path, str(exc))
        return None


def _walk_addresses(raw: Any, path: str, ctx: _Ctx) -> Optional[frozenset[int]]:
    if not isinstance(raw, list):
        ctx.error("P005", path, "'addresses' must be an array of integers")
        return None
    out = set()
    ok = True
    for i, item in enumerate(raw):
        if isinstance(item, bool) or not isinstance(item, int) or not (0 <= item <= 127):
            ctx.error("P005", _join(path, i),
                      f"i2c address must be a 7-bit integer (got {item!r})")
            ok = False
            continue
        if item in out:
            ctx.error("P004", _join(path, i), f"duplicate i2c address {item}")
            ok = False
            continue
        out.add(item)
    if not ok:
        return None
    if not out:
        ctx.error("P005", path, "i2c peripheral requires a non-empty address set")
        return None
    return frozenset(out)


def _walk_component(obj: Any, path: str, ctx: _Ctx,
                    nets: set[str]) -> Optional[ComponentInstance]:
    if not isinstance(obj, dict):
        ctx.error("P005", path, "component must be an object")
        return None
    if not ctx.check_keys(obj, path, ("refdes", "part_value", "footprint", "pins"), ()):
        return None
    refdes = ctx.name(ctx.get_str(obj, "refdes", path), _join(path, "refdes"), "refdes")
    part_value = ctx.get_str(obj, "part_value", path)
    footprint = ctx.get_str(obj, "footprint", path)
    pins_raw = ctx.get_list(obj, "pins", path)
    if refdes is None or part_value is None or footprint is None or pins_raw is None:
        return None
    pins: list[tuple[str, str]] = []
    seen_pins: set[str] = set()
    ok = True
    for i, pin_obj in enumerate(pins_raw):
        ppath = _join(path, "pins", i)
        if not isinstance(pin_obj, dict):
            ctx.error("P005", ppath, "pin must be an object")
            ok = False
            continue
        if not ctx.check_keys(pin_obj, ppath, ("pin", "net"), ()):
            ok = False
            continue
        pin = ctx.name(ctx.get_str(pin_obj, "pin", ppath), _join(ppath, "pin"), "pin name")
        net = ctx.get_str(pin_obj, "net", ppath)
        if pin is None or net is None:
            ok = False
            continue
        if pin in seen_pins:
            ctx.error("P004", _join(ppath, "pin"), f"duplicate pin {pin!r} on {refdes}")
            ok = False
            continue
        seen_pins.add(pin)
        if net != NC:
            if not valid_name(net):
                ctx.error("P005", _join(ppath, "net"), f"invalid net {net!r}")
                ok = False
                continue
            if net not in nets:
                ctx.error("P003", _join(ppath, "net"),
                          f"pin {refdes}.{pin} references undeclared net {net!r}")
                ok = False
                continue
        pins.append((pin, net))
    if not ok:
        return None
    try:
        return ComponentInstance(refdes=refdes, part_value=part_value,
                                 footprint=footprint, pins=tuple(pins))
    except ModelError as exc:
        ctx.error("P005", path, str(exc))
        return None


def _walk_port(obj: Any, path: str, ctx: _Ctx, nets: set[str]) -> Optional[Port]:
    if not isinstance(obj, dict):
        ctx.error("P005", path, "port must be an object")
        return None
    if not ctx.check_keys(obj, path, ("name", "iface", "bound_net"), ("required",)):
        return None
    name = ctx.name(ctx.get_str(obj, "name", path), _join(path, "name"), "port name")
    iface_obj = ctx.get_obj(obj, "iface", path)
    bound_net = ctx.get_str(obj, "bound_net", path)
    required = ctx.get_bool(obj, "required", path)
    if name is None or iface_obj is None or bound_net is None:
        return None
    iface = _walk_iface(iface_obj, _join(path, "iface"), ctx)
    if iface is None:
        return None
    if bound_net not in nets:
        ctx.error("P003", _join(path, "bound_net"),
                  f"port {name!r} binds undeclared net {bound_net!r}")
        return None
    try:
        return Port(name=name, iface=iface, bound_net=bound_net,
                    required=bool(required) if required is not None else False)
    except ModelError as exc:
        ctx.error("P005", path, str(exc))
        return None


def _walk_override(obj: Any, path: str, ctx: _Ctx) -> Optional[PortOverride]:
    if not isinstance(obj, dict):
        ctx.error("P005", path, "port override must be an object")
        return None
    if not ctx.check_keys(obj, path, ("port",),
                          ("addresses", "range", "level", "current", "required")):
        return None
    port = ctx.name(ctx.get_str(obj, "port", path), _join(path, "port"), "port name")
    if port is None:
        return None
    addresses = None
    if obj.get("addresses") is not None:
        addresses = _walk_addresses(obj["addresses"], _join(path, "addresses"), ctx)
        if addresses is None:
            return None
    rng = lvl = cur = None
    if obj.get("range") is not None:
        range_obj = ctx.get_obj(obj, "range", path)
        rng = _walk_voltage_range(range_obj, _join(path, "range"), ctx) if range_obj else None
        if rng is None:
            return None
    if obj.get("level") is not None:
        level_obj = ctx.get_obj(obj, "level", path)
        lvl = _walk_level(level_obj, _join(path, "level"), ctx) if level_obj else None
        if lvl is None:
            return None
    if obj.get("current") is not None:
        current_obj = ctx.get_obj(obj, "current", path)
        cur = _walk_current(current_obj, _join(path, "current"), ctx) if current_obj else None
        if cur is None:
            return None
    required = ctx.get_bool(obj, "required", path)
    try:
        return PortOverride(port=port, addresses=addresses, range=rng, level=lvl,
                            current=cur, required=required)
    except ModelError as exc:
        ctx.error("P005", path, str(exc))
        return None


def _walk_config(obj: Any, path: str, ctx: _Ctx) -> Optional[ConfigOption]:
    if not isinstance(obj, dict):
        ctx.error("P005", path, "config option must be an object")
        return None
    if not ctx.check_keys(obj, path, ("name", "variants"), ()):
        return None
    name = ctx.name(ctx.get_str(obj, "name", path), _join(path, "name"), "option name")
    variants_raw = ctx.get_list(obj, "variants", path)
    if name is None or variants_raw is None:
        return None
    variants: list[Variant] = []
    seen: set[str] = set()
    ok = True
    for i, vobj in enumerate(variants_raw):
        vpath = _join(path, "variants", i)
        if not isinstance(vobj, dict):
            ctx.error("P005", vpath, "variant must be an object")
            ok = False
            continue
        if not ctx.check_keys(vobj, vpath, ("name",),
                              ("default", "port_overrides", "component_toggles")):
            ok = False
            continue
        vname = ctx.name(ctx.get_str(vobj, "name", vpath), _join(vpath, "name"),
                         "variant name")
        if vname is None:
            ok = False
            continue
        if vname in seen:
            ctx.error("P004", _join(vpath, "name"), f"duplicate variant {vname!r}")
            ok = False
            continue
        seen.add(vname)
        default = ctx.get_bool(vobj, "default", vpath) or False
        overrides: list[PortOverride] = []
        toggles: list[ComponentToggle] = []
        for j, oobj in enumerate(vobj.get("port_overrides") or []):
            override = _walk_override(oobj, _join(vpath, "port_overrides", j), ctx)
            if override is None:
                ok = False
            else:
                overrides.append(override)
        for j, tobj in enumerate(vobj.get("component_toggles") or []):
            tpath = _join(vpath, "component_toggles", j)
            if not isinstance(tobj, dict):
                ctx.error("P005", tpath, "component toggle must be an object")
                ok = False
                continue
            if not ctx.check_keys(tobj, tpath, ("refdes", "enabled"), ()):
                ok = False
                continue
            refdes = ctx.name(ctx.get_str(tobj, "refdes", tpath),
                              _join(tpath, "refdes"), "refdes")
            enabled = ctx.get_bool(tobj, "enabled", tpath)
            if refdes is None or enabled is None:
                ok = False
                continue
            toggles.append(ComponentToggle(refdes=refdes, enabled=enabled))
        if not ok:
            continue
        try:
            variants.append(Variant(name=vname, default=default,
                                    port_overrides=tuple(overrides),
                                    component_toggles=tuple(toggles)))
        except ModelError as exc:
            ctx.error("P005", vpath, str(exc))
            ok = False
    if not ok:
        return None
    defaults = [v for v in variants if v.default]
    if len(defaults) != 1:
        ctx.error("P005", _join(path, "variants"),
                  f"option {name!r} must mark exactly one default variant "
                  f"(found {len(defaults)})")
        return None
    try:
        return ConfigOption(name=name, variants=tuple(variants))
    except ModelError as exc:
        ctx.error("P005", path, str(exc))
        return None


def parse_block(data: bytes | str) -> SchematicBlock:
    """Parse a block package document.  Raises :class:`ParseFailure` with
    the full diagnostic list on any problem."""
    ctx = _Ctx()
    root = _load_root(data, ctx)
    if root is None:
        raise ParseFailure(ctx.diags)

    ctx.check_keys(root, "", ("schema", "block_id", "version", "components",
                              "nets", "ports"), ("configs", "layout_hint"))
    _check_schema_version(root, ctx)

    block_id = ctx.get_str(root, "block_id", "")
    if block_id is not None and not valid_block_id(block_id):
        ctx.error("P005", "/block_id", f"invalid block_id {block_id!r}")
        block_id = None
    version = ctx.get_str(root, "version", "")
    if version is not None and not version:
        ctx.error("P005", "/version", "version must be non-empty")
        version = None

    nets: set[str] = set()
    nets_raw = ctx.get_list(root, "nets", "")
    if nets_raw is not None:
        for i, net in enumerate(nets_raw):
            if not isinstance(net, str) or not valid_name(net):
                ctx.error("P005", _join("", "nets", i), f"invalid net name {net!r}")
            elif net in nets:
                ctx.error("P004", _join("", "nets", i), f"duplicate net {net!r}")
            else:
                nets.add(net)

    components: list[ComponentInstance] = []
    seen_refdes: set[str] = set()
    components_raw = ctx.get_list(root, "components", "")
    if components_raw is not None:
        for i, cobj in enumerate(components_raw):
            comp = _walk_component(cobj, _join("", "components", i), ctx, nets)
            if comp is None:
                continue
            if comp.refdes in seen_refdes:
                ctx.error("P004", _join("", "components", i, "refdes"),
                          f"duplicate refdes {comp.refdes!r}")
                continue
            seen_refdes.add(comp.refdes)
            components.append(comp)

    ports: list[Port] = []
    seen_ports: set[str] = set()
    ports_raw = ctx.get_list(root, "ports", "")
    if ports_raw is not None:
        for i, pobj in enumerate(ports_raw):
            port = _walk_port(pobj, _join("", "ports", i), ctx, nets)
            if port is None:
                continue
            if port.name in seen_ports:
                ctx.error("P004", _join("", "ports", i, "name"),
                          f"duplicate port {port.name!r}")
                continue
            seen_ports.add(port.name)
            ports.append(port)

    configs: list[ConfigOption] = []
    seen_options: set[str] = set()
    configs_raw = ctx.get_list(root, "configs", "") if root.get("configs") is not None else []
    if configs_raw is not None:
        for i, oobj in enumerate(configs_raw):
            option = _walk_config(oobj, _join("", "configs", i), ctx)
            if option is None:
                continue
            if option.name in seen_options:
                ctx.error("P004", _join("", "configs", i, "name"),
                          f"duplicate option {option.name!r}")
                continue
            seen_options.add(option.name)
            # overrides/toggles must reference declared ports/components
            bad = False
            for variant in option.variants:
                for override in variant.port_overrides:
                    if override.port not in seen_ports:
                        ctx.error("P003", _join("", "configs", i),
                                  f"option {option.name!r} overrides undeclared port "
                                  f"{override.port!r}")
                        bad = True
                for toggle in variant.component_toggles:
                    if toggle.refdes not in seen_refdes:
                        ctx.error("P003", _join("", "configs", i),
                                  f"option {option.name!r} toggles undeclared component "
                                  f"{toggle.refdes!r}")
                        bad = True
            if not bad:
                configs.append(option)

    if nets_raw is not None and components_raw is not None and ports_raw is not None:
        referenced: set[str] = set()
        for comp in components:
            referenced |= comp.connected_nets()
        referenced |= {p.bound_net for p in ports}
        for i, net in enumerate(nets_raw):
            if isinstance(net, str) and net in nets and net not in referenced:
                ctx.error("P005", _join("", "nets", i),
                          f"net {net!r} is referenced by no pin or port")

    if ctx.diags:
        raise ParseFailure(ctx.diags)

    try:
        return SchematicBlock(
            block_id=block_id,  # type: ignore[arg-type]
            version=version,  # type: ignore[arg-type]
            components=tuple(components),
            internal_nets=frozenset(nets),
            ports=tuple(ports),
            configs=tuple(configs),
        )
    except ModelError as exc:
        # Everything above should have been caught with a precise path;
        # this is the safety net that keeps parse total.
        ctx.error("P005", "", str(exc))
        raise ParseFailure(ctx.diags) from None


def _voltage_range_obj(rng: VoltageRange) -> dict:
    return {"min_volts": rng.min_volts, "max_volts": rng.max_volts}


def _iface_obj(iface: InterfaceType) -> dict:
    if iface.kind == POWER:
        return {"kind": POWER, "range": _voltage_range_obj(iface.range),
                "current": {"kind": iface.current.kind,
                            "max_milliamps": iface.current.max_milliamps}}
    if iface.kind == GROUND:
        return {"kind": GROUND}
    if iface.kind in (GPIO, ANALOG):
        return {
            "kind": iface.kind,
            "level": None if iface.level is None else {
                "vil_max": iface.level.vil_max, "vih_min": iface.level.vih_min,
                "vol_max": iface.level.vol_max, "voh_min": iface.level.voh_min},
            "range": None if iface.range is None else _voltage_range_obj(iface.range),
        }
    obj: dict[str, Any] = {"kind": iface.kind, "role": iface.role}
    if iface.kind == I2C and iface.role == ROLE_PERIPHERAL:
        obj["addresses"] = sorted(iface.addresses or ())
    return obj


def block_to_json_obj(block: SchematicBlock) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "block_id": block.block_id,
        "version": block.version,
        "components": [
            {"refdes": c.refdes, "part_value": c.part_value, "footprint": c.footprint,
             "pins": [{"pin": pin, "net": net} for pin, net in c.pins]}
            for c in block.components
        ],
        "nets": sorted(block.internal_nets),
        "ports": [
            {"name": p.name, "iface": _iface_obj(p.iface), "bound_net": p.bound_net,
             "required": p.required}
            for p in block.ports
        ],
        "configs": [
            {"name": o.name, "variants": [
                {"name": v.name, "default": v.default,
                 "port_overrides": [
                     {"port": ov.port,
                      "addresses": None if ov.addresses is None else sorted(ov.addresses),
                      "range": None if ov.range is None else _voltage_range_obj(ov.range),
                      "level": None if ov.level is None else {
                          "vil_max": ov.level.vil_max, "vih_min": ov.level.vih_min,
                          "vol_max": ov.level.vol_max, "voh_min": ov.level.voh_min},
                      "current": None if ov.current is None else {
                          "kind": ov.current.kind,
                          "max_milliamps": ov.current.max_milliamps},
                      "required": ov.required}
                     for ov in v.port_overrides],
                 "component_toggles": [
                     {"refdes": t.refdes, "enabled": t.enabled}
                     for t in v.component_toggles]}
                for v in o.variants]}
            for o in block.configs
        ],
    }


def canonical_json_bytes(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)
            + "\n").encode("utf-8")


def serialize_block(block: SchematicBlock) -> bytes:
    """Canonical bytes for a block package: equal blocks serialize
    identically regardless of how their fields were declared."""
    return canonical_json_bytes(block_to_json_obj(block))


# ----------------------------------------------------------------------
# compositions
# ----------------------------------------------------------------------


def parse_composition(data: bytes | str) -> CompositionDocument:
    """Parse a composition document.  Structural validation only; block
    library references are resolved later."""
    ctx = _Ctx()
    root = _load_root(data, ctx)
    if root is None:
        raise ParseFailure(ctx.diags)

    ctx.check_keys(root, "", ("schema", "name"),
                   ("instances", "rails", "attachments", "edges", "layout_hint"))
    _check_schema_version(root, ctx)

    name = ctx.get_str(root, "name", "")
    if name is not None and not valid_name(name):
        ctx.error("P005", "/name", f"invalid composition name {name!r}")
        name = None

    instances: list[BlockInstance] = []
    seen_instances: set[str] = set()
    instances_raw = ctx.get_list(root, "instances", "") or []
    for i, iobj in enumerate(instances_raw):
        ipath = _join("", "instances", i)
        if not isinstance(iobj, dict):
            ctx.error("P005", ipath, "instance must be an object")
            continue
        if not ctx.check_keys(iobj, ipath, ("instance_name", "block_id", "version"),
                              ("config_selections",)):
            continue
        iname = ctx.get_str(iobj, "instance_name", ipath)
        if iname is not None and not valid_instance_name(iname):
            ctx.error("P005", _join(ipath, "instance_name"),
                      f"invalid instance name {iname!r}")
            continue
        block_id = ctx.get_str(iobj, "block_id", ipath)
        if block_id is not None and not valid_block_id(block_id):
            ctx.error("P005", _join(ipath, "block_id"), f"invalid block_id {block_id!r}")
            continue
        version = ctx.get_str(iobj, "version", ipath)
        if iname is None or block_id is None or version is None:
            continue
        if not version:
            ctx.error("P005", _join(ipath, "version"), "version must be non-empty")
            continue
        if iname in seen_instances:
            ctx.error("P010", _join(ipath, "instance_name"),
                      f"duplicate instance name {iname!r}")
            continue
        selections: list[tuple[str, str]] = []
        sel_obj = iobj.get("config_selections")
        sel_ok = True
        if sel_obj is not None:
            if not isinstance(sel_obj, dict):
                ctx.error("P005", _join(ipath, "config_selections"),
                          "'config_selections' must be an object")
                sel_ok = False
            else:
                for key in sorted(sel_obj):
                    value = sel_obj[key]
                    if not (valid_name(key) and isinstance(value, str)
                            and valid_name(value)):
                        ctx.error("P005", _join(ipath, "config_selections", key),
                                  f"invalid selection {key!r}={value!r}")
                        sel_ok = False
                    else:
                        selections.append((key, value))
        if not sel_ok:
            continue
        seen_instances.add(iname)
        instances.append(BlockInstance(instance_name=iname, block_id=block_id,
                                       version=version,
                                       config_selections=tuple(selections)))

    rails: list[PowerRail] = []
    seen_rails: set[str] = set()
    rails_raw = ctx.get_list(root, "rails", "") or []
    for i, robj in enumerate(rails_raw):
        rpath = _join("", "rails", i)
        if not isinstance(robj, dict):
            ctx.error("P005", rpath, "rail must be an object")
            continue
        if not ctx.check_keys(robj, rpath, ("name", "voltage"),
                              ("parent", "supply_milliamps")):
            continue
        rname = ctx.name(ctx.get_str(robj, "name", rpath), _join(rpath, "name"),
                         "rail name")
        vobj = ctx.get_obj(robj, "voltage", rpath)
        if rname is None or vobj is None:
            continue
        voltage = _walk_voltage_range(vobj, _join(rpath, "voltage"), ctx)
        if voltage is None:
            continue
        parent = ctx.get_str(robj, "parent", rpath)
        if robj.get("parent") is not None and parent is None:
            continue
        if parent is not None and not valid_name(parent):
            ctx.error("P005", _join(rpath, "parent"), f"invalid parent rail {parent!r}")
            continue
        supply = ctx.get_num(robj, "supply_milliamps", rpath)
        if robj.get("supply_milliamps") is not None and supply is None:
            continue
        if supply is not None and supply < 0:
            ctx.error("P005", _join(rpath, "supply_milliamps"),
                      "supply_milliamps must be >= 0")
            continue
        if rname in seen_rails:
            ctx.error("P004", _join(rpath, "name"), f"duplicate rail {rname!r}")
            continue
        seen_rails.add(rname)
        rails.append(PowerRail(name=rname, voltage=voltage, parent=parent,
                               supply_milliamps=supply))

    # parent references + forest shape
    ok_rails = []
    for i, rail in enumerate(rails):
        if rail.parent is not None and rail.parent not in seen_rails:
            ctx.error("P003", _join("", "rails", i),
                      f"rail {rail.name!r} has undeclared parent {rail.parent!r}")
        else:
            ok_rails.append(rail)
    rails = ok_rails
    parent_map = {r.name: r.parent for r in rails}
    cyclic: set[str] = set()
    for start in parent_map:
        seen: set[str] = set()
        node: Optional[str] = start
        while node is not None and node not in cyclic:
            if node in seen:
                cyclic |= seen
                break
            seen.add(node)
            node = parent_map.get(node)
    if cyclic:
        ctx.error("P011", "/rails",
                  f"rail parent references form a cycle: {', '.join(sorted(cyclic))}")
        rails = [replace_rail_parent(r) if r.name in cyclic else r for r in rails]

    attachments: list[RailAttachment] = []
    seen_pairs: set[tuple[str, str]] = set()
    attachments_raw = ctx.get_list(root, "attachments", "") or []
    for i, aobj in enumerate(attachments_raw):
        apath = _join("", "attachments", i)
        if not isinstance(aobj, dict):
            ctx.error("P005", apath, "attachment must be an object")
            continue
        if not ctx.check_keys(aobj, apath, ("instance_name", "port_name", "rail_name"), ()):
            continue
        iname = ctx.get_str(aobj, "instance_name", apath)
        pname = ctx.name(ctx.get_str(aobj, "port_name", apath),
                         _join(apath, "port_name"), "port name")
        rname = ctx.get_str(aobj, "rail_name", apath)
        if iname is None or pname is None or rname is None:
            continue
        if iname not in seen_instances:
            ctx.error("P003", _join(apath, "instance_name"),
                      f"attachment references undeclared instance {iname!r}")
            continue
        if rname not in seen_rails:
            ctx.error("P003", _join(apath, "rail_name"),
                      f"attachment references undeclared rail {rname!r}")
            continue
        if (iname, pname) in seen_pairs:
            ctx.error("P004", apath, f"port {iname}.{pname} attached twice")
            continue
        seen_pairs.add((iname, pname))
        attachments.append(RailAttachment(instance_name=iname, port_name=pname,
                                          rail_name=rname))

    edges: list[SignalEdge] = []
    seen_edge_ids: set[str] = set()
    edges_raw = ctx.get_list(root, "edges", "") or []
    for i, eobj in enumerate(edges_raw):
        epath = _join("", "edges", i)
        if not isinstance(eobj, dict):
            ctx.error("P005", epath, "edge must be an object")
            continue
        if not ctx.check_keys(eobj, epath, ("edge_id", "endpoints"), ("user_net_name",)):
            continue
        eid = ctx.name(ctx.get_str(eobj, "edge_id", epath), _join(epath, "edge_id"),
                       "edge id")
        endpoints_raw = ctx.get_list(eobj, "endpoints", epath)
        if eid is None or endpoints_raw is None:
            continue
        if len(endpoints_raw) != 2:
            ctx.error("P005", _join(epath, "endpoints"),
                      "an edge has exactly two endpoints")
            continue
        endpoints: list[tuple[str, str]] = []
        ep_ok = True
        for j, ep in enumerate(endpoints_raw):
            eppath = _join(epath, "endpoints", j)
            if (not isinstance(ep, list) or len(ep) != 2
                    or not all(isinstance(x, str) for x in ep)):
                ctx.error("P005", eppath,
                          "endpoint must be an [instance, port] pair of strings")
                ep_ok = False
                continue
            inst, port = ep
            if not valid_instance_name(inst):
                ctx.error("P005", _join(eppath, 0), f"invalid instance name {inst!r}")
                ep_ok = False
                continue
            if not valid_name(port):
                ctx.error("P005", _join(eppath, 1), f"invalid port name {port!r}")
                ep_ok = False
                continue
            if inst not in seen_instances:
                ctx.error("P003", _join(eppath, 0),
                          f"edge references undeclared instance {inst!r}")
                ep_ok = False
                continue
            endpoints.append((inst, port))
        if not ep_ok:
            continue
        if endpoints[0] == endpoints[1]:
            ctx.error("P005", _join(epath, "endpoints"),
                      f"edge {eid!r} connects a port to itself")
            continue
        user_net = ctx.get_str(eobj, "user_net_name", epath)
        if eobj.get("user_net_name") is not None and user_net is None:
            continue
        if user_net is not None and not valid_name(user_net):
            ctx.error("P005", _join(epath, "user_net_name"),
                      f"invalid user net name {user_net!r}")
            continue
        if user_net is not None and user_net in seen_rails:
            ctx.error("P004", _join(epath, "user_net_name"),
                      f"user net name {user_net!r} collides with a rail name")
            continue
        if eid in seen_edge_ids:
            ctx.error("P004", _join(epath, "edge_id"), f"duplicate edge id {eid!r}")
            continue
        seen_edge_ids.add(eid)
        edges.append(SignalEdge(edge_id=eid, endpoints=(endpoints[0], endpoints[1]),
                                user_net_name=user_net))

    if ctx.diags:
        raise ParseFailure(ctx.diags)

    try:
        return CompositionDocument(
            name=name,  # type: ignore[arg-type]
            instances=tuple(instances),
            rails=tuple(rails),
            attachments=tuple(attachments),
            edges=tuple(edges),
            layout_hint=root.get("layout_hint"),
        )
    except ModelError as exc:
        ctx.error("P005", "", str(exc))
        raise ParseFailure(ctx.diags) from None


def replace_rail_parent(rail: PowerRail) -> PowerRail:
    return PowerRail(name=rail.name, voltage=rail.voltage, parent=None,
                     supply_milliamps=rail.supply_milliamps)


def composition_to_json_obj(doc: CompositionDocument) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "name": doc.name,
        "instances": [
            {"instance_name": i.instance_name, "block_id": i.block_id,
             "version": i.version,
             "config_selections": dict(i.config_selections)}
            for i in doc.instances
        ],
        "rails": [
            {"name": r.name, "voltage": _voltage_range_obj(r.voltage),
             "parent": r.parent, "supply_milliamps": r.supply_milliamps}
            for r in doc.rails
        ],
        "attachments": [
            {"instance_name": a.instance_name, "port_name": a.port_name,
             "rail_name": a.rail_name}
            for a in doc.attachments
        ],
        "edges": [
            {"edge_id": e.edge_id,
             "endpoints": [list(e.endpoints[0]), list(e.endpoints[1])],
             "user_net_name": e.user_net_name}
            for e in doc.edges
        ],
        "layout_hint": doc.layout_hint,
    }


def serialize_composition(doc: CompositionDocument) -> bytes:
    """Canonical bytes for a composition document (layout hints included)."""
    return canonical_json_bytes(composition_to_json_obj(doc))
