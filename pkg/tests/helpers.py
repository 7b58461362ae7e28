"""Shared builders for tests.

Most tests need a block with a handful of typed ports and don't care about
its internals, so `simple_block` fabricates the netlist: one net per
distinct bound_net, one component with one pin per port.
"""

from matcheck.composition import (
    BlockInstance,
    CompositionDocument,
    PowerRail,
    RailAttachment,
    SignalEdge,
)
from matcheck.model import (
    ComponentInstance,
    CurrentSpec,
    InterfaceType,
    LogicLevel,
    Port,
    SchematicBlock,
    VoltageRange,
)


def vr(lo, hi):
    return VoltageRange(lo, hi)


def draws(ma):
    return CurrentSpec(kind="draws", max_milliamps=ma)


def supplies(ma):
    return CurrentSpec(kind="supplies", max_milliamps=ma)


def level(vil, vih, vol, voh):
    return LogicLevel(vil_max=vil, vih_min=vih, vol_max=vol, voh_min=voh)


def power_port(name, lo, hi, current=None, required=False, net=None):
    iface = InterfaceType(kind="power", range=vr(lo, hi),
                          current=current or draws(10))
    return Port(name=name, iface=iface, bound_net=net or name, required=required)


def ground_port(name="GND", required=False, net=None):
    return Port(name=name, iface=InterfaceType(kind="ground"),
                bound_net=net or name, required=required)


def gpio_port(name, lvl=None, rng=None, required=False, net=None):
    return Port(name=name, iface=InterfaceType(kind="gpio", level=lvl, range=rng),
                bound_net=net or name, required=required)


def analog_port(name, rng=None, required=False, net=None):
    return Port(name=name, iface=InterfaceType(kind="analog", range=rng),
                bound_net=net or name, required=required)


def i2c_port(name, role, addresses=None, required=False, net=None):
    iface = InterfaceType(kind="i2c", role=role,
                          addresses=None if addresses is None else frozenset(addresses))
    return Port(name=name, iface=iface, bound_net=net or name, required=required)


def spi_port(name, role, required=False, net=None):
    return Port(name=name, iface=InterfaceType(kind="spi", role=role),
                bound_net=net or name, required=required)


def uart_port(name, role, required=False, net=None):
    return Port(name=name, iface=InterfaceType(kind="uart", role=role),
                bound_net=net or name, required=required)


def simple_block(block_id, ports, version="1.0", configs=()):
    """A block whose netlist is fabricated from its ports: one component
    with one pin per port, wired to the port's bound net."""
    ports = tuple(ports)
    nets = frozenset(p.bound_net for p in ports)
    pins = tuple((f"p{i + 1}", port.bound_net)
                 for i, port in enumerate(sorted(ports, key=lambda p: p.name)))
    component = ComponentInstance(refdes="U1", part_value=block_id.upper(),
                                  footprint="FP", pins=pins)
    return SchematicBlock(block_id=block_id, version=version,
                          components=(component,), internal_nets=nets,
                          ports=ports, configs=tuple(configs))


def lib(*blocks):
    return {b.block_id: b for b in blocks}


def inst(name, block, selections=()):
    return BlockInstance(instance_name=name, block_id=block.block_id,
                         version=block.version,
                         config_selections=tuple(selections))


def compose(name="design", instances=(), rails=(), attachments=(), edges=()):
    return CompositionDocument(name=name, instances=tuple(instances),
                               rails=tuple(rails),
                               attachments=tuple(attachments),
                               edges=tuple(edges))


def rail(name, lo, hi, parent=None, supply_milliamps=None):
    return PowerRail(name=name, voltage=vr(lo, hi), parent=parent,
                     supply_milliamps=supply_milliamps)


def attach(instance, port, to):
    return RailAttachment(instance_name=instance, port_name=port, rail_name=to)


def edge(edge_id, a, b, user_net_name=None):
    return SignalEdge(edge_id=edge_id, endpoints=(a, b),
                      user_net_name=user_net_name)


def codes(diags):
    return [d.code for d in diags]
