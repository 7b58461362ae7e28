"""matcheck: type checking and netlist merging for compositions of
annotated schematic blocks."""

from .checker import BusGroup, PropagationState, check, group_buses, propagate
from .composition import (
    BlockInstance,
    CompositionDocument,
    EditError,
    PowerRail,
    RailAttachment,
    ResolvedComposition,
    ResolveFailure,
    SignalEdge,
    auto_attach_power,
    connect_signal,
    resolve,
)
from .diagnostics import Diagnostic, ParseDiagnostic, UnknownCode, explain
from .merger import (
    InternalInconsistency,
    MergedSchematic,
    MergeRefused,
    export_bom_csv,
    export_flat_json,
    merge,
)
from .model import (
    ComponentInstance,
    ConfigOption,
    CurrentSpec,
    InterfaceType,
    LogicLevel,
    Port,
    SchematicBlock,
    Variant,
    VoltageRange,
    apply_config,
    voltage_ranges_intersect,
)
from .parsing import (
    ParseFailure,
    parse_block,
    parse_composition,
    serialize_block,
    serialize_composition,
)

__version__ = "0.1.0"

__all__ = [
    "BlockInstance",
    "BusGroup",
    "ComponentInstance",
    "CompositionDocument",
    "ConfigOption",
    "CurrentSpec",
    "Diagnostic",
    "EditError",
    "InterfaceType",
    "InternalInconsistency",
    "LogicLevel",
    "MergeRefused",
    "MergedSchematic",
    "ParseDiagnostic",
    "ParseFailure",
    "Port",
    "PowerRail",
    "PropagationState",
    "RailAttachment",
    "ResolveFailure",
    "ResolvedComposition",
    "SchematicBlock",
    "SignalEdge",
    "UnknownCode",
    "Variant",
    "VoltageRange",
    "apply_config",
    "auto_attach_power",
    "check",
    "connect_signal",
    "explain",
    "export_bom_csv",
    "export_flat_json",
    "group_buses",
    "merge",
    "parse_block",
    "parse_composition",
    "propagate",
    "resolve",
    "serialize_block",
    "serialize_composition",
    "voltage_ranges_intersect",
]
