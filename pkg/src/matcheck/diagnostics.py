"""Diagnostic vocabulary shared by the parser, checker, resolver and CLI.

Every reportable condition has a stable code.  Parse-time problems carry a
JSON-pointer path into the offending document; check-time problems carry
subject references (instances, ports, rails, edges) that resolve back into
the composition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"


class UnknownCode(KeyError):
    """explain() was asked about a code outside the catalog."""


@dataclass(frozen=True)
class SubjectRef:
    """A located reference into a composition document."""

    kind: str  # "instance" | "port" | "rail" | "edge"
    parts: tuple[str, ...]

    def render(self) -> str:
        return f"{self.kind}:{'.'.join(self.parts)}"


def subject_instance(name: str) -> SubjectRef:
    return SubjectRef("instance", (name,))


def subject_port(instance: str, port: str) -> SubjectRef:
    return SubjectRef("port", (instance, port))


def subject_rail(name: str) -> SubjectRef:
    return SubjectRef("rail", (name,))


def subject_edge(edge_id: str) -> SubjectRef:
    return SubjectRef("edge", (edge_id,))


_SEVERITY_ORDER = {SEVERITY_ERROR: 0, SEVERITY_WARNING: 1}


@dataclass(frozen=True)
class Diagnostic:
    """One finding of the rule catalog."""

    code: str
    severity: str
    subjects: tuple[SubjectRef, ...]
    message: str
    explanation_key: str

    def sort_key(self) -> tuple:
        return (
            _SEVERITY_ORDER.get(self.severity, 9),
            self.code,
            tuple(s.render() for s in self.subjects),
            self.message,
        )

    def to_json_obj(self) -> dict:
        return {
            "code": self.code,
            "explanation_key": self.explanation_key,
            "message": self.message,
            "severity": self.severity,
            "subjects": [s.render() for s in self.subjects],
        }


@dataclass(frozen=True)
class ParseDiagnostic:
    """A parse-time finding, located by JSON pointer into the input text."""

    code: str
    path: str
    message: str

    def to_json_obj(self) -> dict:
        return {"code": self.code, "message": self.message, "path": self.path}


@dataclass(frozen=True)
class ResolveError:
    """A failure to resolve a composition against the block library."""

    code: str
    subject: SubjectRef
    message: str

    def to_json_obj(self) -> dict:
        return {"code": self.code, "message": self.message, "subject": self.subject.render()}


def make_diagnostic(code: str, subjects: tuple[SubjectRef, ...], message: str) -> Diagnostic:
    severity, key, _ = _CATALOG[code]
    return Diagnostic(code=code, severity=severity, subjects=subjects,
                      message=message, explanation_key=key)


def diagnostics_to_json_bytes(diags: list[Diagnostic]) -> bytes:
    """Canonical byte serialization of a diagnostic list (stable field and
    entry order), for determinism checks and machine output."""
    payload = [d.to_json_obj() for d in diags]
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


# code -> (severity, explanation_key, explanation text).
# Parse (P), resolve (R) and edit (C/X) codes have no check severity; they
# are catalogued here so `explain` covers everything a user can see.
_CATALOG: dict[str, tuple[Optional[str], str, str]] = {
    "E001": (SEVERITY_ERROR, "protocol-mismatch",
             "A signal group mixes interface kinds (for example an I2C port wired to an "
             "SPI port). Every port on one wire group must use the same interface kind. "
             "Fix: remove the offending edge or route the signal to a port of the "
             "matching kind."),
    "E002": (SEVERITY_ERROR, "bus-role-conflict",
             "An I2C or SPI group must have exactly one controller. Zero controllers "
             "means nobody can drive the bus; two or more means they would fight over "
             "it. Fix: keep one controller-role port per bus and move the others to "
             "separate buses."),
    "E003": (SEVERITY_ERROR, "voltage-incompatibility",
             "Two connected data ports cannot agree on signal voltages: a driver's "
             "output levels miss the receiver's input thresholds, drive exceeds a "
             "declared absolute window, or the two instances run on disjoint supplies "
             "with supply-derived levels. Fix: power both sides from compatible rails "
             "or insert a block that translates levels."),
    "E004": (SEVERITY_ERROR, "power-overdraw",
             "The summed current draw on a rail exceeds the rail's supply budget "
             "(its explicit supply_milliamps, or the sum of attached supplying "
             "ports). Fix: raise the supply, shed load, or split loads across rails."),
    "E005": (SEVERITY_ERROR, "i2c-address-conflict",
             "Two or more I2C peripherals on one bus cannot be given disjoint address "
             "sets by any combination of their configuration variants, so at least two "
             "devices would answer the same address. Fix: pick different address "
             "variants, or move a device to another bus."),
    "E006": (SEVERITY_ERROR, "unconnected-required-port",
             "A port the block marks as required is not connected: a required data "
             "port has no edge, or a required power/ground port is attached to no "
             "rail. Fix: wire the port, attach it to a rail, or use a block that "
             "does not need it."),
    "E007": (SEVERITY_ERROR, "rail-out-of-range",
             "A power or ground port is attached to a rail whose voltage envelope "
             "does not overlap the port's accepted range at all. Fix: attach the "
             "port to a rail inside its accepted range."),
    "W101": (SEVERITY_WARNING, "ambiguous-power-attachment",
             "More than one rail's envelope fits inside this supply port's accepted "
             "range, so automatic attachment cannot choose. Fix: attach the port to "
             "the intended rail by hand."),
    "W102": (SEVERITY_WARNING, "no-power-candidate",
             "No rail's envelope fits inside this supply port's accepted range, so "
             "automatic attachment has nothing to offer. Fix: add a suitable rail or "
             "attach the port manually (an out-of-range manual attachment raises "
             "E007)."),
    "W103": (SEVERITY_WARNING, "missing-i2c-pullup",
             "An I2C group has no pullup-provider member. The bus is open-drain and "
             "needs pull-up resistors somewhere. Fix: include a block exposing a "
             "pullup-provider port on this bus, or accept the warning if pull-ups "
             "live off-board."),
    "W104": (SEVERITY_WARNING, "floating-optional-port",
             "An optional data port is unconnected while a signal group of its "
             "interface kind exists in the design. Informational: connect it or "
             "ignore it."),

    "P001": (None, "malformed-document",
             "The input is not a well-formed document: invalid JSON, a wrong "
             "top-level shape, an unsupported schema version, or a missing "
             "required key."),
    "P002": (None, "unknown-key",
             "An object carries a key the format does not define. The format is "
             "strict so typos fail loudly instead of being ignored."),
    "P003": (None, "dangling-reference",
             "Something refers to a name that is not declared: a pin or port names "
             "an unknown net, an attachment or edge names an unknown instance or "
             "rail, or a rail names an unknown parent."),
    "P004": (None, "duplicate-identifier",
             "An identifier is declared twice where it must be unique (refdes, "
             "port, net, option, variant, rail, edge id, attachment target), or a "
             "user net name collides with a rail name."),
    "P005": (None, "invalid-field",
             "A field value is invalid: wrong type, bad identifier syntax, an "
             "i2c address outside 0..127, a reversed voltage range, a negative "
             "current, inverted logic thresholds, or a reserved name."),
    "P010": (None, "duplicate-instance",
             "Two block instances share one instance name. Instance names key "
             "every cross-reference in a composition and must be unique."),
    "P011": (None, "rail-cycle",
             "Power rail parent references form a cycle. Rails must form a forest "
             "(each rail derived from at most one parent, no loops)."),

    "R001": (None, "unknown-block",
             "An instance references a block_id (or block version) the library "
             "does not provide. Check the library paths and the pinned version."),
    "R002": (None, "unknown-port",
             "An edge or attachment references a port the resolved block does not "
             "declare."),
    "R003": (None, "config-error",
             "A config selection names an option or variant the block does not "
             "define."),
    "R004": (None, "wrong-port-kind",
             "A signal edge endpoint is a power/ground port (power routing goes "
             "through rail attachments), or a rail attachment targets a data port."),

    "C001": (None, "power-port-in-signal-edge",
             "connect_signal was asked to wire a power or ground port. Power "
             "distribution is expressed by attaching ports to rails, not by "
             "drawing edges."),
    "C002": (None, "duplicate-edge",
             "connect_signal was asked to create an edge between two endpoints "
             "that are already directly connected (order-insensitive)."),

    "X001": (None, "unknown-identifier",
             "An edit operation referenced an instance, rail, port or edge that "
             "does not exist in the document."),
    "X002": (None, "duplicate-identifier",
             "An edit operation tried to add an instance or rail under a name "
             "that is already taken."),
    "X003": (None, "invalid-value",
             "An edit operation was given a malformed name or value."),
}

CHECK_ERROR_CODES = tuple(sorted(c for c, (sev, _, _) in _CATALOG.items()
                                 if sev == SEVERITY_ERROR))
CHECK_WARNING_CODES = tuple(sorted(c for c, (sev, _, _) in _CATALOG.items()
                                   if sev == SEVERITY_WARNING))
ALL_CODES = tuple(sorted(_CATALOG))


def severity_of(code: str) -> Optional[str]:
    try:
        return _CATALOG[code][0]
    except KeyError:
        raise UnknownCode(code) from None


def explanation_key_of(code: str) -> str:
    try:
        return _CATALOG[code][1]
    except KeyError:
        raise UnknownCode(code) from None


def explain(code: str) -> str:
    """Human explanation (cause and typical fix) for a catalog code.

    Raises :class:`UnknownCode` for anything outside the catalog.
    """
    try:
        return _CATALOG[code][2]
    except KeyError:
        raise UnknownCode(code) from None
