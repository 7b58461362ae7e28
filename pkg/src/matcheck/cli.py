"""Command line front end.

Subcommands: validate, check, merge, explain, serve.  Exit codes:
0 clean, 1 diagnostics reported, 2 I/O or load failure, 3 merge refused.
``--format json`` prints exactly one JSON document on stdout and routes
all human text to stderr, so the output can be piped without scraping.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .checker import check
from .composition import ResolveFailure, resolve
from .diagnostics import (
    Diagnostic,
    SEVERITY_ERROR,
    SEVERITY_WARNING,
    UnknownCode,
    explain,
    explanation_key_of,
    severity_of,
)
from .library import ENV_LIBRARY_VAR, LibraryError, library_paths_from_env, load_library
from .merger import MergeRefused, export_bom_csv, export_flat_json, merge
from .parsing import (
    BLOCK_SUFFIX,
    COMPOSITION_SUFFIX,
    SCHEMA_VERSION,
    ParseFailure,
    parse_block,
    parse_composition,
)
from .service import DEFAULT_PORT, create_app

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_LOAD = 2
EXIT_REFUSED = 3

_RESET = "\x1b[0m"
_COLORS = {SEVERITY_ERROR: "\x1b[31m", SEVERITY_WARNING: "\x1b[33m"}


class _Output:
    """Routes text/JSON per the output contract."""

    def __init__(self, fmt: str, color: str):
        self.json_mode = fmt == "json"
        if color == "always":
            self.color = True
        elif color == "never":
            self.color = False
        else:
            self.color = sys.stdout.isatty() and not self.json_mode

    def text(self, line: str = "") -> None:
        print(line, file=sys.stderr if self.json_mode else sys.stdout)

    def note(self, line: str) -> None:
        print(line, file=sys.stderr)

    def emit_json(self, payload: dict) -> None:
        if self.json_mode:
            print(json.dumps(payload, indent=2, sort_keys=True))

    def severity_tag(self, severity: str) -> str:
        if self.color and severity in _COLORS:
            return f"{_COLORS[severity]}{severity}{_RESET}"
        return severity


def _format_diagnostic(diag: Diagnostic, out: _Output) -> str:
    subjects = ", ".join(s.render() for s in diag.subjects)
    return f"{out.severity_tag(diag.severity)} {diag.code} [{subjects}]: {diag.message}"


def _load_libraries(args, out: _Output):
    paths = [Path(p) for p in (args.lib or [])] or library_paths_from_env()
    library, notices = load_library(paths)
    for notice in notices:
        out.note(f"notice: {notice}")
    return library


def _load_composition(path: Path):
    return parse_composition(path.read_bytes())


def cmd_validate(args, out: _Output) -> int:
    reports = []
    worst = EXIT_OK
    for raw in args.paths:
        path = Path(raw)
        try:
            data = path.read_bytes()
        except OSError as exc:
            out.note(f"error: cannot read {path}: {exc}")
            return EXIT_LOAD
        try:
            if path.name.endswith(COMPOSITION_SUFFIX):
                parse_composition(data)
            else:
                parse_block(data)
            reports.append({"path": str(path), "ok": True, "diagnostics": []})
        except ParseFailure as failure:
            worst = EXIT_DIAGNOSTICS
            reports.append({"path": str(path), "ok": False,
                            "diagnostics": [d.to_json_obj() for d in failure.diagnostics]})
            for diag in failure.diagnostics:
                out.text(f"{path}: {diag.code} {diag.path or '/'}: {diag.message}")
    out.emit_json({"schema": SCHEMA_VERSION, "files": reports})
    return worst


def _checked_composition(args, out: _Output):
    """Shared front half of check/merge: library + composition + resolution.

    Returns (resolved, diagnostics) or an exit code on load failures.
    """
    try:
        library = _load_libraries(args, out)
    except LibraryError as exc:
        out.note(f"error: {exc}")
        out.emit_json({"schema": SCHEMA_VERSION, "error": "library",
                       "detail": str(exc),
                       "diagnostics": [d.to_json_obj() for d in exc.diagnostics]})
        return EXIT_LOAD
    path = Path(args.composition)
    try:
        doc = _load_composition(path)
    except OSError as exc:
        out.note(f"error: cannot read {path}: {exc}")
        out.emit_json({"schema": SCHEMA_VERSION, "error": "io", "detail": str(exc)})
        return EXIT_LOAD
    except ParseFailure as failure:
        for diag in failure.diagnostics:
            out.note(f"{path}: {diag.code} {diag.path or '/'}: {diag.message}")
        out.emit_json({"schema": SCHEMA_VERSION, "error": "parse",
                       "diagnostics": [d.to_json_obj() for d in failure.diagnostics]})
        return EXIT_LOAD
    try:
        resolved = resolve(doc, library)
    except ResolveFailure as failure:
        for err in failure.errors:
            out.note(f"{path}: {err.code} {err.subject.render()}: {err.message}")
        out.emit_json({"schema": SCHEMA_VERSION, "error": "resolve",
                       "diagnostics": [e.to_json_obj() for e in failure.errors]})
        return EXIT_LOAD
    return resolved, check(resolved)


def cmd_check(args, out: _Output) -> int:
    front = _checked_composition(args, out)
    if isinstance(front, int):
        return front
    _resolved, diags = front
    for diag in diags:
        out.text(_format_diagnostic(diag, out))
    errors = sum(1 for d in diags if d.severity == SEVERITY_ERROR)
    warnings = len(diags) - errors
    out.note(f"{errors} error(s), {warnings} warning(s)")
    out.emit_json({"schema": SCHEMA_VERSION,
                   "diagnostics": [d.to_json_obj() for d in diags]})
    if errors or (warnings and args.deny_warnings):
        return EXIT_DIAGNOSTICS
    return EXIT_OK


def cmd_merge(args, out: _Output) -> int:
    front = _checked_composition(args, out)
    if isinstance(front, int):
        return front
    resolved, diags = front
    for diag in diags:
        out.text(_format_diagnostic(diag, out))
    if args.deny_warnings and any(d.severity == SEVERITY_WARNING for d in diags):
        out.note("merge aborted: warnings present and --deny-warnings given")
        out.emit_json({"schema": SCHEMA_VERSION, "refused": sorted(
            {d.code for d in diags}), "diagnostics": [d.to_json_obj() for d in diags]})
        return EXIT_DIAGNOSTICS
    try:
        merged = merge(resolved, diags)
    except MergeRefused as refused:
        out.note(str(refused))
        out.emit_json({"schema": SCHEMA_VERSION, "refused": refused.codes,
                       "diagnostics": [d.to_json_obj() for d in refused.blocking]})
        return EXIT_REFUSED
    flat_path = Path(args.output)
    try:
        flat_path.write_bytes(export_flat_json(merged))
        bom_path: Optional[Path] = None
        if args.bom:
            bom_path = Path(args.bom)
            bom_path.write_bytes(export_bom_csv(merged))
    except OSError as exc:
        out.note(f"error: cannot write output: {exc}")
        out.emit_json({"schema": SCHEMA_VERSION, "error": "io", "detail": str(exc)})
        return EXIT_LOAD
    out.note(f"wrote {flat_path}" + (f" and {bom_path}" if bom_path else ""))
    out.emit_json({"schema": SCHEMA_VERSION,
                   "written": {"flat": str(flat_path),
                               "bom": str(bom_path) if bom_path else None},
                   "diagnostics": [d.to_json_obj() for d in diags]})
    return EXIT_OK


def cmd_explain(args, out: _Output) -> int:
    try:
        text = explain(args.code)
        severity = severity_of(args.code)
        key = explanation_key_of(args.code)
    except UnknownCode:
        out.note(f"error: unknown diagnostic code {args.code!r}")
        out.emit_json({"schema": SCHEMA_VERSION, "error": "unknown-code",
                       "code": args.code})
        return EXIT_LOAD
    out.text(f"{args.code} ({key}{', ' + severity if severity else ''})")
    out.text()
    out.text(text)
    out.emit_json({"schema": SCHEMA_VERSION, "code": args.code, "severity": severity,
                   "explanation_key": key, "explanation": text})
    return EXIT_OK


def cmd_serve(args, out: _Output) -> int:
    try:
        library = _load_libraries(args, out)
    except LibraryError as exc:
        out.note(f"error: {exc}")
        return EXIT_LOAD
    import uvicorn

    app = create_app(library)
    out.note(f"serving {len(library)} block(s) on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matcheck",
        description="Check and merge compositions of annotated schematic blocks.")
    parser.add_argument("--format", choices=("text", "json"), default="text",
                        help="output format (json: one document on stdout)")
    parser.add_argument("--color", choices=("auto", "always", "never"),
                        default="auto", help="colorize severities in text mode")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser(
        "validate", help=f"validate *{BLOCK_SUFFIX} / *{COMPOSITION_SUFFIX} files")
    p_validate.add_argument("paths", nargs="+", metavar="FILE")
    p_validate.set_defaults(func=cmd_validate)

    def add_lib(p):
        p.add_argument("--lib", action="append", metavar="DIR",
                       help=f"block library directory (repeatable; later shadows "
                            f"earlier; default ${ENV_LIBRARY_VAR})")

    p_check = sub.add_parser("check", help="run the rule catalog on a composition")
    p_check.add_argument("composition", metavar="COMPOSITION")
    add_lib(p_check)
    p_check.add_argument("--deny-warnings", action="store_true",
                         help="exit 1 when warnings are present")
    p_check.set_defaults(func=cmd_check)

    p_merge = sub.add_parser("merge", help="flatten a clean composition")
    p_merge.add_argument("composition", metavar="COMPOSITION")
    add_lib(p_merge)
    p_merge.add_argument("-o", "--output", required=True, metavar="FLAT_JSON",
                         help="merged netlist output path")
    p_merge.add_argument("--bom", metavar="BOM_CSV", help="also write a BOM csv")
    p_merge.add_argument("--deny-warnings", action="store_true",
                         help="refuse to merge when warnings are present")
    p_merge.set_defaults(func=cmd_merge)

    p_explain = sub.add_parser("explain", help="explain a diagnostic code")
    p_explain.add_argument("code", metavar="CODE")
    p_explain.set_defaults(func=cmd_explain)

    p_serve = sub.add_parser("serve", help="start the HTTP check service")
    add_lib(p_serve)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    out = _Output(args.format, args.color)
    return args.func(args, out)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
