"""Block library discovery.

A library is a set of directories scanned for ``*.block.json`` files.
Within one directory files load in sorted order; across directories,
later paths shadow earlier ones on block_id collision, and every shadowing
event produces a notice so silent overrides cannot happen.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Sequence

from .model import SchematicBlock
from .parsing import BLOCK_SUFFIX, ParseFailure

ENV_LIBRARY_VAR = "MATCHECK_LIB"


class LibraryError(Exception):
    """A library path or file failed to load; carries any parse diagnostics."""

    def __init__(self, path: Path, message: str, diagnostics=()):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.diagnostics = list(diagnostics)


def library_paths_from_env(environ: dict | None = None) -> list[Path]:
    env = os.environ if environ is None else environ
    raw = env.get(ENV_LIBRARY_VAR, "")
    return [Path(p) for p in raw.split(os.pathsep) if p]


def load_library(paths: Sequence[Path | str],
                 ) -> tuple[dict[str, SchematicBlock], list[str]]:
    """Load every block package under the given directories.

    Returns (block_id -> block, notices).  Raises :class:`LibraryError` on
    the first unparseable file — a broken library should fail loudly, not
    silently drop a block that something else then shadows.
    """
    blocks: dict[str, SchematicBlock] = {}
    origin: dict[str, Path] = {}
    notices: list[str] = []
    for raw in paths:
        directory = Path(raw)
        if not directory.is_dir():
            raise LibraryError(directory, "not a directory")
        for file in sorted(directory.glob("*" + BLOCK_SUFFIX)):
            try:
                block = parse_block_file(file)
            except ParseFailure as failure:
                raise LibraryError(file, str(failure), failure.diagnostics) from None
            if block.block_id in blocks:
                notices.append(
                    f"block {block.block_id!r} from {origin[block.block_id]} "
                    f"shadowed by {file}")
            blocks[block.block_id] = block
            origin[block.block_id] = file
    return blocks, notices


def parse_block_file(path: Path) -> SchematicBlock:
    from .parsing import parse_block

    return parse_block(path.read_bytes())
