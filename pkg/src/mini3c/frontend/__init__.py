"""mini-C frontend: lexing, parsing and name resolution."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import ast
from .parser import parse_source
from .prelude import PRELUDE_FILE_ID, PRELUDE_NAME, PRELUDE_SOURCE
from .resolver import resolve


@dataclass(frozen=True)
class InputFile:
    name: str
    text: bytes
    readonly: bool = False

    @classmethod
    def load(cls, path: str | Path, readonly: bool = False) -> "InputFile":
        return cls(str(path), Path(path).read_bytes(), readonly)


def parse(files) -> ast.TranslationUnit:
    """Parse and resolve a whole program.

    ``files`` holds :class:`InputFile` objects or ``(name, text[, readonly])``
    tuples; ``text`` may be ``str`` or ``bytes``.
    """
    sources = []
    for fid, f in enumerate(files):
        if not isinstance(f, InputFile):
            name, text, *rest = f
            f = InputFile(name, text.encode("utf-8") if isinstance(text, str) else text, bool(rest and rest[0]))
        items = parse_source(f.text, fid, f.name, f.readonly)
        sources.append(ast.SourceFile(f.name, f.text, f.readonly, items))
    prelude = parse_source(PRELUDE_SOURCE, PRELUDE_FILE_ID, PRELUDE_NAME, readonly=True)
    return resolve(sources, prelude)


__all__ = ["InputFile", "parse", "parse_source", "ast"]
