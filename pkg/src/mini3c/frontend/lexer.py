"""Tokenizer for mini-C.

Offsets are byte offsets into the UTF-8 encoded file, which keeps rewrite
spans valid regardless of how the text is later decoded.  ``>>`` is never
produced as one token: the parser glues two adjacent ``>`` back together in
expression context so that ``_Ptr<_Ptr<int>>`` needs no special casing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import LexError

KEYWORDS = frozenset(
    {
        "int", "char", "unsigned", "signed", "long", "short", "void", "size_t",
        "struct", "union", "static", "extern", "const",
        "return", "if", "else", "while", "for", "do", "break", "continue",
        "sizeof", "NULL",
        "_Ptr", "_Array_ptr", "_Nt_array_ptr",
        "_Checked", "_Unchecked",
        "_Assume_bounds_cast", "_Dynamic_bounds_cast",
        "_Itype_for_any", "_For_any", "itype_for_any", "for_any",
    }
)

# longest first; ">>" deliberately absent
PUNCT = (
    "...", "<<=", ">>=",
    "->", "++", "--", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=",
    "(", ")", "[", "]", "{", "}", ";", ",", ".", ":", "?",
)

_TOKEN_RE = re.compile(
    rb"""
    (?P<ws>[ \t\r\n\f\v]+)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<num>0[xX][0-9a-fA-F]+[uUlL]*|[0-9]+[uUlL]*)
  | (?P<char>'(?:\\.|[^\\'\n])+')
  | (?P<str>"(?:\\.|[^\\"\n])*")
  | (?P<punct>"""
    + b"|".join(re.escape(p.encode()) for p in PUNCT)
    + rb")",
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Span:
    file: int
    start: int
    end: int
    line: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start after end")

    def join(self, other: "Span") -> "Span":
        return Span(self.file, min(self.start, other.start), max(self.end, other.end), self.line)


@dataclass(frozen=True)
class Token:
    kind: str  # 'id', 'kw', 'int', 'char', 'str', 'op', 'eof'
    text: str
    span: Span

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.text in ops

    def is_kw(self, *kws: str) -> bool:
        return self.kind == "kw" and self.text in kws


def tokenize(data: bytes | str, file_id: int = 0, filename: str = "<input>") -> list[Token]:
    if isinstance(data, str):
        data = data.encode("utf-8")
    tokens: list[Token] = []
    pos = 0
    line = 1
    n = len(data)
    while pos < n:
        m = _TOKEN_RE.match(data, pos)
        if m is None:
            ch = data[pos:pos + 1].decode("utf-8", "replace")
            if ch == "#":
                raise LexError("preprocessor directives are not part of mini-C", filename, line)
            raise LexError(f"unexpected character {ch!r}", filename, line)
        kind = m.lastgroup
        text = m.group().decode("utf-8")
        end = m.end()
        if kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "id", text, Span(file_id, pos, end, line)))
        elif kind == "num":
            tokens.append(Token("int", text, Span(file_id, pos, end, line)))
        elif kind in ("char", "str", "punct"):
            tokens.append(Token({"punct": "op"}.get(kind, kind), text, Span(file_id, pos, end, line)))
        line += text.count("\n")
        pos = end
    tokens.append(Token("eof", "", Span(file_id, n, n, line)))
    return tokens
