"""Lossless, byte-span indexed view of Python source.

A :class:`SourceDocument` pairs the untouched source text with the stdlib
``ast`` tree and the ``tokenize`` stream.  Every node and token is addressed
by absolute UTF-8 byte offsets so rewrites can be expressed as
:class:`SpanEdit` batches that leave everything outside the edited spans
byte-identical.  Comments and blank lines survive because nothing is ever
re-printed from the tree; the tree is only used to *locate* text.
"""

from __future__ import annotations

import ast
import bisect
import io
import token as tokmod
import tokenize
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .errors import OverlappingEdits

__all__ = [
    "SourceDocument",
    "SpanEdit",
    "Token",
    "apply_edits",
    "parse",
    "render",
]

OPENERS = {"(": ")", "[": "]", "{": "}"}
CLOSERS = {")", "]", "}"}


@dataclass(frozen=True)
class Token:
    type: int
    string: str
    start: int  # absolute byte offset
    end: int
    srow: int
    scol: int  # character column, as reported by tokenize
    erow: int
    ecol: int

    @property
    def is_op(self) -> bool:
        return self.type == tokmod.OP


@dataclass(frozen=True)
class SpanEdit:
    start: int
    end: int
    replacement: str

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


def _split_lines(text: str) -> list[str]:
    # str.splitlines() also breaks on \x0c, \u2028 and friends, which the
    # tokenizer does not treat as line ends.
    lines = []
    pos = 0
    while True:
        nl = text.find("\n", pos)
        if nl < 0:
            if pos < len(text):
                lines.append(text[pos:])
            break
        lines.append(text[pos : nl + 1])
        pos = nl + 1
    return lines


class SourceDocument:
    """Parsed source.  Treat as immutable; instances are cached and shared."""

    def __init__(self, text: str):
        self.text = text
        self.data = text.encode("utf-8")
        self.newline_style = "\r\n" if "\r\n" in text else "\n"
        self.lines = _split_lines(text)
        self.line_starts: list[int] = []
        off = 0
        for line in self.lines:
            self.line_starts.append(off)
            off += len(line.encode("utf-8"))
        self.line_starts.append(off)  # sentinel for ENDMARKER / DEDENT rows
        self._ascii = [line.isascii() for line in self.lines]
        self.tree: ast.Module | None = None
        self.tokens: list[Token] = []
        self.parse_ok = False
        self.error: str | None = None
        self.error_lineno: int | None = None
        self.cache: dict = {}
        self._parse()

    # -- construction -----------------------------------------------------

    def _parse(self) -> None:
        try:
            tree = ast.parse(self.text)
            raw = list(tokenize.generate_tokens(io.StringIO(self.text).readline))
        except (SyntaxError, ValueError, tokenize.TokenError, RecursionError, MemoryError) as exc:
            self.error = f"{type(exc).__name__}: {exc}"
            self.error_lineno = getattr(exc, "lineno", None)
            return
        self.tree = tree
        self.tokens = self._convert_tokens(raw)
        self._token_starts = [t.start for t in self.tokens]
        self.parse_ok = True

    def _convert_tokens(self, raw: Sequence[tokenize.TokenInfo]) -> list[Token]:
        out: list[Token] = []
        fstring_start = getattr(tokmod, "FSTRING_START", None)
        fstring_end = getattr(tokmod, "FSTRING_END", None)
        pending = None
        depth = 0
        for tok in raw:
            # 3.12+ splits f-strings into many tokens; fold them back into one
            # STRING token so rules never see operators inside literals.
            if fstring_start is not None and tok.type == fstring_start:
                if depth == 0:
                    pending = tok
                depth += 1
                continue
            if depth:
                if tok.type == fstring_end:
                    depth -= 1
                    if depth == 0:
                        out.append(self._mk(tokmod.STRING, pending.start, tok.end))
                continue
            out.append(self._mk(tok.type, tok.start, tok.end, tok.string))
        return out

    def _mk(self, ttype, start, end, string=None) -> Token:
        s = self.offset(*start)
        e = self.offset(*end)
        if string is None:
            string = self.data[s:e].decode("utf-8")
        return Token(ttype, string, s, e, start[0], start[1], end[0], end[1])

    # -- addressing -------------------------------------------------------

    def offset(self, row: int, col: int) -> int:
        """Absolute byte offset of (1-based row, character column)."""
        if row - 1 >= len(self.lines):
            return self.line_starts[-1]
        base = self.line_starts[row - 1]
        if self._ascii[row - 1]:
            return base + col
        return base + len(self.lines[row - 1][:col].encode("utf-8"))

    def byte_offset(self, row: int, byte_col: int) -> int:
        """Absolute offset of an ast (row, utf-8 byte column) position."""
        if row - 1 >= len(self.lines):
            return self.line_starts[-1]
        return self.line_starts[row - 1] + byte_col

    def span(self, node: ast.AST) -> tuple[int, int]:
        return (
            self.byte_offset(node.lineno, node.col_offset),
            self.byte_offset(node.end_lineno, node.end_col_offset),
        )

    def slice(self, start: int, end: int) -> str:
        return self.data[start:end].decode("utf-8")

    def segment(self, node: ast.AST) -> str:
        return self.slice(*self.span(node))

    def line_of(self, offset: int) -> int:
        """1-based line containing byte ``offset``."""
        return bisect.bisect_right(self.line_starts, offset)

    def line_span(self, lineno: int, with_newline: bool = True) -> tuple[int, int]:
        start = self.line_starts[lineno - 1]
        end = self.line_starts[lineno]
        if not with_newline:
            line = self.lines[lineno - 1]
            end -= len(line.encode("utf-8")) - len(line.rstrip("\r\n").encode("utf-8"))
        return (start, end)

    def indent_of(self, lineno: int) -> str:
        line = self.lines[lineno - 1]
        return line[: len(line) - len(line.lstrip(" \t"))]

    def column(self, offset: int) -> int:
        """Character column of a byte offset."""
        row = self.line_of(offset)
        base = self.line_starts[row - 1]
        return len(self.data[base:offset].decode("utf-8"))

    # -- token queries ----------------------------------------------------

    def token_index(self, offset: int) -> int:
        """Index of the first token starting at or after ``offset``."""
        return bisect.bisect_left(self._token_starts, offset)

    def tokens_between(self, start: int, end: int) -> list[Token]:
        i = self.token_index(start)
        out = []
        while i < len(self.tokens) and self.tokens[i].start < end:
            if self.tokens[i].end <= end:
                out.append(self.tokens[i])
            i += 1
        return out

    def index_of(self, tok: Token) -> int:
        """Position of ``tok`` itself (zero-width DEDENTs may share its start)."""
        i = self.token_index(tok.start)
        while self.tokens[i] is not tok:
            i += 1
        return i

    def token_at(self, offset: int) -> Token | None:
        i = self.token_index(offset)
        while i < len(self.tokens) and self.tokens[i].start == offset:
            if self.tokens[i].type not in (tokmod.INDENT, tokmod.DEDENT):
                return self.tokens[i]
            i += 1
        return None

    def prev_significant(self, index: int) -> Token | None:
        i = index - 1
        while i >= 0:
            t = self.tokens[i]
            if t.type not in (tokmod.NL, tokmod.COMMENT, tokmod.INDENT, tokmod.DEDENT):
                return t
            i -= 1
        return None

    def comments_between(self, start: int, end: int) -> list[Token]:
        return [t for t in self.tokens_between(start, end) if t.type == tokmod.COMMENT]

    # -- cached structural facts ------------------------------------------

    @property
    def parents(self) -> dict[int, ast.AST]:
        if "parents" not in self.cache:
            parents: dict[int, ast.AST] = {}
            for node in ast.walk(self.tree):
                for child in ast.iter_child_nodes(node):
                    parents[id(child)] = node
            self.cache["parents"] = parents
        return self.cache["parents"]

    def parent(self, node: ast.AST) -> ast.AST | None:
        return self.parents.get(id(node))

    def ancestors(self, node: ast.AST) -> Iterator[ast.AST]:
        p = self.parent(node)
        while p is not None:
            yield p
            p = self.parent(p)

    @property
    def fstring_inner(self) -> set[int]:
        """ids of nodes nested inside f-string literals."""
        if "fstring" not in self.cache:
            inner: set[int] = set()
            for node in ast.walk(self.tree):
                if isinstance(node, ast.JoinedStr):
                    for sub in ast.walk(node):
                        if sub is not node:
                            inner.add(id(sub))
            self.cache["fstring"] = inner
        return self.cache["fstring"]

    @property
    def string_continuation_lines(self) -> set[int]:
        """Lines that begin inside a multi-line string literal."""
        if "strlines" not in self.cache:
            rows: set[int] = set()
            for t in self.tokens:
                if t.type == tokmod.STRING and t.erow > t.srow:
                    rows.update(range(t.srow + 1, t.erow + 1))
            self.cache["strlines"] = rows
        return self.cache["strlines"]

    def walk(self, node_type=None) -> Iterator[ast.AST]:
        if "walk" not in self.cache:
            self.cache["walk"] = list(ast.walk(self.tree))
        for node in self.cache["walk"]:
            if node_type is None or isinstance(node, node_type):
                yield node

    def __repr__(self) -> str:
        state = "ok" if self.parse_ok else f"error={self.error!r}"
        return f"SourceDocument({len(self.data)} bytes, {state})"


@lru_cache(maxsize=2048)
def parse(text: str) -> SourceDocument:
    """Parse ``text``; never raises.  Check ``parse_ok`` / ``error``.

    Results are memoised by text, which makes the repeated re-parsing done by
    the rule engine's fixed-point loops cheap.
    """
    return SourceDocument(text)


def render(doc: SourceDocument) -> str:
    """Reassemble the document from its token stream and inter-token gaps."""
    if not doc.parse_ok:
        return doc.text
    out = []
    pos = 0
    for t in doc.tokens:
        if t.start < pos:
            continue
        out.append(doc.data[pos : t.start])
        out.append(t.string.encode("utf-8"))
        pos = t.end
    out.append(doc.data[pos:])
    return b"".join(out).decode("utf-8")


def check_edits(edits: Iterable[SpanEdit], size: int) -> list[SpanEdit]:
    ordered = sorted(edits, key=lambda e: (e.start, e.end))
    prev_end = -1
    for e in ordered:
        if e.start < 0 or e.end > size or e.end < e.start:
            raise OverlappingEdits(f"edit span {e.span} outside document of {size} bytes")
        if e.start < prev_end:
            raise OverlappingEdits(f"edit at {e.span} overlaps a previous edit ending at {prev_end}")
        prev_end = max(prev_end, e.end)
    return ordered


def apply_edits(doc: SourceDocument | str, edits: Iterable[SpanEdit]) -> str:
    """Replace each span; bytes outside every span are copied verbatim."""
    data = doc.data if isinstance(doc, SourceDocument) else doc.encode("utf-8")
    ordered = check_edits(edits, len(data))
    if not ordered:
        return doc.text if isinstance(doc, SourceDocument) else doc
    out = []
    pos = 0
    for e in ordered:
        out.append(data[pos : e.start])
        out.append(e.replacement.encode("utf-8"))
        pos = e.end
    out.append(data[pos:])
    return b"".join(out).decode("utf-8")


def drop_overlapping(edits: Iterable[SpanEdit]) -> list[SpanEdit]:
    """Keep edits left to right, skipping any that overlap an earlier keeper."""
    kept: list[SpanEdit] = []
    prev_end = -1
    for e in sorted(edits, key=lambda e: (e.start, e.end)):
        if e.start < prev_end or (kept and e.start == e.end == kept[-1].start == kept[-1].end):
            continue
        kept.append(e)
        prev_end = max(prev_end, e.end)
    return kept
