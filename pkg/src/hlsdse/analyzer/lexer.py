"""Tokenizer and a minimal preprocessor for the restricted C subset.

The preprocessor flattens in-unit ``#include "..."`` directives (each file is
expanded at most once), records ``#define`` macros and substitutes object-like
ones at token level, and passes ``#pragma`` lines through as tokens so the
parser can keep them as statements. Everything else is dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import KernelSyntaxError
from .source import SourceUnit


@dataclass(frozen=True)
class Location:
    file: str
    line: int
    col: int = 1
    offset: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Token:
    kind: str   # ID, NUM, CHAR, STR, OP, PRAGMA, EOF
    value: str
    loc: Location
    end: int    # offset one past the last character in loc.file

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.value!r}, {self.loc})"


@dataclass(frozen=True)
class Directive:
    name: str
    text: str   # everything after the directive name, continuations joined
    loc: Location
    end: int


OPERATORS = sorted("""
<<= >>= ... -> ++ -- << >> <= >= == != && || += -= *= /= %= &= |= ^= ::
+ - * / % < > = ! ~ & | ^ ? : ; , . ( ) [ ] { } #
""".split(), key=len, reverse=True)

_NUMBER = re.compile(
    r"(0[xX][0-9a-fA-F']+|0[bB][01']+|(\d[\d']*\.?[\d']*|\.\d[\d']*)([eE][+-]?\d+)?)[uUlLfF]*")
_IDENT = re.compile(r"[A-Za-z_]\w*")


def tokenize(text: str, file: str) -> list[Token | Directive]:
    out: list[Token | Directive] = []
    i, n = 0, len(text)
    line, line_start = 1, 0
    at_line_start = True

    def loc(pos: int) -> Location:
        return Location(file, line, pos - line_start + 1, pos)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            line_start = i
            at_line_start = True
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if c == "\\" and text.startswith("\n", i + 1):
            i += 2
            line += 1
            line_start = i
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise KernelSyntaxError("unterminated comment", file=file, line=line,
                                        col=i - line_start + 1)
            line += text.count("\n", i, j)
            k = text.rfind("\n", i, j)
            if k >= 0:
                line_start = k + 1
            i = j + 2
            continue
        if c == "#" and at_line_start:
            start = i
            start_loc = loc(i)
            # gather the logical line
            parts = []
            j = i + 1
            while True:
                k = text.find("\n", j)
                k = n if k < 0 else k
                seg = text[j:k]
                if seg.endswith("\\"):
                    parts.append(seg[:-1])
                    if k >= n:
                        j = n
                        break
                    j = k + 1
                    line += 1
                    line_start = j
                    continue
                parts.append(seg)
                j = k
                break
            body = " ".join(parts)
            body = re.sub(r"/\*.*?\*/", " ", body)
            body = re.sub(r"//.*", "", body).strip()
            m = _IDENT.match(body)
            name = m.group(0) if m else ""
            rest = body[len(name):].strip()
            if name == "pragma":
                raw = text[start:j]
                raw = re.sub(r"\\\n", " ", raw).strip()
                raw = re.sub(r"\s*//.*$", "", raw)
                out.append(Token("PRAGMA", " ".join(raw.split()), start_loc, j))
            else:
                out.append(Directive(name, rest, start_loc, j))
            i = j
            continue
        at_line_start = False
        m = _IDENT.match(text, i)
        if m:
            # string prefixes like L"..." / u8"..."
            if text.startswith(('"', "'"), m.end()) and m.group(0) in ("L", "u", "U", "u8"):
                i = m.end()
                continue
            out.append(Token("ID", m.group(0), loc(i), m.end()))
            i = m.end()
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER.match(text, i)
            out.append(Token("NUM", m.group(0), loc(i), m.end()))
            i = m.end()
            continue
        if c in "\"'":
            j = i + 1
            while j < n and text[j] != c:
                if text[j] == "\\":
                    j += 1
                if j < n and text[j] == "\n":
                    break
                j += 1
            if j >= n or text[j] != c:
                raise KernelSyntaxError("unterminated literal", file=file, line=line,
                                        col=i - line_start + 1)
            out.append(Token("STR" if c == '"' else "CHAR", text[i:j + 1], loc(i), j + 1))
            i = j + 1
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                out.append(Token("OP", op, loc(i), i + len(op)))
                i += len(op)
                break
        else:
            raise KernelSyntaxError(f"unexpected character {c!r}", file=file, line=line,
                                    col=i - line_start + 1)
    return out


@dataclass
class Macro:
    name: str
    body: list[Token]
    function_like: bool


_INCLUDE = re.compile(r'^\s*"([^"]+)"')


def preprocess(unit: SourceUnit) -> tuple[list[Token], dict[str, Macro]]:
    """Flatten the unit into a single token stream.

    Root files (those not included by another in-unit file) are expanded in
    unit order; in-unit includes are expanded in place, once per unit.
    """
    lexed = {f.file_name: tokenize(f.file_content, f.file_name) for f in unit.files}

    included: set[str] = set()
    for items in lexed.values():
        for it in items:
            if isinstance(it, Directive) and it.name == "include":
                m = _INCLUDE.match(it.text)
                if m:
                    target = unit.get(m.group(1))
                    if target is not None:
                        included.add(target.file_name)

    macros: dict[str, Macro] = {}
    expanded: set[str] = set()
    out: list[Token] = []

    def expand_file(name: str) -> None:
        if name in expanded:
            return
        expanded.add(name)
        for it in lexed[name]:
            if isinstance(it, Directive):
                handle_directive(it)
            elif it.kind == "ID" and it.value in macros and not macros[it.value].function_like:
                out.extend(substitute(it, set()))
            else:
                out.append(it)

    def substitute(tok: Token, active: set[str]) -> list[Token]:
        macro = macros[tok.value]
        result = []
        for b in macro.body:
            if (b.kind == "ID" and b.value in macros and b.value not in active
                    and b.value != tok.value and not macros[b.value].function_like):
                result.extend(substitute(Token("ID", b.value, tok.loc, tok.end),
                                         active | {tok.value}))
            else:
                result.append(Token(b.kind, b.value, tok.loc, tok.end))
        return result

    def handle_directive(d: Directive) -> None:
        if d.name == "include":
            m = _INCLUDE.match(d.text)
            if m:
                target = unit.get(m.group(1))
                if target is not None:
                    expand_file(target.file_name)
        elif d.name == "define":
            m = _IDENT.match(d.text)
            if not m:
                raise KernelSyntaxError("malformed #define", file=d.loc.file, line=d.loc.line,
                                        col=d.loc.col)
            name = m.group(0)
            rest = d.text[m.end():]
            if rest.startswith("("):
                macros[name] = Macro(name, [], True)
                return
            body = [t for t in tokenize(rest, d.loc.file) if isinstance(t, Token)]
            macros[name] = Macro(name, body, False)
        elif d.name == "undef":
            macros.pop(d.text.strip(), None)

    for f in unit.files:
        if f.file_name not in included:
            expand_file(f.file_name)
    # include cycles: anything never reached is expanded last
    for f in unit.files:
        expand_file(f.file_name)
    return out, macros
