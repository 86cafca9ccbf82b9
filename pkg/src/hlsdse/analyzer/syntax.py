"""Syntax tree for the restricted C subset.

Nodes keep the location of their first token (``loc``); statements also keep
``end``, the offset one past their last character, so the rewriter can edit
the original text without reprinting it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Optional

from .lexer import Location


@dataclass(eq=False)
class Node:
    def children(self) -> Iterator["Node"]:
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Node):
                yield v
            elif isinstance(v, (list, tuple)):
                for x in v:
                    if isinstance(x, Node):
                        yield x

    def walk(self) -> Iterator["Node"]:
        yield self
        for c in self.children():
            yield from c.walk()


# ---- expressions ---------------------------------------------------------

@dataclass(eq=False)
class Expr(Node):
    pass


@dataclass(eq=False)
class Name(Expr):
    name: str
    loc: Location = None


@dataclass(eq=False)
class Num(Expr):
    text: str
    loc: Location = None


@dataclass(eq=False)
class CharLit(Expr):
    text: str
    loc: Location = None


@dataclass(eq=False)
class StrLit(Expr):
    text: str
    loc: Location = None


@dataclass(eq=False)
class Unary(Expr):
    op: str
    operand: Expr
    postfix: bool = False
    loc: Location = None


@dataclass(eq=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    loc: Location = None


@dataclass(eq=False)
class Assign(Expr):
    op: str
    target: Expr
    value: Expr
    loc: Location = None


@dataclass(eq=False)
class Ternary(Expr):
    cond: Expr
    then: Expr
    other: Expr
    loc: Location = None


@dataclass(eq=False)
class Call(Expr):
    func: Expr
    args: list
    loc: Location = None


@dataclass(eq=False)
class Index(Expr):
    base: Expr
    index: Expr
    loc: Location = None


@dataclass(eq=False)
class Member(Expr):
    base: Expr
    name: str
    arrow: bool = False
    loc: Location = None


@dataclass(eq=False)
class Cast(Expr):
    type: "TypeName"
    expr: Expr
    loc: Location = None


@dataclass(eq=False)
class SizeOf(Expr):
    arg: Node   # TypeName or Expr
    loc: Location = None


@dataclass(eq=False)
class Comma(Expr):
    exprs: list
    loc: Location = None


@dataclass(eq=False)
class InitList(Expr):
    items: list
    loc: Location = None


# ---- types and declarations ---------------------------------------------

@dataclass(eq=False)
class StructSpec(Node):
    kind: str                      # struct | union
    tag: Optional[str]
    members: Optional[list]        # list[DeclStmt] when defined here


@dataclass(eq=False)
class Enumerator(Node):
    name: str
    value: Optional[Expr]


@dataclass(eq=False)
class EnumSpec(Node):
    tag: Optional[str]
    items: Optional[list]          # list[Enumerator]


@dataclass(eq=False)
class TypeSpec(Node):
    words: list                    # qualifiers, storage and base type words
    struct: Optional[StructSpec] = None
    enum: Optional[EnumSpec] = None
    template_args: list = field(default_factory=list)

    @property
    def base(self) -> str:
        skip = {"const", "volatile", "static", "extern", "register", "inline", "typedef",
                "restrict", "__restrict", "constexpr", "auto"}
        words = [w for w in self.words if w not in skip]
        if self.struct is not None:
            words.append(f"{self.struct.kind} {self.struct.tag or ''}".strip())
        if self.enum is not None:
            words.append(f"enum {self.enum.tag or ''}".strip())
        return " ".join(words)

    @property
    def is_const(self) -> bool:
        return "const" in self.words or "constexpr" in self.words


@dataclass(eq=False)
class Declarator(Node):
    name: Optional[str]
    pointer: int = 0
    reference: bool = False
    dims: list = field(default_factory=list)     # Expr or None per bracket
    params: Optional[list] = None                # list[ParamDecl] for functions
    variadic: bool = False
    bitfield: Optional[Expr] = None
    loc: Location = None


@dataclass(eq=False)
class ParamDecl(Node):
    spec: TypeSpec
    declarator: Declarator
    loc: Location = None


@dataclass(eq=False)
class TypeName(Node):
    spec: TypeSpec
    pointer: int = 0
    dims: list = field(default_factory=list)


@dataclass(eq=False)
class VarDecl(Node):
    declarator: Declarator
    init: Optional[Expr] = None

    @property
    def name(self) -> str:
        return self.declarator.name


# ---- statements -----------------------------------------------------------

@dataclass(eq=False)
class Stmt(Node):
    pass


@dataclass(eq=False)
class DeclStmt(Stmt):
    spec: TypeSpec
    decls: list                    # list[VarDecl]
    typedef: bool = False
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class Empty(Stmt):
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class Compound(Stmt):
    items: list
    loc: Location = None           # the '{'
    end: int = 0                   # one past the '}'


@dataclass(eq=False)
class For(Stmt):
    init: Optional[Node]           # DeclStmt, Expr or None
    cond: Optional[Expr]
    step: Optional[Expr]
    body: Stmt
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class If(Stmt):
    cond: Expr
    then: Stmt
    other: Optional[Stmt] = None
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class Switch(Stmt):
    expr: Expr
    body: Stmt
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class Case(Stmt):
    value: Optional[Expr]          # None for default
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class Return(Stmt):
    value: Optional[Expr]
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class Jump(Stmt):
    kind: str                      # break | continue
    loc: Location = None
    end: int = 0


@dataclass(eq=False)
class PragmaStmt(Stmt):
    text: str
    loc: Location = None
    end: int = 0


# ---- top level -------------------------------------------------------------

@dataclass(eq=False)
class FunctionDef(Node):
    spec: TypeSpec
    declarator: Declarator
    body: Optional[Compound]       # None for a prototype
    loc: Location = None
    end: int = 0

    @property
    def name(self) -> str:
        return self.declarator.name

    @property
    def params(self) -> list:
        return self.declarator.params or []


@dataclass(eq=False)
class LinkageBlock(Node):
    items: list
    loc: Location = None


@dataclass(eq=False)
class SyntaxTree(Node):
    items: list
    files: tuple = ()

    def functions(self) -> list:
        out = []

        def visit(items):
            for it in items:
                if isinstance(it, FunctionDef):
                    out.append(it)
                elif isinstance(it, LinkageBlock):
                    visit(it.items)
        visit(self.items)
        return out

    def definitions(self) -> list:
        return [f for f in self.functions() if f.body is not None]
