"""Recursive-descent parser for the synthesizable C subset.

Accepted: functions, fixed-size arrays, ``for`` loops, ``if``/``switch``,
typedefs, structs/enums, object-like macros, ``#pragma`` lines. Rejected with
:class:`UnsupportedConstruct`: ``while``/``do`` loops, ``goto`` and labels,
recursion, templates/classes, function pointers.
"""

from __future__ import annotations

from ..errors import KernelSyntaxError, UnsupportedConstruct
from . import syntax as S
from .lexer import Token, preprocess
from .source import SourceUnit

BASE_TYPES = {
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned",
    "bool", "_Bool", "half",
}
QUALIFIERS = {
    "const", "volatile", "static", "extern", "register", "inline", "restrict",
    "__restrict", "constexpr", "auto", "__inline", "__inline__",
}
BUILTIN_TYPEDEFS = {
    "int8_t", "int16_t", "int32_t", "int64_t", "uint8_t", "uint16_t", "uint32_t",
    "uint64_t", "size_t", "ssize_t", "intptr_t", "uintptr_t", "ptrdiff_t",
    "ap_int", "ap_uint", "ap_fixed", "ap_ufixed", "FILE",
}
TEMPLATE_TYPES = {"ap_int", "ap_uint", "ap_fixed", "ap_ufixed"}
UNSUPPORTED_KEYWORDS = {
    "while": "while", "do": "do-while", "goto": "goto", "template": "template",
    "class": "class", "namespace": "namespace", "new": "new", "delete": "delete",
    "virtual": "virtual", "try": "try", "throw": "throw", "asm": "asm",
    "malloc": "malloc", "free": "free", "calloc": "calloc", "realloc": "realloc",
}
KEYWORDS = BASE_TYPES | QUALIFIERS | {
    "struct", "union", "enum", "typedef", "for", "if", "else", "switch", "case",
    "default", "return", "break", "continue", "sizeof",
} | set(UNSUPPORTED_KEYWORDS)

BINARY_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5, "==": 6, "!=": 6,
    "<": 7, ">": 7, "<=": 7, ">=": 7, "<<": 8, ">>": 8,
    "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.typedefs: set[str] = set(BUILTIN_TYPEDEFS)
        if tokens:
            last = tokens[-1]
            self._eof = Token("EOF", "", last.loc, last.end)
        else:
            from .lexer import Location
            self._eof = Token("EOF", "", Location("<unit>", 1, 1, 0), 0)

    # -- token helpers --------------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else self._eof

    def at(self, value: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("OP", "ID") and t.value == value

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "EOF" else repr(tok.value)
        raise KernelSyntaxError(f"{msg}, found {found}", file=tok.loc.file,
                                line=tok.loc.line, col=tok.loc.col)

    def expect(self, value: str) -> Token:
        if not self.at(value):
            self.error(f"expected {value!r}")
        return self.next()

    def expect_id(self) -> Token:
        t = self.peek()
        if t.kind != "ID" or t.value in KEYWORDS:
            self.error("expected identifier")
        return self.next()

    def unsupported(self, construct: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise UnsupportedConstruct(construct, file=tok.loc.file, line=tok.loc.line, col=tok.loc.col)

    # -- top level --------------------------------------------------------------

    def parse_unit(self) -> list:
        items = []
        while self.peek().kind != "EOF":
            item = self.parse_external()
            if item is not None:
                items.append(item)
        return items

    def parse_external(self):
        t = self.peek()
        if t.kind == "PRAGMA":
            self.next()
            return S.PragmaStmt(t.value, t.loc, t.end)
        if self.at(";"):
            self.next()
            return None
        if self.at("extern") and self.peek(1).kind == "STR":
            self.next()
            self.next()
            if self.at("{"):
                self.next()
                items = []
                while not self.at("}"):
                    if self.peek().kind == "EOF":
                        self.error("expected '}'")
                    item = self.parse_external()
                    if item is not None:
                        items.append(item)
                self.next()
                return S.LinkageBlock(items, t.loc)
            return self.parse_external()
        if t.kind == "ID" and t.value in ("template", "class", "namespace", "using"):
            self.unsupported(t.value)
        if t.kind == "ID" and t.value in UNSUPPORTED_KEYWORDS:
            self.unsupported(UNSUPPORTED_KEYWORDS[t.value])
        return self.parse_declaration(top_level=True)

    def parse_declaration(self, top_level: bool = False):
        start = self.peek()
        typedef = False
        if self.at("typedef"):
            self.next()
            typedef = True
        spec = self.parse_specifiers()
        if self.at(";"):
            end = self.next().end
            return S.DeclStmt(spec, [], typedef, start.loc, end)
        decl = self.parse_declarator()
        if decl.params is not None and self.at("{") and not typedef:
            if not top_level:
                self.error("nested function definition")
            body = self.parse_compound()
            return S.FunctionDef(spec, decl, body, start.loc, body.end)
        decls = [self.finish_var(decl, typedef)]
        while self.at(","):
            self.next()
            decls.append(self.finish_var(self.parse_declarator(), typedef))
        end = self.expect(";").end
        if decl.params is not None and len(decls) == 1 and not typedef:
            return S.FunctionDef(spec, decl, None, start.loc, end)
        return S.DeclStmt(spec, decls, typedef, start.loc, end)

    def finish_var(self, decl: S.Declarator, typedef: bool) -> S.VarDecl:
        if typedef:
            if decl.name:
                self.typedefs.add(decl.name)
            return S.VarDecl(decl)
        init = None
        if self.at("="):
            self.next()
            init = self.parse_initializer()
        elif self.at("(") and decl.params is None:
            # C++ direct initialisation: int x(0);
            self.next()
            init = self.parse_expr()
            self.expect(")")
        elif self.at("{") and decl.params is None:
            init = self.parse_initializer()
        return S.VarDecl(decl, init)

    def parse_initializer(self) -> S.Expr:
        if self.at("{"):
            t = self.next()
            items = []
            while not self.at("}"):
                if self.at("."):
                    # designated initialiser: keep only the value
                    self.next()
                    self.expect_id()
                    self.expect("=")
                items.append(self.parse_initializer())
                if not self.at(","):
                    break
                self.next()
            self.expect("}")
            return S.InitList(items, t.loc)
        return self.parse_assign()

    # -- types ------------------------------------------------------------------

    def is_type_start(self, k: int = 0, loose: bool = False) -> bool:
        t = self.peek(k)
        if t.kind != "ID":
            return False
        v = t.value
        if v in BASE_TYPES or v in QUALIFIERS or v in ("struct", "union", "enum", "typedef"):
            return True
        if v in self.typedefs:
            nxt = self.peek(k + 1)
            # a typedef name used as a call or member base is an expression
            return not (nxt.kind == "OP" and nxt.value in ("(", ".", "->", "=", "[", ";"))
        if loose and v not in KEYWORDS:
            nxt = self.peek(k + 1)
            if nxt.kind == "ID" and nxt.value not in KEYWORDS:
                return True
            if nxt.kind == "OP" and nxt.value in ("*", "&") and self.peek(k + 2).kind == "ID" \
                    and self.peek(k + 3).kind == "OP" and self.peek(k + 3).value in (";", "=", ",", "[", ")"):
                # "T *x;" is ambiguous with multiplication; only treat as a
                # declaration when the next token after x closes a declarator
                return self.peek(k + 3).value != ")"
        return False

    def parse_specifiers(self) -> S.TypeSpec:
        words: list[str] = []
        struct = enum = None
        targs: list = []
        seen_base = False
        while True:
            t = self.peek()
            if t.kind != "ID":
                break
            v = t.value
            if v in QUALIFIERS:
                words.append(self.next().value)
            elif v in BASE_TYPES:
                words.append(self.next().value)
                seen_base = True
            elif v in ("struct", "union") and not seen_base:
                struct = self.parse_struct()
                seen_base = True
            elif v == "enum" and not seen_base:
                enum = self.parse_enum()
                seen_base = True
            elif not seen_base and v not in KEYWORDS and (
                    v in self.typedefs or self.peek(1).kind == "ID" or
                    (self.peek(1).kind == "OP" and self.peek(1).value in ("*", "&", "<", "::"))):
                self.next()
                name = v
                while self.at("::"):
                    self.next()
                    name += "::" + self.expect_id().value
                words.append(name)
                seen_base = True
                if self.at("<"):
                    if v not in TEMPLATE_TYPES:
                        self.unsupported("template", t)
                    self.next()
                    targs.append(self.parse_ternary())
                    while self.at(","):
                        self.next()
                        targs.append(self.parse_ternary())
                    self.expect(">")
            else:
                break
        if not words and struct is None and enum is None:
            self.error("expected type specifier")
        return S.TypeSpec(words, struct, enum, targs)

    def parse_struct(self) -> S.StructSpec:
        kind = self.next().value
        tag = None
        if self.peek().kind == "ID" and not self.at("{"):
            tag = self.expect_id().value
        members = None
        if self.at("{"):
            self.next()
            members = []
            while not self.at("}"):
                if self.peek().kind == "EOF":
                    self.error("expected '}'")
                if self.peek().kind == "PRAGMA":
                    self.next()
                    continue
                start = self.peek()
                spec = self.parse_specifiers()
                decls = []
                if not self.at(";"):
                    decls.append(self.parse_member())
                    while self.at(","):
                        self.next()
                        decls.append(self.parse_member())
                end = self.expect(";").end
                members.append(S.DeclStmt(spec, decls, False, start.loc, end))
            self.next()
        return S.StructSpec(kind, tag, members)

    def parse_member(self) -> S.VarDecl:
        if self.at(":"):
            d = S.Declarator(None, loc=self.peek().loc)
        else:
            d = self.parse_declarator()
        if self.at(":"):
            self.next()
            d.bitfield = self.parse_ternary()
        return S.VarDecl(d)

    def parse_enum(self) -> S.EnumSpec:
        self.next()
        tag = None
        if self.peek().kind == "ID" and not self.at("{"):
            tag = self.expect_id().value
        items = None
        if self.at("{"):
            self.next()
            items = []
            while not self.at("}"):
                name = self.expect_id().value
                value = None
                if self.at("="):
                    self.next()
                    value = self.parse_ternary()
                items.append(S.Enumerator(name, value))
                if not self.at(","):
                    break
                self.next()
            self.expect("}")
        return S.EnumSpec(tag, items)

    def parse_declarator(self, abstract: bool = False) -> S.Declarator:
        start = self.peek()
        pointer = 0
        reference = False
        while self.at("*") or self.at("&") or self.at("const") or self.at("restrict") \
                or self.at("__restrict"):
            t = self.next()
            if t.value == "*":
                pointer += 1
            elif t.value == "&":
                reference = True
        if self.at("("):
            if self.peek(1).kind == "OP" and self.peek(1).value in ("*", "&", "^"):
                self.unsupported("function pointer")
            if not abstract:
                self.error("expected declarator")
        name = None
        loc = self.peek().loc
        if self.peek().kind == "ID" and self.peek().value not in KEYWORDS:
            name = self.next().value
        elif not abstract:
            self.error("expected identifier")
        decl = S.Declarator(name, pointer, reference, loc=loc if name else start.loc)
        while True:
            if self.at("["):
                self.next()
                if self.at("]"):
                    decl.dims.append(None)
                else:
                    decl.dims.append(self.parse_expr())
                self.expect("]")
            elif self.at("(") and decl.params is None and not decl.dims:
                if abstract and name is None:
                    break
                self.next()
                decl.params, decl.variadic = self.parse_params()
                self.expect(")")
                while self.at("const"):
                    self.next()
            else:
                break
        return decl

    def parse_params(self):
        params = []
        variadic = False
        if self.at(")"):
            return params, variadic
        if self.at("void") and self.peek(1).kind == "OP" and self.peek(1).value == ")":
            self.next()
            return params, variadic
        while True:
            if self.at("..."):
                self.next()
                variadic = True
                break
            start = self.peek()
            spec = self.parse_specifiers()
            decl = self.parse_declarator(abstract=True)
            if self.at("="):
                self.next()
                self.parse_assign()
            params.append(S.ParamDecl(spec, decl, start.loc))
            if not self.at(","):
                break
            self.next()
        return params, variadic

    def parse_type_name(self) -> S.TypeName:
        spec = self.parse_specifiers()
        d = self.parse_declarator(abstract=True)
        return S.TypeName(spec, d.pointer, d.dims)

    # -- statements -------------------------------------------------------------

    def parse_compound(self) -> S.Compound:
        lb = self.expect("{")
        items = []
        while not self.at("}"):
            if self.peek().kind == "EOF":
                self.error("expected '}'")
            items.append(self.parse_statement())
        rb = self.next()
        return S.Compound(items, lb.loc, rb.end)

    def parse_statement(self) -> S.Stmt:
        t = self.peek()
        if t.kind == "PRAGMA":
            self.next()
            return S.PragmaStmt(t.value, t.loc, t.end)
        if t.kind == "OP":
            if t.value == "{":
                return self.parse_compound()
            if t.value == ";":
                self.next()
                return S.Empty(t.loc, t.end)
        if t.kind == "ID":
            v = t.value
            if v in UNSUPPORTED_KEYWORDS and v not in ("malloc", "free", "calloc", "realloc"):
                self.unsupported(UNSUPPORTED_KEYWORDS[v])
            if v == "for":
                return self.parse_for()
            if v == "if":
                self.next()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                then = self.parse_statement()
                other = None
                if self.at("else"):
                    self.next()
                    other = self.parse_statement()
                return S.If(cond, then, other, t.loc, (other or then).end)
            if v == "switch":
                self.next()
                self.expect("(")
                expr = self.parse_expr()
                self.expect(")")
                body = self.parse_statement()
                return S.Switch(expr, body, t.loc, body.end)
            if v in ("case", "default"):
                self.next()
                value = None if v == "default" else self.parse_ternary()
                end = self.expect(":").end
                return S.Case(value, t.loc, end)
            if v == "return":
                self.next()
                value = None if self.at(";") else self.parse_expr()
                end = self.expect(";").end
                return S.Return(value, t.loc, end)
            if v in ("break", "continue"):
                self.next()
                end = self.expect(";").end
                return S.Jump(v, t.loc, end)
            if v not in KEYWORDS and self.at(":", 1) and not self.at("::", 1):
                self.unsupported("label")
            if self.at("typedef") or self.is_type_start(loose=True):
                return self.parse_declaration()
        expr = self.parse_expr()
        end = self.expect(";").end
        return S.ExprStmt(expr, t.loc, end)

    def parse_for(self) -> S.For:
        t = self.next()
        self.expect("(")
        init = None
        if self.at(";"):
            self.next()
        elif self.is_type_start(loose=True):
            init = self.parse_declaration()
        else:
            init = self.parse_expr()
            self.expect(";")
        cond = None if self.at(";") else self.parse_expr()
        self.expect(";")
        step = None if self.at(")") else self.parse_expr()
        self.expect(")")
        body = self.parse_statement()
        return S.For(init, cond, step, body, t.loc, body.end)

    # -- expressions ------------------------------------------------------------

    def parse_expr(self) -> S.Expr:
        first = self.parse_assign()
        if not self.at(","):
            return first
        exprs = [first]
        while self.at(","):
            self.next()
            exprs.append(self.parse_assign())
        return S.Comma(exprs, getattr(first, "loc", None))

    def parse_assign(self) -> S.Expr:
        left = self.parse_ternary()
        t = self.peek()
        if t.kind == "OP" and t.value in ASSIGN_OPS:
            self.next()
            value = self.parse_assign()
            return S.Assign(t.value, left, value, t.loc)
        return left

    def parse_ternary(self) -> S.Expr:
        cond = self.parse_binary(1)
        if self.at("?"):
            t = self.next()
            then = self.parse_assign()
            self.expect(":")
            other = self.parse_assign()
            return S.Ternary(cond, then, other, t.loc)
        return cond

    def parse_binary(self, min_prec: int) -> S.Expr:
        left = self.parse_unary()
        while True:
            t = self.peek()
            prec = BINARY_PREC.get(t.value) if t.kind == "OP" else None
            if prec is None or prec < min_prec:
                return left
            self.next()
            right = self.parse_binary(prec + 1)
            left = S.Binary(t.value, left, right, t.loc)

    def parse_unary(self) -> S.Expr:
        t = self.peek()
        if t.kind == "OP" and t.value in ("+", "-", "!", "~", "*", "&", "++", "--"):
            self.next()
            return S.Unary(t.value, self.parse_unary(), False, t.loc)
        if t.kind == "ID" and t.value == "sizeof":
            self.next()
            if self.at("(") and self.is_type_start(1):
                self.next()
                tn = self.parse_type_name()
                self.expect(")")
                return S.SizeOf(tn, t.loc)
            return S.SizeOf(self.parse_unary(), t.loc)
        if t.kind == "OP" and t.value == "(" and self.is_type_start(1):
            self.next()
            tn = self.parse_type_name()
            self.expect(")")
            if self.at("{"):
                return S.Cast(tn, self.parse_initializer(), t.loc)
            return S.Cast(tn, self.parse_unary(), t.loc)
        return self.parse_postfix(self.parse_primary())

    def parse_postfix(self, e: S.Expr) -> S.Expr:
        while True:
            t = self.peek()
            if t.kind != "OP":
                return e
            if t.value == "[":
                self.next()
                idx = self.parse_expr()
                self.expect("]")
                e = S.Index(e, idx, t.loc)
            elif t.value == "(":
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.parse_assign())
                    while self.at(","):
                        self.next()
                        args.append(self.parse_assign())
                self.expect(")")
                e = S.Call(e, args, t.loc)
            elif t.value in (".", "->"):
                self.next()
                name = self.expect_id().value
                e = S.Member(e, name, t.value == "->", t.loc)
            elif t.value in ("++", "--"):
                self.next()
                e = S.Unary(t.value, e, True, t.loc)
            else:
                return e

    def parse_primary(self) -> S.Expr:
        t = self.peek()
        if t.kind == "ID":
            if t.value in UNSUPPORTED_KEYWORDS:
                self.unsupported(UNSUPPORTED_KEYWORDS[t.value])
            if t.value in KEYWORDS and t.value not in ("true", "false"):
                self.error("expected expression")
            self.next()
            name = t.value
            while self.at("::"):
                self.next()
                name += "::" + self.expect_id().value
            return S.Name(name, t.loc)
        if t.kind == "NUM":
            self.next()
            return S.Num(t.value, t.loc)
        if t.kind == "CHAR":
            self.next()
            return S.CharLit(t.value, t.loc)
        if t.kind == "STR":
            self.next()
            text = t.value
            while self.peek().kind == "STR":
                text = text[:-1] + self.next().value[1:]
            return S.StrLit(text, t.loc)
        if self.at("("):
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        self.error("expected expression")


def parse_source(unit: SourceUnit) -> S.SyntaxTree:
    """Parse every file of ``unit`` into one tree.

    Raises :class:`KernelSyntaxError` or :class:`UnsupportedConstruct`.
    Recursion (direct or mutual) among in-unit functions is rejected here.
    """
    tokens, _ = preprocess(unit)
    parser = Parser(tokens)
    tree = S.SyntaxTree(parser.parse_unit(), tuple(f.file_name for f in unit.files))
    _reject_recursion(tree)
    return tree


def call_graph(tree: S.SyntaxTree) -> dict[str, set[str]]:
    defs = {f.name: f for f in tree.definitions()}
    graph: dict[str, set[str]] = {}
    for name, fn in defs.items():
        callees = set()
        for node in fn.body.walk():
            if isinstance(node, S.Call) and isinstance(node.func, S.Name) and node.func.name in defs:
                callees.add(node.func.name)
        graph[name] = graph.get(name, set()) | callees
    return graph


def _reject_recursion(tree: S.SyntaxTree) -> None:
    graph = call_graph(tree)
    state: dict[str, int] = {}

    def visit(n: str) -> str | None:
        state[n] = 1
        for m in sorted(graph.get(n, ())):
            if state.get(m) == 1:
                return m
            if m not in state:
                hit = visit(m)
                if hit:
                    return hit
        state[n] = 2
        return None

    for name in graph:
        if name not in state:
            hit = visit(name)
            if hit:
                fn = next(f for f in tree.definitions() if f.name == hit)
                raise UnsupportedConstruct("recursion", file=fn.loc.file, line=fn.loc.line,
                                           col=fn.loc.col)
