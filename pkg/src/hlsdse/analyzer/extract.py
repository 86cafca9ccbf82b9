"""Structural facts needed for pragma exploration.

``extract_info`` walks a parsed tree and produces a :class:`KernelInfo`:
per-function loop forests with trip counts and insertion anchors, arrays with
their extents, the call graph and the top function. ``#pragma HLS`` lines
already present in the tree are bound to their targets (``directives``) so a
configuration can be recovered from annotated code; they never affect the
structure itself.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..errors import AmbiguousTop, MissingTop
from . import syntax as S
from .lexer import Location
from .parser import call_graph

UNKNOWN = None  # trip count that cannot be resolved statically

ELEMENT_BITS = {
    "char": 8, "signed char": 8, "unsigned char": 8, "bool": 8, "_Bool": 8,
    "short": 16, "unsigned short": 16, "short int": 16, "half": 16,
    "int": 32, "unsigned": 32, "unsigned int": 32, "signed": 32, "signed int": 32,
    "long": 64, "unsigned long": 64, "long int": 64, "long long": 64,
    "unsigned long long": 64, "long long int": 64,
    "float": 32, "double": 64, "long double": 128,
    "int8_t": 8, "uint8_t": 8, "int16_t": 16, "uint16_t": 16, "int32_t": 32,
    "uint32_t": 32, "int64_t": 64, "uint64_t": 64, "size_t": 64,
}
DEFAULT_BITS = 32


@dataclass(frozen=True)
class ArrayInfo:
    id: str                         # variable name, suffixed when shadowed within a function
    name: str                       # the C identifier
    scope: str                      # function name, or "" for file-scope arrays
    dims: tuple[int, ...]
    element_bits: int
    definition_location: Location
    insert_after: Optional[Location] = None   # end of the declaration; None for params/globals
    is_param: bool = False

    @property
    def key(self) -> str:
        return f"{self.scope}/{self.id}"

    @property
    def size(self) -> int:
        return math.prod(self.dims)


@dataclass
class LoopInfo:
    id: str                         # function-scoped path: L0, L0.1, ...
    function: str
    trip_count: Optional[int]
    induction_var: Optional[str]
    header_location: Location
    body_start_location: Location   # '{' of a braced body, else first token of the body
    body_end: int                   # offset one past the body
    body_braced: bool
    body_stmt_count: int
    array_accesses: tuple = ()      # ((array key, accesses per iteration), ...)
    multiply_stmts: int = 0
    indexed: tuple = ()             # ((array key, dim), ...) subscripts using the induction var
    children: list = field(default_factory=list)
    depth: int = 0

    @property
    def key(self) -> str:
        return f"{self.function}/{self.id}"

    def walk(self) -> Iterator["LoopInfo"]:
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class FunctionInfo:
    name: str
    location: Location
    body_start_location: Location   # the '{'
    calls: tuple[str, ...]
    loops: list                     # top-level LoopInfo forest
    arrays: list                    # ArrayInfo declared in this function (params first)

    def iter_loops(self) -> Iterator[LoopInfo]:
        for l in self.loops:
            yield from l.walk()


@dataclass(frozen=True)
class BoundDirective:
    """A ``#pragma HLS`` line resolved to what it annotates."""
    directive: str                  # pipeline | unroll | array_partition | inline | other
    params: tuple                   # ((key, value), ...) in source order
    function: str
    loop: Optional[str]             # loop key of the innermost enclosing loop
    array: Optional[str]            # array key for array_partition
    location: Location


@dataclass
class KernelInfo:
    functions: list
    top_function: str
    top_location: Location
    arrays: list                    # every ArrayInfo, functions in order then globals
    constants: dict
    directives: list = field(default_factory=list)

    def function(self, name: str) -> FunctionInfo:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def top(self) -> FunctionInfo:
        return self.function(self.top_function)

    @property
    def loop_tree(self) -> dict:
        return {f.name: f.loops for f in self.functions}

    def iter_loops(self) -> Iterator[LoopInfo]:
        for f in self.functions:
            yield from f.iter_loops()

    def loop(self, key: str) -> LoopInfo:
        for l in self.iter_loops():
            if l.key == key:
                return l
        raise KeyError(key)

    def array(self, key: str) -> ArrayInfo:
        for a in self.arrays:
            if a.key == key:
                return a
        raise KeyError(key)

    def global_arrays(self) -> list:
        return [a for a in self.arrays if a.scope == ""]

    def ancestors(self, loop_key: str) -> list:
        """Loop keys enclosing ``loop_key``, outermost first."""
        for f in self.functions:
            path = _find_path(f.loops, loop_key)
            if path is not None:
                return [l.key for l in path[:-1]]
        raise KeyError(loop_key)

    def reachable_functions(self) -> list:
        """Functions reachable from the top, in source order."""
        by_name = {f.name: f for f in self.functions}
        seen = set()
        stack = [self.top_function]
        while stack:
            n = stack.pop()
            if n in seen or n not in by_name:
                continue
            seen.add(n)
            stack.extend(by_name[n].calls)
        return [f for f in self.functions if f.name in seen]

    def signature(self):
        """Location-free structural summary, used to compare analyses."""
        def loop_sig(l: LoopInfo):
            return (l.id, l.trip_count, l.body_stmt_count, l.array_accesses, l.multiply_stmts,
                    l.indexed, tuple(loop_sig(c) for c in l.children))
        return (
            self.top_function,
            tuple((f.name, f.calls, tuple(loop_sig(l) for l in f.loops)) for f in self.functions),
            tuple((a.key, a.dims, a.element_bits, a.is_param) for a in self.arrays),
        )


def _find_path(loops, key):
    for l in loops:
        if l.key == key:
            return [l]
        sub = _find_path(l.children, key)
        if sub is not None:
            return [l] + sub
    return None


# ---- constant folding ------------------------------------------------------

_INT_LITERAL = re.compile(r"^(0[xX][0-9a-fA-F]+|0[bB][01]+|0[0-7]*|[1-9]\d*)[uUlL]*$")


def int_literal(text: str) -> Optional[int]:
    t = text.replace("'", "")
    m = _INT_LITERAL.match(t)
    if not m:
        return None
    body = m.group(1)
    if body[:2] in ("0x", "0X"):
        return int(body, 16)
    if body[:2] in ("0b", "0B"):
        return int(body, 2)
    if len(body) > 1 and body[0] == "0":
        return int(body, 8)
    return int(body)


def const_eval(e, constants: dict) -> Optional[int]:
    """Fold an integer constant expression; None when not constant."""
    if e is None:
        return None
    if isinstance(e, S.Num):
        return int_literal(e.text)
    if isinstance(e, S.CharLit):
        body = e.text[1:-1]
        if len(body) == 1:
            return ord(body)
        return None
    if isinstance(e, S.Name):
        v = constants.get(e.name)
        return v if isinstance(v, int) else None
    if isinstance(e, S.Cast):
        return const_eval(e.expr, constants)
    if isinstance(e, S.Unary) and not e.postfix:
        v = const_eval(e.operand, constants)
        if v is None:
            return None
        return {"-": -v, "+": v, "~": ~v, "!": int(not v)}.get(e.op)
    if isinstance(e, S.Binary):
        a = const_eval(e.left, constants)
        b = const_eval(e.right, constants)
        if a is None or b is None:
            return None
        try:
            if e.op == "/":
                return int(a / b) if b else None
            if e.op == "%":
                return int(math.fmod(a, b)) if b else None
            return {
                "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                "<<": lambda: a << b, ">>": lambda: a >> b, "&": lambda: a & b,
                "|": lambda: a | b, "^": lambda: a ^ b, "<": lambda: int(a < b),
                ">": lambda: int(a > b), "<=": lambda: int(a <= b), ">=": lambda: int(a >= b),
                "==": lambda: int(a == b), "!=": lambda: int(a != b),
                "&&": lambda: int(bool(a) and bool(b)), "||": lambda: int(bool(a) or bool(b)),
            }[e.op]()
        except (KeyError, ValueError):
            return None
    if isinstance(e, S.Ternary):
        c = const_eval(e.cond, constants)
        if c is None:
            return None
        return const_eval(e.then if c else e.other, constants)
    return None


# ---- trip counts -----------------------------------------------------------

def _induction(loop: S.For) -> tuple[Optional[str], Optional[S.Expr]]:
    init = loop.init
    if isinstance(init, S.DeclStmt) and len(init.decls) == 1:
        d = init.decls[0]
        return d.name, d.init
    if isinstance(init, S.Assign) and init.op == "=" and isinstance(init.target, S.Name):
        return init.target.name, init.value
    if isinstance(init, S.Comma) and init.exprs:
        first = init.exprs[0]
        if isinstance(first, S.Assign) and first.op == "=" and isinstance(first.target, S.Name):
            return first.target.name, first.value
    return None, None


def _step(expr, var: str, constants: dict) -> Optional[int]:
    if isinstance(expr, S.Comma):
        steps = [_step(x, var, constants) for x in expr.exprs]
        steps = [s for s in steps if s is not None]
        return steps[0] if len(steps) == 1 else None
    if isinstance(expr, S.Unary) and isinstance(expr.operand, S.Name) and expr.operand.name == var:
        return {"++": 1, "--": -1}.get(expr.op)
    if isinstance(expr, S.Assign) and isinstance(expr.target, S.Name) and expr.target.name == var:
        if expr.op in ("+=", "-="):
            s = const_eval(expr.value, constants)
            if s is None:
                return None
            return s if expr.op == "+=" else -s
        if expr.op == "=" and isinstance(expr.value, S.Binary) and expr.value.op in ("+", "-"):
            b = expr.value
            if isinstance(b.left, S.Name) and b.left.name == var:
                s = const_eval(b.right, constants)
                if s is None:
                    return None
                return s if b.op == "+" else -s
            if b.op == "+" and isinstance(b.right, S.Name) and b.right.name == var:
                return const_eval(b.left, constants)
    return None


def infer_trip_count(loop: S.For, constants: dict | None = None) -> Optional[int]:
    """Iterations of a canonical ``for`` loop, or UNKNOWN (None).

    Canonical means ``v = A``; ``v < B`` (or ``<=``, ``>``, ``>=``, ``!=``, either
    operand order); ``v += S`` / ``v++`` / ``v -= S`` / ``v--``, with A, B and S
    integer constants after macro substitution.
    """
    constants = constants or {}
    var, init = _induction(loop)
    if var is None:
        return UNKNOWN
    start = const_eval(init, constants)
    if start is None or not isinstance(loop.cond, S.Binary):
        return UNKNOWN
    cond = loop.cond
    op = cond.op
    if isinstance(cond.left, S.Name) and cond.left.name == var:
        bound = const_eval(cond.right, constants)
    elif isinstance(cond.right, S.Name) and cond.right.name == var:
        bound = const_eval(cond.left, constants)
        op = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "!=": "!="}.get(op)
    else:
        return UNKNOWN
    step = _step(loop.step, var, constants)
    if bound is None or step is None or step == 0 or op is None:
        return UNKNOWN
    if op == "<" and step > 0:
        span = bound - start
    elif op == "<=" and step > 0:
        span = bound - start + 1
    elif op == ">" and step < 0:
        span = start - bound
    elif op == ">=" and step < 0:
        span = start - bound + 1
    elif op == "!=":
        diff = bound - start
        if diff == 0 or diff % step or (diff > 0) != (step > 0):
            return UNKNOWN
        return diff // step
    else:
        return UNKNOWN
    if span <= 0:
        return UNKNOWN
    return -(-span // abs(step))


# ---- extraction ------------------------------------------------------------

def _element_bits(spec: S.TypeSpec, pointer: int, struct_bits: dict, typedef_bits: dict) -> int:
    if pointer:
        return 64
    if spec.template_args:
        return const_eval(spec.template_args[0], {}) or DEFAULT_BITS
    base = spec.base
    if base in ELEMENT_BITS:
        return ELEMENT_BITS[base]
    if base in typedef_bits:
        return typedef_bits[base]
    if spec.struct is not None:
        if spec.struct.members is not None:
            return _struct_size(spec.struct, struct_bits, typedef_bits)
        return struct_bits.get(spec.struct.tag, DEFAULT_BITS)
    return DEFAULT_BITS


def _struct_size(st: S.StructSpec, struct_bits, typedef_bits) -> int:
    total = 0
    for m in st.members or []:
        for d in m.decls:
            bits = _element_bits(m.spec, d.declarator.pointer, struct_bits, typedef_bits)
            n = 1
            for dim in d.declarator.dims:
                n *= const_eval(dim, {}) or 1
            total += bits * n
    total = total or DEFAULT_BITS
    if st.tag:
        struct_bits[st.tag] = total
    return total


def _array_root(e) -> tuple[Optional[str], list]:
    """For ``a[i][j]`` return ("a", [i, j]); otherwise (None, [])."""
    subs = []
    while isinstance(e, S.Index):
        subs.append(e.index)
        e = e.base
    if isinstance(e, S.Name) and subs:
        return e.name, list(reversed(subs))
    return None, []


def _mentions(e, var: str) -> bool:
    return any(isinstance(n, S.Name) and n.name == var for n in e.walk())


def _has_multiply(e) -> bool:
    for n in e.walk():
        if isinstance(n, S.Binary) and n.op == "*":
            return True
        if isinstance(n, S.Assign) and n.op == "*=":
            return True
    return False


_KV = re.compile(r"([A-Za-z_]\w*)\s*=\s*([^\s]+)")


def parse_pragma_text(text: str) -> Optional[tuple[str, tuple]]:
    """Split ``#pragma HLS name k=v ...`` into (name, params); None for non-HLS pragmas."""
    parts = text.split()
    if len(parts) < 3 or parts[0] != "#pragma" or parts[1].upper() != "HLS":
        return None
    name = parts[2].lower()
    rest = " ".join(parts[3:])
    params = []
    consumed = _KV.sub(lambda m: (params.append((m.group(1).lower(), m.group(2))), " ")[1], rest)
    for word in consumed.split():
        params.append((word.lower(), ""))
    return name, tuple(params)


class _Extractor:
    def __init__(self, tree: S.SyntaxTree):
        self.tree = tree
        self.constants: dict[str, int] = {}
        self.struct_bits: dict[str, int] = {}
        self.typedef_bits: dict[str, int] = {}
        self.global_scope: dict[str, Optional[ArrayInfo]] = {}
        self.global_arrays: list[ArrayInfo] = []
        self.directives: list[BoundDirective] = []

    # constants and type sizes come from every declaration in tree order
    def note_decl(self, d: S.DeclStmt) -> None:
        if d.spec.struct is not None and d.spec.struct.members is not None:
            _struct_size(d.spec.struct, self.struct_bits, self.typedef_bits)
        if d.spec.enum is not None and d.spec.enum.items:
            value = -1
            for item in d.spec.enum.items:
                v = const_eval(item.value, self.constants) if item.value is not None else value + 1
                value = v if v is not None else value + 1
                self.constants[item.name] = value
        for v in d.decls:
            if d.typedef and v.name:
                bits = _element_bits(d.spec, v.declarator.pointer, self.struct_bits, self.typedef_bits)
                n = 1
                for dim in v.declarator.dims:
                    n *= const_eval(dim, self.constants) or 1
                self.typedef_bits[v.name] = bits * n
            elif d.spec.is_const and v.init is not None and not v.declarator.dims \
                    and not v.declarator.pointer:
                c = const_eval(v.init, self.constants)
                if c is not None:
                    self.constants[v.name] = c

    def make_array(self, name: str, declarator: S.Declarator, spec: S.TypeSpec, scope: str,
                   ident: str, insert_after: Optional[Location], is_param: bool) -> Optional[ArrayInfo]:
        if not declarator.dims:
            return None
        dims = []
        for dim in declarator.dims:
            v = const_eval(dim, self.constants)
            if v is None or v < 1:
                return None
            dims.append(v)
        bits = _element_bits(spec, declarator.pointer, self.struct_bits, self.typedef_bits)
        return ArrayInfo(ident, name, scope, tuple(dims), bits, declarator.loc, insert_after, is_param)

    def run(self, top_hint: Optional[str]) -> KernelInfo:
        graph = call_graph(self.tree)
        defs = self.tree.definitions()
        functions: list[FunctionInfo] = []
        fn_nodes: dict[str, S.FunctionDef] = {}

        def top_level(items):
            for it in items:
                if isinstance(it, S.LinkageBlock):
                    yield from top_level(it.items)
                else:
                    yield it

        items = list(top_level(self.tree.items))
        # globals are visible in every function regardless of position
        for it in items:
            if isinstance(it, S.DeclStmt):
                self.note_decl(it)
                if it.typedef:
                    continue
                for v in it.decls:
                    arr = self.make_array(v.name, v.declarator, it.spec, "", v.name, None, False)
                    if arr is not None:
                        self.global_arrays.append(arr)
                    self.global_scope[v.name] = arr
        for it in items:
            if isinstance(it, S.FunctionDef) and it.body is not None:
                if it.name in fn_nodes:
                    continue
                fn_nodes[it.name] = it
                functions.append(self.function(it, graph.get(it.name, set())))

        if not defs:
            raise MissingTop("no function definitions in unit")
        names = [f.name for f in functions]
        if top_hint:
            if top_hint not in names:
                raise MissingTop(f"top function {top_hint!r} not found")
            top = top_hint
        else:
            called = set().union(*graph.values()) if graph else set()
            roots = [n for n in names if n not in called]
            if len(roots) != 1:
                if not roots:
                    raise MissingTop("every function is called by another")
                raise AmbiguousTop(f"several uncalled functions: {', '.join(roots)}")
            top = roots[0]
        arrays = [a for f in functions for a in f.arrays] + self.global_arrays
        self.bind_global_directives(items, top)
        return KernelInfo(functions, top, fn_nodes[top].loc, arrays, dict(self.constants),
                          self.directives)

    def bind_global_directives(self, items, top: str) -> None:
        for it in items:
            if isinstance(it, S.PragmaStmt):
                self.bind_pragma(it, top, None, [self.global_scope])

    def function(self, fn: S.FunctionDef, callees: set) -> FunctionInfo:
        self.fn = fn.name
        self.arrays: list[ArrayInfo] = []
        self.name_counts: dict[str, int] = {}
        scope: dict[str, Optional[ArrayInfo]] = {}
        for p in fn.params:
            d = p.declarator
            if not d.name:
                continue
            arr = self.make_array(d.name, d, p.spec, fn.name, self.unique(d.name), None, True)
            if arr is not None:
                self.arrays.append(arr)
            scope[d.name] = arr
        self.scopes = [self.global_scope, scope]
        self.loop_stack: list[LoopInfo] = []
        loops: list[LoopInfo] = []
        self.block(fn.body.items, loops)
        return FunctionInfo(fn.name, fn.loc, fn.body.loc,
                            tuple(sorted(callees)), loops, self.arrays)

    def unique(self, name: str) -> str:
        k = self.name_counts.get(name, 0)
        self.name_counts[name] = k + 1
        return name if k == 0 else f"{name}.{k}"

    def lookup(self, name: str) -> Optional[ArrayInfo]:
        for sc in reversed(self.scopes):
            if name in sc:
                return sc[name]
        return None

    # statements ---------------------------------------------------------------

    def block(self, items, loops: list) -> None:
        self.scopes.append({})
        for st in items:
            self.stmt(st, loops)
        self.scopes.pop()

    def stmt(self, st, loops: list) -> None:
        if isinstance(st, S.Compound):
            self.block(st.items, loops)
        elif isinstance(st, S.DeclStmt):
            self.note_decl(st)
            if st.typedef:
                return
            for v in st.decls:
                arr = None
                if v.declarator.dims:
                    end = Location(st.loc.file, st.loc.line, st.loc.col, st.end)
                    arr = self.make_array(v.name, v.declarator, st.spec, self.fn,
                                          self.unique(v.name), end, False)
                    if arr is not None:
                        self.arrays.append(arr)
                self.scopes[-1][v.name] = arr
        elif isinstance(st, S.For):
            self.loop(st, loops)
        elif isinstance(st, S.If):
            self.stmt(st.then, loops)
            if st.other is not None:
                self.stmt(st.other, loops)
        elif isinstance(st, S.Switch):
            self.stmt(st.body, loops)
        elif isinstance(st, S.PragmaStmt):
            loop = self.loop_stack[-1].key if self.loop_stack else None
            self.bind_pragma(st, self.fn, loop, self.scopes)

    def loop(self, st: S.For, siblings: list) -> None:
        parent = self.loop_stack[-1] if self.loop_stack else None
        index = len(siblings)
        ident = f"{parent.id}.{index}" if parent else f"L{index}"
        var, _ = _induction(st)
        braced = isinstance(st.body, S.Compound)
        info = LoopInfo(
            id=ident, function=self.fn, trip_count=infer_trip_count(st, self.constants),
            induction_var=var, header_location=st.loc, body_start_location=st.body.loc,
            body_end=st.body.end, body_braced=braced, body_stmt_count=0,
            depth=len(self.loop_stack),
        )
        siblings.append(info)
        self.scopes.append({})
        if isinstance(st.init, S.DeclStmt):
            self.note_decl(st.init)
            for v in st.init.decls:
                self.scopes[-1][v.name] = None
        self.loop_stack.append(info)
        # statements of the body (child loops register themselves)
        self.stmt(st.body, info.children)
        stmts = 0
        mults = 0
        for node, _ in self.direct_nodes(st.body):
            if isinstance(node, S.ExprStmt):
                stmts += 1
                if _has_multiply(node.expr):
                    mults += 1
        accesses: dict[str, int] = {}
        for e in [st.cond, st.step, *self.direct_exprs(st.body)]:
            if e is None:
                continue
            for n in self.outer_indexes(e):
                root, _ = _array_root(n)
                arr = self.lookup_after(root, st)
                if arr is not None:
                    accesses[arr.key] = accesses.get(arr.key, 0) + 1
        info.body_stmt_count = max(1, stmts)
        info.multiply_stmts = mults
        self.loop_stack.pop()
        self.scopes.pop()
        info.array_accesses = tuple(sorted(accesses.items()))
        if var is not None:
            indexed = set()
            for n in st.body.walk():
                if isinstance(n, S.Index):
                    root, subs = _array_root(n)
                    if root is None:
                        continue
                    arr = self.lookup_after(root, st)
                    if arr is None:
                        continue
                    for k, sub in enumerate(subs):
                        if _mentions(sub, var):
                            indexed.add((arr.key, k + 1))
            info.indexed = tuple(sorted(indexed))

    def lookup_after(self, name: str, loop: S.For) -> Optional[ArrayInfo]:
        arr = self.lookup(name)
        if arr is not None:
            return arr
        # arrays declared inside the loop body
        for a in reversed(self.arrays):
            if a.name == name and a.definition_location.offset > loop.loc.offset \
                    and a.definition_location.file == loop.loc.file \
                    and a.definition_location.offset < loop.end:
                return a
        return None

    def direct_nodes(self, st):
        """Statements of a loop body, not descending into nested loops."""
        if isinstance(st, S.For):
            return
        yield st, False
        if isinstance(st, S.Compound):
            for it in st.items:
                yield from self.direct_nodes(it)
        elif isinstance(st, S.If):
            yield from self.direct_nodes(st.then)
            if st.other is not None:
                yield from self.direct_nodes(st.other)
        elif isinstance(st, S.Switch):
            yield from self.direct_nodes(st.body)

    def direct_exprs(self, st):
        for node, _ in self.direct_nodes(st):
            if isinstance(node, S.ExprStmt):
                yield node.expr
            elif isinstance(node, S.If):
                yield node.cond
            elif isinstance(node, S.Switch):
                yield node.expr
            elif isinstance(node, S.Return):
                yield node.value
            elif isinstance(node, S.DeclStmt):
                for v in node.decls:
                    yield v.init

    def outer_indexes(self, e):
        """Outermost subscript chains in ``e`` (``a[i][j]`` counts once)."""
        if isinstance(e, S.Index):
            root, subs = _array_root(e)
            if root is not None:
                yield e
                for s in subs:
                    yield from self.outer_indexes(s)
                return
        for c in e.children():
            yield from self.outer_indexes(c)

    def bind_pragma(self, st: S.PragmaStmt, fn: str, loop: Optional[str], scopes) -> None:
        parsed = parse_pragma_text(st.text)
        if parsed is None:
            return
        name, params = parsed
        array = None
        if name == "array_partition":
            var = dict(params).get("variable")
            if var:
                for sc in reversed(scopes):
                    if var in sc:
                        arr = sc[var]
                        array = arr.key if arr is not None else None
                        break
        self.directives.append(BoundDirective(name, params, fn, loop, array, st.loc))


def extract_info(tree: S.SyntaxTree, top_hint: Optional[str] = None) -> KernelInfo:
    """Analyze ``tree``; the top function is ``top_hint`` or the unique uncalled function."""
    return _Extractor(tree).run(top_hint)


def analyze(unit, top_hint: Optional[str] = None) -> KernelInfo:
    from .parser import parse_source
    return extract_info(parse_source(unit), top_hint if top_hint is not None else unit.top_hint)
