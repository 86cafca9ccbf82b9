"""Render a syntax tree back to C text.

Macros are already substituted in the tree, so the output is a single
self-contained file. Expressions are fully parenthesised.
"""

from __future__ import annotations

from . import syntax as S


def _spec(spec: S.TypeSpec, indent: str) -> str:
    words = list(spec.words)
    targs = ""
    if spec.template_args:
        targs = "<" + ", ".join(expr(a) for a in spec.template_args) + ">"
        words[-1] = words[-1] + targs
    parts = [w for w in words if w != "typedef"]
    if spec.struct is not None:
        st = spec.struct
        text = st.kind + (f" {st.tag}" if st.tag else "")
        if st.members is not None:
            inner = "".join(f"{indent}    {_decl_stmt(m, indent + '    ')}\n" for m in st.members)
            text += " {\n" + inner + indent + "}"
        parts.append(text)
    if spec.enum is not None:
        en = spec.enum
        text = "enum" + (f" {en.tag}" if en.tag else "")
        if en.items is not None:
            items = ", ".join(i.name + (f" = {expr(i.value)}" if i.value is not None else "")
                              for i in en.items)
            text += " { " + items + " }"
        parts.append(text)
    return " ".join(parts)


def _declarator(d: S.Declarator) -> str:
    text = "*" * d.pointer + ("&" if d.reference else "") + (d.name or "")
    for dim in d.dims:
        text += "[" + (expr(dim) if dim is not None else "") + "]"
    if d.params is not None:
        ps = [(_spec(p.spec, "") + " " + _declarator(p.declarator)).strip() for p in d.params]
        if d.variadic:
            ps.append("...")
        text += "(" + (", ".join(ps) if ps else "void") + ")"
    if d.bitfield is not None:
        text += " : " + expr(d.bitfield)
    return text


def _decl_stmt(st: S.DeclStmt, indent: str) -> str:
    head = ("typedef " if st.typedef else "") + _spec(st.spec, indent)
    decls = []
    for v in st.decls:
        t = _declarator(v.declarator)
        if v.init is not None:
            t += " = " + expr(v.init)
        decls.append(t)
    return head + (" " + ", ".join(decls) if decls else "") + ";"


def _type_name(t: S.TypeName) -> str:
    text = _spec(t.spec, "") + (" " + "*" * t.pointer if t.pointer else "")
    for dim in t.dims:
        text += "[" + (expr(dim) if dim is not None else "") + "]"
    return text


def expr(e) -> str:
    if isinstance(e, S.Name):
        return e.name
    if isinstance(e, (S.Num, S.CharLit, S.StrLit)):
        return e.text
    if isinstance(e, S.Unary):
        inner = expr(e.operand)
        return f"({inner}{e.op})" if e.postfix else f"({e.op}{inner})"
    if isinstance(e, S.Binary):
        return f"({expr(e.left)} {e.op} {expr(e.right)})"
    if isinstance(e, S.Assign):
        return f"({expr(e.target)} {e.op} {expr(e.value)})"
    if isinstance(e, S.Ternary):
        return f"({expr(e.cond)} ? {expr(e.then)} : {expr(e.other)})"
    if isinstance(e, S.Call):
        return f"{expr(e.func)}(" + ", ".join(expr(a) for a in e.args) + ")"
    if isinstance(e, S.Index):
        return f"{expr(e.base)}[{expr(e.index)}]"
    if isinstance(e, S.Member):
        return f"{expr(e.base)}{'->' if e.arrow else '.'}{e.name}"
    if isinstance(e, S.Cast):
        return f"(({_type_name(e.type)}){expr(e.expr)})"
    if isinstance(e, S.SizeOf):
        if isinstance(e.arg, S.TypeName):
            return f"sizeof({_type_name(e.arg)})"
        return f"sizeof({expr(e.arg)})"
    if isinstance(e, S.Comma):
        return ", ".join(expr(x) for x in e.exprs)
    if isinstance(e, S.InitList):
        return "{" + ", ".join(expr(x) for x in e.items) + "}"
    raise TypeError(f"cannot print {type(e).__name__}")


def _loop_expr(e) -> str:
    # keep assignments unparenthesised in for clauses for readability
    if isinstance(e, S.Assign):
        return f"{expr(e.target)} {e.op} {expr(e.value)}"
    if isinstance(e, S.Comma):
        return ", ".join(_loop_expr(x) for x in e.exprs)
    return expr(e)


def stmt(st, indent: str = "") -> list[str]:
    ind2 = indent + "    "
    if isinstance(st, S.PragmaStmt):
        return [st.text]
    if isinstance(st, S.Compound):
        lines = [indent + "{"]
        for it in st.items:
            lines += stmt(it, ind2)
        return lines + [indent + "}"]
    if isinstance(st, S.DeclStmt):
        return [indent + _decl_stmt(st, indent)]
    if isinstance(st, S.ExprStmt):
        return [indent + _loop_expr(st.expr) + ";"]
    if isinstance(st, S.Empty):
        return [indent + ";"]
    if isinstance(st, S.For):
        if isinstance(st.init, S.DeclStmt):
            init = _decl_stmt(st.init, "")
        else:
            init = (_loop_expr(st.init) if st.init is not None else "") + ";"
        cond = expr(st.cond) if st.cond is not None else ""
        step = _loop_expr(st.step) if st.step is not None else ""
        return [f"{indent}for ({init} {cond}; {step})"] + _body(st.body, indent)
    if isinstance(st, S.If):
        lines = [f"{indent}if ({expr(st.cond)})"] + _body(st.then, indent)
        if st.other is not None:
            lines += [indent + "else"] + _body(st.other, indent)
        return lines
    if isinstance(st, S.Switch):
        return [f"{indent}switch ({expr(st.expr)})"] + _body(st.body, indent)
    if isinstance(st, S.Case):
        return [indent + ("default:" if st.value is None else f"case {expr(st.value)}:")]
    if isinstance(st, S.Return):
        return [indent + "return" + (f" {expr(st.value)}" if st.value is not None else "") + ";"]
    if isinstance(st, S.Jump):
        return [indent + st.kind + ";"]
    raise TypeError(f"cannot print {type(st).__name__}")


def _body(st, indent: str) -> list[str]:
    if isinstance(st, S.Compound):
        return stmt(st, indent)
    return [indent + "{"] + stmt(st, indent + "    ") + [indent + "}"]


def _item(it) -> list[str]:
    if isinstance(it, S.FunctionDef):
        head = _spec(it.spec, "") + " " + _declarator(it.declarator)
        if it.body is None:
            return [head + ";"]
        return [head] + stmt(it.body, "")
    if isinstance(it, S.DeclStmt):
        return [_decl_stmt(it, "")]
    if isinstance(it, S.PragmaStmt):
        return [it.text]
    if isinstance(it, S.LinkageBlock):
        lines = []
        for x in it.items:
            lines += _item(x)
        return lines
    raise TypeError(f"cannot print {type(it).__name__}")


def pretty_print(tree: S.SyntaxTree) -> str:
    out = []
    for it in tree.items:
        out += _item(it)
        out.append("")
    return "\n".join(out)
