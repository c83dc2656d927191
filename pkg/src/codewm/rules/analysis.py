"""Static helpers shared by the rules: scopes, numeric-name inference,
operand shapes and statement-list traversal.  Nothing here executes code."""

from __future__ import annotations

import ast
from typing import Iterator

from ..cst import SourceDocument

SCOPES = (ast.FunctionDef, ast.AsyncFunctionDef, ast.Lambda, ast.ClassDef, ast.Module)
COMPREHENSIONS = (ast.ListComp, ast.SetComp, ast.DictComp, ast.GeneratorExp)

ARITH_OPS = (
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.FloorDiv, ast.Mod, ast.Pow,
    ast.LShift, ast.RShift, ast.BitOr, ast.BitAnd, ast.BitXor,
)
NUMERIC_CALLS = {"len", "int", "float", "abs", "ord", "round", "hash", "sum", "complex"}
NUMERIC_ANNOTATIONS = {"int", "float", "complex"}
# Builtins without side effects on their (simple) arguments.
PURE_CALLS = {
    "len", "abs", "min", "max", "sum", "sorted", "str", "int", "float", "ord",
    "chr", "round", "bool", "tuple", "set", "frozenset", "type", "repr", "hash",
}


def is_numeric_literal(node: ast.AST) -> bool:
    return (
        isinstance(node, ast.Constant)
        and isinstance(node.value, (int, float, complex))
        and not isinstance(node.value, bool)
    )


def enclosing_scope(doc: SourceDocument, node: ast.AST) -> tuple[ast.AST, list[ast.AST]]:
    """Nearest scope node plus the comprehensions crossed on the way up."""
    comps = []
    for anc in doc.ancestors(node):
        if isinstance(anc, COMPREHENSIONS):
            comps.append(anc)
        elif isinstance(anc, SCOPES):
            return anc, comps
    return doc.tree, comps


def _scope_children(node: ast.AST) -> Iterator[ast.AST]:
    """Nodes evaluated in ``node``'s scope, not descending into nested ones."""
    for child in ast.iter_child_nodes(node):
        if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            yield child
            continue
        if isinstance(child, (ast.Lambda,) + COMPREHENSIONS):
            continue
        yield child
        yield from _scope_children(child)


def _names_in(target: ast.AST) -> Iterator[str]:
    for n in ast.walk(target):
        if isinstance(n, ast.Name):
            yield n.id
        elif isinstance(n, (ast.MatchAs, ast.MatchStar)) and n.name:
            yield n.name
        elif isinstance(n, ast.MatchMapping) and n.rest:
            yield n.rest


class _Bindings:
    def __init__(self):
        self.by_name: dict[str, list[tuple]] = {}
        self.excluded: set[str] = set()

    def add(self, name, binding):
        self.by_name.setdefault(name, []).append(binding)

    def target(self, tgt, value):
        if isinstance(tgt, ast.Name):
            self.add(tgt.id, ("expr", value) if value is not None else ("other",))
        elif isinstance(tgt, (ast.Tuple, ast.List)):
            if (
                isinstance(value, (ast.Tuple, ast.List))
                and len(value.elts) == len(tgt.elts)
                and not any(isinstance(e, ast.Starred) for e in value.elts + tgt.elts)
            ):
                for t, v in zip(tgt.elts, value.elts):
                    self.target(t, v)
            else:
                for name in _names_in(tgt):
                    self.add(name, ("other",))
        elif isinstance(tgt, ast.Starred):
            for name in _names_in(tgt):
                self.add(name, ("other",))


def _collect(scope: ast.AST) -> _Bindings:
    b = _Bindings()
    if isinstance(scope, (ast.FunctionDef, ast.AsyncFunctionDef)):
        a = scope.args
        for arg in a.posonlyargs + a.args + a.kwonlyargs:
            ann = arg.annotation
            if isinstance(ann, ast.Name) and ann.id in NUMERIC_ANNOTATIONS:
                b.add(arg.arg, ("num",))
            else:
                b.add(arg.arg, ("other",))
        for arg in (a.vararg, a.kwarg):
            if arg is not None:
                b.add(arg.arg, ("other",))
    for node in _scope_children(scope):
        if isinstance(node, ast.Assign):
            for tgt in node.targets:
                b.target(tgt, node.value)
        elif isinstance(node, ast.AugAssign):
            if isinstance(node.target, ast.Name):
                ok = isinstance(node.op, ARITH_OPS)
                b.add(node.target.id, ("aug", node.value) if ok else ("other",))
        elif isinstance(node, ast.AnnAssign):
            if isinstance(node.target, ast.Name):
                if node.value is not None:
                    b.add(node.target.id, ("expr", node.value))
                elif isinstance(node.annotation, ast.Name) and node.annotation.id in NUMERIC_ANNOTATIONS:
                    b.add(node.target.id, ("num",))
                else:
                    b.add(node.target.id, ("other",))
        elif isinstance(node, (ast.For, ast.AsyncFor)):
            _bind_loop(b, node.target, node.iter)
        elif isinstance(node, ast.NamedExpr):
            b.add(node.target.id, ("expr", node.value))
        elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            b.add(node.name, ("other",))
        elif isinstance(node, (ast.Import, ast.ImportFrom)):
            for alias in node.names:
                b.add((alias.asname or alias.name).split(".")[0], ("other",))
        elif isinstance(node, ast.withitem) and node.optional_vars is not None:
            for name in _names_in(node.optional_vars):
                b.add(name, ("other",))
        elif isinstance(node, ast.ExceptHandler) and node.name:
            b.add(node.name, ("other",))
        elif isinstance(node, (ast.Global, ast.Nonlocal)):
            b.excluded.update(node.names)
        elif isinstance(node, ast.Delete):
            for tgt in node.targets:
                for name in _names_in(tgt):
                    b.add(name, ("other",))
        elif isinstance(node, ast.match_case):
            for name in _names_in(node.pattern):
                b.add(name, ("other",))
    return b


def _bind_loop(b: _Bindings, target, iterable):
    func = iterable.func.id if isinstance(iterable, ast.Call) and isinstance(iterable.func, ast.Name) else None
    if isinstance(target, ast.Name):
        b.add(target.id, ("num",) if func == "range" else ("other",))
    elif (
        func == "enumerate"
        and isinstance(target, ast.Tuple)
        and len(target.elts) == 2
        and isinstance(target.elts[0], ast.Name)
    ):
        b.add(target.elts[0].id, ("num",))
        for name in _names_in(target.elts[1]):
            b.add(name, ("other",))
    else:
        for name in _names_in(target):
            b.add(name, ("other",))


def numeric_expr(node: ast.AST, names: set[str]) -> bool:
    if is_numeric_literal(node):
        return True
    if isinstance(node, ast.Name):
        return node.id in names
    if isinstance(node, ast.BinOp):
        return isinstance(node.op, ARITH_OPS) and numeric_expr(node.left, names) and numeric_expr(node.right, names)
    if isinstance(node, ast.UnaryOp):
        return isinstance(node.op, (ast.USub, ast.UAdd, ast.Invert)) and numeric_expr(node.operand, names)
    if isinstance(node, ast.IfExp):
        return numeric_expr(node.body, names) and numeric_expr(node.orelse, names)
    if isinstance(node, ast.Call) and not node.keywords:
        f = node.func
        if isinstance(f, ast.Name) and f.id in NUMERIC_CALLS:
            return not (f.id == "sum" and len(node.args) != 1)
        if isinstance(f, ast.Attribute) and isinstance(f.value, ast.Name) and f.value.id == "math":
            return True
    return False


def numeric_names(doc: SourceDocument, scope: ast.AST) -> set[str]:
    """Greatest fixed point of names whose every binding in ``scope`` is numeric.

    Parameters count only when annotated ``int``/``float``/``complex``; any
    binding through import, ``with``, ``except``, unpacking from an opaque
    value and so on disqualifies the name.
    """
    cache = doc.cache.setdefault("numeric", {})
    if id(scope) in cache:
        return cache[id(scope)]
    b = _collect(scope)
    names = {
        n for n, bs in b.by_name.items()
        if n not in b.excluded and all(x[0] != "other" for x in bs)
    }
    changed = True
    while changed:
        changed = False
        for n in sorted(names):
            for kind, *rest in b.by_name[n]:
                if kind in ("expr", "aug") and not numeric_expr(rest[0], names):
                    names.discard(n)
                    changed = True
                    break
    cache[id(scope)] = names
    return names


def is_numeric_operand(doc: SourceDocument, node: ast.AST) -> bool:
    """Numeric literal, or a name the local inference proves numeric."""
    if is_numeric_literal(node):
        return True
    if not isinstance(node, ast.Name):
        return False
    scope, comps = enclosing_scope(doc, node)
    for comp in comps:
        for gen in comp.generators:
            if node.id in set(_names_in(gen.target)):
                return False
    if not isinstance(scope, (ast.FunctionDef, ast.AsyncFunctionDef, ast.Module)):
        return False
    return node.id in numeric_names(doc, scope)


def bound_anywhere(doc: SourceDocument) -> set[str]:
    """Every name bound somewhere in the module, any scope."""
    if "bound" not in doc.cache:
        names: set[str] = set()
        for node in doc.walk():
            if isinstance(node, ast.Name) and isinstance(node.ctx, (ast.Store, ast.Del)):
                names.add(node.id)
            elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                names.add(node.name)
            elif isinstance(node, ast.arg):
                names.add(node.arg)
            elif isinstance(node, (ast.Import, ast.ImportFrom)):
                for alias in node.names:
                    names.add((alias.asname or alias.name).split(".")[0])
            elif isinstance(node, (ast.Global, ast.Nonlocal)):
                names.update(node.names)
            elif isinstance(node, ast.ExceptHandler) and node.name:
                names.add(node.name)
            elif isinstance(node, (ast.MatchAs, ast.MatchStar)) and node.name:
                names.add(node.name)
        doc.cache["bound"] = names
    return doc.cache["bound"]


def builtin_available(doc: SourceDocument, name: str) -> bool:
    return name not in bound_anywhere(doc)


def is_simple_operand(node: ast.AST) -> bool:
    """Side-effect-free, single-line operand safe to evaluate out of order."""
    if node.lineno != node.end_lineno:
        return False
    return _simple(node)


def _simple(node: ast.AST) -> bool:
    if isinstance(node, (ast.Name, ast.Constant)):
        return True
    if isinstance(node, ast.Attribute):
        return _simple(node.value)
    if isinstance(node, ast.Subscript):
        return _simple(node.value) and _simple_slice(node.slice)
    if isinstance(node, ast.UnaryOp):
        return isinstance(node.op, (ast.USub, ast.UAdd, ast.Invert)) and _simple(node.operand)
    if isinstance(node, ast.BinOp):
        return isinstance(node.op, ARITH_OPS) and _simple(node.left) and _simple(node.right)
    if isinstance(node, ast.Call):
        return (
            isinstance(node.func, ast.Name)
            and node.func.id in PURE_CALLS
            and not node.keywords
            and all(_simple(a) for a in node.args)
        )
    return False


def _simple_slice(node: ast.AST) -> bool:
    if isinstance(node, ast.Slice):
        return all(p is None or _simple(p) for p in (node.lower, node.upper, node.step))
    if isinstance(node, ast.Tuple):
        return all(_simple_slice(e) for e in node.elts)
    return _simple(node)


def statement_lists(tree: ast.AST) -> Iterator[tuple[ast.AST, list[ast.stmt]]]:
    """Every (owner, statement list) pair in the tree."""
    for node in ast.walk(tree):
        for fld in ("body", "orelse", "finalbody"):
            value = getattr(node, fld, None)
            if isinstance(value, list) and value and isinstance(value[0], ast.stmt):
                yield node, value


def header_start_line(node: ast.stmt) -> int:
    """First line of a statement including its decorators."""
    decos = getattr(node, "decorator_list", None) or []
    return min([node.lineno] + [d.lineno for d in decos])


def plain_operator_gap(doc: SourceDocument, whole: ast.AST, left: ast.AST, right: ast.AST) -> bool:
    """``left OP right`` with bare operands and no line break or comment."""
    ws, we = doc.span(whole)
    ls, le = doc.span(left)
    rs, re_ = doc.span(right)
    if ws != ls or we != re_:
        return False
    gap = doc.slice(le, rs)
    if "\n" in gap or "#" in gap or "\\" in gap or "(" in gap or ")" in gap:
        return False
    return True
