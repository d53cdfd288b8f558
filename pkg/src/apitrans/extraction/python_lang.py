"""Python frontend: normalization, function segmentation, call extraction.

Parsing is done with the stdlib ``ast`` module; comment and string spans
for normalization come from ``tokenize``. Call receivers are dropped
unless the receiver is a plain identifier chain whose root is not
value-bound in the enclosing scope chain (so ``self.helper(x)`` yields
``helper/1`` while ``math.sqrt(x)`` keeps the module path). Import-bound
names stay namespace-like on purpose.
"""

from __future__ import annotations

import ast
import io
import tokenize

from ..errors import ExtractionError
from ..model import ApiCall, CodeSnippet, Language, SnippetOrigin
from .normalize import normalize_with_spans


def _line_offsets(text: str) -> list[int]:
    offsets = [0]
    for line in text.splitlines(keepends=True):
        offsets.append(offsets[-1] + len(line))
    return offsets


def _byte_line_offsets(text: str) -> list[int]:
    offsets = [0]
    for line in text.splitlines(keepends=True):
        offsets.append(offsets[-1] + len(line.encode("utf-8")))
    return offsets


def normalize(text: str) -> str:
    """Strip comments, blank lines, and redundant space runs."""
    line_offsets = _line_offsets(text)

    def to_offset(pos: tuple[int, int]) -> int:
        row, col = pos
        return line_offsets[row - 1] + col

    comments: list[tuple[int, int]] = []
    strings: list[tuple[int, int]] = []
    try:
        for tok in tokenize.generate_tokens(io.StringIO(text).readline):
            if tok.type == tokenize.COMMENT:
                comments.append((to_offset(tok.start), to_offset(tok.end)))
            elif tok.type == tokenize.STRING:
                strings.append((to_offset(tok.start), to_offset(tok.end)))
    except (tokenize.TokenError, IndentationError, SyntaxError) as exc:
        raise ExtractionError(f"cannot tokenize Python source: {exc}") from exc
    return normalize_with_spans(text, comments, strings)


def _parse(text: str) -> ast.Module:
    try:
        return ast.parse(text)
    except SyntaxError as exc:
        raise ExtractionError(
            "Python syntax error: " + (exc.msg or "invalid syntax"),
            line=exc.lineno,
            col=exc.offset,
        ) from exc


def segment(text: str, source_id: str = "", path: str = "") -> list[CodeSnippet]:
    """One snippet per function or method definition, in file order.

    Nested functions stay inside their enclosing function's snippet.
    Snippets that fail to re-parse after dedenting (for instance multiline
    strings flowing left of the definition indent) are skipped.
    """
    normalized = normalize(text)
    if not normalized:
        return []
    tree = _parse(normalized)
    lines = normalized.split("\n")
    snippets: list[CodeSnippet] = []

    def visit_body(body: list[ast.stmt], qual_prefix: str) -> None:
        for node in body:
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                start = node.lineno
                if node.decorator_list:
                    start = min(d.lineno for d in node.decorator_list)
                    # the decorator line starts one column left of the expression
                    start = min(start, node.lineno)
                raw = "\n".join(lines[start - 1 : node.end_lineno])
                snippet_text = _dedent_to(raw, lines[node.lineno - 1])
                name = qual_prefix + node.name
                try:
                    ast.parse(snippet_text)
                except SyntaxError:
                    continue
                snippets.append(
                    CodeSnippet(
                        language=Language.PYTHON,
                        text=snippet_text,
                        origin=SnippetOrigin(source_id, path, name),
                    )
                )
            elif isinstance(node, ast.ClassDef):
                visit_body(node.body, qual_prefix + node.name + ".")

    visit_body(tree.body, "")
    return snippets


def _dedent_to(block: str, def_line: str) -> str:
    indent = def_line[: len(def_line) - len(def_line.lstrip())]
    if not indent:
        return block
    out = []
    for line in block.split("\n"):
        out.append(line[len(indent):] if line.startswith(indent) else line)
    return "\n".join(out)


_NAMESPACE_BINDERS = (ast.Import, ast.ImportFrom)


def _value_bound_names(node: ast.AST, include_params: bool) -> set[str]:
    """Names bound to values directly in ``node``'s scope.

    Nested function/class bodies contribute only their own names; import
    aliases are excluded so imported modules keep their dotted paths.
    """
    bound: set[str] = set()
    if include_params and isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.Lambda)):
        a = node.args
        for arg in [*a.posonlyargs, *a.args, *a.kwonlyargs]:
            bound.add(arg.arg)
        if a.vararg:
            bound.add(a.vararg.arg)
        if a.kwarg:
            bound.add(a.kwarg.arg)

    def visit(n: ast.AST) -> None:
        for child in ast.iter_child_nodes(n):
            if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                bound.add(child.name)
                continue
            if isinstance(child, ast.Lambda):
                continue
            if isinstance(child, _NAMESPACE_BINDERS):
                continue
            if isinstance(child, ast.Name) and isinstance(child.ctx, ast.Store):
                bound.add(child.id)
            if isinstance(child, ast.ExceptHandler) and child.name:
                bound.add(child.name)
            visit(child)

    visit(node)
    return bound


def extract_calls(text: str) -> list[ApiCall]:
    """All named call sites in ``text``, ordered by call-site span start."""
    tree = _parse(text)
    byte_offsets = _byte_line_offsets(text)

    def off(lineno: int, col: int) -> int:
        return byte_offsets[lineno - 1] + col

    calls: list[ApiCall] = []

    def handle_call(node: ast.Call, bound: set[str]) -> None:
        func = node.func
        arg_count = len(node.args) + len(node.keywords)
        if isinstance(func, ast.Name):
            start = off(func.lineno, func.col_offset)
            end = off(func.end_lineno, func.end_col_offset)
            calls.append(ApiCall(func.id, arg_count, (start, end)))
            return
        if isinstance(func, ast.Attribute):
            attrs: list[str] = []
            cur: ast.expr = func
            while isinstance(cur, ast.Attribute):
                attrs.insert(0, cur.attr)
                cur = cur.value
            attr_end = off(func.end_lineno, func.end_col_offset)
            attr_start = attr_end - len(attrs[-1].encode("utf-8"))
            if isinstance(cur, ast.Name):
                chain = [cur.id] + attrs
                if cur.id not in bound:
                    start = off(cur.lineno, cur.col_offset)
                    calls.append(ApiCall(".".join(chain), arg_count, (start, attr_end)))
                else:
                    calls.append(
                        ApiCall(
                            attrs[-1],
                            arg_count,
                            (attr_start, attr_end),
                            receiver_hint=".".join(chain[:-1]),
                        )
                    )
            else:
                # receiver is a non-trivial expression: keep the final name only
                calls.append(ApiCall(attrs[-1], arg_count, (attr_start, attr_end)))
            return
        # calls of lambdas, subscripts, call results: no API name to record

    def walk(node: ast.AST, bound: set[str]) -> None:
        if isinstance(node, ast.Call):
            handle_call(node, bound)
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            for deco in node.decorator_list:
                walk(deco, bound)
            inner = bound | _value_bound_names(node, include_params=True)
            for default in [*node.args.defaults, *node.args.kw_defaults]:
                if default is not None:
                    walk(default, bound)
            for stmt in node.body:
                walk(stmt, inner)
            return
        if isinstance(node, ast.Lambda):
            inner = bound | _value_bound_names(node, include_params=True)
            walk(node.body, inner)
            return
        if isinstance(node, ast.ClassDef):
            for deco in node.decorator_list:
                walk(deco, bound)
            class_bound = bound | _value_bound_names(node, include_params=False)
            for stmt in node.body:
                if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    walk(stmt, bound)  # class attributes are not method-local names
                else:
                    walk(stmt, class_bound)
            return
        for child in ast.iter_child_nodes(node):
            walk(child, bound)

    module_bound = _value_bound_names(tree, include_params=False)
    for stmt in tree.body:
        walk(stmt, module_bound)
    calls.sort(key=lambda c: c.span[0])
    return calls
