"""Java frontend: lexer, method segmentation, call-site extraction.

No full Java grammar is available here, so this frontend works on a token
stream: a hand-written lexer plus targeted pattern recognition for method
declarations and call expressions. The subset it understands (classes,
methods, constructors, generics, lambdas, annotations, anonymous classes)
covers ordinary application code; exotic constructs degrade softly rather
than aborting.

Receiver handling mirrors the package-wide rule: a receiver chain is kept
only while its segments look like type or namespace references, which for
Java means an uppercase initial (``Math.max`` stays, ``sc.nextInt``
becomes ``nextInt``).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ExtractionError
from ..model import ApiCall, CodeSnippet, Language, SnippetOrigin
from .normalize import normalize_with_spans

_KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while""".split()
)

_MODIFIERS = frozenset(
    """public private protected static final abstract synchronized native
    strictfp transient volatile default""".split()
)

_TYPE_KEYWORDS = frozenset("void boolean byte short int long float double char".split())

_CONTROL_WITH_PARENS = frozenset("if for while switch catch synchronized".split())


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | number | string | char | punct
    text: str
    start: int
    end: int
    line: int
    col: int


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.n = len(text)
        self.i = 0
        self.line = 1
        self.col = 0
        self.tokens: list[Token] = []
        self.comment_spans: list[tuple[int, int]] = []
        self.string_spans: list[tuple[int, int]] = []

    def error(self, message: str) -> ExtractionError:
        return ExtractionError(message, line=self.line, col=self.col)

    def advance(self, count: int = 1) -> None:
        for _ in range(count):
            if self.i < self.n and self.text[self.i] == "\n":
                self.line += 1
                self.col = 0
            else:
                self.col += 1
            self.i += 1

    def peek(self, ahead: int = 0) -> str:
        j = self.i + ahead
        return self.text[j] if j < self.n else ""

    def run(self) -> None:
        while self.i < self.n:
            ch = self.text[self.i]
            if ch in " \t\r\n":
                self.advance()
            elif ch == "/" and self.peek(1) == "/":
                start = self.i
                while self.i < self.n and self.text[self.i] != "\n":
                    self.advance()
                self.comment_spans.append((start, self.i))
            elif ch == "/" and self.peek(1) == "*":
                start = self.i
                start_line, start_col = self.line, self.col
                self.advance(2)
                while self.i < self.n and not (self.peek() == "*" and self.peek(1) == "/"):
                    self.advance()
                if self.i >= self.n:
                    raise ExtractionError(
                        "unterminated block comment", line=start_line, col=start_col
                    )
                self.advance(2)
                self.comment_spans.append((start, self.i))
            elif ch == '"':
                self.lex_string()
            elif ch == "'":
                self.lex_char()
            elif ch.isdigit() or (ch == "." and self.peek(1).isdigit()):
                self.lex_number()
            elif ch.isalpha() or ch in "_$":
                self.lex_word()
            else:
                tok_line, tok_col = self.line, self.col
                self.tokens.append(Token("punct", ch, self.i, self.i + 1, tok_line, tok_col))
                self.advance()

    def lex_string(self) -> None:
        start = self.i
        start_line, start_col = self.line, self.col
        if self.peek(1) == '"' and self.peek(2) == '"':  # text block
            self.advance(3)
            while self.i < self.n:
                if self.peek() == '"' and self.peek(1) == '"' and self.peek(2) == '"':
                    self.advance(3)
                    break
                if self.peek() == "\\":
                    self.advance()
                self.advance()
            else:
                raise ExtractionError("unterminated text block", line=start_line, col=start_col)
        else:
            self.advance()
            while self.i < self.n and self.peek() != '"':
                if self.peek() == "\n":
                    raise ExtractionError(
                        "unterminated string literal", line=start_line, col=start_col
                    )
                if self.peek() == "\\":
                    self.advance()
                self.advance()
            if self.i >= self.n:
                raise ExtractionError(
                    "unterminated string literal", line=start_line, col=start_col
                )
            self.advance()
        self.tokens.append(
            Token("string", self.text[start : self.i], start, self.i, start_line, start_col)
        )
        self.string_spans.append((start, self.i))

    def lex_char(self) -> None:
        start = self.i
        start_line, start_col = self.line, self.col
        self.advance()
        while self.i < self.n and self.peek() != "'":
            if self.peek() == "\n":
                raise ExtractionError("unterminated char literal", line=start_line, col=start_col)
            if self.peek() == "\\":
                self.advance()
            self.advance()
        if self.i >= self.n:
            raise ExtractionError("unterminated char literal", line=start_line, col=start_col)
        self.advance()
        self.tokens.append(
            Token("char", self.text[start : self.i], start, self.i, start_line, start_col)
        )
        self.string_spans.append((start, self.i))

    def lex_number(self) -> None:
        start = self.i
        start_line, start_col = self.line, self.col
        is_hex = self.peek() == "0" and self.peek(1) in "xX"
        if is_hex:
            self.advance(2)
        digits = "0123456789abcdefABCDEF_" if is_hex else "0123456789_"
        exp_chars = "pP" if is_hex else "eE"
        while self.i < self.n:
            ch = self.peek()
            if ch in digits:
                self.advance()
            elif ch == "." and self.peek(1).isdigit():
                self.advance()
            elif ch in exp_chars and (self.peek(1).isdigit() or self.peek(1) in "+-"):
                self.advance(2)
            elif ch in "lLfFdD" and not is_hex:
                self.advance()
                break
            elif ch in "lL" and is_hex:
                self.advance()
                break
            elif ch == "." and not is_hex and self.peek(1) not in "0123456789":
                # trailing dot as in "1."; consume unless it starts a member access
                if self.peek(1).isalpha() or self.peek(1) in "_$":
                    break
                self.advance()
            else:
                break
        self.tokens.append(
            Token("number", self.text[start : self.i], start, self.i, start_line, start_col)
        )

    def lex_word(self) -> None:
        start = self.i
        start_line, start_col = self.line, self.col
        while self.i < self.n and (self.peek().isalnum() or self.peek() in "_$"):
            self.advance()
        word = self.text[start : self.i]
        kind = "keyword" if word in _KEYWORDS else "ident"
        self.tokens.append(Token(kind, word, start, self.i, start_line, start_col))


def _lex(text: str) -> _Lexer:
    lexer = _Lexer(text)
    lexer.run()
    return lexer


def normalize(text: str) -> str:
    lexer = _lex(text)
    return normalize_with_spans(text, lexer.comment_spans, lexer.string_spans)


def _match_forward(tokens: list[Token], i: int, open_text: str, close_text: str) -> int:
    """Index of the matching closer for the opener at ``i``, or -1."""
    depth = 0
    for j in range(i, len(tokens)):
        t = tokens[j]
        if t.kind == "punct":
            if t.text == open_text:
                depth += 1
            elif t.text == close_text:
                depth -= 1
                if depth == 0:
                    return j
    return -1


def _parse_chain_ending_before(tokens: list[Token], paren_index: int) -> int:
    """Start index of the maximal ``ident(.ident)*`` chain before ``(``, or -1."""
    j = paren_index - 1
    if j < 0 or tokens[j].kind != "ident":
        return -1
    start = j
    while start - 2 >= 0 and tokens[start - 1].kind == "punct" and tokens[start - 1].text == "." \
            and tokens[start - 2].kind == "ident":
        start -= 2
    return start


def _chain_segments(tokens: list[Token], start: int, end: int) -> list[str]:
    return [tokens[j].text for j in range(start, end + 1, 2)]


def _namespace_suffix(segments: list[str]) -> tuple[list[str], list[str]]:
    """Split a call path into (dropped receiver prefix, kept suffix).

    Receiver segments are kept while they look like type/namespace
    references (uppercase initial); the final segment is always kept.
    """
    keep_from = len(segments) - 1
    while keep_from - 1 >= 0 and segments[keep_from - 1][:1].isupper():
        keep_from -= 1
    return segments[:keep_from], segments[keep_from:]


def _skip_generic_args(tokens: list[Token], i: int) -> int:
    """Given ``tokens[i] == '<'``, return index after the matching '>' or -1."""
    depth = 0
    j = i
    while j < len(tokens):
        t = tokens[j]
        if t.kind == "punct":
            if t.text == "<":
                depth += 1
            elif t.text == ">":
                depth -= 1
                if depth == 0:
                    return j + 1
            elif t.text in ";{}()":
                return -1
        elif t.kind not in ("ident", "keyword") and not (
            t.kind == "punct" and t.text in ".,?&[]"
        ):
            return -1
        j += 1
    return -1


def _count_args(tokens: list[Token], open_paren: int, close_paren: int) -> int:
    """Top-level comma count between parens; generic blocks are skipped."""
    if close_paren == open_paren + 1:
        return 0
    commas = 0
    depth = 0
    j = open_paren + 1
    while j < close_paren:
        t = tokens[j]
        if t.kind == "punct":
            if t.text in "([{":
                depth += 1
            elif t.text in ")]}":
                depth -= 1
            elif t.text == "<" and depth == 0:
                skipped = _skip_generic_args(tokens, j)
                if skipped != -1 and skipped <= close_paren:
                    j = skipped
                    continue
            elif t.text == "," and depth == 0:
                commas += 1
        j += 1
    return commas + 1


def _is_declaration(tokens: list[Token], chain_start: int, open_paren: int) -> bool:
    """Whether ``chain(...)`` is a method/constructor declaration header."""
    close = _match_forward(tokens, open_paren, "(", ")")
    if close == -1:
        return False
    j = close + 1
    if j < len(tokens) and tokens[j].kind == "keyword" and tokens[j].text == "throws":
        j += 1
        while j < len(tokens) and (
            tokens[j].kind == "ident"
            or (tokens[j].kind == "punct" and tokens[j].text in ".,")
        ):
            j += 1
    if j < len(tokens) and tokens[j].kind == "punct" and tokens[j].text == "{":
        return True
    if j < len(tokens) and tokens[j].kind == "punct" and tokens[j].text == ";":
        # abstract/interface declaration: preceded by a type, unlike a call
        prev = tokens[chain_start - 1] if chain_start > 0 else None
        if prev is None:
            return False
        if prev.kind == "ident" or (prev.kind == "keyword" and prev.text in _TYPE_KEYWORDS):
            return True
        if prev.kind == "punct" and prev.text == "]":
            return True
        if prev.kind == "punct" and prev.text == ">":
            # a generic return type means a declaration, but an explicit
            # type-argument call (receiver.<T>method()) has '.' before '<'
            opener = _generic_block_before_index(tokens, chain_start - 1)
            if opener > 0 and tokens[opener - 1].kind == "punct" and tokens[opener - 1].text == ".":
                return False
            return True
    return False


def _generic_block_before_index(tokens: list[Token], close_index: int) -> int:
    """Index of the '<' matching the '>' at ``close_index``, or -1."""
    depth = 0
    j = close_index
    while j >= 0:
        t = tokens[j]
        if t.kind == "punct":
            if t.text == ">":
                depth += 1
            elif t.text == "<":
                depth -= 1
                if depth == 0:
                    return j
            elif t.text in ";{}()":
                return -1
        j -= 1
    return -1


def _find_declarations(tokens: list[Token]) -> list[tuple[int, int, int, str]]:
    """Top-level method/constructor declarations as (decl_start, body_open, body_close, name)."""
    decls = []
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.kind == "punct" and t.text == "(":
            chain_start = _parse_chain_ending_before(tokens, i)
            if chain_start != -1:
                before = tokens[chain_start - 1] if chain_start > 0 else None
                preceded_by_new = before is not None and before.kind == "keyword" and before.text == "new"
                preceded_by_at = before is not None and before.kind == "punct" and before.text == "@"
                if not preceded_by_new and not preceded_by_at and _is_declaration(tokens, chain_start, i):
                    close = _match_forward(tokens, i, "(", ")")
                    j = close + 1
                    while j < len(tokens) and not (
                        tokens[j].kind == "punct" and tokens[j].text in "{;"
                    ):
                        j += 1
                    if j < len(tokens) and tokens[j].text == "{":
                        body_close = _match_forward(tokens, j, "{", "}")
                        if body_close != -1:
                            decl_start = _scan_declaration_start(tokens, chain_start)
                            name = tokens[i - 1].text
                            decls.append((decl_start, j, body_close, name))
                            i = body_close + 1
                            continue
        i += 1
    return decls


def _scan_declaration_start(tokens: list[Token], chain_start: int) -> int:
    """Walk back over modifiers, annotations, and the return type."""
    j = chain_start - 1
    while j >= 0:
        t = tokens[j]
        if t.kind == "punct" and t.text in ";{}":
            break
        if t.kind == "keyword" and t.text not in (_MODIFIERS | _TYPE_KEYWORDS):
            break
        j -= 1
    return j + 1


def segment(text: str, source_id: str = "", path: str = "") -> list[CodeSnippet]:
    """One snippet per method or constructor with a body, in file order."""
    normalized = normalize(text)
    if not normalized:
        return []
    lexer = _lex(normalized)
    snippets = []
    for decl_start, _, body_close, name in _find_declarations(lexer.tokens):
        start_off = lexer.tokens[decl_start].start
        end_off = lexer.tokens[body_close].end
        snippet_text = normalized[start_off:end_off]
        snippet_text = "\n".join(line.rstrip() for line in _dedent(snippet_text).split("\n"))
        snippets.append(
            CodeSnippet(
                language=Language.JAVA,
                text=snippet_text,
                origin=SnippetOrigin(source_id, path, name),
            )
        )
    return snippets


def _dedent(block: str) -> str:
    lines = block.split("\n")
    indents = [
        len(line) - len(line.lstrip())
        for line in lines[1:]
        if line.strip()
    ]
    if not indents:
        return block
    # first line already starts at its token, so dedent continuation lines only
    shift = min(indents)
    out = [lines[0]]
    for line in lines[1:]:
        out.append(line[shift:] if line[:shift].strip() == "" else line)
    return "\n".join(out)


def extract_calls(text: str) -> list[ApiCall]:
    """All call sites in ``text`` in textual (span-start) order."""
    lexer = _lex(text)
    tokens = lexer.tokens
    byte_of = _byte_offset_table(text)
    calls: list[ApiCall] = []
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.kind == "punct" and t.text == "@":
            # annotation: skip @Name(.Name)* and its argument list if present
            j = i + 1
            while j + 1 < len(tokens) and tokens[j].kind == "ident" \
                    and tokens[j + 1].kind == "punct" and tokens[j + 1].text == ".":
                j += 2
            if j < len(tokens) and tokens[j].kind == "ident":
                j += 1
            if j < len(tokens) and tokens[j].kind == "punct" and tokens[j].text == "(":
                close = _match_forward(tokens, j, "(", ")")
                j = close + 1 if close != -1 else j + 1
            i = j
            continue
        if t.kind == "punct" and t.text == "(":
            chain_start = _parse_chain_ending_before(tokens, i)
            open_paren = i
            generic_skipped = False
            if chain_start == -1:
                # "new ArrayList<Integer>(...)": generics between chain and parens
                back = _generic_block_before(tokens, i)
                if back != -1:
                    chain_start = _parse_chain_ending_before(tokens, back)
                    generic_skipped = chain_start != -1
            if chain_start != -1:
                chain_end = (i - 1) if not generic_skipped else _chain_end_from_start(tokens, chain_start)
                before = tokens[chain_start - 1] if chain_start > 0 else None
                is_new = before is not None and before.kind == "keyword" and before.text == "new"
                is_annotation = before is not None and before.kind == "punct" and before.text == "@"
                after_dot = before is not None and before.kind == "punct" and before.text == "."
                if is_annotation:
                    i += 1
                    continue
                if not is_new and _is_declaration(tokens, chain_start, open_paren):
                    i += 1
                    continue
                segments = _chain_segments(tokens, chain_start, chain_end)
                dropped, kept = _namespace_suffix(segments)
                close = _match_forward(tokens, open_paren, "(", ")")
                if close == -1:
                    raise ExtractionError(
                        "unbalanced parentheses",
                        line=tokens[open_paren].line,
                        col=tokens[open_paren].col,
                    )
                arg_count = _count_args(tokens, open_paren, close)
                kept_start_tok = tokens[chain_start + 2 * len(dropped)]
                span = (byte_of[kept_start_tok.start], byte_of[tokens[chain_end].end])
                receiver_hint = ".".join(dropped) if dropped and not after_dot else None
                calls.append(
                    ApiCall(".".join(kept), arg_count, span, receiver_hint=receiver_hint)
                )
        i += 1
    return calls


def _generic_block_before(tokens: list[Token], paren_index: int) -> int:
    """If ``(...)`` at paren_index is preceded by ``<...>``, index of '<', else -1."""
    j = paren_index - 1
    if j < 0 or tokens[j].kind != "punct" or tokens[j].text != ">":
        return -1
    depth = 0
    while j >= 0:
        t = tokens[j]
        if t.kind == "punct":
            if t.text == ">":
                depth += 1
            elif t.text == "<":
                depth -= 1
                if depth == 0:
                    return j
            elif t.text in ";{}()":
                return -1
        j -= 1
    return -1


def _chain_end_from_start(tokens: list[Token], chain_start: int) -> int:
    j = chain_start
    while j + 2 < len(tokens) and tokens[j + 1].kind == "punct" and tokens[j + 1].text == "." \
            and tokens[j + 2].kind == "ident":
        j += 2
    return j


def _byte_offset_table(text: str) -> list[int]:
    table = [0] * (len(text) + 1)
    total = 0
    for idx, ch in enumerate(text):
        table[idx] = total
        total += len(ch.encode("utf-8"))
    table[len(text)] = total
    return table
