"""Span-driven source normalization shared by all language frontends.

A frontend supplies the comment and string spans it lexed; this module
removes comments, drops blank lines, and collapses redundant runs of
spaces while leaving string literals and leading indentation untouched
(indentation is syntax in Python and harmless elsewhere).
"""

from __future__ import annotations


def normalize_with_spans(
    text: str,
    comment_spans: list[tuple[int, int]],
    string_spans: list[tuple[int, int]],
) -> str:
    """Normalize ``text`` given char-offset spans of comments and strings.

    Idempotent: normalizing an already-normalized text is the identity.
    The result carries no trailing newline.
    """
    events = sorted(
        [(s, e, "drop") for s, e in comment_spans]
        + [(s, e, "keep") for s, e in string_spans]
    )
    out: list[str] = []
    at_line_start = True
    pending_space = False
    i = 0
    ei = 0
    n = len(text)
    while i < n:
        while ei < len(events) and events[ei][1] <= i:
            ei += 1
        if ei < len(events) and events[ei][0] <= i:
            start, end, kind = events[ei]
            if kind == "keep":
                if pending_space:
                    out.append(" ")
                    pending_space = False
                out.append(text[i:end])
                at_line_start = False
            i = end
            continue
        ch = text[i]
        if ch == "\n":
            pending_space = False
            out.append("\n")
            at_line_start = True
        elif ch in (" ", "\t"):
            if at_line_start:
                out.append(ch)
            else:
                pending_space = True
        else:
            if pending_space:
                out.append(" ")
                pending_space = False
            out.append(ch)
            at_line_start = False
        i += 1
    collapsed = "".join(out)
    lines = [line.rstrip() for line in collapsed.split("\n")]
    return "\n".join(line for line in lines if line.strip())
