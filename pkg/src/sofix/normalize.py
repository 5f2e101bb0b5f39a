"""Whitespace cleanup for snippet content, preserving nested indentation.

Markdown code blocks arrive with a shared leading indent (four spaces for
indented blocks) that is not part of the program. Stripping the longest
common whitespace prefix removes that artifact without expanding tabs, so
genuinely inconsistent tab/space indentation inside the snippet survives
and can still raise TabError downstream.
"""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class NormalizedSnippet:
    content: str
    removed_prefix: str


def _split_lines(text: str) -> list[str]:
    # Only \r\n and \r count as terminators; splitlines() would also split
    # on form feeds and unicode separators, changing the line count.
    return text.replace("\r\n", "\n").replace("\r", "\n").split("\n")


def _leading_whitespace(line: str) -> str:
    stripped = line.lstrip()
    return line[: len(line) - len(stripped)]


def common_indent(lines: list[str]) -> str:
    """Longest whitespace string that is an exact prefix of every non-blank line.

    Blank (empty or whitespace-only) lines are ignored. No tab expansion:
    a tab prefix and a space prefix share no common indent.
    """
    prefixes = [_leading_whitespace(line) for line in lines if line.strip()]
    if not prefixes:
        return ""
    return os.path.commonprefix(prefixes)


def normalize_snippet(content: str) -> NormalizedSnippet:
    """Strip the common leading indent and all trailing whitespace per line.

    Blank lines become empty lines, line terminators are normalized to
    "\\n", and the line count is preserved. Idempotent.
    """
    lines = _split_lines(content)
    prefix = common_indent(lines)
    out = []
    for line in lines:
        if not line.strip():
            out.append("")
        else:
            out.append(line[len(prefix):].rstrip())
    return NormalizedSnippet(content="\n".join(out), removed_prefix=prefix)
