"""Byte-exact source positions.

All offsets are byte offsets into the UTF-8 encoding of the source text.
Line and column are 1-based; columns count characters, not bytes, so they
match what editors display even when comments contain non-ASCII text.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Half-open byte range [start, end) with resolved line/column info."""

    start: int
    end: int
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def contains(self, other: SourceSpan) -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: SourceSpan) -> bool:
        return self.start < other.end and other.start < self.end

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "start_line": self.start_line,
            "start_col": self.start_col,
            "end_line": self.end_line,
            "end_col": self.end_col,
        }


class LineIndex:
    """Maps byte offsets of one source text to line/column positions."""

    def __init__(self, source: str):
        self.source = source
        self.data = source.encode("utf-8")
        # Byte offset at which each line starts. Line i (0-based) spans
        # [starts[i], starts[i+1]).
        starts = [0]
        for i, b in enumerate(self.data):
            if b == 0x0A:
                starts.append(i + 1)
        self._starts = starts

    def __len__(self) -> int:
        return len(self.data)

    def line_col(self, offset: int) -> tuple[int, int]:
        offset = max(0, min(offset, len(self.data)))
        line = bisect.bisect_right(self._starts, offset) - 1
        col = len(self.data[self._starts[line]:offset].decode("utf-8", "replace"))
        return line + 1, col + 1

    def span(self, start: int, end: int) -> SourceSpan:
        sl, sc = self.line_col(start)
        el, ec = self.line_col(end)
        return SourceSpan(start, end, sl, sc, el, ec)

    def text(self, span: SourceSpan) -> str:
        return self.data[span.start:span.end].decode("utf-8", "replace")
