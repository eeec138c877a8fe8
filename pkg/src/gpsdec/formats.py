"""Plain-text named-matrix sections shared by the checkpoint formats.

A section is a name line, a ``rows cols`` line, then ``rows`` lines of
``repr``-formatted floats, which round-trip float64 exactly.
"""

from __future__ import annotations

import numpy as np


class FormatError(ValueError):
    pass


def dump_sections(sections: dict[str, np.ndarray]) -> list[str]:
    lines = []
    for name, arr in sections.items():
        a = np.asarray(arr, dtype=np.float64)
        a2 = a.reshape(1, -1) if a.ndim < 2 else a
        lines.append(name)
        lines.append(f"{a2.shape[0]} {a2.shape[1]}")
        lines.extend(" ".join(repr(float(x)) for x in row) for row in a2)
    return lines


def parse_sections(lines: list[str], names) -> tuple[dict[str, np.ndarray], int]:
    """Read the given section names in order; returns (sections, lines consumed)."""
    out, pos = {}, 0
    for name in names:
        try:
            got = lines[pos].strip()
            if got != name:
                raise FormatError(f"expected section {name!r}, found {got!r}")
            rows, cols = map(int, lines[pos + 1].split())
            body = lines[pos + 2:pos + 2 + rows]
            vals = [float(t) for row in body for t in row.split()]
        except (IndexError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"section {name!r}: {exc}") from exc
        if len(body) != rows or len(vals) != rows * cols:
            raise FormatError(f"section {name!r}: expected {rows}x{cols} values")
        out[name] = np.array(vals, dtype=np.float64).reshape(rows, cols)
        pos += 2 + rows
    return out, pos
