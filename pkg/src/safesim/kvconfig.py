"""Plain-text key=value configuration files shared by all modules.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines are ignored. Values keep everything after the first ``=``.
"""

from __future__ import annotations

from pathlib import Path


def parse_key_value_text(text: str) -> dict[str, str]:
    """Parse key=value lines into a dict. Duplicate keys are an error."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read_key_value_file(path: str | Path) -> dict[str, str]:
    return parse_key_value_text(Path(path).read_text(encoding="utf-8"))
