"""Tiny key=value configuration files shared by the CLI and the apps.

Lines look like ``tolerance = 1e-8``; ``#`` starts a comment.  Values parse
as bool, int, float, comma-separated tuples of those, or fall back to the
raw string.
"""

from __future__ import annotations


def _parse_scalar(text: str):
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(_parse_scalar(p.strip()) for p in text.split(",") if p.strip())
    return _parse_scalar(text)


def read_config_file(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            values[key.strip()] = parse_value(value)
    return values
