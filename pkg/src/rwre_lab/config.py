"""Plain-text key=value configuration with [section] headers.

Keys before any header land in the "" section.  A distribution file may
either be a bare block or carry a [distribution] header; the same applies
to [tree], [gauge] and [experiment].
"""

from __future__ import annotations

from .errors import ConfigError


def parse_kv_text(text: str) -> dict:
    sections: dict = {"": {}}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        sections[current][key.strip()] = value.strip()
    return sections


def parse_kv_file(path: str) -> dict:
    try:
        with open(path) as fh:
            return parse_kv_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None


def section(sections: dict, name: str) -> dict:
    """The named section merged over the bare top-level block."""
    merged = dict(sections.get("", {}))
    merged.update(sections.get(name, {}))
    return merged


def parse_int_list(text: str, fieldname: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad integer list for {fieldname!r}: {text!r}") from None


def parse_float_list(text: str, fieldname: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad float list for {fieldname!r}: {text!r}") from None
