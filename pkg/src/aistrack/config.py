"""Plain-text ``key=value`` configuration files.

Blank lines and ``#`` comments are ignored. Keys are case-insensitive.
"""
from __future__ import annotations

import configparser
from pathlib import Path

from .errors import InvalidConfig

_SECTION = "config"


def parse_key_values(text: str, allowed: set[str] | None = None) -> dict[str, str]:
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise InvalidConfig(f"cannot parse configuration: {exc}") from None
    values = dict(parser.items(_SECTION))
    if allowed is not None:
        unknown = sorted(set(values) - allowed)
        if unknown:
            raise InvalidConfig(f"unknown configuration keys: {', '.join(unknown)}")
    return values


def read_key_values(path: str | Path, allowed: set[str] | None = None) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"cannot read {path}: {exc}") from None
    return parse_key_values(text, allowed)


def format_key_values(values: dict[str, object]) -> str:
    return "".join(f"{k}={v}\n" for k, v in values.items())
