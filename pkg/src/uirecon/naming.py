"""Identifier sanitizing shared by the UXML emitter and sprite file naming."""

from __future__ import annotations

import re
from typing import Iterable

_UNSAFE = re.compile(r"[^a-z0-9_-]")
_SUFFIX = re.compile(r"-\d+$")


def sanitize_name(raw_id: str) -> str:
    """Lowercase ``raw_id`` and replace anything outside ``[a-z0-9_-]`` with ``-``."""
    if not raw_id:
        raise ValueError("cannot sanitize an empty id")
    return _UNSAFE.sub("-", raw_id.lower())


def assign_names(ids: Iterable[str]) -> dict[str, str]:
    """Map ids to unique sanitized names; later collisions get ``-2``, ``-3``, ..."""
    names: dict[str, str] = {}
    taken: set[str] = set()
    for raw_id in ids:
        base = sanitize_name(raw_id)
        name, n = base, 1
        while name in taken:
            n += 1
            name = f"{base}-{n}"
        taken.add(name)
        names[raw_id] = name
    return names


def strip_suffix(name: str) -> str:
    """Undo the collision suffix added by :func:`assign_names`."""
    return _SUFFIX.sub("", name)


def identity_key(raw_id: str) -> str:
    """Id comparison key that ignores sanitizing and collision suffixes."""
    return strip_suffix(sanitize_name(raw_id)) if raw_id else raw_id
