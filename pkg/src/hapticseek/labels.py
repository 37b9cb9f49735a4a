"""Object class table: 80 detector categories plus "door" at index 80.

Shipped as a versioned JSON data file so scene files can refer to classes by
name or by numeric id interchangeably.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .guidance import NUM_CLASSES


@lru_cache(maxsize=1)
def _table() -> tuple[list[str], dict[str, int]]:
    raw = resources.files("hapticseek.data").joinpath("object_classes.json").read_text()
    data = json.loads(raw)
    names = data["classes"]
    if len(names) != NUM_CLASSES:
        raise RuntimeError(f"class table must list {NUM_CLASSES} classes, got {len(names)}")
    return names, {name: i for i, name in enumerate(names)}


def table_version() -> int:
    raw = resources.files("hapticseek.data").joinpath("object_classes.json").read_text()
    return json.loads(raw)["version"]


def class_name(class_id: int) -> str:
    names, _ = _table()
    if not (0 <= class_id < NUM_CLASSES):
        raise KeyError(f"class id out of range: {class_id}")
    return names[class_id]


def class_id(name: str) -> int:
    _, index = _table()
    try:
        return index[name]
    except KeyError:
        raise KeyError(f"unknown class name: {name!r}") from None


def resolve_class(ref: int | str) -> int:
    """Accept a class by numeric id or by name and return the id."""
    if isinstance(ref, bool):
        raise KeyError(f"invalid class reference: {ref!r}")
    if isinstance(ref, int):
        if not (0 <= ref < NUM_CLASSES):
            raise KeyError(f"class id out of range: {ref}")
        return ref
    if isinstance(ref, str):
        return class_id(ref)
    raise KeyError(f"invalid class reference: {ref!r}")
