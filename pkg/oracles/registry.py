"""Fixture registry, storage layout and tolerant comparison."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

FIXTURE_ROOT = Path(__file__).resolve().parent.parent / "fixtures"
MANIFEST = "manifest.json"


@dataclass(frozen=True)
class Fixture:
    name: str              # "<module>.<case>"
    make_inputs: Callable[[], dict]
    compute: Callable[[dict], dict]
    tolerance: float
    note: str

    @property
    def module(self) -> str:
        return self.name.split(".", 1)[0]

    @property
    def input_path(self) -> str:
        return f"{self.module}/{self.name.split('.', 1)[1]}.input.json"

    @property
    def expected_path(self) -> str:
        return f"{self.module}/{self.name.split('.', 1)[1]}.expected.json"


FIXTURES: dict[str, Fixture] = {}


def fixture(name: str, tolerance: float, note: str, inputs: Callable[[], dict]):
    """Register the decorated ``compute(inputs) -> expected`` oracle."""

    def wrap(compute):
        FIXTURES[name] = Fixture(name, inputs, compute, tolerance, note)
        return compute

    return wrap


def load_all():
    from . import (  # noqa: F401  (registration side effects)
        alignment, cognition, evalkit, field_core, harness, matching, objectives,
        refinement, uncertainty,
    )
    return FIXTURES


def dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def read(root: Path, rel: str):
    return json.loads((root / rel).read_text())


def diff(actual, expected, tol: float, path: str = "") -> list[str]:
    """Human-readable mismatches; numbers compare with ``|a-e| <= tol``."""
    if isinstance(expected, dict):
        if not isinstance(actual, dict) or set(actual) != set(expected):
            return [f"{path or '.'}: keys {sorted(actual) if isinstance(actual, dict) else actual!r} != {sorted(expected)}"]
        out = []
        for k in sorted(expected):
            out += diff(actual[k], expected[k], tol, f"{path}.{k}")
        return out
    if isinstance(expected, list):
        if not isinstance(actual, list) or len(actual) != len(expected):
            return [f"{path}: length {len(actual) if isinstance(actual, list) else '-'} != {len(expected)}"]
        out = []
        for i, (a, e) in enumerate(zip(actual, expected)):
            out += diff(a, e, tol, f"{path}[{i}]")
        return out
    if isinstance(expected, bool) or isinstance(expected, str) or expected is None:
        return [] if actual == expected else [f"{path}: {actual!r} != {expected!r}"]
    if isinstance(expected, (int, float)):
        if isinstance(actual, bool) or not isinstance(actual, (int, float)):
            return [f"{path}: {actual!r} is not a number"]
        if math.isinf(expected) or math.isinf(actual):
            return [] if actual == expected else [f"{path}: {actual!r} != {expected!r}"]
        if abs(actual - expected) <= tol:
            return []
        return [f"{path}: {actual!r} != {expected!r} (|diff| {abs(actual - expected):.3g} > {tol:g})"]
    return [f"{path}: unsupported type {type(expected).__name__}"]
