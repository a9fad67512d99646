"""Regenerate or verify the golden fixtures.

    python -m oracles.regen                 # verify every fixture
    python -m oracles.regen --filter align  # only names containing "align"
    python -m oracles.regen --write         # rewrite inputs, expected and manifest

Exits 1 when any fixture differs from its oracle beyond tolerance.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .registry import FIXTURE_ROOT, MANIFEST, diff, dump, load_all, read


@dataclass
class RegenReport:
    checked: list = field(default_factory=list)
    written: list = field(default_factory=list)
    diffs: dict = field(default_factory=dict)      # name -> list of messages

    @property
    def ok(self) -> bool:
        return not self.diffs

    def render(self) -> str:
        lines = [f"{len(self.checked)} fixture(s) checked, {len(self.written)} written"]
        for name in sorted(self.diffs):
            lines.append(f"DIFF {name}")
            lines += [f"  {msg}" for msg in self.diffs[name][:10]]
        if self.ok:
            lines.append("zero diffs")
        return "\n".join(lines)


def _manifest_entry(fx):
    return {"inputs": fx.input_path, "expected": fx.expected_path, "tolerance": fx.tolerance,
            "oracle": f"python -m oracles.regen --filter {fx.name}", "note": fx.note}


def _select(name_filter):
    fixtures = load_all()
    return [fx for name, fx in sorted(fixtures.items()) if not name_filter or name_filter in name]


def regen_fixtures(name_filter: str | None = None, write: bool = False,
                   root: Path = FIXTURE_ROOT) -> RegenReport:
    root = Path(root)
    report = RegenReport()
    manifest_path = root / MANIFEST
    manifest = read(root, MANIFEST) if manifest_path.exists() else {}
    for fx in _select(name_filter):
        report.checked.append(fx.name)
        if write:
            inputs = fx.make_inputs()
            expected = fx.compute(inputs)
            for rel, obj in ((fx.input_path, inputs), (fx.expected_path, expected)):
                path = root / rel
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(dump(obj))
            manifest[fx.name] = _manifest_entry(fx)
            report.written.append(fx.name)
            continue
        problems = []
        if manifest.get(fx.name) != _manifest_entry(fx):
            problems.append("manifest entry missing or stale")
        try:
            inputs = read(root, fx.input_path)
            committed = read(root, fx.expected_path)
        except FileNotFoundError as exc:
            report.diffs[fx.name] = problems + [f"missing file {exc.filename}"]
            continue
        problems += diff(fx.compute(inputs), committed, fx.tolerance)
        if problems:
            report.diffs[fx.name] = problems
    if write:
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(dump(manifest))
    return report


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="python -m oracles.regen", description="verify or rewrite fixtures")
    p.add_argument("--filter", help="substring of fixture names to include")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--check", action="store_true", help="verify (default)")
    mode.add_argument("--write", action="store_true", help="regenerate and overwrite")
    p.add_argument("--root", type=Path, default=FIXTURE_ROOT)
    args = p.parse_args(argv)
    report = regen_fixtures(args.filter, write=args.write, root=args.root)
    print(report.render())
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
