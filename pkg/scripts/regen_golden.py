"""Regenerate golden CLI reports for every scenario fixture.

Each scenario ``<subcommand>_<name>.json`` is run through the front-end and
the exit code, stdout and stderr are written to ``golden/<name>.json``.

    python3 scripts/regen_golden.py [--check]
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import sys
from pathlib import Path

from multiasym import cli

ROOT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def capture(subcommand: str, scenario: Path, fmt: str = "json") -> dict:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main([subcommand, str(scenario), "--format", fmt])
    return {"exit_code": code, "stdout": out.getvalue(), "stderr": err.getvalue()}


def golden_for(scenario: Path) -> dict:
    sub = scenario.stem.split("_", 1)[0]
    record = {"subcommand": sub, **capture(sub, scenario)}
    if sub in ("verify", "flat") and record["exit_code"] == 0:
        record["csv"] = capture(sub, scenario, "csv")["stdout"]
    return record


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="compare instead of writing")
    args = ap.parse_args(argv)
    stale = []
    (ROOT / "golden").mkdir(exist_ok=True)
    for scenario in sorted((ROOT / "scenarios").glob("*.json")):
        target = ROOT / "golden" / scenario.name
        record = golden_for(scenario)
        text = json.dumps(record, indent=1, sort_keys=True) + "\n"
        if args.check:
            if not target.exists() or target.read_text() != text:
                stale.append(scenario.name)
        else:
            target.write_text(text)
            print(f"{scenario.name}: exit {record['exit_code']}")
    if stale:
        print("stale golden files: " + ", ".join(stale), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
