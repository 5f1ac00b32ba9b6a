#!/usr/bin/env python3
"""Checks that every experiment report is reproducible.

Runs each config in the config directory twice and compares the JSON reports
byte for byte.
"""

import argparse
import pathlib
import subprocess
import sys
import tempfile
from dataclasses import dataclass


@dataclass
class Error:
    """Encapsulates a detected error."""

    file_path: pathlib.Path
    message: str


def run_report(config_path: pathlib.Path, out_dir: pathlib.Path) -> bytes:
    """Run the experiment in a config and return its JSON report."""
    subprocess.run(  # noqa: S603
        [
            sys.executable,
            "-m",
            "surrogate_learning",
            "--config",
            str(config_path),
            "--out-dir",
            str(out_dir),
            "eval",
        ],
        check=False,
        capture_output=True,
    )
    report_paths = list(out_dir.glob("*.json"))
    if len(report_paths) != 1:
        return b""
    return report_paths[0].read_bytes()


parser = argparse.ArgumentParser("check-determinism.py")
parser.add_argument("--config-dir", type=str, required=True)

args = parser.parse_args()
config_dir = pathlib.Path(args.config_dir)

errors: list[Error] = []
with tempfile.TemporaryDirectory() as tmp:
    for config_path in sorted(config_dir.glob("*.json")):
        first = run_report(config_path, pathlib.Path(tmp) / config_path.stem / "1")
        second = run_report(config_path, pathlib.Path(tmp) / config_path.stem / "2")
        if not first:
            errors.append(Error(config_path, "experiment produced no report"))
        elif first != second:
            errors.append(Error(config_path, "reports differ between two runs"))

if errors:
    for err in errors:
        print(f"::error {err.file_path}:: {err.message}", file=sys.stderr)  # noqa: T201
sys.exit(len(errors))
