#!/usr/bin/env python3
"""
Test runner for the tactile workbench.

Runs the fast suite by default; ``--slow`` adds whole-contour and training
runs, ``--quality`` runs isort, black, flake8 and mypy over ``app``.
"""

import argparse
import subprocess
import sys
from typing import List


def print_header(message: str) -> None:
    print("\n" + "=" * 70)
    print(f"  {message}")
    print("=" * 70 + "\n")


def run_command(command: List[str], description: str) -> bool:
    """Run a command and return whether it exited cleanly."""
    print(f"-> {description}...")
    result = subprocess.run(command, text=True)
    if result.returncode == 0:
        print(f"ok: {description}\n")
        return True
    print(f"FAILED: {description} (exit code {result.returncode})\n")
    return False


QUALITY_CHECKS = [
    (["isort", "--check-only", "app", "tests"], "Checking import sorting (isort)"),
    (["black", "--check", "app", "tests"], "Checking code formatting (black)"),
    (["flake8", "app"], "Checking code style (flake8)"),
    (["mypy", "app"], "Checking static types (mypy)"),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--slow", action="store_true", help="include slow tests")
    parser.add_argument("--cov", action="store_true", help="report coverage")
    parser.add_argument("--quality", action="store_true", help="run linters")
    args = parser.parse_args()

    print_header("Running Test Suite")
    command = [sys.executable, "-m", "pytest", "tests/"]
    if not args.slow:
        command += ["-m", "not slow"]
    if args.cov:
        command += ["--cov=app", "--cov-report=term-missing"]
    passed = run_command(command, "Running tests")

    if args.quality:
        print_header("Running Code Quality Checks")
        failed = [desc for cmd, desc in QUALITY_CHECKS if not run_command(cmd, desc)]
        if failed:
            print("Run `isort app tests && black app tests` to fix formatting.")
            passed = False

    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
