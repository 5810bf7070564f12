#!/usr/bin/env python3
"""
Run spmvtune tests.
Slow acceptance and network tests are skipped unless --all is given.
"""

import sys
import subprocess
from pathlib import Path
import argparse

project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))


def run_pytest(target=None, markers=None, coverage=False, keyword=None):
    """Run pytest on ``target`` (default: tests/) with optional marker and -k filters."""
    cmd = [sys.executable, '-m', 'pytest']
    if markers:
        cmd += ['-m', markers]
    if keyword:
        cmd += ['-k', keyword]
    if coverage:
        cmd += ['--cov=spmvtune', '--cov-report=term-missing']
    cmd.append(target or 'tests/')
    print(f"Running: {' '.join(cmd)}")
    return subprocess.run(cmd, cwd=project_root).returncode == 0


def main():
    parser = argparse.ArgumentParser(description="Run spmvtune tests.")
    parser.add_argument('--all', action='store_true', help='Include slow and network tests')
    parser.add_argument('--file', type=str, help='Run tests in one file, e.g. tests/test_formats.py')
    parser.add_argument('--class', dest='test_class', type=str,
                        help='Run one test class, e.g. TestEll')
    parser.add_argument('--coverage', action='store_true', help='Report coverage of spmvtune/')
    args = parser.parse_args()

    markers = None if args.all else 'not slow and not network'
    if args.file and args.test_class:
        success = run_pytest(f"{args.file}::{args.test_class}", markers, args.coverage)
    elif args.test_class:
        success = run_pytest(None, markers, args.coverage, keyword=args.test_class)
    else:
        success = run_pytest(args.file, markers, args.coverage)
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
