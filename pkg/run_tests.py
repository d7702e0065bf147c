#!/usr/bin/env python3
"""
Test runner for NehariLab.

This script runs the tests for the NehariLab project. Pass --fast to skip
the tests marked slow; any other arguments go to pytest unchanged.
"""

import os
import sys
import pytest

def main():
    """Run the tests."""
    # Add the project root to the path
    project_root = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, project_root)

    args = ["-xvs"]
    extra = [a for a in sys.argv[1:] if a != "--fast"]
    if "--fast" in sys.argv[1:]:
        args.extend(["-m", "not slow"])
    if extra:
        args.extend(extra)
    else:
        args.append("tests")

    return pytest.main(args)

if __name__ == "__main__":
    sys.exit(main())
