"""Run the acceptance suite and print one PASS/FAIL line per criterion."""
import pathlib
import sys

import pytest

if __name__ == "__main__":
    here = pathlib.Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"
    sys.exit(pytest.main(["-q", "-s", str(here)]))
