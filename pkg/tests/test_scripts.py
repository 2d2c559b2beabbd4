import os
import subprocess
import sys

import pytest

SCRIPTS = os.path.join(os.path.dirname(os.path.dirname(__file__)), "scripts")


@pytest.mark.parametrize("name, args", [
    ("random_agreement.py", ["--count", "2"]),
    ("deterministic_vs_stochastic.py", ["--N", "2"]),
    ("singular_demo.py", []),
    ("reference_values.py", []),
])
def test_script_runs(name, args):
    out = subprocess.run([sys.executable, os.path.join(SCRIPTS, name), *args], capture_output=True, text=True, check=True)
    assert out.stdout.strip()
