import json
import os
import subprocess
import sys

import pytest

from treecap import prefix_set
from treecap.disc import CondenserProblem, SolverGrid, solve
from treecap._kernels import backend_name

_PROBE = """
import json
import treecap
from treecap.disc import CondenserProblem, SolverGrid, solve
from treecap._kernels import backend_name

e = treecap.prefix_set(0.5)
sol = solve(CondenserProblem.from_set(e, 0.5), SolverGrid(128, 24))
print(json.dumps({"backend": backend_name(), "capacity": sol.capacity}))
"""


def _run_probe(extra_env):
    env = dict(os.environ)
    env.update(extra_env)
    out = subprocess.run(
        [sys.executable, "-c", _PROBE],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_env_flag_forces_numpy_backend():
    probe = _run_probe({"TREECAP_NO_NUMBA": "1"})
    assert probe["backend"] == "numpy"


def test_backends_agree_on_a_solve():
    if backend_name() != "numba":
        pytest.skip("numba backend unavailable in this environment")
    here = solve(
        CondenserProblem.from_set(prefix_set(0.5), 0.5), SolverGrid(128, 24)
    ).capacity
    probe = _run_probe({"TREECAP_NO_NUMBA": "1"})
    assert abs(probe["capacity"] - here) <= 1e-9 * here
