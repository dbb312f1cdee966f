import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from hdsqm import _backend

try:
    from hdsqm import _kernels  # noqa: F401
    BUILT = True
except ImportError:
    BUILT = False


def _run(code, pure):
    env = dict(os.environ)
    if pure:
        env["HDSQM_PURE_PYTHON"] = "1"
    else:
        env.pop("HDSQM_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_env_forces_fallback():
    assert _run("from hdsqm._backend import NAME; print(NAME)", pure=True) == "python"


def test_default_backend_reported():
    name = _run("from hdsqm._backend import NAME; print(NAME)", pure=False)
    assert name == ("cython" if BUILT else "python")


def test_kernel_modules_share_interface():
    from hdsqm import _kernels_py
    for fn in ("rhs", "dp5_step", "dopri5", "flow_batch", "sncndn"):
        assert callable(getattr(_backend.kernels, fn))
        assert callable(getattr(_kernels_py, fn))


def _simulate(tmp_path, pure, name):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"integrator": {"t_end": 10.0, "samples_per_unit": 4}}))
    out = tmp_path / name
    env = dict(os.environ)
    if pure:
        env["HDSQM_PURE_PYTHON"] = "1"
    subprocess.run([sys.executable, "-m", "hdsqm.cli", "simulate", "--config", str(cfg), "--out", str(out)],
                   env=env, check=True, capture_output=True)
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


@pytest.mark.skipif(not BUILT, reason="compiled extension not built")
def test_backends_give_same_trajectory(tmp_path):
    h1, a = _simulate(tmp_path, False, "c")
    h2, b = _simulate(tmp_path, True, "p")
    assert h1 == h2 and a.shape == b.shape
    assert np.max(np.abs(a - b)) < 1e-7
