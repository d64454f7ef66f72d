import subprocess
import sys

import numpy as np

from mokit import _kernels
from mokit._kernels import fallback


def test_backend_reports_name():
    assert _kernels.BACKEND in ("compiled", "python")


def test_env_var_forces_fallback():
    code = (
        "import mokit._kernels as k; print(k.BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "MOKIT_PURE_PYTHON": "1"},
    )
    assert out.stdout.strip() == "python"


def test_segseg_shapes():
    rng = np.random.default_rng(0)
    a0, a1, b0, b1 = rng.normal(size=(4, 7, 5, 3))
    out = _kernels.segseg_distances(a0, a1, b0, b1)
    assert out.shape == (7, 5)
    single = _kernels.segseg_distances(a0[0, 0], a1[0, 0], b0[0, 0], b1[0, 0])
    assert np.isclose(float(single), out[0, 0])


def test_backends_agree_on_random_batches():
    rng = np.random.default_rng(42)
    a0, a1, b0, b1 = rng.uniform(-3, 3, size=(4, 2000, 3))
    assert (
        np.abs(
            fallback.segseg_distances(a0, a1, b0, b1)
            - _kernels.segseg_distances(a0, a1, b0, b1)
        ).max()
        < 1e-12
    )


def test_backends_agree_on_degenerate_cases():
    pts = np.random.default_rng(1).uniform(-1, 1, size=(50, 3))
    a0 = a1 = pts  # all segments degenerate to points
    b0 = pts + 0.5
    b1 = pts + np.array([0.5, 0.5, 1.5])
    d_fb = fallback.segseg_distances(a0, a1, b0, b1)
    d_sel = _kernels.segseg_distances(a0, a1, b0, b1)
    assert np.abs(d_fb - d_sel).max() < 1e-12


def test_capsule_pair_distances_backends_agree():
    rng = np.random.default_rng(3)
    frames, bones = 20, 10
    starts = rng.uniform(-1, 1, size=(frames, bones, 3))
    ends = starts + rng.uniform(-0.5, 0.5, size=(frames, bones, 3))
    radii = rng.uniform(0.02, 0.2, size=bones)
    ia, ib = np.triu_indices(bones, k=1)
    d_fb = fallback.capsule_pair_distances(starts, ends, radii, ia, ib)
    d_sel = _kernels.capsule_pair_distances(starts, ends, radii, ia, ib)
    assert d_fb.shape == (frames, len(ia))
    assert np.abs(d_fb - d_sel).max() < 1e-12
    # single-frame form
    d1 = _kernels.capsule_pair_distances(starts[0], ends[0], radii, ia, ib)
    assert np.allclose(d1, d_sel[0])
