"""Compare the compiled distance kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--frames 2000] [--repeats 5]

The workload mirrors body_penetration's all-pairs narrow phase: capsule
surface distances for every non-adjacent bone pair of the 22-joint humanoid
across a batch of randomly posed frames.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mokit._kernels import fallback
from mokit.collision import bone_segments, nonadjacent_bone_pairs
from mokit.kinematics import fk_positions
from mokit.motion import default_skeleton
from mokit import quat
from mokit.motion import MotionSequence

try:
    from mokit._kernels import _ckernels
except ImportError:
    _ckernels = None


def capsule_workload(frames: int, seed: int = 0):
    skel = default_skeleton()
    rng = np.random.default_rng(seed)
    root_t = rng.normal(0, 0.5, size=(frames, 3)) + np.array([0, 0, 0.95])
    root_q = quat.normalize(quat.identity((frames,)) + rng.normal(0, 0.2, size=(frames, 4)))
    joint_q = quat.normalize(
        quat.identity((frames, skel.num_joints - 1))
        + rng.normal(0, 0.3, size=(frames, skel.num_joints - 1, 4))
    )
    motion = MotionSequence(fps=20, skeleton=skel, root_t=root_t, root_q=root_q, joint_q=joint_q)
    starts, ends = bone_segments(skel, fk_positions(motion))
    pairs = nonadjacent_bone_pairs(skel)
    return starts, ends, skel.capsule_radii, pairs[:, 0], pairs[:, 1]


def time_backend(fn, args, repeats: int) -> float:
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    workload = capsule_workload(args.frames)
    n_pairs = args.frames * len(workload[3])
    print(f"workload: {args.frames} frames x {len(workload[3])} capsule pairs = {n_pairs:,} distances")

    t_py = time_backend(fallback.capsule_pair_distances, workload, args.repeats)
    print(f"python fallback : {t_py * 1e3:8.2f} ms  ({n_pairs / t_py / 1e6:6.1f} M pairs/s)")

    if _ckernels is None:
        print("compiled kernel : not built (pip install -e . with a C compiler)")
        return
    t_c = time_backend(_ckernels.capsule_pair_distances, workload, args.repeats)
    print(f"compiled kernel : {t_c * 1e3:8.2f} ms  ({n_pairs / t_c / 1e6:6.1f} M pairs/s)")
    print(f"speedup         : {t_py / t_c:6.2f}x")

    d_py = fallback.capsule_pair_distances(*workload)
    d_c = _ckernels.capsule_pair_distances(*workload)
    print(f"max |difference|: {np.abs(d_py - d_c).max():.2e}")


if __name__ == "__main__":
    main()
