"""Motion file I/O and JSONL helpers.

Motion file format (JSON, UTF-8): a top-level object with
  "id":      string
  "fps":     number > 0
  "skeleton": {"joints": [str], "parents": [int, -1 for root],
               "rest_offsets": [[x, y, z]], "foot_joints": [int],
               "capsule_radii": [number]}   (radii: one per non-root joint)
  "frames":  [{"root_t": [x, y, z], "root_q": [w, x, y, z],
               "joint_q": [[w, x, y, z], ...],
               "joint_pos": [[x, y, z], ...] (optional)}]

Readers reject NaN/Inf anywhere and quaternions whose norm deviates from 1 by
more than 1e-3, with a diagnostic naming the frame index. Accepted
quaternions are renormalized to exact unit norm on load.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .motion import MotionError, MotionSequence, Skeleton

QUAT_FILE_TOL = 1e-3


class MotionFormatError(MotionError):
    """Malformed motion file."""


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise MotionFormatError(f"{where}: missing key '{key}'")
    return obj[key]


def _finite_array(values, where: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise MotionFormatError(f"{where}: NaN or Inf value")
    return arr


def _unit_quats(values, where: str) -> np.ndarray:
    arr = _finite_array(values, where)
    norms = np.linalg.norm(arr, axis=-1)
    bad = np.abs(norms - 1.0) > QUAT_FILE_TOL
    if np.any(bad):
        raise MotionFormatError(f"{where}: non-unit quaternion (norm {norms[bad].flat[0]:.6f})")
    return arr / norms[..., None]


def skeleton_from_dict(obj: dict) -> Skeleton:
    joints = _require(obj, "joints", "skeleton")
    radii = obj.get("capsule_radii")
    return Skeleton(
        joint_names=joints,
        parents=_require(obj, "parents", "skeleton"),
        rest_offsets=_finite_array(_require(obj, "rest_offsets", "skeleton"), "skeleton.rest_offsets"),
        foot_joints=tuple(obj.get("foot_joints", ())),
        capsule_radii=None if radii is None else radii,
    )


def skeleton_to_dict(skeleton: Skeleton) -> dict:
    out = {
        "joints": list(skeleton.joint_names),
        "parents": skeleton.parents.tolist(),
        "rest_offsets": skeleton.rest_offsets.tolist(),
        "foot_joints": list(skeleton.foot_joints),
    }
    if skeleton.capsule_radii is not None:
        out["capsule_radii"] = skeleton.capsule_radii.tolist()
    return out


def motion_from_dict(obj: dict) -> MotionSequence:
    skeleton = skeleton_from_dict(_require(obj, "skeleton", "motion"))
    fps = float(_require(obj, "fps", "motion"))
    if not math.isfinite(fps) or fps <= 0:
        raise MotionFormatError(f"fps must be a positive number, got {fps!r}")
    frames = _require(obj, "frames", "motion")
    if not frames:
        raise MotionFormatError("motion has no frames")

    has_rot = "root_t" in frames[0]
    has_pos = "joint_pos" in frames[0]
    if not has_rot and not has_pos:
        raise MotionFormatError("frame 0: needs root_t/root_q/joint_q or joint_pos")

    root_t, root_q, joint_q, joint_pos = [], [], [], []
    for i, frame in enumerate(frames):
        where = f"frame {i}"
        if has_rot:
            root_t.append(_finite_array(_require(frame, "root_t", where), f"{where}.root_t"))
            root_q.append(_unit_quats(_require(frame, "root_q", where), f"{where}.root_q"))
            joint_q.append(_unit_quats(_require(frame, "joint_q", where), f"{where}.joint_q"))
        if has_pos:
            joint_pos.append(_finite_array(_require(frame, "joint_pos", where), f"{where}.joint_pos"))

    try:
        return MotionSequence(
            fps=fps,
            skeleton=skeleton,
            id=str(obj.get("id", "")),
            root_t=np.stack(root_t) if has_rot else None,
            root_q=np.stack(root_q) if has_rot else None,
            joint_q=np.stack(joint_q) if has_rot else None,
            joint_pos=np.stack(joint_pos) if has_pos else None,
        )
    except ValueError as exc:  # ragged per-frame shapes fail np.stack
        raise MotionFormatError(f"inconsistent frame shapes: {exc}") from exc


def motion_to_dict(motion: MotionSequence) -> dict:
    frames = []
    for i in range(motion.num_frames):
        frame: dict = {}
        if motion.has_rotations:
            frame["root_t"] = motion.root_t[i].tolist()
            frame["root_q"] = motion.root_q[i].tolist()
            frame["joint_q"] = motion.joint_q[i].tolist()
        if motion.has_positions:
            frame["joint_pos"] = motion.joint_pos[i].tolist()
        frames.append(frame)
    return {
        "id": motion.id,
        "fps": motion.fps,
        "skeleton": skeleton_to_dict(motion.skeleton),
        "frames": frames,
    }


def read_motion(path: str | Path) -> MotionSequence:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MotionFormatError(f"{path}: invalid JSON ({exc})") from exc
    return motion_from_dict(obj)


def write_motion(motion: MotionSequence, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(motion_to_dict(motion), fh, separators=(",", ":"))
        fh.write("\n")


def dumps_line(obj) -> str:
    """One deterministic, newline-terminated JSON line."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n"


def write_jsonl(rows: Iterable[dict], path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(dumps_line(row))


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_json(obj, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2, sort_keys=False)
        fh.write("\n")
