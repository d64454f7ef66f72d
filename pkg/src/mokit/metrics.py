"""Motion-quality metrics.

Temporal metrics (jitter, dynamics, foot contact) work on world joint
positions, computed by forward kinematics when not stored. Frame-wise metrics
cover capsule self-penetration and pose plausibility via a pluggable scorer.

Conventions:
- jitter_degree: mean norm of the second central difference of joint
  positions, scaled by fps^2 (m/s^2), over interior frames and all joints.
- dynamic_degree: mean norm of adjacent-frame displacements times fps (m/s).
- foot contact gates on height only; defaults are 0.05 m for contact and
  0.10 m for floating.
All metrics are invariant under rigid transforms about +z and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import quat
from .collision import body_penetration
from .kinematics import joint_world_positions
from .motion import MotionError, MotionSequence, Skeleton


class MetricError(MotionError):
    """A metric could not be computed on this input."""


@dataclass(frozen=True)
class Thresholds:
    """Foot-contact gating constants, meters."""

    contact_height: float = 0.05
    float_height: float = 0.10
    penetration_eps: float = 0.0
    slide_min_contact_frames: int = 2

    def __post_init__(self):
        if self.contact_height < 0 or self.float_height < 0 or self.penetration_eps < 0:
            raise ValueError("thresholds must be >= 0")
        if self.float_height < self.contact_height:
            raise ValueError("float_height must be >= contact_height")
        if self.slide_min_contact_frames < 1:
            raise ValueError("slide_min_contact_frames must be >= 1")

    def to_dict(self) -> dict:
        return {
            "contact_height": self.contact_height,
            "float_height": self.float_height,
            "penetration_eps": self.penetration_eps,
            "slide_min_contact_frames": self.slide_min_contact_frames,
        }


@dataclass(frozen=True)
class MetricReport:
    """Per-clip quality numbers; fractions in [0, 1], magnitudes >= 0."""

    clip_id: str
    jitter_degree: float
    dynamic_degree: float
    foot_floating: float
    ground_penetration: float
    foot_sliding: float
    body_penetration_pairs: float
    body_penetration_frames: float
    pose_quality: float
    thresholds_used: Thresholds

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "jitter_degree": self.jitter_degree,
            "dynamic_degree": self.dynamic_degree,
            "foot_floating": self.foot_floating,
            "ground_penetration": self.ground_penetration,
            "foot_sliding": self.foot_sliding,
            "body_penetration_pairs": self.body_penetration_pairs,
            "body_penetration_frames": self.body_penetration_frames,
            "pose_quality": self.pose_quality,
            "thresholds_used": self.thresholds_used.to_dict(),
        }


class PoseScorer(Protocol):
    """Pose -> nonnegative scalar, lower is more natural. Deterministic."""

    def score(self, skeleton: Skeleton, joint_rotations: np.ndarray) -> float: ...


@dataclass(frozen=True)
class JointLimitScorer:
    """Rule-based default scorer: angular violation beyond swing/twist limits.

    The local rotation of each non-root joint is decomposed about its bone
    axis (rest offset direction); the violation is the excess of the swing
    and twist angles over their limits, in radians, averaged over joints.
    Per-joint limits override the scalar defaults by joint name.
    """

    swing_limit: float = np.pi / 2
    twist_limit: float = np.pi / 4
    per_joint: dict = field(default_factory=dict)

    def score(self, skeleton: Skeleton, joint_rotations: np.ndarray) -> float:
        joints = skeleton.non_root_joints
        total = 0.0
        for k, j in enumerate(joints):
            axis = skeleton.rest_offsets[j]
            if np.linalg.norm(axis) < 1e-9:
                axis = np.array([0.0, 0.0, 1.0])
            swing, twist = quat.swing_twist(joint_rotations[k], axis)
            swing_angle = float(quat.geodesic_angle(swing, quat.identity()))
            twist_angle = float(quat.geodesic_angle(twist, quat.identity()))
            s_lim, t_lim = self.per_joint.get(
                skeleton.joint_names[j], (self.swing_limit, self.twist_limit)
            )
            total += max(0.0, swing_angle - s_lim) + max(0.0, twist_angle - t_lim)
        return total / len(joints)


def _positions(motion: MotionSequence, min_frames: int, what: str) -> np.ndarray:
    if motion.num_frames < min_frames:
        raise MetricError(f"{what} needs at least {min_frames} frames")
    return joint_world_positions(motion)


def _foot_heights(motion: MotionSequence, positions: np.ndarray) -> np.ndarray:
    feet = motion.skeleton.foot_joints
    if not feet:
        raise MetricError("skeleton has an empty foot joint set")
    return positions[:, list(feet), 2]


def jitter_degree(motion: MotionSequence, angular_weight: float = 0.0) -> float:
    """Mean joint acceleration magnitude (m/s^2).

    With angular_weight > 0, adds the weighted mean geodesic angular
    acceleration of the local joint rotations (rad/s^2).
    """
    positions = _positions(motion, 3, "jitter_degree")
    fps = motion.fps
    accel = (positions[2:] - 2.0 * positions[1:-1] + positions[:-2]) * (fps * fps)
    value = float(np.linalg.norm(accel, axis=-1).mean())
    if angular_weight > 0.0 and motion.joint_q is not None:
        step = quat.geodesic_angle(motion.joint_q[:-1], motion.joint_q[1:])
        ang_accel = np.abs(step[1:] - step[:-1]) * (fps * fps)
        value += angular_weight * float(ang_accel.mean())
    return value


def dynamic_degree(motion: MotionSequence) -> float:
    """Mean joint speed (m/s) over adjacent-frame displacements."""
    positions = _positions(motion, 2, "dynamic_degree")
    speed = np.linalg.norm(positions[1:] - positions[:-1], axis=-1) * motion.fps
    return float(speed.mean())


def foot_floating(motion: MotionSequence, thresholds: Thresholds = Thresholds()) -> float:
    """Fraction of frames where every foot joint is above float_height."""
    heights = _foot_heights(motion, _positions(motion, 1, "foot_floating"))
    return float(np.mean(heights.min(axis=1) > thresholds.float_height))


def ground_penetration(motion: MotionSequence, thresholds: Thresholds = Thresholds()) -> float:
    """Mean over frames of the deepest foot penetration below the ground plane."""
    heights = _foot_heights(motion, _positions(motion, 1, "ground_penetration"))
    depth = np.maximum(0.0, -(heights - thresholds.penetration_eps))
    return float(depth.max(axis=1).mean())


def _contact_runs(contact: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of consecutive True as [start, end) index pairs."""
    runs = []
    start = None
    for i, c in enumerate(contact):
        if c and start is None:
            start = i
        elif not c and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(contact)))
    return runs


def foot_sliding(motion: MotionSequence, thresholds: Thresholds = Thresholds()) -> float:
    """Mean horizontal foot speed (m/s) while the foot stays in ground contact.

    Only adjacent-frame pairs inside contact runs of at least
    slide_min_contact_frames frames count; without any such run the metric
    is 0.
    """
    positions = _positions(motion, 2, "foot_sliding")
    feet = list(motion.skeleton.foot_joints)
    if not feet:
        raise MetricError("skeleton has an empty foot joint set")
    speeds: list[float] = []
    for f in feet:
        track = positions[:, f]
        contact = track[:, 2] < thresholds.contact_height
        for start, end in _contact_runs(contact):
            if end - start < thresholds.slide_min_contact_frames:
                continue
            step = track[start + 1 : end, :2] - track[start : end - 1, :2]
            speeds.extend(np.linalg.norm(step, axis=-1) * motion.fps)
    return float(np.mean(speeds)) if speeds else 0.0


def pose_quality(motion: MotionSequence, scorer: PoseScorer | None = None) -> float:
    """Mean scorer output over frames; lower is more natural."""
    if motion.joint_q is None:
        raise MetricError("pose_quality needs local joint rotations")
    scorer = scorer if scorer is not None else JointLimitScorer()
    skeleton = motion.skeleton
    scores = [scorer.score(skeleton, motion.joint_q[t]) for t in range(motion.num_frames)]
    return float(np.mean(scores))


def evaluate_clip(
    motion: MotionSequence,
    thresholds: Thresholds = Thresholds(),
    scorer: PoseScorer | None = None,
    angular_jitter_weight: float = 0.0,
) -> MetricReport:
    """Full per-clip report; sub-metric failures are re-raised tagged with
    the failing metric name."""

    def run(name, fn):
        try:
            return fn()
        except MotionError as exc:
            raise MetricError(f"{name}: {exc}") from exc

    pen_pairs, pen_frames = run("body_penetration", lambda: body_penetration(motion))
    return MetricReport(
        clip_id=motion.id,
        jitter_degree=run("jitter_degree", lambda: jitter_degree(motion, angular_jitter_weight)),
        dynamic_degree=run("dynamic_degree", lambda: dynamic_degree(motion)),
        foot_floating=run("foot_floating", lambda: foot_floating(motion, thresholds)),
        ground_penetration=run("ground_penetration", lambda: ground_penetration(motion, thresholds)),
        foot_sliding=run("foot_sliding", lambda: foot_sliding(motion, thresholds)),
        body_penetration_pairs=pen_pairs,
        body_penetration_frames=pen_frames,
        pose_quality=run("pose_quality", lambda: pose_quality(motion, scorer)),
        thresholds_used=thresholds,
    )
