"""Clip preparation pipeline: resample, canonicalize, trim rest-pose padding,
segment into fixed-length clips, then length- and quality-filter.

Every clip ends up in the manifest exactly once, either kept or dropped with
a single machine-readable reason. The pipeline is deterministic: identical
inputs and config produce a byte-identical manifest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io, quat
from .metrics import MetricReport, Thresholds, evaluate_clip
from .motion import MotionError, MotionSequence
from .processing import canonicalize, resample

DROP_TOO_SHORT = "too_short"
DROP_ALL_TPOSE = "all_tpose"
DROP_JITTER = "jitter"
DROP_STATIC = "static"
DROP_PARSE_ERROR = "parse_error"
DROP_DEGENERATE_FACING = "degenerate_facing"

# Synthetic sources get double training weight; see SourceEntry.weight.
SOURCE_KINDS = ("mocap", "video", "synthetic")
SYNTHETIC_WEIGHT = 2.0


class TPoseOnlyError(MotionError):
    """Every frame of the clip is within eps of the rest pose."""


@dataclass(frozen=True)
class FilterConfig:
    clip_len_s: float = 5.0
    min_len_s: float = 3.0
    target_fps: float = 20.0
    tpose_angle_eps: float = 0.05
    # Jitter/dynamics cutoffs calibrated on synthetic fixtures; production
    # corpora should set their own values.
    max_jitter: float = 100.0
    min_dynamic: float = 0.01
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        if not self.min_len_s > 0 or self.clip_len_s < self.min_len_s:
            raise ValueError("need clip_len_s >= min_len_s > 0")
        if not self.target_fps > 0:
            raise ValueError("target_fps must be > 0")

    def to_dict(self) -> dict:
        return {
            "clip_len_s": self.clip_len_s,
            "min_len_s": self.min_len_s,
            "target_fps": self.target_fps,
            "tpose_angle_eps": self.tpose_angle_eps,
            "max_jitter": self.max_jitter,
            "min_dynamic": self.min_dynamic,
            "thresholds": self.thresholds.to_dict(),
        }


@dataclass(frozen=True)
class SourceEntry:
    path: str
    source_kind: str = "mocap"
    trust_global: bool = True

    def __post_init__(self):
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"source_kind must be one of {SOURCE_KINDS}")

    @property
    def weight(self) -> float:
        return SYNTHETIC_WEIGHT if self.source_kind == "synthetic" else 1.0


@dataclass
class ManifestEntry:
    clip_id: str
    source_file: str
    frame_range: tuple[int, int]
    fps: float
    status: str  # "kept" | "dropped"
    drop_reason: str | None = None
    metric_summary: MetricReport | None = None
    source_kind: str = "mocap"
    trust_global: bool = True
    weight: float = 1.0
    clip_path: str | None = None

    def to_dict(self) -> dict:
        out = {
            "clip_id": self.clip_id,
            "source_file": self.source_file,
            "frame_range": list(self.frame_range),
            "fps": self.fps,
            "status": self.status,
            "drop_reason": self.drop_reason,
            "source_kind": self.source_kind,
            "trust_global": self.trust_global,
            "weight": self.weight,
        }
        if self.metric_summary is not None:
            out["metric_summary"] = self.metric_summary.to_dict()
        if self.clip_path is not None:
            out["clip_path"] = self.clip_path
        return out


@dataclass
class ClipManifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    @property
    def kept(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.status == "kept"]

    def summary(self) -> dict:
        reasons: dict[str, int] = {}
        for e in self.entries:
            if e.status == "dropped":
                reasons[e.drop_reason] = reasons.get(e.drop_reason, 0) + 1
        return {"kept": len(self.kept), "dropped_by_reason": dict(sorted(reasons.items()))}


def segment(motion: MotionSequence, clip_len_s: float) -> list[MotionSequence]:
    """Consecutive non-overlapping windows of round(clip_len_s * fps) frames.

    The trailing remainder is kept as a final shorter clip; the length filter
    decides its fate later.
    """
    window = int(round(clip_len_s * motion.fps))
    if window < 1:
        raise ValueError("clip_len_s too small for this fps")
    total = motion.num_frames
    clips = []
    for k, start in enumerate(range(0, total, window)):
        end = min(start + window, total)
        clips.append(motion.slice(start, end, id=f"{motion.id}_{k:03d}"))
    return clips


def filter_length(
    clips: list[MotionSequence], min_len_s: float
) -> tuple[list[MotionSequence], list[MotionSequence]]:
    """Partition clips into (kept, dropped) by span (frames - 1) / fps."""
    kept, dropped = [], []
    for clip in clips:
        (dropped if clip.duration < min_len_s else kept).append(clip)
    return kept, dropped


def tpose_frame_mask(motion: MotionSequence, tpose_angle_eps: float) -> np.ndarray:
    """True where the mean joint-angle geodesic distance to rest is < eps."""
    if motion.joint_q is None:
        raise MotionError("T-pose detection needs local joint rotations")
    angles = quat.geodesic_angle(motion.joint_q, quat.identity(motion.joint_q.shape[:-1]))
    return angles.mean(axis=1) < tpose_angle_eps


def trim_tpose(motion: MotionSequence, tpose_angle_eps: float) -> MotionSequence:
    """Strip leading and trailing rest-pose runs; interior frames untouched."""
    mask = tpose_frame_mask(motion, tpose_angle_eps)
    active = np.flatnonzero(~mask)
    if len(active) == 0:
        raise TPoseOnlyError("every frame is within eps of the rest pose")
    start, end = int(active[0]), int(active[-1]) + 1
    if start == 0 and end == motion.num_frames:
        return motion
    return motion.slice(start, end, id=motion.id)


def quality_filter(
    clips: list[MotionSequence], config: FilterConfig
) -> list[tuple[MotionSequence, MetricReport, str | None]]:
    """Attach a MetricReport to every clip and flag jitter/static drops.

    Jitter is checked before dynamics so each drop carries exactly one
    reason.
    """
    out = []
    for clip in clips:
        report = evaluate_clip(clip, config.thresholds)
        reason = None
        if report.jitter_degree > config.max_jitter:
            reason = DROP_JITTER
        elif report.dynamic_degree < config.min_dynamic:
            reason = DROP_STATIC
        out.append((clip, report, reason))
    return out


def read_source_manifest(path: str | Path) -> list[SourceEntry]:
    """JSONL of {"path", "source_kind", "trust_global"} rows."""
    entries = []
    for row in io.read_jsonl(path):
        entries.append(
            SourceEntry(
                path=row["path"],
                source_kind=row.get("source_kind", "mocap"),
                trust_global=bool(row.get("trust_global", True)),
            )
        )
    return entries


def process_source(
    source: SourceEntry, config: FilterConfig, out_dir: str | Path | None = None
) -> list[ManifestEntry]:
    """Run one source through the full pipeline, returning its manifest rows.

    With out_dir set, kept clips are written under out_dir/clips/ and each
    entry's clip_path records the location relative to out_dir, so manifests
    compare byte-identical across output roots.
    """
    stem = Path(source.path).stem

    def dropped_whole(reason: str) -> list[ManifestEntry]:
        return [
            ManifestEntry(
                clip_id=f"{stem}_000",
                source_file=source.path,
                frame_range=(0, 0),
                fps=config.target_fps,
                status="dropped",
                drop_reason=reason,
                source_kind=source.source_kind,
                trust_global=source.trust_global,
                weight=source.weight,
            )
        ]

    try:
        motion = io.read_motion(source.path)
    except (OSError, MotionError):
        return dropped_whole(DROP_PARSE_ERROR)
    if not motion.id:
        motion = motion.with_(id=stem)

    try:
        motion = resample(motion, config.target_fps)
    except MotionError:
        return dropped_whole(DROP_TOO_SHORT)
    try:
        motion = canonicalize(motion)
    except MotionError:
        return dropped_whole(DROP_DEGENERATE_FACING)
    try:
        motion = trim_tpose(motion, config.tpose_angle_eps)
    except TPoseOnlyError:
        return dropped_whole(DROP_ALL_TPOSE)

    window = int(round(config.clip_len_s * motion.fps))
    clips = segment(motion, config.clip_len_s)
    ranges = [(k * window, min((k + 1) * window, motion.num_frames)) for k in range(len(clips))]

    entries = []
    long_enough, _ = filter_length(clips, config.min_len_s)
    long_ids = {c.id for c in long_enough}
    scored = {c.id: (r, reason) for c, r, reason in quality_filter(long_enough, config)}

    for clip, frame_range in zip(clips, ranges):
        entry = ManifestEntry(
            clip_id=clip.id,
            source_file=source.path,
            frame_range=frame_range,
            fps=clip.fps,
            status="kept",
            source_kind=source.source_kind,
            trust_global=source.trust_global,
            weight=source.weight,
        )
        if clip.id not in long_ids:
            entry.status = "dropped"
            entry.drop_reason = DROP_TOO_SHORT
        else:
            report, reason = scored[clip.id]
            entry.metric_summary = report
            if reason is not None:
                entry.status = "dropped"
                entry.drop_reason = reason
            elif out_dir is not None:
                rel = f"clips/{clip.id}.json"
                io.write_motion(clip, Path(out_dir) / rel)
                entry.clip_path = rel
        entries.append(entry)
    return entries


def run_pipeline(
    sources: list[SourceEntry], config: FilterConfig, out_dir: str | Path | None = None
) -> ClipManifest:
    """Process sources in manifest order; unreadable sources drop and the
    pipeline continues."""
    manifest = ClipManifest()
    for source in sources:
        manifest.entries.extend(process_source(source, config, out_dir))
    return manifest
