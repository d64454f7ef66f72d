"""Rectified flow-matching kernel with pluggable velocity fields.

States live on straight-line paths x_t = (1 - t) * eps + t * x0 between noise
(t = 0) and data (t = 1); the regression target is the constant velocity
x0 - eps. Velocity fields are plain callables, so analytic oracles slot in
for tests and a trained model would plug into the same seam. Includes the
gated branch policy, the seeded training-branch draw, and the teacher
distillation loop.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import io


class FlowError(ValueError):
    pass


# field(x, t, c) -> velocity, same shape as x
VelocityField = Callable[[np.ndarray, float, "Condition | None"], np.ndarray]


@dataclass(frozen=True)
class Condition:
    """Opaque conditioning payload; hashable and immutable."""

    prompt_id: str
    text: str | None = None
    reference: str | None = None

    def to_dict(self) -> dict:
        return {"prompt_id": self.prompt_id, "text": self.text, "reference": self.reference}


@dataclass(frozen=True)
class FlowState:
    x: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if not 0.0 <= self.t <= 1.0:
            raise FlowError(f"t must be in [0, 1], got {self.t}")
        if not np.all(np.isfinite(self.x)):
            raise FlowError("state contains NaN or Inf")


class Branch(Enum):
    T2M = "t2m"
    M2M = "m2m"


@dataclass(frozen=True)
class BranchProbabilities:
    p_t2m: float
    p_m2m: float

    def __post_init__(self):
        if self.p_t2m < 0 or self.p_m2m < 0:
            raise FlowError("branch probabilities must be >= 0")
        if abs(self.p_t2m + self.p_m2m - 1.0) > 1e-9:
            raise FlowError("branch probabilities must sum to 1")


# Curated high-quality sources favor the text branch; everything else leans
# on the motion-reference branch.
TRAINING_BRANCH_PROBS = {
    "curated": BranchProbabilities(p_t2m=0.8, p_m2m=0.2),
    "other": BranchProbabilities(p_t2m=0.4, p_m2m=0.6),
}


def _check_shapes(x0: np.ndarray, eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x0 = np.asarray(x0, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if x0.shape != eps.shape:
        raise FlowError(f"shape mismatch: {x0.shape} vs {eps.shape}")
    return x0, eps


def interpolate(x0: np.ndarray, eps: np.ndarray, t: float) -> np.ndarray:
    """Point on the straight path: (1 - t) * eps + t * x0."""
    x0, eps = _check_shapes(x0, eps)
    if not 0.0 <= t <= 1.0:
        raise FlowError(f"t must be in [0, 1], got {t}")
    return (1.0 - t) * eps + t * x0


def velocity_target(x0: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Constant velocity along the path: x0 - eps."""
    x0, eps = _check_shapes(x0, eps)
    return x0 - eps


def fm_loss(
    field_fn: VelocityField,
    x0: np.ndarray,
    eps: np.ndarray,
    t: float,
    c: Condition | None = None,
) -> float:
    """Mean squared error of the field against the path velocity at time t."""
    x_t = interpolate(x0, eps, t)
    pred = np.asarray(field_fn(x_t, t, c), dtype=float)
    target = velocity_target(x0, eps)
    if pred.shape != target.shape:
        raise FlowError(f"field output shape {pred.shape} != target {target.shape}")
    return float(np.mean((pred - target) ** 2))


def sample_ode(
    field_fn: VelocityField,
    eps: np.ndarray,
    steps: int,
    c: Condition | None = None,
    method: str = "euler",
) -> np.ndarray:
    """Integrate the field from (t=0, x=eps) to t=1 with uniform steps.

    method "euler" is a single evaluation per step; "heun" adds the midpoint
    correction.
    """
    if steps < 1:
        raise FlowError("steps must be >= 1")
    if method not in ("euler", "heun"):
        raise FlowError(f"unknown method {method!r}")
    x = np.array(eps, dtype=float)
    h = 1.0 / steps
    for k in range(steps):
        t = k * h
        v = np.asarray(field_fn(x, t, c), dtype=float)
        if method == "euler":
            x = x + v * h
        else:
            v2 = np.asarray(field_fn(x + v * h, t + h, c), dtype=float)
            x = x + 0.5 * h * (v + v2)
    return x


def select_branch(alignment_score: float, tau: float) -> Branch:
    """Gate on semantic alignment: scores at or above tau use the
    motion-reference branch, lower scores fall back to the text branch."""
    if not 0.0 <= alignment_score <= 1.0:
        raise FlowError("alignment_score must be in [0, 1]")
    if not 0.0 <= tau <= 1.0:
        raise FlowError("tau must be in [0, 1]")
    return Branch.M2M if alignment_score >= tau else Branch.T2M


def draw_training_branch(source_kind: str, rng_seed: int, counter: int) -> Branch:
    """Seeded branch draw; deterministic for a fixed (seed, counter)."""
    if source_kind not in TRAINING_BRANCH_PROBS:
        raise FlowError(f"source_kind must be one of {sorted(TRAINING_BRANCH_PROBS)}")
    probs = TRAINING_BRANCH_PROBS[source_kind]
    u = np.random.default_rng((rng_seed, counter)).random()
    return Branch.T2M if u < probs.p_t2m else Branch.M2M


def prompt_noise(prompt_id: str, shape: tuple[int, ...], base_seed: int = 0) -> np.ndarray:
    """Per-prompt standard normal noise, stable across runs and platforms."""
    digest = hashlib.sha256(f"{base_seed}:{prompt_id}".encode()).digest()
    seed = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(seed).standard_normal(shape)


@dataclass
class DistilledSample:
    condition: Condition
    data: np.ndarray | None
    error: str | None = None


def distill_dataset(
    teacher: VelocityField,
    prompts: Sequence[Condition],
    steps: int,
    shape: tuple[int, int],
    method: str = "euler",
    base_seed: int = 0,
) -> list[DistilledSample]:
    """Sample the teacher once per prompt with prompt-derived noise.

    Output order matches the prompt order; a teacher failure flags its entry
    and the loop continues.
    """
    if not prompts:
        raise FlowError("prompts must be nonempty")
    samples = []
    for c in prompts:
        eps = prompt_noise(c.prompt_id, shape, base_seed)
        try:
            data = sample_ode(teacher, eps, steps, c, method=method)
            samples.append(DistilledSample(condition=c, data=data))
        except Exception as exc:
            samples.append(DistilledSample(condition=c, data=None, error=str(exc)))
    return samples


def write_distilled(samples: Sequence[DistilledSample], out_dir: str | Path) -> Path:
    """Write a distillation manifest plus one little-endian float32 sidecar
    per successful sample. Returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, sample in enumerate(samples):
        row = {
            "prompt_id": sample.condition.prompt_id,
            "condition": sample.condition.to_dict(),
        }
        if sample.data is None:
            row["error"] = sample.error or "teacher failed"
        else:
            name = f"{i:05d}.f32"
            (out / name).write_bytes(np.ascontiguousarray(sample.data, dtype="<f4").tobytes())
            row["shape"] = list(sample.data.shape)
            row["data_path"] = name
        rows.append(row)
    manifest = out / "distilled.jsonl"
    io.write_jsonl(rows, manifest)
    return manifest


def read_distilled(manifest_path: str | Path) -> list[DistilledSample]:
    base = Path(manifest_path).parent
    samples = []
    for row in io.read_jsonl(manifest_path):
        cond = Condition(**row["condition"])
        if "data_path" in row:
            raw = (base / row["data_path"]).read_bytes()
            data = np.frombuffer(raw, dtype="<f4").astype(float).reshape(row["shape"])
            samples.append(DistilledSample(condition=cond, data=data))
        else:
            samples.append(DistilledSample(condition=cond, data=None, error=row.get("error")))
    return samples
