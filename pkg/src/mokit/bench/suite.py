"""Prompt suites and the judge-based consistency evaluation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import io
from .aggregate import BenchError
from .clients import ClientError, EmbeddingProvider, JudgeClient, embed_unit
from .distractors import select_distractors

DIMENSIONS = ("temporal_quality", "frame_quality", "consistency", "generalizability")

# A suite that declares kind "mbench-official" must carry exactly this
# per-dimension prompt split (450 prompts total).
OFFICIAL_KIND = "mbench-official"
OFFICIAL_SPLIT = {
    "temporal_quality": 150,
    "frame_quality": 100,
    "consistency": 100,
    "generalizability": 100,
}


@dataclass(frozen=True)
class Prompt:
    id: str
    text: str
    dimension: str

    def __post_init__(self):
        if self.dimension not in DIMENSIONS:
            raise BenchError(f"dimension must be one of {DIMENSIONS}, got {self.dimension!r}")


@dataclass(frozen=True)
class PromptSuite:
    name: str
    prompts: tuple[Prompt, ...]
    kind: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "prompts", tuple(self.prompts))
        ids = [p.id for p in self.prompts]
        if len(ids) != len(set(ids)):
            raise BenchError("prompt ids must be unique")
        if self.kind == OFFICIAL_KIND:
            counts = {d: 0 for d in DIMENSIONS}
            for p in self.prompts:
                counts[p.dimension] += 1
            if counts != OFFICIAL_SPLIT:
                raise BenchError(f"official suite needs split {OFFICIAL_SPLIT}, got {counts}")

    def by_id(self, prompt_id: str) -> Prompt:
        for p in self.prompts:
            if p.id == prompt_id:
                return p
        raise BenchError(f"unknown prompt id {prompt_id!r}")


def load_prompt_suite(path: str | Path) -> PromptSuite:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    prompts = [Prompt(id=p["id"], text=p["text"], dimension=p["dimension"]) for p in obj["prompts"]]
    return PromptSuite(name=obj.get("name", Path(path).stem), prompts=tuple(prompts), kind=obj.get("kind"))


@dataclass(frozen=True)
class RenderEntry:
    prompt_id: str
    model: str
    render_ref: str


def read_renders_manifest(path: str | Path) -> list[RenderEntry]:
    """JSONL of {"prompt_id", "model", "render_ref"} rows."""
    return [
        RenderEntry(prompt_id=r["prompt_id"], model=r["model"], render_ref=r["render_ref"])
        for r in io.read_jsonl(path)
    ]


@dataclass
class ConsistencyResult:
    rows: list[dict] = field(default_factory=list)
    accuracy: dict[str, float] = field(default_factory=dict)
    unscored: int = 0
    total: int = 0

    @property
    def unscored_fraction(self) -> float:
        return self.unscored / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "accuracy": dict(sorted(self.accuracy.items())),
            "unscored": self.unscored,
            "total": self.total,
            "rows": self.rows,
        }


def _prompt_seed(base_seed: int, prompt_id: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{prompt_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def run_consistency_eval(
    suite: PromptSuite,
    judge: JudgeClient,
    embedder: EmbeddingProvider,
    renders: Sequence[RenderEntry],
    seed: int = 0,
) -> ConsistencyResult:
    """Ten-way label selection per rendered motion.

    For each render the candidate set is the ground-truth prompt text plus
    nine distractor texts drawn from the suite by similarity band; the judge
    scores 1 when it picks the ground truth. Judge failures mark the render
    unscored and the run continues. Deterministic per seed.
    """
    texts = [p.text for p in suite.prompts]
    vectors = embed_unit(embedder, texts)
    embeddings = {p.id: vectors[i] for i, p in enumerate(suite.prompts)}
    text_of = {p.id: p.text for p in suite.prompts}

    result = ConsistencyResult()
    scores: dict[str, list[int]] = {}
    for entry in sorted(renders, key=lambda e: (e.prompt_id, e.model)):
        prompt = suite.by_id(entry.prompt_id)
        prompt_seed = _prompt_seed(seed, entry.prompt_id)
        distractor_ids = select_distractors(entry.prompt_id, embeddings, prompt_seed)
        candidates = [prompt.text] + [text_of[d] for d in distractor_ids]
        rng = np.random.default_rng(prompt_seed)
        order = rng.permutation(len(candidates))
        shuffled = [candidates[i] for i in order]

        result.total += 1
        row = {"prompt_id": entry.prompt_id, "model": entry.model, "render_ref": entry.render_ref}
        try:
            judgment = judge.judge(entry.render_ref, shuffled)
        except ClientError as exc:
            row.update({"scored": False, "error": str(exc)})
            result.rows.append(row)
            result.unscored += 1
            continue
        correct = int(judgment.choice == prompt.text)
        row.update({"scored": True, "choice": judgment.choice, "correct": correct})
        result.rows.append(row)
        scores.setdefault(entry.model, []).append(correct)

    result.accuracy = {m: float(np.mean(v)) for m, v in sorted(scores.items())}
    return result
