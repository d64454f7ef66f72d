"""External judge and embedder seams.

Both services speak JSON:
  embedder: {"texts": [str]}                     -> {"vectors": [[float]]}
  judge:    {"render_ref": str, "candidates": [str]} -> {"choice": str, "score": float?}

Transcripts are JSONL, one {"request": ..., "response": ...} exchange per
line, written by the recording wrappers and consumed by the replay clients,
so the whole harness runs offline.
"""

from __future__ import annotations

import hashlib
import json
import threading
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .. import io
from .aggregate import BenchError


class ClientError(RuntimeError):
    pass


@dataclass(frozen=True)
class JudgeResult:
    choice: str
    score: float | None = None


class EmbeddingProvider(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class JudgeClient(Protocol):
    def judge(self, render_ref: str, candidates: Sequence[str]) -> JudgeResult: ...


def _request_key(request: dict) -> str:
    return json.dumps(request, sort_keys=True, ensure_ascii=False)


class HashEmbedder:
    """Deterministic local embedder: unit vectors seeded from the text hash.

    Not semantically meaningful; useful for tests, demos, and dry runs.
    """

    def __init__(self, dim: int = 64):
        self.dim = dim

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim))
        for i, text in enumerate(texts):
            seed = int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")
            v = np.random.default_rng(seed).standard_normal(self.dim)
            out[i] = v / np.linalg.norm(v)
        return out


class ReplayEmbedder:
    def __init__(self, transcript_path: str | Path):
        self.vectors: dict[str, list[float]] = {}
        for row in io.read_jsonl(transcript_path):
            texts = row["request"]["texts"]
            vectors = row["response"]["vectors"]
            for text, vec in zip(texts, vectors):
                self.vectors[text] = vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        missing = [t for t in texts if t not in self.vectors]
        if missing:
            raise ClientError(f"transcript has no embedding for {missing[0]!r}")
        return np.array([self.vectors[t] for t in texts], dtype=float)


class ReplayJudge:
    def __init__(self, transcript_path: str | Path):
        self.responses: dict[str, dict] = {}
        for row in io.read_jsonl(transcript_path):
            self.responses[_request_key(row["request"])] = row["response"]

    def judge(self, render_ref: str, candidates: Sequence[str]) -> JudgeResult:
        key = _request_key({"render_ref": render_ref, "candidates": list(candidates)})
        if key not in self.responses:
            raise ClientError(f"transcript has no judgment for render {render_ref!r}")
        response = self.responses[key]
        return JudgeResult(choice=response["choice"], score=response.get("score"))


class _TranscriptWriter:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.path.write_text("")

    def append(self, request: dict, response: dict) -> None:
        line = io.dumps_line({"request": request, "response": response})
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line)


class RecordingEmbedder:
    def __init__(self, inner: EmbeddingProvider, transcript_path: str | Path):
        self.inner = inner
        self.writer = _TranscriptWriter(transcript_path)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self.inner.embed(texts)
        self.writer.append({"texts": list(texts)}, {"vectors": np.asarray(vectors).tolist()})
        return vectors


class RecordingJudge:
    def __init__(self, inner: JudgeClient, transcript_path: str | Path):
        self.inner = inner
        self.writer = _TranscriptWriter(transcript_path)

    def judge(self, render_ref: str, candidates: Sequence[str]) -> JudgeResult:
        result = self.inner.judge(render_ref, candidates)
        response: dict = {"choice": result.choice}
        if result.score is not None:
            response["score"] = result.score
        self.writer.append({"render_ref": render_ref, "candidates": list(candidates)}, response)
        return result


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    data = json.dumps(payload).encode()
    req = urllib.request.Request(url, data=data, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode())
    except Exception as exc:
        raise ClientError(f"request to {url} failed: {exc}") from exc


class HttpEmbedder:
    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        response = _post_json(self.url, {"texts": list(texts)}, self.timeout)
        vectors = np.asarray(response["vectors"], dtype=float)
        if vectors.shape[0] != len(texts):
            raise ClientError("embedder returned wrong number of vectors")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ClientError("embedder returned non-unit vectors")
        return vectors

class HttpJudge:
    def __init__(self, url: str, timeout: float = 60.0):
        self.url = url
        self.timeout = timeout

    def judge(self, render_ref: str, candidates: Sequence[str]) -> JudgeResult:
        response = _post_json(
            self.url, {"render_ref": render_ref, "candidates": list(candidates)}, self.timeout
        )
        choice = response.get("choice")
        if choice not in candidates:
            raise ClientError(f"judge chose {choice!r}, not one of the offered labels")
        return JudgeResult(choice=choice, score=response.get("score"))


def embed_unit(provider: EmbeddingProvider, texts: Sequence[str]) -> np.ndarray:
    """Embed and enforce the unit-norm invariant."""
    vectors = np.asarray(provider.embed(texts), dtype=float)
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        raise BenchError("embedding provider returned a zero vector")
    return vectors / norms[:, None]
