"""Pairwise outcome aggregation: win ratios, single-score reconciliation,
rank correlation, and radar normalization."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

OUTCOMES = ("a_wins", "b_wins", "tie")


class BenchError(ValueError):
    pass


@dataclass(frozen=True)
class PairwiseComparison:
    prompt_id: str
    model_a: str
    model_b: str
    outcome: str

    def __post_init__(self):
        if self.model_a == self.model_b:
            raise BenchError("model_a and model_b must differ")
        if self.outcome not in OUTCOMES:
            raise BenchError(f"outcome must be one of {OUTCOMES}")


@dataclass(frozen=True)
class WinRatioTable:
    ratios: dict[str, float]
    scores: dict[str, float]
    appearances: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "ratios": dict(sorted(self.ratios.items())),
            "scores": dict(sorted(self.scores.items())),
            "appearances": dict(sorted(self.appearances.items())),
        }


def make_pairings(model_ids: Sequence[str]) -> list[tuple[str, str]]:
    """All C(n, 2) unordered model pairs, lexicographically ordered."""
    ids = sorted(set(model_ids))
    if len(ids) < 2:
        raise BenchError("need at least 2 models")
    if len(ids) != len(model_ids):
        raise BenchError("model ids must be unique")
    return list(combinations(ids, 2))


def win_ratio(comparisons: Sequence[PairwiseComparison]) -> WinRatioTable:
    """Win scores 1, losses 0, ties 0.5 each; ratio is score over appearances."""
    if not comparisons:
        raise BenchError("no comparisons")
    scores: dict[str, float] = {}
    appearances: dict[str, int] = {}
    for comp in comparisons:
        for model in (comp.model_a, comp.model_b):
            appearances[model] = appearances.get(model, 0) + 1
            scores.setdefault(model, 0.0)
        if comp.outcome == "a_wins":
            scores[comp.model_a] += 1.0
        elif comp.outcome == "b_wins":
            scores[comp.model_b] += 1.0
        else:
            scores[comp.model_a] += 0.5
            scores[comp.model_b] += 0.5
    ratios = {m: scores[m] / appearances[m] for m in scores}
    return WinRatioTable(ratios=ratios, scores=scores, appearances=appearances)


def reconcile_single_scores(
    comparisons: Sequence[PairwiseComparison],
    single_scores: Mapping[tuple[str, str], Sequence[float]],
    margin: float = 1.0,
) -> tuple[list[PairwiseComparison], list[dict]]:
    """Flip pairwise outcomes that contradict clearly separated single ratings.

    single_scores maps (prompt_id, model) to that video's 0-2 ratings. Where
    the mean ratings differ by at least `margin` and the pairwise outcome
    disagrees with the higher-rated model (including ties), the outcome is
    revised in favor of the single ratings. Returns the revised list plus a
    revision log; untouched comparisons are passed through unchanged.
    """
    revised = []
    log = []
    for comp in comparisons:
        key_a = (comp.prompt_id, comp.model_a)
        key_b = (comp.prompt_id, comp.model_b)
        if key_a not in single_scores or key_b not in single_scores:
            raise BenchError(f"missing single ratings for {key_a} or {key_b}")
        mean_a = float(np.mean(single_scores[key_a]))
        mean_b = float(np.mean(single_scores[key_b]))
        new_outcome = comp.outcome
        if mean_a - mean_b >= margin and comp.outcome != "a_wins":
            new_outcome = "a_wins"
        elif mean_b - mean_a >= margin and comp.outcome != "b_wins":
            new_outcome = "b_wins"
        if new_outcome != comp.outcome:
            log.append(
                {
                    "prompt_id": comp.prompt_id,
                    "model_a": comp.model_a,
                    "model_b": comp.model_b,
                    "old_outcome": comp.outcome,
                    "new_outcome": new_outcome,
                    "mean_a": mean_a,
                    "mean_b": mean_b,
                }
            )
            comp = PairwiseComparison(comp.prompt_id, comp.model_a, comp.model_b, new_outcome)
        revised.append(comp)
    return revised, log


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def correlate(x: Sequence[float], y: Sequence[float], method: str = "pearson") -> float:
    """Pearson or Spearman correlation coefficient in [-1, 1].

    Spearman is Pearson on average-rank vectors.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise BenchError("need two equal-length vectors of length >= 2")
    if method == "spearman":
        x, y = _average_ranks(x), _average_ranks(y)
    elif method != "pearson":
        raise BenchError(f"unknown method {method!r}")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.sum(xc * xc) * np.sum(yc * yc))
    if denom == 0:
        raise BenchError("correlation undefined for zero-variance input")
    return float(np.clip(np.sum(xc * yc) / denom, -1.0, 1.0))


def radar_normalize(values: Sequence[float], higher_is_better: bool) -> list[float]:
    """Map per-model scores onto [0.2, 1.0] with polarity correction.

    Scores are scaled by the max; lower-is-better metrics take the reciprocal
    of the scaled values; the result is affinely mapped so the best model hits
    1.0 and the worst 0.2. All-equal inputs map to 1.0 everywhere.
    """
    arr = np.asarray(values, dtype=float)
    if len(arr) < 2:
        raise BenchError("need at least 2 models")
    if not np.all(np.isfinite(arr)):
        raise BenchError("scores must be finite")
    if not higher_is_better and np.any(arr <= 0):
        raise BenchError("lower-is-better scores must be positive")
    scaled = arr / arr.max()
    if not higher_is_better:
        scaled = 1.0 / scaled
    lo, hi = scaled.min(), scaled.max()
    if hi == lo:
        return [1.0] * len(arr)
    frac = (scaled - lo) / (hi - lo)
    # convex combination keeps the endpoints exactly at 0.2 and 1.0
    return [float(v) for v in (1.0 - frac) * 0.2 + frac * 1.0]


def scores_to_comparisons(
    per_prompt_scores: Mapping[str, Mapping[str, float]]
) -> list[PairwiseComparison]:
    """Expand per-prompt per-model scalar scores into pairwise outcomes.

    Higher score wins, equality ties; used to put automatic metrics on the
    same win-ratio footing as human judgments.
    """
    comparisons = []
    for prompt_id in sorted(per_prompt_scores):
        model_scores = per_prompt_scores[prompt_id]
        for a, b in make_pairings(list(model_scores)):
            if model_scores[a] > model_scores[b]:
                outcome = "a_wins"
            elif model_scores[a] < model_scores[b]:
                outcome = "b_wins"
            else:
                outcome = "tie"
            comparisons.append(PairwiseComparison(prompt_id, a, b, outcome))
    return comparisons


def read_pairwise_csv(path: str | Path) -> list[PairwiseComparison]:
    """CSV columns: prompt_id, model_a, model_b, outcome in {a, b, tie}."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            outcome = {"a": "a_wins", "b": "b_wins", "tie": "tie"}.get(row["outcome"].strip())
            if outcome is None:
                raise BenchError(f"bad outcome {row['outcome']!r} for prompt {row['prompt_id']}")
            out.append(PairwiseComparison(row["prompt_id"], row["model_a"], row["model_b"], outcome))
    return out


def read_singles_csv(path: str | Path) -> dict[tuple[str, str], list[float]]:
    """CSV columns: prompt_id, model, video_idx, rating in {0, 1, 2}."""
    out: dict[tuple[str, str], list[float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rating = float(row["rating"])
            if rating not in (0.0, 1.0, 2.0):
                raise BenchError(f"rating must be 0, 1, or 2, got {row['rating']}")
            out.setdefault((row["prompt_id"], row["model"]), []).append(rating)
    return out
