"""Distractor selection from similarity percentile bands.

Candidates are ranked by cosine similarity to the ground truth; three are
drawn from each of the low (below 5th percentile), middle (47th to 52nd), and
high (above 95th) bands. Band membership uses half-open rank intervals
[floor(p_lo * n), floor(p_hi * n)) on the ascending similarity ranking.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .aggregate import BenchError

NUM_DISTRACTORS = 9
PER_BAND = 3
BANDS = ((0.0, 0.05), (0.47, 0.52), (0.95, 1.0))


def _band_interval(lo_frac: float, hi_frac: float, n: int) -> tuple[int, int]:
    lo = int(np.floor(lo_frac * n))
    hi = n if hi_frac >= 1.0 else int(np.floor(hi_frac * n))
    return lo, hi


def select_distractors(
    gt_id: str,
    embeddings: Mapping[str, np.ndarray],
    seed: int,
) -> list[str]:
    """Nine distractor ids for the given ground truth.

    Within each band the picks are seeded-uniform without replacement; a band
    with fewer than three members is topped up deterministically from the
    nearest available ranks (distance to the band interval, lower rank first).
    Never returns the ground truth, never repeats a candidate.
    """
    if gt_id not in embeddings:
        raise BenchError(f"ground truth {gt_id!r} has no embedding")
    gt_vec = np.asarray(embeddings[gt_id], dtype=float)
    candidates = [k for k in embeddings if k != gt_id]
    n = len(candidates)
    if n < NUM_DISTRACTORS:
        raise BenchError(f"need at least {NUM_DISTRACTORS} candidates, have {n}")

    sims = np.array([float(np.dot(gt_vec, np.asarray(embeddings[k], dtype=float))) for k in candidates])
    # Ascending similarity; ties broken by candidate id for determinism.
    order = sorted(range(n), key=lambda i: (sims[i], candidates[i]))
    ranked = [candidates[i] for i in order]

    rng = np.random.default_rng(seed)
    chosen_ranks: set[int] = set()
    picks_by_band: list[list[int]] = []
    intervals = [_band_interval(lo, hi, n) for lo, hi in BANDS]

    for lo, hi in intervals:
        band = [r for r in range(lo, hi) if r not in chosen_ranks]
        take = min(PER_BAND, len(band))
        picked = sorted(rng.choice(band, size=take, replace=False).tolist()) if take else []
        chosen_ranks.update(picked)
        picks_by_band.append(picked)

    for band_idx, (lo, hi) in enumerate(intervals):
        deficit = PER_BAND - len(picks_by_band[band_idx])
        while deficit > 0:
            available = [r for r in range(n) if r not in chosen_ranks]
            if not available:
                break

            def distance(r: int) -> int:
                if lo <= r < hi:
                    return 0
                return min(abs(r - lo), abs(r - max(lo, hi - 1)))

            best = min(available, key=lambda r: (distance(r), r))
            chosen_ranks.add(best)
            picks_by_band[band_idx].append(best)
            deficit -= 1

    out = []
    for picked in picks_by_band:
        out.extend(ranked[r] for r in sorted(picked))
    return out
