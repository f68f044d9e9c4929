"""k-means clustering of detections and the centroid-distance evaluation metric."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EvaluationError, ValidationError
from .radar import DetectionSet

__all__ = [
    "ClusterResult",
    "EvalSummary",
    "kmeans",
    "match_and_distance",
    "evaluate_run",
    "summary_record",
]

EXHAUSTIVE_MATCH_MAX_K = 6


@dataclass(frozen=True, eq=False)
class ClusterResult:
    centroids: np.ndarray  # (k, 2)
    assignment: np.ndarray  # (n,) cluster index per point
    inertia: float
    history: tuple[float, ...] = ()  # inertia after every Lloyd step
    n_iter: int = 0

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


@dataclass(frozen=True)
class EvalSummary:
    per_frame_distance: tuple[float, ...]
    frame_t: tuple[float, ...]
    skipped: int
    min: float
    mean: float
    max: float

    @classmethod
    def from_distances(cls, distances, frame_t, skipped: int) -> "EvalSummary":
        d = np.asarray(distances, dtype=float)
        if d.size == 0:
            raise EvaluationError("no retained frames; the run yields no metric")
        return cls(tuple(d.tolist()), tuple(float(t) for t in frame_t), int(skipped),
                   float(d.min()), float(d.mean()), float(d.max()))

    def aggregate(self, mode: str) -> float:
        if mode not in ("min", "mean", "max"):
            raise ValidationError(f"unknown aggregation mode {mode!r}")
        return getattr(self, mode)


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _plusplus_init(points: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    """k-means++ seeding restricted to distinct points (no duplicate centers)."""
    uniq = np.unique(points, axis=0)
    centers = [uniq[gen.integers(uniq.shape[0])]]
    for _ in range(1, k):
        d2 = _sq_dists(uniq, np.array(centers)).min(axis=1)
        centers.append(uniq[gen.choice(uniq.shape[0], p=d2 / d2.sum())])
    return np.array(centers, dtype=float)


def _means(points, labels, k, centroids):
    """Cluster means; an empty cluster takes over the point worst served by its centroid."""
    labels = labels.copy()
    for j in range(k):
        if not np.any(labels == j):
            cost = ((points - centroids[labels]) ** 2).sum(axis=1)
            # only steal from clusters that keep at least one point
            counts = np.bincount(labels, minlength=k)
            cost[counts[labels] <= 1] = -1.0
            i = int(np.argmax(cost))
            labels[i] = j
            centroids = centroids.copy()
            centroids[j] = points[i]
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    return sums / counts[:, None], labels


def _inertia(points, labels, centroids) -> float:
    return float(((points - centroids[labels]) ** 2).sum())


def _lloyd(points, k, init, max_iter, tol):
    labels = _sq_dists(points, init).argmin(axis=1)
    centroids, labels = _means(points, labels, k, init)
    history = [_inertia(points, labels, centroids)]
    n_iter = 1
    while n_iter < max_iter:
        new_labels = _sq_dists(points, centroids).argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        new_centroids, new_labels = _means(points, new_labels, k, centroids)
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids, labels = new_centroids, new_labels
        history.append(_inertia(points, labels, centroids))
        n_iter += 1
        if shift < tol:
            break
    return centroids, labels, history, n_iter


def kmeans(points, k: int = 1, seed: int = 0, max_iter: int = 300, tol: float = 1e-9,
           n_init: int = 4) -> ClusterResult:
    """Lloyd's algorithm from k-means++ seeding; the best of ``n_init`` seeded starts wins.

    Every returned centroid is the mean of its assigned points.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if pts.shape[0] == 0:
        raise ValidationError("cannot cluster an empty point set")
    n_distinct = np.unique(pts, axis=0).shape[0]
    if k > n_distinct:
        raise ValidationError(f"k={k} exceeds the number of distinct points ({n_distinct})")
    if k == 1:
        c = pts.mean(axis=0, keepdims=True)
        labels = np.zeros(pts.shape[0], dtype=np.int64)
        inertia = _inertia(pts, labels, c)
        return ClusterResult(c, labels, inertia, (inertia,), 1)

    gen = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        init = _plusplus_init(pts, k, gen)
        c, labels, history, n_iter = _lloyd(pts, k, init, max_iter, tol)
        if best is None or history[-1] < best[2][-1]:
            best = (c, labels, history, n_iter)
    c, labels, history, n_iter = best
    return ClusterResult(c, labels, history[-1], tuple(history), n_iter)


def match_and_distance(sim: ClusterResult, ref: ClusterResult) -> float:
    """Mean euclidean distance under the minimum-cost one-to-one centroid matching."""
    a = np.asarray(getattr(sim, "centroids", sim), dtype=float).reshape(-1, 2)
    b = np.asarray(getattr(ref, "centroids", ref), dtype=float).reshape(-1, 2)
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"cluster counts differ: {a.shape[0]} vs {b.shape[0]}")
    k = a.shape[0]
    cost = np.sqrt(_sq_dists(a, b))
    if k <= EXHAUSTIVE_MATCH_MAX_K:
        rows = np.arange(k)
        total = min(cost[rows, list(p)].sum() for p in itertools.permutations(range(k)))
    else:
        r, c = linear_sum_assignment(cost)
        total = cost[r, c].sum()
    return float(total / k)


def evaluate_run(sim_frames, ref_frames, k: int = 1, seed: int = 0,
                 time_tolerance: float | None = None) -> EvalSummary:
    """Per-frame centroid distance between simulated and reference detections.

    Frames where either side cannot support ``k`` clusters are skipped and
    counted; aggregates cover the retained frames only.
    """
    sim_frames, ref_frames = list(sim_frames), list(ref_frames)
    if len(sim_frames) != len(ref_frames):
        raise ValidationError(f"frame counts differ: {len(sim_frames)} vs {len(ref_frames)}")
    if time_tolerance is None:
        t = np.array([f.frame_t for f in ref_frames])
        time_tolerance = 0.5 * float(np.min(np.diff(t))) if t.size > 1 else np.inf
    distances, times, skipped = [], [], 0
    for s, r in zip(sim_frames, ref_frames):
        if abs(s.frame_t - r.frame_t) > time_tolerance:
            raise ValidationError(f"frames not time-aligned: {s.frame_t} vs {r.frame_t}")
        if not (_supports(s, k) and _supports(r, k)):
            skipped += 1
            continue
        d = match_and_distance(kmeans(s.points, k, seed), kmeans(r.points, k, seed))
        distances.append(d)
        times.append(r.frame_t)
    return EvalSummary.from_distances(distances, times, skipped)


def _supports(frame: DetectionSet, k: int) -> bool:
    if len(frame) < k:
        return False
    return k == 1 or np.unique(frame.points, axis=0).shape[0] >= k


def summary_record(run_id: int, summary: EvalSummary) -> str:
    """One JSON-lines evaluation record."""
    return json.dumps(
        {"run_id": run_id, "skipped_frames": summary.skipped,
         "min": summary.min, "mean": summary.mean, "max": summary.max}
    )
