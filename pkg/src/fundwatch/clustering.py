"""Centre-based clustering of delta points in (delta1, delta2) space.

Lloyd iterations run in a fused numba kernel (assignment and centroid update
in one pass over the points), seeded by greedy k-means++. Several restarts are
drawn from one seeded generator and the lowest-inertia run wins, which keeps
results deterministic under the seed while avoiding the bad local optima a
single seeding occasionally lands in.

Points are canonically ordered internally (lexicographic by coordinates), so
the partition depends only on the multiset of points, never on input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .errors import ConfigurationError, RequestError
from .features import DeltaPoint


@dataclass(frozen=True)
class ClusteringConfig:
    n_clusters: int = 4
    max_iterations: int = 100
    convergence_tolerance: float = 1e-6  # max centroid displacement
    rng_seed: int = 0
    n_init: int = 10  # restarts; best inertia wins

    def __post_init__(self) -> None:
        if self.n_clusters < 1:
            raise ConfigurationError("n_clusters must be >= 1")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if self.convergence_tolerance < 0:
            raise ConfigurationError("convergence_tolerance must be >= 0")
        if self.n_init < 1:
            raise ConfigurationError("n_init must be >= 1")


@dataclass
class ClusteringResult:
    centroids: list[tuple[float, float]]
    assignments: list[int]
    inertia: float
    iterations_run: int
    per_cluster_sizes: list[int]
    inertia_history: list[float]
    config: ClusteringConfig


@njit(cache=True)
def _lloyd(pts, cent, tol, max_iter, history):  # pragma: no cover - jitted
    n = pts.shape[0]
    k = cent.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    sums = np.zeros((k, 2))
    counts = np.zeros(k, dtype=np.int64)
    it = 0
    while it < max_iter:
        for c in range(k):
            sums[c, 0] = 0.0
            sums[c, 1] = 0.0
            counts[c] = 0
        step_inertia = 0.0
        for i in range(n):
            px = pts[i, 0]
            py = pts[i, 1]
            best_d = np.inf
            best_c = 0
            for c in range(k):
                dx = px - cent[c, 0]
                dy = py - cent[c, 1]
                d = dx * dx + dy * dy
                if d < best_d:
                    best_d = d
                    best_c = c
            labels[i] = best_c
            sums[best_c, 0] += px
            sums[best_c, 1] += py
            counts[best_c] += 1
            step_inertia += best_d
        history[it] = step_inertia
        it += 1
        shift = 0.0
        for c in range(k):
            if counts[c] > 0:
                nx = sums[c, 0] / counts[c]
                ny = sums[c, 1] / counts[c]
            else:
                # empty cluster: re-seed at the farthest point from its former centroid
                far_d = -1.0
                far_i = 0
                for i in range(n):
                    dx = pts[i, 0] - cent[c, 0]
                    dy = pts[i, 1] - cent[c, 1]
                    d = dx * dx + dy * dy
                    if d > far_d:
                        far_d = d
                        far_i = i
                nx = pts[far_i, 0]
                ny = pts[far_i, 1]
            s = abs(nx - cent[c, 0])
            if abs(ny - cent[c, 1]) > s:
                s = abs(ny - cent[c, 1])
            if s > shift:
                shift = s
            cent[c, 0] = nx
            cent[c, 1] = ny
        if shift <= tol:
            break
    # final assignment against the final centroids
    inertia = 0.0
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        best_d = np.inf
        best_c = 0
        for c in range(k):
            dx = px - cent[c, 0]
            dy = py - cent[c, 1]
            d = dx * dx + dy * dy
            if d < best_d:
                best_d = d
                best_c = c
        labels[i] = best_c
        inertia += best_d
    history[it] = inertia
    return labels, inertia, it


def _seed_centroids(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++: a few candidates per step, keep the potential minimizer."""
    n = len(pts)
    trials = 2 + int(math.log(k)) if k > 1 else 1
    cent = np.empty((k, 2))
    cent[0] = pts[int(rng.integers(n))]
    d2 = ((pts - cent[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            cent[c] = pts[int(rng.integers(n))]
            continue
        candidates = rng.choice(n, size=trials, p=d2 / total)
        best_pot = np.inf
        best_d2 = d2
        best_i = int(candidates[0])
        for i in candidates:
            trial_d2 = np.minimum(d2, ((pts - pts[int(i)]) ** 2).sum(axis=1))
            pot = float(trial_d2.sum())
            if pot < best_pot:
                best_pot = pot
                best_d2 = trial_d2
                best_i = int(i)
        cent[c] = pts[best_i]
        d2 = best_d2
    return cent


def _as_xy(points: Sequence[DeltaPoint] | np.ndarray) -> np.ndarray:
    if isinstance(points, np.ndarray):
        xy = np.asarray(points, dtype=np.float64)
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise ConfigurationError("point array must have shape (n, 2)")
        return xy
    return np.array([(p.delta1, p.delta2) for p in points], dtype=np.float64)


def kmeans(points: Sequence[DeltaPoint] | np.ndarray, config: ClusteringConfig) -> ClusteringResult:
    """Cluster points with Lloyd's algorithm; deterministic under config.rng_seed."""
    xy = _as_xy(points)
    n = len(xy)
    if n == 0:
        raise ConfigurationError("cannot cluster zero points")
    distinct = np.unique(xy, axis=0).shape[0]
    if distinct < config.n_clusters:
        raise ConfigurationError(
            f"{config.n_clusters} clusters requested but only {distinct} distinct points"
        )

    order = np.lexsort((xy[:, 1], xy[:, 0]))
    sorted_xy = np.ascontiguousarray(xy[order])

    rng = np.random.default_rng(config.rng_seed)
    best: tuple[float, np.ndarray, np.ndarray, np.ndarray, int] | None = None
    history_buf = np.empty(config.max_iterations + 1)
    for _ in range(config.n_init):
        cent = _seed_centroids(sorted_xy, config.n_clusters, rng)
        labels, inertia, iters = _lloyd(
            sorted_xy, cent, config.convergence_tolerance, config.max_iterations, history_buf
        )
        if best is None or inertia < best[0]:
            best = (inertia, labels.copy(), cent.copy(), history_buf[: iters + 1].copy(), iters)

    assert best is not None
    inertia, labels_sorted, cent, history, iters = best
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = labels_sorted
    sizes = np.bincount(labels_sorted, minlength=config.n_clusters)
    return ClusteringResult(
        centroids=[(float(x), float(y)) for x, y in cent],
        assignments=[int(a) for a in assignments],
        inertia=float(inertia),
        iterations_run=int(iters),
        per_cluster_sizes=[int(s) for s in sizes],
        inertia_history=[float(h) for h in history],
        config=config,
    )


def rank_clusters_by_suspicion(result: ClusteringResult) -> list[int]:
    """Cluster indices ordered most-suspicious first.

    Descending centroid coordinate sum; ties broken by descending delta2
    coordinate, then by lower cluster index.
    """
    return sorted(
        range(len(result.centroids)),
        key=lambda c: (-(result.centroids[c][0] + result.centroids[c][1]), -result.centroids[c][1], c),
    )


def drilldown(
    points: Sequence[DeltaPoint],
    config: ClusteringConfig,
    selector: Callable[[ClusteringResult, list[DeltaPoint]], tuple[int, bool]],
) -> tuple[ClusteringResult, list[DeltaPoint]]:
    """Iterative re-clustering on the chosen cluster until the expert accepts.

    `selector` sees each round's result and points and returns
    (cluster_index, accept). The loop re-clusters the chosen cluster's points
    until accept is True or the chosen cluster is too small to split further
    (fewer than 2 x n_clusters points), returning the last clustering and the
    subset it ran on.
    """
    subset = list(points)
    while True:
        result = kmeans(subset, config)
        chosen_index, accept = selector(result, subset)
        if not 0 <= chosen_index < len(result.centroids):
            raise RequestError(f"no such cluster: {chosen_index}")
        if accept:
            return result, subset
        chosen = [p for p, a in zip(subset, result.assignments) if a == chosen_index]
        if len(chosen) < 2 * config.n_clusters:
            return result, subset
        subset = chosen


def cluster_summary(result: ClusteringResult) -> dict:
    """JSON-ready summary for the knowledge store."""
    return {
        "centroids": [[x, y] for x, y in result.centroids],
        "inertia": result.inertia,
        "iterations_run": result.iterations_run,
        "per_cluster_sizes": result.per_cluster_sizes,
        "suspicion_ranking": rank_clusters_by_suspicion(result),
        "config": {
            "n_clusters": result.config.n_clusters,
            "max_iterations": result.config.max_iterations,
            "convergence_tolerance": result.config.convergence_tolerance,
            "rng_seed": result.config.rng_seed,
            "n_init": result.config.n_init,
        },
    }


def write_assignments_csv(points: Sequence[DeltaPoint], result: ClusteringResult, destination) -> None:
    """Per-point cluster membership export: point_id,cluster."""
    import csv
    from pathlib import Path

    own = isinstance(destination, (str, Path))
    out = open(destination, "w", newline="") if own else destination
    try:
        writer = csv.writer(out)
        writer.writerow(["point_id", "cluster"])
        for p, a in zip(points, result.assignments):
            writer.writerow([p.point_id, a])
    finally:
        if own:
            out.close()
