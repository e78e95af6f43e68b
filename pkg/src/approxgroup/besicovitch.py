"""The weak Besicovitch property for finite families of closed balls.

A family of closed balls with a common point has the property when some
centre lies in the *open* ball around another centre.  Matrix-space
configurations are flattened to ``R^(2 n^2)``, where the Euclidean metric is
the Hilbert-Schmidt metric.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

OBJECTIVE_TOL = 1e-9
MAX_ITER = 10_000
STRICT_SLACK = 1e-12
MAX_TRIAL_DIM = 4


@dataclass(frozen=True, eq=False)
class BallConfiguration:
    centers: np.ndarray
    radii: np.ndarray
    space: str = "euclidean"
    matrix_dim: int | None = None

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if len(c) != len(r):
            raise ValueError("centers and radii differ in number")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError("radii must be finite and nonnegative")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @classmethod
    def from_matrices(cls, mats: Sequence, radii: Sequence[float]) -> "BallConfiguration":
        flat = [np.asarray(m, dtype=complex).reshape(-1).view(float) for m in mats]
        n = np.asarray(mats[0]).shape[0]
        return cls(np.array(flat), np.asarray(radii), "matrix", n)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return len(self.radii)

    def transformed(self, rot: np.ndarray, shift: np.ndarray, scale: float = 1.0) -> "BallConfiguration":
        return BallConfiguration(scale * self.centers @ rot.T + shift, scale * self.radii,
                                 self.space, self.matrix_dim)

    def with_ball(self, center: np.ndarray, radius: float) -> "BallConfiguration":
        return BallConfiguration(np.vstack([self.centers, center]), np.append(self.radii, radius),
                                 self.space, self.matrix_dim)

    def to_json(self) -> dict:
        return {"space": self.space, "matrix_dim": self.matrix_dim,
                "centers": self.centers.tolist(), "radii": self.radii.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "BallConfiguration":
        return cls(np.array(obj["centers"], dtype=float), np.array(obj["radii"], dtype=float),
                   obj.get("space", "euclidean"), obj.get("matrix_dim"))


def _objective(cfg: BallConfiguration, p: np.ndarray) -> tuple[float, int]:
    d = np.linalg.norm(cfg.centers - p, axis=1) - cfg.radii
    i = int(np.argmax(d))
    return float(d[i]), i


def common_point(cfg: BallConfiguration, hint: np.ndarray | None = None,
                 max_iter: int = MAX_ITER) -> np.ndarray | None:
    """A point of every closed ball, or None if the search fails.

    Minimizes ``max_i (|p - x_i| - r_i)`` by subgradient steps from the
    centroid (Polyak steps with target value zero, i.e. projection onto the
    most violated ball).  A returned point is certified; None is only heuristic.
    """
    if len(cfg) == 0:
        return np.zeros(cfg.dim)
    starts = [] if hint is None else [np.asarray(hint, dtype=float)]
    starts.append(cfg.centers.mean(axis=0))
    for p in starts:
        if _objective(cfg, p)[0] <= OBJECTIVE_TOL:
            return p
    p = starts[-1].copy()
    best, best_val = p.copy(), _objective(cfg, p)[0]
    scale = max(float(np.ptp(cfg.centers, axis=0).max()) if len(cfg) > 1 else 0.0,
                float(cfg.radii.max()), 1e-12)
    for t in range(max_iter):
        val, i = _objective(cfg, p)
        if val < best_val:
            best, best_val = p.copy(), val
        if best_val <= OBJECTIVE_TOL:
            return best
        g = p - cfg.centers[i]
        norm = np.linalg.norm(g)
        if norm == 0.0:
            break
        # project onto the most violated ball, overshooting slightly inward
        step = val + OBJECTIVE_TOL * 0.5 * min(1.0, scale)
        p = p - min(step, norm) * g / norm
    return best if best_val <= OBJECTIVE_TOL else None


@dataclass(frozen=True)
class PropertyHolds:
    i: int
    j: int
    kind: str = "PropertyHolds"


@dataclass(frozen=True, eq=False)
class CounterWitness:
    point: np.ndarray
    kind: str = "CounterWitness"


@dataclass(frozen=True)
class NoCommonPoint:
    heuristic: bool = True
    kind: str = "NoCommonPoint"


Verdict = PropertyHolds | CounterWitness | NoCommonPoint


def open_ball_pair(cfg: BallConfiguration) -> tuple[int, int] | None:
    """First ``(i, j)``, ``i != j``, with ``x_i`` strictly inside the ball around ``x_j``."""
    c, r = cfg.centers, cfg.radii
    d = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(-1))
    inside = d < (r - STRICT_SLACK * np.maximum(1.0, r))[None, :]
    np.fill_diagonal(inside, False)
    hits = np.argwhere(inside)
    if len(hits) == 0:
        return None
    return int(hits[0][0]), int(hits[0][1])


def check_weak_besicovitch(cfg: BallConfiguration, hint: np.ndarray | None = None) -> Verdict:
    p = common_point(cfg, hint)
    if p is None:
        return NoCommonPoint()
    pair = open_ball_pair(cfg)
    if pair is None:
        return CounterWitness(p)
    return PropertyHolds(*pair)


def hexagon_witness() -> BallConfiguration:
    """Unit balls at the sixth roots of unity and at the origin."""
    ang = 2 * np.pi * np.arange(1, 7) / 6
    pts = np.column_stack([np.cos(ang), np.sin(ang)])
    return BallConfiguration(np.vstack([pts, [0.0, 0.0]]), np.ones(7))


def min_angular_gap(points: np.ndarray, center: np.ndarray | None = None) -> float:
    """Smallest angle between consecutive directions from ``center`` to ``points`` (planar)."""
    pts = np.asarray(points, dtype=float)
    if center is not None:
        pts = pts - center
    ang = np.sort(np.arctan2(pts[:, 1], pts[:, 0]))
    gaps = np.diff(np.append(ang, ang[0] + 2 * np.pi))
    return float(gaps.min())


def matrix_space_bound(n: int) -> int:
    """``3^(2 n^2) + 1``: the Besicovitch bound for ``Mat_n(C)`` as ``R^(2 n^2)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return 3 ** (2 * n * n) + 1


def euclidean_bound(d: int) -> int:
    return 3 ** d + 1


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("APPROXGROUP_THREADS", "1")))
    except ValueError:
        return 1


def sample_shared_point_config(d: int, k: int, rng: np.random.Generator) -> tuple[BallConfiguration, np.ndarray]:
    """``k`` balls in ``R^d`` that all contain a random point ``p``.

    Centre distances to ``p`` are log-uniform over six decades; radii are the
    distance plus a slack that is zero half of the time.
    """
    p = rng.standard_normal(d)
    dirs = rng.standard_normal((k, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dist = 10.0 ** rng.uniform(-3, 3, size=k)
    centers = p + dirs * dist[:, None]
    slack = np.where(rng.random(k) < 0.5, 0.0, rng.exponential(0.1, size=k) * dist)
    radii = np.linalg.norm(centers - p, axis=1) + slack
    return BallConfiguration(centers, radii), p


def _trial(d: int, seed: int, t: int) -> dict:
    rng = np.random.default_rng([seed, t])
    cfg, p = sample_shared_point_config(d, euclidean_bound(d), rng)
    v = check_weak_besicovitch(cfg, hint=p)
    row = {"trial": t, "verdict": v.kind, "i": None, "j": None}
    if isinstance(v, PropertyHolds):
        row.update(i=v.i, j=v.j)
    return row


def upper_bound_property_test(d: int, trials: int, seed: int = 0) -> dict:
    """Random ``3^d + 1``-ball families sharing a point; every one must have the property."""
    if not 1 <= d <= MAX_TRIAL_DIM:
        raise ValueError(f"d must lie in [1, {MAX_TRIAL_DIM}]")
    if trials < 1:
        raise ValueError("trials must be positive")
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda t: _trial(d, seed, t), range(trials)))
    else:
        rows = [_trial(d, seed, t) for t in range(trials)]
    bad = [r for r in rows if r["verdict"] != "PropertyHolds"]
    return {"d": d, "balls": euclidean_bound(d), "trials": trials, "seed": seed,
            "violations": len(bad), "violating_trials": [r["trial"] for r in bad], "rows": rows}
