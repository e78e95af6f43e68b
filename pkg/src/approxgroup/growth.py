"""Word-ball growth: profiles, good radii and growth-exponent fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, DegenerateProfile, NotSymmetric
from .sets import DEFAULT_CAP, MatrixSet, contains_identity, is_symmetric, min_pairwise_distance

TRIAL_DS = tuple(range(1, 9))
RELIABILITY_FACTOR = 100.0


def _require_generators(gens: MatrixSet) -> None:
    if not is_symmetric(gens) or not contains_identity(gens):
        raise NotSymmetric("generators must be symmetric and contain the identity")


def ball_sizes(gens: MatrixSet, radius: int, cap: int = DEFAULT_CAP,
               track_distance: bool = False) -> tuple[list[int], list[float], MatrixSet, bool]:
    """Sizes of ``Σ^0 .. Σ^radius`` by breadth-first search.

    Returns the sizes of the complete balls, their minimum pairwise
    distances (when requested), the ball reached and whether the cap stopped
    the search part way through a radius.
    """
    _require_generators(gens)
    gl = list(gens.canonical())
    ball = MatrixSet._builder(gens.dim, gens.regime)
    ball._add(gens.identity())
    frontier = [gens.identity()]
    sizes = [1]
    dists = [math.inf]
    for _ in range(radius):
        nxt = []
        for g in frontier:
            for s in gl:
                h = g @ s
                if ball._add(h):
                    nxt.append(h)
                    if len(ball) > cap:
                        return sizes, dists, ball._freeze(), True
        frontier = nxt
        sizes.append(len(ball))
        if track_distance:
            ball._stack = None
            dists.append(min_pairwise_distance(ball))
        else:
            dists.append(math.inf)
    return sizes, dists, ball._freeze(), False


def word_ball(gens: MatrixSet, r: int, cap: int = DEFAULT_CAP) -> MatrixSet:
    """``Σ^r``; raises :class:`CapExceeded` beyond ``cap`` elements."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    sizes, _, ball, hit = ball_sizes(gens, r, cap)
    if hit:
        raise CapExceeded(sizes[-1], cap)
    return ball.canonical()


@dataclass
class GrowthProfile:
    radii: list[int]
    sizes: list[int]
    ratios: dict[int, float]
    good_flags: dict[int, dict[int, bool]]
    min_distances: list[float]
    reliable: list[bool]
    truncated: bool = False
    eps_eq: float | None = None
    extra: dict = field(default_factory=dict)

    def size(self, r: int) -> int:
        return self.sizes[self.radii.index(r)]

    def csv_rows(self) -> list[dict]:
        rows = []
        for r, s, md, ok in zip(self.radii, self.sizes, self.min_distances, self.reliable):
            row = {"r": r, "size": s, "ratio7": self.ratios.get(r, "")}
            for d in TRIAL_DS:
                row[f"good_d{d}"] = self.good_flags.get(r, {}).get(d, "")
            row["min_pairwise_distance"] = "" if math.isinf(md) else md
            row["reliable"] = ok
            rows.append(row)
        return rows


def growth_profile(gens: MatrixSet, R: int, cap: int = DEFAULT_CAP,
                   with_ratios: bool = True) -> GrowthProfile:
    """Ball sizes for ``r = 1..R`` and the good-radius test ``|Σ^7r| <= 8^d |Σ^r|``.

    Ratios need balls up to radius ``7R``; radii whose ``7r`` ball exceeds
    the cap get no ratio.  In a tolerant regime a radius is unreliable once
    the minimum pairwise distance falls below ``100 eps_eq``.
    """
    exact = gens.regime.exact
    reach = 7 * R if with_ratios else R
    sizes, dists, _, hit = ball_sizes(gens, reach, cap, track_distance=not exact)
    top = len(sizes) - 1
    radii = list(range(1, min(R, top) + 1))
    eps = None if exact else gens.regime.eps_eq
    reliable_all = [exact or d > RELIABILITY_FACTOR * eps for d in dists]
    ratios, good = {}, {}
    for r in radii:
        if with_ratios and 7 * r <= top:
            ratios[r] = sizes[7 * r] / sizes[r]
            good[r] = {d: sizes[7 * r] <= 8 ** d * sizes[r] for d in TRIAL_DS}
    return GrowthProfile(radii, [sizes[r] for r in radii], ratios, good,
                         [dists[r] for r in radii], [reliable_all[r] for r in radii],
                         truncated=hit or top < reach, eps_eq=eps,
                         extra={"all_sizes": sizes, "reach": top})


def growth_lower_exponent(profile: GrowthProfile) -> tuple[float, float]:
    """Least-squares slope of ``log log |Σ^r|`` against ``log r``, and the residual norm."""
    pts = [(r, s) for r, s in zip(profile.radii, profile.sizes) if s >= 2]
    if len(profile.radii) < 5 or len(set(profile.sizes)) == 1:
        raise DegenerateProfile("need at least five radii with growing sizes")
    if len(pts) < 5:
        raise DegenerateProfile("too few radii with size at least 2")
    x = np.log([r for r, _ in pts])
    y = np.log(np.log([s for _, s in pts]))
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    return float(coef[0]), float(math.sqrt(res[0])) if len(res) else 0.0


def detect_virtually_abelian(gens: MatrixSet, r: int, max_k: int = 6,
                             strategy: str = "auto", cap: int = DEFAULT_CAP,
                             component_index: int = 1) -> dict:
    """Run the control pipeline on ``Σ^3r`` and measure how ``Σ^k`` spreads over cosets of ``H``.

    ``component_index`` is the caller's assumption ``i`` that ``Σ^(2i-1)`` already
    generates the part of the group in the identity component; it cannot be
    read off a finite ball, so it is taken on trust and echoed in the result.
    With ``i > 1`` the analysis uses ``Σ^(2i-1)`` as its generating set.
    """
    from .approx.pipeline import densest_right_coset, diagonalizable_control

    if component_index < 1:
        raise ValueError("component_index must be at least 1")
    if component_index > 1:
        gens = word_ball(gens, 2 * component_index - 1, cap)
    prof = growth_profile(gens, r, cap)
    flags = prof.good_flags.get(r)
    good_ds = [d for d, ok in (flags or {}).items() if ok]
    if not good_ds:
        raise ValueError(f"radius {r} is not good for any trial exponent")
    a = word_ball(gens, 3 * r, cap)
    report = diagonalizable_control(a, strategy=strategy, cap=cap)
    h = report.H
    six = h.intersect(word_ball(gens, 6 * r, cap))
    base = prof.sizes[prof.radii.index(r)]
    cosets = []
    ball = gens.canonical()
    for k in range(1, max_k + 1):
        if k > 1:
            ball = word_ball(gens, k, cap)
        cosets.append(densest_right_coset(ball, h)[2])
    return {"radius": r, "good_d": good_ds, "A_size": len(a), "K_upper": report.K_upper,
            "B_size": len(report.B), "abelian_piece": h.describe(),
            "density_6r": len(six) / base, "coset_counts": cosets,
            "control_constant": report.measured.get("control_constant"),
            "saturates": len(set(cosets[-2:])) == 1, "assumed_component_index": component_index}
