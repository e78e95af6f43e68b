"""Intersections with subgroups and lifting through the projective quotient."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from ..errors import NotExactMode
from ..linalg import Monomial, UnitaryElement, projective_normal_form
from ..sets import DEFAULT_CAP, MatrixSet, certify_approximate, power_set, product_set


@dataclass
class IntersectionRecord:
    S: MatrixSet
    K: float
    K_S: int
    k: int
    power_hits: int

    @property
    def approx_ok(self) -> bool:
        return self.K_S <= 2 * self.K ** 3

    @property
    def growth_ok(self) -> bool:
        return self.power_hits <= self.K ** (self.k - 1) * len(self.S)

    @property
    def holds(self) -> bool:
        return self.approx_ok and self.growth_ok

    def to_json(self) -> dict:
        return {"K": self.K, "K_S": self.K_S, "k": self.k, "S_size": len(self.S),
                "power_hits": self.power_hits, "approx_ok": self.approx_ok,
                "growth_ok": self.growth_ok}


def intersect_with_subgroup(a: MatrixSet, k_const: float, h, k: int = 3,
                            powers: dict[int, MatrixSet] | None = None,
                            cap: int = DEFAULT_CAP) -> IntersectionRecord:
    """``S = A^2 ∩ H`` with its certified constant and the count ``|A^k ∩ H|``.

    ``h`` is anything with an ``intersect`` method (block subgroup or torus).
    ``powers`` may carry precomputed ``A^j`` keyed by ``j``.
    """
    powers = {} if powers is None else powers

    def pw(j: int) -> MatrixSet:
        if j not in powers:
            powers[j] = power_set(a, j, cap)
        return powers[j]

    s = h.intersect(pw(2)).canonical()
    k_s = certify_approximate(s).K_upper
    hits = len(h.intersect(pw(k)))
    return IntersectionRecord(s, k_const, k_s, k, hits)


def _proj_key(g: UnitaryElement) -> Monomial:
    if not isinstance(g, Monomial):
        raise NotExactMode("the projective quotient is computed on monomial phases")
    return projective_normal_form(g)


@dataclass
class FiberRecord:
    delta: Fraction
    a_size: int
    image_size: int
    image_in_x: int
    cube_hits: int
    max_fiber: int

    @property
    def holds(self) -> bool:
        # |A^3 ∩ pi^-1(X)| >= delta |A|, cleared of denominators
        return self.cube_hits * self.image_size >= self.image_in_x * self.a_size

    @property
    def chain_ok(self) -> bool:
        return (self.cube_hits >= self.max_fiber * self.image_in_x
                and self.a_size <= self.max_fiber * self.image_size)

    def to_json(self) -> dict:
        return {"delta": str(self.delta), "A": self.a_size, "image": self.image_size,
                "image_in_X": self.image_in_x, "cube_hits": self.cube_hits,
                "max_fiber": self.max_fiber, "holds": self.holds, "chain_ok": self.chain_ok}


def lift_fiber_bound(a: MatrixSet, x: Iterable[UnitaryElement],
                     cube: MatrixSet | None = None, cap: int = DEFAULT_CAP) -> FiberRecord:
    """Compare ``|A^3 ∩ pi^-1(X)|`` with ``delta |A|`` for ``pi`` the quotient by the centre.

    ``X`` is given by representatives; only their classes matter.
    """
    if not a.regime.exact:
        raise NotExactMode("lift_fiber_bound needs an exact set")
    targets = {_proj_key(g) for g in x}
    fibers: dict[Monomial, int] = {}
    for g in a:
        key = _proj_key(g)
        fibers[key] = fibers.get(key, 0) + 1
    image_in_x = sum(1 for key in fibers if key in targets)
    if cube is None:
        cube = product_set(product_set(a, a, cap), a, cap)
    hits = sum(1 for g in cube if _proj_key(g) in targets)
    return FiberRecord(Fraction(image_in_x, len(fibers)), len(a), len(fibers), image_in_x,
                       hits, max(fibers.values()))
