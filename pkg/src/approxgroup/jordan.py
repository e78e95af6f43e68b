"""Jordan's theorem for finite subgroups of U_n(C), run as an algorithm.

The recursion follows the classical geometric argument: elements within
``1/(4 sqrt n)`` of the identity commute with the closest non-scalar one, so
either the near-identity part is central (scalar case) or some non-scalar
element has a large centralizer.  The centralizer splits into unitary blocks
of smaller rank, and the induction runs blockwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from .errors import (CapExceeded, DepthCapExceeded, InvalidComposition, NotClosed,
                     ScalarInput)
from .linalg import (EPS_COMM, EPS_SPEC, Dense, Monomial, UnitaryElement, as_matrix,
                     canonical_key, hs_distance, is_scalar_multiple_of_identity,
                     spectral_decompose)
from .sets import (DEFAULT_EPS_EQ, MatrixSet, contains_identity, identity_element,
                   is_symmetric, product_set, tolerant)

DEFAULT_GROUP_CAP = 100_000
BRUTEFORCE_BELOW = 64
BRUTEFORCE_MAX_ORDER = 200


@dataclass
class FiniteGroupSet:
    base: MatrixSet
    closed: bool

    @property
    def order(self) -> int:
        return len(self.base)

    def __len__(self) -> int:
        return len(self.base)


@dataclass
class CentralizerWitness:
    """A non-scalar ``gamma`` together with elements verified to commute with it.

    ``power`` records which product set the commuting elements come from
    (``A^power``).
    """

    gamma: UnitaryElement
    rho: float
    commuting: MatrixSet
    blocks: tuple[int, ...]
    method: str = ""
    power: int = 2
    fiber_size: int | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)


@dataclass
class ScalarCase:
    scalars: MatrixSet
    index: int
    near_identity: MatrixSet


def group_closure(generators: MatrixSet, cap: int = DEFAULT_GROUP_CAP) -> FiniteGroupSet:
    """Breadth-first closure of ``generators`` under right multiplication."""
    gens = list(generators.canonical())
    out = MatrixSet._builder(generators.dim, generators.regime)
    frontier = [identity_element(generators.dim, generators.regime)]
    out._add(frontier[0])
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                h = g @ s
                if out._add(h):
                    if len(out) > cap:
                        raise CapExceeded(len(out), cap)
                    nxt.append(h)
        frontier = nxt
    return FiniteGroupSet(out._freeze().canonical(), True)


def as_group(s: MatrixSet, verify: bool = True) -> FiniteGroupSet:
    """Wrap a set as a group, checking closure (``S S = S``, symmetric, contains id)."""
    if not verify:
        return FiniteGroupSet(s, True)
    closed = contains_identity(s) and is_symmetric(s)
    if closed:
        try:
            closed = len(product_set(s, s, cap=len(s))) == len(s)
        except CapExceeded:
            closed = False
    return FiniteGroupSet(s, closed)


def _require_closed(g: FiniteGroupSet) -> None:
    if not g.closed:
        raise NotClosed("input set is not a closed group")


def near_identity_subset(a: MatrixSet) -> MatrixSet:
    """Elements within Hilbert-Schmidt distance ``1/(4 sqrt n)`` of the identity."""
    radius = 1.0 / (4.0 * math.sqrt(a.dim))
    ident = np.eye(a.dim)
    return a.filter(lambda g: hs_distance(g, ident) <= radius)


def centralizer_in(s: MatrixSet, gamma: UnitaryElement, eps_comm: float = EPS_COMM) -> MatrixSet:
    if isinstance(gamma, Monomial) and s.regime.exact:
        return s.filter(lambda g: g @ gamma == gamma @ g)
    gm = as_matrix(gamma)
    st = s.stack()
    if len(s) == 0:
        return s
    diff = st @ gm - gm @ st
    norms = np.sqrt(np.sum(np.abs(diff) ** 2, axis=(1, 2)))
    return MatrixSet(s.dim, s.regime, [g for g, ok in zip(s, norms <= eps_comm) if ok])


def is_abelian(s: MatrixSet, eps_comm: float = EPS_COMM) -> bool:
    """Every pair of elements commutes (exactly for monomial sets)."""
    elems = list(s)
    if s.regime.exact:
        for i, g in enumerate(elems):
            for h in elems[i + 1:]:
                if g @ h != h @ g:
                    return False
        return True
    st = s.stack()
    for i in range(len(elems)):
        d = st[i] @ st[i + 1:] - st[i + 1:] @ st[i]
        if d.size and np.sqrt(np.sum(np.abs(d) ** 2, axis=(1, 2))).max() > eps_comm:
            return False
    return True


def find_large_centralizer_exact(group: FiniteGroupSet, eps_scalar: float = EPS_SPEC,
                                 eps_spec: float = EPS_SPEC) -> ScalarCase | CentralizerWitness:
    """Lemma-2.1 dichotomy on a finite group.

    If every near-identity element is scalar, returns the scalar subgroup and
    its index.  Otherwise ``gamma`` is the non-scalar near-identity element
    closest to the identity and its centralizer contains the whole
    near-identity subset.
    """
    _require_closed(group)
    g = group.base
    near = near_identity_subset(g)
    ident = np.eye(g.dim)
    nonscalar = [x for x in near if is_scalar_multiple_of_identity(x, eps_scalar) is None]
    if not nonscalar:
        scalars = g.filter(lambda x: is_scalar_multiple_of_identity(x, eps_scalar) is not None)
        return ScalarCase(scalars, len(g) // len(scalars), near)
    gamma = min(nonscalar, key=lambda x: (hs_distance(x, ident), canonical_key(x)))
    cent = centralizer_in(g, gamma)
    missing = [x for x in near if cent.find(x) is None]
    if missing:
        raise AssertionError("near-identity element outside the centralizer of gamma")
    blocks = tuple(spectral_decompose(gamma, eps_spec).multiplicities)
    return CentralizerWitness(gamma, hs_distance(gamma, ident), cent, blocks,
                              method="near-identity-min")


def centralizer_block_structure(gamma: UnitaryElement, eps_spec: float = EPS_SPEC):
    """Eigenbasis ``Q`` of ``gamma`` and the multiplicities of its eigenvalue clusters."""
    dec = spectral_decompose(gamma, eps_spec)
    if len(dec.clusters) < 2:
        raise ScalarInput("gamma is a scalar; its centralizer is the whole group")
    return dec.eigenvectors, dec.multiplicities


def project_block(q: np.ndarray, idx: Sequence[int], st: np.ndarray) -> np.ndarray:
    """``(Q* g Q)[idx, idx]`` for every matrix in a stack."""
    conj = q.conj().T @ st @ q
    return conj[:, idx][:, :, idx]


def check_cubic_inequality(n: int, parts: Sequence[int]) -> bool:
    """``n^3 > sum n_i^3 + n^2`` for a composition of ``n`` into parts smaller than ``n``."""
    parts = [int(p) for p in parts]
    if n < 2 or sum(parts) != n or any(p < 1 or p >= n for p in parts):
        raise InvalidComposition(f"{parts} is not a proper composition of {n}")
    return n ** 3 > sum(p ** 3 for p in parts) + n ** 2


def proper_compositions(n: int) -> Iterator[tuple[int, ...]]:
    """All ordered compositions of ``n`` with at least two parts."""
    for cuts in range(1, n):
        for pos in itertools.combinations(range(1, n), cuts):
            edges = (0, *pos, n)
            yield tuple(edges[i + 1] - edges[i] for i in range(len(edges) - 1))


# -- brute-force oracle ----------------------------------------------------------

def _cayley_table(elems: list, s: MatrixSet) -> np.ndarray:
    n = len(elems)
    tab = np.empty((n, n), dtype=np.int64)
    for i, g in enumerate(elems):
        for j, h in enumerate(elems):
            k = s.find(g @ h)
            if k is None:
                raise NotClosed("product left the set")
            tab[i, j] = k
    return tab


def max_abelian_subgroup_bruteforce(group: FiniteGroupSet) -> MatrixSet:
    """Largest abelian subgroup, by exhaustive search over abelian subgroups.

    Depth-first search extends an abelian subgroup by one commuting element
    at a time, memoizing visited subgroups.  Limited to order 200.
    """
    _require_closed(group)
    s = group.base
    if len(s) > BRUTEFORCE_MAX_ORDER:
        raise ValueError(f"brute force limited to order {BRUTEFORCE_MAX_ORDER}")
    elems = list(s)
    tab = _cayley_table(elems, s)
    commute = tab == tab.T
    e = s.find(s.identity())

    def extend(h: frozenset, g: int) -> frozenset:
        out = set(h)
        power = g
        while power not in h:
            out.update(int(tab[x, power]) for x in h)
            power = int(tab[power, g])
        return frozenset(out)

    seen: set[frozenset] = set()
    best = frozenset([e])
    stack = [best]
    while stack:
        h = stack.pop()
        if h in seen:
            continue
        seen.add(h)
        if len(h) > len(best) or (len(h) == len(best) and min(h) < min(best)):
            best = h
        hl = list(h)
        cand = np.all(commute[:, hl], axis=1)
        for g in np.nonzero(cand)[0]:
            if int(g) not in h:
                stack.append(extend(h, int(g)))
    return MatrixSet(s.dim, s.regime, [elems[i] for i in sorted(best)]).canonical()


def bruteforce_abelian_index(group: FiniteGroupSet) -> int:
    return len(group) // len(max_abelian_subgroup_bruteforce(group))


# -- the induction ---------------------------------------------------------------

@dataclass
class JordanResult:
    H: FiniteGroupSet
    index: int
    trace: dict


def _element_json(g: UnitaryElement) -> Any:
    from .serialization import element_to_json
    return element_to_json(g)


def _best_centralizer_element(g: MatrixSet, eps_scalar: float) -> UnitaryElement | None:
    best = None
    for x in g:
        if is_scalar_multiple_of_identity(x, eps_scalar) is not None:
            continue
        size = len(centralizer_in(g, x))
        key = (-size, canonical_key(x))
        if best is None or key < best[0]:
            best = (key, x)
    return None if best is None else best[1]


def jordan_abelian_subgroup(group: FiniteGroupSet, depth_cap: int | None = None,
                            bruteforce_below: int = BRUTEFORCE_BELOW,
                            eps_eq: float = DEFAULT_EPS_EQ, eps_spec: float = EPS_SPEC,
                            eps_comm: float = EPS_COMM) -> JordanResult:
    """Abelian subgroup of a finite unitary group by induction on the rank.

    Case 1 (all near-identity elements scalar) offers the scalar subgroup.
    Since a small group rarely has non-scalar elements near the identity, the
    scalar case also tries the non-scalar element with the largest
    centralizer, which is sound for any non-scalar choice, and keeps the
    better index.  Case 2 passes to the centralizer of the closest non-scalar
    near-identity element.  Centralizers are projected onto the eigenblocks of
    ``gamma``, each projection is handled recursively, and the abelian pieces
    are pulled back.  Groups below ``bruteforce_below`` elements are solved by
    exhaustive search.
    """
    _require_closed(group)
    cap = group.base.dim if depth_cap is None else depth_cap

    def via_centralizer(g: MatrixSet, gamma: UnitaryElement, depth: int):
        z = centralizer_in(g, gamma, eps_comm)
        q, mult = centralizer_block_structure(gamma, eps_spec)
        offsets = np.cumsum([0, *mult])
        st = z.stack()
        keep = np.ones(len(z), dtype=bool)
        children = []
        for i, m in enumerate(mult):
            idx = list(range(offsets[i], offsets[i + 1]))
            proj = project_block(q, idx, st)
            if m == 1:
                children.append({"dim": 1, "order": None, "case": "rank-one"})
                continue
            pset = MatrixSet(m, tolerant(eps_eq), [Dense(p, check=False) for p in proj])
            sub_h, sub_trace = rec(FiniteGroupSet(pset.canonical(), True), depth + 1)
            children.append(sub_trace)
            keep &= np.array([sub_h.base.find(Dense(p, check=False)) is not None for p in proj],
                             dtype=bool)
        h = MatrixSet(g.dim, g.regime, [x for x, k in zip(z, keep) if k]).canonical()
        node = {"gamma": _element_json(gamma), "blocks": list(mult),
                "centralizer_order": len(z), "children": children}
        return h, node

    def rec(grp: FiniteGroupSet, depth: int):
        g = grp.base
        node: dict[str, Any] = {"dim": g.dim, "order": len(g), "depth": depth}
        if is_abelian(g, eps_comm):
            node.update(case="abelian", index=1)
            return grp, node
        if depth >= cap:
            raise DepthCapExceeded(f"recursion depth {depth} reached the cap {cap}")
        if len(g) < bruteforce_below:
            h = max_abelian_subgroup_bruteforce(grp)
            node.update(case="bruteforce", index=len(g) // len(h))
            return FiniteGroupSet(h, True), node
        res = find_large_centralizer_exact(grp, eps_spec, eps_spec)
        options = []
        if isinstance(res, ScalarCase):
            options.append((res.scalars, {"case": "scalar", "near_identity": len(res.near_identity)}))
            gamma = _best_centralizer_element(g, eps_spec)
            if gamma is not None:
                h, sub = via_centralizer(g, gamma, depth)
                sub.update(case="scalar-then-max-centralizer")
                options.append((h, sub))
        else:
            h, sub = via_centralizer(g, res.gamma, depth)
            sub.update(case="near-identity-centralizer", rho=res.rho)
            options.append((h, sub))
        h, info = min(options, key=lambda o: len(g) // len(o[0]))
        node.update(info)
        node["index"] = len(g) // len(h)
        node["alternatives"] = [{"case": o[1]["case"], "index": len(g) // len(o[0])} for o in options]
        return FiniteGroupSet(h, True), node

    h, trace = rec(group, 0)
    if len(group) % len(h):
        raise AssertionError("abelian piece order does not divide the group order")
    if not is_abelian(h.base, eps_comm):
        raise AssertionError("returned subgroup is not abelian")
    return JordanResult(h, len(group) // len(h), trace)
