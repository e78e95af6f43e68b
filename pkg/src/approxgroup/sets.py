"""Finite sets of unitary elements: deduplication, product sets and certificates.

A :class:`MatrixSet` identifies elements under an :class:`EqualityRegime`:
``exact`` sets hold :class:`~approxgroup.linalg.Monomial` elements and use
hashing; ``tolerant`` sets hold :class:`~approxgroup.linalg.Dense` elements
and treat two matrices as equal when their Hilbert-Schmidt distance is at
most ``eps_eq`` (first match in insertion order wins).

Every set-valued operation returns its result in canonical order, so
certificates computed downstream are reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import (CapExceeded, DimensionMismatch, KindMismatch, MissingIdentity,
                     NotSymmetric, RegimeMismatch)
from .linalg import Dense, Monomial, UnitaryElement, as_matrix, canonical_key, hs_distance

DEFAULT_CAP = 2_000_000
DEFAULT_EPS_EQ = 1e-6
_PROJECTIONS = 3


@dataclass(frozen=True)
class EqualityRegime:
    mode: str = "exact"
    eps_eq: float | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "tolerant"):
            raise ValueError(f"unknown regime mode {self.mode!r}")
        if self.mode == "tolerant" and not (self.eps_eq and self.eps_eq > 0):
            raise ValueError("tolerant regime needs eps_eq > 0")

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    @property
    def kind(self) -> type:
        return Monomial if self.exact else Dense


EXACT = EqualityRegime("exact")


def tolerant(eps_eq: float = DEFAULT_EPS_EQ) -> EqualityRegime:
    return EqualityRegime("tolerant", float(eps_eq))


class _ExactIndex:
    def __init__(self):
        self._d: dict[Monomial, int] = {}

    def find(self, g: Monomial) -> int | None:
        return self._d.get(g)

    def add(self, g: Monomial, idx: int) -> None:
        self._d[g] = idx


class _TolerantIndex:
    """Spatial hash on a few random projections of the flattened matrix.

    A projection onto a unit vector is 1-Lipschitz for the Hilbert-Schmidt
    distance, so two matrices within ``eps`` of each other have projections
    within ``eps``.  Cells are ``4 * eps`` wide and a lookup probes the
    neighbouring cell only along coordinates where the query sits within
    ``eps`` of a cell wall; candidates are then checked by true distance.
    """

    def __init__(self, dim: int, eps: float):
        rng = np.random.default_rng(7919 + dim)
        p = rng.standard_normal((_PROJECTIONS, 2 * dim * dim))
        self._proj = p / np.linalg.norm(p, axis=1, keepdims=True)
        self._eps = eps
        self._width = 4.0 * eps
        self._cells: dict[tuple, list[int]] = {}
        self._mats: list[np.ndarray] = []

    def _coords(self, m: np.ndarray) -> np.ndarray:
        return self._proj @ m.reshape(-1).view(float) / self._width

    def _probe_cells(self, c: np.ndarray) -> Iterator[tuple]:
        base = np.floor(c)
        frac = c - base
        slack = self._eps / self._width
        opts = []
        for b, f in zip(base.astype(int).tolist(), frac.tolist()):
            o = [b]
            if f <= slack:
                o.append(b - 1)
            if f >= 1.0 - slack:
                o.append(b + 1)
            opts.append(o)
        return itertools.product(*opts)

    def find(self, g) -> int | None:
        m = as_matrix(g)
        best = None
        for cell in self._probe_cells(self._coords(m)):
            for idx in self._cells.get(cell, ()):
                if (best is None or idx < best) and hs_distance(m, self._mats[idx]) <= self._eps:
                    best = idx
        return best

    def add(self, g, idx: int) -> None:
        m = as_matrix(g)
        self._mats.append(m)
        cell = tuple(np.floor(self._coords(m)).astype(int).tolist())
        self._cells.setdefault(cell, []).append(idx)


class MatrixSet:
    """A deduplicated finite set of unitary elements of one dimension and kind."""

    def __init__(self, dim: int, regime: EqualityRegime = EXACT,
                 elements: Iterable[UnitaryElement] = ()):
        self.dim = int(dim)
        self.regime = regime
        self._elements: list[UnitaryElement] = []
        self._index = _ExactIndex() if regime.exact else _TolerantIndex(self.dim, regime.eps_eq)
        self._stack: np.ndarray | None = None
        self._canon = False
        self._frozen = False
        for g in elements:
            self._add(g)
        self._frozen = True

    # construction helpers (only used before the set is handed out)
    def _check(self, g: UnitaryElement) -> None:
        if not isinstance(g, self.regime.kind):
            raise KindMismatch(f"{type(g).__name__} element in a {self.regime.mode} set")
        if g.dim != self.dim:
            raise DimensionMismatch(f"element of dim {g.dim} in a set of dim {self.dim}")

    def _add(self, g: UnitaryElement) -> bool:
        if self._frozen:
            raise RuntimeError("MatrixSet is immutable")
        self._check(g)
        if self._index.find(g) is not None:
            return False
        self._index.add(g, len(self._elements))
        self._elements.append(g)
        return True

    @classmethod
    def _builder(cls, dim: int, regime: EqualityRegime) -> "MatrixSet":
        s = cls(dim, regime)
        s._frozen = False
        return s

    def _freeze(self) -> "MatrixSet":
        self._frozen = True
        return self

    # queries
    @property
    def elements(self) -> tuple[UnitaryElement, ...]:
        return tuple(self._elements)

    def __len__(self) -> int:
        return len(self._elements)

    def __iter__(self) -> Iterator[UnitaryElement]:
        return iter(self._elements)

    def __getitem__(self, i: int) -> UnitaryElement:
        return self._elements[i]

    def find(self, g: UnitaryElement) -> int | None:
        if not isinstance(g, self.regime.kind) or g.dim != self.dim:
            return None
        return self._index.find(g)

    def __contains__(self, g) -> bool:
        return self.find(g) is not None

    def __repr__(self) -> str:
        return f"MatrixSet(dim={self.dim}, mode={self.regime.mode}, size={len(self)})"

    def identity(self) -> UnitaryElement:
        return identity_element(self.dim, self.regime)

    def stack(self) -> np.ndarray:
        """All elements as a read-only ``(N, n, n)`` complex array."""
        if self._stack is None:
            if self._elements:
                st = np.stack([as_matrix(g) for g in self._elements])
            else:
                st = np.zeros((0, self.dim, self.dim), dtype=complex)
            st.setflags(write=False)
            self._stack = st
        return self._stack

    def canonical(self) -> "MatrixSet":
        if self._canon:
            return self
        order = sorted(range(len(self)), key=lambda i: canonical_key(self._elements[i]))
        if order == list(range(len(self))):
            self._canon = True
            return self
        out = MatrixSet(self.dim, self.regime, [self._elements[i] for i in order])
        out._canon = True
        return out

    def filter(self, pred: Callable[[UnitaryElement], bool]) -> "MatrixSet":
        return MatrixSet(self.dim, self.regime, [g for g in self._elements if pred(g)])

    def same_elements(self, other: "MatrixSet") -> bool:
        return len(self) == len(other) and all(other.find(g) is not None for g in self)

    def issubset(self, other: "MatrixSet") -> bool:
        return all(other.find(g) is not None for g in self)


def identity_element(dim: int, regime: EqualityRegime) -> UnitaryElement:
    return Monomial.identity(dim) if regime.exact else Dense.identity(dim)


def _compatible(s1: MatrixSet, s2: MatrixSet) -> None:
    if s1.regime != s2.regime:
        raise RegimeMismatch(f"{s1.regime} vs {s2.regime}")
    if s1.dim != s2.dim:
        raise DimensionMismatch(f"dims {s1.dim} and {s2.dim} differ")


def from_elements(elements: Sequence[UnitaryElement], regime: EqualityRegime | None = None,
                  dim: int | None = None) -> MatrixSet:
    """Canonical deduplicated set; the regime defaults to the elements' kind."""
    elements = list(elements)
    if dim is None:
        if not elements:
            raise ValueError("dim is required for an empty set")
        dim = elements[0].dim
    if regime is None:
        regime = EXACT if (not elements or isinstance(elements[0], Monomial)) else tolerant()
    return MatrixSet(dim, regime, elements).canonical()


def to_tolerant(s: MatrixSet, eps_eq: float = DEFAULT_EPS_EQ) -> MatrixSet:
    """Dense rendering of a set under a tolerant regime (element order preserved)."""
    return MatrixSet(s.dim, tolerant(eps_eq),
                     [g if isinstance(g, Dense) else Dense(g.to_dense(), check=False) for g in s])


def union(*sets: MatrixSet) -> MatrixSet:
    for s in sets[1:]:
        _compatible(sets[0], s)
    return MatrixSet(sets[0].dim, sets[0].regime,
                     [g for s in sets for g in s]).canonical()


def intersection(s: MatrixSet, other: MatrixSet) -> MatrixSet:
    _compatible(s, other)
    return s.filter(lambda g: g in other)


def dedup_insert(s: MatrixSet, g: UnitaryElement) -> MatrixSet:
    """``s`` itself if ``g`` is already present (under the regime), else ``s`` plus ``g``."""
    s._check(g)
    if s.find(g) is not None:
        return s
    return MatrixSet(s.dim, s.regime, [*s, g])


def _products(s1: MatrixSet, s2: MatrixSet, out: MatrixSet, cap: int) -> None:
    if s1.regime.exact:
        # inputs are already checked compatible, so write straight into the index
        right = list(s2)
        seen = out._index._d
        elems = out._elements
        for g in s1:
            for h in right:
                p = g @ h
                if p not in seen:
                    seen[p] = len(elems)
                    elems.append(p)
                    if len(elems) > cap:
                        raise CapExceeded(len(elems), cap)
        return
    st = s2.stack()
    for g in s1:
        for m in g.m @ st:
            if out._add(Dense(m, check=False)) and len(out) > cap:
                raise CapExceeded(len(out), cap)


def product_set(s1: MatrixSet, s2: MatrixSet, cap: int = DEFAULT_CAP) -> MatrixSet:
    """The deduplicated product set ``{g h : g in s1, h in s2}``."""
    _compatible(s1, s2)
    out = MatrixSet._builder(s1.dim, s1.regime)
    _products(s1.canonical(), s2.canonical(), out, cap)
    return out._freeze().canonical()


def power_set(s: MatrixSet, k: int, cap: int = DEFAULT_CAP) -> MatrixSet:
    """``s^k`` by iterated products; raises :class:`CapExceeded` on overflow."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cur = s.canonical()
    for _ in range(k - 1):
        cur = product_set(cur, s, cap)
    return cur


def inverse_set(s: MatrixSet) -> MatrixSet:
    return MatrixSet(s.dim, s.regime, [g.inverse() for g in s]).canonical()


def symmetrize(s: MatrixSet) -> MatrixSet:
    """``s`` together with its inverses and the identity (the empty set gives ``{id}``)."""
    return MatrixSet(s.dim, s.regime,
                     [s.identity(), *s, *(g.inverse() for g in s)]).canonical()


def is_symmetric(s: MatrixSet) -> bool:
    return all(s.find(g.inverse()) is not None for g in s)


def contains_identity(s: MatrixSet) -> bool:
    return s.find(s.identity()) is not None


def require_approximate_shape(a: MatrixSet) -> None:
    if not is_symmetric(a):
        raise NotSymmetric("set is not closed under inverses")
    if not contains_identity(a):
        raise MissingIdentity("set does not contain the identity")


def min_pairwise_distance(s: MatrixSet) -> float:
    """Smallest Hilbert-Schmidt distance between two stored elements (inf below 2 elements)."""
    if len(s) < 2:
        return math.inf
    if isinstance(s[0], Monomial) and s.dim > 10:
        return _monomial_min_distance(s)
    from scipy.spatial import cKDTree

    pts = s.stack().reshape(len(s), -1).view(float)
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(d[:, 1].min())


def _monomial_min_distance(s: MatrixSet) -> float:
    # distinct permutations differ in >= 2 columns, each contributing 2 to the
    # squared distance, so such pairs are >= 2 apart; same-permutation pairs are
    # compared exactly.  The result is exact whenever it is below 2.
    groups: dict[tuple, list[Monomial]] = {}
    for g in s:
        groups.setdefault(g.perm, []).append(g)
    best = 2.0
    for members in groups.values():
        if len(members) < 2:
            continue
        ph = np.array([np.exp(2j * math.pi * np.asarray(g.num, float) / g.den) for g in members])
        for i in range(len(members) - 1):
            d = np.sqrt(np.sum(np.abs(ph[i + 1:] - ph[i]) ** 2, axis=1))
            best = min(best, float(d.min()))
    return best


# -- lookups over batches --------------------------------------------------------

def left_translates(x: UnitaryElement, s: MatrixSet) -> list[UnitaryElement]:
    if isinstance(x, Dense):
        return [Dense(m, check=False) for m in x.m @ s.stack()]
    return [x @ g for g in s]


def right_translates(s: MatrixSet, x: UnitaryElement) -> list[UnitaryElement]:
    if isinstance(x, Dense):
        return [Dense(m, check=False) for m in s.stack() @ x.m]
    return [g @ x for g in s]


def _hits(target: MatrixSet, items: Iterable[UnitaryElement]) -> set[int]:
    out = set()
    for g in items:
        i = target.find(g)
        if i is not None:
            out.add(i)
    return out


# -- certificates ----------------------------------------------------------------

@dataclass
class ApproxCertificate:
    """Witness that ``A^2`` is covered by ``cover * A`` with ``cover`` symmetric."""

    K_upper: int
    cover: MatrixSet
    regime: EqualityRegime
    square_size: int = 0

    def recheck(self, a: MatrixSet) -> bool:
        if not is_symmetric(self.cover) or len(self.cover) != self.K_upper:
            return False
        xa = product_set(self.cover, a)
        return all(xa.find(u) is not None for u in product_set(a, a))


def _is_identity(g: UnitaryElement, regime: EqualityRegime) -> bool:
    if isinstance(g, Monomial):
        return g.is_identity()
    return g.is_identity(regime.eps_eq or 0.0)


def certify_approximate(a: MatrixSet, square: MatrixSet | None = None) -> ApproxCertificate:
    """Greedy symmetric cover ``X`` with ``A^2 ⊆ X A``; ``K_upper = |X|`` bounds the optimum.

    Uncovered elements ``u`` of ``A^2`` are visited in canonical order.  For
    each, the candidates ``x = u a^-1`` (``a`` in ``A``) are scored by how many
    still-uncovered elements the pair ``{x, x^-1}`` covers; ties go to the
    smaller pair, then to the identity, then to canonical order.
    """
    require_approximate_shape(a)
    a = a.canonical()
    a2 = square if square is not None else product_set(a, a)
    covered = np.zeros(len(a2), dtype=bool)
    cover = MatrixSet._builder(a.dim, a.regime)
    inverses = [g.inverse() for g in a]
    for ui, u in enumerate(a2):
        if covered[ui]:
            continue
        best = None
        for ai, ainv in enumerate(inverses):
            x = u @ ainv
            xinv = x.inverse()
            pair = [x] if _same(x, xinv, a.regime) else [x, xinv]
            hit = set()
            for y in pair:
                hit |= _hits(a2, left_translates(y, a))
            new = sum(1 for i in hit if not covered[i])
            key = (-new, len(pair), not _is_identity(x, a.regime), canonical_key(x))
            if best is None or key < best[0]:
                best = (key, pair, hit)
        _, pair, hit = best
        for y in pair:
            cover._add(y)
        covered[list(hit)] = True
    cover = cover._freeze().canonical()
    cert = ApproxCertificate(len(cover), cover, a.regime, len(a2))
    xa = product_set(cover, a)
    missing = [u for u in a2 if xa.find(u) is None]
    if missing or not is_symmetric(cover):
        raise AssertionError(f"cover verification failed: {len(missing)} elements of A^2 uncovered")
    return cert


def _same(g: UnitaryElement, h: UnitaryElement, regime: EqualityRegime) -> bool:
    if regime.exact:
        return g == h
    return hs_distance(g, h) <= regime.eps_eq


@dataclass
class ControlCertificate:
    """``A ⊆ X B ∩ B X`` with the control constant ``max(|X|, ceil(|B|/|A|))``."""

    B: MatrixSet
    cover: MatrixSet
    ratio: float

    @property
    def constant(self) -> int:
        return max(len(self.cover), math.ceil(self.ratio - 1e-12))

    def recheck(self, a: MatrixSet) -> bool:
        xb = product_set(self.cover, self.B)
        bx = product_set(self.B, self.cover)
        return all(xb.find(g) is not None and bx.find(g) is not None for g in a)


@dataclass
class ControlFailure:
    uncovered: list[UnitaryElement]
    partial_cover: MatrixSet
    ratio: float

    constant = None


def verify_control(a: MatrixSet, b: MatrixSet) -> ControlCertificate | ControlFailure:
    """Greedy cover ``X`` drawn from ``A ∪ A^2`` with ``A ⊆ X B`` and ``A ⊆ B X``.

    Each step takes the first element of ``A`` still uncovered on either side
    and scores every translate ``a b^-1`` / ``b^-1 a`` lying in the pool by the
    number of uncovered elements it covers on both sides together.  Elements
    no pool candidate can reach are reported in a :class:`ControlFailure`.
    """
    _compatible(a, b)
    a = a.canonical()
    b = b.canonical()
    ratio = len(b) / len(a) if len(a) else math.inf
    pool = union(a, product_set(a, a)) if len(a) else a
    unc_l = np.ones(len(a), dtype=bool)
    unc_r = np.ones(len(a), dtype=bool)
    dead_l = np.zeros(len(a), dtype=bool)
    dead_r = np.zeros(len(a), dtype=bool)
    cover = MatrixSet._builder(a.dim, a.regime)
    binv = [g.inverse() for g in b]
    while True:
        todo = [i for i in range(len(a)) if (unc_l[i] and not dead_l[i]) or (unc_r[i] and not dead_r[i])]
        if not todo:
            break
        ai = todo[0]
        g = a[ai]
        cands = []
        if unc_l[ai] and not dead_l[ai]:
            cands += [g @ h for h in binv]
        if unc_r[ai] and not dead_r[ai]:
            cands += [h @ g for h in binv]
        best = None
        for x in cands:
            if pool.find(x) is None:
                continue
            hl = [i for i in _hits(a, left_translates(x, b)) if unc_l[i]]
            hr = [i for i in _hits(a, right_translates(b, x)) if unc_r[i]]
            key = (-(len(hl) + len(hr)), not _is_identity(x, a.regime), canonical_key(x))
            if best is None or key < best[0]:
                best = (key, x, hl, hr)
        if best is None or best[0][0] == 0:
            dead_l[ai] = dead_l[ai] or unc_l[ai]
            dead_r[ai] = dead_r[ai] or unc_r[ai]
            continue
        _, x, hl, hr = best
        cover._add(x)
        unc_l[hl] = False
        unc_r[hr] = False
    cover = cover._freeze().canonical()
    bad = [a[i] for i in range(len(a)) if unc_l[i] or unc_r[i]]
    if bad:
        return ControlFailure(bad, cover, ratio)
    cert = ControlCertificate(b, cover, ratio)
    if not cert.recheck(a):
        raise AssertionError("control cover verification failed")
    return cert
