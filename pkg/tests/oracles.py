"""Independent reference computations used to cross-check the library."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def heisenberg_ball_sizes(m: int, radius: int) -> list[int]:
    """Ball sizes of the Heisenberg group mod ``m`` on generators ``x^±1, y^±1``.

    Elements are triples ``(a, b, c)`` with
    ``(a, b, c)(a', b', c') = (a + a', b + b', c + c' + b a')`` mod ``m``.
    """

    def mul(u, v):
        return ((u[0] + v[0]) % m, (u[1] + v[1]) % m, (u[2] + v[2] + u[1] * v[0]) % m)

    gens = [(1, 0, 0), (m - 1, 0, 0), (0, 1, 0), (0, m - 1, 0)]
    seen = {(0, 0, 0)}
    frontier = [(0, 0, 0)]
    sizes = [1]
    for _ in range(radius):
        nxt = []
        for g in frontier:
            for s in gens:
                h = mul(g, s)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
        sizes.append(len(seen))
    return sizes


def free_ball_size(rank: int, r: int) -> int:
    """``|Σ^r|`` in a free group on ``rank`` letters with ``Σ`` symmetric and containing 1."""
    if r == 0:
        return 1
    q = 2 * rank - 1
    return 1 + 2 * rank * (q ** r - 1) // (q - 1)


def matrix_key(m: np.ndarray, decimals: int = 8) -> tuple:
    z = np.round(np.asarray(m), decimals) + 0.0
    return tuple(np.concatenate([z.real.ravel(), z.imag.ravel()]).tolist())


def dense_closure(gens: list[np.ndarray], cap: int = 5000) -> list[np.ndarray]:
    """Group generated by ``gens`` by BFS on rounded dense matrices."""
    n = gens[0].shape[0]
    ident = np.eye(n, dtype=complex)
    seen = {matrix_key(ident): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                h = g @ s
                k = matrix_key(h)
                if k not in seen:
                    seen[k] = h
                    nxt.append(h)
                    if len(seen) > cap:
                        raise RuntimeError("closure too large")
        frontier = nxt
    return list(seen.values())


def max_abelian_order_pairs(elems: list[np.ndarray]) -> int:
    """Largest abelian subgroup generated by at most two commuting elements."""
    best = 1
    for g, h in itertools.combinations_with_replacement(elems, 2):
        if np.abs(g @ h - h @ g).max() > 1e-9:
            continue
        best = max(best, len(dense_closure([g, h])))
    return best


def optimal_cover_size(a: list[np.ndarray]) -> int:
    """Minimum ``|X|`` over symmetric ``X`` with ``A^2 ⊆ X A``, by exhaustive search."""
    ka = {matrix_key(x): x for x in a}
    a_list = list(ka.values())
    square = {matrix_key(x @ y): x @ y for x in a_list for y in a_list}
    cands = {}
    for u in square.values():
        for x in a_list:
            c = u @ x.conj().T
            cands[matrix_key(c)] = c
    pairs = {}
    for c in cands.values():
        ci = c.conj().T
        pk = tuple(sorted([matrix_key(c), matrix_key(ci)]))
        pairs[pk] = [c] if pk[0] == pk[1] else [c, ci]
    pair_list = list(pairs.values())
    targets = set(square)
    best = None
    for size in range(1, len(pair_list) + 1):
        if best is not None and size >= best:
            break
        for combo in itertools.combinations(pair_list, size):
            xs = {matrix_key(x): x for p in combo for x in p}
            covered = {matrix_key(x @ y) for x in xs.values() for y in a_list}
            if targets <= covered and (best is None or len(xs) < best):
                best = len(xs)
    if best is not None:
        return best
    raise RuntimeError("no cover found")


def scalar_gap(n: int, r: int) -> float:
    return abs(complex(math.cos(2 * math.pi * r / n), math.sin(2 * math.pi * r / n)) - 1) * math.sqrt(n)


def cubic_holds(n: int, parts) -> bool:
    return Fraction(n) ** 3 > sum(Fraction(p) ** 3 for p in parts) + Fraction(n) ** 2


def compositions(n: int):
    """Compositions of ``n`` with at least two parts, by recursion on the first part."""

    def rec(rest):
        if rest == 0:
            yield ()
            return
        for first in range(1, rest + 1):
            for tail in rec(rest - first):
                yield (first, *tail)

    return [c for c in rec(n) if len(c) >= 2]


def near_identity_unitary(n: int, rng: np.random.Generator, dist: float) -> np.ndarray:
    """Random unitary at Hilbert-Schmidt distance ``dist`` (at most 2) from the identity."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    lam, v = np.linalg.eigh((z + z.conj().T) / 2)
    lam = lam / np.abs(lam).max()

    def d(theta):
        return math.sqrt(float(np.sum(4 * np.sin(theta * lam / 2) ** 2)))

    lo, hi = 0.0, math.pi
    for _ in range(80):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if d(mid) < dist else (lo, mid)
    return v @ np.diag(np.exp(1j * lo * lam)) @ v.conj().T


def projective_key(m: np.ndarray, decimals: int = 8) -> tuple:
    """Key of ``m`` modulo unit scalars: rotate the first large entry onto the positive reals."""
    flat = m.ravel()
    lead = flat[np.argmax(np.abs(flat) > 0.5)]
    return matrix_key(m * (abs(lead) / lead), decimals)


def fiber_counts(a: list[np.ndarray], xs: list[list[np.ndarray]]) -> list[tuple[int, int, int]]:
    """``(|pi(A)|, |pi(A) ∩ X|, |A^3 ∩ pi^-1(X)|)`` per ``X``, for ``pi`` the quotient by scalars."""
    image = {projective_key(g) for g in a}
    cube = {}
    for g, h, k in itertools.product(a, repeat=3):
        p = g @ h @ k
        cube[matrix_key(p)] = p
    cube_keys = [projective_key(p) for p in cube.values()]
    out = []
    for x in xs:
        targets = {projective_key(g) for g in x}
        out.append((len(image), len(image & targets), sum(1 for k in cube_keys if k in targets)))
    return out


def in_torus(m: np.ndarray, q: np.ndarray, classes, tol: float = 1e-6) -> bool:
    """Whether ``Q* m Q`` is diagonal with entries constant on each class."""
    d = q.conj().T @ m @ q
    if np.abs(d - np.diag(np.diag(d))).max() > tol:
        return False
    diag = np.diag(d)
    return all(np.abs(diag[list(c)] - diag[c[0]]).max() <= tol for c in classes)


def torus_sample(q: np.ndarray, classes, rng: np.random.Generator) -> np.ndarray:
    phases = np.empty(q.shape[0], dtype=complex)
    for c in classes:
        phases[list(c)] = np.exp(2j * np.pi * rng.random())
    return q @ np.diag(phases) @ q.conj().T


def coset_count(a: list[np.ndarray], q: np.ndarray, classes) -> int:
    """Number of distinct cosets ``gS`` met by ``a``."""
    reps: list[np.ndarray] = []
    for g in a:
        if not any(in_torus(r.conj().T @ g, q, classes) for r in reps):
            reps.append(g)
    return len(reps)
