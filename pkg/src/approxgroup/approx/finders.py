"""Elements with large centralizers inside approximate groups.

Two arguments are implemented.  The nearest-neighbour argument looks for a
large fibre of ``(a, a1, a2) -> (a1 a, a1 a*, a a2, a* a2)`` over
well-behaved triples; equal images force ``b^-1 a`` to commute with
``gamma = a^-1 a*``.  The commutator-bucketing argument takes the non-scalar
element ``gamma`` of ``A^2`` closest to the identity and groups near-identity
``x`` by the value of ``[gamma, x]``; ``x^-1 y`` centralizes ``gamma``
whenever ``x`` and ``y`` share a bucket.

Below the asymptotic regime both arguments may find little, so an exhaustive
scan over non-scalar elements of ``A^2`` is also offered: any non-scalar
``gamma`` is a valid witness there.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..besicovitch import matrix_space_bound
from ..errors import EmptyNearIdentity, NoWitness, TooSmall
from ..jordan import CentralizerWitness, centralizer_in, near_identity_subset
from ..linalg import (EPS_COMM, EPS_SPEC, Dense, Monomial, UnitaryElement, as_matrix,
                      canonical_key, commutator, determinant_root, hs_distance,
                      is_scalar_multiple_of_identity, spectral_decompose)
from ..sets import (DEFAULT_CAP, MatrixSet, product_set, require_approximate_shape)

log = logging.getLogger(__name__)

SOLYMOSI_MAX = 160
EXHAUSTIVE_CANDIDATES = 400
STRATEGIES = ("auto", "solymosi", "referee", "exhaustive")


def _nonscalar(g: UnitaryElement, eps: float = EPS_SPEC) -> bool:
    return is_scalar_multiple_of_identity(g, eps) is None


def _is_special(g: UnitaryElement, tol: float = 1e-8) -> bool:
    if isinstance(g, Monomial):
        return g.determinant_phase() == 0
    return abs(np.linalg.det(as_matrix(g)) - 1.0) <= tol


def _blocks(gamma: UnitaryElement, eps_spec: float) -> tuple[int, ...]:
    return tuple(spectral_decompose(gamma, eps_spec).multiplicities)


def _index_table(a: MatrixSet, target: MatrixSet) -> np.ndarray:
    """``T[i, j]`` = index in ``target`` of ``a_i a_j``."""
    n = len(a)
    tab = np.empty((n, n), dtype=np.int64)
    if a.regime.exact:
        elems = list(a)
        for i, g in enumerate(elems):
            for j, h in enumerate(elems):
                tab[i, j] = target.find(g @ h)
        return tab
    st = a.stack()
    for i in range(n):
        for j, m in enumerate(st[i] @ st):
            k = target.find(Dense(m, check=False))
            tab[i, j] = -1 if k is None else k
    return tab


def _verify_commuting(gamma: UnitaryElement, elems: MatrixSet, eps_comm: float) -> None:
    if len(centralizer_in(elems, gamma, eps_comm)) != len(elems):
        raise AssertionError("witness lists an element that does not commute with gamma")


def find_centralizer_solymosi(a: MatrixSet, k: float, eps_comm: float = EPS_COMM,
                              eps_spec: float = EPS_SPEC, cap: int = DEFAULT_CAP) -> CentralizerWitness:
    """Large-fibre search over well-behaved triples (``a`` symmetric, in SU_n, ``|a| > n``)."""
    require_approximate_shape(a)
    n = a.dim
    if len(a) <= n:
        raise TooSmall(f"|A| = {len(a)} does not exceed n = {n}")
    if not all(_is_special(g) for g in a):
        raise ValueError("elements must have determinant 1")
    if len(a) > SOLYMOSI_MAX:
        raise NoWitness(f"|A| = {len(a)} exceeds the triple budget {SOLYMOSI_MAX}")
    from scipy.spatial import cKDTree

    a = a.canonical()
    a2 = product_set(a, a, cap)
    N, M = len(a), len(a2)
    pts = a.stack().reshape(N, -1).view(float)
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    r = dist.min(axis=1)
    # joint-nearest ties go to the canonically first candidate
    star = np.array([int(np.nonzero(dist[i] <= r[i] * (1 + 1e-12) + 1e-15)[0][0]) for i in range(N)])

    tab = _index_table(a, a2)
    bes = min(matrix_space_bound(n), 10 ** 12)
    thr = 10 * bes * k
    tree = cKDTree(a2.stack().reshape(M, -1).view(float))
    a2pts = a2.stack().reshape(M, -1).view(float)
    slack = 1e-9

    gammas = [a[i].inverse() @ a[int(star[i])] for i in range(N)]
    good_a = np.array([_nonscalar(g, eps_spec) for g in gammas])
    if not good_a.any():
        raise NoWitness("every nearest-neighbour quotient is scalar")

    # U[a, a1] counts A^2 points within r_a of a1 a; V[a, a2] those within r_a of a a2
    U = np.empty((N, N), dtype=np.int64)
    V = np.empty((N, N), dtype=np.int64)
    for i in range(N):
        U[i] = [len(x) for x in tree.query_ball_point(a2pts[tab[:, i]], r[i] + slack)]
        V[i] = [len(x) for x in tree.query_ball_point(a2pts[tab[i, :]], r[i] + slack)]

    M64 = np.int64(M)
    keys_all, owner = [], []
    for i in np.nonzero(good_a)[0]:
        ok1 = np.nonzero(U[i] <= thr)[0]
        ok2 = np.nonzero(V[i] <= thr)[0]
        if not len(ok1) or not len(ok2):
            continue
        s = int(star[i])
        xy = tab[ok1, i] * M64 + tab[ok1, s]
        zw = tab[i, ok2] * M64 + tab[s, ok2]
        keys_all.append((np.repeat(xy, len(zw)), np.tile(zw, len(xy))))
        owner.append(np.full(len(xy) * len(zw), i, dtype=np.int64))
    if not keys_all:
        raise NoWitness("no well-behaved triples")
    hi = np.concatenate([k[0] for k in keys_all])
    lo = np.concatenate([k[1] for k in keys_all])
    own = np.concatenate(owner)
    combo = np.stack([hi, lo], axis=1)
    uniq, inv, counts = np.unique(combo, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    triples = len(combo)
    best = int(np.argmax(counts))
    fiber = int(counts[best])
    if fiber < 2:
        raise NoWitness("largest fibre is a single triple")
    members = np.nonzero(inv == best)[0]
    base = int(own[members[0]])
    gamma = gammas[base]
    comm = [a[int(own[m])].inverse() @ a[base] for m in members]
    fiber_set = MatrixSet(n, a.regime, comm).canonical()
    _verify_commuting(gamma, fiber_set, eps_comm)
    # the fibre only certifies these; the witness lists all of C(gamma) ∩ A^2
    commuting = centralizer_in(a2, gamma, eps_comm)
    if not fiber_set.issubset(commuting):
        raise AssertionError("fibre elements missing from the centralizer in A^2")
    return CentralizerWitness(
        gamma, hs_distance(gamma, np.eye(n)), commuting, _blocks(gamma, eps_spec),
        method="solymosi", power=2, fiber_size=fiber,
        diagnostics={"triples": triples, "image_size": int(len(uniq)),
                     "fiber_elements": len(fiber_set), "threshold": float(thr),
                     "besicovitch_cap": int(bes)})


def find_centralizer_referee(a: MatrixSet, k: float, eps_comm: float = EPS_COMM,
                             eps_spec: float = EPS_SPEC, cap: int = DEFAULT_CAP) -> CentralizerWitness:
    """Commutator bucketing on the near-identity part of ``A^2``."""
    require_approximate_shape(a)
    n = a.dim
    a2 = product_set(a, a, cap)
    near = near_identity_subset(a2)
    cands = [g for g in near if _nonscalar(g, eps_spec)]
    if not cands:
        raise EmptyNearIdentity("no non-scalar element of A^2 lies within 1/(4 sqrt n) of id")
    ident = np.eye(n)
    gamma = min(cands, key=lambda g: (hs_distance(g, ident), canonical_key(g)))
    rho = hs_distance(gamma, ident)
    buckets = MatrixSet._builder(n, a.regime)
    members: dict[int, list[UnitaryElement]] = {}
    for x in near:
        c = commutator(gamma, x)
        idx = buckets.find(c)
        if idx is None:
            buckets._add(c)
            idx = len(buckets) - 1
        members.setdefault(idx, []).append(x)
    top = max(members, key=lambda i: (len(members[i]), [-v for v in canonical_key(buckets[i])]))
    big = members[top]
    commuting = MatrixSet(n, a.regime, [x.inverse() @ y for x in big for y in big]).canonical()
    _verify_commuting(gamma, commuting, eps_comm)
    return CentralizerWitness(
        gamma, rho, commuting, _blocks(gamma, eps_spec), method="referee", power=4,
        diagnostics={"near_identity": len(near), "buckets": len(members), "largest_bucket": len(big)})


def find_centralizer_exhaustive(a: MatrixSet, k: float = 1.0, eps_comm: float = EPS_COMM,
                                eps_spec: float = EPS_SPEC,
                                max_candidates: int = EXHAUSTIVE_CANDIDATES,
                                cap: int = DEFAULT_CAP) -> CentralizerWitness:
    """Non-scalar ``gamma`` in ``A^2`` with the most commuting elements of ``A^2``.

    Candidates are taken in canonical order, up to ``max_candidates``.
    """
    require_approximate_shape(a)
    a2 = product_set(a, a, cap)
    cands = [g for g in a2 if _nonscalar(g, eps_spec)][:max_candidates]
    if not cands:
        raise NoWitness("A^2 consists of scalars")
    st = a2.stack()
    best = None
    for g in cands:
        gm = as_matrix(g)
        if a2.regime.exact:
            size = len(centralizer_in(a2, g))
        else:
            d = st @ gm - gm @ st
            size = int((np.sqrt((np.abs(d) ** 2).sum(axis=(1, 2))) <= eps_comm).sum())
        if best is None or size > best[0]:
            best = (size, g)
    gamma = best[1]
    commuting = centralizer_in(a2, gamma, eps_comm)
    return CentralizerWitness(
        gamma, hs_distance(gamma, np.eye(a.dim)), commuting, _blocks(gamma, eps_spec),
        method="exhaustive", power=2, diagnostics={"candidates": len(cands)})


# -- projective quotient -----------------------------------------------------------

def central_classes(a: MatrixSet, eps: float = 1e-6) -> list[list[int]]:
    """Partition of ``a`` into cosets ``xZ`` of the centre (indices, canonical order)."""
    if a.regime.exact:
        from ..linalg import projective_normal_form
        groups: dict[Monomial, list[int]] = {}
        for i, g in enumerate(a):
            groups.setdefault(projective_normal_form(g), []).append(i)
        return list(groups.values())
    st = a.stack()
    n = a.dim
    reps: list[int] = []
    classes: list[list[int]] = []
    label = np.full(len(a), -1)
    for i in range(len(a)):
        if label[i] >= 0:
            continue
        tr = np.abs(np.einsum("ij,kij->k", st[i].conj(), st))
        # min over scalars of ||g - lam h||^2 equals 2n - 2|tr(h* g)|
        d = np.sqrt(np.maximum(0.0, 2 * n - 2 * tr))
        hits = np.nonzero((d <= eps) & (label < 0))[0]
        label[hits] = len(classes)
        classes.append(hits.tolist())
        reps.append(i)
    return classes


def special_lift(a: MatrixSet) -> MatrixSet:
    """``A Z ∩ SU_n``: every determinant-one scalar multiple of every element."""
    n = a.dim
    out = MatrixSet._builder(n, a.regime)
    roots = [Monomial.scalar(n, j, n) for j in range(n)]
    if not a.regime.exact:
        roots = [Dense(r.to_dense(), check=False) for r in roots]
    for g in a:
        s = determinant_root(g)
        for w in roots:
            out._add(s @ w)
    return out._freeze().canonical()


@dataclass
class CosetCase:
    x: UnitaryElement
    density: float
    classes: int
    count: int


def _run_finder(name: str, a: MatrixSet, k: float, eps_comm: float, eps_spec: float, cap: int):
    fn = {"solymosi": find_centralizer_solymosi, "referee": find_centralizer_referee,
          "exhaustive": find_centralizer_exhaustive}[name]
    return fn(a, k, eps_comm=eps_comm, eps_spec=eps_spec, cap=cap)


def central_coset_or_centralizer(a: MatrixSet, k: float, strategy: str = "auto",
                                 eps_comm: float = EPS_COMM, eps_spec: float = EPS_SPEC,
                                 cap: int = DEFAULT_CAP,
                                 attempts: dict[str, Any] | None = None) -> CosetCase | CentralizerWitness:
    """A dense coset of the centre, or a non-scalar ``gamma`` with its centralizer in ``A^2``.

    When ``A`` meets at most ``n`` cosets of the centre the densest one is
    returned.  Otherwise a finder runs on ``A Z ∩ SU_n`` and the returned
    witness lists ``C(gamma) ∩ A^2`` for the original ``A``.  ``solymosi``
    falls back to ``referee`` on failure; ``auto`` runs every finder and
    keeps the witness with the largest centralizer.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    require_approximate_shape(a)
    n = a.dim
    classes = central_classes(a)
    if len(classes) <= n:
        top = max(classes, key=lambda c: (len(c), -c[0]))
        return CosetCase(a[top[0]], len(top) / len(a), len(classes), len(top))
    lifted = special_lift(a)
    a2 = product_set(a, a, cap)
    if strategy == "auto":
        order = ["solymosi", "referee", "exhaustive"]
    elif strategy == "solymosi":
        order = ["solymosi", "referee"]
    else:
        order = [strategy]
    found = []
    record = attempts if attempts is not None else {}
    for name in order:
        try:
            w = _run_finder(name, lifted, k, eps_comm, eps_spec, cap)
        except (NoWitness, TooSmall, EmptyNearIdentity) as exc:
            record[name] = f"{type(exc).__name__}: {exc}"
            log.debug("finder %s failed: %s", name, exc)
            continue
        comm = centralizer_in(a2, w.gamma, eps_comm)
        record[name] = len(comm)
        found.append((w, comm))
        if strategy != "auto":
            break
    if not found:
        raise NoWitness(f"every finder failed: {record}")
    w, comm = max(found, key=lambda t: len(t[1]))
    diag = dict(w.diagnostics)
    diag.update(lifted_size=len(lifted), witness_size=len(w.commuting), witness_power=w.power,
                central_classes=len(classes), attempts=dict(record))
    return CentralizerWitness(w.gamma, w.rho, comm, w.blocks, method=w.method, power=2,
                              fiber_size=w.fiber_size, diagnostics=diag)
