"""Block subgroups and root tori, both described by a unitary frame ``Q``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NonUnitaryConjugator
from ..linalg import EPS_UNIT, as_matrix, is_unitary
from ..sets import MatrixSet

EPS_BLOCK = 1e-6
FULL = "full"
SCALAR = "scalar"

# Irrational step used to give each torus class a distinct generic phase.
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _mask_outside(n: int, blocks: Sequence[tuple[int, int]]) -> np.ndarray:
    mask = np.ones((n, n), dtype=bool)
    for lo, hi in blocks:
        mask[lo:hi, lo:hi] = False
    return mask


@dataclass(frozen=True, eq=False)
class BlockSubgroup:
    """``{Q diag(g_1, ..., g_k) Q*}`` with each ``g_i`` in ``U(n_i)`` or scalar.

    A ``scalar`` block only admits multiples of its identity.
    """

    Q: np.ndarray
    blocks: tuple[tuple[int, int], ...]
    kinds: tuple[str, ...]
    eps_block: float = EPS_BLOCK

    @classmethod
    def full(cls, n: int, eps_block: float = EPS_BLOCK) -> "BlockSubgroup":
        return cls(np.eye(n, dtype=complex), ((0, n),), (FULL,), eps_block)

    @classmethod
    def from_sizes(cls, q: np.ndarray, sizes: Sequence[int], kinds: Sequence[str] | None = None,
                   eps_block: float = EPS_BLOCK) -> "BlockSubgroup":
        edges = np.cumsum([0, *sizes]).tolist()
        blocks = tuple((edges[i], edges[i + 1]) for i in range(len(sizes)))
        kinds = tuple(kinds) if kinds is not None else (FULL,) * len(sizes)
        return cls(np.asarray(q, dtype=complex), blocks, kinds, eps_block)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    @property
    def sizes(self) -> list[int]:
        return [hi - lo for lo, hi in self.blocks]

    @property
    def is_abelian(self) -> bool:
        return all(k == SCALAR or hi - lo == 1 for (lo, hi), k in zip(self.blocks, self.kinds))

    def splittable(self) -> int | None:
        """Index of the first full block of size at least two."""
        for i, ((lo, hi), k) in enumerate(zip(self.blocks, self.kinds)):
            if k == FULL and hi - lo >= 2:
                return i
        return None

    def in_frame(self, st: np.ndarray) -> np.ndarray:
        q = self.Q
        return q.conj().T @ st @ q

    def deviation(self, st: np.ndarray) -> np.ndarray:
        """Largest entry violating the block pattern, per matrix of a stack."""
        m = self.in_frame(st)
        mask = _mask_outside(self.dim, self.blocks)
        dev = np.abs(m[:, mask]).max(axis=1) if mask.any() else np.zeros(len(m))
        for (lo, hi), k in zip(self.blocks, self.kinds):
            if k == SCALAR and hi - lo > 1:
                blk = m[:, lo:hi, lo:hi]
                lam = np.trace(blk, axis1=1, axis2=2) / (hi - lo)
                res = blk - lam[:, None, None] * np.eye(hi - lo)
                dev = np.maximum(dev, np.abs(res).reshape(len(m), -1).max(axis=1))
        return dev

    def contains_stack(self, st: np.ndarray) -> np.ndarray:
        if len(st) == 0:
            return np.zeros(0, dtype=bool)
        return self.deviation(st) <= self.eps_block

    def contains(self, g) -> bool:
        return bool(self.contains_stack(as_matrix(g)[None])[0])

    def intersect(self, s: MatrixSet) -> MatrixSet:
        keep = self.contains_stack(s.stack())
        return MatrixSet(s.dim, s.regime, [g for g, k in zip(s, keep) if k])

    def project(self, st: np.ndarray, i: int) -> np.ndarray:
        lo, hi = self.blocks[i]
        return self.in_frame(st)[:, lo:hi, lo:hi]

    def refine(self, i: int, v: np.ndarray | None, sizes: Sequence[int] | None) -> "BlockSubgroup":
        """Replace block ``i`` by full sub-blocks of ``sizes`` in the frame ``v``, or by a scalar block."""
        lo, hi = self.blocks[i]
        if sizes is None:
            kinds = list(self.kinds)
            kinds[i] = SCALAR
            return BlockSubgroup(self.Q, self.blocks, tuple(kinds), self.eps_block)
        rot = np.eye(self.dim, dtype=complex)
        rot[lo:hi, lo:hi] = v
        edges = np.cumsum([lo, *sizes]).tolist()
        new = tuple((edges[j], edges[j + 1]) for j in range(len(sizes)))
        blocks = self.blocks[:i] + new + self.blocks[i + 1:]
        kinds = self.kinds[:i] + (FULL,) * len(sizes) + self.kinds[i + 1:]
        return BlockSubgroup(self.Q @ rot, blocks, kinds, self.eps_block)

    def describe(self) -> dict:
        return {"blocks": [[lo, hi] for lo, hi in self.blocks], "kinds": list(self.kinds)}


# -- tori -------------------------------------------------------------------------

def _components(n: int, edges: list[tuple[int, int]]) -> tuple[tuple[int, ...], ...]:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p, q in edges:
        rp, rq = find(p), find(q)
        if rp != rq:
            parent[max(rp, rq)] = min(rp, rq)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return tuple(sorted(tuple(g) for g in groups.values()))


@dataclass(frozen=True, eq=False)
class TorusDescriptor:
    """``{Q diag(l) Q* : l_i = l_j whenever i, j share a class}``."""

    Q: np.ndarray
    equal_classes: tuple[tuple[int, ...], ...]
    eps: float = EPS_BLOCK
    used: tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    @property
    def rank(self) -> int:
        return len(self.equal_classes)

    def _labels(self) -> np.ndarray:
        lab = np.empty(self.dim, dtype=int)
        for c, cls in enumerate(self.equal_classes):
            lab[list(cls)] = c
        return lab

    def deviation(self, st: np.ndarray) -> np.ndarray:
        m = self.Q.conj().T @ st @ self.Q
        n = self.dim
        off = m.copy()
        idx = np.arange(n)
        off[:, idx, idx] = 0
        dev = np.abs(off).reshape(len(m), -1).max(axis=1) if n > 1 else np.zeros(len(m))
        diag = m[:, idx, idx]
        for cls in self.equal_classes:
            if len(cls) > 1:
                d = diag[:, list(cls)]
                dev = np.maximum(dev, np.abs(d - d[:, :1]).max(axis=1))
        return dev

    def contains_stack(self, st: np.ndarray) -> np.ndarray:
        if len(st) == 0:
            return np.zeros(0, dtype=bool)
        return self.deviation(st) <= self.eps

    def contains(self, g) -> bool:
        return bool(self.contains_stack(as_matrix(g)[None])[0])

    def intersect(self, s: MatrixSet) -> MatrixSet:
        keep = self.contains_stack(s.stack())
        return MatrixSet(s.dim, s.regime, [g for g, k in zip(s, keep) if k])

    def generic_element(self) -> np.ndarray:
        lab = self._labels()
        phases = np.exp(2j * np.pi * _GOLDEN * (lab + 1) / (self.rank + 1))
        return self.Q @ np.diag(phases) @ self.Q.conj().T

    def conjugate_constraints(self, m: np.ndarray) -> list[tuple[int, int]]:
        """Equalities cutting ``T ∩ g S g^-1`` out of ``T`` where ``m = Q* g Q``.

        ``diag(l) = m diag(mu) m*`` forces ``l_p = mu_q`` whenever ``m_pq != 0``;
        rows meeting the same class of ``mu`` are therefore tied together.
        """
        support = np.abs(m) > self.eps
        edges = []
        for cls in self.equal_classes:
            rows = np.nonzero(support[:, list(cls)].any(axis=1))[0]
            edges.extend((int(rows[0]), int(r)) for r in rows[1:])
        return edges

    def meet(self, edges: list[tuple[int, int]]) -> "TorusDescriptor":
        cur = [(c[0], x) for c in self.equal_classes for x in c[1:]]
        return TorusDescriptor(self.Q, _components(self.dim, cur + edges), self.eps, self.used)

    def describe(self) -> dict:
        return {"equal_classes": [list(c) for c in self.equal_classes], "rank": self.rank,
                "used_conjugates": list(self.used)}


def diagonal_torus(q: np.ndarray, eps: float = EPS_BLOCK) -> TorusDescriptor:
    n = q.shape[0]
    return TorusDescriptor(np.asarray(q, dtype=complex), tuple((i,) for i in range(n)), eps)


def root_torus(conjugators: Sequence, eps: float = EPS_BLOCK,
               eps_unit: float = EPS_UNIT) -> TorusDescriptor:
    """Intersection of the conjugates ``g_i T g_i^-1`` of the diagonal torus ``T``.

    With ``gamma`` in ``T`` of distinct eigenvalues, ``Q diag(l) Q*`` lies in
    ``g T g^-1`` iff it commutes with ``g gamma g^-1``, i.e. ``l_p = l_q``
    whenever the ``(p, q)`` entry of ``Q* g gamma g^-1 Q`` is nonzero.  The
    frame is the first conjugator.  Conjugates that do not shrink the torus
    are skipped, so at most ``n`` are used.
    """
    mats = [as_matrix(g) for g in conjugators]
    if not mats:
        raise ValueError("need at least one conjugator")
    for i, m in enumerate(mats):
        if not is_unitary(m, eps_unit):
            raise NonUnitaryConjugator(f"conjugator {i} is not unitary")
    n = mats[0].shape[0]
    gamma = np.diag(np.exp(2j * np.pi * _GOLDEN * np.arange(1, n + 1) / (n + 1)))
    q0 = mats[0]
    classes = tuple((i,) for i in range(n))
    used = [0]
    for i, g in enumerate(mats[1:], start=1):
        if len(used) >= n:
            break
        c = q0.conj().T @ g @ gamma @ g.conj().T @ q0
        edges = [(p, q) for p in range(n) for q in range(p + 1, n) if abs(c[p, q]) > eps]
        cur = [(cl[0], x) for cl in classes for x in cl[1:]]
        new = _components(n, cur + edges)
        if new != classes:
            classes = new
            used.append(i)
    return TorusDescriptor(np.asarray(q0, dtype=complex), classes, eps, tuple(used))


def fourier_matrix(n: int) -> np.ndarray:
    j = np.arange(n)
    return np.exp(2j * np.pi * np.outer(j, j) / n) / math.sqrt(n)


def standard_block_subgroups(n: int, eps_block: float = EPS_BLOCK) -> dict[str, BlockSubgroup]:
    """A fixed menu of block subgroups of ``U_n`` used for intersection experiments."""
    eye = np.eye(n, dtype=complex)
    out = {"full": BlockSubgroup.full(n, eps_block),
           "diagonal": BlockSubgroup.from_sizes(eye, [1] * n, eps_block=eps_block),
           "scalar": BlockSubgroup.from_sizes(eye, [n], [SCALAR], eps_block)}
    for k in range(1, n):
        out[f"U{k}xU{n - k}"] = BlockSubgroup.from_sizes(eye, [k, n - k], eps_block=eps_block)
    if n > 1:
        out["fourier-torus"] = BlockSubgroup.from_sizes(fourier_matrix(n), [1] * n,
                                                        eps_block=eps_block)
    return out
