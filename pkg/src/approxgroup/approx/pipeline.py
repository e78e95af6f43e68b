"""Control of an approximate group by simultaneously diagonalizable matrices.

Starting from ``H = U_n`` the inductive step repeatedly splits a full
unitary block of ``H``: either ``A^2 ∩ H`` concentrates on a coset of the
centre of that block (the block becomes scalar), or some non-scalar
``gamma`` has a large centralizer and the block splits along its
eigenspaces.  Once every block is scalar or of size one, ``B = A^2 ∩ H`` is
diagonal in the frame of ``H``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import (AlreadyDiagonal, CapExceeded, NoProgress, NoWitness, NormalizerViolation,
                      PipelineFailed)
from ..jordan import is_abelian
from ..linalg import EPS_COMM, EPS_SPEC, Dense, UnitaryElement, as_matrix, spectral_decompose
from ..sets import (DEFAULT_CAP, DEFAULT_EPS_EQ, ControlCertificate, ControlFailure, MatrixSet,
                    certify_approximate, product_set, require_approximate_shape, tolerant,
                    verify_control)
from .blocks import EPS_BLOCK, BlockSubgroup, TorusDescriptor, diagonal_torus
from .finders import CosetCase, central_coset_or_centralizer

log = logging.getLogger(__name__)

FIBER_BUDGET = 200_000


def coset_count(a: MatrixSet, h, x: UnitaryElement) -> int:
    """``|A ∩ H x|``."""
    xi = as_matrix(x).conj().T
    return int(h.contains_stack(a.stack() @ xi).sum())


def densest_right_coset(a: MatrixSet, h) -> tuple[UnitaryElement, int, int]:
    """Representative, size and number of the right cosets ``H x`` meeting ``A``."""
    st = a.stack()
    free = np.ones(len(a), dtype=bool)
    best = None
    classes = 0
    for i in range(len(a)):
        if not free[i]:
            continue
        hit = h.contains_stack(st @ st[i].conj().T) & free
        hit[i] = True
        free &= ~hit
        classes += 1
        size = int(hit.sum())
        if best is None or size > best[1]:
            best = (a[i], size)
    return best[0], best[1], classes


def _block_projection(s: MatrixSet, h: BlockSubgroup, i: int, eps_eq: float) -> MatrixSet:
    lo, hi = h.blocks[i]
    if lo == 0 and hi == h.dim and np.allclose(h.Q, np.eye(h.dim), atol=0):
        return s
    proj = h.project(s.stack(), i)
    return MatrixSet(hi - lo, tolerant(eps_eq), [Dense(p, check=False) for p in proj]).canonical()


@dataclass
class StepResult:
    H: BlockSubgroup
    x: UnitaryElement
    delta: float
    record: dict


def inductive_step(a: MatrixSet, k: float, h: BlockSubgroup, x: UnitaryElement, delta: float,
                   strategy: str = "auto", a2: MatrixSet | None = None, level: int = 0,
                   eps_comm: float = EPS_COMM, eps_spec: float = EPS_SPEC,
                   eps_eq: float | None = None, cap: int = DEFAULT_CAP) -> StepResult:
    """Refine ``h`` by splitting its first non-abelian block.

    Requires ``|A ∩ H x| >= delta |A|``.  The returned density is measured:
    the largest ``|A ∩ H' x'| / |A|`` over right cosets of the new subgroup.
    """
    i = h.splittable()
    if i is None:
        raise AlreadyDiagonal("every block is scalar or one-dimensional")
    have = coset_count(a, h, x)
    if have < delta * len(a) * (1 - 1e-12):
        raise ValueError(f"|A ∩ Hx| = {have} is below delta |A| = {delta * len(a)}")
    if eps_eq is None:
        eps_eq = DEFAULT_EPS_EQ if a.regime.exact else a.regime.eps_eq
    a2 = product_set(a, a, cap) if a2 is None else a2
    s = h.intersect(a2).canonical()
    p = _block_projection(s, h, i, eps_eq)
    attempts: dict[str, Any] = {}
    try:
        res = central_coset_or_centralizer(p, 2 * k ** 3, strategy, eps_comm, eps_spec, cap,
                                           attempts=attempts)
    except NoWitness as exc:
        raise NoProgress(f"level {level}: {exc}") from exc
    rec: dict[str, Any] = {"level": level, "block": list(h.blocks[i]), "S_size": len(s),
                           "projection_size": len(p)}
    if isinstance(res, CosetCase):
        h2 = h.refine(i, None, None)
        rec.update(case="CentralCoset", coset_density=res.density, central_classes=res.classes)
    else:
        dec = spectral_decompose(res.gamma, eps_spec)
        sizes = dec.multiplicities
        h2 = h.refine(i, dec.eigenvectors, sizes)
        rec.update(case="Centralizer", method=res.method, gamma=res.gamma, split=list(sizes),
                   centralizer_in_square=len(res.commuting), rho=res.rho,
                   diagnostics=res.diagnostics)
    x2, size, classes = densest_right_coset(a, h2)
    d2 = size / len(a)
    rec.update(blocks=h2.describe(), delta=d2, cosets=classes)
    return StepResult(h2, x2, d2, rec)


@dataclass
class DecompositionReport:
    steps: list[dict]
    B: MatrixSet
    H: BlockSubgroup
    control: ControlCertificate | ControlFailure
    K_upper: int
    off_diagonal: float
    abelian: bool
    measured: dict = field(default_factory=dict)

    @property
    def Q(self) -> np.ndarray:
        return self.H.Q

    @property
    def diagonalizable(self) -> bool:
        return self.off_diagonal <= self.H.eps_block

    @property
    def ok(self) -> bool:
        return (self.diagonalizable and self.abelian and isinstance(self.control, ControlCertificate))


def off_diagonal_mass(b: MatrixSet, q: np.ndarray) -> float:
    if len(b) == 0:
        return 0.0
    m = q.conj().T @ b.stack() @ q
    n = b.dim
    idx = np.arange(n)
    m = m.copy()
    m[:, idx, idx] = 0
    return float(np.abs(m).max()) if n > 1 else 0.0


def diagonalizable_control(a: MatrixSet, strategy: str = "auto", eps_block: float = EPS_BLOCK,
                           eps_comm: float = EPS_COMM, eps_spec: float = EPS_SPEC,
                           cap: int = DEFAULT_CAP) -> DecompositionReport:
    """Run the inductive step until ``H`` is abelian; ``B = A^2 ∩ H`` then controls ``A``."""
    require_approximate_shape(a)
    a = a.canonical()
    n = a.dim
    a2 = product_set(a, a, cap)
    cert = certify_approximate(a, a2)
    k = cert.K_upper
    h = BlockSubgroup.full(n, eps_block)
    x: UnitaryElement = a.identity()
    delta = 1.0
    steps: list[dict] = []
    for level in range(n):
        try:
            res = inductive_step(a, k, h, x, delta, strategy, a2, level, eps_comm, eps_spec,
                                 cap=cap)
        except AlreadyDiagonal:
            break
        except NoProgress as exc:
            raise PipelineFailed(str(exc), level) from exc
        h, x, delta = res.H, res.x, res.delta
        steps.append(res.record)
    if h.splittable() is not None:
        raise PipelineFailed(f"blocks {h.sizes} remain after {n} steps", len(steps))
    b = h.intersect(a2).canonical()
    off = off_diagonal_mass(b, h.Q)
    control = verify_control(a, b)
    measured = {"K_upper": k, "A_size": len(a), "A2_size": len(a2), "B_size": len(b),
                "B_over_A": len(b) / len(a), "deltas": [s["delta"] for s in steps],
                "steps": len(steps)}
    if isinstance(control, ControlCertificate):
        measured["control_constant"] = control.constant
        measured["cover_size"] = len(control.cover)
    return DecompositionReport(steps, b, h, control, k, off, is_abelian(b, eps_comm), measured)


# -- normalizer of a root torus --------------------------------------------------

@dataclass
class QuotientReport:
    S: TorusDescriptor
    quotient_size: int
    s_square: int
    cube_size: int | None
    K_upper: int
    a_size: int
    conjugators: list[dict]
    deltas: list[float]
    fiber_checks: list[dict]
    rounds: int

    @property
    def displayed_ok(self) -> bool | None:
        if self.cube_size is None:
            return None
        return self.quotient_size * self.s_square <= self.cube_size

    @property
    def bound_ok(self) -> bool:
        return self.quotient_size * self.s_square <= self.K_upper ** 2 * self.a_size

    def to_json(self) -> dict:
        return {"S": self.S.describe(), "quotient_size": self.quotient_size,
                "A2_cap_S": self.s_square, "A3_size": self.cube_size, "K_upper": self.K_upper,
                "A_size": self.a_size, "conjugators": self.conjugators, "deltas": self.deltas,
                "fiber_checks": self.fiber_checks, "rounds": self.rounds,
                "displayed_inequality": self.displayed_ok, "K_bound": self.bound_ok}


def stable_root_torus(a: MatrixSet, q: np.ndarray, eps: float = EPS_BLOCK) -> tuple[TorusDescriptor, int]:
    """The largest subtorus of ``Q T Q*`` normalized by ``A``.

    Iterates ``D <- D ∩ (∩_a a D a^-1)``; after ``j`` rounds ``D`` is the
    intersection of the conjugates of ``T`` by ``A^j``.
    """
    d = diagonal_torus(q, eps)
    qs = q.conj().T @ a.stack() @ q
    rounds = 0
    while True:
        edges = [e for m in qs for e in d.conjugate_constraints(m)]
        d2 = d.meet(edges)
        rounds += 1
        if d2.equal_classes == d.equal_classes:
            return d, rounds
        d = d2


def check_normalizes(a: MatrixSet, s: TorusDescriptor) -> None:
    gamma = s.generic_element()
    st = a.stack()
    conj = st @ gamma @ st.conj().transpose(0, 2, 1)
    bad = np.nonzero(~s.contains_stack(conj))[0]
    if len(bad):
        raise NormalizerViolation(f"{len(bad)} elements do not normalize S", a[int(bad[0])])


def left_coset_classes(a: MatrixSet, s: TorusDescriptor) -> int:
    st = a.stack()
    free = np.ones(len(a), dtype=bool)
    count = 0
    for i in range(len(a)):
        if not free[i]:
            continue
        hit = s.contains_stack(st[i].conj().T @ st) & free
        hit[i] = True
        free &= ~hit
        count += 1
    return count


def _largest_fiber(b1: MatrixSet, b2: MatrixSet) -> int:
    prods = MatrixSet._builder(b1.dim, b1.regime)
    counts: list[int] = []
    for g in b1:
        for h in b2:
            p = g @ h
            i = prods.find(p)
            if i is None:
                prods._add(p)
                counts.append(1)
            else:
                counts[i] += 1
    return max(counts) if counts else 0


def normalizer_quotient_bound(a: MatrixSet, report: DecompositionReport,
                              cap: int = DEFAULT_CAP) -> QuotientReport:
    """Root torus ``S`` normalized by ``A``, the size of ``A`` modulo ``S``, and the density chain."""
    if len(report.B) == 0:
        raise ValueError("report has an empty B")
    a = a.canonical()
    q = report.Q
    eps = report.H.eps_block
    s, rounds = stable_root_torus(a, q, eps)
    check_normalizes(a, s)
    a2 = product_set(a, a, cap)
    try:
        a3 = product_set(a2, a, cap)
    except CapExceeded:
        a3 = None
    s_square = len(s.intersect(a2))
    quotient = left_coset_classes(a, s)

    # conjugators a_i from A, A^2, ..., A^n that strictly shrink the running intersection
    t = diagonal_torus(q, eps)
    t_a2 = t.intersect(a2)
    cur = t
    chosen = [{"power": 0, "classes": [list(c) for c in cur.equal_classes]}]
    deltas = [len(cur.intersect(a2)) / len(a)]
    checks: list[dict] = []
    power = a
    for j in range(1, a.dim + 1):
        if cur.equal_classes == s.equal_classes:
            break
        if j > 1:
            try:
                power = product_set(power, a, cap)
            except CapExceeded:
                break
        for g in power:
            m = q.conj().T @ as_matrix(g) @ q
            nxt = cur.meet(t.conjugate_constraints(m))
            if nxt.equal_classes == cur.equal_classes:
                continue
            b1 = cur.intersect(a2)
            b2 = MatrixSet(a.dim, a.regime, [g @ y @ g.inverse() for y in t_a2])
            check: dict[str, Any] = {"power": j, "B1": len(b1), "B2": len(b2)}
            if len(b1) * len(b2) <= FIBER_BUDGET:
                fiber = _largest_fiber(b1, b2)
                sq2 = product_set(b2, b2, cap)
                meet = sum(1 for y in product_set(b1, b1, cap) if sq2.find(y) is not None)
                check.update(fiber=fiber, square_meet=meet, fiber_ok=meet >= fiber)
            checks.append(check)
            cur = nxt
            chosen.append({"power": j, "classes": [list(c) for c in cur.equal_classes]})
            deltas.append(len(cur.intersect(a2)) / len(a))
            if cur.equal_classes == s.equal_classes:
                break
    return QuotientReport(s, quotient, s_square, None if a3 is None else len(a3), report.K_upper,
                          len(a), chosen, deltas, checks, rounds)
