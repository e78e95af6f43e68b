"""Acceptance suite: one pass/fail line per criterion, each at its stated tolerance and time limit.

Run ``pytest tests/test_acceptance.py`` for the summary block, or add ``-s`` to see lines inline.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from approxgroup.approx.blocks import standard_block_subgroups
from approxgroup.approx.finders import central_classes
from approxgroup.approx.lemmas import intersect_with_subgroup, lift_fiber_bound
from approxgroup.approx.pipeline import diagonalizable_control, normalizer_quotient_bound
from approxgroup.besicovitch import (CounterWitness, check_weak_besicovitch, hexagon_witness,
                                     open_ball_pair, upper_bound_property_test)
from approxgroup.families import build, generators
from approxgroup.growth import ball_sizes, growth_profile, word_ball
from approxgroup.jordan import (as_group, bruteforce_abelian_index, check_cubic_inequality,
                                is_abelian, jordan_abelian_subgroup, proper_compositions)
from approxgroup.linalg import Dense, Monomial, commutator, hs_distance
from approxgroup.sets import (ControlCertificate, certify_approximate, power_set, product_set,
                              to_tolerant)

from oracles import (coset_count, compositions, cubic_holds, fiber_counts, free_ball_size,
                     heisenberg_ball_sizes, in_torus, max_abelian_order_pairs, scalar_gap,
                     torus_sample)

# every family constructor, at each size whose closure fits a desk-scale run
PIPELINE_FAMILIES = [
    "sym:2", "sym:3", "sym:4", "sym:5", "q8",
    *[f"dih:{m}" for m in range(1, 13)], "dih:50",
    "heis:2", "heis:3", "heis:5", "heis:7",
    "diag:12", "diag:4,6", "diag:7,3",
    "prod(sym:3,q8)", "prod(dih:4,sym:3)", "prod(heis:3,dih:5)",
    "zext(sym:3,3)", "zext(sym:3,5)", "zext(q8,4)", "zext(dih:5,2)", "zext(heis:3,2)",
]
TOLERANT_EPS = 1e-6


def record(log: list[str], number: int, title: str, ok: bool, elapsed: float,
           limit: float | None = None, detail: str = "") -> None:
    within = limit is None or elapsed < limit
    verdict = "PASS" if ok and within else "FAIL"
    budget = "" if limit is None else f" of {limit:g}s"
    line = f"criterion {number:02d} {verdict}  {title}  [{elapsed:.2f}s{budget}]  {detail}".rstrip()
    log.append(line)
    print(line)
    assert ok, line
    assert within, line


def cardinalities(obj):
    """Integer and label leaves of a nested record, with matrices and floats dropped."""
    if isinstance(obj, dict):
        return {k: cardinalities(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [cardinalities(v) for v in obj]
    if isinstance(obj, (bool, int, str)):
        return obj
    return None


def near_identity_batch(n: int, count: int, rng: np.random.Generator, radius: float) -> np.ndarray:
    """Unitaries ``V diag(e^{i theta}) V*`` with ``|theta| <= radius``, hence within ``radius`` of id."""
    z = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    v, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    v = v * (d / np.abs(d))[:, None, :]
    theta = rng.standard_normal((count, n))
    theta *= (radius * rng.uniform(0.01, 1.0, count) / np.linalg.norm(theta, axis=1))[:, None]
    return v @ (np.exp(1j * theta)[:, :, None] * v.conj().transpose(0, 2, 1))


# -- 1 --------------------------------------------------------------------------------

def test_scalar_gap(criterion_log):
    t0 = time.perf_counter()
    worst, worst_oracle = math.inf, 0.0
    for n in range(2, 51):
        ident = np.eye(n)
        for r in range(1, n):
            d = hs_distance(Monomial.scalar(n, r, n).to_dense(), ident)
            worst = min(worst, d - 2 / math.sqrt(n))
            worst_oracle = max(worst_oracle, abs(d - scalar_gap(n, r)))
    elapsed = time.perf_counter() - t0
    record(criterion_log, 1, "scalar gap for n <= 50", worst > 1e-12 and worst_oracle < 1e-9,
           elapsed, 1, f"min margin {worst:.3e}")


# -- 2 --------------------------------------------------------------------------------

def test_commutator_contraction(criterion_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    violations = pairs = 0
    worst = -math.inf
    for n in range(2, 7):
        radius = 1 / (4 * math.sqrt(n))
        gs = near_identity_batch(n, 10_000, rng, radius)
        xs = near_identity_batch(n, 10_000, rng, radius)
        ident = np.eye(n)
        for g, x in zip(gs, xs):
            dg = hs_distance(g, ident)
            assert dg <= radius and hs_distance(x, ident) <= radius
            dc = hs_distance(commutator(Dense(g, check=False), Dense(x, check=False)), ident)
            worst = max(worst, dc - dg / 2)
            violations += dc > dg / 2 + 1e-9
            pairs += 1
    elapsed = time.perf_counter() - t0
    record(criterion_log, 2, "commutator contraction near the identity", violations == 0, elapsed,
           30, f"{pairs} pairs, {violations} violations, worst excess {worst:.2e}")


# -- 3 --------------------------------------------------------------------------------

def test_cubic_composition_inequality(criterion_log):
    t0 = time.perf_counter()
    count = failures = 0
    enumeration_ok = True
    for n in range(2, 13):
        mine = sorted(proper_compositions(n))
        enumeration_ok &= mine == sorted(compositions(n))
        for parts in mine:
            ok = check_cubic_inequality(n, parts)
            enumeration_ok &= ok == cubic_holds(n, parts)
            count += 1
            failures += not ok
    elapsed = time.perf_counter() - t0
    record(criterion_log, 3, "cubic inequality over proper compositions of n <= 12",
           failures == 0 and enumeration_ok, elapsed, 1, f"{count} compositions, {failures} failures")


# -- 4 --------------------------------------------------------------------------------

def test_jordan_pipeline(criterion_log):
    t0 = time.perf_counter()
    families = ["sym:3", "q8", *[f"dih:{m}" for m in range(3, 13)]]
    bad = []
    for fam in families:
        g = build(fam).closure
        res = jordan_abelian_subgroup(g, bruteforce_below=0)
        ok = (res.index == 2 and is_abelian(res.H.base) and res.H.closed
              and res.H.base.issubset(g.base) and bruteforce_abelian_index(g) == 2
              and max_abelian_order_pairs([x.to_dense() for x in g.base]) * 2 == g.order)
        if not ok:
            bad.append(fam)
    elapsed = time.perf_counter() - t0
    record(criterion_log, 4, "abelian subgroup of index 2 in Sym(3), Q8, dihedral 3..12", not bad,
           elapsed, 60, f"{len(families)} groups" + (f", mismatches {bad}" if bad else ""))


# -- 5 --------------------------------------------------------------------------------

INTERSECTION_SETS = [("sym:3", 1), ("sym:3", None), ("sym:4", 1), ("q8", None), ("dih:6", 1),
                     ("dih:9", 2), ("heis:3", 1), ("heis:5", 1), ("heis:7", 1),
                     ("zext(sym:3,3)", 1), ("prod(sym:3,q8)", 1)]


def test_intersection_with_block_subgroups(criterion_log):
    t0 = time.perf_counter()
    pairs = failures = 0
    for fam, radius in INTERSECTION_SETS:
        a = build(fam).closure.base if radius is None else word_ball(generators(fam), radius)
        k_const = certify_approximate(a).K_upper
        powers = {j: power_set(a, j) for j in (2, 3, 4, 6)}
        for h in standard_block_subgroups(a.dim).values():
            pairs += 1
            for k in (3, 4, 6):
                rec = intersect_with_subgroup(a, k_const, h, k, powers)
                cert = certify_approximate(rec.S)
                ok = rec.holds and cert.recheck(rec.S) and cert.K_upper == rec.K_S
                failures += not ok
    elapsed = time.perf_counter() - t0
    record(criterion_log, 5, "A^2 ∩ H is a 2K^3-approximate group with bounded powers",
           pairs >= 20 and failures == 0, elapsed, 300, f"{pairs} (A, H) pairs, {failures} failures")


# -- 6 --------------------------------------------------------------------------------

FIBER_SETS = [("heis:5", 1), ("heis:5", 2), ("zext(sym:3,2)", None), ("zext(sym:3,3)", 1),
              ("zext(sym:3,3)", None), ("zext(sym:3,4)", 1), ("zext(sym:3,5)", None)]


def test_fiber_lift(criterion_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(34)
    pairs = failures = 0
    for fam, radius in FIBER_SETS:
        a = build(fam).closure.base if radius is None else word_ball(generators(fam), radius)
        a2 = product_set(a, a)
        cube = product_set(a2, a)
        reps = [a2[c[0]] for c in central_classes(a2)]
        targets = [list(a), [a.identity()]]
        for _ in range(10):
            pick = rng.choice(len(reps), size=int(rng.integers(1, len(reps) + 1)), replace=False)
            targets.append([reps[int(i)] for i in sorted(pick)])
        dense = [g.to_dense() for g in a]
        oracle = fiber_counts(dense, [[g.to_dense() for g in x] for x in targets])
        for x, (image, image_in_x, hits) in zip(targets, oracle):
            rec = lift_fiber_bound(a, x, cube)
            pairs += 1
            agrees = (rec.image_size, rec.image_in_x, rec.cube_hits) == (image, image_in_x, hits)
            bound = hits >= Fraction(image_in_x, image) * len(a)
            failures += not (agrees and bound and rec.holds and rec.chain_ok)
    elapsed = time.perf_counter() - t0
    record(criterion_log, 6, "|A^3 ∩ pi^-1(X)| >= delta |A| through the centre quotient",
           pairs >= 50 and failures == 0, elapsed, 120, f"{pairs} (A, X) pairs, {failures} failures")


# -- 7, 8, 11 share one pipeline run per family ------------------------------------------

@pytest.fixture(scope="module")
def pipeline_runs():
    runs = {}
    for fam in PIPELINE_FAMILIES:
        a = build(fam).closure.base
        t0 = time.perf_counter()
        rep = diagonalizable_control(a)
        t1 = time.perf_counter()
        quot = normalizer_quotient_bound(a, rep) if rep.ok else None
        runs[fam] = {"A": a, "report": rep, "quotient": quot, "decompose_s": t1 - t0,
                     "quotient_s": time.perf_counter() - t1}
    return runs


def test_diagonalizable_control(criterion_log, pipeline_runs):
    bad = []
    for fam, run in pipeline_runs.items():
        a, rep = run["A"], run["report"]
        ok = (len(rep.steps) <= a.dim and rep.off_diagonal <= 1e-6 and rep.abelian
              and isinstance(rep.control, ControlCertificate) and rep.control.recheck(a))
        if not ok:
            bad.append(fam)
    elapsed = sum(r["decompose_s"] for r in pipeline_runs.values())
    largest = max(len(r["A"]) for r in pipeline_runs.values())
    record(criterion_log, 7, "diagonalizable control on exact family closures", not bad, elapsed,
           600, f"{len(pipeline_runs)} families up to order {largest}"
           + (f", failures {bad}" if bad else ""))


def test_normalizer_quotient(criterion_log, pipeline_runs):
    rng = np.random.default_rng(8)
    bad = []
    for fam, run in pipeline_runs.items():
        a, rep, q = run["A"], run["report"], run["quotient"]
        if q is None:
            bad.append(fam)
            continue
        classes = q.S.equal_classes
        samples = [torus_sample(q.S.Q, classes, rng) for _ in range(3)]
        normalizes = all(in_torus(g @ t @ g.conj().T, q.S.Q, classes)
                         for g in a.stack() for t in samples)
        a2 = product_set(a, a)
        s_square = sum(in_torus(g, q.S.Q, classes) for g in a2.stack())
        quotient = coset_count(list(a.stack()), q.S.Q, classes)
        ok = (normalizes and q.cube_size is not None
              and quotient == q.quotient_size and s_square == q.s_square
              and q.quotient_size * q.s_square <= q.cube_size <= rep.K_upper ** 2 * len(a))
        if fam.startswith("dih:") and int(fam[4:]) >= 3:
            ok &= q.quotient_size == 2
        if not ok:
            bad.append(fam)
    elapsed = sum(r["quotient_s"] for r in pipeline_runs.values())
    record(criterion_log, 8, "|pi(A)| |A^2 ∩ S| <= |A^3| <= K^2 |A| with S normalized by A",
           not bad, elapsed, None, f"{len(pipeline_runs)} runs" + (f", failures {bad}" if bad else ""))


# -- 9 --------------------------------------------------------------------------------

def test_weak_covering_property(criterion_log):
    t0 = time.perf_counter()
    h = hexagon_witness()
    v = check_weak_besicovitch(h)
    hexagon_ok = (len(h) == 7 and isinstance(v, CounterWitness)
                  and float(np.linalg.norm(v.point)) <= 1e-9 and open_ball_pair(h) is None)
    violations = {d: upper_bound_property_test(d, 10_000, seed=d)["violations"] for d in (1, 2, 3)}
    elapsed = time.perf_counter() - t0
    record(criterion_log, 9, "hexagon counter-witness and 3^d + 1 balls in dimensions 1..3",
           hexagon_ok and not any(violations.values()), elapsed, 120,
           f"hexagon {v.kind}, violations {violations}")


# -- 10 -------------------------------------------------------------------------------

def test_word_growth(criterion_log):
    t0 = time.perf_counter()
    cyc, _, _, hit = ball_sizes(generators("diag:1000003"), 200)
    cyclic_ok = not hit and cyc == [2 * r + 1 for r in range(201)]
    heis, _, _, _ = ball_sizes(generators("heis:101"), 8)
    heis_ok = heis == heisenberg_ball_sizes(101, 8)
    prof = growth_profile(generators("randpair:2:42"), 10, with_ratios=False)
    checked = [r for r in range(4, 11) if prof.reliable[r - 1]]
    free_ok = (checked == list(range(4, 11))
               and all(prof.sizes[r - 1] > 2 ** (0.5 * r) for r in checked)
               and prof.sizes == [free_ball_size(2, r) for r in range(1, 11)])
    elapsed = time.perf_counter() - t0
    record(criterion_log, 10, "cyclic, Heisenberg(101) and free-like ball growth",
           cyclic_ok and heis_ok and free_ok, elapsed, 600,
           f"free-like |ball_10| = {prof.sizes[-1]}, reliable radii {checked[0]}..{checked[-1]}"
           if checked else "no reliable radii")


# -- 11 -------------------------------------------------------------------------------

def test_exact_tolerant_consistency(criterion_log, pipeline_runs):
    t0 = time.perf_counter()
    bad = []
    for fam, run in pipeline_runs.items():
        a, rep, q = run["A"], run["report"], run["quotient"]
        ta = to_tolerant(a, TOLERANT_EPS)
        trep = diagonalizable_control(ta)
        tq = normalizer_quotient_bound(ta, trep) if trep.ok else None
        same = (trep.ok and len(trep.B) == len(rep.B)
                and cardinalities(trep.steps) == cardinalities(rep.steps)
                and cardinalities(trep.measured) == cardinalities(rep.measured)
                and tq is not None
                and (tq.quotient_size, tq.s_square, tq.cube_size)
                == (q.quotient_size, q.s_square, q.cube_size))
        gens = generators(fam)
        same &= ball_sizes(to_tolerant(gens, TOLERANT_EPS), 4)[0] == ball_sizes(gens, 4)[0]
        if len(a) <= 200:
            g = build(fam).closure
            tg = as_group(to_tolerant(g.base, TOLERANT_EPS))
            same &= tg.closed and (jordan_abelian_subgroup(tg, bruteforce_below=0).index
                                   == jordan_abelian_subgroup(g, bruteforce_below=0).index)
        if not same:
            bad.append(fam)
    elapsed = time.perf_counter() - t0
    record(criterion_log, 11, "tolerant reruns reproduce every exact cardinality", not bad,
           elapsed, None, f"{len(pipeline_runs)} families" + (f", mismatches {bad}" if bad else ""))
