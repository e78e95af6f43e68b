"""Named generating sets used as fixtures and oracles.

Family strings::

    sym:N            adjacent transpositions of Sym(N) as permutation matrices
    dih:M            diag(z, 1/z) with z = exp(2 pi i/M), plus the coordinate swap
    q8               iX and iZ in SU_2
    heis:M           clock and shift in U_M
    diag:a,b,...     one diagonal generator; integer q means 1/q, or give p/q
    randpair:N:SEED  two Haar-random elements of SU_N (tolerant regime)
    prod(F,G)        block direct product
    zext(F,q)        F together with the scalar exp(2 pi i/q)

Every generating set is symmetrized and contains the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapExceeded, InvalidSpec
from .jordan import DEFAULT_GROUP_CAP, FiniteGroupSet, group_closure
from .linalg import Dense, Monomial, UnitaryElement, as_matrix, random_unitary
from .sets import EXACT, MatrixSet, symmetrize, tolerant

MAX_SYM = 8
MAX_HEIS = 101
RANDOM_EPS_EQ = 1e-6


@dataclass(frozen=True)
class FamilySpec:
    name: str
    params: tuple = ()

    def __str__(self) -> str:
        if self.name == "prod":
            return f"prod({self.params[0]},{self.params[1]})"
        if self.name == "zext":
            return f"zext({self.params[0]},{self.params[1]})"
        if self.name == "diag":
            return "diag:" + ",".join(str(p) for p in self.params)
        return ":".join([self.name, *map(str, self.params)])


@dataclass
class Family:
    spec: FamilySpec
    generators: MatrixSet
    closure: FiniteGroupSet | None


def _split_top(s: str) -> list[str]:
    depth, parts, cur = 0, [], []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _int(tok: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InvalidSpec(f"{what}: expected an integer, got {tok!r}") from None


def parse_family(text: str) -> FamilySpec:
    t = text.strip()
    for name in ("prod", "zext"):
        if t.startswith(name + "(") and t.endswith(")"):
            args = _split_top(t[len(name) + 1:-1])
            if len(args) != 2:
                raise InvalidSpec(f"{name} takes two arguments")
            if name == "prod":
                return FamilySpec("prod", (parse_family(args[0]), parse_family(args[1])))
            q = _int(args[1], "zext order")
            if q < 1:
                raise InvalidSpec("zext order must be positive")
            return FamilySpec("zext", (parse_family(args[0]), q))
    head, _, rest = t.partition(":")
    if head == "q8":
        if rest:
            raise InvalidSpec("q8 takes no parameters")
        return FamilySpec("q8")
    if head in ("sym", "dih", "heis"):
        m = _int(rest, head)
        limits = {"sym": (1, MAX_SYM), "dih": (1, 10**6), "heis": (2, MAX_HEIS)}
        lo, hi = limits[head]
        if not lo <= m <= hi:
            raise InvalidSpec(f"{head} parameter must lie in [{lo}, {hi}]")
        return FamilySpec(head, (m,))
    if head == "diag":
        try:
            fr = tuple(Fraction(1, int(x)) if "/" not in x else Fraction(x)
                       for x in rest.split(","))
        except (ValueError, ZeroDivisionError):
            raise InvalidSpec(f"bad diagonal phases {rest!r}") from None
        if not fr:
            raise InvalidSpec("diag needs at least one entry")
        return FamilySpec("diag", tuple(str(f) for f in fr))
    if head == "randpair":
        bits = rest.split(":")
        if len(bits) != 2:
            raise InvalidSpec("randpair:N:SEED")
        n, seed = _int(bits[0], "randpair dim"), _int(bits[1], "randpair seed")
        if n < 1:
            raise InvalidSpec("randpair dimension must be positive")
        return FamilySpec("randpair", (n, seed))
    raise InvalidSpec(f"unknown family {text!r}")


def _direct_sum(g: UnitaryElement, h: UnitaryElement) -> UnitaryElement:
    if isinstance(g, Monomial) and isinstance(h, Monomial):
        perm = list(g.perm) + [p + g.dim for p in h.perm]
        return Monomial.from_phases(perm, list(g.phases) + list(h.phases))
    a, b = as_matrix(g), as_matrix(h)
    out = np.zeros((g.dim + h.dim,) * 2, dtype=complex)
    out[:g.dim, :g.dim] = a
    out[g.dim:, g.dim:] = b
    return Dense(out, check=False)


def _raw_generators(spec: FamilySpec) -> tuple[int, list[UnitaryElement], bool]:
    name, p = spec.name, spec.params
    if name == "sym":
        n = p[0]
        gens = []
        for i in range(n - 1):
            perm = list(range(n))
            perm[i], perm[i + 1] = perm[i + 1], perm[i]
            gens.append(Monomial(perm, [0] * n))
        return n, gens, True
    if name == "dih":
        m = p[0]
        rot = Monomial.diagonal([Fraction(1, m), Fraction(-1, m) % 1])
        return 2, [rot, Monomial([1, 0], [0, 0])], True
    if name == "q8":
        ix = Monomial.from_phases([1, 0], [Fraction(1, 4)] * 2)
        iz = Monomial.diagonal([Fraction(1, 4), Fraction(3, 4)])
        return 2, [ix, iz], True
    if name == "heis":
        m = p[0]
        clock = Monomial(range(m), list(range(m)), m)
        shift = Monomial([(j + 1) % m for j in range(m)], [0] * m)
        return m, [clock, shift], True
    if name == "diag":
        fr = [Fraction(x) % 1 for x in p]
        return len(fr), [Monomial.diagonal(fr)], True
    if name == "randpair":
        n, seed = p
        rng = np.random.default_rng(seed)
        return n, [Dense(random_unitary(n, rng, special=True)) for _ in range(2)], False
    if name == "zext":
        n, gens, exact = _raw_generators(p[0])
        z = Monomial.scalar(n, 1, p[1])
        return n, gens + [z if exact else Dense(z.to_dense(), check=False)], exact
    if name == "prod":
        n1, g1, e1 = _raw_generators(p[0])
        n2, g2, e2 = _raw_generators(p[1])
        exact = e1 and e2
        id1 = Monomial.identity(n1) if exact else Dense.identity(n1)
        id2 = Monomial.identity(n2) if exact else Dense.identity(n2)
        gens = [_direct_sum(g, id2) for g in g1] + [_direct_sum(id1, h) for h in g2]
        if not exact:
            gens = [Dense(as_matrix(g), check=False) for g in gens]
        return n1 + n2, gens, exact
    raise InvalidSpec(f"unknown family {name!r}")


def generators(spec: FamilySpec | str, eps_eq: float = RANDOM_EPS_EQ) -> MatrixSet:
    """Symmetric generating set (identity included) of a family."""
    if isinstance(spec, str):
        spec = parse_family(spec)
    n, gens, exact = _raw_generators(spec)
    regime = EXACT if exact else tolerant(eps_eq)
    return symmetrize(MatrixSet(n, regime, gens)).canonical()


def build(spec: FamilySpec | str, cap: int = DEFAULT_GROUP_CAP,
          eps_eq: float = RANDOM_EPS_EQ) -> Family:
    """Generators plus the finite closure when it is exact and at most ``cap`` elements."""
    if isinstance(spec, str):
        spec = parse_family(spec)
    gens = generators(spec, eps_eq)
    closure = None
    if gens.regime.exact:
        try:
            closure = group_closure(gens, cap)
        except CapExceeded:
            closure = None
    return Family(spec, gens, closure)
