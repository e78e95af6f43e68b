"""Matrix arithmetic over U_n(C).

Two element representations are supported:

* :class:`Monomial` -- a generalized permutation matrix whose nonzero entries
  are roots of unity ``exp(2*pi*i*p/q)``.  Products, inverses and equality are
  exact (integer arithmetic on the phases).
* :class:`Dense` -- an arbitrary unitary matrix stored as a complex numpy
  array, compared under a tolerance.

Hilbert-Schmidt geometry, scalar tests and the spectral decomposition of
normal matrices operate on either kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatch, NotUnitary, NumericalBreakdown

EPS_UNIT = 1e-8
EPS_SPEC = 1e-6
EPS_COMM = 1e-6
KEY_DECIMALS = 9

TWO_PI = 2.0 * math.pi


class Monomial:
    """Exact monomial unitary: column ``j`` holds ``exp(2*pi*i*num[j]/den)`` in row ``perm[j]``.

    Phases are kept over a common denominator reduced to lowest terms, so two
    monomials are equal iff their ``(perm, num, den)`` triples are equal.
    """

    __slots__ = ("perm", "num", "den", "_hash")

    def __init__(self, perm: Sequence[int], num: Sequence[int], den: int = 1):
        perm = tuple(int(p) for p in perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"not a permutation: {perm}")
        if len(num) != len(perm):
            raise DimensionMismatch("perm and phases differ in length")
        if den <= 0:
            raise ValueError("denominator must be positive")
        num = [int(p) % den for p in num]
        g = math.gcd(den, *num)
        self.perm = perm
        self.num = tuple(p // g for p in num)
        self.den = den // g
        self._hash = hash((self.perm, self.num, self.den))

    @classmethod
    def _raw(cls, perm: tuple, num: tuple, den: int) -> "Monomial":
        # caller guarantees a valid permutation and reduced, in-range phases
        obj = object.__new__(cls)
        obj.perm = perm
        obj.num = num
        obj.den = den
        obj._hash = hash((perm, num, den))
        return obj

    @classmethod
    def from_phases(cls, perm: Sequence[int], phases: Sequence) -> "Monomial":
        """Build from a permutation and rotation numbers (``Fraction`` or p/q pairs)."""
        fr = [Fraction(p) if not isinstance(p, tuple) else Fraction(*p) for p in phases]
        den = math.lcm(*(f.denominator for f in fr)) if fr else 1
        return cls(perm, [f.numerator * (den // f.denominator) for f in fr], den)

    @classmethod
    def identity(cls, n: int) -> "Monomial":
        return cls._raw(tuple(range(n)), (0,) * n, 1)

    @classmethod
    def scalar(cls, n: int, p: int, q: int) -> "Monomial":
        return cls(range(n), [p] * n, q)

    @classmethod
    def diagonal(cls, phases: Sequence) -> "Monomial":
        return cls.from_phases(range(len(phases)), phases)

    @property
    def dim(self) -> int:
        return len(self.perm)

    @property
    def phases(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(p, self.den) for p in self.num)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Monomial):
            return NotImplemented
        return self._hash == other._hash and self.perm == other.perm \
            and self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        ph = ",".join(f"{p}/{self.den}" for p in self.num)
        return f"Monomial(perm={list(self.perm)}, phases=[{ph}])"

    def __matmul__(self, other: "Monomial") -> "Monomial":
        if not isinstance(other, Monomial):
            return Dense(self.to_dense() @ as_matrix(other), check=False)
        sp, op = self.perm, other.perm
        if len(sp) != len(op):
            raise DimensionMismatch("dimension mismatch in product")
        d1, d2 = self.den, other.den
        if d1 == d2:
            den = d1
            sn, on = self.num, other.num
        else:
            den = d1 * d2 // math.gcd(d1, d2)
            f1, f2 = den // d1, den // d2
            sn = [x * f1 for x in self.num]
            on = [x * f2 for x in other.num]
        perm = tuple([sp[j] for j in op])
        num = [(on[j] + sn[op[j]]) % den for j in range(len(op))]
        g = math.gcd(den, *num)
        if g > 1:
            den //= g
            num = [x // g for x in num]
        return Monomial._raw(perm, tuple(num), den)

    def inverse(self) -> "Monomial":
        n = len(self.perm)
        perm = [0] * n
        num = [0] * n
        den = self.den
        for j, i in enumerate(self.perm):
            perm[i] = j
            num[i] = (-self.num[j]) % den
        return Monomial._raw(tuple(perm), tuple(num), den)

    def is_identity(self) -> bool:
        return self.den == 1 and self.perm == tuple(range(len(self.perm)))

    def to_dense(self) -> np.ndarray:
        n = len(self.perm)
        m = np.zeros((n, n), dtype=complex)
        ang = TWO_PI * np.asarray(self.num, dtype=float) / self.den
        m[list(self.perm), np.arange(n)] = np.exp(1j * ang)
        return m

    def determinant_phase(self) -> Fraction:
        """Rotation number of ``det`` in [0, 1)."""
        theta = Fraction(sum(self.num), self.den)
        if permutation_sign(self.perm) < 0:
            theta += Fraction(1, 2)
        return theta - math.floor(theta)

    def with_phase_shift(self, shift: Fraction) -> "Monomial":
        """Multiply by the scalar ``exp(2*pi*i*shift)``."""
        return self @ Monomial.scalar(self.dim, shift.numerator, shift.denominator)


class Dense:
    """A unitary matrix held as a read-only complex array."""

    __slots__ = ("m",)

    def __init__(self, matrix, check: bool = True, eps_unit: float = EPS_UNIT):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        if check:
            err = hs_norm(m.conj().T @ m - np.eye(m.shape[0]))
            if err > eps_unit:
                raise NotUnitary(f"||M*M - I|| = {err:.3e} exceeds {eps_unit:.1e}")
        m.setflags(write=False)
        self.m = m

    @classmethod
    def identity(cls, n: int) -> "Dense":
        return cls(np.eye(n), check=False)

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    def __matmul__(self, other) -> "Dense":
        return Dense(self.m @ as_matrix(other), check=False)

    def inverse(self) -> "Dense":
        return Dense(self.m.conj().T, check=False)

    def is_identity(self, tol: float = 0.0) -> bool:
        return hs_distance(self.m, np.eye(self.dim)) <= tol

    def to_dense(self) -> np.ndarray:
        return self.m

    def __repr__(self) -> str:
        return f"Dense(n={self.dim})"


UnitaryElement = Union[Monomial, Dense]


def as_matrix(g) -> np.ndarray:
    if isinstance(g, (Monomial, Dense)):
        return g.to_dense()
    return np.asarray(g, dtype=complex)


def to_dense_element(g: UnitaryElement) -> Dense:
    return g if isinstance(g, Dense) else Dense(g.to_dense(), check=False)


def permutation_sign(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def canonical_key(g: UnitaryElement) -> tuple:
    """Sort key: matrix entries rounded to ``KEY_DECIMALS``, row-major, (re, im) interleaved."""
    m = as_matrix(g)
    flat = np.round(m.reshape(-1).view(float), KEY_DECIMALS) + 0.0
    return tuple(flat.tolist())


# -- Hilbert-Schmidt geometry ------------------------------------------------

def hs_norm(m) -> float:
    m = as_matrix(m)
    return float(np.sqrt(np.sum(m.real ** 2 + m.imag ** 2)))


def hs_distance(m1, m2) -> float:
    a, b = as_matrix(m1), as_matrix(m2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return hs_norm(a - b)


def is_unitary(g, eps_unit: float = EPS_UNIT) -> bool:
    if isinstance(g, Monomial):
        return True
    m = as_matrix(g)
    return hs_norm(m.conj().T @ m - np.eye(m.shape[0])) <= eps_unit


def commutator(g: UnitaryElement, h: UnitaryElement) -> UnitaryElement:
    """Group commutator ``g h g^-1 h^-1``."""
    return g @ h @ g.inverse() @ h.inverse()


def is_scalar_multiple_of_identity(g: UnitaryElement, tol: float = EPS_SPEC) -> complex | None:
    """Return the unit-modulus scalar ``lam`` with ``g = lam * id`` (within ``tol``), else None."""
    if isinstance(g, Monomial):
        if g.perm != tuple(range(g.dim)) or len(set(g.num)) != 1:
            return None
        return complex(np.exp(1j * TWO_PI * g.num[0] / g.den))
    m = as_matrix(g)
    mean = np.trace(m) / m.shape[0]
    if abs(mean) < 1e-12:
        return None
    lam = mean / abs(mean)
    if hs_norm(m - lam * np.eye(m.shape[0])) <= tol:
        return complex(lam)
    return None


def commutes_within(g: UnitaryElement, h: UnitaryElement, eps_comm: float = EPS_COMM) -> bool:
    if isinstance(g, Monomial) and isinstance(h, Monomial):
        return g @ h == h @ g
    a, b = as_matrix(g), as_matrix(h)
    if a.shape != b.shape:
        raise DimensionMismatch("dimension mismatch")
    return hs_norm(a @ b - b @ a) <= eps_comm


def determinant_root(g: UnitaryElement) -> UnitaryElement:
    """Scale ``g`` into SU_n by the n-th root of det with argument in [0, 2*pi/n)."""
    n = g.dim
    if isinstance(g, Monomial):
        theta = g.determinant_phase()
        return g.with_phase_shift(-theta / n)
    m = as_matrix(g)
    theta = (np.angle(np.linalg.det(m)) / TWO_PI) % 1.0
    if theta > 1.0 - 1e-9:
        theta = 0.0
    return Dense(m * np.exp(-1j * TWO_PI * theta / n), check=False)


def projective_normal_form(g: UnitaryElement, tol: float = 1e-6) -> UnitaryElement:
    """Canonical representative of the coset ``gZ`` of the centre.

    The first row-major entry of maximal modulus is rotated onto the positive
    real axis.
    """
    if isinstance(g, Monomial):
        inv = [0] * g.dim
        for j, i in enumerate(g.perm):
            inv[i] = j
        shift = Fraction(g.num[inv[0]], g.den)
        return g.with_phase_shift(-shift)
    m = as_matrix(g)
    flat = m.reshape(-1)
    mags = np.abs(flat)
    idx = int(np.argmax(mags >= mags.max() - tol))
    z = flat[idx]
    return Dense(m * (abs(z) / z), check=False)


# -- spectral decomposition --------------------------------------------------

def _jacobi_rotation(h: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = h[p, q]
    b = abs(apq)
    if b == 0.0:
        return
    a = h[p, p].real
    c = h[q, q].real
    tau = (c - a) / (2.0 * b)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    cs = 1.0 / math.sqrt(1.0 + t * t)
    sn = t * cs
    ph = np.conj(apq) / b
    g = np.array([[cs, sn], [-ph * sn, ph * cs]])
    idx = [p, q]
    h[:, idx] = h[:, idx] @ g
    h[idx, :] = g.conj().T @ h[idx, :]
    v[:, idx] = v[:, idx] @ g


def _offdiag(h: np.ndarray) -> float:
    off = h - np.diag(np.diag(h))
    return float(np.sqrt(np.sum(off.real ** 2 + off.imag ** 2)))


def jacobi_eigh(hmat: np.ndarray, max_sweeps: int | None = None, tol: float = 1e-14):
    """Cyclic complex Jacobi for a Hermitian matrix; returns (real eigenvalues, unitary V)."""
    h = np.array(hmat, dtype=complex)
    n = h.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return h.diagonal().real.copy(), v
    if max_sweeps is None:
        max_sweeps = 100 * n * n
    scale = max(hs_norm(h), 1.0)
    for _ in range(max_sweeps):
        if _offdiag(h) <= tol * scale:
            return h.diagonal().real.copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(h[p, q]) > 1e-300:
                    _jacobi_rotation(h, v, p, q)
    if _offdiag(h) <= 1e-10 * scale:
        return h.diagonal().real.copy(), v
    raise NumericalBreakdown(f"Jacobi did not converge in {max_sweeps} sweeps")


def _runs(values: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    for i in order:
        if groups and values[i] - values[groups[-1][-1]] <= tol:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return groups


def joint_diagonalize(h1: np.ndarray, h2: np.ndarray, max_sweeps: int | None = None) -> np.ndarray:
    """Common eigenbasis of two commuting Hermitian matrices.

    A generic real combination is diagonalized first; any near-degenerate
    eigenspace is then refined by diagonalizing the compressions of ``h2`` and
    ``h1`` inside it.
    """
    t = 0.5772156649015329
    _, v = jacobi_eigh(h1 + t * h2, max_sweeps)
    for hx in (h2, h1):
        comb = np.real(np.diag(v.conj().T @ (h1 + t * h2) @ v))
        for grp in _runs(comb, 1e-7):
            if len(grp) < 2:
                continue
            sub = v[:, grp]
            _, u = jacobi_eigh(sub.conj().T @ hx @ sub, max_sweeps)
            v[:, grp] = sub @ u
    return v


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray           # unit-circle eigenvalues, ordered by cluster
    eigenvectors: np.ndarray          # unitary Q with g = Q diag(eigenvalues) Q*
    clusters: tuple[tuple[int, ...], ...]   # contiguous index blocks of equal eigenvalues

    @property
    def multiplicities(self) -> list[int]:
        return [len(c) for c in self.clusters]

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return q @ np.diag(self.eigenvalues) @ q.conj().T


def _angle01(z: complex) -> float:
    a = (math.atan2(z.imag, z.real) / TWO_PI) % 1.0
    return 0.0 if a > 1.0 - 1e-12 else a


def cluster_eigenvalues(values: Sequence[complex], eps: float) -> list[list[int]]:
    """Partition indices by the transitive closure of ``|l_i - l_j| <= eps``."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= eps:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def spectral_decompose(g: UnitaryElement, eps_spec: float = EPS_SPEC,
                       eps_unit: float = EPS_UNIT) -> SpectralDecomposition:
    """Eigen-decomposition of a unitary matrix via joint Jacobi on its Hermitian parts."""
    m = as_matrix(g)
    n = m.shape[0]
    if not isinstance(g, Monomial) and hs_norm(m.conj().T @ m - np.eye(n)) > eps_unit:
        raise NotUnitary("spectral_decompose requires a unitary input")
    h1 = (m + m.conj().T) / 2.0
    h2 = (m - m.conj().T) / 2.0j
    q = joint_diagonalize(h1, h2, 100 * n * n)
    lam = np.diag(q.conj().T @ m @ q).copy()
    lam = lam / np.abs(lam)
    order = sorted(range(n), key=lambda i: _angle01(lam[i]))
    lam = lam[order]
    q = q[:, order]
    groups = cluster_eigenvalues(lam, eps_spec)
    groups.sort(key=min)
    perm = [i for grp in groups for i in grp]
    lam = lam[perm]
    q = q[:, perm]
    clusters = []
    pos = 0
    for grp in groups:
        clusters.append(tuple(range(pos, pos + len(grp))))
        pos += len(grp)
    dec = SpectralDecomposition(lam, q, tuple(clusters))
    err = hs_norm(m - dec.reconstruct())
    if err > n * eps_spec:
        raise NumericalBreakdown(f"reconstruction error {err:.3e} exceeds {n * eps_spec:.1e}")
    return dec


def monomial_spectrum(g: Monomial) -> list[Fraction]:
    """Exact eigenvalue rotation numbers of a monomial matrix, sorted in [0, 1).

    A cycle of length L whose phases sum to ``phi`` contributes the L-th roots
    of ``exp(2*pi*i*phi)``.
    """
    seen = [False] * g.dim
    out: list[Fraction] = []
    for start in range(g.dim):
        if seen[start]:
            continue
        cycle = []
        j = start
        while not seen[j]:
            seen[j] = True
            cycle.append(j)
            j = g.perm[j]
        phi = Fraction(sum(g.num[c] for c in cycle), g.den)
        length = len(cycle)
        for k in range(length):
            f = (phi + k) / length
            out.append(f - math.floor(f))
    return sorted(out)


def random_unitary(n: int, rng: np.random.Generator, special: bool = False) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    if special:
        q = q / np.linalg.det(q) ** (1.0 / n)
    return q
