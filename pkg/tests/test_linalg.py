from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxgroup.errors import DimensionMismatch, NotUnitary
from approxgroup.linalg import (Dense, Monomial, canonical_key, commutes_within, determinant_root,
                                hs_distance, hs_norm, is_scalar_multiple_of_identity,
                                monomial_spectrum, projective_normal_form, random_unitary,
                                spectral_decompose)

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")

PAULI_X = Monomial([1, 0], [0, 0], 1)
PAULI_Z = Monomial.diagonal([Fraction(0), Fraction(1, 2)])

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 6)


def test_hs_norm_examples():
    assert hs_norm(np.eye(3)) == pytest.approx(math.sqrt(3))
    assert hs_norm(np.zeros((3, 3))) == 0
    assert hs_norm(np.diag([1, -1])) == pytest.approx(math.sqrt(2))


def test_hs_distance_examples():
    assert hs_distance(np.eye(2), np.eye(2)) == 0
    assert hs_distance(1j * np.eye(4), np.eye(4)) == pytest.approx(2 * math.sqrt(2))
    for n in (3, 5):
        for r in range(1, n):
            lam = np.exp(2j * np.pi * r / n)
            assert hs_distance(lam * np.eye(n), np.eye(n)) == pytest.approx(abs(lam - 1) * math.sqrt(n))


def test_hs_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        hs_distance(np.eye(2), np.eye(3))


def test_scalar_detection():
    assert is_scalar_multiple_of_identity(Monomial.identity(3)) == pytest.approx(1)
    assert is_scalar_multiple_of_identity(np.diag([1, -1])) is None
    w = np.exp(2j * np.pi / 3)
    assert is_scalar_multiple_of_identity(Monomial.scalar(3, 1, 3)) == pytest.approx(w)


def test_spectral_examples():
    d = spectral_decompose(Dense(np.diag([1, 1, -1]).astype(complex)))
    assert sorted(d.multiplicities) == [1, 2]
    assert spectral_decompose(Monomial.identity(4)).multiplicities == [4]
    clock = Monomial.diagonal([Fraction(k, 4) for k in range(4)])
    d = spectral_decompose(clock)
    assert d.multiplicities == [1, 1, 1, 1]
    got = sorted(((np.angle(z) / (2 * np.pi)) % 1.0) for z in d.eigenvalues)
    assert got == pytest.approx([float(f) for f in monomial_spectrum(clock)])


def test_spectral_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        spectral_decompose(np.array([[2.0, 0], [0, 1]]))


def test_pauli_pair_does_not_commute():
    assert not commutes_within(PAULI_X, PAULI_Z)
    xz = (PAULI_X @ PAULI_Z).to_dense() - (PAULI_Z @ PAULI_X).to_dense()
    assert hs_norm(xz) == pytest.approx(2 * math.sqrt(2))
    assert commutes_within(PAULI_X, Monomial.identity(2))
    assert commutes_within(PAULI_Z, Monomial.diagonal([Fraction(1, 3), Fraction(1, 5)]))


def test_monomial_arithmetic_matches_dense():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 6))
        g = Monomial(rng.permutation(n), rng.integers(0, 12, n), 12)
        h = Monomial(rng.permutation(n), rng.integers(0, 12, n), 12)
        assert np.allclose((g @ h).to_dense(), g.to_dense() @ h.to_dense())
        assert (g @ g.inverse()).is_identity()
        assert np.allclose(g.inverse().to_dense(), g.to_dense().conj().T)
        det = np.exp(2j * np.pi * float(g.determinant_phase()))
        assert np.isclose(det, np.linalg.det(g.to_dense()))


def test_projective_normal_form_identifies_scalar_multiples():
    g = Monomial([1, 2, 0], [1, 0, 2], 6)
    for p in range(6):
        assert projective_normal_form(g @ Monomial.scalar(3, p, 6)) == projective_normal_form(g)


def test_determinant_root_is_special():
    g = Dense(random_unitary(3, np.random.default_rng(0)))
    assert np.isclose(np.linalg.det(determinant_root(g).to_dense()), 1)


@settings(max_examples=60, deadline=None)
@given(seeds, dims)
def test_bi_invariance(seed, n):
    rng = np.random.default_rng(seed)
    u, v = random_unitary(n, rng), random_unitary(n, rng)
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert abs(hs_norm(u @ m @ v) - hs_norm(m)) <= 1e-9 * max(1.0, hs_norm(m))


@settings(max_examples=60, deadline=None)
@given(seeds, dims)
def test_submultiplicativity(seed, n):
    rng = np.random.default_rng(seed)
    m1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert hs_norm(m1 @ m2) <= hs_norm(m1) * hs_norm(m2) + 1e-9


@pytest.mark.parametrize("n", range(2, 9))
def test_spectral_round_trip(n):
    rng = np.random.default_rng(100 + n)
    eps = 1e-6
    for _ in range(1000):
        u = random_unitary(n, rng)
        d = spectral_decompose(u, eps)
        assert hs_norm(u - d.reconstruct()) <= n * eps
        q = d.eigenvectors
        assert np.allclose(q.conj().T @ q, np.eye(n), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_spectral_recovers_degenerate_eigenplanes(seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(4, rng)
    lam, mu = np.exp(0.4j), np.exp(2.1j)
    g = u @ np.diag([lam, lam, mu, mu]) @ u.conj().T
    d = spectral_decompose(Dense(g))
    assert d.multiplicities == [2, 2]
    for cl in d.clusters:
        vecs = d.eigenvectors[:, list(cl)]
        z = d.eigenvalues[cl[0]]
        assert np.allclose(g @ vecs, z * vecs, atol=1e-8)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5), seeds)
def test_canonical_key_is_deterministic(n, seed):
    rng = np.random.default_rng(seed)
    g = Monomial(rng.permutation(n), rng.integers(0, 8, n), 8)
    h = Monomial(list(g.perm), list(g.num), g.den)
    assert canonical_key(g) == canonical_key(h)
    assert hash(g) == hash(h)
