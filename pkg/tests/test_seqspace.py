"""Banach algebra structure of the coefficient spaces."""

import numpy as np
import pytest

from connorb.interval import CArray, Interval
from connorb.seqspace import (
    ChebSeq,
    Involution,
    TaylorArray,
    cheb_conv,
    cheb_opnorm_matrix,
    graded_lex,
    star,
    taylor_conv,
    taylor_opnorm_columns,
)

NU2 = Interval(2.0)
NU = Interval.from_decimal("1.5")


def random_cheb(rng, N, nu, n=1):
    data = rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n))
    return ChebSeq(CArray.exact(data), nu)


def random_taylor(rng, K, nu, n=1):
    shape = tuple(k + 1 for k in K) + (n,)
    data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return TaylorArray(CArray.exact(data), nu)


def test_cheb_norm_examples():
    z = ChebSeq.zeros(4, 1, NU2)
    assert z.norm().hi == 0.0
    e1 = ChebSeq.basis(1, NU2)
    nrm = e1.norm()
    assert nrm.contains(4.0) and nrm.width() < 1e-12


def test_corner_points_have_unit_norm():
    for k in range(6):
        xi = ChebSeq.corner(k, NU)
        nrm = xi.norm()
        assert nrm.contains(1.0) and nrm.width() < 1e-12
    for k in [(0, 0), (1, 2), (3, 0), (2, 2)]:
        xi = TaylorArray.corner(k, NU)
        nrm = xi.norm()
        assert nrm.contains(1.0) and nrm.width() < 1e-12


def test_cheb_conv_identity_and_e1_squared():
    rng = np.random.default_rng(0)
    b = random_cheb(rng, 5, NU2)
    e0 = ChebSeq.basis(0, NU2)
    prod = cheb_conv(e0, b)
    assert prod.support == 5
    assert np.allclose(prod.mid(), b.mid())
    e1 = ChebSeq.basis(1, NU2)
    sq = cheb_conv(e1, e1)
    # brute force over index pairs (1,-1), (-1,1), (1,1): 2 e_0 + e_2
    assert np.allclose(sq.mid().ravel(), [2.0, 0.0, 1.0])


def test_cheb_conv_matches_bruteforce_symmetric_convolution():
    rng = np.random.default_rng(1)
    a = random_cheb(rng, 4, NU)
    b = random_cheb(rng, 5, NU)
    prod = cheb_conv(a, b)
    am, bm = a.mid()[:, 0], b.mid()[:, 0]

    def two_sided(c, k):
        return c[abs(k)] if abs(k) < len(c) else 0.0

    for k in range(prod.support):
        exact = sum(two_sided(am, k1) * two_sided(bm, k - k1)
                    for k1 in range(-10, 11))
        got = prod.mid()[k, 0]
        assert abs(got - exact) < 1e-12
        assert prod.coeffs.at((k, 0)).contains(exact)


def test_banach_algebra_submultiplicativity_cheb():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a = random_cheb(rng, rng.integers(1, 8), NU)
        b = random_cheb(rng, rng.integers(1, 8), NU)
        lhs = cheb_conv(a, b).norm().lo
        rhs = a.norm().hi * b.norm().hi
        assert lhs <= rhs * (1 + 1e-12)


def test_banach_algebra_submultiplicativity_taylor():
    rng = np.random.default_rng(3)
    for _ in range(100):
        K1 = tuple(rng.integers(0, 4, size=2))
        K2 = tuple(rng.integers(0, 4, size=2))
        p = random_taylor(rng, K1, NU)
        q = random_taylor(rng, K2, NU)
        lhs = taylor_conv(p, q).norm().lo
        rhs = p.norm().hi * q.norm().hi
        assert lhs <= rhs * (1 + 1e-12)


def test_taylor_conv_examples():
    rng = np.random.default_rng(4)
    q = random_taylor(rng, (2, 2), NU)
    d0 = TaylorArray.delta((0, 0), NU)
    prod = taylor_conv(d0, q)
    assert np.allclose(prod.mid(), q.mid())
    d10 = TaylorArray.delta((1, 0), NU)
    d01 = TaylorArray.delta((0, 1), NU)
    prod2 = taylor_conv(d10, d01)
    expect = np.zeros((2, 2, 1), dtype=complex)
    expect[1, 1, 0] = 1.0
    assert np.allclose(prod2.mid(), expect)


def test_cheb_opnorm_examples():
    eye = np.eye(6)
    nrm = cheb_opnorm_matrix(eye, NU, NU)
    assert abs(nrm.hi - 1.0) < 1e-12
    # single column M[:,0] = e_1 with nu2 = 2: column norm 2*1*2, weight 1
    M = np.zeros((3, 1))
    M[1, 0] = 1.0
    nrm = cheb_opnorm_matrix(M, NU2, NU2)
    assert abs(nrm.hi - 4.0) < 1e-12
    # diagonal diag(1, 1/2, 1/4, ...) has norm 1 (attained at column 0)
    D = np.diag(0.5 ** np.arange(6))
    nrm = cheb_opnorm_matrix(D, NU, NU)
    assert abs(nrm.hi - 1.0) < 1e-12


def test_cheb_opnorm_dominates_rayleigh_quotients():
    rng = np.random.default_rng(5)
    for _ in range(5):
        M = rng.standard_normal((7, 7))
        bound = cheb_opnorm_matrix(M, NU, NU2).hi
        for _ in range(200):
            x = rng.standard_normal(7) * rng.uniform(0, 1, 7)
            xs = ChebSeq(CArray.exact(x.astype(complex)[:, None]), NU)
            img = ChebSeq(CArray.exact((M @ x).astype(complex)[:, None]), NU2)
            assert img.norm().lo <= bound * xs.norm().hi * (1 + 1e-10)


def test_taylor_opnorm_multiplication_operator():
    rng = np.random.default_rng(6)
    p = random_taylor(rng, (2, 2), NU)
    pnorm = p.norm()

    def evaluator(k):
        xi = TaylorArray.corner(k, NU)
        return taylor_conv(p, xi).norm().hi

    # multiplication by p attains ||p|| once the scan covers the support
    got = taylor_opnorm_columns(evaluator, (4, 4), NU)
    assert got.hi >= pnorm.lo * (1 - 1e-12)
    assert got.hi <= pnorm.hi * (1 + 1e-10)


def test_star_involution_properties():
    rng = np.random.default_rng(7)
    inv = Involution(d=2, pairs=1)
    q = random_taylor(rng, (3, 3), NU, n=2)
    qs = star(q, inv)
    qss = star(qs, inv)
    assert np.allclose(qss.mid(), q.mid())
    assert abs(qs.norm().hi - q.norm().hi) < 1e-12
    # definition unrolled: q_{(1,0)} = i  =>  (q*)_{(0,1)} = -i
    q2 = TaylorArray.zeros((1, 1), 1, NU)
    q2.coeffs[1, 0, 0] = 1j
    q2s = star(q2, inv)
    assert np.allclose(q2s.mid()[0, 1, 0], -1j)
    # real array with no pairs is unchanged
    inv0 = Involution(d=2, pairs=0)
    r = TaylorArray(CArray.exact(rng.standard_normal((3, 3, 1)).astype(complex)), NU)
    assert np.allclose(star(r, inv0).mid(), r.mid())


def test_star_on_eigenvalue_vector():
    inv = Involution(d=3, pairs=1)
    lam = np.array([-1 + 2j, -1 - 2j, -3.0 + 0j])
    assert np.allclose(star(lam, inv), lam)


def test_graded_lex_ordering():
    idx = graded_lex((2, 2))
    degs = idx.sum(axis=1)
    assert np.all(np.diff(degs) >= 0)
    assert idx.shape == (9, 2)
    assert tuple(idx[0]) == (0, 0)


def test_serialization_roundtrip_bit_exact():
    rng = np.random.default_rng(8)
    a = random_cheb(rng, 6, Interval.from_decimal("1.1967"), n=2)
    a.nu_text = "1.1967"
    d = a.to_dict()
    import json

    b = ChebSeq.from_dict(json.loads(json.dumps(d)))
    assert np.array_equal(a.coeffs.re.lo, b.coeffs.re.lo)
    assert np.array_equal(a.coeffs.im.hi, b.coeffs.im.hi)
    assert (a.nu.lo, a.nu.hi) == (b.nu.lo, b.nu.hi)

    p = random_taylor(rng, (2, 3), NU, n=2)
    d2 = p.to_dict()
    q = TaylorArray.from_dict(json.loads(json.dumps(d2)))
    assert np.array_equal(p.coeffs.re.hi, q.coeffs.re.hi)
    assert np.array_equal(p.coeffs.im.lo, q.coeffs.im.lo)
