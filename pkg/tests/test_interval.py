"""Containment and monotonicity checks for the interval layer.

Expected values follow the exact-rational oracle: every sampled operation is
replayed in Fraction arithmetic and the result must lie inside the computed
enclosure.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from connorb.interval import (
    CArray,
    ComplexInterval,
    IArray,
    Interval,
    cmatmul,
    iconvolve,
    imatmul,
    imatvec,
    point_matmul,
    sum_upper,
)


def frac(x):
    return Fraction(x)


def test_exact_endpoint_examples():
    a, b = Interval(1, 2), Interval(3, 4)
    s = a + b
    assert s.lo <= 4.0 <= s.hi + 1e-15 and s.lo - 1e-15 <= 6.0 <= s.hi
    assert 4.0 - s.lo < 1e-14 and s.hi - 6.0 < 1e-14
    m = Interval(-1, 1) * Interval(-1, 1)
    assert m.contains(-1.0) and m.contains(1.0) and m.width() < 2.0 + 1e-14


def test_division_encloses_third_with_tight_width():
    q = Interval(1, 1) / Interval(3, 3)
    exact = Fraction(1, 3)
    assert frac(q.lo) <= exact <= frac(q.hi)
    assert q.hi - q.lo <= 2 * math.ulp(1.0 / 3.0)


def test_division_by_zero_interval_raises():
    with pytest.raises(ZeroDivisionError):
        Interval(1) / Interval(-1, 1)


def test_nan_and_inverted_endpoints_rejected():
    with pytest.raises(ValueError):
        Interval(float("nan"))
    with pytest.raises(ValueError):
        Interval(2, 1)


def test_containment_random_point_pairs():
    rng = np.random.default_rng(42)
    xs = rng.uniform(-50, 50, size=10_000)
    ys = rng.uniform(-50, 50, size=10_000)
    for x, y in zip(xs, ys):
        a, b = Interval(x), Interval(y)
        fx, fy = frac(x), frac(y)
        assert frac((a + b).lo) <= fx + fy <= frac((a + b).hi)
        assert frac((a - b).lo) <= fx - fy <= frac((a - b).hi)
        assert frac((a * b).lo) <= fx * fy <= frac((a * b).hi)
        if abs(y) > 1e-6:
            q = a / b
            assert frac(q.lo) <= fx / fy <= frac(q.hi)


def test_inclusion_monotonicity():
    rng = np.random.default_rng(7)
    for _ in range(300):
        lo1, w1, lo2, w2 = rng.uniform(-5, 5, 4)
        a = Interval(lo1, lo1 + abs(w1))
        b = Interval(lo2, lo2 + abs(w2))
        A = Interval(a.lo - 0.3, a.hi + 0.7)
        B = Interval(b.lo - 0.1, b.hi + 0.2)
        for op in (lambda u, v: u + v, lambda u, v: u - v, lambda u, v: u * v):
            small, big = op(a, b), op(A, B)
            assert big.lo <= small.lo and small.hi <= big.hi


def test_from_decimal_is_tightest():
    iv = Interval.from_decimal("1.1967")
    assert frac(iv.lo) <= Fraction("1.1967") <= frac(iv.hi)
    assert iv.hi - iv.lo <= math.ulp(1.1967)
    exact = Interval.from_decimal("0.5")
    assert exact.lo == exact.hi == 0.5


def test_power_and_sqrt_and_log():
    x = Interval(2, 3)
    p = x ** 3
    assert p.contains(8.0) and p.contains(27.0)
    sym = Interval(-2, 3) ** 2
    assert sym.lo == 0.0 and sym.contains(9.0)
    r = Interval(2).sqrt()
    assert frac(r.lo) <= Fraction(2).sqrt() if hasattr(Fraction(2), "sqrt") \
        else r.lo <= math.sqrt(2) <= r.hi
    lg = Interval(math.e).log()
    assert lg.contains(1.0)


def test_complex_abs_upper_examples():
    z0 = ComplexInterval(Interval(0), Interval(0))
    assert z0.abs_upper() == 0.0
    z345 = ComplexInterval(Interval(3), Interval(4))
    assert 5.0 <= z345.abs_upper() <= 5.0 * (1 + 1e-14)
    box = ComplexInterval(Interval(-1, 1), Interval(-1, 1))
    assert box.abs_upper() >= math.sqrt(2)


def test_complex_mul_contains_exact_product():
    rng = np.random.default_rng(3)
    for _ in range(200):
        z, w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        zi = ComplexInterval.from_complex(complex(z))
        wi = ComplexInterval.from_complex(complex(w))
        prod = zi * wi
        exact_re = frac(z.real) * frac(w.real) - frac(z.imag) * frac(w.imag)
        exact_im = frac(z.real) * frac(w.imag) + frac(z.imag) * frac(w.real)
        assert frac(prod.re.lo) <= exact_re <= frac(prod.re.hi)
        assert frac(prod.im.lo) <= exact_im <= frac(prod.im.hi)


def test_matvec_identity_and_all_ones():
    I = IArray.exact(np.eye(3))
    v = IArray.exact(np.array([1.0, -2.0, 0.5]))
    out = imatvec(I, v)
    assert out.contains(np.array([1.0, -2.0, 0.5]))
    ones = IArray.exact(np.ones((2, 2)))
    w = imatvec(ones, IArray.exact(np.ones(2)))
    assert w.contains(np.array([2.0, 2.0]))


def test_matmul_against_fraction_oracle():
    rng = np.random.default_rng(11)
    for _ in range(5):
        A = rng.standard_normal((5, 5))
        B = rng.standard_normal((5, 5))
        enc = point_matmul(A, B)
        for i in range(5):
            for j in range(5):
                exact = sum(frac(A[i, k]) * frac(B[k, j]) for k in range(5))
                assert frac(enc.lo[i, j]) <= exact <= frac(enc.hi[i, j])


def test_interval_matmul_contains_sampled_products():
    rng = np.random.default_rng(13)
    Am = rng.standard_normal((4, 4))
    Bm = rng.standard_normal((4, 4))
    Ar = np.abs(rng.standard_normal((4, 4))) * 1e-3
    Br = np.abs(rng.standard_normal((4, 4))) * 1e-3
    A = IArray(Am - Ar, Am + Ar)
    B = IArray(Bm - Br, Bm + Br)
    C = imatmul(A, B)
    for _ in range(50):
        As = Am + Ar * rng.uniform(-1, 1, (4, 4))
        Bs = Bm + Br * rng.uniform(-1, 1, (4, 4))
        P = As @ Bs
        assert np.all(C.lo <= P + 1e-12) and np.all(P - 1e-12 <= C.hi)


def test_complex_matmul_contains_exact():
    rng = np.random.default_rng(17)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    C = cmatmul(CArray.exact(A), CArray.exact(B))
    # float64 product is within the enclosure plus representation slack
    P = A @ B
    assert np.all(C.re.lo - 1e-12 <= P.real) and np.all(P.real <= C.re.hi + 1e-12)
    assert np.all(C.im.lo - 1e-12 <= P.imag) and np.all(P.imag <= C.im.hi + 1e-12)


def test_convolution_against_fraction_oracle():
    rng = np.random.default_rng(19)
    a = rng.standard_normal(6)
    b = rng.standard_normal(4)
    enc = iconvolve(IArray.exact(a), IArray.exact(b))
    for k in range(9):
        exact = sum(frac(a[i]) * frac(b[k - i])
                    for i in range(6) if 0 <= k - i < 4)
        assert frac(enc.lo[k]) <= exact <= frac(enc.hi[k])


def test_sum_upper_dominates_exact_sum():
    rng = np.random.default_rng(23)
    x = np.abs(rng.standard_normal(10_000))
    exact = sum(frac(v) for v in x)
    assert frac(sum_upper(x)) >= exact


def test_thread_independence():
    from concurrent.futures import ThreadPoolExecutor

    a = Interval(1.1, 1.3)
    b = Interval(-0.7, 2.9)

    def work(_):
        return ((a * b) + (a - b) / Interval(2.0)).hi

    with ThreadPoolExecutor(max_workers=8) as ex:
        vals = list(ex.map(work, range(64)))
    assert len(set(vals)) == 1


def test_iarray_sum_encloses():
    rng = np.random.default_rng(29)
    x = rng.standard_normal(1000)
    enc = IArray.exact(x).sum()
    exact = sum(frac(v) for v in x)
    assert frac(enc.lo) <= exact <= frac(enc.hi)
