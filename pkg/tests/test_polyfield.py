"""Vector field representation: derivatives, lifted maps, kernels, majorant."""

import numpy as np
import pytest

from connorb.interval import CArray, ComplexInterval, Interval
from connorb.polyfield import PolyVectorField, eval_param_expr, field_from_config
from connorb.problems import cubic_1d_config, lotka_volterra_config
from connorb.seqspace import ChebSeq, TaylorArray, cheb_conv


def cubic_field():
    return field_from_config(cubic_1d_config()["field"])


def lv_field(kappa="-1"):
    return field_from_config(lotka_volterra_config(kappa)["field"])


def square_field():
    """g(u) = u^2, scalar."""
    return PolyVectorField(1, [((2,), [Interval(1.0)])])


def random_field(rng, n=2, deg=3, nterms=5):
    terms = []
    for _ in range(nterms):
        alpha = tuple(int(a) for a in rng.integers(0, deg + 1, n))
        if sum(alpha) > deg:
            continue
        terms.append((alpha, [Interval(float(c)) for c in rng.standard_normal(n)]))
    # guarantee linear and quadratic content so derivative paths are exercised
    lin = tuple(1 if i == 0 else 0 for i in range(n))
    quad = tuple(2 if i == n - 1 else 0 for i in range(n))
    terms.append((lin, [Interval(float(c)) for c in rng.standard_normal(n)]))
    terms.append((quad, [Interval(float(c)) for c in rng.standard_normal(n)]))
    return PolyVectorField(n, terms)


def test_cubic_equilibrium():
    g = cubic_field()
    assert abs(g.eval_float(np.array([1.0]))[0]) == 0.0
    v = g.eval_interval([ComplexInterval(Interval(1.0))])
    assert v[0].abs_upper() < 1e-13
    assert v[0].contains(0.0)


def test_lv_equilibria_are_zeros():
    g = lv_field()
    for x in ([0.5, 0.0, 0.5, 0.0], [1.0, 0.0, 0.0, 0.0]):
        r = g.eval_float(np.array(x))
        assert np.max(np.abs(r)) < 1e-15
        vi = g.eval_interval([ComplexInterval(Interval(c)) for c in x])
        assert max(c.abs_upper() for c in vi) < 1e-13


def test_d2_of_square_is_two():
    g = square_field()
    for u in (0.0, 1.3, -2.0):
        h = g.d2_interval([ComplexInterval(Interval(u))], 0)
        assert h[0][0].re.contains(2.0) and h[0][0].re.width() < 1e-13


def test_orders_and_degrees():
    g = lv_field()
    M = g.orders
    Ng = g.comp_orders
    assert Ng.tolist() == [1, 2, 1, 2]
    assert M[1, 0] == 1 and M[1, 2] == 1 and M[0, 1] == 0
    assert M[3, 2] == 1 and M[3, 0] == 1


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    g = random_field(rng, n=3, deg=3)
    x = rng.standard_normal(3)
    J = g.jac_float(x)
    h = 1e-6
    for l in range(3):
        e = np.zeros(3)
        e[l] = h
        fd = (g.eval_float(x + e) - g.eval_float(x - e)) / (2 * h)
        assert np.max(np.abs(J[:, l] - fd)) < 1e-7


def test_d2_d3_match_finite_differences():
    rng = np.random.default_rng(1)
    g = random_field(rng, n=2, deg=4)
    x = rng.standard_normal(2)
    xi = [ComplexInterval(Interval(c)) for c in x]
    h = 1e-5
    for j in range(2):
        H = g.d2_interval(xi, j)
        for i in range(2):
            for l in range(2):
                ei, el = np.zeros(2), np.zeros(2)
                ei[i], el[l] = h, h
                fd = (g.eval_float(x + ei + el) - g.eval_float(x + ei - el)
                      - g.eval_float(x - ei + el) + g.eval_float(x - ei - el))[j] / (4 * h * h)
                assert abs(H[i][l].re.mid() - fd) < 1e-4 * max(1, abs(fd))


def test_cheb_apply_examples():
    g = square_field()
    nu = Interval(1.5)
    # a = e_1 : c(a) = e1 * e1 = 2 e0 + e2
    a = ChebSeq.basis(1, nu)
    c = g.cheb_apply(a)
    assert np.allclose(c.mid().ravel(), [2.0, 0.0, 1.0])
    # constant sequence at an equilibrium of u - u^3
    gc = cubic_field()
    a0 = ChebSeq.zeros(1, 1, nu)
    a0.coeffs[0, 0] = 1.0
    c0 = gc.cheb_apply(a0)
    assert c0.coeffs.abs_sup().max() < 1e-14


def test_cheb_apply_linear_field_is_matrix_action():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((2, 2))
    terms = []
    for l in range(2):
        alpha = [0, 0]
        alpha[l] = 1
        terms.append((tuple(alpha), [Interval(A[0, l]), Interval(A[1, l])]))
    g = PolyVectorField(2, terms)
    a = ChebSeq(CArray.exact(rng.standard_normal((4, 2)).astype(complex)), Interval(1.2))
    c = g.cheb_apply(a)
    expect = a.mid() @ A.T
    assert np.allclose(c.mid()[:4], expect)
    assert c.coeffs.abs_sup()[4:].max() if c.support > 4 else 0.0 < 1e-14


def test_cheb_apply_support_bound():
    rng = np.random.default_rng(3)
    g = random_field(rng, n=2, deg=3)
    N = 5
    a = ChebSeq(CArray.exact(rng.standard_normal((N, 2)).astype(complex)), Interval(1.2))
    c = g.cheb_apply(a)
    for j in range(2):
        Ngj = g.comp_orders[j]
        tail = c.coeffs.abs_sup()[Ngj * (N - 1) + 1 :, j]
        assert tail.size == 0 or tail.max() < 1e-13


def test_taylor_apply_examples():
    nu = Interval(1.0)
    gc = cubic_field()
    # p with only p_0: C(p) has only C_0 = g(p_0)
    p = TaylorArray.zeros((2,), 1, nu)
    p.coeffs[0, 0] = 0.5
    C = gc.taylor_apply(p)
    mid = C.mid()
    assert abs(mid[0, 0] - (0.5 - 0.125)) < 1e-14
    assert np.max(np.abs(mid[1:])) < 1e-14
    # quadratic scalar g, p = eps * delta_1: C_2 = eps^2
    gs = square_field()
    eps = 0.3
    p1 = TaylorArray.zeros((1,), 1, nu)
    p1.coeffs[1, 0] = eps
    C1 = gs.taylor_apply(p1)
    assert abs(C1.mid()[2, 0] - eps * eps) < 1e-15


def test_taylor_apply_first_order_is_jacobian_action():
    rng = np.random.default_rng(4)
    g = random_field(rng, n=3, deg=3)
    p0 = rng.standard_normal(3)
    P = TaylorArray.zeros((1, 1), 3, Interval(1.0))
    P.coeffs[0, 0] = p0.astype(complex)
    v1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    v2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    P.coeffs[1, 0] = v1
    P.coeffs[0, 1] = v2
    C = g.taylor_apply(P)
    J = g.jac_float(p0)
    assert np.allclose(C.mid()[1, 0], J @ v1)
    assert np.allclose(C.mid()[0, 1], J @ v2)


def test_dc_kernels_examples_and_support():
    nu = Interval(1.3)
    # g(u) = u^3, a = e_1: kernel 3*(e1*e1) = 6 e0 + 3 e2
    g3 = PolyVectorField(1, [((3,), [Interval(1.0)])])
    a = ChebSeq.basis(1, nu)
    ker = g3.dc_kernels(a)[(0, 0)]
    assert np.allclose(ker.mid().ravel(), [6.0, 0.0, 3.0])
    # support bound k < M_jl (N-1) + 1 on a random cubic field
    rng = np.random.default_rng(5)
    g = random_field(rng, n=2, deg=3)
    N = 6
    seq = ChebSeq(CArray.exact(rng.standard_normal((N, 2)).astype(complex)), nu)
    kers = g.dc_kernels(seq)
    M = g.orders
    for (j, l), k in kers.items():
        cut = M[j, l] * (N - 1) + 1
        tail = k.coeffs.abs_sup()[cut:]
        assert tail.size == 0 or tail.max() < 1e-13


def test_dc_kernels_consistency_with_directional_derivative():
    rng = np.random.default_rng(6)
    g = random_field(rng, n=2, deg=3)
    N = 5
    a = rng.standard_normal((N, 2))
    kers = g.dc_kernels_float(a)
    h = 1e-7
    for _ in range(10):
        da = rng.standard_normal((N, 2))
        fd = (g.cheb_apply_float(a + h * da) - g.cheb_apply_float(a - h * da)) / (2 * h)

        def two_sided(c):
            idx = np.abs(np.arange(-(c.shape[0] - 1), c.shape[0]))
            return c[idx]

        for j in range(2):
            acc = np.zeros(fd.shape[0], dtype=complex)
            for l in range(2):
                ker = kers[(j, l)]
                full = np.convolve(two_sided(ker), two_sided(da[:, l].astype(complex)))
                centre = (ker.shape[0] - 1) + (N - 1)
                part = full[centre:]
                acc[: part.shape[0]] += part
            assert np.max(np.abs(acc - fd[:, j])) < 1e-5


def test_dC_kernels_examples():
    nu = Interval(1.0)
    gs = square_field()
    eps = 0.25
    p = TaylorArray.zeros((1,), 1, nu)
    p.coeffs[1, 0] = eps
    ker = gs.dC_kernels(p)[(0, 0)]
    assert abs(ker.mid()[1, 0] - 2 * eps) < 1e-15
    # linear field: constant kernel (support collapses to k = 0)
    g = PolyVectorField(1, [((1,), [Interval(3.0)])])
    ker2 = g.dC_kernels(p)[(0, 0)]
    assert abs(ker2.mid()[0, 0] - 3.0) < 1e-15
    assert ker2.mid().shape[0] == 1


def test_majorant_examples_and_monotonicity():
    # linear field
    g1 = PolyVectorField(1, [((1,), [Interval(2.0)])])
    assert g1.majorant_d2(0, [Interval(5.0)]).hi == 0.0
    # u^3 at s = 2: 6 * 2 = 12
    g3 = PolyVectorField(1, [((3,), [Interval(1.0)])])
    got = g3.majorant_d2(0, [Interval(2.0)])
    assert got.contains(12.0) and got.width() < 1e-12
    rng = np.random.default_rng(7)
    g = random_field(rng, n=2, deg=4)
    for _ in range(20):
        s = np.abs(rng.standard_normal(2))
        t = s + np.abs(rng.standard_normal(2))
        a = g.majorant_d2(0, [Interval(v) for v in s])
        b = g.majorant_d2(0, [Interval(v) for v in t])
        assert a.lo <= b.hi * (1 + 1e-12)


def test_conjugation_equivariance_of_cheb_apply():
    rng = np.random.default_rng(8)
    g = random_field(rng, n=2, deg=3)
    a = ChebSeq(CArray.exact((rng.standard_normal((4, 2))
                              + 1j * rng.standard_normal((4, 2)))), Interval(1.2))
    ca = g.cheb_apply(a)
    cbar = g.cheb_apply(a.conj())
    assert np.allclose(cbar.mid(), np.conj(ca.mid()))


def test_param_expr_and_config():
    params = {"a": Interval.from_decimal("5"), "D": Interval.from_decimal("3")}
    v = eval_param_expr("-a/(D+1)", params)
    assert v.contains(-1.25)
    v2 = eval_param_expr("2*a - 0.5", params)
    assert v2.contains(9.5)
    with pytest.raises(ValueError):
        eval_param_expr("a +", params)
    with pytest.raises(ValueError):
        eval_param_expr("unknown", params)
    g = lv_field()
    assert g.n == 4
