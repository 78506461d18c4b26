"""Parameterization method: recursion, non-resonance, symmetry, conjugacy."""

import numpy as np
import pytest

from connorb.interval import Interval
from connorb.manifold import (
    ManifoldChart,
    check_nonresonance,
    conjugacy_error,
    eigendata,
    eval_chart,
    find_equilibrium,
    heuristic_scaling,
    residual_FQ,
    solve_homological,
    symmetrize_chart,
)
from connorb.polyfield import PolyVectorField, field_from_config
from connorb.problems import cubic_1d_config, lotka_volterra_config
from connorb.seqspace import Involution, graded_lex, star


def cubic_field():
    return field_from_config(cubic_1d_config()["field"])


def lv_field(kappa="-1"):
    return field_from_config(lotka_volterra_config(kappa)["field"])


def quadratic_1d(lam):
    """g(u) = lam*u + u^2."""
    return PolyVectorField(1, [((1,), [Interval(lam)]), ((2,), [Interval(1.0)])])


def test_find_equilibrium_refines():
    g = lv_field()
    x = find_equilibrium(g, [0.49, 0.01, 0.52, -0.01])
    assert np.allclose(x, [0.5, 0, 0.5, 0], atol=1e-12)


def test_nonresonance_examples():
    rep = check_nonresonance([-1.0, -2.0])
    assert rep.resonant
    assert tuple(rep.witness_k) == (2, 0) and rep.witness_i == 1
    rep2 = check_nonresonance([-1.0, -1.5])
    assert not rep2.resonant and rep2.min_distance > 1e-6


def test_nonresonance_rejects_nonhyperbolic():
    with pytest.raises(ValueError):
        check_nonresonance([0.0, -1.0])
    with pytest.raises(ValueError):
        check_nonresonance([1.0, -1.0])


def test_quadratic_chart_recursion():
    # g(u) = lam u + u^2 at 0: the order-2 homological equation gives
    # 2 lam q2 = lam q2 + q1^2, i.e. q2 = q1^2 / lam
    lam = -1.5
    g = quadratic_1d(lam)
    chart = solve_homological(g, [0.0], "stable", (4,), scale=0.3)
    q1 = chart.coeffs[1, 0]
    q2 = chart.coeffs[2, 0]
    assert abs(q2 - q1 * q1 / lam) < 1e-14


def test_defining_equation_holds_at_all_orders():
    g = lv_field()
    chart = solve_homological(g, [1.0, 0, 0, 0], "stable", (4, 4, 4), scale=0.2)
    work = g  # residual formulas are side-agnostic
    C = work.taylor_apply_float(chart.coeffs)
    for k in graded_lex(chart.K):
        s = int(k.sum())
        if s < 2:
            continue
        kk = tuple(int(v) for v in k)
        lam_k = complex(np.dot(k, chart.lam))
        lhs = lam_k * chart.coeffs[kk]
        rhs = C[kk]
        assert np.max(np.abs(lhs - rhs)) < 1e-11 * max(1.0, np.max(np.abs(lhs)))


def test_lv_stable_chart_solves_and_decays():
    g = lv_field()
    chart = solve_homological(g, [1.0, 0, 0, 0], "stable", (9, 9, 9), scale=0.25)
    assert chart.dim == 3 and chart.inv.pairs == 1
    res = residual_FQ(g, chart)
    sup = res.coeffs.abs_sup()
    deg = res.degrees()
    inside = deg <= sum(chart.K) // len(chart.K)  # low orders are exact
    # residual vanishes identically on the solved box
    box_mask = np.ones(sup.shape[:-1], dtype=bool)
    for ax, Kx in enumerate(chart.K):
        idx = np.arange(sup.shape[ax])
        shape = [1] * (sup.ndim - 1)
        shape[ax] = -1
        box_mask &= (idx.reshape(shape) <= Kx)
    assert sup[box_mask].max() < 1e-9
    # top-order coefficients decayed
    top = np.abs(chart.coeffs)[deg[box_mask].max() == 0] if False else None
    mags = np.abs(chart.coeffs).max(axis=-1)
    degs = chart.as_taylor().degrees()
    assert mags[degs == 9].max() < 1e-4


def test_unstable_chart_via_negated_field():
    g = cubic_field()
    chart = solve_homological(g, [0.0], "unstable", (8,), scale=0.1)
    assert chart.lam[0].real > 0
    res = residual_FQ(g, chart)
    sup = res.coeffs.abs_sup()
    assert sup[: 9].max() < 1e-12


def test_residual_first_order_perturbation():
    g = cubic_field()
    chart = solve_homological(g, [1.0], "stable", (6,), scale=0.1)
    delta = 1e-6
    pert = ManifoldChart(chart.side, chart.lam, chart.coeffs.copy(), chart.nu,
                         chart.inv, chart.vhat, chart.eps)
    pert.coeffs[0] += delta
    res = residual_FQ(g, pert)
    row0 = res.coeffs.mid()[0]
    expect = g.jac_float(np.real(chart.coeffs[0])) @ np.array([delta])
    assert abs(row0[0] - expect[0]) < 1e-10


def test_residual_compatible_with_star():
    rng = np.random.default_rng(0)
    g = lv_field()
    inv = Involution(d=3, pairs=1)
    lam = np.array([-0.4 + 1.2j, -0.4 - 1.2j, -0.9 + 0j])
    coeffs = rng.standard_normal((3, 3, 3, 4)) + 1j * rng.standard_normal((3, 3, 3, 4))
    chart = ManifoldChart("stable", lam, coeffs, Interval(1.0), inv,
                          np.zeros((3, 4), dtype=complex), np.zeros(3))
    starred = ManifoldChart("stable", inv.apply_vector(lam),
                            star(chart.as_taylor(), inv).mid(), Interval(1.0),
                            inv, chart.vhat, chart.eps)
    r1 = residual_FQ(g, starred)
    r2 = residual_FQ(g, chart)
    r2s = star(r2, Involution(d=3, pairs=1))
    assert np.max(np.abs(r1.mid() - r2s.mid())) < 1e-9


def test_rescaling_equivariance():
    g = lv_field()
    base = solve_homological(g, [1.0, 0, 0, 0], "stable", (4, 4, 4), scale=0.2)
    scaled = solve_homological(g, [1.0, 0, 0, 0], "stable", (4, 4, 4), scale=0.1)
    degs = base.as_taylor().degrees()
    gamma = 0.5
    for k in graded_lex((4, 4, 4)):
        kk = tuple(int(v) for v in k)
        s = int(k.sum())
        assert np.allclose(scaled.coeffs[kk], base.coeffs[kk] * gamma ** s,
                           atol=1e-10)


def test_symmetrization_idempotent():
    g = lv_field()
    chart = solve_homological(g, [1.0, 0, 0, 0], "stable", (3, 3, 3), scale=0.2)
    sym = symmetrize_chart(chart)
    sym2 = symmetrize_chart(sym)
    assert np.allclose(sym.coeffs, sym2.coeffs, atol=0)
    # an already symmetric chart is essentially unchanged
    assert np.max(np.abs(sym.coeffs - chart.coeffs)) < 1e-12


def test_conjugacy_smoke():
    g = cubic_field()
    stable = solve_homological(g, [1.0], "stable", (10,), scale=0.15)
    err = conjugacy_error(g, stable, [0.5], 1.0)
    assert err < 1e-6
    unstable = solve_homological(g, [0.0], "unstable", (10,), scale=0.15)
    err_u = conjugacy_error(g, unstable, [0.5], -1.0)
    assert err_u < 1e-6


def test_eval_chart_examples():
    g = cubic_field()
    chart = solve_homological(g, [1.0], "stable", (5,), scale=0.1)
    assert np.allclose(eval_chart(chart, [0.0]), chart.coeffs[0])
    # 1-D affine chart
    aff = ManifoldChart("stable", np.array([-1.0 + 0j]),
                        np.array([[2.0 + 0j], [3.0 + 0j]]), Interval(1.0),
                        Involution(1, 0), np.ones((1, 1), dtype=complex),
                        np.ones(1))
    assert np.allclose(eval_chart(aff, [0.25]), [2.75])


def test_eval_chart_real_on_symmetric_set():
    g = lv_field()
    chart = solve_homological(g, [1.0, 0, 0, 0], "stable", (5, 5, 5), scale=0.2)
    chart = symmetrize_chart(chart)
    # phi with phi* = phi: conjugate pair coordinates plus a real slot
    phi = np.array([0.3 + 0.2j, 0.3 - 0.2j, 0.4 + 0j])
    val = eval_chart(chart, phi)
    assert np.max(np.abs(val.imag)) < 1e-12


def test_heuristic_scaling_monotone_in_spectrum():
    g = cubic_field()
    K1, mu1, rep1 = heuristic_scaling(g, [0.0], "unstable")
    assert K1[0] >= 1 and 0 < mu1 < 1
    # doubling min |Re lambda| weakly decreases the returned K
    g2 = PolyVectorField(1, [((1,), [Interval(2.0)]), ((3,), [Interval(-2.0)])])
    K2, mu2, rep2 = heuristic_scaling(g2, [0.0], "unstable")
    assert K2[0] <= K1[0]
