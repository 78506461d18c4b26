"""Galerkin layout, map assembly, analytic Jacobian, symmetry machinery."""

import numpy as np
import pytest

from connorb.connectmap import (
    ConnectionProblem,
    GalerkinIndexMap,
    IntervalData,
    Unknowns,
    build_approx_inverse,
    flatten,
    fnk_float,
    fnk_interval,
    jac_float,
    jac_interval,
    star_candidate,
    star_range,
    symmetrize,
    unflatten,
)
from connorb.interval import Interval
from connorb.orbit import Grid, OrbitSegments, PhaseReference
from connorb.polyfield import PolyVectorField, field_from_config
from connorb.problems import cubic_1d_config
from connorb.seqspace import Involution


def test_kappa_formula_matches_paper_configurations():
    # LV flagship
    lay = GalerkinIndexMap(4, 2, 3, (50, 47, 50), (13, 13), (9, 9, 9))
    assert lay.kappa == 5382
    # LV second setup
    lay2 = GalerkinIndexMap(4, 2, 3, (55, 52, 62), (13, 13), (12, 12, 12))
    assert lay2.kappa == 10258
    # fourth order flagship
    lay3 = GalerkinIndexMap(4, 2, 3, (62, 61), (15, 15), (12, 12, 12))
    assert lay3.kappa == 10314


def test_nondegeneracy_enforced():
    with pytest.raises(ValueError):
        GalerkinIndexMap(4, 2, 2, (10,), (3, 3), (3, 3))


def small_problem(pairs_u=0, pairs_s=0, seed=0):
    """Tiny scalar problem (n=1) for structural tests."""
    g = field_from_config(cubic_1d_config()["field"])
    grid = Grid(np.array([0.0, 0.5, 1.0]), Interval.from_decimal("2"),
                (6, 5), [Interval.from_decimal("1.3")] * 2)
    rng = np.random.default_rng(seed)
    ref = OrbitSegments(grid, [rng.standard_normal((6, 1)).astype(complex),
                               rng.standard_normal((5, 1)).astype(complex)])
    phase = PhaseReference.from_segments(ref)
    return ConnectionProblem(
        field=g, grid=grid, n_u=1, n_s=1, Ku=(3,), Ks=(4,),
        nu_u=Interval(1.0), nu_s=Interval(1.0),
        inv_u=Involution(1, pairs_u), inv_s=Involution(1, pairs_s),
        vhat_u=np.array([[0.7 + 0j]]), vhat_s=np.array([[-0.4 + 0j]]),
        eps_u=np.array([0.49]), eps_s=np.array([0.16]), phase=phase)


def random_candidate(problem, seed=1, complex_data=True):
    rng = np.random.default_rng(seed)
    lay = problem.layout

    def rnd(shape):
        z = rng.standard_normal(shape)
        if complex_data:
            z = z + 1j * rng.standard_normal(shape)
        return z * 0.3

    a = [rnd((lay.N[i], lay.n)) for i in range(lay.m)]
    p = rnd(tuple(k + 1 for k in lay.Ku) + (lay.n,))
    q = rnd(tuple(k + 1 for k in lay.Ks) + (lay.n,))
    u = Unknowns(problem, rnd((problem.n_u,)), rnd((problem.n_s,)),
                 rnd((problem.n_u,)), rnd((problem.n_s,)), a, p, q)
    return flatten(problem, u)


def test_flatten_unflatten_bijection():
    prob = small_problem()
    v = random_candidate(prob)
    v2 = flatten(prob, unflatten(prob, v))
    assert np.array_equal(v, v2)


def test_jacobian_matches_finite_differences():
    prob = small_problem()
    v = random_candidate(prob)
    J = jac_float(prob, v)
    kappa = prob.layout.kappa
    h = 1e-7
    rng = np.random.default_rng(5)
    for _ in range(12):
        d = rng.standard_normal(kappa) + 1j * rng.standard_normal(kappa)
        d /= np.max(np.abs(d))
        fd = (fnk_float(prob, v + h * d) - fnk_float(prob, v - h * d)) / (2 * h)
        an = J @ d
        denom = max(1.0, float(np.max(np.abs(an))))
        assert np.max(np.abs(fd - an)) / denom < 1e-6


def lv_like_problem(seed=2):
    """n = 4 problem with conjugate-pair involutions for symmetry tests."""
    from connorb.problems import lotka_volterra_config

    g = field_from_config(lotka_volterra_config()["field"])
    grid = Grid(np.array([0.0, 1.0]), Interval.from_decimal("2"),
                (5,), [Interval.from_decimal("1.2")])
    rng = np.random.default_rng(seed)
    ref = OrbitSegments(grid, [rng.standard_normal((5, 4)).astype(complex)])
    phase = PhaseReference.from_segments(ref)
    vu = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    vs = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    vs3 = rng.standard_normal(4).astype(complex)
    return ConnectionProblem(
        field=g, grid=grid, n_u=2, n_s=3, Ku=(2, 2), Ks=(2, 2, 2),
        nu_u=Interval(1.0), nu_s=Interval(1.0),
        inv_u=Involution(2, 1), inv_s=Involution(3, 1),
        vhat_u=np.stack([vu, np.conj(vu)]),
        vhat_s=np.stack([vs, np.conj(vs), vs3]),
        eps_u=np.array([0.3, 0.3]), eps_s=np.array([0.2, 0.2, 0.25]),
        phase=phase)


def test_F_compatible_with_star():
    prob = lv_like_problem()
    for seed in range(3):
        v = random_candidate(prob, seed=seed)
        lhs = fnk_float(prob, star_candidate(prob, v))
        rhs = star_range(prob, fnk_float(prob, v))
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_symmetrize_fixes_star_and_is_idempotent():
    prob = lv_like_problem()
    v = random_candidate(prob, seed=7)
    vs = symmetrize(prob, v)
    assert np.max(np.abs(star_candidate(prob, vs) - vs)) == 0.0
    assert np.max(np.abs(symmetrize(prob, vs) - vs)) == 0.0
    # symmetrizing moves the candidate by at most twice the asymmetry
    asym = np.max(np.abs(star_candidate(prob, v) - v))
    assert np.max(np.abs(vs - v)) <= 2 * asym + 1e-15


def test_ball_symmetry_after_symmetrization():
    # ||y - xhat|| = ||y* - xhat|| for symmetric xhat
    prob = lv_like_problem()
    xhat = symmetrize(prob, random_candidate(prob, seed=8))
    rng = np.random.default_rng(9)
    from connorb.validator import candidate_norm_upper

    for seed in range(5):
        y = random_candidate(prob, seed=100 + seed)
        n1 = candidate_norm_upper(prob, y - xhat)
        n2 = candidate_norm_upper(prob, star_candidate(prob, y) - xhat)
        assert abs(n1 - n2) < 1e-9 * max(1.0, n1)


def test_interval_residual_and_jacobian_match_float_path():
    prob = small_problem()
    v = random_candidate(prob, seed=3)
    data = IntervalData(prob, v)
    Fi = fnk_interval(prob, data)
    Ff = fnk_float(prob, v)
    mid = Fi.mid()
    assert np.max(np.abs(mid - Ff)) < 1e-11
    assert Fi.rad_upper().max() < 1e-11
    Jm, Jr = jac_interval(prob, data)
    Jf = jac_float(prob, v)
    assert np.max(np.abs(Jm - Jf)) < 1e-11
    assert Jr.max() < 1e-11


def test_approx_inverse_examples():
    I = np.eye(4, dtype=complex)
    assert np.allclose(build_approx_inverse(I), I)
    D = np.diag([2.0 + 0j] * 4)
    assert np.allclose(build_approx_inverse(D), np.diag([0.5] * 4))
    prob = small_problem()
    v = random_candidate(prob, seed=4)
    J = jac_float(prob, v)
    A = build_approx_inverse(J)
    defect = np.eye(prob.layout.kappa) - A @ J
    assert np.max(np.abs(defect)) < 1e-8
