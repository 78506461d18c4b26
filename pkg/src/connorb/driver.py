"""Pipeline orchestration: configs, candidates, validation runs, persistence.

The three-stage procedure: (1) equilibria, eigendata and manifold charts with
heuristically scaled eigenvectors; (2) a numerical connecting orbit by
shooting between the charts plus a domain-decomposed Chebyshev fit; (3) the
Galerkin zero refined by Newton, symmetrized, and handed to the validator.

Every stage failure surfaces the stage name together with the standard
recovery suggestion (more modes, more subdomains, rescaled charts).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .connectmap import (
    ConnectionProblem,
    Unknowns,
    flatten,
    fnk_float,
    newton_refine,
    symmetrize,
    unflatten,
)
from .interval import Interval
from .manifold import (
    ManifoldChart,
    check_nonresonance,
    eval_chart,
    eval_chart_deriv,
    find_equilibrium,
    heuristic_scaling,
    solve_homological,
)
from .orbit import (
    Grid,
    OrbitSegments,
    PhaseReference,
    decompose_domain,
    eval_orbit,
    fit_segments,
    heuristic_weights,
)
from .polyfield import PolyVectorField, field_from_config
from .seqspace import Involution
from .validator import ValidationResult, validate

SCHEMA_VERSION = 1


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str, suggestion: str):
        super().__init__(f"[{stage}] {message} -- suggestion: {suggestion}")
        self.stage = stage
        self.suggestion = suggestion


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ValueError(f"config missing required key {key!r}")
    return cfg[key]


def load_config(cfg: dict) -> dict:
    """Validate a problem config and normalize its fields."""
    out = dict(cfg)
    field_cfg = _require(cfg, "field")
    n = int(field_cfg["n"])
    n_u = int(_require(cfg, "source")["n_unstable"])
    n_s = int(_require(cfg, "target")["n_stable"])
    if n_u + n_s != n + 1:
        raise ValueError(
            f"non-degeneracy violated at load: n_u + n_s = {n_u + n_s}, "
            f"n + 1 = {n + 1}")
    for key, default in (("m", "auto"), ("N", "auto"), ("K_unstable", "auto"),
                         ("K_stable", "auto"), ("nu", "auto"),
                         ("r_star", "1e-5"), ("theta_radius", 0.5),
                         ("phase_convention", "paper"), ("seed", 0),
                         ("nu_chart_unstable", "1"), ("nu_chart_stable", "1")):
        out.setdefault(key, default)
    _require(cfg, "L")
    return out


# -- map from real symmetric coordinates to the complex polydisk --------------

def iota(phi_re: np.ndarray, inv: Involution) -> np.ndarray:
    """The linear identification of B^{sym,re} with the symmetric set."""
    phi_re = np.asarray(phi_re, dtype=float)
    out = np.zeros(inv.d, dtype=complex)
    for j in range(inv.pairs):
        out[2 * j] = phi_re[2 * j] + 1j * phi_re[2 * j + 1]
        out[2 * j + 1] = phi_re[2 * j] - 1j * phi_re[2 * j + 1]
    out[2 * inv.pairs :] = phi_re[2 * inv.pairs :]
    return out


def iota_inverse(phi: np.ndarray, inv: Involution) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    out = np.zeros(inv.d)
    for j in range(inv.pairs):
        out[2 * j] = phi[2 * j].real
        out[2 * j + 1] = phi[2 * j].imag
    out[2 * inv.pairs :] = np.real(phi[2 * inv.pairs :])
    return out


@dataclass
class PipelineSetup:
    field: PolyVectorField
    chart_u: ManifoldChart
    chart_s: ManifoldChart
    L: Interval
    config: dict
    info: dict = dc_field(default_factory=dict)


def build_charts(config: dict, verbose: bool = False) -> PipelineSetup:
    """Steps 1.1-1.4: equilibria, eigendata, scalings, homological solve."""
    cfg = load_config(config)
    g = field_from_config(cfg["field"])
    info = {}
    nu_u = Interval.from_decimal(str(cfg["nu_chart_unstable"]))
    nu_s = Interval.from_decimal(str(cfg["nu_chart_stable"]))
    charts = {}
    tail_target = float(cfg.get("chart_tail_target", 1e-9))
    for side, key, guess_key in (("unstable", "K_unstable", "source"),
                                 ("stable", "K_stable", "target")):
        guess = cfg[guess_key]["guess"]
        K_req = cfg[key]
        eps_req = cfg.get(f"eps_{side}", "auto")
        nu_side = nu_u if side == "unstable" else nu_s
        try:
            if eps_req != "auto" and K_req != "auto":
                K = tuple(int(v) for v in K_req)
                mu = float(np.sqrt(float(eps_req)))
                chart = solve_homological(g, guess, side, K, scale=mu,
                                          nu=nu_side)
            elif K_req == "auto":
                K, mu, rep = heuristic_scaling(g, guess, side)
                # step 1.4: grow the box until the top-order coefficients
                # reach validation scale
                for _ in range(8):
                    chart = solve_homological(g, guess, side, K, scale=mu,
                                              nu=nu_side)
                    deg = chart.as_taylor().degrees()
                    # parity can zero a single top order: test the top two
                    top = np.abs(chart.coeffs).max(axis=-1)[deg >= max(K) - 1]
                    if float(top.max()) <= tail_target or max(K) >= 40:
                        break
                    K = tuple(k + max(2, k // 2) for k in K)
            else:
                K = tuple(int(v) for v in K_req)
                _, mu, rep = heuristic_scaling(g, guess, side,
                                               provisional_K=max(K))
                chart = solve_homological(g, guess, side, K, scale=mu,
                                          nu=nu_side)
        except RuntimeError as exc:
            raise StageError(
                f"chart-{side}", str(exc),
                "increase the Taylor budget or rescale the eigenvectors")
        info[f"{side}_K"] = tuple(chart.K)
        info[f"{side}_scale"] = mu
        info[f"{side}_eps"] = float(chart.eps[0])
        charts[side] = chart
        if verbose:
            print(f"  {side} chart: K={chart.K}, eps={chart.eps[0]:.4g}, "
                  f"lam={np.round(chart.lam, 4)}")
    L = Interval.from_decimal(str(cfg["L"]))
    return PipelineSetup(g, charts["unstable"], charts["stable"], L, cfg, info)


def shoot_connection(setup: PipelineSetup, verbose: bool = False):
    """Step 2.1: a candidate orbit from the unstable to the stable chart.

    Directions on the real symmetric coordinate sphere of the unstable chart
    are scanned in stages (cheap tolerances first, then local refinement),
    and a square shooting system in (direction, phi) is solved at the
    configured flight time.
    """
    g = setup.field
    cu, cs = setup.chart_u, setup.chart_s
    Lf = setup.L.mid()
    rho = float(setup.config["theta_radius"])
    n_u = cu.dim
    q0 = np.real(cs.equilibrium)
    rhs = g.rhs()

    def flow(u0, T, rtol=1e-12, atol=1e-13, dense=True):
        return solve_ivp(rhs, (0.0, T), u0, method="DOP853", rtol=rtol,
                         atol=atol, dense_output=dense)

    def dir_of(params):
        if n_u == 1:
            return np.array([params[0]])
        angles = params
        vec = np.ones(n_u)
        # spherical coordinates on S^{n_u - 1}
        for i, ang in enumerate(angles):
            vec[i] *= np.cos(ang)
            vec[i + 1 :] *= np.sin(ang)
        return vec

    escape = 10.0 * (1.0 + float(np.linalg.norm(np.real(cu.equilibrium)))
                     + float(np.linalg.norm(q0)))

    def blow_up(t, u):
        return float(np.linalg.norm(u) - escape)

    blow_up.terminal = True

    def probe(params, rtol, atol, approach=False):
        """(survival time, endpoint distance, closest approach) of a shot."""
        d = dir_of(np.atleast_1d(params))
        u0 = np.real(eval_chart(cu, iota(rho * d, cu.inv)))
        sol = solve_ivp(rhs, (0.0, Lf), u0, method="DOP853", rtol=rtol,
                        atol=atol, events=blow_up, dense_output=approach)
        if not sol.success:
            return 0.0, np.inf, np.inf
        surv = float(sol.t_events[0][0]) if sol.t_events[0].size else Lf
        dend = (float(np.linalg.norm(sol.y[:, -1] - q0))
                if surv >= Lf else np.inf)
        dmin = np.inf
        if approach:
            ts = np.linspace(0.0, surv * 0.999, 160)
            dmin = min(float(np.linalg.norm(sol.sol(t) - q0)) for t in ts)
        return surv, dend, dmin

    # staged direction scan; the needle at the connection is found by the
    # closest approach to the target, then by survival-time bisection
    if n_u == 1:
        cands = [np.array([1.0]), np.array([-1.0])]
        scores = [probe(p, 1e-8, 1e-10) for p in cands]
        pick = int(np.argmin([s[1] for s in scores]))
        best = (scores[pick][1], cands[pick])
    else:
        grid = np.linspace(0.0, 2.0 * np.pi, 180, endpoint=False)
        probes = [probe(np.array([a]), 1e-6, 1e-8, approach=True)
                  for a in grid]
        dists = np.array([p[1] for p in probes])
        dmins = np.array([p[2] for p in probes])
        width = 2.0 * np.pi / 180
        if np.isfinite(dists).any() and np.nanmin(dists) < 0.5:
            centre = grid[int(np.nanargmin(dists))]
            width *= 2.0
        else:
            # local survival-time bisection around the closest approach
            centre = grid[int(np.nanargmin(dmins))]
            prev_best = 0.0
            for _ in range(80):
                local = np.linspace(centre - width, centre + width, 9)
                pr = [probe(np.array([a]), 1e-9, 1e-11) for a in local]
                ds = np.array([p[1] for p in pr])
                if np.isfinite(ds).any():
                    centre = local[int(np.nanargmin(ds))]
                    width = max(width, 4e-12)
                    break
                lives = np.array([p[0] for p in pr])
                pick = int(np.argmax(lives))
                centre = local[pick]
                if 0 < pick < 8 and lives[pick] >= prev_best:
                    width /= 2.5
                prev_best = float(lives[pick])
                if width < 5e-15:
                    break
            else:
                raise StageError(
                    "candidate", "no direction survives the flight time",
                    "increase the flight time or enlarge the charts")
        for rtol in (1e-8, 1e-10):
            local = np.linspace(centre - width, centre + width, 33)
            sc = np.array([probe(np.array([a]), rtol, rtol * 1e-2)[1]
                           for a in local])
            if np.isfinite(sc).any():
                centre = local[int(np.nanargmin(sc))]
            width /= 8.0
        best = (probe(np.array([centre]), 1e-10, 1e-12)[1],
                np.array([centre]))
    if not np.isfinite(best[0]):
        raise StageError("candidate", "no trajectory reached the target",
                         "increase the flight time or enlarge the charts")
    if verbose:
        print(f"  direction scan: best endpoint distance {best[0]:.3e}")

    # square shooting system: (n_u - 1) direction angles + n_s coordinates
    def initial_phi(endpoint):
        Dl = np.zeros((cs.n, cs.dim))
        for l in range(cs.dim):
            e = np.zeros(cs.dim)
            e[l] = 1.0
            Dl[:, l] = np.real(eval_chart_deriv(cs, np.zeros(cs.dim))
                               @ iota(e, cs.inv))
        sol, *_ = np.linalg.lstsq(Dl, endpoint - q0, rcond=None)
        return sol

    p0 = best[1]
    u0 = np.real(eval_chart(cu, iota(rho * dir_of(p0), cu.inv)))
    end = flow(u0, Lf, dense=False).y[:, -1]
    phi0 = np.clip(initial_phi(end), -0.5, 0.5)

    def resid(z):
        dparams = z[: n_u - 1] if n_u > 1 else np.array([])
        phi_re = z[n_u - 1 :] if n_u > 1 else z
        d = dir_of(dparams) if n_u > 1 else dir_of(p0)
        theta_re = rho * d
        u0 = np.real(eval_chart(cu, iota(theta_re, cu.inv)))
        sol = flow(u0, Lf, dense=False)
        target = np.real(eval_chart(cs, iota(phi_re, cs.inv)))
        return sol.y[:, -1] - target

    if n_u > 1:
        z0 = np.concatenate([p0, phi0])
    else:
        z0 = phi0
    ls = least_squares(resid, z0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    direct_ok = np.all(np.isfinite(ls.x)) and np.linalg.norm(ls.fun) < 1e-6
    if direct_ok:
        if n_u > 1:
            theta_re = rho * dir_of(ls.x[: n_u - 1])
            phi_re = ls.x[n_u - 1 :]
        else:
            theta_re = rho * dir_of(p0)
            phi_re = ls.x
        if np.max(np.abs(phi_re)) > 0.999:
            raise StageError(
                "candidate", "endpoint leaves the stable chart",
                "increase the flight time or enlarge the stable chart")
        theta = iota(theta_re, cu.inv)
        phi = iota(phi_re, cs.inv)
        sol = flow(np.real(eval_chart(cu, theta)), Lf)
        if verbose:
            print(f"  shooting converged: |resid| = "
                  f"{np.linalg.norm(ls.fun):.3e}")

        def traj(s):
            return sol.sol(np.asarray(s) * Lf).T

        return theta, phi, traj

    # two-sided fallback: the single shot is too ill-conditioned when both
    # equilibria are saddles, so follow the needle orbit to its closest
    # approach and integrate backward from the stable chart to meet it there
    jump_tol = float(setup.config.get("candidate_jump_tolerance", 2e-3))
    neg_rhs = setup.field.negate().rhs()

    def flow_back(y0, T):
        return solve_ivp(neg_rhs, (0.0, T), y0, method="DOP853",
                         rtol=1e-12, atol=1e-13, dense_output=True)

    phi_seed = {"z": None}

    def match(alpha, want_sols=False):
        th = iota(rho * dir_of(np.array([alpha])), cu.inv)
        sf = flow(np.real(eval_chart(cu, th)), Lf, rtol=1e-13, atol=1e-14)
        ts = np.linspace(0.4 * Lf, Lf, 600)
        dd = np.linalg.norm(sf.sol(ts) - q0[:, None], axis=0)
        tsw = float(ts[int(np.argmin(dd))])
        xsw = sf.sol(tsw)
        Tb = Lf - tsw

        def resid_back(phi_re):
            y0 = np.real(eval_chart(cs, iota(phi_re, cs.inv)))
            return flow_back(y0, Tb).y[:, -1] - xsw

        z0 = phi_seed["z"] if phi_seed["z"] is not None else \
            np.clip(initial_phi(xsw), -0.3, 0.3)
        ls2 = least_squares(resid_back, z0, xtol=1e-14, ftol=1e-14,
                            gtol=1e-14)
        if not np.all(np.isfinite(ls2.x)):
            return np.inf, None
        phi_seed["z"] = ls2.x
        jump = float(np.linalg.norm(ls2.fun))
        if not want_sols:
            return jump, None
        sb = flow_back(np.real(eval_chart(cs, iota(ls2.x, cs.inv))), Tb)
        return jump, (th, ls2.x, tsw, sf, sb)

    # refine the needle angle against the matching jump itself
    alpha = float(p0[0])
    win = max(float(width), 1e-11)
    best_alpha, best_jump = alpha, match(alpha)[0]
    for _ in range(6):
        local = np.linspace(best_alpha - win, best_alpha + win, 13)
        js = [match(a)[0] for a in local]
        k = int(np.argmin(js))
        if js[k] < best_jump:
            best_jump, best_alpha = js[k], float(local[k])
        win /= 6.0
        if best_jump < 0.02 * jump_tol or win < 1e-16:
            break
    jump, payload = match(best_alpha, want_sols=True)
    if payload is None or jump > jump_tol:
        raise StageError(
            "candidate",
            f"two-sided matching jump {jump:.2e} exceeds {jump_tol:.1e}",
            "increase the flight time or enlarge the charts")
    theta, phi_re, t_sw, sol_f, sol_b = payload
    if np.max(np.abs(phi_re)) > 0.999:
        raise StageError(
            "candidate", "endpoint leaves the stable chart",
            "increase the flight time or enlarge the stable chart")
    phi = iota(phi_re, cs.inv)
    if verbose:
        print(f"  two-sided candidate: switch at t = {t_sw:.3f}, "
              f"matching jump = {jump:.3e}")

    def traj(s):
        t = np.atleast_1d(np.asarray(s, dtype=float)) * Lf
        out = np.empty((t.size, setup.field.n))
        fwd = t <= t_sw
        if fwd.any():
            out[fwd] = sol_f.sol(t[fwd]).T
        if (~fwd).any():
            out[~fwd] = sol_b.sol(Lf - t[~fwd]).T
        return out

    return theta, phi, traj


def assemble_problem(setup: PipelineSetup, theta, phi, traj,
                     verbose: bool = False, m_boost: int = 0,
                     n_scale: float = 1.0):
    """Steps 2.2-3.1: grid, weights, phase reference, flattened candidate."""
    cfg = setup.config
    g = setup.field
    Lf = setup.L.mid()
    try:
        grid0 = decompose_domain(traj, Lf, m=cfg["m"], N=cfg["N"],
                                 m_min=1 + m_boost)
        if cfg["N"] == "auto" and n_scale != 1.0:
            N_scaled = tuple(min(int(np.ceil(n * n_scale)), 220)
                             for n in grid0.N)
            grid0 = Grid(grid0.nodes, grid0.L, N_scaled, grid0.nu)
    except RuntimeError as exc:
        raise StageError("grid", str(exc), "increase the subdomain budget")
    if cfg["nu"] == "auto":
        # provisional weight; the real one is chosen from the refined
        # candidate by finalize_weights (the map itself is weight-free)
        nu_text = "1.000001"
    else:
        nu_text = str(cfg["nu"])
    nu_i = Interval.from_decimal(nu_text)
    grid = Grid(grid0.nodes, setup.L, grid0.N, [nu_i] * grid0.m)
    segments = fit_segments(traj, grid, g.n)
    phase = PhaseReference.from_segments(segments,
                                         convention=cfg["phase_convention"])
    cu, cs = setup.chart_u, setup.chart_s
    problem = ConnectionProblem(
        field=g, grid=grid, n_u=cu.dim, n_s=cs.dim,
        Ku=cu.K, Ks=cs.K, nu_u=cu.nu, nu_s=cs.nu,
        inv_u=cu.inv, inv_s=cs.inv,
        vhat_u=cu.vhat, vhat_s=cs.vhat, eps_u=cu.eps, eps_s=cs.eps,
        phase=phase)
    x0 = flatten(problem, Unknowns(
        problem, theta, phi, cu.lam, cs.lam,
        segments.segs, cu.coeffs, cs.coeffs))
    if verbose:
        print(f"  grid: m={grid.m}, N={grid.N}, nu={nu_text}, "
              f"kappa={problem.layout.kappa}")
    return problem, x0, {"nu": nu_text, "N": list(grid.N),
                         "nodes": [repr(t) for t in grid.nodes]}


def refine_candidate(problem: ConnectionProblem, x0, verbose: bool = False):
    """Step 3.1: Newton refinement followed by exact symmetrization."""
    try:
        xhat = newton_refine(problem, x0, verbose=verbose)
    except RuntimeError as exc:
        raise StageError("newton", str(exc),
                         "improve the candidate (longer flight time or a "
                         "finer grid)")
    xhat = symmetrize(problem, xhat)
    res = float(np.max(np.abs(fnk_float(problem, xhat))))
    if verbose:
        print(f"  symmetrized residual: {res:.3e}")
    if res > 1e-9:
        xhat = symmetrize(problem, newton_refine(problem, xhat,
                                                 verbose=verbose))
    return xhat


def finalize_weights(problem: ConnectionProblem, setup: PipelineSetup,
                     xhat: np.ndarray, verbose: bool = False):
    """Step 3.2: choose the subdomain weights from the refined candidate.

    The zero finding map does not depend on the weights, so the refined
    candidate carries over unchanged; only the grid metadata is rebuilt.
    """
    cfg = setup.config
    if cfg["nu"] != "auto":
        return problem, str(cfg["nu"])
    u = unflatten(problem, xhat)
    segments = OrbitSegments(problem.grid, [np.real(s).astype(complex)
                                            for s in u.a])
    nu_floor = float(cfg.get("nu_floor", 1.08))
    try:
        nu_hat, rep = heuristic_weights(problem.grid, setup.field, segments)
        if rep["nu_max"] < nu_floor and cfg["m"] == "auto":
            raise RuntimeError(
                f"feasible weights reach only {rep['nu_max']:.4f} "
                f"(< {nu_floor})")
    except RuntimeError as exc:
        raise StageError("weights", str(exc),
                         "use more subdomains or more Chebyshev modes")
    nu_text = f"{nu_hat:.6f}"
    while Interval.from_decimal(nu_text).hi >= rep["nu_max"]:
        nu_text = f"{float(nu_text) * 0.999999:.6f}"
    nu_i = Interval.from_decimal(nu_text)
    grid = Grid(problem.grid.nodes, problem.grid.L, problem.grid.N,
                [nu_i] * problem.grid.m)
    rebuilt = ConnectionProblem(
        field=problem.field, grid=grid, n_u=problem.n_u, n_s=problem.n_s,
        Ku=problem.Ku, Ks=problem.Ks, nu_u=problem.nu_u, nu_s=problem.nu_s,
        inv_u=problem.inv_u, inv_s=problem.inv_s,
        vhat_u=problem.vhat_u, vhat_s=problem.vhat_s,
        eps_u=problem.eps_u, eps_s=problem.eps_s, phase=problem.phase)
    if verbose:
        print(f"  weights: nu = {nu_text} "
              f"(feasible up to {rep['nu_max']:.4f})")
    return rebuilt, nu_text


@dataclass
class RunArtifacts:
    problem: ConnectionProblem
    xhat: np.ndarray
    setup: PipelineSetup
    result: ValidationResult
    grid_info: dict


def run_validate(config: dict, out_dir=None, verbose: bool = False,
                 check_resonance: bool = True) -> RunArtifacts:
    """The full pipeline on one config; writes artifacts when out_dir given."""
    t0 = time.perf_counter()
    setup = build_charts(config, verbose=verbose)
    if check_resonance:
        for chart, name in ((setup.chart_u, "unstable"),
                            (setup.chart_s, "stable")):
            lam_half = chart.lam if name == "stable" else -chart.lam
            rep = check_nonresonance(lam_half)
            if rep.resonant:
                raise StageError(
                    f"resonance-{name}",
                    f"resonant eigenvalues, witness k={rep.witness_k}",
                    "move the parameter or use a nonlinear normal form")
    theta, phi, traj = shoot_connection(setup, verbose=verbose)
    # when the weight heuristic reports an infeasible tail bound, follow the
    # standard recovery: more Chebyshev modes and/or more subdomains
    ladder = [(0, 1.0), (0, 1.45), (1, 1.0), (1, 1.45), (2, 1.0),
              (2, 1.45), (3, 1.45)]
    for attempt, (boost, n_scale) in enumerate(ladder):
        problem, x0, grid_info = assemble_problem(setup, theta, phi, traj,
                                                  verbose=verbose,
                                                  m_boost=boost,
                                                  n_scale=n_scale)
        xhat = refine_candidate(problem, x0, verbose=verbose)
        try:
            problem, nu_text = finalize_weights(problem, setup, xhat,
                                                verbose=verbose)
            break
        except StageError:
            if setup.config["m"] != "auto" or attempt == len(ladder) - 1:
                raise
            if verbose:
                print("  weight heuristic infeasible: refining the grid")
    grid_info["nu"] = nu_text
    r_star = Interval.from_decimal(str(setup.config["r_star"]))
    result = validate(problem, xhat, r_star.lo, verbose=verbose)
    result.timings["total"] = time.perf_counter() - t0
    artifacts = RunArtifacts(problem, xhat, setup, result, grid_info)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / "checkpoint.json", artifacts)
        with open(out / "report.json", "w") as fh:
            json.dump(result.to_dict(), fh, indent=1)
        write_orbit_csv(out / "orbit.csv", artifacts)
    return artifacts


# =========================================================================
# Discrete continuation
# =========================================================================

def run_continuation(config: dict, plan: dict, verbose: bool = False) -> list:
    """Validate along a parameter sweep with frozen computational parameters.

    The plan names the swept parameter and gives a fixed step and a step
    count; each accepted step re-runs the full pipeline at the new value
    (charts and candidate are recomputed, the discretization sizes are kept).
    Near-resonant eigendata rejects the step with a witness.
    """
    pname = plan["parameter"]
    step = float(plan["step"])
    count = int(plan["steps"])
    near_tol = float(plan.get("resonance_tolerance", 1e-2))
    cfg = json.loads(json.dumps(config))
    value = float(cfg["field"]["parameters"][pname])
    results = []
    for k in range(count + 1):
        cfg_k = json.loads(json.dumps(cfg))
        cfg_k["field"]["parameters"][pname] = repr(value)
        if verbose:
            print(f"continuation step {k}: {pname} = {value}")
        setup = build_charts(cfg_k, verbose=verbose)
        reports = {}
        for chart, name in ((setup.chart_u, "unstable"),
                            (setup.chart_s, "stable")):
            lam_half = chart.lam if name == "stable" else -chart.lam
            reports[name] = check_nonresonance(lam_half, near_tol=near_tol)
        near = {name: rep for name, rep in reports.items() if rep.near_resonant}
        if near:
            name, rep = next(iter(near.items()))
            results.append({
                "parameter": value, "accepted": False,
                "reason": "near-resonance",
                "witness_k": list(rep.witness_k),
                "witness_i": rep.witness_i,
                "distance": rep.min_distance,
                "side": name,
            })
            if verbose:
                print(f"  rejected: near-resonance on the {name} side, "
                      f"|<lam,k> - lam_i| = {rep.min_distance:.3e}")
            break
        art = run_validate(cfg_k, verbose=verbose, check_resonance=False)
        results.append({
            "parameter": value, "accepted": True,
            "success": art.result.success,
            "r_lo": art.result.r_lo, "r_hi": art.result.r_hi,
            "worst": str(art.result.worst[0]) if art.result.worst else None,
        })
        if not art.result.success:
            if verbose:
                print(f"  validation failed at {pname} = {value}: "
                      f"{art.result.notes}")
            break
        value += step
    return results


# =========================================================================
# Persistence and plot data
# =========================================================================

def _carr(z: np.ndarray) -> list:
    z = np.asarray(z, dtype=complex)
    return [[repr(float(v.real)), repr(float(v.imag))] for v in z.ravel()]


def _carr_load(data, shape) -> np.ndarray:
    flat = np.array([complex(float(re), float(im)) for re, im in data])
    return flat.reshape(shape)


def save_checkpoint(path, art: RunArtifacts):
    problem, xhat = art.problem, art.xhat
    lay = problem.layout
    obj = {
        "schema_version": SCHEMA_VERSION,
        "config": art.setup.config,
        "grid": {
            "nodes": [repr(float(t)) for t in problem.grid.nodes],
            "N": list(lay.N),
            "nu": [problem.grid.nu[i].lo for i in range(lay.m)],
            "nu_hi": [problem.grid.nu[i].hi for i in range(lay.m)],
            "L": [problem.grid.L.lo, problem.grid.L.hi],
        },
        "dims": {"n": lay.n, "n_u": problem.n_u, "n_s": problem.n_s,
                 "Ku": list(lay.Ku), "Ks": list(lay.Ks),
                 "pairs_u": problem.inv_u.pairs, "pairs_s": problem.inv_s.pairs},
        "anchors": {
            "vhat_u": _carr(problem.vhat_u), "vhat_s": _carr(problem.vhat_s),
            "eps_u": [repr(float(e)) for e in problem.eps_u],
            "eps_s": [repr(float(e)) for e in problem.eps_s],
        },
        "phase": {
            "convention": problem.phase.convention,
            "b": [_carr(b) for b in problem.phase.b],
            "shapes": [list(b.shape) for b in problem.phase.b],
        },
        "xhat": _carr(xhat),
        "result": art.result.to_dict(),
        "charts": {"lam_u": _carr(art.setup.chart_u.lam),
                   "lam_s": _carr(art.setup.chart_s.lam),
                   "nu_chart_u": [problem.nu_u.lo, problem.nu_u.hi],
                   "nu_chart_s": [problem.nu_s.lo, problem.nu_s.hi]},
    }
    with open(path, "w") as fh:
        json.dump(obj, fh)


def load_checkpoint(path):
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported checkpoint schema: "
                         f"{obj.get('schema_version')}")
    g = field_from_config(obj["config"]["field"])
    dims = obj["dims"]
    nodes = np.array([float(t) for t in obj["grid"]["nodes"]])
    nu = [Interval(lo, hi) for lo, hi in
          zip(obj["grid"]["nu"], obj["grid"]["nu_hi"])]
    grid = Grid(nodes, Interval(*obj["grid"]["L"]),
                tuple(obj["grid"]["N"]), nu)
    b = [_carr_load(bd, tuple(sh)).real
         for bd, sh in zip(obj["phase"]["b"], obj["phase"]["shapes"])]
    segs = OrbitSegments(grid, [bb.astype(complex) for bb in b])
    phase = PhaseReference.from_segments(segs,
                                         convention=obj["phase"]["convention"])
    n_u, n_s = dims["n_u"], dims["n_s"]
    problem = ConnectionProblem(
        field=g, grid=grid, n_u=n_u, n_s=n_s,
        Ku=tuple(dims["Ku"]), Ks=tuple(dims["Ks"]),
        nu_u=Interval(*obj["charts"]["nu_chart_u"]),
        nu_s=Interval(*obj["charts"]["nu_chart_s"]),
        inv_u=Involution(n_u, dims["pairs_u"]),
        inv_s=Involution(n_s, dims["pairs_s"]),
        vhat_u=_carr_load(obj["anchors"]["vhat_u"], (n_u, dims["n"])),
        vhat_s=_carr_load(obj["anchors"]["vhat_s"], (n_s, dims["n"])),
        eps_u=np.array([float(e) for e in obj["anchors"]["eps_u"]]),
        eps_s=np.array([float(e) for e in obj["anchors"]["eps_s"]]),
        phase=phase)
    xhat = _carr_load(obj["xhat"], (problem.layout.kappa,))
    return problem, xhat, obj


def write_orbit_csv(path, art: RunArtifacts, samples: int = 400):
    problem, xhat = art.problem, art.xhat
    u = unflatten(problem, xhat)
    segments = u.segments()
    Lf = problem.grid.L.mid()
    ts = np.linspace(0.0, 1.0, samples)
    vals = eval_orbit(segments, ts)
    idx = np.clip(np.searchsorted(problem.grid.nodes, ts, side="right") - 1,
                  0, problem.grid.m - 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"u{j + 1}" for j in range(problem.n)] + ["segment"])
        for r, t in enumerate(ts):
            w.writerow([t * Lf] + [f"{v.real:.17g}" for v in vals[r]]
                       + [int(idx[r])])


def emit_plotdata(checkpoint_path, out_dir, chart_samples: int = 24):
    """Orbit samples, chart surface samples and radii-polynomial curves."""
    problem, xhat, obj = load_checkpoint(checkpoint_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    u = unflatten(problem, xhat)
    art = RunArtifacts(problem, xhat, None, _result_from_dict(obj["result"]),
                       {})
    write_orbit_csv(out / "orbit.csv", art)
    # chart surfaces sampled over the real symmetric coordinate box
    for name, coeffs, inv, dim in (
        ("unstable", u.p, problem.inv_u, problem.n_u),
        ("stable", u.q, problem.inv_s, problem.n_s),
    ):
        chart = ManifoldChart(name, np.zeros(dim, dtype=complex),
                              np.asarray(coeffs), Interval(1.0), inv,
                              np.zeros((dim, problem.n), dtype=complex),
                              np.zeros(dim))
        rows = []
        grids = np.meshgrid(*[np.linspace(-0.95, 0.95, chart_samples)] * dim,
                            indexing="ij")
        flat = np.stack([gg.ravel() for gg in grids], axis=1)
        for z in flat:
            if np.linalg.norm(z) > 0.98:
                continue
            val = np.real(eval_chart(chart, iota(z, inv)))
            rows.append(list(z) + list(val))
        with open(out / f"chart_{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"phi{i + 1}" for i in range(dim)]
                       + [f"u{j + 1}" for j in range(problem.n)])
            w.writerows(rows)
    # radii polynomial curves
    res = obj["result"]
    rs = np.geomspace(max(res["r_lo"] / 10, 1e-14),
                      max(res["r_hi"] * 10, 1e-10), 200)
    with open(out / "radii_polynomials.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r"] + [row["pi"] for row in res["table"]])
        for r in rs:
            w.writerow([r] + [row["Z2"] * r * r + (row["Z1"] - 1.0) * r
                              + row["Y"] for row in res["table"]])


def _result_from_dict(d: dict) -> ValidationResult:
    return ValidationResult(d["success"], d["r_lo"], d["r_hi"],
                            d["transversal"],
                            [dict(row) for row in d["table"]],
                            worst=tuple(d["worst"]) if d["worst"] else None,
                            timings=d.get("timings", {}),
                            notes=d.get("notes", []))


def replay(checkpoint_path, verbose: bool = False) -> ValidationResult:
    """Re-run the bound computation from a checkpoint."""
    problem, xhat, obj = load_checkpoint(checkpoint_path)
    r_star = Interval.from_decimal(str(obj["config"]["r_star"]))
    return validate(problem, xhat, r_star.lo, verbose=verbose)
