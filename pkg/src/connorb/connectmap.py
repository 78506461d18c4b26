"""Assembly of the connecting orbit map and its finite reduction.

The unknown is x = (theta, phi, lam_u, lam_s, a^1..a^m, p, q); the map stacks
the two boundary rows, the eigenvector normalization rows, the phase
condition, the ODE rows and the two chart equation families.  A Galerkin
index map flattens everything to C^kappa; the Jacobian is assembled
analytically from the convolution kernels (finite differences are used only
as a test oracle).

Two arithmetic paths share the index bookkeeping: a plain complex floating
path for Newton refinement and an interval path (midpoint + radius matrices)
feeding the validator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .interval import (
    CArray,
    ComplexInterval,
    IArray,
    Interval,
    _vdn,
    _vup,
    gamma_up,
)
from .manifold import ManifoldChart
from .orbit import Grid, OrbitSegments, PhaseReference, endpoint_left, endpoint_right
from .polyfield import PolyVectorField
from .seqspace import ChebSeq, Involution, TaylorArray, graded_lex


# =========================================================================
# Galerkin index map
# =========================================================================

class GalerkinIndexMap:
    """Flat layout of the truncated unknown and range, both of dimension kappa.

    Domain order: theta, phi, lam_u, lam_s, then per subdomain the Chebyshev
    coefficients (component-major, k within component), then the Taylor
    coefficients of the unstable and stable charts (component-major, graded
    lexicographic multi-index order).

    Range order: boundary rows at t_0 and t_m, eigenvector rows, the phase
    row, the ODE rows (domain 1 misses k = 0: its map takes values in the
    quotient by constants), then the chart rows.
    """

    def __init__(self, n, n_u, n_s, N, Ku, Ks):
        if n_u + n_s != n + 1:
            raise ValueError(
                f"non-degeneracy violated: n_u + n_s = {n_u + n_s} != n + 1 = {n + 1}")
        self.n, self.n_u, self.n_s = n, n_u, n_s
        self.N = tuple(int(v) for v in N)
        self.m = len(self.N)
        self.Ku = tuple(int(v) for v in Ku)
        self.Ks = tuple(int(v) for v in Ks)
        self.ku_idx = graded_lex(self.Ku)
        self.ks_idx = graded_lex(self.Ks)
        self.PU = self.ku_idx.shape[0]
        self.QS = self.ks_idx.shape[0]
        self.ku_deg = self.ku_idx.sum(axis=1)
        self.ks_deg = self.ks_idx.sum(axis=1)
        ku_shape = tuple(k + 1 for k in self.Ku)
        ks_shape = tuple(k + 1 for k in self.Ks)
        self.ku_flat = np.ravel_multi_index(self.ku_idx.T, ku_shape)
        self.ks_flat = np.ravel_multi_index(self.ks_idx.T, ks_shape)
        self.ku_pos = {tuple(k): r for r, k in enumerate(self.ku_idx)}
        self.ks_pos = {tuple(k): r for r, k in enumerate(self.ks_idx)}

        # --- domain offsets
        off = 0
        self.theta_sl = slice(off, off + n_u); off += n_u
        self.phi_sl = slice(off, off + n_s); off += n_s
        self.lamu_sl = slice(off, off + n_u); off += n_u
        self.lams_sl = slice(off, off + n_s); off += n_s
        self._a_off = []
        for i in range(self.m):
            self._a_off.append(off)
            off += n * self.N[i]
        self._p_off = off; off += n * self.PU
        self._q_off = off; off += n * self.QS
        self.kappa = off
        expect = n * (2 + sum(self.N) + self.PU + self.QS) + 2
        if self.kappa != expect:
            raise AssertionError("layout dimension mismatch with closed formula")

        # --- range offsets
        off = 0
        self.r_t0 = slice(off, off + n); off += n
        self.r_tm = slice(off, off + n); off += n
        self.r_phat = slice(off, off + n_u); off += n_u
        self.r_qhat = slice(off, off + n_s); off += n_s
        self.r_eta = off; off += 1
        self._ra_off = []
        for i in range(self.m):
            self._ra_off.append(off)
            off += n * (self.N[i] - 1 if i == 0 else self.N[i])
        self._rp_off = off; off += n * self.PU
        self._rq_off = off; off += n * self.QS
        if off != self.kappa:
            raise AssertionError("range dimension differs from domain dimension")

    # domain accessors -----------------------------------------------------

    def a_sl(self, i: int, j: int) -> slice:
        base = self._a_off[i] + j * self.N[i]
        return slice(base, base + self.N[i])

    def p_sl(self, j: int) -> slice:
        base = self._p_off + j * self.PU
        return slice(base, base + self.PU)

    def q_sl(self, j: int) -> slice:
        base = self._q_off + j * self.QS
        return slice(base, base + self.QS)

    # range accessors --------------------------------------------------------

    def ra_rows(self, i: int, j: int, k_from: int = None, k_to: int = None) -> slice:
        """Range rows of the ODE block (i, j); k runs from 1 for domain 0."""
        k0 = 1 if i == 0 else 0
        length = self.N[i] - k0
        base = self._ra_off[i] + j * length
        lo = k0 if k_from is None else max(k_from, k0)
        hi = self.N[i] - 1 if k_to is None else k_to
        return slice(base + (lo - k0), base + (hi - k0) + 1)

    def ra_row(self, i: int, j: int, k: int) -> int:
        k0 = 1 if i == 0 else 0
        if k < k0 or k > self.N[i] - 1:
            raise IndexError(f"ODE row k={k} outside range block {i}")
        length = self.N[i] - k0
        return self._ra_off[i] + j * length + (k - k0)

    def rp_rows(self, j: int) -> slice:
        base = self._rp_off + j * self.PU
        return slice(base, base + self.PU)

    def rq_rows(self, j: int) -> slice:
        base = self._rq_off + j * self.QS
        return slice(base, base + self.QS)


@dataclass
class ConnectionProblem:
    """Static data of one connecting orbit problem."""

    field: PolyVectorField
    grid: Grid
    n_u: int
    n_s: int
    Ku: tuple
    Ks: tuple
    nu_u: Interval
    nu_s: Interval
    inv_u: Involution
    inv_s: Involution
    vhat_u: np.ndarray        # (n_u, n) anchor vectors
    vhat_s: np.ndarray        # (n_s, n)
    eps_u: np.ndarray         # (n_u,)
    eps_s: np.ndarray         # (n_s,)
    phase: PhaseReference

    def __post_init__(self):
        self.layout = GalerkinIndexMap(self.field.n, self.n_u, self.n_s,
                                       self.grid.N, self.Ku, self.Ks)

    @property
    def n(self) -> int:
        return self.field.n


class Unknowns:
    """Structured view of a flattened candidate vector."""

    def __init__(self, problem: ConnectionProblem, theta, phi, lamu, lams,
                 a, p, q):
        self.problem = problem
        self.theta = np.asarray(theta, dtype=complex)
        self.phi = np.asarray(phi, dtype=complex)
        self.lamu = np.asarray(lamu, dtype=complex)
        self.lams = np.asarray(lams, dtype=complex)
        self.a = [np.asarray(s, dtype=complex) for s in a]
        self.p = np.asarray(p, dtype=complex)
        self.q = np.asarray(q, dtype=complex)

    def segments(self) -> OrbitSegments:
        return OrbitSegments(self.problem.grid, self.a)


def flatten(problem: ConnectionProblem, u: Unknowns) -> np.ndarray:
    lay = problem.layout
    v = np.zeros(lay.kappa, dtype=complex)
    v[lay.theta_sl] = u.theta
    v[lay.phi_sl] = u.phi
    v[lay.lamu_sl] = u.lamu
    v[lay.lams_sl] = u.lams
    for i in range(lay.m):
        for j in range(lay.n):
            v[lay.a_sl(i, j)] = u.a[i][:, j]
    for j in range(lay.n):
        v[lay.p_sl(j)] = u.p[..., j].reshape(-1)[lay.ku_flat]
        v[lay.q_sl(j)] = u.q[..., j].reshape(-1)[lay.ks_flat]
    return v


def unflatten(problem: ConnectionProblem, v: np.ndarray) -> Unknowns:
    lay = problem.layout
    a = []
    for i in range(lay.m):
        seg = np.zeros((lay.N[i], lay.n), dtype=complex)
        for j in range(lay.n):
            seg[:, j] = v[lay.a_sl(i, j)]
        a.append(seg)
    p = np.zeros(tuple(k + 1 for k in lay.Ku) + (lay.n,), dtype=complex)
    q = np.zeros(tuple(k + 1 for k in lay.Ks) + (lay.n,), dtype=complex)
    for j in range(lay.n):
        p[..., j].reshape(-1)[lay.ku_flat] = v[lay.p_sl(j)]
        q[..., j].reshape(-1)[lay.ks_flat] = v[lay.q_sl(j)]
    return Unknowns(problem, v[lay.theta_sl], v[lay.phi_sl], v[lay.lamu_sl],
                    v[lay.lams_sl], a, p, q)


# =========================================================================
# Float evaluation of F_NK
# =========================================================================

def _chart_eval(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """sum_k c_k z^k over the dense coefficient box; returns an n-vector."""
    dim = coeffs.ndim - 1
    pows = [np.power(z[i], np.arange(coeffs.shape[i])) for i in range(dim)]
    w = pows[0]
    for i in range(1, dim):
        w = np.multiply.outer(w, pows[i])
    return np.tensordot(w, coeffs, axes=dim)


def _lam_dot(idx: np.ndarray, lam: np.ndarray) -> np.ndarray:
    return idx @ lam


def fnk_float(problem: ConnectionProblem, v: np.ndarray) -> np.ndarray:
    lay = problem.layout
    u = unflatten(problem, v)
    g = problem.field
    out = np.zeros(lay.kappa, dtype=complex)
    # boundary rows
    out[lay.r_t0] = endpoint_left(u.a[0]) - _chart_eval(u.p, u.theta)
    out[lay.r_tm] = endpoint_right(u.a[-1]) - _chart_eval(u.q, u.phi)
    # eigenvector length rows
    for i in range(problem.n_u):
        idx = [0] * problem.n_u
        idx[i] = 1
        out[lay.r_phat.start + i] = (u.p[tuple(idx)] @ np.conj(problem.vhat_u[i])
                                     - problem.eps_u[i])
    for i in range(problem.n_s):
        idx = [0] * problem.n_s
        idx[i] = 1
        out[lay.r_qhat.start + i] = (u.q[tuple(idx)] @ np.conj(problem.vhat_s[i])
                                     - problem.eps_s[i])
    # phase row
    from .orbit import phase_eta_float

    out[lay.r_eta] = phase_eta_float(u.segments(), problem.phase)
    # ODE rows
    for i in range(lay.m):
        a = u.a[i]
        c = g.cheb_apply_float(a)
        Ni = lay.N[i]
        Lq = problem.grid.L.mid() * problem.grid.dt(i) / 4.0
        cm = np.zeros((Ni + 1, lay.n), dtype=complex)
        take = min(c.shape[0], Ni + 1)
        cm[:take] = c[:take]
        ks = np.arange(1, Ni)
        rows = ks[:, None] * a[1:Ni] - Lq * (cm[0 : Ni - 1] - cm[2 : Ni + 1])
        for j in range(lay.n):
            out[lay.ra_rows(i, j, 1, Ni - 1)] = rows[:, j]
        if i >= 1:
            match = endpoint_left(a) - endpoint_right(u.a[i - 1])
            for j in range(lay.n):
                out[lay.ra_row(i, j, 0)] = match[j]
    # chart rows (sign flip at orders <= 1)
    for (coeffs, lam, idx_tab, deg, rows_of) in (
        (u.p, u.lamu, lay.ku_idx, lay.ku_deg, lay.rp_rows),
        (u.q, u.lams, lay.ks_idx, lay.ks_deg, lay.rq_rows),
    ):
        C = g.taylor_apply_float(coeffs)
        lam_k = _lam_dot(idx_tab, lam)
        sign = np.where(deg <= 1, -1.0, 1.0)
        flatC = C.reshape(-1, lay.n)
        box_shape = C.shape[:-1]
        flat_pos = np.ravel_multi_index(idx_tab.T, box_shape)
        for j in range(lay.n):
            coeff_col = coeffs[..., j].reshape(-1)[
                np.ravel_multi_index(idx_tab.T, coeffs.shape[:-1])]
            G = lam_k * coeff_col - flatC[flat_pos, j]
            out[rows_of(j)] = sign * G
    return out


# =========================================================================
# Analytic Jacobian (float path)
# =========================================================================

def _conv_matrix(kernel: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Matrix of w -> kernel (*) w on one-sided sequences.

    Entry [k, k'] = kernel_|k-k'| + (k' >= 1) kernel_{k+k'}.
    """
    ker = np.zeros(rows + cols + 1, dtype=kernel.dtype)
    take = min(kernel.shape[0], ker.shape[0])
    ker[:take] = kernel[:take]
    K, Kp = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    M = ker[np.abs(K - Kp)].copy()
    M[:, 1:] += ker[(K + Kp)[:, 1:]]
    return M


def jac_float(problem: ConnectionProblem, v: np.ndarray) -> np.ndarray:
    lay = problem.layout
    u = unflatten(problem, v)
    g = problem.field
    J = np.zeros((lay.kappa, lay.kappa), dtype=complex)

    # --- boundary rows at t_0
    for j in range(lay.n):
        row = lay.r_t0.start + j
        N0 = lay.N[0]
        signs = 2.0 * (-1.0) ** np.arange(N0)
        signs[0] = 1.0
        J[row, lay.a_sl(0, j)] = signs
        # d/dp_{k,j} = -theta^k
        th_pows = _theta_powers(u.theta, lay.ku_idx)
        J[row, lay.p_sl(j)] = -th_pows
        # d/dtheta_l
        for l in range(problem.n_u):
            dpow = _theta_powers_deriv(u.theta, lay.ku_idx, l)
            col = lay.theta_sl.start + l
            J[row, col] = -np.sum(
                u.p[..., j].reshape(-1)[lay.ku_flat] * dpow)
    # --- boundary rows at t_m
    for j in range(lay.n):
        row = lay.r_tm.start + j
        Nm = lay.N[-1]
        signs = 2.0 * np.ones(Nm)
        signs[0] = 1.0
        J[row, lay.a_sl(lay.m - 1, j)] = signs
        ph_pows = _theta_powers(u.phi, lay.ks_idx)
        J[row, lay.q_sl(j)] = -ph_pows
        for l in range(problem.n_s):
            dpow = _theta_powers_deriv(u.phi, lay.ks_idx, l)
            col = lay.phi_sl.start + l
            J[row, col] = -np.sum(
                u.q[..., j].reshape(-1)[lay.ks_flat] * dpow)
    # --- eigenvector rows
    for i in range(problem.n_u):
        row = lay.r_phat.start + i
        e = tuple(1 if t == i else 0 for t in range(problem.n_u))
        pos = lay.ku_pos[e]
        for j in range(lay.n):
            J[row, lay.p_sl(j).start + pos] = np.conj(problem.vhat_u[i, j])
    for i in range(problem.n_s):
        row = lay.r_qhat.start + i
        e = tuple(1 if t == i else 0 for t in range(problem.n_s))
        pos = lay.ks_pos[e]
        for j in range(lay.n):
            J[row, lay.q_sl(j).start + pos] = np.conj(problem.vhat_s[i, j])
    # --- phase row
    for i in range(lay.m):
        W = problem.phase.weights[i]
        for j in range(lay.n):
            J[lay.r_eta, lay.a_sl(i, j)] = W[:, j]
    # --- ODE rows
    for i in range(lay.m):
        Ni = lay.N[i]
        kernels = g.dc_kernels_float(u.a[i])
        Lq = problem.grid.L.mid() * problem.grid.dt(i) / 4.0
        ks = np.arange(1, Ni)
        for j in range(lay.n):
            rows = lay.ra_rows(i, j, 1, Ni - 1)
            for l in range(lay.n):
                conv = _conv_matrix(kernels[(j, l)], Ni + 1, Ni)
                block = -Lq * (conv[0 : Ni - 1] - conv[2 : Ni + 1])
                if l == j:
                    block = block + np.diag(ks.astype(complex), k=1)[: Ni - 1, :Ni]
                J[rows, lay.a_sl(i, l)] += block
            if i >= 1:
                row0 = lay.ra_row(i, j, 0)
                signs = -2.0 * np.ones(lay.N[i - 1])
                signs[0] = -1.0
                J[row0, lay.a_sl(i - 1, j)] = signs
                signs2 = 2.0 * (-1.0) ** np.arange(Ni)
                signs2[0] = 1.0
                J[row0, lay.a_sl(i, j)] = signs2
    # --- chart rows
    _jac_chart_blocks(problem, J, u.p, u.lamu, lay.ku_idx, lay.ku_deg,
                      lay.ku_pos, lay.rp_rows, lay.p_sl, lay.lamu_sl)
    _jac_chart_blocks(problem, J, u.q, u.lams, lay.ks_idx, lay.ks_deg,
                      lay.ks_pos, lay.rq_rows, lay.q_sl, lay.lams_sl)
    return J


def _theta_powers(theta: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """theta^k for every multi-index row of idx."""
    out = np.ones(idx.shape[0], dtype=complex)
    for l in range(idx.shape[1]):
        out *= np.power(theta[l], idx[:, l])
    return out


def _theta_powers_deriv(theta: np.ndarray, idx: np.ndarray, l: int) -> np.ndarray:
    """d/dtheta_l of theta^k: k_l theta^{k - e_l}."""
    out = idx[:, l].astype(complex)
    for t in range(idx.shape[1]):
        e = idx[:, t] - (1 if t == l else 0)
        base = np.power(theta[t], np.maximum(e, 0))
        out = out * np.where(e >= 0, base, 0.0)
    return out


def _jac_chart_blocks(problem, J, coeffs, lam, idx_tab, deg, pos_of, rows_of,
                      cols_of, lam_sl):
    lay = problem.layout
    g = problem.field
    dim = idx_tab.shape[1]
    R = idx_tab.shape[0]
    kernels = g.dC_kernels_float(coeffs)
    sign = np.where(deg <= 1, -1.0, 1.0)
    lam_k = idx_tab @ lam
    # index differences: diff[r, c] = k_r - k_c, valid when componentwise >= 0
    diff = idx_tab[:, None, :] - idx_tab[None, :, :]
    valid = np.all(diff >= 0, axis=2)
    for j in range(lay.n):
        rows = rows_of(j)
        # d/dlam_i: sign * k_i p_k
        col_coeff = coeffs[..., j].reshape(-1)[
            np.ravel_multi_index(idx_tab.T, coeffs.shape[:-1])]
        for i in range(dim):
            J[rows, lam_sl.start + i] = sign * idx_tab[:, i] * col_coeff
        for l in range(lay.n):
            ker = kernels[(j, l)]
            kshape = ker.shape[:-1] if ker.ndim > dim else ker.shape
            ker_flat = ker.reshape(-1)
            lin = np.zeros((R, R), dtype=complex)
            d = diff[valid]
            inside = np.all(d <= (np.array(kshape) - 1), axis=1)
            rr, cc = np.nonzero(valid)
            rr, cc, d = rr[inside], cc[inside], d[inside]
            flat = np.ravel_multi_index(d.T, kshape)
            lin[rr, cc] = ker_flat[flat]
            block = -lin
            if l == j:
                block = block + np.diag(lam_k)
            J[rows, cols_of(l)] += sign[:, None] * block


# =========================================================================
# Newton refinement and the approximate inverse
# =========================================================================

def newton_refine(problem: ConnectionProblem, v0: np.ndarray,
                  tol: float = 1e-13, max_iter: int = 60,
                  verbose: bool = False) -> np.ndarray:
    """Damped Newton with chord reuse of the LU factorization."""
    v = np.asarray(v0, dtype=complex).copy()
    lu = None
    last_res = np.inf
    for it in range(max_iter):
        r = fnk_float(problem, v)
        res = float(np.max(np.abs(r)))
        scale = max(1.0, float(np.max(np.abs(v))))
        if verbose:
            print(f"  newton iter {it}: residual {res:.3e}")
        if res <= tol * scale:
            return v
        if lu is None or res > 0.5 * last_res:
            J = jac_float(problem, v)
            lu = scipy.linalg.lu_factor(J, overwrite_a=True, check_finite=False)
        step = scipy.linalg.lu_solve(lu, r, check_finite=False)
        if not np.all(np.isfinite(step)):
            raise RuntimeError("Newton step is not finite: singular Jacobian")
        v = v - step
        last_res = res
    raise RuntimeError(f"Newton did not reach tolerance {tol} in {max_iter} "
                       f"iterations (last residual {last_res:.3e})")


def build_approx_inverse(J: np.ndarray) -> np.ndarray:
    """Floating inverse of the midpoint Jacobian (the validator encloses it)."""
    A = scipy.linalg.inv(J, check_finite=False)
    if not np.all(np.isfinite(A)):
        raise RuntimeError("approximate inverse is not finite")
    return A


def symmetrize(problem: ConnectionProblem, v: np.ndarray) -> np.ndarray:
    """Impose the exact symmetry x* = x on a flattened candidate."""
    lay = problem.layout
    u = unflatten(problem, v)

    def sym_vector(z, inv: Involution):
        z = z.copy()
        for jj in range(inv.pairs):
            z[2 * jj + 1] = np.conj(z[2 * jj])
        for t in range(2 * inv.pairs, inv.d):
            z[t] = z[t].real
        return z

    def sym_box(box, inv: Involution, idx_tab, pos_of):
        out = box.copy()
        perm = inv.perm()
        for k in idx_tab:
            kk = tuple(int(x) for x in k)
            ks = tuple(int(x) for x in np.asarray(kk)[perm])
            if ks == kk:
                out[kk] = np.real(out[kk])
            elif kk < ks:
                out[ks] = np.conj(out[kk])
        return out

    theta = sym_vector(u.theta, problem.inv_u)
    phi = sym_vector(u.phi, problem.inv_s)
    lamu = sym_vector(u.lamu, problem.inv_u)
    lams = sym_vector(u.lams, problem.inv_s)
    a = [np.real(s).astype(complex) for s in u.a]
    p = sym_box(u.p, problem.inv_u, lay.ku_idx, lay.ku_pos)
    q = sym_box(u.q, problem.inv_s, lay.ks_idx, lay.ks_pos)
    return flatten(problem, Unknowns(problem, theta, phi, lamu, lams, a, p, q))


def star_candidate(problem: ConnectionProblem, v: np.ndarray) -> np.ndarray:
    """x* on flattened candidates (conjugate and permute pair indices)."""
    lay = problem.layout
    u = unflatten(problem, v)
    from .seqspace import star

    p_star = star(TaylorArray(CArray.exact(u.p), problem.nu_u), problem.inv_u).mid()
    q_star = star(TaylorArray(CArray.exact(u.q), problem.nu_s), problem.inv_s).mid()
    return flatten(problem, Unknowns(
        problem,
        problem.inv_u.apply_vector(u.theta),
        problem.inv_s.apply_vector(u.phi),
        problem.inv_u.apply_vector(u.lamu),
        problem.inv_s.apply_vector(u.lams),
        [np.conj(s) for s in u.a],
        p_star, q_star))


def star_range(problem: ConnectionProblem, y: np.ndarray) -> np.ndarray:
    """The involution on flattened range vectors."""
    lay = problem.layout
    out = np.conj(y.copy())
    # eigenvector rows permute like the eigencoordinates themselves
    out[lay.r_phat] = out[lay.r_phat][problem.inv_u.perm()]
    out[lay.r_qhat] = out[lay.r_qhat][problem.inv_s.perm()]
    # chart rows permute within each component block
    for idx_tab, pos_of, rows_of, inv in (
        (lay.ku_idx, lay.ku_pos, lay.rp_rows, problem.inv_u),
        (lay.ks_idx, lay.ks_pos, lay.rq_rows, problem.inv_s),
    ):
        perm = inv.perm()
        reorder = np.array([pos_of[tuple(int(x) for x in np.asarray(k)[perm])]
                            for k in idx_tab])
        for j in range(lay.n):
            rows = rows_of(j)
            out[rows] = out[rows][reorder]
    return out


# =========================================================================
# Interval evaluation: F_NK(xhat) and DF_NK(xhat)
# =========================================================================

def _ci_pow_vec(z: list, idx: np.ndarray) -> list:
    """theta^k as ComplexIntervals for every multi-index row."""
    dim = idx.shape[1]
    maxes = idx.max(axis=0)
    tables = []
    for l in range(dim):
        tab = [ComplexInterval(Interval(1.0))]
        for e in range(1, maxes[l] + 1):
            tab.append(tab[-1] * z[l])
        tables.append(tab)
    out = []
    for k in idx:
        acc = ComplexInterval(Interval(1.0))
        for l in range(dim):
            acc = acc * tables[l][k[l]]
        out.append(acc)
    return out


class IntervalData:
    """Interval enclosures shared by the residual and Jacobian assembly."""

    def __init__(self, problem: ConnectionProblem, v: np.ndarray):
        self.problem = problem
        self.u = unflatten(problem, v)
        g = problem.field
        lay = problem.layout
        self.cheb = [ChebSeq(CArray.exact(self.u.a[i]), problem.grid.nu[i])
                     for i in range(lay.m)]
        self.c_of_a = [g.cheb_apply(self.cheb[i]) for i in range(lay.m)]
        self.g_kernels = [g.dc_kernels(self.cheb[i]) for i in range(lay.m)]
        self.p_tay = TaylorArray(CArray.exact(self.u.p), problem.nu_u)
        self.q_tay = TaylorArray(CArray.exact(self.u.q), problem.nu_s)
        self.C_of_p = g.taylor_apply(self.p_tay)
        self.C_of_q = g.taylor_apply(self.q_tay)
        self.G_u = g.dC_kernels(self.p_tay)
        self.G_s = g.dC_kernels(self.q_tay)


def fnk_interval(problem: ConnectionProblem, data: IntervalData) -> CArray:
    """Enclosure of F_NK(xhat) as a flat complex interval vector."""
    lay = problem.layout
    g = problem.field
    u = data.u
    out = CArray.zeros((lay.kappa,))

    def setc(i, val: ComplexInterval):
        out[i] = val

    # boundary rows
    th_pows = _ci_pow_vec([ComplexInterval.from_complex(z) for z in u.theta],
                          lay.ku_idx)
    ph_pows = _ci_pow_vec([ComplexInterval.from_complex(z) for z in u.phi],
                          lay.ks_idx)
    for j in range(lay.n):
        a1 = data.cheb[0].coeffs[:, j]
        signs = CArray.exact(((-1.0) ** np.arange(lay.N[0])).astype(complex))
        left = (a1 * signs)[1:].sum_axis(0) * 2.0 + a1[0]
        acc = ComplexInterval(Interval(left.re.lo[()], left.re.hi[()]),
                              Interval(left.im.lo[()], left.im.hi[()]))
        pj = u.p[..., j].reshape(-1)[lay.ku_flat]
        for r in range(lay.PU):
            acc = acc - th_pows[r] * ComplexInterval.from_complex(complex(pj[r]))
        setc(lay.r_t0.start + j, acc)
        am = data.cheb[-1].coeffs[:, j]
        right = am[1:].sum_axis(0) * 2.0 + am[0]
        acc2 = ComplexInterval(Interval(right.re.lo[()], right.re.hi[()]),
                               Interval(right.im.lo[()], right.im.hi[()]))
        qj = u.q[..., j].reshape(-1)[lay.ks_flat]
        for r in range(lay.QS):
            acc2 = acc2 - ph_pows[r] * ComplexInterval.from_complex(complex(qj[r]))
        setc(lay.r_tm.start + j, acc2)
    # eigenvector rows
    for i in range(problem.n_u):
        e = tuple(1 if t == i else 0 for t in range(problem.n_u))
        acc = ComplexInterval(Interval(0.0))
        for j in range(lay.n):
            acc = acc + (ComplexInterval.from_complex(complex(u.p[e + (j,)]))
                         * ComplexInterval.from_complex(complex(np.conj(problem.vhat_u[i, j]))))
        setc(lay.r_phat.start + i, acc - ComplexInterval(Interval(problem.eps_u[i])))
    for i in range(problem.n_s):
        e = tuple(1 if t == i else 0 for t in range(problem.n_s))
        acc = ComplexInterval(Interval(0.0))
        for j in range(lay.n):
            acc = acc + (ComplexInterval.from_complex(complex(u.q[e + (j,)]))
                         * ComplexInterval.from_complex(complex(np.conj(problem.vhat_s[i, j]))))
        setc(lay.r_qhat.start + i, acc - ComplexInterval(Interval(problem.eps_s[i])))
    # phase row
    from .orbit import phase_eta_interval

    eta = phase_eta_interval(u.segments(), problem.phase)
    setc(lay.r_eta, eta)
    # ODE rows
    for i in range(lay.m):
        Ni = lay.N[i]
        c = data.c_of_a[i].pad_to(Ni + 1)
        Lq = problem.grid.quarter_coeff(i)
        apad = data.cheb[i].coeffs
        for k in range(1, Ni):
            diff = c.coeffs[k - 1] - c.coeffs[k + 1]
            valk = apad[k] * float(k) - diff * Lq
            for j in range(lay.n):
                out[lay.ra_row(i, j, k)] = valk.at((j,))
        if i >= 1:
            prev = data.cheb[i - 1].coeffs
            signs = CArray.exact(((-1.0) ** np.arange(lay.N[i]))
                                 .astype(complex)[:, None])
            left = (apad * signs)[1:].sum_axis(0) * 2.0 + apad[0]
            right = prev[1:].sum_axis(0) * 2.0 + prev[0]
            match = left - right
            for j in range(lay.n):
                out[lay.ra_row(i, j, 0)] = match.at((j,))
    # chart rows
    for (tay, C, lam, idx_tab, deg, rows_of) in (
        (data.p_tay, data.C_of_p, u.lamu, lay.ku_idx, lay.ku_deg, lay.rp_rows),
        (data.q_tay, data.C_of_q, u.lams, lay.ks_idx, lay.ks_deg, lay.rq_rows),
    ):
        for r, k in enumerate(idx_tab):
            kk = tuple(int(x) for x in k)
            lam_k = ComplexInterval(Interval(0.0))
            for i, ki in enumerate(kk):
                if ki:
                    lam_k = lam_k + ComplexInterval.from_complex(complex(lam[i])) * float(ki)
            s = -1.0 if deg[r] <= 1 else 1.0
            for j in range(lay.n):
                pk = ComplexInterval.from_complex(complex(tay.coeffs.mid()[kk + (j,)]))
                Ck = C.coeffs.at(kk + (j,))
                G = lam_k * pk - Ck
                out[rows_of(j).start + r] = G * s
    return out


def jac_interval(problem: ConnectionProblem, data: IntervalData):
    """Enclosure of DF_NK(xhat): midpoint matrix plus disk radii.

    Returns (mid complex (kappa, kappa), rad float (kappa, kappa)).
    """
    lay = problem.layout
    u = data.u
    kappa = lay.kappa
    mid = np.zeros((kappa, kappa), dtype=complex)
    rad = np.zeros((kappa, kappa))

    def put(rows, cols, block: CArray):
        mid[rows, cols] = block.mid()
        rad[rows, cols] = block.rad_upper()

    def put_exact(rows, cols, arr):
        mid[rows, cols] = arr

    # boundary rows at t_0 / t_m
    th_ci = [ComplexInterval.from_complex(z) for z in u.theta]
    ph_ci = [ComplexInterval.from_complex(z) for z in u.phi]
    th_pows = _ci_pow_vec(th_ci, lay.ku_idx)
    ph_pows = _ci_pow_vec(ph_ci, lay.ks_idx)
    th_arr = _ci_list_to_carray(th_pows)
    ph_arr = _ci_list_to_carray(ph_pows)
    for j in range(lay.n):
        row = lay.r_t0.start + j
        N0 = lay.N[0]
        signs = 2.0 * (-1.0) ** np.arange(N0)
        signs[0] = 1.0
        put_exact(row, lay.a_sl(0, j), signs.astype(complex))
        put(row, lay.p_sl(j), -th_arr)
        for l in range(problem.n_u):
            dsum = _ci_deriv_sum(th_ci, lay.ku_idx, l,
                                 u.p[..., j].reshape(-1)[lay.ku_flat])
            col = lay.theta_sl.start + l
            mid[row, col] = (-dsum).mid()
            rad[row, col] = (-dsum).rad_upper_scalar()
        row = lay.r_tm.start + j
        Nm = lay.N[-1]
        signs = 2.0 * np.ones(Nm)
        signs[0] = 1.0
        put_exact(row, lay.a_sl(lay.m - 1, j), signs.astype(complex))
        put(row, lay.q_sl(j), -ph_arr)
        for l in range(problem.n_s):
            dsum = _ci_deriv_sum(ph_ci, lay.ks_idx, l,
                                 u.q[..., j].reshape(-1)[lay.ks_flat])
            col = lay.phi_sl.start + l
            mid[row, col] = (-dsum).mid()
            rad[row, col] = (-dsum).rad_upper_scalar()
    # eigenvector rows (exact entries)
    for i in range(problem.n_u):
        row = lay.r_phat.start + i
        e = tuple(1 if t == i else 0 for t in range(problem.n_u))
        pos = lay.ku_pos[e]
        for j in range(lay.n):
            mid[row, lay.p_sl(j).start + pos] = np.conj(problem.vhat_u[i, j])
    for i in range(problem.n_s):
        row = lay.r_qhat.start + i
        e = tuple(1 if t == i else 0 for t in range(problem.n_s))
        pos = lay.ks_pos[e]
        for j in range(lay.n):
            mid[row, lay.q_sl(j).start + pos] = np.conj(problem.vhat_s[i, j])
    # phase row: weights enclosed from the reference data
    for i in range(lay.m):
        Wi = _eta_weights_interval(problem.phase, i)
        for j in range(lay.n):
            put(lay.r_eta, lay.a_sl(i, j),
                CArray(Wi[:, j], IArray.zeros((lay.N[i],))))
    # ODE rows
    for i in range(lay.m):
        Ni = lay.N[i]
        Lq = problem.grid.quarter_coeff(i)
        for j in range(lay.n):
            rows = lay.ra_rows(i, j, 1, Ni - 1)
            for l in range(lay.n):
                ker = data.g_kernels[i][(j, l)]
                conv = _conv_matrix_interval(ker, Ni + 1, Ni)
                blk = (conv[0 : Ni - 1] - conv[2 : Ni + 1]) * \
                    CArray(IArray.from_scalar(-Lq), IArray.zeros(()))
                if l == j:
                    diag = np.zeros((Ni - 1, Ni), dtype=complex)
                    diag[np.arange(Ni - 1), np.arange(1, Ni)] = np.arange(1, Ni)
                    blk = blk + CArray.exact(diag)
                put(rows, lay.a_sl(i, l), blk)
            if i >= 1:
                row0 = lay.ra_row(i, j, 0)
                signs = -2.0 * np.ones(lay.N[i - 1])
                signs[0] = -1.0
                put_exact(row0, lay.a_sl(i - 1, j), signs.astype(complex))
                signs2 = 2.0 * (-1.0) ** np.arange(Ni)
                signs2[0] = 1.0
                put_exact(row0, lay.a_sl(i, j), signs2.astype(complex))
    # chart rows
    _jac_chart_blocks_interval(problem, mid, rad, u.p, u.lamu, lay.ku_idx,
                               lay.ku_deg, lay.rp_rows, lay.p_sl, lay.lamu_sl,
                               data.G_u)
    _jac_chart_blocks_interval(problem, mid, rad, u.q, u.lams, lay.ks_idx,
                               lay.ks_deg, lay.rq_rows, lay.q_sl, lay.lams_sl,
                               data.G_s)
    return mid, rad


def _ci_list_to_carray(vals: list) -> CArray:
    n = len(vals)
    out = CArray.zeros((n,))
    for i, v in enumerate(vals):
        out[i] = v
    return out


def _ci_deriv_sum(z: list, idx: np.ndarray, l: int, coeffs: np.ndarray):
    """sum_k k_l c_k z^{k - e_l} as a ComplexInterval with a radius helper."""
    acc = ComplexInterval(Interval(0.0))
    for r, k in enumerate(idx):
        if k[l] == 0:
            continue
        mono = ComplexInterval(Interval(float(k[l])))
        for t in range(idx.shape[1]):
            e = int(k[t]) - (1 if t == l else 0)
            for _ in range(e):
                mono = mono * z[t]
        acc = acc + mono * ComplexInterval.from_complex(complex(coeffs[r]))

    class _Wrap:
        def __init__(self, ci):
            self.ci = ci

        def __neg__(self):
            return _Wrap(-self.ci)

        def mid(self):
            return self.ci.mid()

        def rad_upper_scalar(self):
            m = self.ci.mid()
            rr = max(m.real - self.ci.re.lo, self.ci.re.hi - m.real)
            ri = max(m.imag - self.ci.im.lo, self.ci.im.hi - m.imag)
            return float(np.nextafter(np.hypot(rr, ri), np.inf))

    return _Wrap(acc)


def _conv_matrix_interval(kernel: ChebSeq, rows: int, cols: int) -> CArray:
    ker = CArray.zeros((rows + cols + 1,))
    take = min(kernel.support, rows + cols + 1)
    ker[:take] = kernel.coeffs[:take, 0]
    K, Kp = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    first = ker[np.abs(K - Kp)]
    second = ker[K + Kp]
    mask = np.zeros((rows, cols))
    mask[:, 1:] = 1.0
    return first + second * CArray.exact(mask.astype(complex))


def _eta_weights_interval(phase: PhaseReference, i: int) -> IArray:
    """Interval enclosure of the affine phase weights on subdomain i."""
    b = phase.b[i]
    N, n = b.shape
    W = IArray.zeros((N, n))
    kmax0 = (N - 1) // 2 - 1 if phase.convention == "paper" else (N - 1) // 2
    for j in range(n):
        acc = Interval(0.0)
        for k in range(kmax0 + 1):
            if 2 * k + 1 <= N - 1:
                acc = acc + Interval(b[2 * k + 1, j])
        W[0, j] = acc
    for k in range(1, N):
        for j in range(n):
            acc = Interval(0.0)
            for l in range(1, N):
                if (k + l) % 2 == 1 and 1 <= (k + l - 1) // 2 <= N - 2:
                    w = Interval(float(l * l)) / Interval(float(l * l - k * k))
                    acc = acc + Interval(b[l, j]) * w
            W[k, j] = acc * 2.0
    return W


def _jac_chart_blocks_interval(problem, mid, rad, coeffs, lam, idx_tab, deg,
                               rows_of, cols_of, lam_sl, kernels):
    lay = problem.layout
    dim = idx_tab.shape[1]
    R = idx_tab.shape[0]
    sign = np.where(deg <= 1, -1.0, 1.0)
    lam_k = idx_tab @ lam
    diff = idx_tab[:, None, :] - idx_tab[None, :, :]
    valid = np.all(diff >= 0, axis=2)
    rr_all, cc_all = np.nonzero(valid)
    d_all = diff[valid]
    for j in range(lay.n):
        rows = rows_of(j)
        col_coeff = coeffs[..., j].reshape(-1)[
            np.ravel_multi_index(idx_tab.T, coeffs.shape[:-1])]
        for i in range(dim):
            mid[rows, lam_sl.start + i] = sign * idx_tab[:, i] * col_coeff
        for l in range(lay.n):
            ker = kernels[(j, l)]
            kshape = ker.K
            box = tuple(s + 1 for s in kshape)
            inside = np.all(d_all <= np.array(kshape), axis=1)
            rr, cc, d = rr_all[inside], cc_all[inside], d_all[inside]
            flat = np.ravel_multi_index(d.T, box)
            kmid = ker.mid()[..., 0].reshape(-1)
            krad = ker.coeffs.rad_upper()[..., 0].reshape(-1)
            blk_mid = np.zeros((R, R), dtype=complex)
            blk_rad = np.zeros((R, R))
            blk_mid[rr, cc] = -kmid[flat]
            blk_rad[rr, cc] = krad[flat]
            if l == j:
                blk_mid[np.arange(R), np.arange(R)] += lam_k
            mid[rows, cols_of(l)] += sign[:, None] * blk_mid
            rad[rows, cols_of(l)] += blk_rad
