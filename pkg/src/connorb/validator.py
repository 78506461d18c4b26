"""Rigorous contraction bounds and the radii-polynomial certificate.

Given a symmetric approximate zero and the floating approximate inverse, this
module computes, per projection Pi of the product space:

* Y_Pi  -- residual bounds for A F(xhat), finite by support counting;
* H_Pi  -- the defect norm ||Pi (I - A_NK DF_NK(xhat))||;
* Z1_Pi -- first order bounds: H plus boundary, convolution-band and
  invariance-tail (Lambda) contributions;
* Z2_Pi -- second order bounds from interval enclosures of the data, the
  Phi log-bounds, the absolute-coefficient Hessian majorant and the sigma
  tail estimates;

and then certifies an interval of radii on which every quadratic
Z2 r^2 + (Z1 - 1) r + Y is negative.  Success implies existence, realness
and transversality of the connecting orbit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg

from .connectmap import ConnectionProblem, IntervalData, fnk_interval, jac_interval
from .interval import (
    CArray,
    ComplexInterval,
    E_INTERVAL,
    IArray,
    Interval,
    _vdn,
    _vup,
    cmatmul,
    gamma_up,
    sum_upper,
)
from .seqspace import ChebSeq, graded_lex

_EPS = 2.0 ** -53
_TINY = 5e-324


def _nn_matmul_up(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Upper bound of the exact product of nonnegative float matrices."""
    k = X.shape[-1]
    g = gamma_up(max(k, 2) + 2)
    P = X @ Y
    return _vup(P * (1.0 + 2.0 * g) + k * _TINY)


def _cabs_up(Z: np.ndarray) -> np.ndarray:
    """Upper bound of |Z| for a complex float array."""
    return _vup(np.abs(Z) * (1.0 + 16.0 * _EPS))


# =========================================================================
# Projections and weights
# =========================================================================

@dataclass
class PiProjection:
    label: tuple              # ("theta", j) | ("a", i, j) | ("P", j) | ...
    rows: np.ndarray          # domain indices of this component
    weights: np.ndarray       # norm row-weights (upper bounds)


def build_pis(problem: ConnectionProblem) -> list:
    from .seqspace import cheb_weights_upper, taylor_weights_upper

    lay = problem.layout
    pis = []
    for j in range(problem.n_u):
        pis.append(PiProjection(("theta", j),
                                np.array([lay.theta_sl.start + j]), np.ones(1)))
    for j in range(problem.n_s):
        pis.append(PiProjection(("phi", j),
                                np.array([lay.phi_sl.start + j]), np.ones(1)))
    for j in range(problem.n_u):
        pis.append(PiProjection(("lamu", j),
                                np.array([lay.lamu_sl.start + j]), np.ones(1)))
    for j in range(problem.n_s):
        pis.append(PiProjection(("lams", j),
                                np.array([lay.lams_sl.start + j]), np.ones(1)))
    for i in range(lay.m):
        w = cheb_weights_upper(lay.N[i], problem.grid.nu[i])
        for j in range(lay.n):
            sl = lay.a_sl(i, j)
            pis.append(PiProjection(("a", i, j),
                                    np.arange(sl.start, sl.stop), w))
    wu = taylor_weights_upper(lay.ku_deg, problem.nu_u)
    for j in range(lay.n):
        sl = lay.p_sl(j)
        pis.append(PiProjection(("P", j), np.arange(sl.start, sl.stop), wu))
    ws = taylor_weights_upper(lay.ks_deg, problem.nu_s)
    for j in range(lay.n):
        sl = lay.q_sl(j)
        pis.append(PiProjection(("Q", j), np.arange(sl.start, sl.stop), ws))
    expect = lay.n * (lay.m + 4) + 2
    if len(pis) != expect:
        raise AssertionError(f"projection count {len(pis)} != {expect}")
    return pis


def weight_matrix(problem: ConnectionProblem, pis: list) -> np.ndarray:
    W = np.zeros((len(pis), problem.layout.kappa))
    for r, pi in enumerate(pis):
        W[r, pi.rows] = pi.weights
    return W


def domain_corner_weights(problem: ConnectionProblem) -> np.ndarray:
    """Corner-point sizes of the flattened domain unit vectors (upper)."""
    from .seqspace import cheb_corner_weights_upper, taylor_corner_weights_upper

    lay = problem.layout
    eps = np.ones(lay.kappa)
    for i in range(lay.m):
        w = cheb_corner_weights_upper(lay.N[i], problem.grid.nu[i])
        for j in range(lay.n):
            eps[lay.a_sl(i, j)] = w
    wu = taylor_corner_weights_upper(lay.ku_deg, problem.nu_u)
    ws = taylor_corner_weights_upper(lay.ks_deg, problem.nu_s)
    for j in range(lay.n):
        eps[lay.p_sl(j)] = wu
        eps[lay.q_sl(j)] = ws
    return eps


def candidate_norm_upper(problem: ConnectionProblem, dv: np.ndarray) -> float:
    """Upper bound of ||dv||_X for an exact float candidate difference."""
    pis = build_pis(problem)
    W = weight_matrix(problem, pis)
    vals = _nn_matmul_up(W, _cabs_up(dv)[:, None]).ravel()
    return float(vals.max())


# =========================================================================
# Convolution kernel operators (band plus reflection)
# =========================================================================

class ConvKernelOps:
    """The one-sided matrix machinery of a single kernel g^{ijl}.

    Stores the two-sided differences b_k = a_{k-1} - a_{k+1} and exposes the
    finite matrix B(a), tail column norms of the scaled band, and the
    operator norm of the tail map Gamma(a).
    """

    def __init__(self, kernel: ChebSeq, N: int, M_jl: int, nu: Interval):
        self.N = int(N)
        self.M = max(int(M_jl), 0)
        self.Mt = self.M * (self.N - 1) + 1
        self.nu = nu
        Mt = self.Mt
        a = CArray.zeros((Mt + 2,))
        take = min(kernel.support, Mt + 2)
        a[:take] = kernel.coeffs[:take, 0]
        # two-sided b over offsets -Mt..Mt (index shift +Mt)
        b = CArray.zeros((2 * Mt + 1,))
        for k in range(-Mt, Mt + 1):
            am = a[abs(k - 1)]
            ap = a[abs(k + 1)]
            b[k + Mt] = am - ap
        self.b = b
        self.babs = b.abs_sup()

    def s_entry_abs(self, k: int, kp: int) -> float:
        """|S[k, k']| upper bound (band plus reflection)."""
        Mt = self.Mt
        v = 0.0
        d = k - kp
        if -Mt <= d <= Mt:
            v += self.babs[d + Mt]
        s = k + kp
        if kp >= 1 and s <= Mt:
            v += self.babs[s + Mt]
        return _vup(np.float64(v))[()] if v else 0.0

    def B_matrix(self) -> CArray:
        """B(a): rows 1..N-1, columns 0..Mt+N-1 with columns < N zeroed."""
        N, Mt = self.N, self.Mt
        out = CArray.zeros((N - 1, Mt + N))
        for k in range(1, N):
            for kp in range(N, Mt + N):
                val = ComplexInterval(Interval(0.0))
                nonzero = False
                d = k - kp
                if -Mt <= d <= Mt:
                    val = val + self.b.at((d + Mt,))
                    nonzero = True
                s = k + kp
                if s <= Mt:
                    val = val + self.b.at((s + Mt,))
                    nonzero = True
                if nonzero:
                    out[k - 1, kp] = val
        return out

    def tail_colnorms(self, kp_max: int, scaled: bool = True) -> np.ndarray:
        """Column sums of the weighted tail rows, for columns 0..kp_max.

        Row k >= N carries the norm weight 2 nu^k, divided by k when
        ``scaled`` (the composition with the approximate inverse).
        """
        N, Mt = self.N, self.Mt
        kmax_row = kp_max + Mt
        from .interval import pow_upper

        nupow = pow_upper(abs(self.nu), np.arange(kmax_row + 1))
        out = np.zeros(kp_max + 1)
        for kp in range(kp_max + 1):
            terms = []
            for k in range(max(N, kp - Mt), kp + Mt + 1):
                sab = self.s_entry_abs(k, kp)
                if sab == 0.0:
                    continue
                w = _vup(2.0 * nupow[k])
                if scaled:
                    w = _vup(w / k)
                terms.append(_vup(sab * w))
            out[kp] = sum_upper(np.array(terms)) if terms else 0.0
        return out

    def gamma_norm(self) -> Interval:
        """Operator norm of Gamma(a): determined by its first 2 Mt+1 columns."""
        from .seqspace import cheb_corner_weights_upper

        kp_max = 2 * self.Mt
        cols = self.tail_colnorms(kp_max, scaled=False)
        eps = cheb_corner_weights_upper(kp_max + 1, self.nu)
        return Interval(0.0, float(np.max(_vup(cols * eps))))


# =========================================================================
# Validation context
# =========================================================================

class ValidationContext:
    """Shared enclosures: DF, A, |A|, column norm table, kernels.

    Above ``stage_threshold`` unknowns the Jacobian enclosure is staged to
    disk (transposed, so the column sweep of the defect product streams
    contiguously) and the inversion runs in place; resident memory then stays
    near two kappa^2 float buffers.
    """

    stage_threshold = 6500

    def __init__(self, problem: ConnectionProblem, v: np.ndarray,
                 r_star: float, workdir=None, block: int = 1024,
                 verbose: bool = False):
        import tempfile
        from pathlib import Path

        t0 = time.perf_counter()
        self.problem = problem
        self.v = v
        self.r_star = float(r_star)
        self.block = block
        self.verbose = verbose
        self.timings = {}
        lay = problem.layout

        self.data = IntervalData(problem, v)
        self.F = fnk_interval(problem, self.data)
        self.timings["residual"] = time.perf_counter() - t0

        t1 = time.perf_counter()
        DFmid, DFrad = jac_interval(problem, self.data)
        self.timings["jacobian"] = time.perf_counter() - t1

        t2 = time.perf_counter()
        self._tempdir = None
        if lay.kappa >= self.stage_threshold:
            base = Path(workdir) if workdir else None
            self._tempdir = tempfile.TemporaryDirectory(dir=base)
            root = Path(self._tempdir.name)
            self._write_transposed(root / "dfmid_T.npy", DFmid, self.block)
            self._write_transposed(root / "dfrad_T.npy", DFrad, self.block)
            self.DFmid_T = np.load(root / "dfmid_T.npy", mmap_mode="r")
            self.DFrad_T = np.load(root / "dfrad_T.npy", mmap_mode="r")
            del DFrad
            self.Amid = scipy.linalg.inv(DFmid, overwrite_a=True,
                                         check_finite=False)
            del DFmid
        else:
            self.DFmid_T = np.ascontiguousarray(DFmid.T)
            self.DFrad_T = np.ascontiguousarray(DFrad.T)
            self.Amid = scipy.linalg.inv(DFmid, overwrite_a=True,
                                         check_finite=False)
            del DFmid, DFrad
        if not np.all(np.isfinite(self.Amid)):
            raise RuntimeError("approximate inverse is not finite")
        self.timings["inverse"] = time.perf_counter() - t2
        # |A| including the 1-ulp entrywise inflation of the enclosure
        self.absA = _vup(np.abs(self.Amid) * (1.0 + 32.0 * _EPS))

        self.pis = build_pis(problem)
        self.W = weight_matrix(problem, self.pis)
        self.eps_col = domain_corner_weights(problem)
        # Pi-norms of every A column
        self.R = _nn_matmul_up(self.W, self.absA)
        self.n_pi = len(self.pis)
        self.pi_index = {pi.label: r for r, pi in enumerate(self.pis)}

        # interval kernels and conv ops
        M = problem.field.orders
        self.conv_ops = {}
        for i in range(lay.m):
            for j in range(lay.n):
                for l in range(lay.n):
                    ker = self.data.g_kernels[i][(j, l)]
                    self.conv_ops[(i, j, l)] = ConvKernelOps(
                        ker, lay.N[i], M[j, l], problem.grid.nu[i])

    @staticmethod
    def _write_transposed(path, M: np.ndarray, block: int):
        """Write M.T to an .npy file block by block (no full transpose copy)."""
        from numpy.lib import format as npfmt

        kappa = M.shape[0]
        header = {"descr": npfmt.dtype_to_descr(M.dtype),
                  "fortran_order": False, "shape": (M.shape[1], M.shape[0])}
        with open(path, "wb") as fh:
            npfmt.write_array_header_2_0(fh, header)
            for start in range(0, M.shape[1], block):
                blk = np.ascontiguousarray(M[:, start : start + block].T)
                fh.write(blk.tobytes())

    def dfmid_cols(self, cols: slice) -> np.ndarray:
        return self.DFmid_T[cols].T

    def dfrad_cols(self, cols: slice) -> np.ndarray:
        return self.DFrad_T[cols].T

    def close(self):
        if self._tempdir is not None:
            self.DFmid_T = self.DFrad_T = None
            self._tempdir.cleanup()
            self._tempdir = None

    def pi_norms_of(self, absvec: np.ndarray) -> np.ndarray:
        """Pi-norm upper bounds of a vector given |entries| upper bounds."""
        return _nn_matmul_up(self.W, absvec[:, None]).ravel()

    def col_group_norm(self, cols, col_weights_up) -> np.ndarray:
        """max over a column group of R * eps, per projection."""
        block = self.R[:, cols] * col_weights_up[None, :]
        return _vup(block.max(axis=1) * (1.0 + 4.0 * _EPS))


# =========================================================================
# H bound
# =========================================================================

def bound_H(ctx: ValidationContext) -> np.ndarray:
    """||Pi (I_NK - A_NK DF_NK(xhat))|| per projection (weighted columns)."""
    kappa = ctx.problem.layout.kappa
    g = gamma_up(kappa + 4)
    H = np.zeros(ctx.n_pi)
    absDFrad_scale = 1.0 + 4.0 * _EPS
    for start in range(0, kappa, ctx.block):
        cols = slice(start, min(start + ctx.block, kappa))
        Dblk = ctx.dfmid_cols(cols)
        Rblk = ctx.dfrad_cols(cols)
        absD = _cabs_up(Dblk) + Rblk
        E1 = _nn_matmul_up(ctx.absA, absD)
        P = ctx.Amid @ Dblk
        midE = -P
        idx = np.arange(cols.start, cols.stop)
        midE[idx, np.arange(idx.size)] += 1.0
        rad = _nn_matmul_up(ctx.absA, Rblk * absDFrad_scale)
        # zgemm rounding plus the 1-ulp inflation of A's entries
        rad = _vup(rad + (2.0 * g + 64.0 * _EPS) * E1)
        absE = _vup(_cabs_up(midE) + rad)
        cn = _nn_matmul_up(ctx.W, absE)
        vals = _vup(cn * ctx.eps_col[None, cols] * (1.0 + 4.0 * _EPS))
        H = np.maximum(H, vals.max(axis=1))
    return H


# =========================================================================
# Y bounds
# =========================================================================

def bound_Y(ctx: ValidationContext) -> np.ndarray:
    problem, lay = ctx.problem, ctx.problem.layout
    Fmid = ctx.F.mid()
    Frad = ctx.F.rad_upper()
    ymid = ctx.Amid @ Fmid
    kappa = lay.kappa
    g = gamma_up(kappa + 4)
    absF = _vup(_cabs_up(Fmid) + Frad)
    yerr = _nn_matmul_up(ctx.absA, (Frad * (1.0 + 4.0 * _EPS))[:, None]).ravel()
    yerr = _vup(yerr + (2.0 * g + 64.0 * _EPS)
                * _nn_matmul_up(ctx.absA, absF[:, None]).ravel())
    absy = _vup(_cabs_up(ymid) + yerr)
    Y = ctx.pi_norms_of(absy)

    # Chebyshev tails: (L dt / 2) sum_{k=N}^{spill} |c_{k-1} - c_{k+1}| nu^k / k
    from .interval import pow_upper

    for i in range(lay.m):
        c = ctx.data.c_of_a[i]
        Ni = lay.N[i]
        spill = c.support
        if spill + 1 <= Ni:
            continue
        cpad = c.pad_to(spill + 2)
        half = ctx.problem.grid.L * ctx.problem.grid.dt_interval(i) / Interval(2.0)
        nupow = pow_upper(abs(problem.grid.nu[i]), np.arange(spill + 2))
        for j in range(lay.n):
            terms = []
            for k in range(Ni, spill + 1):
                diff = cpad.coeffs[k - 1, j] - cpad.coeffs[k + 1, j]
                mag = ComplexInterval(
                    Interval(diff.re.lo[()], diff.re.hi[()]),
                    Interval(diff.im.lo[()], diff.im.hi[()])).abs_upper()
                terms.append(_vup(_vup(mag * nupow[k]) / k))
            tail = sum_upper(np.array(terms)) if terms else 0.0
            tail = _vup(tail * half.hi)
            Y[ctx.pi_index[("a", i, j)]] = _vup(Y[ctx.pi_index[("a", i, j)]] + tail)

    # Taylor tails: sum_{k in J} |C_k| / |<k, lam>| nu^|k|
    for (C, lam, K, nu, kind) in (
        (ctx.data.C_of_p, ctx.data.u.lamu, lay.Ku, problem.nu_u, "P"),
        (ctx.data.C_of_q, ctx.data.u.lams, lay.Ks, problem.nu_s, "Q"),
    ):
        box = C.K
        absC = C.coeffs.abs_sup()
        deg = C.degrees()
        grids = np.meshgrid(*[np.arange(s + 1) for s in box], indexing="ij")
        inside = np.ones(absC.shape[:-1], dtype=bool)
        for ax, Kx in enumerate(K):
            inside &= grids[ax] <= Kx
        lam_re_abs = np.abs(np.real(lam))
        den = sum(gr * lr for gr, lr in zip(grids, lam_re_abs))
        den = _vdn(den * (1.0 - 8.0 * _EPS))
        nupow = pow_upper(abs(nu), np.arange(int(deg.max()) + 1))
        wk = nupow[deg]
        for j in range(lay.n):
            mask = (~inside) & (absC[..., j] > 0.0)
            if not mask.any():
                continue
            terms = _vup(_vup(absC[..., j][mask] * wk[mask]) / den[mask])
            tail = sum_upper(terms)
            Y[ctx.pi_index[(kind, j)]] = _vup(Y[ctx.pi_index[(kind, j)]] + tail)
    return Y


# =========================================================================
# Z1 bounds
# =========================================================================

def _interval_max_abs(values: np.ndarray) -> Interval:
    """Enclosure of max |z| over a vector of exact complex floats."""
    mags = [ComplexInterval.from_complex(complex(z)).abs_interval()
            for z in values]
    return Interval(max(m.lo for m in mags), max(m.hi for m in mags))


def _boundary_factor_t0(ctx: ValidationContext) -> float:
    problem, lay = ctx.problem, ctx.problem.layout
    nu1 = problem.grid.nu[0]
    t1 = (Interval(1.0) / nu1) ** lay.N[0]
    best = Interval(0.0)
    for l in range(problem.n_u):
        m = ComplexInterval.from_complex(complex(ctx.data.u.theta[l])).abs_interval()
        r = (m / problem.nu_u) ** (lay.Ku[l] + 1)
        best = Interval(max(best.lo, r.lo), max(best.hi, r.hi))
    return (t1 + best).hi


def _boundary_factor_tm(ctx: ValidationContext) -> float:
    problem, lay = ctx.problem, ctx.problem.layout
    num = problem.grid.nu[-1]
    t1 = (Interval(1.0) / num) ** lay.N[-1]
    best = Interval(0.0)
    for l in range(problem.n_s):
        m = ComplexInterval.from_complex(complex(ctx.data.u.phi[l])).abs_interval()
        r = (m / problem.nu_s) ** (lay.Ks[l] + 1)
        best = Interval(max(best.lo, r.lo), max(best.hi, r.hi))
    return (t1 + best).hi


def lambda_tail_norm(kernel_abs: np.ndarray, K: tuple, lam: np.ndarray,
                     nu: Interval) -> float:
    """Upper bound of ||Lambda(p)|| for a kernel with |p_k| <= kernel_abs.

    The supremum over corner points is a finite computation: for shifts l in
    the clipped box prod [0, K_i + 1] the image norm is summed with exact
    lower bounds of the denominators |<k + l, lam>|; for any shift beyond the
    box, clipping the offending coordinates to K_i + 1 both enlarges the
    index set and shrinks the real-part denominator bound
    sum_i (k_i + l_i) |Re lam_i|, which is monotone in every l_i, so the
    boundary shifts evaluated with real-part denominators dominate the rest.
    """
    from .interval import pow_upper

    box = kernel_abs.shape
    dim = len(K)
    grids = np.meshgrid(*[np.arange(s) for s in box], indexing="ij")
    kflat = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    deg = kflat.sum(axis=1)
    nupow = pow_upper(abs(nu), np.arange(int(deg.max()) + 1))
    wk = _vup(kernel_abs.ravel() * nupow[deg])
    if not np.any(wk > 1e-280):
        return 0.0
    total_w = sum_upper(wk)
    lam_re = np.real(lam)
    lam_im = np.imag(lam)
    min_re = float(np.min(np.abs(lam_re))) * (1.0 - 8.0 * _EPS)
    Kv = np.asarray(K, dtype=np.int64)
    nk = wk.size

    def scan(limit: np.ndarray) -> float:
        best = 0.0
        ls = graded_lex(tuple(int(v) for v in limit))
        chunk = max(1, int(4_000_000 // max(nk, 1)))
        g = gamma_up(max(nk, 2))
        for start in range(0, ls.shape[0], chunk):
            lblk = ls[start : start + chunk]
            shifted = kflat[None, :, :] + lblk[:, None, :]
            mask = np.any(shifted > Kv[None, None, :], axis=2)
            re = shifted @ lam_re
            im = shifted @ lam_im
            den = _vdn(np.hypot(re, im) * (1.0 - 16.0 * _EPS))
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(mask, _vup(wk[None, :] / den), 0.0)
            sums = _vup(np.sum(terms, axis=1) * (1.0 + 2.0 * g))
            best = max(best, float(sums.max()))
        return best

    # exact scan over the clipped shift box, then extend the radius until the
    # coarse tail majorant ||G|| / (L* min|Re lam|) is dominated
    m_ex = scan(Kv + 1)
    if m_ex <= 0.0:
        return 0.0
    l_star = int(math.ceil(total_w / (m_ex * min_re))) + 1
    l_star = min(max(l_star, int(Kv.max()) + 2), 600)
    best = scan(np.full(dim, l_star, dtype=np.int64))
    tail = _vup(total_w / (l_star * min_re))
    return max(best, tail)


def bound_Z1(ctx: ValidationContext, H: np.ndarray) -> np.ndarray:
    problem, lay = ctx.problem, ctx.problem.layout
    from .seqspace import cheb_corner_weights_upper

    Z1 = H.copy()
    f_t0 = _boundary_factor_t0(ctx)
    f_tm = _boundary_factor_tm(ctx)
    # boundary and matching-row contributions
    for jt in range(lay.n):
        Z1 = _vup(Z1 + _vup(ctx.R[:, lay.r_t0.start + jt] * f_t0))
        Z1 = _vup(Z1 + _vup(ctx.R[:, lay.r_tm.start + jt] * f_tm))
        for it in range(1, lay.m):
            fac = ((Interval(1.0) / problem.grid.nu[it]) ** lay.N[it]
                   + (Interval(1.0) / problem.grid.nu[it - 1]) ** lay.N[it - 1]).hi
            Z1 = _vup(Z1 + _vup(ctx.R[:, lay.ra_row(it, jt, 0)] * fac))
    # convolution band contributions
    for it in range(lay.m):
        Ni = lay.N[it]
        quarter = problem.grid.quarter_coeff(it)
        for jt in range(lay.n):
            rows = lay.ra_rows(it, jt, 1, Ni - 1)
            # complex interval view of the A column block with 1-ulp inflation
            Ablk = CArray(
                IArray(_vdn(np.real(ctx.Amid[:, rows])), _vup(np.real(ctx.Amid[:, rows]))),
                IArray(_vdn(np.imag(ctx.Amid[:, rows])), _vup(np.imag(ctx.Amid[:, rows]))))
            contrib = np.zeros(ctx.n_pi)
            for l in range(lay.n):
                ops = ctx.conv_ops[(it, jt, l)]
                B = ops.B_matrix()
                P = cmatmul(Ablk, B)
                absP = P.abs_sup()
                cn = _nn_matmul_up(ctx.W, absP)
                w = absP.shape[1]
                kp_max = max(w - 1, 2 * ops.Mt)
                epsw = cheb_corner_weights_upper(kp_max + 1, problem.grid.nu[it])
                # scalar/Taylor projections and off-diagonal Chebyshev blocks
                plain = _vup((cn * epsw[None, :w]).max(axis=1) * (1.0 + 4.0 * _EPS))
                contrib = _vup(contrib + plain)
                # diagonal Chebyshev block: add the scaled tail columns
                r_diag = ctx.pi_index[("a", it, jt)]
                tail = ops.tail_colnorms(kp_max, scaled=True)
                comb = tail.copy()
                comb[:w] = _vup(comb[:w] + cn[r_diag])
                diag_val = _vup((comb * epsw).max() * (1.0 + 4.0 * _EPS))
                contrib[r_diag] = _vup(_vup(contrib[r_diag] - plain[r_diag]) + diag_val)
            Z1 = _vup(Z1 + _vup(quarter.hi * contrib))
    # invariance tail operators Lambda
    M = problem.field.orders
    for j in range(lay.n):
        tot = 0.0
        for l in range(lay.n):
            ker = ctx.data.G_u[(j, l)]
            tot = _vup(tot + lambda_tail_norm(
                ker.coeffs.abs_sup()[..., 0], lay.Ku, ctx.data.u.lamu,
                problem.nu_u))
        Z1[ctx.pi_index[("P", j)]] = _vup(Z1[ctx.pi_index[("P", j)]] + tot)
        tot = 0.0
        for l in range(lay.n):
            ker = ctx.data.G_s[(j, l)]
            tot = _vup(tot + lambda_tail_norm(
                ker.coeffs.abs_sup()[..., 0], lay.Ks, ctx.data.u.lams,
                problem.nu_s))
        Z1[ctx.pi_index[("Q", j)]] = _vup(Z1[ctx.pi_index[("Q", j)]] + tot)
    return Z1


# =========================================================================
# Z2 bounds
# =========================================================================

def phi_1(norm_theta: Interval, nu: Interval) -> float:
    """Upper bound of the first log-series functional Phi_1.

    Below the branch point the flat bound 1/nu holds down to a vanishing
    coordinate; above it the unconstrained-peak bound is evaluated on the
    part of the enclosure past the branch point (and the maximum of the two
    branches is taken when the enclosure straddles it).
    """
    inv_nu = (Interval(1.0) / nu).hi
    ratio = norm_theta / nu
    e_inv = (Interval(1.0) / E_INTERVAL).lo
    if ratio.hi <= e_inv:
        return inv_nu
    if ratio.hi >= 1.0:
        raise ValueError("chart coordinate enclosure escapes the polydisk")
    x_lo = max(norm_theta.lo, nu.lo * e_inv * (1.0 - 1e-12))
    xc = Interval(x_lo, norm_theta.hi)
    lograt = (xc / nu).log()
    denom = E_INTERVAL * xc * (-lograt)
    val = (Interval(1.0) / denom).hi
    return max(inv_nu, val)


def phi_2(norm_theta: Interval, nu: Interval, K_min: int) -> float:
    """Upper bound of the second log-series functional Phi_2."""
    if K_min < 1:
        raise ValueError("Phi_2 requires a first order truncation box")
    ratio = norm_theta / nu
    if ratio.hi >= 1.0:
        raise ValueError("chart coordinate enclosure escapes the polydisk")
    # decreasing branch: sup over [0, hi] is attained at the upper endpoint
    x_hi = Interval(norm_theta.hi)
    b1 = (Interval(float((K_min + 1) ** 2)) * x_hi ** (K_min - 1)
          * (Interval(1.0) / nu) ** (K_min + 1)).hi
    rho0 = math.exp(-2.0 / (K_min + 1))
    if ratio.hi <= rho0 * (1.0 - 1e-12):
        return b1
    # past the peak: evaluate the global-maximum bound on the straddling part
    x_lo = max(norm_theta.lo, nu.lo * rho0 * (1.0 - 1e-12))
    xc = Interval(x_lo, norm_theta.hi)
    lograt = (xc / nu).log()
    b2 = (Interval(4.0) / ((E_INTERVAL * lograt) * (E_INTERVAL * lograt))
          / (xc * xc)).hi
    return max(b1, b2)


def _theta_enclosure(point: np.ndarray, r_star: float) -> list:
    return [ComplexInterval(Interval(z.real - r_star, z.real + r_star),
                            Interval(z.imag - r_star, z.imag + r_star))
            for z in point]


def _beta_bound(ctx, point, coeffs, K, idx_tab, nu: Interval, jt: int) -> float:
    """sup beta^{jt}: the second order boundary-series bound."""
    r_star = ctx.r_star
    enc = _theta_enclosure(point, r_star)
    mags = [z.abs_interval() for z in enc]
    norm_inf = Interval(max(m.lo for m in mags), max(m.hi for m in mags))
    if norm_inf.hi >= nu.lo:
        raise RuntimeError(
            "interval enclosure of the chart coordinate escapes the polydisk: "
            "increase the chart weight or decrease r_star")
    K_min = min(K)
    total = Interval(2.0) * Interval(phi_1(norm_inf, nu))
    total = total + Interval(r_star) * Interval(phi_2(norm_inf, nu, K_min))
    dim = idx_tab.shape[1]
    # per-coordinate upper-bound power tables of |theta_hat enclosure|
    maxes = idx_tab.max(axis=0)
    pow_tabs = []
    for l in range(dim):
        tab = np.ones(maxes[l] + 1)
        acc = Interval(1.0)
        for e in range(1, maxes[l] + 1):
            acc = acc * mags[l]
            tab[e] = acc.hi
        pow_tabs.append(tab)
    from .interval import pow_upper

    deg = idx_tab.sum(axis=1)
    nupow_inv = pow_upper(Interval(1.0) / abs(nu), deg)
    box_flat = np.ravel_multi_index(idx_tab.T, tuple(k + 1 for k in
                                                     np.asarray(K, dtype=int)))
    pk = np.abs(coeffs[..., jt].reshape(-1)[box_flat])
    pk_enc = _vup(_vup(pk * (1.0 + 8.0 * _EPS)) + _vup(r_star * nupow_inv))
    terms = []
    for i in range(dim):
        for l in range(dim):
            f = idx_tab[:, l] * (idx_tab[:, i] - (1 if i == l else 0))
            valid = f > 0
            if not valid.any():
                continue
            mono = f[valid].astype(float)
            for t in range(dim):
                e = idx_tab[valid, t] - (1 if t == i else 0) - (1 if t == l else 0)
                mono = _vup(mono * pow_tabs[t][e])
            terms.append(sum_upper(_vup(mono * pk_enc[valid])))
    acc_up = sum_upper(np.array(terms)) if terms else 0.0
    return _vup(total.hi + acc_up)


def _sigma_bound(ctx, coeffs, lam, K, nu: Interval, jt: int) -> float:
    """sup sigma^{jt}: second order bound for one chart equation family."""
    problem = ctx.problem
    g = problem.field
    r_star = ctx.r_star
    dim = len(K)
    n = problem.n
    p0 = coeffs[(0,) * dim]
    p0_enc = [ComplexInterval(Interval(z.real - r_star, z.real + r_star),
                              Interval(z.imag - r_star, z.imag + r_star))
              for z in p0]
    total = Interval(0.0)
    for i3 in range(n):
        bracket = Interval(0.0)
        for i in range(dim):
            e = tuple(1 if t == i else 0 for t in range(dim))
            bracket = bracket + ComplexInterval.from_complex(
                complex(coeffs[e + (i3,)])).abs_interval() * abs(nu)
        bracket = bracket + Interval(r_star)
        total = total + bracket * g.d3_abs_sum(jt, i3, p0_enc)
    total = total + Interval(3.0) * g.d2_abs_sum(jt, p0_enc)
    # norm of each chart component plus r_star feeds the Hessian majorant
    from .seqspace import TaylorArray

    tay = TaylorArray(CArray.exact(coeffs), nu)
    s = []
    for l in range(n):
        nl = tay.component(l).norm()
        s.append(Interval(nl.lo, nl.hi) + Interval(r_star))
    total = total + g.majorant_d2(jt, s)
    total = total + Interval(2.0 * (sum(K) + 1))
    return total.hi


def bound_Z2(ctx: ValidationContext) -> np.ndarray:
    problem, lay = ctx.problem, ctx.problem.layout
    from .seqspace import cheb_corner_weights_upper, taylor_corner_weights_upper

    Z2 = np.zeros(ctx.n_pi)
    u = ctx.data.u
    # boundary terms
    for jt in range(lay.n):
        beta_u = _beta_bound(ctx, u.theta, u.p, lay.Ku, lay.ku_idx,
                             problem.nu_u, jt)
        beta_s = _beta_bound(ctx, u.phi, u.q, lay.Ks, lay.ks_idx,
                             problem.nu_s, jt)
        Z2 = _vup(Z2 + _vup(ctx.R[:, lay.r_t0.start + jt] * beta_u))
        Z2 = _vup(Z2 + _vup(ctx.R[:, lay.r_tm.start + jt] * beta_s))
    # Chebyshev second order terms
    for it in range(lay.m):
        Ni = lay.N[it]
        nu_i = problem.grid.nu[it]
        sig_fac = (problem.grid.L * problem.grid.dt_interval(it)
                   * nu_i / Interval(2.0))
        epsw = cheb_corner_weights_upper(Ni, nu_i)
        s_args = []
        for l in range(lay.n):
            nl = ctx.data.cheb[it].component(l).norm()
            s_args.append(Interval(nl.lo, nl.hi) + Interval(ctx.r_star))
        for jt in range(lay.n):
            created = problem.field.majorant_d2(jt, s_args)
            fac = (sig_fac * created).hi
            rows = lay.ra_rows(it, jt, 1, Ni - 1)
            cols = np.arange(rows.start, rows.stop)
            cw = epsw[1:Ni]
            norms = ctx.col_group_norm(cols, cw)
            r_diag = ctx.pi_index[("a", it, jt)]
            norms[r_diag] = max(norms[r_diag], _vup(1.0 / Ni))
            Z2 = _vup(Z2 + _vup(norms * fac))
    # Taylor second order terms
    for (coeffs, lam, K, nu, idx_tab, deg_tab, rows_of, kind) in (
        (u.p, u.lamu, lay.Ku, problem.nu_u, lay.ku_idx, lay.ku_deg,
         lay.rp_rows, "P"),
        (u.q, u.lams, lay.Ks, problem.nu_s, lay.ks_idx, lay.ks_deg,
         lay.rq_rows, "Q"),
    ):
        lam_re = np.abs(np.real(lam))
        min_re = Interval(float(lam_re.min()))
        min_reK = Interval(min(float(lam_re[i]) * (K[i] + 1)
                               for i in range(len(K))))
        inv_minK = (Interval(1.0) / min_reK).hi
        extra = (Interval(2.0) / min_re).hi
        cw = taylor_corner_weights_upper(deg_tab, nu)
        for jt in range(lay.n):
            sig = _sigma_bound(ctx, coeffs, lam, K, nu, jt)
            rows = rows_of(jt)
            cols = np.arange(rows.start, rows.stop)
            norms = ctx.col_group_norm(cols, cw)
            r_diag = ctx.pi_index[(kind, jt)]
            norms[r_diag] = max(norms[r_diag], inv_minK)
            add = _vup(norms * sig)
            add[r_diag] = _vup(add[r_diag] + extra)
            Z2 = _vup(Z2 + add)
    return Z2


# =========================================================================
# Radii polynomials
# =========================================================================

@dataclass
class ValidationResult:
    success: bool
    r_lo: float
    r_hi: float
    transversal: bool
    table: list                      # per-Pi dicts: label, Y, Z1, Z2, margin
    worst: tuple | None = None       # (label, margin) of the binding projection
    timings: dict = dc_field(default_factory=dict)
    notes: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "r_lo": self.r_lo,
            "r_hi": self.r_hi,
            "transversal": self.transversal,
            "worst": [str(self.worst[0]), self.worst[1]] if self.worst else None,
            "table": [
                {"pi": str(row["pi"]), "Y": row["Y"], "Z1": row["Z1"],
                 "Z2": row["Z2"]} for row in self.table
            ],
            "timings": self.timings,
            "notes": self.notes,
        }


def _poly_upper_at(Y: float, Z1: float, Z2: float, r: float) -> float:
    """Upper bound of Z2 r^2 + (Z1 - 1) r + Y at an exact float r > 0."""
    ri = Interval(r)
    val = Interval(Z2) * ri * ri + (Interval(Z1) - Interval(1.0)) * ri + Interval(Y)
    return val.hi


def assemble_and_check(Y, Z1, Z2, r_star: float, labels=None) -> ValidationResult:
    """Certify an interval of radii on which all quadratics are negative."""
    Y, Z1, Z2 = map(np.asarray, (Y, Z1, Z2))
    n = Y.size
    labels = labels if labels is not None else [("pi", i) for i in range(n)]
    table = [{"pi": labels[i], "Y": float(Y[i]), "Z1": float(Z1[i]),
              "Z2": float(Z2[i])} for i in range(n)]

    def fail(reason, worst_idx):
        margins = Y + (Z1 - 1.0) * min(r_star, 1.0)
        return ValidationResult(False, 0.0, 0.0, False, table,
                                worst=(labels[worst_idx],
                                       float(margins[worst_idx])),
                                notes=[reason])

    if np.any(Z1 >= 1.0):
        return fail("a first order bound reaches 1", int(np.argmax(Z1)))
    disc = (1.0 - Z1) ** 2 - 4.0 * Z2 * Y
    if np.any(disc <= 0.0):
        return fail("negative discriminant: Y too large against Z", int(np.argmin(disc)))
    sq = np.sqrt(disc)
    r_minus = 2.0 * Y / ((1.0 - Z1) + sq)
    with np.errstate(divide="ignore"):
        r_plus = np.where(Z2 > 0.0, ((1.0 - Z1) + sq) / (2.0 * Z2), np.inf)
    lo = float(r_minus.max()) * (1.0 + 1e-9) + 1e-300
    hi = min(float(r_plus.min()) * (1.0 - 1e-9), r_star)
    if lo >= hi:
        return fail("no common negativity interval below r_star",
                    int(np.argmax(r_minus)))

    def all_negative(r: float) -> bool:
        return all(_poly_upper_at(Y[i], Z1[i], Z2[i], r) < 0.0 for i in range(n))

    for _ in range(200):
        ok_lo, ok_hi = all_negative(lo), all_negative(hi)
        if ok_lo and ok_hi:
            break
        if not ok_lo:
            lo *= 1.5
        if not ok_hi:
            hi *= 0.8
        if lo >= hi:
            return fail("interval verification failed", int(np.argmax(r_minus)))
    else:
        return fail("interval verification failed", int(np.argmax(r_minus)))
    r_mid = math.sqrt(lo * hi)
    margins = np.array([_poly_upper_at(Y[i], Z1[i], Z2[i], r_mid)
                        for i in range(n)])
    worst = int(np.argmax(margins))
    for i in range(n):
        table[i]["margin"] = float(margins[i])
    return ValidationResult(True, lo, hi, True, table,
                            worst=(labels[worst], float(margins[worst])))


def validate(problem: ConnectionProblem, v: np.ndarray, r_star: float,
             verbose: bool = False, block: int = 1024) -> ValidationResult:
    """Run every bound family and certify the radii interval."""
    ctx = ValidationContext(problem, v, r_star, block=block, verbose=verbose)
    t0 = time.perf_counter()
    H = bound_H(ctx)
    ctx.timings["H"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    Y = bound_Y(ctx)
    ctx.timings["Y"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    Z1 = bound_Z1(ctx, H)
    ctx.timings["Z1"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    Z2 = bound_Z2(ctx)
    ctx.timings["Z2"] = time.perf_counter() - t0
    labels = [pi.label for pi in ctx.pis]
    result = assemble_and_check(Y, Z1, Z2, r_star, labels)
    result.timings.update(ctx.timings)
    ctx.close()
    if verbose:
        print(f"  H max {H.max():.3e}  Y max {Y.max():.3e}  "
              f"Z1 max {Z1.max():.3e}  Z2 max {Z2.max():.3e}")
        print(f"  certified: {result.success}  "
              f"[{result.r_lo:.4e}, {result.r_hi:.4e}]")
    return result
