"""Chebyshev representation of the connecting orbit with domain decomposition.

Time is rescaled to [0,1] and split by a partition 0 = t_0 < ... < t_m = 1;
on each subdomain the orbit is a Chebyshev series u_i = a_0 + 2 sum a_k T^i_k
in the shifted polynomials.  The ODE rows couple neighbouring coefficients of
c(a) = g(u) and neighbouring subdomains match at the internal nodes.  A fixed
reference orbit supplies the affine phase condition that pins down the time
parameterization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .interval import CArray, ComplexInterval, Interval
from .polyfield import PolyVectorField
from .seqspace import ChebSeq


@dataclass
class Grid:
    nodes: np.ndarray          # t_0 = 0 < ... < t_m = 1
    L: Interval                # time of flight
    N: tuple                   # modes per subdomain
    nu: list                   # per-domain weights, Interval, > 1

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        if abs(self.nodes[0]) > 0 or abs(self.nodes[-1] - 1.0) > 1e-15:
            raise ValueError("grid must partition [0, 1]")
        if self.L.lo <= 0:
            raise ValueError("time of flight must be positive")
        for nu in self.nu:
            if nu.lo <= 1.0:
                raise ValueError("subdomain weights must exceed 1")

    @property
    def m(self) -> int:
        return len(self.nodes) - 1

    def dt(self, i: int) -> float:
        return float(self.nodes[i + 1] - self.nodes[i])

    def dt_interval(self, i: int) -> Interval:
        return Interval(self.nodes[i + 1]) - Interval(self.nodes[i])

    def quarter_coeff(self, i: int) -> Interval:
        """L (t_{i+1} - t_i) / 4 as an enclosure."""
        return self.L * self.dt_interval(i) / Interval(4.0)


@dataclass
class OrbitSegments:
    grid: Grid
    segs: list                 # per-domain complex arrays of shape (N_i, n)

    @property
    def n(self) -> int:
        return self.segs[0].shape[1]

    def copy(self) -> "OrbitSegments":
        return OrbitSegments(self.grid, [s.copy() for s in self.segs])

    def max_imag(self) -> float:
        return max(float(np.max(np.abs(np.imag(s)))) for s in self.segs)


def eval_segment(segments: OrbitSegments, i: int, t) -> np.ndarray:
    """u_i(t) for t in [t_{i-1}, t_i], via Clenshaw on the shifted basis."""
    g = segments.grid
    t = np.asarray(t, dtype=float)
    lo, hi = g.nodes[i], g.nodes[i + 1]
    if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
        raise ValueError(f"time {t} outside subdomain {i}: [{lo}, {hi}]")
    s = (2.0 * t - hi - lo) / (hi - lo)
    a = segments.segs[i]
    c = a.copy()
    c[1:] *= 2.0
    return _cheb.chebval(s, c)


def eval_orbit(segments: OrbitSegments, t) -> np.ndarray:
    """Evaluate across subdomains; t in [0, 1] (scalar or array)."""
    g = segments.grid
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((t.size, segments.n), dtype=complex)
    idx = np.clip(np.searchsorted(g.nodes, t, side="right") - 1, 0, g.m - 1)
    for i in range(g.m):
        mask = idx == i
        if mask.any():
            out[mask] = eval_segment(segments, i, t[mask]).T
    return out


def endpoint_left(seg: np.ndarray) -> np.ndarray:
    """u_i(t_{i-1}) = a_0 + 2 sum (-1)^k a_k."""
    signs = (-1.0) ** np.arange(seg.shape[0])
    return seg[0] + 2.0 * np.sum(signs[1:, None] * seg[1:], axis=0)


def endpoint_right(seg: np.ndarray) -> np.ndarray:
    """u_i(t_i) = a_0 + 2 sum a_k."""
    return seg[0] + 2.0 * np.sum(seg[1:], axis=0)


# -- the Chebyshev map for ODEs ---------------------------------------------

def residual_fu_float(field: PolyVectorField, segments: OrbitSegments) -> list:
    """F_u(a) on each subdomain, including convolution spill rows.

    Returns per-domain arrays of shape (rows, n); row 0 of domain i >= 1 is
    the endpoint matching row, row 0 of domain 0 is identically zero (the
    first domain's map takes values in the quotient by constants).
    """
    g = segments.grid
    out = []
    for i in range(g.m):
        a = segments.segs[i]
        c = field.cheb_apply_float(a)
        spill = c.shape[0]
        rows = spill + 1
        f = np.zeros((rows, segments.n), dtype=complex)
        Lq = g.L.mid() * g.dt(i) / 4.0
        cm = np.zeros((rows + 1, segments.n), dtype=complex)
        cm[:spill] = c
        ks = np.arange(1, rows)
        a_ext = np.zeros((rows, segments.n), dtype=complex)
        a_ext[: a.shape[0]] = a
        f[1:] = ks[:, None] * a_ext[1:] - Lq * (cm[0 : rows - 1] - cm[2 : rows + 1])
        if i >= 1:
            f[0] = endpoint_left(a) - endpoint_right(segments.segs[i - 1])
        out.append(f)
    return out


def residual_fu_interval(field: PolyVectorField, segments: OrbitSegments) -> list:
    """Interval enclosure of F_u(a); same layout as the float path."""
    g = segments.grid
    out = []
    for i in range(g.m):
        a = ChebSeq(CArray.exact(segments.segs[i]), g.nu[i])
        c = field.cheb_apply(a)
        spill = c.support
        rows = spill + 1
        f = ChebSeq.zeros(rows, segments.n, g.nu[i])
        Lq = g.quarter_coeff(i)
        cpad = c.pad_to(rows + 1)
        apad = a.pad_to(rows)
        for k in range(1, rows):
            diff = cpad.coeffs[k - 1] - cpad.coeffs[k + 1]
            f.coeffs[k] = apad.coeffs[k] * float(k) - diff * Lq
        if i >= 1:
            prev = ChebSeq(CArray.exact(segments.segs[i - 1]), g.nu[i - 1])
            signs = CArray.exact(((-1.0) ** np.arange(apad.support))
                                 .astype(complex)[:, None])
            left = (apad.coeffs * signs)[1:].sum_axis(0) * 2.0 + apad.coeffs[0]
            right = prev.coeffs[1:].sum_axis(0) * 2.0 + prev.coeffs[0]
            f.coeffs[0] = left - right
        out.append(f)
    return out


# -- phase condition ---------------------------------------------------------

def pairing_weight(k: int, l: int) -> float:
    """<T_k, dT_l/dt> on [-1,1]: 2 l^2/(l^2 - k^2) for k+l odd, else 0."""
    if (k + l) % 2 == 0:
        return 0.0
    return 2.0 * l * l / (l * l - k * k)


def _eta_weights(b: np.ndarray, convention: str) -> np.ndarray:
    """Coefficient weights W with eta(a) = sum_k W_k . (a_k - b_k)."""
    N, n = b.shape
    W = np.zeros((N, n))
    kmax0 = (N - 1) // 2 - 1 if convention == "paper" else (N - 1) // 2
    for k in range(kmax0 + 1):
        if 2 * k + 1 <= N - 1:
            W[0] += np.real(b[2 * k + 1])
    for k in range(1, N):
        acc = np.zeros(n)
        for l in range(1, N):
            if (k + l) % 2 == 1 and 1 <= (k + l - 1) // 2 <= N - 2:
                acc += np.real(b[l]) * (l * l / (l * l - k * k))
        W[k] = 2.0 * acc
    return W


@dataclass
class PhaseReference:
    """Frozen real reference coefficients b and precomputed affine weights."""

    b: list                     # per-domain real float arrays (N_i, n)
    weights: list               # per-domain weight arrays (N_i, n)
    convention: str = "paper"

    @classmethod
    def from_segments(cls, segments: OrbitSegments,
                      convention: str = "paper") -> "PhaseReference":
        b = [np.real(s).copy() for s in segments.segs]
        if max(float(np.max(np.abs(np.imag(s)))) for s in segments.segs) > 1e-10:
            raise ValueError("phase reference must be real")
        W = [_eta_weights(bi, convention) for bi in b]
        return cls(b, W, convention)


def phase_eta_float(segments: OrbitSegments, ref: PhaseReference) -> complex:
    total = 0.0 + 0.0j
    for i in range(segments.grid.m):
        a, b, W = segments.segs[i], ref.b[i], ref.weights[i]
        if a.shape[0] != b.shape[0]:
            raise ValueError("phase reference truncation mismatch")
        total += np.sum(W * (a - b))
    return complex(total)


def phase_eta_interval(segments: OrbitSegments, ref: PhaseReference) -> ComplexInterval:
    total = ComplexInterval(Interval(0.0))
    for i in range(segments.grid.m):
        a = CArray.exact(segments.segs[i])
        diff = a - CArray.exact(ref.b[i].astype(complex))
        total = total + (diff * CArray.exact(ref.weights[i].astype(complex))).sum()
    return total


# -- construction from a numerical trajectory ---------------------------------

def chebyshev_fit(func, lo: float, hi: float, deg: int) -> np.ndarray:
    """Coefficients a with u = a_0 + 2 sum a_k T_k on [lo, hi].

    ``func`` maps a time array of shape (T,) to values of shape (T, n)
    (or (T,) for scalar data).
    """
    def on_unit(x):
        t = (np.asarray(x) + 1.0) * 0.5 * (hi - lo) + lo
        return np.asarray(func(t))

    c = _cheb.chebinterpolate(on_unit, deg).astype(complex)
    c[1:] *= 0.5
    return c


def _required_modes(func, lo, hi, target, n_cap=260):
    """Smallest N whose trailing fitted coefficients fall below target.

    Sampled candidates carry interpolation noise, so when the coefficient
    tail stagnates above the target the knee of the decay is used instead of
    chasing an unreachable tail.
    """
    deg, prev_floor = 16, np.inf
    while True:
        c = chebyshev_fit(func, lo, hi, deg)
        mags = np.max(np.abs(c), axis=1) if c.ndim == 2 else np.abs(c)
        scale = max(float(mags.max()), 1e-300)
        rel = mags / scale
        tailmax = np.maximum.accumulate(rel[::-1])[::-1]
        below = np.nonzero(tailmax < target)[0]
        if below.size:
            return max(int(below[0]) + 1, 8)
        floor = float(np.median(rel[-5:]))
        stagnant = floor > 0.25 * prev_floor
        if (stagnant and deg > 32) or deg >= n_cap:
            knee = np.nonzero(tailmax <= 8.0 * floor)[0]
            first = int(knee[0]) if knee.size else deg
            # the noise floor hides the true requirement: keep a margin
            return min(max(int(1.2 * first) + 5, 8), n_cap)
        prev_floor = floor
        deg = min(int(deg * 1.5), n_cap)


def decompose_domain(traj, L: float, m="auto", N="auto", nu=None,
                     target: float = 1e-16, n_cap: int = 200,
                     m_max: int = 8, m_min: int = 1) -> Grid:
    """Choose a grid whose per-domain Chebyshev fits decay at equal rates.

    ``traj(t)`` maps rescaled time in [0,1] to state vectors.  Nodes are
    iteratively redistributed so the number of modes needed to reach the
    trailing-coefficient target equidistributes; N_i is then minimal for the
    target (or taken from an explicit request).
    """
    def solve_for_m(m_val):
        nodes = np.linspace(0.0, 1.0, m_val + 1)
        req = None
        for _ in range(24):
            req = np.array([
                _required_modes(lambda t: np.real(traj(t)), nodes[i], nodes[i + 1],
                                target, n_cap)
                for i in range(m_val)
            ], dtype=float)
            if req.max() - req.min() <= max(2.0, 0.05 * req.mean()):
                break
            width = np.diff(nodes)
            density = req / width
            new_width = (1.0 / density)
            new_width *= 1.0 / new_width.sum()
            # damped update keeps the iteration stable
            width = 0.5 * width + 0.5 * new_width
            width /= width.sum()
            nodes = np.concatenate([[0.0], np.cumsum(width)])
            nodes[-1] = 1.0
        return nodes, req

    if m == "auto":
        m_val = max(1, int(m_min))
        while True:
            nodes, req = solve_for_m(m_val)
            if req.max() < n_cap or m_val >= m_max:
                break
            m_val += 1
        if req.max() >= n_cap:
            raise RuntimeError(
                f"decay target {target} unreachable with m <= {m_max} "
                f"subdomains; increase the subdomain budget")
    else:
        m_val = int(m)
        nodes, req = solve_for_m(m_val)
    if N == "auto":
        Nvec = tuple(int(r) for r in req)
    else:
        Nvec = tuple(int(v) for v in N)
        if len(Nvec) != m_val:
            raise ValueError("explicit N must have one entry per subdomain")
    if nu is None:
        nu = [Interval.from_decimal("1.05")] * m_val
    return Grid(nodes, Interval(L), Nvec, list(nu))


def fit_segments(traj, grid: Grid, n: int) -> OrbitSegments:
    segs = []
    for i in range(grid.m):
        c = chebyshev_fit(lambda t: np.real(traj(t)), grid.nodes[i],
                          grid.nodes[i + 1], grid.N[i] - 1)
        segs.append(c.reshape(grid.N[i], n).astype(complex))
    return OrbitSegments(grid, segs)


def heuristic_weights(grid: Grid, field: PolyVectorField,
                      segments: OrbitSegments, eps: float = 0.5):
    """Common subdomain weight from the refined tail-bound heuristic.

    For every domain and kernel the constraint
    L dt (nu + 1/nu) ||g^{ijl}||_nu / (2 N) <= eps is modelled through a
    geometric decay fit, which turns it into a cubic inequality in nu; the
    weight is the midpoint of the feasible interval intersected over all
    kernels.
    """
    nu_min, nu_max = 0.0, np.inf
    rho_min = np.inf
    Lmid = grid.L.mid()
    found = False
    for i in range(grid.m):
        kernels = field.dc_kernels_float(segments.segs[i])
        for (j, l), ker in kernels.items():
            mags = np.abs(ker)
            g0 = float(mags[0])
            if g0 <= 1e-14:
                continue
            ks = np.nonzero(mags > 1e-16)[0]
            if ks.size < 2:
                continue
            slope = np.polyfit(ks, np.log(mags[ks]), 1)[0]
            rho = float(np.exp(-slope))
            if rho <= 1.0:
                continue
            rho_min = min(rho_min, rho)
            alpha = 2.0 * grid.N[i] * eps / (Lmid * grid.dt(i) * g0)
            roots = np.roots([1.0, alpha + rho, 1.0 - alpha * rho, rho])
            real = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
            cand = [r for r in real if 0.0 < r < rho]
            if len(cand) < 2:
                raise RuntimeError(
                    "no feasible weight interval: increase the number of "
                    "subdomains or Chebyshev modes")
            found = True
            nu_min = max(nu_min, cand[0])
            nu_max = min(nu_max, cand[-1])
    if not found:
        raise RuntimeError("no usable kernels for the weight heuristic")
    nu_max = min(nu_max, rho_min * 0.999)
    if nu_max <= 1.0:
        raise RuntimeError(
            "feasible weights do not exceed 1: increase the number of "
            "subdomains or Chebyshev modes")
    nu_hat = 0.5 * (max(1.0, nu_min) + nu_max)
    return nu_hat, {"nu_min": nu_min, "nu_max": nu_max, "rho_min": rho_min}
