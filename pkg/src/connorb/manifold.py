"""Local (un)stable manifold charts via the parameterization method.

A chart is a truncated Taylor expansion whose zeroth coefficient is the
equilibrium and whose first-order coefficients are (scaled) eigenvectors;
higher coefficients solve the homological equations order by order.  The
solver works in ordinary floating point: rigor enters only through the
validator, which re-encloses the solved coefficients.

Unstable charts are produced by negating the vector field and reusing the
stable-side code path, then flipping the sign of the eigenvalues back.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .interval import CArray, ComplexInterval, Interval
from .polyfield import PolyVectorField
from .seqspace import Involution, TaylorArray, graded_lex

_PAIR_TOL = 1e-8
_HYP_TOL = 1e-10


def find_equilibrium(field: PolyVectorField, guess, tol: float = 1e-14,
                     max_iter: int = 50) -> np.ndarray:
    """Newton refinement of an equilibrium of g from a float guess."""
    x = np.asarray(guess, dtype=float).copy()
    for _ in range(max_iter):
        r = field.eval_float(x)
        if np.max(np.abs(r)) < tol * max(1.0, np.max(np.abs(x))):
            return x
        x = x - np.linalg.solve(field.jac_float(x), r)
    raise RuntimeError(f"equilibrium Newton failed to converge from {guess}")


def _order_eigendata(lam: np.ndarray, vec: np.ndarray):
    """Sort eigendata conjugate-pairs-first; returns (lam, vec, n_pairs).

    Pairs are adjacent with the +Im member first; its partner's eigenvector
    is replaced by the exact conjugate so the symmetric ordering holds to
    the last bit.  Real eigenvalues follow, sorted by real part.
    """
    idx = list(range(len(lam)))
    used = [False] * len(lam)
    pairs, reals = [], []
    for i in idx:
        if used[i]:
            continue
        if abs(lam[i].imag) <= _PAIR_TOL * max(1.0, abs(lam[i])):
            reals.append(i)
            used[i] = True
            continue
        partner = None
        for k in idx:
            if k != i and not used[k] and abs(lam[k] - np.conj(lam[i])) <= \
                    _PAIR_TOL * max(1.0, abs(lam[i])):
                partner = k
                break
        if partner is None:
            raise RuntimeError("complex eigenvalue without conjugate partner")
        used[i] = used[partner] = True
        plus = i if lam[i].imag > 0 else partner
        pairs.append(plus)
    pairs.sort(key=lambda i: (lam[i].real, abs(lam[i].imag)))
    reals.sort(key=lambda i: lam[i].real)
    out_l, out_v = [], []
    for i in pairs:
        out_l += [lam[i], np.conj(lam[i])]
        out_v += [vec[:, i], np.conj(vec[:, i])]
    for i in reals:
        out_l.append(complex(lam[i].real, 0.0))
        v = vec[:, i]
        # real eigenvalue: rotate the eigenvector to be real
        k = int(np.argmax(np.abs(v)))
        v = v * np.exp(-1j * np.angle(v[k]))
        out_v.append(np.real(v).astype(complex))
    return np.array(out_l), np.array(out_v).T, len(pairs)


def eigendata(field: PolyVectorField, x0: np.ndarray, side: str):
    """Eigenvalues/eigenvectors of Dg(x0) on one side of the imaginary axis.

    Returns (lam, vectors (n, dim), n_pairs); eigenvectors have unit length.
    """
    J = field.jac_float(x0)
    lam, V = np.linalg.eig(J)
    if np.min(np.abs(lam.real)) < _HYP_TOL * max(1.0, np.max(np.abs(lam))):
        raise RuntimeError(f"equilibrium {x0} is not hyperbolic: {lam}")
    keep = lam.real < 0 if side == "stable" else lam.real > 0
    lam, V = lam[keep], V[:, keep]
    V = V / np.linalg.norm(V, axis=0)
    return _order_eigendata(lam, V)


@dataclass
class NonresonanceReport:
    resonant: bool
    near_resonant: bool
    min_distance: float
    witness_k: tuple | None
    witness_i: int | None
    cutoff: int

    @property
    def ok(self) -> bool:
        return not self.resonant


def check_nonresonance(lam, res_tol: float = 1e-9,
                       near_tol: float = 1e-2) -> NonresonanceReport:
    """Search <lam, k> = lam_i over |k| >= 2; the search is finite.

    |<lam,k>| >= |k| * min|Re lam| exceeds max|lam| once |k| is large, which
    yields a rigorous enumeration cutoff (computed with a safety margin).
    """
    lam = np.asarray(lam, dtype=complex)
    sgns = np.sign(lam.real)
    if np.any(lam.real == 0.0):
        raise ValueError("eigenvalue with zero real part: hyperbolicity violated")
    if not (np.all(sgns > 0) or np.all(sgns < 0)):
        raise ValueError("eigenvalues must lie on one side of the imaginary axis")
    d = len(lam)
    min_re = float(np.min(np.abs(lam.real))) * (1.0 - 1e-12)
    max_mod = float(np.max(np.abs(lam))) * (1.0 + 1e-12)
    cutoff = int(np.ceil((max_mod + near_tol) / min_re)) + 1
    best = np.inf
    witness = (None, None)
    resonant = False

    def rec(prefix, remaining, budget):
        nonlocal best, witness, resonant
        if remaining == 1:
            for last in range(budget + 1):
                k = prefix + (last,)
                if sum(k) < 2:
                    continue
                val = sum(ki * li for ki, li in zip(k, lam))
                for i in range(d):
                    dist = abs(val - lam[i])
                    if dist < best:
                        best = dist
                        witness = (k, i)
            return
        for head in range(budget + 1):
            rec(prefix + (head,), remaining - 1, budget - head)

    rec((), d, cutoff)
    resonant = best <= res_tol * max(1.0, max_mod)
    near = best < near_tol
    return NonresonanceReport(resonant, near, float(best), witness[0],
                              witness[1], cutoff)


@dataclass
class ManifoldChart:
    """Solved local manifold chart (floating point data)."""

    side: str                      # "stable" | "unstable"
    lam: np.ndarray                # eigenvalues, shape (dim,)
    coeffs: np.ndarray             # complex, shape (K_1+1, .., K_dim+1, n)
    nu: Interval                   # chart weight (the polydisk radius)
    inv: Involution
    vhat: np.ndarray               # anchor vectors, shape (dim, n)
    eps: np.ndarray                # prescribed <q_{e_k}, vhat_k>, shape (dim,)

    @property
    def dim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def n(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def K(self) -> tuple:
        return tuple(s - 1 for s in self.coeffs.shape[:-1])

    @property
    def equilibrium(self) -> np.ndarray:
        return self.coeffs[(0,) * self.dim]

    def first_order(self, i: int) -> np.ndarray:
        idx = [0] * self.dim
        idx[i] = 1
        return self.coeffs[tuple(idx)]

    def as_taylor(self) -> TaylorArray:
        return TaylorArray(CArray.exact(self.coeffs), self.nu)

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "lam": [[z.real, z.imag] for z in self.lam],
            "taylor": self.as_taylor().to_dict(),
            "pairs": self.inv.pairs,
            "vhat": [[[z.real, z.imag] for z in row] for row in self.vhat],
            "eps": list(map(float, self.eps)),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ManifoldChart":
        tay = TaylorArray.from_dict(data["taylor"])
        lam = np.array([complex(a, b) for a, b in data["lam"]])
        vhat = np.array([[complex(a, b) for a, b in row] for row in data["vhat"]])
        return cls(data["side"], lam, tay.mid(), tay.nu,
                   Involution(len(lam), data["pairs"]), vhat,
                   np.array(data["eps"]))


def eval_chart(chart: ManifoldChart, phi) -> np.ndarray:
    """Q(phi) = sum_k q_k phi^k at a float point of the polydisk."""
    phi = np.asarray(phi, dtype=complex)
    out = np.zeros(chart.n, dtype=complex)
    pows = [np.power(phi[i], np.arange(chart.K[i] + 1)) for i in range(chart.dim)]
    w = pows[0]
    for i in range(1, chart.dim):
        w = np.multiply.outer(w, pows[i])
    return np.tensordot(w, chart.coeffs, axes=chart.dim)


def eval_chart_interval(chart: ManifoldChart, phi: list) -> list:
    """Interval enclosure of the truncated chart sum at ComplexIntervals."""
    out = [ComplexInterval(Interval(0.0)) for _ in range(chart.n)]
    for k in np.ndindex(*[s + 1 for s in chart.K]):
        mono = ComplexInterval(Interval(1.0))
        for i, ki in enumerate(k):
            for _ in range(ki):
                mono = mono * phi[i]
        for j in range(chart.n):
            out[j] = out[j] + mono * ComplexInterval.from_complex(complex(chart.coeffs[k + (j,)]))
    return out


def eval_chart_deriv(chart: ManifoldChart, phi) -> np.ndarray:
    """D_phi Q(phi), shape (n, dim)."""
    phi = np.asarray(phi, dtype=complex)
    out = np.zeros((chart.n, chart.dim), dtype=complex)
    for l in range(chart.dim):
        shifted = np.zeros_like(chart.coeffs)
        Kl = chart.K[l]
        sl_src = [slice(None)] * (chart.dim + 1)
        sl_dst = [slice(None)] * (chart.dim + 1)
        sl_src[l] = slice(1, Kl + 1)
        sl_dst[l] = slice(0, Kl)
        shifted[tuple(sl_dst)] = chart.coeffs[tuple(sl_src)]
        shifted[tuple(sl_dst)] *= np.arange(1, Kl + 1).reshape(
            [-1 if i == l else 1 for i in range(chart.dim + 1)])
        dchart = ManifoldChart(chart.side, chart.lam, shifted, chart.nu,
                               chart.inv, chart.vhat, chart.eps)
        out[:, l] = eval_chart(dchart, phi)
    return out


def _solve_stable_recursion(field: PolyVectorField, x0: np.ndarray,
                            lam: np.ndarray, first: np.ndarray,
                            K) -> np.ndarray:
    """Fill the coefficient box for the recursion <lam,k> q_k = C_k(q).

    ``first`` holds the (already scaled) eigenvector rows; the linear-order
    residual is the eigenproblem itself and is not re-solved here.
    """
    dim, n = len(lam), field.n
    K = tuple(int(k) for k in K)
    q = np.zeros(tuple(k + 1 for k in K) + (n,), dtype=complex)
    q[(0,) * dim] = x0
    for i in range(dim):
        idx = [0] * dim
        idx[i] = 1
        q[tuple(idx)] = first[i]
    J0 = field.jac_float(x0).astype(complex)
    order_idx = graded_lex(K)
    degrees = order_idx.sum(axis=1)
    for s in range(2, int(degrees.max()) + 1):
        rows = order_idx[degrees == s]
        if rows.size == 0:
            continue
        C = field.taylor_apply_float(q)
        for k in rows:
            kk = tuple(int(v) for v in k)
            lam_k = complex(np.dot(k, lam))
            A = lam_k * np.eye(n, dtype=complex) - J0
            try:
                q[kk] = np.linalg.solve(A, C[kk])
            except np.linalg.LinAlgError as exc:
                raise RuntimeError(
                    f"singular homological system at order {kk}: "
                    f"resonance suspected") from exc
    return q


def solve_homological(field: PolyVectorField, x0_guess, side: str, K,
                      scale: float = 1.0, anchors=None,
                      nu: Interval | None = None) -> ManifoldChart:
    """Compute a chart for the local (un)stable manifold at an equilibrium.

    The eigenvector anchors default to the numerically computed unit
    eigenvectors scaled by ``scale``; prescribed anchors (vhat, eps) may be
    passed to reproduce a previous normalization.
    """
    x0 = find_equilibrium(field, x0_guess)
    work_field = field.negate() if side == "unstable" else field
    lam_w, V, pairs = eigendata(work_field, x0, "stable")
    dim = len(lam_w)
    if dim == 0:
        raise RuntimeError(f"no {side} directions at {x0}")
    rep = check_nonresonance(lam_w)
    if rep.resonant:
        raise RuntimeError(
            f"resonant eigenvalues (witness k={rep.witness_k}, "
            f"i={rep.witness_i}, distance {rep.min_distance:.3e})")
    if anchors is None:
        vhat = (scale * V.T).astype(complex)          # shape (dim, n)
        eps = np.full(dim, float(scale) ** 2)
        first = vhat.copy()
    else:
        vhat, eps = anchors
        vhat = np.asarray(vhat, dtype=complex)
        eps = np.asarray(eps, dtype=float)
        # scale the computed eigenvectors so <q_{e_k}, vhat_k> = eps_k
        first = np.empty_like(vhat)
        for i in range(dim):
            inner = complex(np.dot(V[:, i], np.conj(vhat[i])))
            if inner == 0:
                raise RuntimeError("anchor orthogonal to computed eigenvector")
            first[i] = V[:, i] * (eps[i] / inner)
    q = _solve_stable_recursion(work_field, x0, lam_w, first, K)
    lam = -lam_w if side == "unstable" else lam_w
    if nu is None:
        nu = Interval(1.0)
    return ManifoldChart(side, lam, q, nu, Involution(dim, pairs), vhat, eps)


def residual_FQ(field: PolyVectorField, chart: ManifoldChart) -> TaylorArray:
    """Interval enclosure of the Taylor map residual on the spill box.

    Rows: g(q_0) at k = 0; [Dg(q_0) - <lam,k> I] q_k at |k| = 1;
    <lam,k> q_k - C_k(q) for |k| >= 2.  The same formulas cover both sides.
    """
    lam = chart.lam
    tay = TaylorArray(CArray.exact(chart.coeffs), chart.nu)
    C = field.taylor_apply(tay)
    box = C.K
    qpad = tay.pad_to(box)
    out = TaylorArray.zeros(box, chart.n, chart.nu)
    deg = out.degrees()
    lam_re = np.real(lam)
    lam_im = np.imag(lam)
    grids = np.meshgrid(*[np.arange(s + 1) for s in box], indexing="ij")
    lk_re = sum(g * r for g, r in zip(grids, lam_re))
    lk_im = sum(g * m for g, m in zip(grids, lam_im))
    lam_k = CArray.exact(lk_re + 1j * lk_im)
    G = TaylorArray(lam_k.reshape(lam_k.shape + (1,)) * qpad.coeffs - C.coeffs,
                    chart.nu)
    sign = np.where(deg <= 1, -1.0, 1.0)
    out.coeffs = G.coeffs * CArray.exact(sign[..., None].astype(complex))
    return out


def conjugacy_error(field: PolyVectorField, chart: ManifoldChart, phi0,
                    t: float) -> float:
    """Non-rigorous check that the chart conjugates the flow to the linear one.

    Integrates u' = g(u) from Q(phi0) and compares with Q(e^{t diag lam} phi0).
    """
    from scipy.integrate import solve_ivp

    u0 = np.real(eval_chart(chart, phi0))
    sol = solve_ivp(lambda tt, u: field.eval_float(u), (0.0, t), u0,
                    method="DOP853", rtol=1e-12, atol=1e-12)
    phit = np.exp(np.asarray(chart.lam) * t) * np.asarray(phi0, dtype=complex)
    pred = np.real(eval_chart(chart, phit))
    return float(np.max(np.abs(sol.y[:, -1] - pred)))


def symmetrize_chart(chart: ManifoldChart) -> ManifoldChart:
    """Impose the exact conjugation symmetry q_{k*} = conj(q_k)."""
    perm = chart.inv.perm()
    q = chart.coeffs
    qs = np.conj(np.transpose(q, tuple(perm) + (chart.dim,)))
    out = 0.5 * (q + qs)
    lam = chart.inv.apply_vector(chart.lam)
    return ManifoldChart(chart.side, 0.5 * (chart.lam + lam), out, chart.nu,
                         chart.inv, chart.vhat, chart.eps)


def heuristic_scaling(field: PolyVectorField, x0_guess, side: str,
                      eps_target: float = 0.5, zeta: float = 0.75,
                      provisional_K: int | None = None,
                      K_cap: int = 40):
    """Pick the Taylor box and eigenvector scaling for one manifold chart.

    Balances the first-order tail bound of the chart equations against the
    prescribed tolerance: the number of coefficients K is driven by the
    unscalable zeroth kernel coefficients, and the common scaling factor mu
    by a geometric fit of the kernel decay.  Falls back to a fixed box when
    the decay fit is degenerate.
    """
    x0 = find_equilibrium(field, x0_guess)
    work = field.negate() if side == "unstable" else field
    lam_w, V, pairs = eigendata(work, x0, "stable")
    dim = len(lam_w)
    # eigenvalue moduli reproduce the reference parameter choices; the
    # rigorous tail bounds themselves only ever use real parts
    min_gap = float(np.min(np.abs(lam_w)))
    n = field.n
    J = work.jac_float(x0)
    # K from the zeroth kernel coefficients (scaling independent)
    Kjl_max = 0
    for j in range(n):
        for l in range(n):
            g0 = abs(J[j, l])
            if g0 == 0.0:
                continue
            kjl = int(np.floor(g0 / (zeta * eps_target * min_gap) - 1.0)) + 1
            Kjl_max = max(Kjl_max, kjl)
    K_val = max(min(Kjl_max, K_cap), 1)
    Kbox = (K_val,) * dim
    if provisional_K is not None:
        Kbox = (provisional_K,) * dim
    # provisional chart at unit scale for the decay fit
    chart = solve_homological(field, x0, side, Kbox, scale=1.0)
    kernels = work.dC_kernels_float(chart.coeffs)
    mu_best = np.inf
    degenerate = False
    for j in range(n):
        for l in range(n):
            G = np.abs(kernels[(j, l)])
            g0 = float(G[(0,) * dim])
            if g0 == 0.0:
                continue
            deg = np.zeros(G.shape, dtype=int)
            grids = np.meshgrid(*[np.arange(s) for s in G.shape], indexing="ij")
            deg = sum(grids)
            dmax = int(deg.max())
            pts_d, pts_v = [], []
            for dd in range(dmax + 1):
                s = float(G[deg == dd].sum())
                if s > 1e-16:
                    pts_d.append(dd)
                    pts_v.append(np.log(s))
            if len(pts_d) < 2:
                degenerate = True
                continue
            slope = np.polyfit(pts_d, pts_v, 1)[0]
            rho = float(np.exp(-slope))
            target = eps_target * (K_val + 1) * min_gap / g0
            xi = target ** (1.0 / dim)
            if xi <= 1.0:
                degenerate = True
                continue
            mu_best = min(mu_best, rho * (xi - 1.0) / xi)
    if not np.isfinite(mu_best) or mu_best <= 0.0:
        degenerate = True
        mu_best = 0.1
    return Kbox, float(mu_best), {"degenerate_fit": degenerate,
                                  "min_gap": min_gap, "pairs": pairs}
