"""Polynomial vector fields in the monomial basis.

A field g : R^n -> R^n is stored as a finite set of exponents alpha with real
coefficient vectors g_alpha.  Everything the maps and bounds consume is
derived from this data: pointwise derivatives up to third order, the lifted
convolution maps c(a) and C(p) on coefficient sequences, the derivative
kernels of those maps, and the second-derivative majorant used by the
quadratic bound coefficients.

Coefficients are kept both as intervals (decimal parameter values are
enclosed, never trusted) and as midpoint floats for the non-rigorous
numerical path.
"""

from __future__ import annotations

import re as _re

import numpy as np

from .interval import CArray, ComplexInterval, IArray, Interval
from .seqspace import ChebSeq, TaylorArray, cheb_conv, taylor_conv


class PolyVectorField:
    def __init__(self, n: int, terms: list):
        """terms: list of (alpha tuple of n ints, coeff list of n Interval)."""
        self.n = n
        alphas, coeffs = [], []
        merged: dict = {}
        for alpha, cvec in terms:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n or len(cvec) != n:
                raise ValueError("term shape mismatch")
            if alpha in merged:
                merged[alpha] = [a + b for a, b in zip(merged[alpha], cvec)]
            else:
                merged[alpha] = list(cvec)
        for alpha in sorted(merged):
            alphas.append(alpha)
            coeffs.append(merged[alpha])
        self.alphas = np.array(alphas, dtype=np.int64).reshape(len(alphas), n)
        self.coeff_lo = np.array([[c.lo for c in row] for row in coeffs])
        self.coeff_hi = np.array([[c.hi for c in row] for row in coeffs])
        self.coeff_mid = IArray(self.coeff_lo, self.coeff_hi).mid()
        self._partial_cache: dict = {}

    # -- structural data ----------------------------------------------------

    @property
    def comp_orders(self) -> np.ndarray:
        """N_g: total degree of each component g_j."""
        out = np.zeros(self.n, dtype=np.int64)
        deg = self.alphas.sum(axis=1)
        for j in range(self.n):
            nz = (self.coeff_lo[:, j] != 0.0) | (self.coeff_hi[:, j] != 0.0)
            out[j] = int(deg[nz].max()) if nz.any() else 0
        return out

    @property
    def orders(self) -> np.ndarray:
        """M_jl: total degree of dg_j/dx_l (0 when the derivative vanishes)."""
        M = np.zeros((self.n, self.n), dtype=np.int64)
        deg = self.alphas.sum(axis=1)
        for j in range(self.n):
            nz = (self.coeff_lo[:, j] != 0.0) | (self.coeff_hi[:, j] != 0.0)
            for l in range(self.n):
                mask = nz & (self.alphas[:, l] >= 1)
                M[j, l] = int((deg[mask] - 1).max()) if mask.any() else 0
        return M

    def negate(self) -> "PolyVectorField":
        out = PolyVectorField.__new__(PolyVectorField)
        out.n = self.n
        out.alphas = self.alphas
        out.coeff_lo = -self.coeff_hi
        out.coeff_hi = -self.coeff_lo
        out.coeff_mid = -self.coeff_mid
        out._partial_cache = {}
        return out

    def coeff_interval(self, t: int, j: int) -> Interval:
        return Interval(self.coeff_lo[t, j], self.coeff_hi[t, j])

    def terms_for(self, j: int) -> list:
        """Nonzero (alpha, coeff Interval) pairs of component j."""
        out = []
        for t in range(self.alphas.shape[0]):
            if self.coeff_lo[t, j] != 0.0 or self.coeff_hi[t, j] != 0.0:
                out.append((tuple(self.alphas[t]), self.coeff_interval(t, j)))
        return out

    def partial_terms(self, j: int, drops: tuple) -> list:
        """Terms of the iterated partial derivative d^m g_j / dx_{drops}."""
        key = (j, tuple(drops))
        if key in self._partial_cache:
            return self._partial_cache[key]
        terms = self.terms_for(j)
        for l in drops:
            new = []
            for alpha, c in terms:
                if alpha[l] >= 1:
                    a2 = list(alpha)
                    a2[l] -= 1
                    new.append((tuple(a2), c * alpha[l]))
            terms = new
        self._partial_cache[key] = terms
        return terms

    # -- pointwise evaluation -------------------------------------------------

    def rhs(self):
        """Fast closure for ODE integration: u -> g(u) on single points."""
        alphas = self.alphas
        coeffs = self.coeff_mid

        def f(t, u):
            monos = np.prod(u[None, :] ** alphas, axis=1)
            return monos @ coeffs

        return f

    def eval_float(self, x: np.ndarray) -> np.ndarray:
        """g(x) for x of shape (..., n); vectorized over the batch."""
        x = np.asarray(x)
        out = np.zeros(x.shape, dtype=x.dtype)
        for t in range(self.alphas.shape[0]):
            mono = np.ones(x.shape[:-1], dtype=x.dtype)
            for i in range(self.n):
                a = self.alphas[t, i]
                if a:
                    mono = mono * x[..., i] ** a
            out += mono[..., None] * self.coeff_mid[t]
        return out

    def jac_float(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        J = np.zeros((self.n, self.n), dtype=x.dtype)
        for j in range(self.n):
            for l in range(self.n):
                for alpha, c in self.partial_terms(j, (l,)):
                    mono = 1.0
                    for i in range(self.n):
                        if alpha[i]:
                            mono = mono * x[i] ** alpha[i]
                    J[j, l] += c.mid() * mono
        return J

    def _eval_terms_ci(self, terms: list, x: list) -> ComplexInterval:
        acc = ComplexInterval(Interval(0.0))
        for alpha, c in terms:
            mono = ComplexInterval(Interval(1.0))
            for i in range(self.n):
                for _ in range(alpha[i]):
                    mono = mono * x[i]
            acc = acc + mono * c
        return acc

    def eval_interval(self, x: list) -> list:
        """g at a point of ComplexIntervals; returns a list of enclosures."""
        return [self._eval_terms_ci(self.terms_for(j), x) for j in range(self.n)]

    def jac_interval(self, x: list) -> list:
        return [[self._eval_terms_ci(self.partial_terms(j, (l,)), x)
                 for l in range(self.n)] for j in range(self.n)]

    def d2_interval(self, x: list, j: int) -> list:
        """Hessian of g_j as an n x n table of enclosures."""
        return [[self._eval_terms_ci(self.partial_terms(j, (i, l)), x)
                 for l in range(self.n)] for i in range(self.n)]

    def d2_abs_sum(self, j: int, x: list) -> Interval:
        """sum_{i1,i2} |d^2 g_j / dx_i1 dx_i2 (x)| as an upper enclosure."""
        total = Interval(0.0)
        for i1 in range(self.n):
            for i2 in range(self.n):
                v = self._eval_terms_ci(self.partial_terms(j, (i1, i2)), x)
                total = total + v.abs_interval()
        return total

    def d3_abs_sum(self, j: int, i3: int, x: list) -> Interval:
        """sum_{i1,i2} |d^3 g_j / dx_i1 dx_i2 dx_i3 (x)|, contracted form."""
        total = Interval(0.0)
        for i1 in range(self.n):
            for i2 in range(self.n):
                v = self._eval_terms_ci(self.partial_terms(j, (i1, i2, i3)), x)
                total = total + v.abs_interval()
        return total

    # -- lifted maps on coefficient sequences ---------------------------------

    def cheb_apply(self, a: ChebSeq) -> ChebSeq:
        """c(a): Chebyshev coefficients of g(u) for u with coefficients a."""
        if a.n != self.n:
            raise ValueError("component mismatch")
        pow_cache: dict = {}

        def comp_pow(i: int, m: int) -> ChebSeq:
            if (i, m) not in pow_cache:
                if m == 0:
                    pow_cache[(i, m)] = ChebSeq.basis(0, a.nu)
                elif m == 1:
                    pow_cache[(i, m)] = a.component(i)
                else:
                    pow_cache[(i, m)] = cheb_conv(comp_pow(i, m - 1), a.component(i))
            return pow_cache[(i, m)]

        spill = int(self.comp_orders.max()) * (a.support - 1) + 1
        out = ChebSeq.zeros(max(spill, 1), self.n, a.nu)
        for t in range(self.alphas.shape[0]):
            mono = ChebSeq.basis(0, a.nu)
            for i in range(self.n):
                if self.alphas[t, i]:
                    mono = cheb_conv(mono, comp_pow(i, int(self.alphas[t, i])))
            for j in range(self.n):
                c = self.coeff_interval(t, j)
                if c.lo == 0.0 and c.hi == 0.0:
                    continue
                block = mono.coeffs[:, 0] * c
                cur = out.coeffs[: mono.support, j]
                out.coeffs[: mono.support, j] = cur + block
        return out

    def cheb_apply_float(self, a: np.ndarray) -> np.ndarray:
        """Float path of c(a) for coefficients a of shape (N, n)."""
        N = a.shape[0]
        pow_cache: dict = {}

        def two_sided(c):
            idx = np.abs(np.arange(-(c.shape[0] - 1), c.shape[0]))
            return c[idx]

        def comp_pow(i, m):
            if (i, m) not in pow_cache:
                if m == 0:
                    pow_cache[(i, m)] = np.ones(1, dtype=complex)
                elif m == 1:
                    pow_cache[(i, m)] = a[:, i].astype(complex)
                else:
                    p = comp_pow(i, m - 1)
                    q = a[:, i]
                    full = np.convolve(two_sided(p), two_sided(q))
                    centre = (p.shape[0] - 1) + (q.shape[0] - 1)
                    pow_cache[(i, m)] = full[centre:]
            return pow_cache[(i, m)]

        spill = max(int(self.comp_orders.max()) * (N - 1) + 1, 1)
        out = np.zeros((spill, self.n), dtype=complex)
        for t in range(self.alphas.shape[0]):
            mono = np.ones(1, dtype=complex)
            for i in range(self.n):
                m = int(self.alphas[t, i])
                if m:
                    q = comp_pow(i, m)
                    full = np.convolve(two_sided(mono), two_sided(q))
                    centre = (mono.shape[0] - 1) + (q.shape[0] - 1)
                    mono = full[centre:]
            out[: mono.shape[0]] += mono[:, None] * self.coeff_mid[t]
        return out

    def taylor_apply(self, p: TaylorArray) -> TaylorArray:
        """C(p): Taylor coefficients of g(P(.)) on the full spill box."""
        if p.n != self.n:
            raise ValueError("component mismatch")
        pow_cache: dict = {}

        def comp_pow(i: int, m: int) -> TaylorArray:
            if (i, m) not in pow_cache:
                if m == 0:
                    pow_cache[(i, m)] = TaylorArray.delta((0,) * p.d, p.nu)
                elif m == 1:
                    pow_cache[(i, m)] = p.component(i)
                else:
                    pow_cache[(i, m)] = taylor_conv(comp_pow(i, m - 1), p.component(i))
            return pow_cache[(i, m)]

        Ng = int(self.comp_orders.max())
        box = tuple(Ng * k for k in p.K)
        out = TaylorArray.zeros(box, self.n, p.nu)
        for t in range(self.alphas.shape[0]):
            mono = TaylorArray.delta((0,) * p.d, p.nu)
            for i in range(self.n):
                if self.alphas[t, i]:
                    mono = taylor_conv(mono, comp_pow(i, int(self.alphas[t, i])))
            mono = mono.pad_to(box)
            for j in range(self.n):
                c = self.coeff_interval(t, j)
                if c.lo == 0.0 and c.hi == 0.0:
                    continue
                cur = out.coeffs[..., j]
                out.coeffs[..., j] = cur + mono.coeffs[..., 0] * c
        return out

    def taylor_apply_float(self, p: np.ndarray) -> np.ndarray:
        """Float path of C(p) for a dense coefficient box of shape (K+1.., n)."""
        from scipy.signal import convolve as _conv

        shape = p.shape[:-1]
        pow_cache: dict = {}

        def comp_pow(i, m):
            if (i, m) not in pow_cache:
                if m == 0:
                    e = np.zeros((1,) * len(shape), dtype=complex)
                    e[(0,) * len(shape)] = 1.0
                    pow_cache[(i, m)] = e
                elif m == 1:
                    pow_cache[(i, m)] = p[..., i].astype(complex)
                else:
                    pow_cache[(i, m)] = _conv(comp_pow(i, m - 1), p[..., i],
                                              mode="full", method="direct")
            return pow_cache[(i, m)]

        Ng = int(self.comp_orders.max())
        box = tuple(Ng * (s - 1) + 1 for s in shape)
        out = np.zeros(box + (self.n,), dtype=complex)
        for t in range(self.alphas.shape[0]):
            e = np.zeros((1,) * len(shape), dtype=complex)
            e[(0,) * len(shape)] = 1.0
            mono = e
            for i in range(self.n):
                m = int(self.alphas[t, i])
                if m:
                    mono = _conv(mono, comp_pow(i, m), mode="full", method="direct")
            sl = tuple(slice(0, s) for s in mono.shape)
            out[sl] += mono[..., None] * self.coeff_mid[t]
        return out

    # -- derivative kernels ----------------------------------------------------

    def _apply_terms_cheb(self, terms: list, a: ChebSeq) -> ChebSeq:
        """Chebyshev coefficients of a scalar polynomial applied to u."""
        pow_cache: dict = {}

        def comp_pow(i, m):
            if (i, m) not in pow_cache:
                if m == 0:
                    pow_cache[(i, m)] = ChebSeq.basis(0, a.nu)
                elif m == 1:
                    pow_cache[(i, m)] = a.component(i)
                else:
                    pow_cache[(i, m)] = cheb_conv(comp_pow(i, m - 1), a.component(i))
            return pow_cache[(i, m)]

        deg = max((sum(alpha) for alpha, _ in terms), default=0)
        out = ChebSeq.zeros(max(deg * (a.support - 1) + 1, 1), 1, a.nu)
        for alpha, c in terms:
            mono = ChebSeq.basis(0, a.nu)
            for i in range(self.n):
                if alpha[i]:
                    mono = cheb_conv(mono, comp_pow(i, alpha[i]))
            cur = out.coeffs[: mono.support, 0]
            out.coeffs[: mono.support, 0] = cur + mono.coeffs[:, 0] * c
        return out

    def dc_kernels(self, a: ChebSeq) -> dict:
        """Kernels g^{jl}: Chebyshev coefficients of dg_j/dx_l along u.

        Supports within M_jl (N - 1) + 1 by construction.
        """
        out = {}
        for j in range(self.n):
            for l in range(self.n):
                out[(j, l)] = self._apply_terms_cheb(self.partial_terms(j, (l,)), a)
        return out

    def dc_kernels_float(self, a: np.ndarray) -> dict:
        out = {}

        def two_sided(c):
            idx = np.abs(np.arange(-(c.shape[0] - 1), c.shape[0]))
            return c[idx]

        for j in range(self.n):
            for l in range(self.n):
                terms = self.partial_terms(j, (l,))
                deg = max((sum(alpha) for alpha, _ in terms), default=0)
                res = np.zeros(max(deg * (a.shape[0] - 1) + 1, 1), dtype=complex)
                for alpha, c in terms:
                    mono = np.ones(1, dtype=complex)
                    for i in range(self.n):
                        for _ in range(alpha[i]):
                            full = np.convolve(two_sided(mono), two_sided(a[:, i]))
                            centre = (mono.shape[0] - 1) + (a.shape[0] - 1)
                            mono = full[centre:]
                    res[: mono.shape[0]] += c.mid() * mono
                out[(j, l)] = res
        return out

    def _apply_terms_taylor(self, terms: list, p: TaylorArray) -> TaylorArray:
        pow_cache: dict = {}

        def comp_pow(i, m):
            if (i, m) not in pow_cache:
                if m == 0:
                    pow_cache[(i, m)] = TaylorArray.delta((0,) * p.d, p.nu)
                elif m == 1:
                    pow_cache[(i, m)] = p.component(i)
                else:
                    pow_cache[(i, m)] = taylor_conv(comp_pow(i, m - 1), p.component(i))
            return pow_cache[(i, m)]

        deg = max((sum(alpha) for alpha, _ in terms), default=0)
        box = tuple(deg * k for k in p.K)
        out = TaylorArray.zeros(box, 1, p.nu)
        for alpha, c in terms:
            mono = TaylorArray.delta((0,) * p.d, p.nu)
            for i in range(self.n):
                if alpha[i]:
                    mono = taylor_conv(mono, comp_pow(i, alpha[i]))
            mono = mono.pad_to(box)
            out.coeffs[..., 0] = out.coeffs[..., 0] + mono.coeffs[..., 0] * c
        return out

    def dC_kernels(self, p: TaylorArray) -> dict:
        """Kernels G^{jl}: Taylor coefficients of dg_j/dx_l along the chart."""
        out = {}
        for j in range(self.n):
            for l in range(self.n):
                out[(j, l)] = self._apply_terms_taylor(self.partial_terms(j, (l,)), p)
        return out

    def dC_kernels_float(self, p: np.ndarray) -> dict:
        from scipy.signal import convolve as _conv

        shape = p.shape[:-1]
        out = {}
        for j in range(self.n):
            for l in range(self.n):
                terms = self.partial_terms(j, (l,))
                deg = max((sum(alpha) for alpha, _ in terms), default=0)
                box = tuple(deg * (s - 1) + 1 for s in shape)
                res = np.zeros(box, dtype=complex)
                for alpha, c in terms:
                    e = np.zeros((1,) * len(shape), dtype=complex)
                    e[(0,) * len(shape)] = 1.0
                    mono = e
                    for i in range(self.n):
                        for _ in range(alpha[i]):
                            mono = _conv(mono, p[..., i], mode="full", method="direct")
                    sl = tuple(slice(0, s) for s in mono.shape)
                    res[sl] += c.mid() * mono
                out[(j, l)] = res
        return out

    def majorant_d2(self, j: int, s: list) -> Interval:
        """D^2 gtilde_j(s)[1,1]: the absolute-coefficient Hessian majorant.

        s is a vector of n nonnegative Interval arguments.
        """
        total = Interval(0.0)
        for alpha, c in self.terms_for(j):
            ac = abs(c)
            for i in range(self.n):
                for l in range(self.n):
                    f = alpha[i] * (alpha[l] - (1 if i == l else 0))
                    if f <= 0:
                        continue
                    mono = Interval(float(f))
                    for t in range(self.n):
                        e = alpha[t] - (1 if t == i else 0) - (1 if t == l else 0)
                        for _ in range(e):
                            mono = mono * s[t]
                    total = total + ac * mono
        return total


# =========================================================================
# Config ingestion
# =========================================================================

_TOKEN = _re.compile(r"\s*(\d+\.?\d*(?:[eE][+-]?\d+)?|[A-Za-z_][A-Za-z_0-9]*|[()+\-*/])")


def _tokenize(text: str) -> list:
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"bad parameter expression {text!r} at {pos}")
        out.append(m.group(1))
        pos = m.end()
    return out


def eval_param_expr(text: str, params: dict) -> Interval:
    """Evaluate a rational expression of named parameters to an interval.

    Grammar: + - * / with parentheses and unary minus; literals are decimal
    and enclosed tightly, never trusted to a lossy parse.
    """
    tokens = _tokenize(str(text))
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"unexpected end of expression {text!r}")
        t = tokens[pos]
        pos += 1
        return t

    def atom() -> Interval:
        t = take()
        if t == "(":
            v = expr()
            if take() != ")":
                raise ValueError(f"unbalanced parentheses in {text!r}")
            return v
        if t == "-":
            return -atom()
        if _re.fullmatch(r"\d+\.?\d*(?:[eE][+-]?\d+)?", t):
            return Interval.from_decimal(t)
        if t in params:
            return params[t]
        raise ValueError(f"unknown parameter {t!r} in {text!r}")

    def term() -> Interval:
        v = atom()
        while peek() in ("*", "/"):
            op = take()
            rhs = atom()
            v = v * rhs if op == "*" else v / rhs
        return v

    def expr() -> Interval:
        v = term()
        while peek() in ("+", "-"):
            op = take()
            rhs = term()
            v = v + rhs if op == "+" else v - rhs
        return v

    v = expr()
    if pos != len(tokens):
        raise ValueError(f"trailing tokens in expression {text!r}")
    return v


def field_from_config(cfg: dict) -> PolyVectorField:
    """Build a field from the config schema.

    Schema: {"n": int, "parameters": {name: decimal string}, "terms":
    [{"component": j (1-based), "exponent": [n ints], "coefficient": expr}]}.
    """
    n = int(cfg["n"])
    params = {name: Interval.from_decimal(str(val))
              for name, val in cfg.get("parameters", {}).items()}
    acc: dict = {}
    for term in cfg["terms"]:
        j = int(term["component"]) - 1
        if not 0 <= j < n:
            raise ValueError(f"component {term['component']} out of range")
        alpha = tuple(int(a) for a in term["exponent"])
        if len(alpha) != n or any(a < 0 for a in alpha):
            raise ValueError(f"bad exponent {term['exponent']}")
        c = eval_param_expr(term["coefficient"], params)
        key = alpha
        if key not in acc:
            acc[key] = [Interval(0.0) for _ in range(n)]
        acc[key][j] = acc[key][j] + c
    return PolyVectorField(n, [(alpha, cvec) for alpha, cvec in acc.items()])
