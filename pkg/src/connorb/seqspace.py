"""Weighted coefficient sequence spaces.

Two Banach algebras underlie all bound computations:

* ``ChebSeq`` -- finitely supported one-sided Chebyshev coefficient sequences
  with the weighted norm |a_0| + 2*sum_k |a_k| nu^k (componentwise max), a
  commutative algebra under the symmetric discrete convolution;
* ``TaylorArray`` -- finitely supported multivariate Taylor coefficient
  arrays with the norm sum_k |p_k| nu^|k|, an algebra under the Cauchy
  product.

Operator norms on both spaces are weighted suprema over the corner points of
the unit ball, which is what makes every bound in the validator a finite
computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .interval import (
    CArray,
    IArray,
    Interval,
    cconvolve,
    cconvolve_nd,
    pow_lower,
    pow_upper,
    sum_upper,
)


def graded_lex(K) -> np.ndarray:
    """Multi-indices of the box {k : k_i <= K_i}, sorted by (|k|, lex).

    Returns an integer array of shape (prod(K_i + 1), d).  This ordering is
    used everywhere a Taylor array is flattened into a column vector.
    """
    K = tuple(int(k) for k in K)
    grids = np.meshgrid(*[np.arange(k + 1) for k in K], indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    keys = tuple(flat[:, j] for j in reversed(range(flat.shape[1]))) + (flat.sum(axis=1),)
    order = np.lexsort(keys)
    return flat[order]


def cheb_weights_upper(N: int, nu: Interval) -> np.ndarray:
    """Row weights (1, 2 nu, 2 nu^2, ...) of the ell^1_nu norm, rounded up."""
    w = pow_upper(abs(nu), np.arange(N))
    w[1:] = np.nextafter(2.0 * w[1:], np.inf)
    return w

def cheb_weights_lower(N: int, nu: Interval) -> np.ndarray:
    w = pow_lower(abs(nu), np.arange(N))
    w[1:] = np.nextafter(2.0 * w[1:], -np.inf)
    return w


def cheb_corner_weights_upper(N: int, nu: Interval) -> np.ndarray:
    """Corner point sizes (1, nu^-1/2, nu^-2/2, ...), rounded up."""
    inv = Interval(1.0) / abs(nu)
    w = pow_upper(inv, np.arange(N))
    w[1:] = np.nextafter(0.5 * w[1:], np.inf)
    return w


def taylor_weights_upper(orders: np.ndarray, nu: Interval) -> np.ndarray:
    """nu^|k| rounded up, for an array of multi-index degrees |k|."""
    return pow_upper(abs(nu), orders)


def taylor_corner_weights_upper(orders: np.ndarray, nu: Interval) -> np.ndarray:
    inv = Interval(1.0) / abs(nu)
    return pow_upper(inv, orders)


@dataclass(frozen=True)
class Involution:
    """Conjugation symmetry of the eigencoordinates.

    The first ``pairs`` coordinate pairs correspond to complex conjugate
    eigenvalue pairs; applying the involution swaps each pair (and conjugates
    values living on top).  On multi-indices it acts as a permutation.
    """

    d: int
    pairs: int

    def __post_init__(self):
        if 2 * self.pairs > self.d:
            raise ValueError("more conjugate pairs than coordinates")

    def perm(self) -> np.ndarray:
        p = np.arange(self.d)
        for j in range(self.pairs):
            p[2 * j], p[2 * j + 1] = 2 * j + 1, 2 * j
        return p

    def apply_index(self, k: np.ndarray) -> np.ndarray:
        return np.asarray(k)[..., self.perm()]

    def apply_vector(self, z: np.ndarray) -> np.ndarray:
        """z* for a vector of eigencoordinates (swap pairs, conjugate)."""
        return np.conj(np.asarray(z)[self.perm()])


class ChebSeq:
    """Element of ell^1_{nu,n}: coefficients a_0..a_{N-1} of n-vectors."""

    def __init__(self, coeffs: CArray, nu: Interval, nu_text: str | None = None):
        if coeffs.shape == () or len(coeffs.shape) != 2:
            raise ValueError("ChebSeq coefficients must have shape (N, n)")
        self.coeffs = coeffs
        self.nu = nu
        self.nu_text = nu_text

    @classmethod
    def from_complex(cls, arr, nu: Interval) -> "ChebSeq":
        arr = np.atleast_2d(np.asarray(arr, dtype=complex))
        if arr.shape[0] == 1 and arr.shape[1] > 1 and arr.ndim == 2:
            pass
        return cls(CArray.exact(arr), nu)

    @classmethod
    def zeros(cls, N: int, n: int, nu: Interval) -> "ChebSeq":
        return cls(CArray.zeros((N, n)), nu)

    @classmethod
    def basis(cls, k: int, nu: Interval, n: int = 1, j: int = 0, value=1.0) -> "ChebSeq":
        out = cls.zeros(k + 1, n, nu)
        out.coeffs[k, j] = value
        return out

    @classmethod
    def corner(cls, k: int, nu: Interval) -> "ChebSeq":
        """Corner point xi_k of the unit ball (scalar sequence)."""
        eps = Interval(1.0) if k == 0 else Interval(0.5) / abs(nu) ** k
        out = cls.zeros(k + 1, 1, nu)
        out.coeffs[k, 0] = ComplexOf(eps)
        return out

    @property
    def support(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    def component(self, j: int) -> "ChebSeq":
        return ChebSeq(self.coeffs[:, j : j + 1], self.nu, self.nu_text)

    def pad_to(self, N: int) -> "ChebSeq":
        if N <= self.support:
            return self
        out = ChebSeq.zeros(N, self.n, self.nu)
        out.coeffs[: self.support] = self.coeffs
        return out

    def norm(self) -> Interval:
        """Enclosure of the ell^1_nu norm (max over components)."""
        N = self.support
        wu = cheb_weights_upper(N, self.nu)
        wl = cheb_weights_lower(N, self.nu)
        sup = self.coeffs.abs_sup()
        inf = self.coeffs.abs_inf()
        upper = max(sum_upper(wu * sup[:, j]) for j in range(self.n))
        lower = max(
            float(np.nextafter(np.sum(np.nextafter(wl * inf[:, j], -np.inf))
                               * (1.0 - 4e-16 * N), -np.inf))
            for j in range(self.n)
        )
        return Interval(max(lower, 0.0), upper)

    def norm_upper(self) -> float:
        return self.norm().hi

    def conj(self) -> "ChebSeq":
        return ChebSeq(self.coeffs.conj(), self.nu, self.nu_text)

    def __add__(self, other: "ChebSeq") -> "ChebSeq":
        N = max(self.support, other.support)
        a, b = self.pad_to(N), other.pad_to(N)
        return ChebSeq(a.coeffs + b.coeffs, self.nu, self.nu_text)

    def __sub__(self, other: "ChebSeq") -> "ChebSeq":
        N = max(self.support, other.support)
        a, b = self.pad_to(N), other.pad_to(N)
        return ChebSeq(a.coeffs - b.coeffs, self.nu, self.nu_text)

    def scale(self, s) -> "ChebSeq":
        return ChebSeq(self.coeffs * s, self.nu, self.nu_text)

    def mid(self) -> np.ndarray:
        return self.coeffs.mid()

    def to_dict(self) -> dict:
        ks, res, ims = [], [], []
        for k in range(self.support):
            for j in range(self.n):
                ks.append([k, j])
                res.append([self.coeffs.re.lo[k, j], self.coeffs.re.hi[k, j]])
                ims.append([self.coeffs.im.lo[k, j], self.coeffs.im.hi[k, j]])
        return {
            "kind": "cheb",
            "n": self.n,
            "d": 1,
            "nu": self.nu_text if self.nu_text is not None else [self.nu.lo, self.nu.hi],
            "support": self.support,
            "entries": [{"k": k, "re": r, "im": i} for k, r, i in zip(ks, res, ims)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChebSeq":
        nu = (Interval.from_decimal(data["nu"]) if isinstance(data["nu"], str)
              else Interval(*data["nu"]))
        out = cls.zeros(data["support"], data["n"], nu)
        if isinstance(data["nu"], str):
            out.nu_text = data["nu"]
        for e in data["entries"]:
            k, j = e["k"]
            out.coeffs.re.lo[k, j], out.coeffs.re.hi[k, j] = e["re"]
            out.coeffs.im.lo[k, j], out.coeffs.im.hi[k, j] = e["im"]
        return out


def ComplexOf(x: Interval):
    from .interval import ComplexInterval

    return ComplexInterval(x, Interval(0.0))


def cheb_conv(a: ChebSeq, b: ChebSeq) -> ChebSeq:
    """Symmetric discrete convolution; the product of Chebyshev expansions.

    Applies componentwise when both inputs share a component count.
    """
    if a.n != b.n:
        raise ValueError("component mismatch in convolution")
    Na, Nb = a.support, b.support
    Nc = Na + Nb - 1
    out = ChebSeq.zeros(Nc, a.n, a.nu)
    for j in range(a.n):
        ta = _two_sided(a.coeffs[:, j])
        tb = _two_sided(b.coeffs[:, j])
        full = cconvolve(ta, tb)
        centre = (Na - 1) + (Nb - 1)
        out.coeffs[:, j] = full[centre : centre + Nc]
    return out


def _two_sided(c: CArray) -> CArray:
    """[c_{N-1} .. c_1, c_0, c_1 .. c_{N-1}] for a one-sided coefficient row."""
    N = c.shape[0]
    idx = np.abs(np.arange(-(N - 1), N))
    return c[idx]


def cheb_pow(a: ChebSeq, m: int) -> ChebSeq:
    if m == 0:
        return ChebSeq.basis(0, a.nu, a.n)
    out = a
    for _ in range(m - 1):
        out = cheb_conv(out, a)
    return out


class TaylorArray:
    """Element of W^1_{nu,n,d}: dense coefficient box of shape (K+1, ..., n)."""

    def __init__(self, coeffs: CArray, nu: Interval, nu_text: str | None = None):
        if len(coeffs.shape) < 2:
            raise ValueError("TaylorArray coefficients need >= 1 variable axis")
        self.coeffs = coeffs
        self.nu = nu
        self.nu_text = nu_text

    @classmethod
    def zeros(cls, K, n: int, nu: Interval) -> "TaylorArray":
        shape = tuple(int(k) + 1 for k in K) + (n,)
        return cls(CArray.zeros(shape), nu)

    @classmethod
    def from_complex(cls, arr, nu: Interval) -> "TaylorArray":
        return cls(CArray.exact(np.asarray(arr, dtype=complex)), nu)

    @classmethod
    def delta(cls, k, nu: Interval, n: int = 1, j: int = 0, value=1.0) -> "TaylorArray":
        out = cls.zeros(k, n, nu)
        out.coeffs[tuple(int(i) for i in k) + (j,)] = value
        return out

    @classmethod
    def corner(cls, k, nu: Interval) -> "TaylorArray":
        eps = Interval(1.0) / abs(nu) ** int(sum(k))
        out = cls.zeros(k, 1, nu)
        out.coeffs[tuple(int(i) for i in k) + (0,)] = ComplexOf(eps)
        return out

    @property
    def d(self) -> int:
        return len(self.coeffs.shape) - 1

    @property
    def n(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def K(self) -> tuple:
        return tuple(s - 1 for s in self.coeffs.shape[:-1])

    def component(self, j: int) -> "TaylorArray":
        return TaylorArray(self.coeffs[..., j : j + 1], self.nu, self.nu_text)

    def degrees(self) -> np.ndarray:
        """|k| on the coefficient box (without the component axis)."""
        shape = self.coeffs.shape[:-1]
        grids = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
        return sum(grids)

    def pad_to(self, K) -> "TaylorArray":
        K = tuple(int(k) for k in K)
        if K == self.K:
            return self
        out = TaylorArray.zeros(K, self.n, self.nu)
        sl = tuple(slice(0, min(a + 1, b + 1)) for a, b in zip(self.K, K))
        src = tuple(slice(0, s.stop) for s in sl)
        out.coeffs[sl + (slice(None),)] = self.coeffs[src + (slice(None),)]
        return out

    def truncate(self, K) -> "TaylorArray":
        K = tuple(int(k) for k in K)
        sl = tuple(slice(0, k + 1) for k in K) + (slice(None),)
        return TaylorArray(self.coeffs[sl], self.nu, self.nu_text)

    def norm(self) -> Interval:
        deg = self.degrees().ravel()
        wu = taylor_weights_upper(deg, self.nu)
        sup = self.coeffs.abs_sup().reshape(-1, self.n)
        inf = self.coeffs.abs_inf().reshape(-1, self.n)
        wl = pow_lower(abs(self.nu), deg)
        upper = max(sum_upper(wu * sup[:, j]) for j in range(self.n))
        lower = max(
            float(np.nextafter(np.sum(wl * inf[:, j]) * (1.0 - 4e-16 * deg.size), -np.inf))
            for j in range(self.n)
        )
        return Interval(max(lower, 0.0), upper)

    def norm_upper(self) -> float:
        return self.norm().hi

    def conj(self) -> "TaylorArray":
        return TaylorArray(self.coeffs.conj(), self.nu, self.nu_text)

    def __add__(self, other: "TaylorArray") -> "TaylorArray":
        K = tuple(max(a, b) for a, b in zip(self.K, other.K))
        a, b = self.pad_to(K), other.pad_to(K)
        return TaylorArray(a.coeffs + b.coeffs, self.nu, self.nu_text)

    def __sub__(self, other: "TaylorArray") -> "TaylorArray":
        K = tuple(max(a, b) for a, b in zip(self.K, other.K))
        a, b = self.pad_to(K), other.pad_to(K)
        return TaylorArray(a.coeffs - b.coeffs, self.nu, self.nu_text)

    def scale(self, s) -> "TaylorArray":
        return TaylorArray(self.coeffs * s, self.nu, self.nu_text)

    def mid(self) -> np.ndarray:
        return self.coeffs.mid()

    def to_dict(self) -> dict:
        entries = []
        for k in np.ndindex(*self.coeffs.shape[:-1]):
            for j in range(self.n):
                idx = k + (j,)
                entries.append({
                    "k": list(k) + [j],
                    "re": [self.coeffs.re.lo[idx], self.coeffs.re.hi[idx]],
                    "im": [self.coeffs.im.lo[idx], self.coeffs.im.hi[idx]],
                })
        return {
            "kind": "taylor",
            "n": self.n,
            "d": self.d,
            "nu": self.nu_text if self.nu_text is not None else [self.nu.lo, self.nu.hi],
            "K": list(self.K),
            "entries": entries,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaylorArray":
        nu = (Interval.from_decimal(data["nu"]) if isinstance(data["nu"], str)
              else Interval(*data["nu"]))
        out = cls.zeros(data["K"], data["n"], nu)
        if isinstance(data["nu"], str):
            out.nu_text = data["nu"]
        for e in data["entries"]:
            *k, j = e["k"]
            idx = tuple(k) + (j,)
            out.coeffs.re.lo[idx], out.coeffs.re.hi[idx] = e["re"]
            out.coeffs.im.lo[idx], out.coeffs.im.hi[idx] = e["im"]
        return out


def taylor_conv(p: TaylorArray, q: TaylorArray) -> TaylorArray:
    """Cauchy product (one-sided discrete convolution) of Taylor arrays."""
    if p.d != q.d or p.n != q.n:
        raise ValueError("dimension mismatch in Cauchy product")
    Kc = tuple(a + b for a, b in zip(p.K, q.K))
    out = TaylorArray.zeros(Kc, p.n, p.nu)
    for j in range(p.n):
        a = p.coeffs[..., j]
        b = q.coeffs[..., j]
        out.coeffs[..., j] = cconvolve_nd(a, b)
    return out


def taylor_pow(p: TaylorArray, m: int) -> TaylorArray:
    if m == 0:
        return TaylorArray.delta((0,) * p.d, p.nu, p.n)
    out = p
    for _ in range(m - 1):
        out = taylor_conv(out, p)
    return out


def star(obj, inv: Involution):
    """The involution *: permute conjugate-pair indices and conjugate.

    Acts on eigencoordinate vectors and on TaylorArray coefficients.
    """
    if isinstance(obj, TaylorArray):
        perm = tuple(inv.perm()) + (len(obj.coeffs.shape) - 1,)
        re = IArray(np.ascontiguousarray(np.transpose(obj.coeffs.re.lo, perm)),
                    np.ascontiguousarray(np.transpose(obj.coeffs.re.hi, perm)))
        im = IArray(np.ascontiguousarray(np.transpose(-obj.coeffs.im.hi, perm)),
                    np.ascontiguousarray(np.transpose(-obj.coeffs.im.lo, perm)))
        return TaylorArray(CArray(re, im), obj.nu, obj.nu_text)
    arr = np.asarray(obj)
    return inv.apply_vector(arr)


def cheb_opnorm_matrix(M, nu_dom: Interval, nu_ran: Interval) -> Interval:
    """Operator norm of a finite matrix block ell^1_{nu1} -> ell^1_{nu2}.

    Rows and columns both start at index 0; the caller asserts that omitted
    rows/columns vanish (or bounds them separately).
    """
    absM = M.abs_sup() if isinstance(M, (CArray, IArray)) else np.abs(np.asarray(M))
    R, C = absM.shape
    roww = cheb_weights_upper(R, nu_ran)
    colw = cheb_corner_weights_upper(C, nu_dom)
    col_norms = np.array([sum_upper(roww * absM[:, l]) for l in range(C)])
    upper = max(float(np.nextafter(colw[l] * col_norms[l], np.inf)) for l in range(C))
    return Interval(0.0, upper)


def taylor_opnorm_columns(evaluator, K_scan, nu: Interval) -> Interval:
    """sup_k ||L(bxi_k)|| over a finite scan box of corner points.

    ``evaluator(k)`` must return an upper bound of the image norm at the
    corner point bxi_k.  The caller supplies the proof-side argument that the
    supremum over indices outside the scan box is dominated.
    """
    best = 0.0
    for k in graded_lex(K_scan):
        best = max(best, float(evaluator(tuple(int(i) for i in k))))
    return Interval(0.0, best)
