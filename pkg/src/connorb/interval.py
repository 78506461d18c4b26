"""Rigorous real and complex interval arithmetic with outward rounding.

Every operation returns an enclosure of the exact result.  Directed rounding
is emulated in software: each elementary floating point operation is computed
in the default round-to-nearest mode and the endpoints are then nudged one
step outward with ``nextafter``.  Correctness therefore never depends on a
process-global FPU rounding mode, so values can be shared freely between
threads.

For bulk linear algebra (the large defect-matrix products of the validation
step) intervals are handled in midpoint-radius form on top of BLAS matrix
products; the rounding error of a round-to-nearest dot product of length n is
absorbed with the classical gamma_n = n*u/(1-n*u) bound plus an underflow
guard.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

_INF = math.inf
_EPS = 2.0 ** -53        # unit roundoff of binary64
_TINY = 5e-324           # smallest subnormal; absolute error guard for products


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _dn(x: float) -> float:
    return math.nextafter(x, -_INF)


def gamma_up(n: int) -> float:
    """Upper bound for n*u/(1-n*u), valid for any summation order of n terms."""
    t = n * _EPS
    if t >= 0.5:
        raise ValueError(f"dimension {n} too large for the gamma bound")
    return _up(_up(t) / _dn(1.0 - t))


class Interval:
    """Closed real interval [lo, hi] with NaN forbidden and lo <= hi."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("NaN endpoint in interval")
        if lo > hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_decimal(cls, text: str) -> "Interval":
        """Tightest interval around a decimal literal (never trusts the parse)."""
        f = float(text)
        if math.isinf(f):
            raise ValueError(f"decimal literal {text!r} overflows binary64")
        exact = Fraction(text)
        ff = Fraction(f)
        if ff == exact:
            return cls(f, f)
        if ff < exact:
            return cls(f, _up(f))
        return cls(_dn(f), f)

    @classmethod
    def hull(cls, *values) -> "Interval":
        los, his = [], []
        for v in values:
            iv = v if isinstance(v, Interval) else cls(float(v))
            los.append(iv.lo)
            his.append(iv.hi)
        return cls(min(los), max(his))

    # -- queries -------------------------------------------------------------

    def mid(self) -> float:
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = 0.5 * self.lo + 0.5 * self.hi
        return min(max(m, self.lo), self.hi)

    def rad_upper(self) -> float:
        m = self.mid()
        return _up(max(m - self.lo, self.hi - m))

    def width(self) -> float:
        return _up(self.hi - self.lo)

    def mag(self) -> float:
        """sup |x| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> float:
        """inf |x| over the interval."""
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def straddles_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def strictly_positive(self) -> bool:
        return self.lo > 0.0

    def strictly_negative(self) -> bool:
        return self.hi < 0.0

    def interior_of(self, other: "Interval") -> bool:
        return other.lo < self.lo and self.hi < other.hi

    # -- arithmetic ----------------------------------------------------------

    @staticmethod
    def _coerce(x) -> "Interval":
        return x if isinstance(x, Interval) else Interval(float(x))

    def __add__(self, other):
        o = self._coerce(other)
        return Interval(_dn(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Interval(_dn(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other):
        o = self._coerce(other)
        p = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(_dn(min(p)), _up(max(p)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.straddles_zero():
            raise ZeroDivisionError(f"interval divisor {o} contains zero")
        q = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_dn(min(q)), _up(max(q)))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __abs__(self):
        return Interval(self.mig(), self.mag())

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        if n == 0:
            return Interval(1.0)
        if n == 1:
            return self
        if n % 2 == 1 or self.lo >= 0.0:
            return Interval(_dn(min(self.lo ** n, self.hi ** n)),
                            _up(max(self.lo ** n, self.hi ** n)))
        if self.hi <= 0.0:
            return Interval(_dn(self.hi ** n), _up(self.lo ** n))
        return Interval(0.0, _up(max(self.lo ** n, self.hi ** n)))

    def sqrt(self):
        if self.lo < 0.0:
            raise ValueError(f"sqrt of interval {self} with negative part")
        return Interval(max(0.0, _dn(math.sqrt(self.lo))), _up(math.sqrt(self.hi)))

    def log(self):
        # libm log is not guaranteed correctly rounded: nudge twice.
        if self.lo <= 0.0:
            raise ValueError(f"log of interval {self} touching zero")
        return Interval(_dn(_dn(math.log(self.lo))), _up(_up(math.log(self.hi))))

    def exp(self):
        return Interval(max(0.0, _dn(_dn(math.exp(self.lo)))), _up(_up(math.exp(self.hi))))

    def intersect(self, other: "Interval") -> "Interval":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise ValueError(f"empty intersection of {self} and {other}")
        return Interval(lo, hi)

    def __eq__(self, other):
        return isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def imax(*vals: Interval) -> Interval:
    return Interval(max(v.lo for v in vals), max(v.hi for v in vals))


def imin(*vals: Interval) -> Interval:
    return Interval(min(v.lo for v in vals), min(v.hi for v in vals))


E_INTERVAL = Interval(_dn(_dn(math.e)), _up(_up(math.e)))


class ComplexInterval:
    """Axis-aligned rectangle in the complex plane."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0.0):
        object.__setattr__(self, "re", re if isinstance(re, Interval) else Interval(float(re)))
        object.__setattr__(self, "im", im if isinstance(im, Interval) else Interval(float(im)))

    def __setattr__(self, name, value):
        raise AttributeError("ComplexInterval is immutable")

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexInterval":
        return cls(Interval(z.real), Interval(z.imag))

    @staticmethod
    def _coerce(x):
        if isinstance(x, ComplexInterval):
            return x
        if isinstance(x, Interval):
            return ComplexInterval(x, Interval(0.0))
        if isinstance(x, complex):
            return ComplexInterval.from_complex(x)
        return ComplexInterval(Interval(float(x)), Interval(0.0))

    def __add__(self, other):
        o = self._coerce(other)
        return ComplexInterval(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return ComplexInterval(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return ComplexInterval(-self.re, -self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        return ComplexInterval(self.re * o.re - self.im * o.im,
                               self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        d = o.re * o.re + o.im * o.im
        num = self * o.conj()
        return ComplexInterval(num.re / d, num.im / d)

    def conj(self):
        return ComplexInterval(self.re, -self.im)

    def abs_upper(self) -> float:
        """Rigorous upper bound on |z| over the rectangle."""
        h = math.hypot(self.re.mag(), self.im.mag())
        return 0.0 if h == 0.0 else _up(_up(h))

    def abs_interval(self) -> Interval:
        lo = _dn(_dn(math.hypot(self.re.mig(), self.im.mig())))
        return Interval(max(0.0, lo), self.abs_upper())

    def contains(self, z) -> bool:
        o = self._coerce(z)
        return self.re.contains(o.re) and self.im.contains(o.im)

    def mid(self) -> complex:
        return complex(self.re.mid(), self.im.mid())

    def __repr__(self):
        return f"ComplexInterval({self.re!r}, {self.im!r})"


# =========================================================================
# Vectorized interval arrays (inf-sup representation on ndarrays)
# =========================================================================

def _vup(x: np.ndarray) -> np.ndarray:
    return np.nextafter(x, _INF)


def _vdn(x: np.ndarray) -> np.ndarray:
    return np.nextafter(x, -_INF)


class IArray:
    """ndarray-valued real interval: elementwise [lo, hi]."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=np.float64)
        hi = lo.copy() if hi is None else np.asarray(hi, dtype=np.float64)
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("NaN endpoint in interval array")
        if (lo > hi).any():
            raise ValueError("invalid interval array: lo > hi somewhere")
        self.lo, self.hi = lo, hi

    # construction helpers
    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def exact(cls, x):
        x = np.asarray(x, dtype=np.float64)
        return cls(x, x.copy())

    @classmethod
    def from_scalar(cls, s: Interval, shape=()):
        return cls(np.full(shape, s.lo), np.full(shape, s.hi))

    @property
    def shape(self):
        return self.lo.shape

    def copy(self):
        return IArray(self.lo.copy(), self.hi.copy())

    def reshape(self, *shape):
        return IArray(self.lo.reshape(*shape), self.hi.reshape(*shape))

    def __getitem__(self, idx):
        return IArray(self.lo[idx], self.hi[idx])

    def __setitem__(self, idx, value):
        if isinstance(value, IArray):
            self.lo[idx], self.hi[idx] = value.lo, value.hi
        elif isinstance(value, Interval):
            self.lo[idx], self.hi[idx] = value.lo, value.hi
        else:
            v = np.asarray(value, dtype=np.float64)
            self.lo[idx], self.hi[idx] = v, v

    @staticmethod
    def _coerce(x):
        if isinstance(x, IArray):
            return x
        if isinstance(x, Interval):
            return IArray(np.asarray(x.lo), np.asarray(x.hi))
        return IArray.exact(x)

    def __add__(self, other):
        o = self._coerce(other)
        return IArray(_vdn(self.lo + o.lo), _vup(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return IArray(_vdn(self.lo - o.hi), _vup(self.hi - o.lo))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return IArray(-self.hi, -self.lo)

    def __mul__(self, other):
        o = self._coerce(other)
        p1, p2 = self.lo * o.lo, self.lo * o.hi
        p3, p4 = self.hi * o.lo, self.hi * o.hi
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        return IArray(_vdn(lo), _vup(hi))

    __rmul__ = __mul__

    def abs_sup(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def abs_inf(self) -> np.ndarray:
        out = np.minimum(np.abs(self.lo), np.abs(self.hi))
        out[(self.lo <= 0.0) & (self.hi >= 0.0)] = 0.0
        return out

    def abs(self) -> "IArray":
        return IArray(self.abs_inf(), self.abs_sup())

    def mid(self) -> np.ndarray:
        m = 0.5 * (self.lo + self.hi)
        bad = ~np.isfinite(m)
        if bad.any():
            m = np.where(bad, 0.5 * self.lo + 0.5 * self.hi, m)
        return np.clip(m, self.lo, self.hi)

    def rad_upper(self) -> np.ndarray:
        m = self.mid()
        return _vup(np.maximum(m - self.lo, self.hi - m))

    def widen(self, r) -> "IArray":
        r = np.asarray(r, dtype=np.float64)
        return IArray(_vdn(self.lo - r), _vup(self.hi + r))

    def hull_zero(self) -> "IArray":
        return IArray(np.minimum(self.lo, 0.0), np.maximum(self.hi, 0.0))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(self.lo <= x) and np.all(x <= self.hi))

    def sum(self) -> Interval:
        """Rigorous enclosure of the sum of all entries."""
        n = self.lo.size
        if n == 0:
            return Interval(0.0)
        g = gamma_up(max(n, 2))
        slo, shi = float(np.sum(self.lo)), float(np.sum(self.hi))
        alo, ahi = float(np.sum(np.abs(self.lo))), float(np.sum(np.abs(self.hi)))
        elo = _up(g * _up(alo * (1.0 + 4.0 * g))) if alo else 0.0
        ehi = _up(g * _up(ahi * (1.0 + 4.0 * g))) if ahi else 0.0
        lo = _dn(slo - elo) if elo else slo
        hi = _up(shi + ehi) if ehi else shi
        return Interval(lo, hi)

    def sum_axis(self, axis: int) -> "IArray":
        n = self.lo.shape[axis]
        if n == 0:
            shape = list(self.lo.shape)
            del shape[axis]
            return IArray.zeros(tuple(shape))
        g = gamma_up(max(n, 2))
        slo, shi = np.sum(self.lo, axis=axis), np.sum(self.hi, axis=axis)
        alo = np.sum(np.abs(self.lo), axis=axis)
        ahi = np.sum(np.abs(self.hi), axis=axis)
        elo = np.where(alo > 0.0, _vup(g * _vup(alo * (1.0 + 4.0 * g))), 0.0)
        ehi = np.where(ahi > 0.0, _vup(g * _vup(ahi * (1.0 + 4.0 * g))), 0.0)
        lo = np.where(elo > 0.0, _vdn(slo - elo), slo)
        hi = np.where(ehi > 0.0, _vup(shi + ehi), shi)
        return IArray(lo, hi)

    def __repr__(self):
        return f"IArray(shape={self.shape})"


class CArray:
    """ndarray-valued complex interval: elementwise rectangles re + i*im."""

    __slots__ = ("re", "im")

    def __init__(self, re: IArray, im: IArray):
        if re.shape != im.shape:
            raise ValueError("mismatched real/imaginary shapes")
        self.re, self.im = re, im

    @classmethod
    def zeros(cls, shape):
        return cls(IArray.zeros(shape), IArray.zeros(shape))

    @classmethod
    def exact(cls, z):
        z = np.asarray(z)
        return cls(IArray.exact(np.real(z).astype(np.float64)),
                   IArray.exact(np.imag(z).astype(np.float64)))

    @property
    def shape(self):
        return self.re.shape

    def copy(self):
        return CArray(self.re.copy(), self.im.copy())

    def reshape(self, *shape):
        return CArray(self.re.reshape(*shape), self.im.reshape(*shape))

    def __getitem__(self, idx):
        return CArray(self.re[idx], self.im[idx])

    def __setitem__(self, idx, value):
        if isinstance(value, CArray):
            self.re[idx], self.im[idx] = value.re, value.im
        elif isinstance(value, ComplexInterval):
            self.re[idx] = value.re
            self.im[idx] = value.im
        else:
            z = np.asarray(value)
            self.re[idx] = np.real(z)
            self.im[idx] = np.imag(z)

    @staticmethod
    def _coerce(x):
        if isinstance(x, CArray):
            return x
        if isinstance(x, IArray):
            return CArray(x, IArray.zeros(x.shape))
        if isinstance(x, ComplexInterval):
            return CArray(IArray._coerce(x.re), IArray._coerce(x.im))
        if isinstance(x, Interval):
            return CArray(IArray._coerce(x), IArray.zeros(()))
        return CArray.exact(x)

    def __add__(self, other):
        o = self._coerce(other)
        return CArray(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return CArray(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return CArray(-self.re, -self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        return CArray(self.re * o.re - self.im * o.im,
                      self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self):
        return CArray(self.re, -self.im)

    def abs_sup(self) -> np.ndarray:
        h = np.hypot(self.re.abs_sup(), self.im.abs_sup())
        return np.where(h == 0.0, 0.0, _vup(_vup(h)))

    def abs_inf(self) -> np.ndarray:
        h = np.hypot(self.re.abs_inf(), self.im.abs_inf())
        return np.maximum(_vdn(_vdn(h)), 0.0)

    def mid(self) -> np.ndarray:
        return self.re.mid() + 1j * self.im.mid()

    def rad_upper(self) -> np.ndarray:
        """Disk radius bound: every point lies within this of mid()."""
        h = np.hypot(self.re.rad_upper(), self.im.rad_upper())
        return _vup(_vup(h))

    def widen(self, r) -> "CArray":
        return CArray(self.re.widen(r), self.im.widen(r))

    def sum(self) -> ComplexInterval:
        return ComplexInterval(self.re.sum(), self.im.sum())

    def sum_axis(self, axis: int) -> "CArray":
        return CArray(self.re.sum_axis(axis), self.im.sum_axis(axis))

    def at(self, idx) -> ComplexInterval:
        return ComplexInterval(Interval(self.re.lo[idx], self.re.hi[idx]),
                               Interval(self.im.lo[idx], self.im.hi[idx]))

    def contains(self, z) -> bool:
        z = np.asarray(z)
        return self.re.contains(np.real(z)) and self.im.contains(np.imag(z))

    def __repr__(self):
        return f"CArray(shape={self.shape})"


# =========================================================================
# Rigorous dense products
# =========================================================================

def _prod_err(absA: np.ndarray, absB: np.ndarray, inner: int) -> np.ndarray:
    """Upper bound on |fl(A@B) - A@B| given |A|, |B| (round-to-nearest BLAS)."""
    k = max(inner, 2)
    g = gamma_up(k + 2)
    e = absA @ absB
    return _vup(g * _vup(e * (1.0 + 4.0 * g)) + k * _TINY)


def point_matmul(A: np.ndarray, B: np.ndarray) -> IArray:
    """Enclosure of the exact product of two float (point) matrices."""
    C = A @ B
    err = _prod_err(np.abs(A), np.abs(B), A.shape[-1])
    return IArray(_vdn(C - err), _vup(C + err))


def imatmul(A, B) -> IArray:
    """Enclosure of the interval matrix product A @ B (midpoint-radius)."""
    A = IArray._coerce(A) if not isinstance(A, IArray) else A
    B = IArray._coerce(B) if not isinstance(B, IArray) else B
    mA, rA = A.mid(), A.rad_upper()
    mB, rB = B.mid(), B.rad_upper()
    inner = mA.shape[-1]
    mC = mA @ mB
    absA, absB = np.abs(mA), np.abs(mB)
    r = absA @ rB + rA @ absB + rA @ rB
    err = _prod_err(absA, absB, inner)
    err = err + _prod_err(absA, rB, inner) + _prod_err(rA, absB, inner) \
        + _prod_err(rA, rB, inner)
    rC = _vup(_vup(r) + err)
    return IArray(_vdn(mC - rC), _vup(mC + rC))


def imatvec(M, v) -> IArray:
    M = IArray._coerce(M)
    v = IArray._coerce(v)
    return imatmul(M, v.reshape(-1, 1)).reshape(-1)


def cmatmul(A: CArray, B: CArray) -> CArray:
    """Enclosure of the complex interval matrix product A @ B."""
    rr = imatmul(A.re, B.re)
    ii = imatmul(A.im, B.im)
    ri = imatmul(A.re, B.im)
    ir = imatmul(A.im, B.re)
    return CArray(rr - ii, ri + ir)


def cmatvec(M: CArray, v: CArray) -> CArray:
    return cmatmul(M, v.reshape(-1, 1)).reshape(-1)


def iconvolve(a: IArray, b: IArray) -> IArray:
    """Enclosure of the full linear convolution of two 1-D interval arrays."""
    ma, ra = a.mid(), a.rad_upper()
    mb, rb = b.mid(), b.rad_upper()
    mC = np.convolve(ma, mb)
    absa, absb = np.abs(ma), np.abs(mb)
    r = np.convolve(absa, rb) + np.convolve(ra, absb) + np.convolve(ra, rb)
    inner = min(ma.size, mb.size)
    g = gamma_up(max(inner, 2) + 2)
    e = np.convolve(absa, absb)
    err = _vup(g * _vup(e * (1.0 + 4.0 * g)) + inner * _TINY)
    rC = _vup(_vup(r) + err)
    return IArray(_vdn(mC - rC), _vup(mC + rC))


def cconvolve(a: CArray, b: CArray) -> CArray:
    rr = iconvolve(a.re, b.re)
    ii = iconvolve(a.im, b.im)
    ri = iconvolve(a.re, b.im)
    ir = iconvolve(a.im, b.re)
    return CArray(rr - ii, ri + ir)


def iconvolve_nd(a: IArray, b: IArray) -> IArray:
    """Enclosure of the full n-D linear convolution (direct method only)."""
    from scipy.signal import convolve as _conv

    def conv(x, y):
        return _conv(x, y, mode="full", method="direct")

    ma, ra = a.mid(), a.rad_upper()
    mb, rb = b.mid(), b.rad_upper()
    mC = conv(ma, mb)
    absa, absb = np.abs(ma), np.abs(mb)
    r = conv(absa, rb) + conv(ra, absb) + conv(ra, rb)
    inner = min(ma.size, mb.size)
    g = gamma_up(max(inner, 2) + 2)
    e = conv(absa, absb)
    err = _vup(g * _vup(e * (1.0 + 4.0 * g)) + inner * _TINY)
    rC = _vup(_vup(r) + err)
    return IArray(_vdn(mC - rC), _vup(mC + rC))


def cconvolve_nd(a: CArray, b: CArray) -> CArray:
    rr = iconvolve_nd(a.re, b.re)
    ii = iconvolve_nd(a.im, b.im)
    ri = iconvolve_nd(a.re, b.im)
    ir = iconvolve_nd(a.im, b.re)
    return CArray(rr - ii, ri + ir)


def sum_upper(x: np.ndarray) -> float:
    """Rigorous upper bound of the exact sum of nonnegative floats."""
    n = x.size
    if n == 0:
        return 0.0
    s = float(np.sum(x))
    if s == 0.0:
        return 0.0
    g = gamma_up(max(n, 2))
    return _up(s * (1.0 + 2.0 * g))


def dot_upper(x: np.ndarray, y: np.ndarray) -> float:
    """Rigorous upper bound of the dot product of nonnegative floats."""
    n = x.size
    if n == 0:
        return 0.0
    s = float(np.dot(x, y))
    g = gamma_up(max(n, 2) + 2)
    return _up(s * (1.0 + 2.0 * g) + n * _TINY)


def pow_upper(base: Interval, exps: np.ndarray) -> np.ndarray:
    """Upper bounds of base**e for an array of nonnegative integer exponents."""
    if base.lo < 0:
        raise ValueError("pow_upper requires a nonnegative base")
    emax = int(np.max(exps)) if exps.size else 0
    table = np.empty(emax + 1)
    acc = Interval(1.0)
    table[0] = 1.0
    for e in range(1, emax + 1):
        acc = acc * base
        table[e] = acc.hi
    return table[exps]


def pow_lower(base: Interval, exps: np.ndarray) -> np.ndarray:
    if base.lo < 0:
        raise ValueError("pow_lower requires a nonnegative base")
    emax = int(np.max(exps)) if exps.size else 0
    table = np.empty(emax + 1)
    acc = Interval(1.0)
    table[0] = 1.0
    for e in range(1, emax + 1):
        acc = acc * base
        table[e] = acc.lo
    return table[exps]
