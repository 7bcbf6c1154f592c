"""Exact arithmetic over Q(c) with c = r**(1/3) for a positive rational r.

The non-asymptotic error bounds are rational multiples of powers of
(1 + z**(1/3)), so comparing them against exact rational probabilities
needs numbers of the form x + y*c + w*c**2.  Signs are decided by interval
refinement with integer cube roots, which terminates because a nonzero
element of the field is bounded away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def icbrt(n: int) -> int:
    """Floor integer cube root of a nonnegative integer."""
    if n < 0:
        raise ValueError("icbrt of negative")
    if n == 0:
        return 0
    x = 1 << -(-n.bit_length() // 3)  # upper-ish starting point
    while True:
        y = (2 * x + n // (x * x)) // 3
        if y >= x:
            break
        x = y
    while x * x * x > n:
        x -= 1
    return x


def _rational_cbrt(r: Fraction) -> Fraction | None:
    """Exact cube root of r if it is a perfect rational cube, else None."""
    a, b = r.numerator, r.denominator
    ra, rb = icbrt(a), icbrt(b)
    if ra**3 == a and rb**3 == b:
        return Fraction(ra, rb)
    return None


def cbrt_bounds(r: Fraction, digits: int) -> tuple[Fraction, Fraction]:
    """Lower/upper rational bounds on r**(1/3), tight to 10**-digits."""
    scale = 10**digits
    m = (r.numerator * scale**3) // r.denominator
    lo = icbrt(m)
    return Fraction(lo, scale), Fraction(lo + 1, scale)


@dataclass(frozen=True)
class CubicExt:
    """x + y*c + w*c**2 with c = base**(1/3), all coordinates rational."""

    x: Fraction
    y: Fraction
    w: Fraction
    base: Fraction  # c**3

    @staticmethod
    def of(value: Fraction | int, base: Fraction) -> "CubicExt":
        return CubicExt(Fraction(value), Fraction(0), Fraction(0), base)

    @staticmethod
    def root(base: Fraction) -> "CubicExt":
        """The generator c itself."""
        return CubicExt(Fraction(0), Fraction(1), Fraction(0), base)

    def _check(self, other: "CubicExt") -> None:
        if self.base != other.base:
            raise ValueError("mixed cube-root bases")

    def __add__(self, other: "CubicExt | Fraction | int") -> "CubicExt":
        if not isinstance(other, CubicExt):
            other = CubicExt.of(Fraction(other), self.base)
        self._check(other)
        return CubicExt(self.x + other.x, self.y + other.y, self.w + other.w, self.base)

    def __sub__(self, other: "CubicExt | Fraction | int") -> "CubicExt":
        if not isinstance(other, CubicExt):
            other = CubicExt.of(Fraction(other), self.base)
        self._check(other)
        return CubicExt(self.x - other.x, self.y - other.y, self.w - other.w, self.base)

    def __mul__(self, other: "CubicExt | Fraction | int") -> "CubicExt":
        if not isinstance(other, CubicExt):
            f = Fraction(other)
            return CubicExt(self.x * f, self.y * f, self.w * f, self.base)
        self._check(other)
        r = self.base
        a0, a1, a2 = self.x, self.y, self.w
        b0, b1, b2 = other.x, other.y, other.w
        # (a0 + a1 c + a2 c^2)(b0 + b1 c + b2 c^2) with c^3 = r, c^4 = r c
        x = a0 * b0 + r * (a1 * b2 + a2 * b1)
        y = a0 * b1 + a1 * b0 + r * a2 * b2
        w = a0 * b2 + a1 * b1 + a2 * b0
        return CubicExt(x, y, w, self.base)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "CubicExt":
        if n < 0:
            raise ValueError("negative powers unsupported")
        out = CubicExt.of(Fraction(1), self.base)
        sq = self
        while n:
            if n & 1:
                out = out * sq
            sq = sq * sq
            n >>= 1
        return out

    def sign(self) -> int:
        """Exact sign: -1, 0, or +1."""
        if self.x == 0 and self.y == 0 and self.w == 0:
            return 0
        exact_c = _rational_cbrt(self.base)
        if exact_c is not None:
            v = self.x + self.y * exact_c + self.w * exact_c**2
            return (v > 0) - (v < 0)
        digits = 20
        while digits <= 1300:
            lo, hi = cbrt_bounds(self.base, digits)
            lo2, hi2 = lo * lo, hi * hi
            vlo = self.x + min(self.y * lo, self.y * hi) + min(self.w * lo2, self.w * hi2)
            vhi = self.x + max(self.y * lo, self.y * hi) + max(self.w * lo2, self.w * hi2)
            if vlo > 0:
                return 1
            if vhi < 0:
                return -1
            digits *= 2
        raise ArithmeticError("sign undecided after refinement; element may be zero")

    def compare(self, other: "CubicExt | Fraction | int") -> int:
        if not isinstance(other, CubicExt):
            other = CubicExt.of(Fraction(other), self.base)
        return (self - other).sign()

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __float__(self) -> float:
        lo, hi = cbrt_bounds(self.base, 40)
        mid = (lo + hi) / 2
        return float(self.x + self.y * mid + self.w * mid * mid)
