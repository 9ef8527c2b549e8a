"""
Certified fixed-point interval arithmetic.

Every real number used in a truncation is carried as a FixedReal: two integer
mantissas lo <= hi over a common power-of-two denominator. Operations round
lo down and hi up, so the exact value always stays inside the enclosure, and
a floor is only ever returned once both endpoints agree on it.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt

from utils.config import get_precision_cap, get_start_bits
from utils.errors import InvalidParameter, NeedsMorePrecision, PrecisionCapExceeded

logger = logging.getLogger(__name__)


def _ceil_div(a, b):
    return -((-a) // b)


@dataclass(frozen=True)
class FixedReal:
    """
    Enclosure [lo * 2^-scale_bits, hi * 2^-scale_bits] of a real number.

    Args:
        lo (int): lower mantissa
        hi (int): upper mantissa, never below lo
        scale_bits (int): binary scale B of both mantissas
    """

    lo: int
    hi: int
    scale_bits: int

    def __post_init__(self):
        if self.scale_bits < 0:
            raise InvalidParameter(f"scale_bits must be non-negative, got {self.scale_bits}")
        if self.lo > self.hi:
            raise InvalidParameter(f"Empty enclosure: lo={self.lo} > hi={self.hi}")

    @classmethod
    def exact(cls, n, scale_bits=0):
        return cls(n << scale_bits, n << scale_bits, scale_bits)

    @classmethod
    def from_fraction(cls, num, den, scale_bits):
        if den <= 0:
            raise InvalidParameter("Denominator must be positive")
        scaled = num << scale_bits
        return cls(scaled // den, _ceil_div(scaled, den), scale_bits)

    @property
    def lower(self):
        return Fraction(self.lo, 1 << self.scale_bits)

    @property
    def upper(self):
        return Fraction(self.hi, 1 << self.scale_bits)

    @property
    def width(self):
        return Fraction(self.hi - self.lo, 1 << self.scale_bits)

    def is_exact(self):
        return self.lo == self.hi

    def contains(self, value):
        value = Fraction(value)
        return self.lower <= value <= self.upper

    def rescale(self, scale_bits):
        """
        Re-express the enclosure at another scale, rounding outwards.

        Args:
            scale_bits (int): the new scale

        Returns:
            FixedReal: an enclosure containing this one
        """
        d = scale_bits - self.scale_bits
        if d >= 0:
            return FixedReal(self.lo << d, self.hi << d, scale_bits)
        return FixedReal(self.lo >> -d, _ceil_div(self.hi, 1 << -d), scale_bits)

    def _align(self, other):
        if isinstance(other, int):
            other = FixedReal.exact(other, self.scale_bits)
        scale = max(self.scale_bits, other.scale_bits)
        return self.rescale(scale), other.rescale(scale), scale

    def __add__(self, other):
        a, b, scale = self._align(other)
        return FixedReal(a.lo + b.lo, a.hi + b.hi, scale)

    __radd__ = __add__

    def __neg__(self):
        return FixedReal(-self.hi, -self.lo, self.scale_bits)

    def __sub__(self, other):
        a, b, scale = self._align(other)
        return FixedReal(a.lo - b.hi, a.hi - b.lo, scale)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale_int(other)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        raw = FixedReal(min(products), max(products), self.scale_bits + other.scale_bits)
        return raw.rescale(max(self.scale_bits, other.scale_bits))

    __rmul__ = __mul__

    def scale_int(self, k):
        """Multiply by an exact integer."""
        if k >= 0:
            return FixedReal(self.lo * k, self.hi * k, self.scale_bits)
        return FixedReal(self.hi * k, self.lo * k, self.scale_bits)

    def divide(self, other):
        """
        Divide by an enclosure that is strictly positive.

        Args:
            other (FixedReal): divisor with other.lo > 0

        Returns:
            FixedReal: enclosure of the quotient at the larger of the two scales
        """
        if isinstance(other, int):
            other = FixedReal.exact(other)
        if other.lo <= 0:
            raise NeedsMorePrecision("Divisor enclosure is not strictly positive")
        scale = max(self.scale_bits, other.scale_bits)
        e = other.scale_bits + scale - self.scale_bits
        quotients_lo = [(n << e) // d for n in (self.lo, self.hi) for d in (other.lo, other.hi)]
        quotients_hi = [_ceil_div(n << e, d) for n in (self.lo, self.hi) for d in (other.lo, other.hi)]
        return FixedReal(min(quotients_lo), max(quotients_hi), scale)

    def midpoint(self):
        return float(Fraction(self.lo + self.hi, 2 << self.scale_bits))

    def to_decimal(self, digits=20):
        """
        Decimal rendering of the enclosure, lower end rounded down, upper end up.

        Args:
            digits (int): digits after the decimal point

        Returns:
            str: "[lower, upper]"
        """
        scale = 10 ** digits
        lo = (self.lo * scale) >> self.scale_bits
        hi = _ceil_div(self.hi * scale, 1 << self.scale_bits)
        return f"[{_format_scaled(lo, digits)}, {_format_scaled(hi, digits)}]"


def _format_scaled(value, digits):
    sign = "-" if value < 0 else ""
    whole, frac = divmod(abs(value), 10 ** digits)
    if digits == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{digits}d}"


@dataclass(frozen=True)
class DyadicRational:
    """Exact value numerator / 2^denominator_log2."""

    numerator: int
    denominator_log2: int

    def __post_init__(self):
        if self.denominator_log2 < 0:
            raise InvalidParameter("denominator_log2 must be non-negative")

    @classmethod
    def parse(cls, text):
        """
        Parse "A", "A/D" (D a power of two) into a dyadic rational.

        Args:
            text (str): textual value such as "3/2"

        Returns:
            DyadicRational: the exact value, not reduced
        """
        value = Fraction(text.strip())
        return cls.from_fraction(value)

    @classmethod
    def from_fraction(cls, value):
        value = Fraction(value)
        den = value.denominator
        if den & (den - 1):
            raise InvalidParameter(f"{value} is not dyadic: alpha must be A/2^b")
        return cls(value.numerator, den.bit_length() - 1)

    def as_fraction(self):
        return Fraction(self.numerator, 1 << self.denominator_log2)

    def validate_alpha(self):
        b = self.denominator_log2
        if not (1 << b) <= self.numerator < (2 << b):
            raise InvalidParameter(
                f"alpha = {self.numerator}/2^{b} is outside [1, 2)"
            )
        return self

    def __str__(self):
        return f"{self.numerator}/2^{self.denominator_log2}"


def _odd_power_series(num, den, scale, alternating):
    """
    Sum of (+-1)^k x^(2k+1) / (2k+1) for x = num/den in [0, 1/3], at a fixed scale.

    Returns the truncated fixed-point sum together with a bound, in units of
    the last place, on its distance from the exact series value.
    """
    x2n, x2d = num * num, den * den
    power = (num << scale) // den
    err = 1
    total = 0
    bound = 0
    k = 0
    while power > 0:
        term = power // (2 * k + 1)
        total += -term if (alternating and k & 1) else term
        bound += err + 1
        power = (power * x2n) // x2d
        err += 1
        k += 1
    # tail: alternating series is bounded by the first omitted term, the
    # positive one by a geometric factor below 2 when x <= 1/3
    bound += 2 * err + 1
    return total, bound


def _halve_argument(xl, xh, scale):
    # tan(t/2) = x / (1 + sqrt(1 + x^2)), increasing in x
    one = 1 << scale
    s_lo = isqrt(one * one + xl * xl)
    s_hi = isqrt(one * one + xh * xh) + 1
    return (xl << scale) // (one + s_hi), _ceil_div(xh << scale, one + s_lo)


@lru_cache(maxsize=1 << 14)
def arctan_ratio(num, den, bits):
    """
    Enclosure of arctan(num/den) for 0 < num < den.

    The argument is halved until it drops below 1/4, then the alternating
    Taylor series is summed at both endpoints with an explicit error bound.

    Args:
        num (int): positive numerator
        den (int): denominator, larger than num
        bits (int): requested precision

    Returns:
        FixedReal: enclosure of width at most 2^-bits
    """
    if num <= 0 or den <= 0 or num >= den:
        raise InvalidParameter(f"arctan_ratio needs 0 < num < den, got {num}/{den}")
    guard = 16 + bits.bit_length()
    while True:
        scale = bits + guard
        one = 1 << scale
        xl = (num << scale) // den
        xh = _ceil_div(num << scale, den)
        halvings = 0
        while xh > one >> 2:
            xl, xh = _halve_argument(xl, xh, scale)
            halvings += 1
        s_lo, e_lo = _odd_power_series(xl, one, scale, alternating=True)
        s_hi, e_hi = _odd_power_series(xh, one, scale, alternating=True)
        lo = max((s_lo - e_lo) << halvings, 0)
        hi = (s_hi + e_hi) << halvings
        if hi - lo <= 1 << guard:
            return FixedReal(lo, hi, scale)
        guard += 16


@lru_cache(maxsize=256)
def pi_const(bits):
    """
    Enclosure of pi from Machin's formula pi = 16 atan(1/5) - 4 atan(1/239).

    Args:
        bits (int): requested precision, at least 8

    Returns:
        FixedReal: enclosure of width at most 2^-bits
    """
    if bits < 8:
        raise InvalidParameter(f"pi_const needs at least 8 bits, got {bits}")
    work = bits + 6
    return arctan_ratio(1, 5, work).scale_int(16) - arctan_ratio(1, 239, work).scale_int(4)


def _atanh_ratio(num, den, scale):
    total, bound = _odd_power_series(num, den, scale, alternating=False)
    return FixedReal(max(total - bound, 0), total + bound, scale)


@lru_cache(maxsize=256)
def _ln2(scale):
    # ln 2 = 2 atanh(1/3)
    return _atanh_ratio(1, 3, scale).scale_int(2)


def log_of(n, base, bits):
    """
    Enclosure of ln n (base "e") or log2 n (base 2).

    n is split as 2^k * m with m in [1, 2); ln m = 2 atanh((m-1)/(m+1)) with a
    ratio of at most 1/3, and ln 2 = 2 atanh(1/3).

    Args:
        n (int): argument, at least 2
        base: "e" or 2
        bits (int): requested precision

    Returns:
        FixedReal: enclosure of width at most 2^-bits
    """
    if n < 2:
        raise InvalidParameter(f"log_of needs n >= 2, got {n}")
    if base not in ("e", 2, "2"):
        raise InvalidParameter(f"Unsupported logarithm base {base!r}")
    k = n.bit_length() - 1
    power = 1 << k
    if base in (2, "2") and n == power:
        return FixedReal.exact(k, bits)
    guard = 16 + bits.bit_length() + k.bit_length()
    while True:
        scale = bits + guard
        ln2 = _ln2(scale)
        if n == power:
            ln_m = FixedReal.exact(0, scale)
        else:
            ln_m = _atanh_ratio(n - power, n + power, scale).scale_int(2)
        if base == "e":
            result = ln2.scale_int(k) + ln_m
        else:
            result = ln_m.divide(ln2) + k
        if result.hi - result.lo <= 1 << guard:
            return result
        guard += 16


def sqrt_int(n, bits):
    """Enclosure of sqrt(n) at scale bits (exact for perfect squares)."""
    if n < 0:
        raise InvalidParameter("sqrt_int needs n >= 0")
    s = isqrt(n << (2 * bits))
    if s * s == n << (2 * bits):
        return FixedReal(s, s, bits)
    return FixedReal(s, s + 1, bits)


def floor_scaled(x, shift):
    """
    Floor of v * 2^shift, valid for every v in the enclosure.

    Args:
        x (FixedReal): the enclosure
        shift (int): binary shift applied before flooring (may be negative)

    Returns:
        int: the common floor

    Raises:
        NeedsMorePrecision: when the endpoints floor to different integers
    """
    d = shift - x.scale_bits
    if d >= 0:
        lo, hi = x.lo << d, x.hi << d
    else:
        lo, hi = x.lo >> -d, x.hi >> -d
    if lo != hi:
        raise NeedsMorePrecision(f"Enclosure straddles an integer after shift {shift}")
    return lo


def compare_to_fraction(x, num, den=1):
    """
    Sign of v - num/den for every v in the enclosure.

    Returns:
        int: -1 or 1

    Raises:
        NeedsMorePrecision: when num/den lies inside the enclosure
    """
    target_lo = x.lo * den
    target_hi = x.hi * den
    scaled = num << x.scale_bits
    if target_hi < scaled:
        return -1
    if target_lo > scaled:
        return 1
    raise NeedsMorePrecision(f"Enclosure contains {num}/{den}")


def _escalate(make, decide, what, start_bits, cap):
    cap = cap if cap is not None else get_precision_cap()
    bits = min(start_bits if start_bits is not None else get_start_bits(), cap)
    while True:
        try:
            return decide(make(bits))
        except NeedsMorePrecision:
            if bits >= cap:
                raise PrecisionCapExceeded(cap, what)
            logger.debug("Escalating %s from %d bits", what, bits)
            bits = min(2 * bits, cap)


def certified_floor(make, shift=0, start_bits=None, cap=None, what="floor"):
    """
    Floor of v * 2^shift, escalating precision until it is determined.

    Args:
        make (callable): bits -> FixedReal of width at most 2^-bits
        shift (int): binary shift applied before flooring
        start_bits (int): first precision tried (default from config)
        cap (int): precision cap (default from config)
        what (str): label used in logs and errors

    Returns:
        int: the certified floor
    """
    return _escalate(make, lambda x: floor_scaled(x, shift), what, start_bits, cap)


def certified_compare(make, num, den=1, start_bits=None, cap=None, what="comparison"):
    """Sign of v - num/den, escalating precision until it is determined."""
    return _escalate(make, lambda x: compare_to_fraction(x, num, den), what, start_bits, cap)
