"""
Two-squares decomposition of primes p = 1 (mod 4) and the angle phi_p.

Convention used throughout: rho_bar = a + bi with a > b > 0 and rho = a - bi,
so rho_bar / rho = e^(2 pi i phi_p) with phi_p = arctan(b/a) / pi in (0, 1/4).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt

from utils.config import get_precision_cap
from utils.errors import InvalidParameter, PrecisionCapExceeded
from utils.precision import FixedReal, arctan_ratio, certified_compare, pi_const
from utils.primes import is_prime

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianPrimeDecomposition:
    p: int
    a: int
    b: int

    def __post_init__(self):
        if self.a * self.a + self.b * self.b != self.p or not self.a > self.b > 0:
            raise InvalidParameter(f"({self.a}, {self.b}) is not a normalized decomposition of {self.p}")

    @property
    def rho(self):
        return (self.a, -self.b)

    @property
    def rho_bar(self):
        return (self.a, self.b)


@dataclass(frozen=True)
class Angle:
    """Certified enclosure of phi_p at a stated precision."""

    p: int
    enclosure: FixedReal
    bits: int


def _check_prime_1mod4(p):
    if p % 4 != 1 or not is_prime(p):
        raise InvalidParameter(f"{p} is not a prime congruent to 1 mod 4")


def sqrt_minus_one_mod_p(p):
    """
    A square root of -1 modulo p.

    Args:
        p (int): prime, p = 1 (mod 4)

    Returns:
        int: the root t with t^2 = -1 (mod p) and 0 < t < p/2
    """
    _check_prime_1mod4(p)
    c = 2
    while pow(c, (p - 1) // 2, p) != p - 1:
        c += 1
    t = pow(c, (p - 1) // 4, p)
    return min(t, p - t)


@lru_cache(maxsize=1 << 14)
def two_squares(p):
    """
    Write p = a^2 + b^2 with a > b > 0.

    Euclid's algorithm on (p, t), t^2 = -1 (mod p), stops at the first
    remainder below sqrt(p); that remainder is one of the two squares' roots.

    Args:
        p (int): prime, p = 1 (mod 4)

    Returns:
        GaussianPrimeDecomposition: the unique normalized pair
    """
    t = sqrt_minus_one_mod_p(p)
    r0, r1 = p, t
    limit = isqrt(p)
    while r1 > limit:
        r0, r1 = r1, r0 % r1
    x = r1
    y = isqrt(p - x * x)
    if x * x + y * y != p:
        raise ArithmeticError(f"Descent failed for p={p}")
    return GaussianPrimeDecomposition(p=p, a=max(x, y), b=min(x, y))


def gaussian_multiply(z, w):
    return (z[0] * w[0] - z[1] * w[1], z[0] * w[1] + z[1] * w[0])


def conjugate(z):
    return (z[0], -z[1])


def phi_of(p, bits):
    """
    Certified enclosure of phi_p = arctan(b/a) / pi.

    Args:
        p (int): prime, p = 1 (mod 4)
        bits (int): requested precision, at least 16

    Returns:
        Angle: enclosure of width at most 2^-bits
    """
    if bits < 16:
        raise InvalidParameter(f"phi_of needs at least 16 bits, got {bits}")
    cap = get_precision_cap()
    if bits > cap:
        raise PrecisionCapExceeded(cap, f"phi_{p}")
    return _phi(p, bits)


@lru_cache(maxsize=1 << 14)
def _phi(p, bits):
    dec = two_squares(p)
    work = bits + 8
    while True:
        enclosure = arctan_ratio(dec.b, dec.a, work).divide(pi_const(work))
        if enclosure.width <= Fraction(1, 1 << bits):
            return Angle(p=p, enclosure=enclosure, bits=bits)
        work += 16


def angle_sum_sign(ps, qs, start_bits=None):
    """
    Sign of sum(phi_p for p in ps) - sum(phi_q for q in qs).

    Distinct multisets always give a nonzero difference (unique factorization
    in the Gaussian integers), so escalation terminates.

    Returns:
        int: -1, 0 or 1
    """
    if sorted(ps) == sorted(qs):
        return 0

    def make(bits):
        total = FixedReal.exact(0, bits)
        for p in ps:
            total = total + phi_of(p, max(bits, 16)).enclosure
        for q in qs:
            total = total - phi_of(q, max(bits, 16)).enclosure
        return total

    return certified_compare(make, 0, start_bits=start_bits, what=f"angle sums {ps} vs {qs}")
