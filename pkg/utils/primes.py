import logging
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from math import isqrt
from typing import Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Deterministic Miller-Rabin witnesses, correct for every n < 3.3 * 10^24
_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

SEGMENT_ODD_COUNT = 1 << 20


@dataclass(frozen=True)
class PrimeTable:
    """
    Ascending primes up to a bound, optionally restricted to 1 mod 4.

    Args:
        bound (int): every entry is <= bound
        primes (tuple): the primes, ascending and duplicate-free
        class_filter (str): None or "1 mod 4"
    """

    bound: int
    primes: Tuple[int, ...]
    class_filter: Optional[str] = None

    def __len__(self):
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    def __contains__(self, n):
        i = bisect_right(self.primes, n)
        return i > 0 and self.primes[i - 1] == n

    def count_upto(self, x):
        return bisect_right(self.primes, x)


def is_prime(n):
    """
    Deterministic Miller-Rabin primality test.

    Args:
        n (int): non-negative integer

    Returns:
        bool: True if n is prime (exact for all n below 2^64 and well beyond)
    """
    if n < 2:
        return False
    for p in _WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _simple_sieve(limit):
    if limit < 2:
        return np.array([], dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if flags[p]:
            flags[p * p::p] = False
    return np.flatnonzero(flags).astype(np.int64)


@lru_cache(maxsize=16)
def _sieve(limit):
    """Odd-only segmented sieve; returns all primes <= limit as a tuple."""
    if limit < 2:
        return ()
    base = [int(p) for p in _simple_sieve(isqrt(limit)) if p != 2]
    found = [2]
    low = 3
    span = 2 * SEGMENT_ODD_COUNT
    while low <= limit:
        high = min(low + span, limit + 1)
        mask = np.ones((high - low + 1) // 2, dtype=bool)
        for p in base:
            if p * p >= high:
                break
            start = max(p * p, ((low + p - 1) // p) * p)
            if start % 2 == 0:
                start += p
            if start < high:
                mask[(start - low) // 2::p] = False
        found.extend((low + 2 * np.flatnonzero(mask)).tolist())
        low = high
    logger.debug("Sieved %d primes up to %d", len(found), limit)
    return tuple(found)


def primes_upto(x):
    """All primes <= x, ascending."""
    return PrimeTable(bound=x, primes=_sieve(max(x, 0)))


def primes_1mod4_upto(x):
    """
    The primes p <= x with p = 1 (mod 4).

    Args:
        x (int): bound, x >= 0

    Returns:
        PrimeTable: ascending table, empty for x < 5
    """
    primes = tuple(p for p in _sieve(max(x, 0)) if p % 4 == 1)
    return PrimeTable(bound=x, primes=primes, class_filter="1 mod 4")


def pi1(x):
    """Exact count of primes p <= x with p = 1 (mod 4)."""
    return len(primes_1mod4_upto(x))


def pi1_between(lo, hi):
    """Exact count of primes p = 1 (mod 4) with lo < p <= hi."""
    if hi <= lo:
        return 0
    return pi1(hi) - pi1(lo)


def pi1_estimate(x):
    """
    Analytic estimate x / (2 ln x) of pi1(x), for reports only.

    Args:
        x (float): bound, larger than 1

    Returns:
        float: the estimate
    """
    if x <= 2:
        return 0.0
    return x / (2 * math.log(x))
