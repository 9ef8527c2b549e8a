import logging
import math
from dataclasses import dataclass, field
from math import isqrt
from typing import Optional, Tuple

from utils.errors import InvalidParameter, RangeEmpty
from utils.gaussian import phi_of
from utils.precision import certified_compare, certified_floor, log_of
from utils.primes import primes_1mod4_upto, primes_upto

logger = logging.getLogger(__name__)

METHODS = ("greedy", "log", "gauss")


@dataclass(frozen=True)
class FiniteSet:
    """
    A finite Sidon set together with how it was built.

    Args:
        method (str): "greedy", "log" or "gauss"
        n (int): size parameter (term count for greedy, range for log/gauss)
        elements (tuple): ascending integers
        provenance (tuple): source prime of each element, None for greedy
    """

    method: str
    n: int
    elements: Tuple[int, ...]
    provenance: Optional[Tuple[int, ...]] = field(default=None)

    def __len__(self):
        return len(self.elements)

    def params(self):
        return {"method": self.method, "n": self.n}


def greedy_sidon(count):
    """
    The greedy Sidon sequence 1, 2, 4, 8, 13, ... (Mian-Chowla).

    Each new term is the least integer above the previous one whose
    differences to all earlier terms are new.

    Args:
        count (int): number of terms, at least 1

    Returns:
        FiniteSet: the first `count` terms
    """
    if count < 1:
        raise InvalidParameter(f"count must be at least 1, got {count}")
    terms = [1]
    differences = set()
    while len(terms) < count:
        candidate = terms[-1] + 1
        while True:
            fresh = [candidate - t for t in terms]
            if not any(d in differences for d in fresh):
                break
            candidate += 1
        differences.update(fresh)
        terms.append(candidate)
    return FiniteSet(method="greedy", n=count, elements=tuple(terms))


def _log_range_primes(n):
    # p qualifies iff 2 p^2 ln n <= n; ln n is irrational, so equality never occurs
    def ln_n(bits):
        return log_of(n, "e", bits)

    kept = []
    for p in primes_upto(isqrt(n)):
        if certified_compare(ln_n, n, 2 * p * p, what=f"range bound at p={p}") < 0:
            kept.append(p)
        else:
            break
    return kept


def _exact_log_exponent(n, p):
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k if n == 1 else None


def log_construction(n):
    """
    The logarithmic Sidon set x_p = floor(2n ln p / ln n) over primes p <= sqrt(n / (2 ln n)).

    Args:
        n (int): range parameter

    Returns:
        FiniteSet: one element per prime in range, ascending

    Raises:
        RangeEmpty: when no prime fits the range bound
    """
    if n < 3:
        raise RangeEmpty(f"log construction needs n >= 3, got {n}")
    primes = _log_range_primes(n)
    if not primes:
        raise RangeEmpty(f"No prime p satisfies 2p^2 ln n <= n for n={n}")

    guard = (2 * n).bit_length() + 4
    pairs = []
    for p in primes:
        k = _exact_log_exponent(n, p)
        if k is not None:
            # ln p / ln n = 1/k exactly
            x = (2 * n) // k
        else:
            def make(bits, p=p):
                ratio = log_of(p, "e", bits + guard).divide(log_of(n, "e", bits + guard))
                return ratio.scale_int(2 * n)

            x = certified_floor(make, what=f"x_{p} for n={n}")
        pairs.append((x, p))
    pairs.sort()
    logger.info("Log construction n=%d: %d elements", n, len(pairs))
    return FiniteSet(
        method="log",
        n=n,
        elements=tuple(x for x, _ in pairs),
        provenance=tuple(p for _, p in pairs),
    )


def gauss_construction(n):
    """
    The angle construction c_p = floor(n * phi_p) over primes p = 1 (mod 4), p <= sqrt(n)/4.

    Args:
        n (int): range parameter, at least 400

    Returns:
        FiniteSet: elements in [0, n], ascending, provenance holds the primes

    Raises:
        RangeEmpty: when n < 400
    """
    bound = isqrt(max(n, 0)) // 4
    table = primes_1mod4_upto(bound)
    if not len(table):
        raise RangeEmpty(f"gauss construction needs n >= 400, got {n}")

    guard = n.bit_length() + 2
    pairs = []
    for p in table:
        def make(bits, p=p):
            return phi_of(p, max(bits + guard, 16)).enclosure.scale_int(n)

        pairs.append((certified_floor(make, what=f"c_{p} for n={n}"), p))
    pairs.sort()
    logger.info("Gauss construction n=%d: %d elements from primes <= %d", n, len(pairs), bound)
    return FiniteSet(
        method="gauss",
        n=n,
        elements=tuple(c for c, _ in pairs),
        provenance=tuple(p for _, p in pairs),
    )


def build(method, n):
    """Dispatch to one of the three constructions by name."""
    if method == "greedy":
        return greedy_sidon(n)
    if method == "log":
        return log_construction(n)
    if method == "gauss":
        return gauss_construction(n)
    raise InvalidParameter(f"Unknown method {method!r}; expected one of {', '.join(METHODS)}")


def theoretical_size(method, n):
    """
    Asymptotic size of each construction on the range [1, n], for reports.

    Args:
        method (str): "greedy", "log" or "gauss"
        n (int): range, larger than e

    Returns:
        float: n^(1/3), sqrt(2n)/ln^(3/2) n or sqrt(n)/(4 ln n)
    """
    if n < 3:
        return 0.0
    ln_n = math.log(n)
    if method == "greedy":
        return n ** (1 / 3)
    if method == "log":
        return math.sqrt(2 * n) / ln_n ** 1.5
    if method == "gauss":
        return math.sqrt(n) / (4 * ln_n)
    raise InvalidParameter(f"Unknown method {method!r}")
