"""
The infinite Sidon construction.

Primes p = 1 (mod 4) are split into classes P_K by the size of p^beta,
beta = 1 + sqrt(2). Each prime contributes the truncation
m_p = floor(2^(K^2) alpha phi_p), cut into blocks Delta_1..Delta_K of widths
1, 3, 5, ..., 2K - 1 bits, which are spread out with three zero bits between
consecutive blocks and topped with the leading term t_p = 2^(K^2 + 3K + 2).
Sums of two elements can then only collide blockwise; the few collisions that
do happen are found exactly and their largest element is removed.
"""

import logging
import math
import multiprocessing as mp
from bisect import bisect_left, bisect_right
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Optional, Tuple

from models.verifier import check_sidon
from utils.config import DEFAULT_K_MAX, K_MIN, get_precision_cap, get_start_bits, get_workers
from utils.errors import InvalidParameter, SidonError
from utils.gaussian import phi_of
from utils.precision import (
    DyadicRational,
    FixedReal,
    certified_compare,
    certified_floor,
    log_of,
    sqrt_int,
)
from utils.primes import is_prime, primes_1mod4_upto

logger = logging.getLogger(__name__)

BETA_FLOAT = 1 + math.sqrt(2)
SLOPE_TARGET = math.sqrt(2) - 1

# Prefilter threshold is 4 * 2^-(L^2); angles are compared at L^2 + this many bits
PREFILTER_GUARD_BITS = 24


@lru_cache(maxsize=256)
def beta_enclosure(bits):
    """
    Enclosure of beta = 1 + sqrt(2), the positive root of beta^2 - 2 beta - 1.

    Args:
        bits (int): requested precision

    Returns:
        FixedReal: enclosure of width at most 2^-bits
    """
    return sqrt_int(2, bits) + 1


@dataclass(frozen=True)
class ConstructionParams:
    """
    Parameters of one run of the infinite construction.

    Args:
        alpha (DyadicRational): the multiplier, in [1, 2)
        beta (FixedReal): reporting enclosure of 1 + sqrt(2)
        k_min (int): smallest class built, at least 3
        k_max (int): largest class built
        precision_cap (int): cap for escalations, None to use the configured one
    """

    alpha: DyadicRational
    beta: FixedReal = field(default_factory=lambda: beta_enclosure(128))
    k_min: int = K_MIN
    k_max: int = DEFAULT_K_MAX
    precision_cap: Optional[int] = None

    def __post_init__(self):
        self.alpha.validate_alpha()
        if self.k_min < K_MIN:
            raise InvalidParameter(f"K must exceed 2, got k_min={self.k_min}")
        if self.k_max <= 2:
            raise InvalidParameter(f"K must exceed 2, got k_max={self.k_max}")

    @classmethod
    def default(cls, alpha_num=1, alpha_bits=0, k_max=DEFAULT_K_MAX, precision_cap=None):
        return cls(
            alpha=DyadicRational(alpha_num, alpha_bits),
            k_max=k_max,
            precision_cap=precision_cap,
        )

    @property
    def cap(self):
        return self.precision_cap if self.precision_cap is not None else get_precision_cap()

    def with_alpha(self, alpha):
        return replace(self, alpha=alpha)

    def describe(self):
        return {
            "alpha_num": self.alpha.numerator,
            "alpha_bits": self.alpha.denominator_log2,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "precision_cap": self.cap,
            "beta": self.beta.to_decimal(30),
        }


@dataclass(frozen=True)
class ElementRecord:
    """
    One element a_p of the construction.

    Args:
        p (int): the prime
        K (int): its class
        m (int): truncation m_p, below 2^(K^2)
        blocks (tuple): Delta_1..Delta_K
        a (int): the assembled element
        t (int): leading term 2^(K^2 + 3K + 2)
    """

    p: int
    K: int
    m: int
    blocks: Tuple[int, ...]
    a: int
    t: int


@dataclass(frozen=True)
class BadTuple:
    """Primes with a_p + a_q = a_r + a_s and a_p > a_r >= a_s > a_q; p, r in P_K and q, s in P_L."""

    p: int
    q: int
    r: int
    s: int
    K: int
    L: int

    def primes(self):
        return (self.p, self.q, self.r, self.s)


@dataclass(frozen=True)
class SidonSet:
    """
    Output of pruning.

    Args:
        elements (tuple): surviving records, ascending by a
        removed (tuple): records dropped as tuple maxima or duplicates
        bad_tuple_count (int): number of bad tuples the pruning resolved
        duplicate_count (int): number of records dropped for repeating an a-value
        verified (bool): whether check_sidon was run on the result
    """

    elements: Tuple[ElementRecord, ...]
    removed: Tuple[ElementRecord, ...] = ()
    bad_tuple_count: int = 0
    duplicate_count: int = 0
    verified: bool = False

    @property
    def values(self):
        return tuple(e.a for e in self.elements)

    def __len__(self):
        return len(self.elements)


def _beta_log2(n, extra=8):
    def make(bits):
        return beta_enclosure(bits + extra) * log_of(n, 2, bits + extra)

    return make


@lru_cache(maxsize=1 << 14)
def _beta_log2_floor(p, cap):
    return certified_floor(_beta_log2(p), cap=cap, what=f"beta*log2({p})")


def _beta_log2_sign(n, target, cap):
    if n == 1:
        return -1 if target > 0 else 0
    return certified_compare(_beta_log2(n), target, cap=cap, what=f"beta*log2({n}) vs {target}")


def k_index(p, params):
    """
    Class index K_p: the unique K > 2 with (K-2)^2 < beta log2 p < (K-1)^2.

    beta log2 p is transcendental, so its floor f is always decidable and
    K = isqrt(f) + 2.

    Args:
        p (int): prime, p = 1 (mod 4)
        params (ConstructionParams): supplies the precision cap

    Returns:
        int: K_p
    """
    if p < 5 or p % 4 != 1 or not is_prime(p):
        raise InvalidParameter(f"{p} is not a prime congruent to 1 mod 4")
    return isqrt(_beta_log2_floor(p, params.cap)) + 2


@lru_cache(maxsize=256)
def _class_upper_bound(K, cap):
    target = (K - 1) ** 2
    n = max(1, int(2.0 ** (target / BETA_FLOAT)))
    while _beta_log2_sign(n + 1, target, cap) < 0:
        n += 1
    while n > 1 and _beta_log2_sign(n, target, cap) > 0:
        n -= 1
    return n


def class_upper_bound(K, params):
    """
    Largest integer N with beta log2 N < (K-1)^2, i.e. N < 2^((K-1)^2 / beta).

    Args:
        K (int): class index, at least 2
        params (ConstructionParams): supplies the precision cap

    Returns:
        int: the bound; every prime of class at most K lies at or below it
    """
    if K < 2:
        raise InvalidParameter(f"class_upper_bound needs K >= 2, got {K}")
    return _class_upper_bound(K, params.cap)


def class_members(K, params):
    """The primes of class K, ascending."""
    if K < K_MIN:
        raise InvalidParameter(f"K must exceed 2, got {K}")
    lo = class_upper_bound(K - 1, params)
    table = primes_1mod4_upto(class_upper_bound(K, params))
    members = tuple(p for p in table if p > lo)
    return replace(table, primes=members)


@lru_cache(maxsize=1 << 16)
def _m_value(p, K, numerator, denominator_log2, cap):
    extra = numerator.bit_length() + 2

    def make(bits):
        return phi_of(p, max(bits + extra, 16)).enclosure.scale_int(numerator)

    start = max(get_start_bits(), K * K + 16)
    return certified_floor(
        make,
        shift=K * K - denominator_log2,
        start_bits=min(start, cap),
        cap=cap,
        what=f"m_{p}",
    )


def m_value(p, params):
    """
    Truncation m_p = floor(2^(K^2) alpha phi_p).

    Args:
        p (int): prime, p = 1 (mod 4)
        params (ConstructionParams): alpha and the precision cap

    Returns:
        int: m_p, with 0 <= m_p < 2^(K^2)
    """
    K = k_index(p, params)
    alpha = params.alpha
    m = _m_value(p, K, alpha.numerator, alpha.denominator_log2, params.cap)
    if not 0 <= m < 1 << (K * K):
        raise SidonError(f"m_{p} = {m} is outside [0, 2^{K * K})")
    return m


def blocks_of(m, K):
    """
    Cut the K^2-digit binary expansion of m into blocks of 1, 3, ..., 2K - 1 digits.

    Args:
        m (int): 0 <= m < 2^(K^2)
        K (int): class index

    Returns:
        tuple: Delta_1..Delta_K, most significant block first
    """
    if K < 1 or not 0 <= m < 1 << (K * K):
        raise InvalidParameter(f"m={m} does not fit in {K * K} binary digits")
    return tuple((m >> (K * K - i * i)) & ((1 << (2 * i - 1)) - 1) for i in range(1, K + 1))


def m_from_blocks(blocks):
    """Inverse of blocks_of."""
    K = len(blocks)
    return sum(d << (K * K - i * i) for i, d in enumerate(blocks, start=1))


def leading_term(K):
    return 1 << (K * K + 3 * K + 2)


def assemble(blocks, K):
    """
    Spread the blocks out: a = sum Delta_i 2^((i-1)^2 + 3i) + 2^(K^2 + 3K + 2).

    Args:
        blocks (sequence): Delta_1..Delta_K, Delta_i < 2^(2i-1)
        K (int): class index

    Returns:
        tuple: (a, t) with t = 2^(K^2 + 3K + 2)
    """
    if len(blocks) != K:
        raise InvalidParameter(f"Expected {K} blocks, got {len(blocks)}")
    a = 0
    for i, d in enumerate(blocks, start=1):
        if not 0 <= d < 1 << (2 * i - 1):
            raise InvalidParameter(f"Block {i} = {d} exceeds {2 * i - 1} bits")
        a += d << ((i - 1) ** 2 + 3 * i)
    t = leading_term(K)
    return a + t, t


def element(p, params):
    """
    Build the record for one prime.

    Args:
        p (int): prime, p = 1 (mod 4)
        params (ConstructionParams): construction parameters

    Returns:
        ElementRecord: K, m, blocks, a and t of p
    """
    K = k_index(p, params)
    m = m_value(p, params)
    blocks = blocks_of(m, K)
    a, t = assemble(blocks, K)
    return ElementRecord(p=p, K=K, m=m, blocks=blocks, a=a, t=t)


def _element_task(job):
    p, params = job
    return element(p, params)


def generate(params, workers=None):
    """
    Records for every prime of class k_min..k_max, ordered by p.

    Args:
        params (ConstructionParams): construction parameters
        workers (int): worker processes, default from config; 1 runs in-process

    Returns:
        list: ElementRecord per prime
    """
    workers = workers if workers is not None else get_workers()
    lo = class_upper_bound(params.k_min - 1, params)
    hi = class_upper_bound(params.k_max, params)
    primes = [p for p in primes_1mod4_upto(hi) if p > lo]
    jobs = [(p, params) for p in primes]
    if workers > 1 and len(jobs) > 1:
        with mp.Pool(processes=workers) as pool:
            records = pool.map(_element_task, jobs)
    else:
        records = [_element_task(job) for job in jobs]
    logger.info(
        "Generated %d elements for alpha=%s, K in [%d, %d]",
        len(records), params.alpha, params.k_min, params.k_max,
    )
    return records


def split_duplicates(records):
    """
    Separate records whose a-value repeats an earlier (smaller p) record.

    Returns:
        tuple: (unique records, duplicate records), both in input order
    """
    seen = {}
    unique, duplicates = [], []
    for rec in sorted(records, key=lambda e: e.p):
        if rec.a in seen:
            logger.warning("a-value of p=%d duplicates p=%d; dropping it", rec.p, seen[rec.a])
            duplicates.append(rec)
        else:
            seen[rec.a] = rec.p
            unique.append(rec)
    return unique, duplicates


def _tuple_key(bt):
    return (bt.K, bt.L, bt.p, bt.q, bt.r, bt.s)


def _by_class(records):
    classes = defaultdict(list)
    for rec in records:
        classes[rec.K].append(rec)
    for members in classes.values():
        members.sort(key=lambda e: e.a)
    return classes


def _ordered_pairs(members):
    # (larger, smaller) by a-value
    return [(x, y) for j, x in enumerate(members) for y in members[:j]]


def _angle_box(p, bits):
    enc = phi_of(p, bits).enclosure.rescale(bits + 8)
    return enc.lo, enc.hi


class _AngleDifferences:
    """Sorted enclosures of phi_x - phi_y at a common scale, searchable by window."""

    def __init__(self, pairs, bits):
        self.scale = bits + 8
        boxes = {}
        entries = []
        for x, y in pairs:
            for rec in (x, y):
                if rec.p not in boxes:
                    boxes[rec.p] = _angle_box(rec.p, bits)
            xl, xh = boxes[x.p]
            yl, yh = boxes[y.p]
            lo, hi = xl - yh, xh - yl
            entries.append((lo + hi, hi - lo, x, y))
        entries.sort(key=lambda e: e[0])
        self.doubled_mid = [e[0] for e in entries]
        self.entries = entries
        self.max_width = max((e[1] for e in entries), default=0)
        self.boxes = boxes

    def window(self, doubled_mid, slack):
        lo = bisect_left(self.doubled_mid, doubled_mid - slack)
        hi = bisect_right(self.doubled_mid, doubled_mid + slack)
        return self.entries[lo:hi]


def _prefiltered_matches(big_pairs, small_pairs, L):
    """Yield ((p, r), (s, q)) whose angle combination is not certifiably too far apart."""
    bits = max(L * L + PREFILTER_GUARD_BITS, 16)
    left = _AngleDifferences(big_pairs, bits)
    right = _AngleDifferences(small_pairs, bits)
    threshold = 4 << (left.scale - L * L)
    for d_mid, d_width, p, r in left.entries:
        # doubled units: |2c1 - 2c2| < 2T + w1 + w2 is necessary for overlap
        slack = 2 * threshold + d_width + right.max_width
        for e_mid, e_width, s, q in right.window(d_mid, slack):
            lo = (d_mid - d_width) // 2 - (e_mid + e_width) // 2
            hi = (d_mid + d_width) // 2 - (e_mid - e_width) // 2
            if lo >= threshold or hi <= -threshold:
                continue
            yield (p, r), (s, q)


def _hashed_matches(big_pairs, small_pairs):
    by_difference = defaultdict(list)
    for s, q in small_pairs:
        by_difference[s.a - q.a].append((s, q))
    for p, r in big_pairs:
        for s, q in by_difference.get(p.a - r.a, ()):
            yield (p, r), (s, q)


def find_bad_tuples(elements, prefilter=True):
    """
    Every bad tuple among the elements, searched class pair by class pair.

    For classes K >= L the search pairs (p, r) from P_K against (s, q) from
    P_L with a_p - a_r = a_s - a_q. With the prefilter on, candidates are
    first narrowed to those whose angles satisfy
    |phi_p + phi_q - phi_r - phi_s| < 4 * 2^-(L^2); only tuples that
    certifiably fail this are skipped, every survivor is checked exactly.

    Args:
        elements (list): ElementRecords, duplicate a-values are ignored
        prefilter (bool): narrow candidates by the angle condition

    Returns:
        list: BadTuple, sorted by (K, L, p, q, r, s)
    """
    unique, _ = split_duplicates(elements)
    classes = _by_class(unique)
    pair_cache = {K: _ordered_pairs(members) for K, members in classes.items()}
    found = set()
    for K in sorted(classes):
        for L in sorted(c for c in classes if c <= K):
            # s ranges over all of P_L, so s = r is covered when K = L
            big_pairs, small_pairs = pair_cache[K], pair_cache[L]
            if not big_pairs or not small_pairs:
                continue
            if prefilter:
                matches = _prefiltered_matches(big_pairs, small_pairs, L)
            else:
                matches = _hashed_matches(big_pairs, small_pairs)
            for (p, r), (s, q) in matches:
                if p.a + q.a != r.a + s.a:
                    continue
                if not p.a > r.a >= s.a > q.a:
                    continue
                found.add(BadTuple(p=p.p, q=q.p, r=r.p, s=s.p, K=K, L=L))
    tuples = sorted(found, key=_tuple_key)
    logger.info("Found %d bad tuples among %d elements", len(tuples), len(unique))
    return tuples


def brute_force_bad_tuples(elements):
    """
    Oracle search: hash every pair sum a_x + a_y (x <= y) and read off collisions.

    Args:
        elements (list): ElementRecords, duplicate a-values are ignored

    Returns:
        list: BadTuple, sorted like find_bad_tuples
    """
    unique, _ = split_duplicates(elements)
    ordered = sorted(unique, key=lambda e: e.a)
    sums = defaultdict(list)
    for j, y in enumerate(ordered):
        for x in ordered[: j + 1]:
            sums[x.a + y.a].append((y, x))
    found = set()
    for pairs in sums.values():
        for i, first in enumerate(pairs):
            for second in pairs[i + 1:]:
                (p, q), (r, s) = sorted((first, second), key=lambda pr: pr[0].a, reverse=True)
                found.add(BadTuple(p=p.p, q=q.p, r=r.p, s=s.p, K=p.K, L=q.K))
    return sorted(found, key=_tuple_key)


def aligned_m_identity(bad_tuple, records_by_p):
    """
    m_p + 2^(K^2 - L^2) m_q = m_r + 2^(K^2 - L^2) m_s, with p, r of class K and q, s of class L.

    Args:
        bad_tuple (BadTuple): the tuple
        records_by_p (dict): prime -> ElementRecord

    Returns:
        bool: True when classes and truncations line up as a bad tuple requires
    """
    p, q, r, s = (records_by_p[x] for x in bad_tuple.primes())
    if p.K != r.K or q.K != s.K:
        return False
    shift = p.K * p.K - q.K * q.K
    return p.m + (q.m << shift) == r.m + (s.m << shift)


def prune(elements, bad_tuples, verify=True):
    """
    Remove the largest element of every bad tuple and every duplicated a-value.

    Args:
        elements (list): ElementRecords from generate
        bad_tuples (list): complete bad-tuple list for these elements
        verify (bool): run check_sidon on the result

    Returns:
        SidonSet: the surviving elements

    Raises:
        SidonError: when verification finds a collision in the pruned set
    """
    unique, duplicates = split_duplicates(elements)
    doomed = {bt.p for bt in bad_tuples}
    kept = tuple(sorted((e for e in unique if e.p not in doomed), key=lambda e: e.a))
    dropped = [e for e in unique if e.p in doomed]
    for rec in dropped:
        logger.info("Pruning a_%d (class %d)", rec.p, rec.K)
    removed = tuple(sorted(dropped + duplicates, key=lambda e: e.p))
    result = SidonSet(
        elements=kept,
        removed=removed,
        bad_tuple_count=len(bad_tuples),
        duplicate_count=len(duplicates),
        verified=verify,
    )
    if verify:
        report = check_sidon(result.values)
        if not report.ok:
            raise SidonError(f"Pruned set is not Sidon: {report.describe()}")
    return result


def build_sidon_set(params, prune_bad=True, verify=True, prefilter=True, workers=None):
    """
    generate, find_bad_tuples and prune in one call.

    Returns:
        tuple: (SidonSet, list of BadTuple, list of ElementRecord)
    """
    records = generate(params, workers=workers)
    bad = find_bad_tuples(records, prefilter=prefilter)
    if prune_bad:
        result = prune(records, bad, verify=verify)
    else:
        unique, duplicates = split_duplicates(records)
        result = SidonSet(
            elements=tuple(sorted(unique + duplicates, key=lambda e: e.a)),
            bad_tuple_count=len(bad),
            duplicate_count=len(duplicates),
        )
    return result, bad, records


def counting(sidon_set, x):
    """
    S(x): number of elements at most x.

    Args:
        sidon_set: a SidonSet or an iterable of integers
        x (int): the bound

    Returns:
        int: the count
    """
    values = getattr(sidon_set, "values", None)
    values = list(values) if values is not None else sorted(sidon_set)
    return bisect_right(values, x)


def counting_slope(sidon_set, K):
    """
    log2 S(x) / log2 x at x = 2^((K+2)^2), which counts exactly the classes up to K.

    Returns:
        tuple: (S(x), slope); slope is 0.0 when S(x) <= 1
    """
    exponent = (K + 2) ** 2
    count = counting(sidon_set, 1 << exponent)
    slope = math.log2(count) / exponent if count > 1 else 0.0
    return count, slope


def slope_report(sidon_set, ks):
    """Counting slopes for each K next to the asymptotic exponent sqrt(2) - 1."""
    rows = []
    for K in ks:
        count, slope = counting_slope(sidon_set, K)
        rows.append({"K": K, "x_log2": (K + 2) ** 2, "S": count, "slope": slope, "target": SLOPE_TARGET})
    return rows


def size_exponent_bounds(K, params):
    """
    Bounds on log2 a_p / log2 p for p in P_K.

    From 2^(K^2+3K+2) < a_p < 2^(K^2+3K+3) and
    2^((K-2)^2/beta) < p < 2^((K-1)^2/beta).

    Args:
        K (int): class index, at least 3
        params (ConstructionParams): supplies beta

    Returns:
        tuple: (lower, upper) as Fractions
    """
    if K < K_MIN:
        raise InvalidParameter(f"K must exceed 2, got {K}")
    beta = params.beta
    lower = beta.lower * Fraction(K * K + 3 * K + 2, (K - 1) ** 2)
    upper = beta.upper * Fraction(K * K + 3 * K + 3, (K - 2) ** 2)
    return lower, upper
