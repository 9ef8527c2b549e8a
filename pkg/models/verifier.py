import hashlib
import logging
from collections import Counter
from dataclasses import dataclass
from itertools import zip_longest
from typing import Optional, Tuple

logger = logging.getLogger(__name__)

# Sums at most this wide are used as dictionary keys directly
EXACT_KEY_BITS = 128


@dataclass(frozen=True)
class SidonReport:
    """
    Outcome of a Sidon check.

    Args:
        ok (bool): True when every pair sum (doubled elements included) is distinct
        witness (tuple): (x1, x2, y1, y2) with x1 + x2 = y1 + y2, or None
        pairs_checked (int): number of pair sums examined
        duplicate (bool): True when the witness comes from a repeated input value
    """

    ok: bool
    witness: Optional[Tuple[int, int, int, int]]
    pairs_checked: int
    duplicate: bool = False

    def describe(self):
        if self.ok:
            return f"Sidon set ({self.pairs_checked} pair sums distinct)"
        x1, x2, y1, y2 = self.witness
        if self.duplicate:
            return f"{x1} appears more than once: {x1}+{x2} = {y1}+{y2}"
        return f"{x1}+{x2} = {y1}+{y2}"


def _sum_key(s):
    if s.bit_length() <= EXACT_KEY_BITS:
        return s
    return hashlib.blake2b(s.to_bytes((s.bit_length() + 7) // 8, "little"), digest_size=16).digest()


def _duplicate_report(values):
    repeated = sorted(v for v, c in Counter(values).items() if c > 1)
    if not repeated:
        return None
    d = repeated[0]
    return SidonReport(ok=False, witness=(d, d, d, d), pairs_checked=0, duplicate=True)


def check_sidon(values):
    """
    Certify that all sums x + y (x <= y) of a set are distinct.

    Pair sums are keyed by a 128-bit digest once they are wider than 128
    bits; every digest hit is confirmed by exact integer comparison before a
    witness is reported.

    Args:
        values (iterable): non-negative integers

    Returns:
        SidonReport: ok, or the first colliding pair of pairs in scan order
    """
    values = list(values)
    duplicate = _duplicate_report(values)
    if duplicate is not None:
        return duplicate

    ordered = sorted(values)
    seen = {}
    pairs = 0
    for j, y in enumerate(ordered):
        for i in range(j + 1):
            x = ordered[i]
            s = x + y
            pairs += 1
            key = _sum_key(s)
            hits = seen.get(key)
            if hits is None:
                seen[key] = [(i, j)]
                continue
            for k, l in hits:
                if ordered[k] + ordered[l] == s:
                    return SidonReport(ok=False, witness=(x, y, ordered[k], ordered[l]), pairs_checked=pairs)
            logger.warning("128-bit digest collision between distinct sums (key %r)", key)
            hits.append((i, j))
    return SidonReport(ok=True, witness=None, pairs_checked=pairs)


def check_sidon_exact(values):
    """
    Oracle version of check_sidon: sort all pair sums exactly and compare neighbours.

    Args:
        values (iterable): non-negative integers

    Returns:
        SidonReport: same verdict as check_sidon, witness possibly different
    """
    values = list(values)
    duplicate = _duplicate_report(values)
    if duplicate is not None:
        return duplicate
    ordered = sorted(values)
    sums = sorted(
        (ordered[i] + ordered[j], i, j) for j in range(len(ordered)) for i in range(j + 1)
    )
    for (s1, i1, j1), (s2, i2, j2) in zip(sums, sums[1:]):
        if s1 == s2:
            return SidonReport(
                ok=False,
                witness=(ordered[i2], ordered[j2], ordered[i1], ordered[j1]),
                pairs_checked=len(sums),
            )
    return SidonReport(ok=True, witness=None, pairs_checked=len(sums))


def witness_holds(report):
    """Re-verify a reported witness by exact integer arithmetic."""
    if report.ok:
        return True
    x1, x2, y1, y2 = report.witness
    if report.duplicate:
        return x1 == x2 == y1 == y2
    return x1 + x2 == y1 + y2 and sorted((x1, x2)) != sorted((y1, y2))


def classify_tuple(e_p, e_q, e_r, e_s):
    """
    Blockwise test for a bad 4-tuple.

    Args:
        e_p, e_q, e_r, e_s (ElementRecord): the four elements

    Returns:
        bool: True iff every block sum and the leading-term sum agree on both sides
    """
    blocks = zip_longest(e_p.blocks, e_q.blocks, e_r.blocks, e_s.blocks, fillvalue=0)
    if any(bp + bq != br + bs for bp, bq, br, bs in blocks):
        return False
    return e_p.t + e_q.t == e_r.t + e_s.t
