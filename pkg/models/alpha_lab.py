"""
Experiments over grids of the multiplier alpha.

Averages over a uniform dyadic grid of [1, 2) stand in for integrals over
alpha: bad-tuple counts per class pair, the frequency of the congruence
m_p = m_r (mod 2^(K^2 - L^2)), and the lattice-sector count behind the
bad-tuple bound.
"""

import logging
import math
import multiprocessing as mp
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import permutations
from typing import Optional

import numpy as np
import pandas as pd

from models.infinite_construction import (
    BETA_FLOAT,
    beta_enclosure,
    class_members,
    find_bad_tuples,
    generate,
    k_index,
    m_value,
)
from utils.config import NO_VERIFY_K_MAX, TREND_CEILING, get_workers
from utils.errors import InvalidParameter, PrecisionCapExceeded, ResolutionTooCoarse
from utils.gaussian import conjugate, gaussian_multiply, phi_of, two_squares
from utils.precision import DyadicRational, FixedReal, certified_compare, pi_const

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["alpha_num", "alpha_bits", "K", "L", "T_KL", "A_KL", "bound_value", "ratio"]

# int64 headroom: A < 2^(b+1) times phi < 2^-2 at scale 2^(63-b) stays below 2^62
_INT64_BITS = 63
CHUNK = 1 << 20

# Float angle comparisons closer than this fall back to certified enclosures
_ANGLE_MARGIN = 1e-12


@dataclass(frozen=True)
class AlphaGrid:
    """
    The dyadic points A / 2^b of [1, 2), every `stride`-th one.

    Args:
        resolution_log2 (int): b
        stride (int): step between consecutive numerators
    """

    resolution_log2: int
    stride: int = 1

    def __post_init__(self):
        if self.resolution_log2 < 0:
            raise InvalidParameter("Grid resolution must be non-negative")
        if self.stride < 1:
            raise InvalidParameter(f"Grid stride must be positive, got {self.stride}")

    @classmethod
    def full(cls, b):
        return cls(resolution_log2=b)

    @classmethod
    def strided(cls, b, stride):
        return cls(resolution_log2=b, stride=stride)

    def numerators(self, size=None):
        """Numerators as int64 arrays of at most `size` entries (one array when size is None)."""
        b = self.resolution_log2
        start, stop = 1 << b, 2 << b
        step = (size or len(self)) * self.stride
        for lo in range(start, stop, step):
            yield np.arange(lo, min(lo + step, stop), self.stride, dtype=np.int64)

    @property
    def points(self):
        b = self.resolution_log2
        return tuple(DyadicRational(int(A), b) for A in range(1 << b, 2 << b, self.stride))

    def __len__(self):
        return -(-(1 << self.resolution_log2) // self.stride)


@dataclass(frozen=True)
class SweepRow:
    """Bad-tuple counts of one class pair (K, L) at one alpha."""

    alpha: DyadicRational
    K: int
    L: int
    T_KL: int
    A_KL: int
    necessary_ok: bool = True
    error: Optional[str] = None

    @property
    def bound_value(self):
        return bound_value(self.K, self.L)

    @property
    def ratio(self):
        return self.T_KL / self.bound_value


def bound_value(K, L):
    """2^((2/beta)((K-1)^2 + (L-1)^2) - K^2), the per-alpha average bound for T_KL."""
    return 2.0 ** ((2 / BETA_FLOAT) * ((K - 1) ** 2 + (L - 1) ** 2) - K * K)


def normalised_count(A_KL, K, L):
    """A_KL * 2^(L^2 - (2/beta)((K-1)^2 + (L-1)^2)), monitored against TREND_CEILING."""
    return A_KL * 2.0 ** (L * L - (2 / BETA_FLOAT) * ((K - 1) ** 2 + (L - 1) ** 2))


def _phi_sum(plus, minus):
    def make(bits):
        total = FixedReal.exact(0, bits)
        for p in plus:
            total = total + phi_of(p, max(bits, 16)).enclosure
        for p in minus:
            total = total - phi_of(p, max(bits, 16)).enclosure
        return total

    return make


def necessary_conditions(bad_tuple, params):
    """
    Conditions every bad tuple (p, q, r, s) of classes (K, L) must meet.

    angle: |phi_p + phi_q - phi_r - phi_s| < 4 * 2^-(L^2)
    product: p q r s > 2^(2L^2 - 10)
    size_exact: beta (L^2 - 5) < (K-1)^2 + (L-1)^2
    size_asymptotic: (K-1)^2 + (L-1)^2 > beta (L-1)^2, reported only

    Args:
        bad_tuple (BadTuple): the tuple
        params (ConstructionParams): supplies the precision cap

    Returns:
        dict: condition name -> bool
    """
    K, L = bad_tuple.K, bad_tuple.L
    p, q, r, s = bad_tuple.primes()
    make = _phi_sum((p, q), (r, s))
    den = 1 << (L * L)
    what = f"angle condition for {bad_tuple.primes()}"
    angle = (
        certified_compare(make, 4, den, cap=params.cap, what=what) < 0
        and certified_compare(make, -4, den, cap=params.cap, what=what) > 0
    )
    spread = (K - 1) ** 2 + (L - 1) ** 2

    def beta_times(k):
        return lambda bits: beta_enclosure(bits).scale_int(k)

    size_exact = L * L <= 5 or certified_compare(beta_times(L * L - 5), spread, cap=params.cap) < 0
    size_asymptotic = certified_compare(beta_times((L - 1) ** 2), spread, cap=params.cap) < 0
    return {
        "angle": angle,
        "product": p * q * r * s > 1 << (2 * L * L - 10),
        "size_exact": size_exact,
        "size_asymptotic": size_asymptotic,
    }


def _tuple_images(bt):
    left, right = (bt.p, bt.q), (bt.r, bt.s)
    for first, second in ((left, right), (right, left)):
        for x1, x2 in {first, first[::-1]}:
            for y1, y2 in {second, second[::-1]}:
                yield x1, x2, y1, y2


def count_T(bad_tuples, classes, K, L):
    """
    T_KL: ordered (p, q, r, s) with p, r in P_K, q, s in P_L, p != r, q != s and a_p + a_q = a_r + a_s.

    Args:
        bad_tuples (list): complete bad-tuple list
        classes (dict): prime -> class index
        K, L (int): the class pair

    Returns:
        int: the count
    """
    images = set()
    for bt in bad_tuples:
        for p, q, r, s in _tuple_images(bt):
            if p == r or q == s:
                continue
            if classes[p] == K and classes[r] == K and classes[q] == L and classes[s] == L:
                images.add((p, q, r, s))
    return len(images)


def _class_pairs(params):
    return [(K, L) for K in range(params.k_min, params.k_max + 1) for L in range(params.k_min, K + 1)]


def _sweep_alpha(job):
    params, alpha, prefilter = job
    run = params.with_alpha(alpha)
    try:
        records = generate(run, workers=1)
        bad = find_bad_tuples(records, prefilter=prefilter)
    except PrecisionCapExceeded as e:
        logger.warning("alpha=%s skipped: %s", alpha, e)
        return [SweepRow(alpha, K, L, 0, 0, error=str(e)) for K, L in _class_pairs(params)]
    classes = {rec.p: rec.K for rec in records}
    rows = []
    for K, L in _class_pairs(params):
        in_pair = [bt for bt in bad if bt.K == K and bt.L == L]
        necessary_ok = all(
            conditions["angle"] and conditions["product"] and conditions["size_exact"]
            for conditions in (necessary_conditions(bt, run) for bt in in_pair)
        )
        rows.append(SweepRow(
            alpha=alpha,
            K=K,
            L=L,
            T_KL=count_T(bad, classes, K, L),
            A_KL=len(in_pair),
            necessary_ok=necessary_ok,
        ))
    return rows


def sweep(params, grid, prefilter=True, workers=None):
    """
    Bad-tuple statistics at every grid point.

    Args:
        params (ConstructionParams): class range and precision cap; alpha is replaced per point
        grid (AlphaGrid): the alpha values
        prefilter (bool): passed to find_bad_tuples
        workers (int): worker processes, default from config

    Returns:
        list: SweepRow per (alpha, K, L), in grid order
    """
    if params.k_max >= NO_VERIFY_K_MAX:
        raise InvalidParameter(f"Sweeps need k_max < {NO_VERIFY_K_MAX}, got {params.k_max}")
    points = grid.points
    if not points:
        raise InvalidParameter("Empty alpha grid")
    workers = workers if workers is not None else get_workers()
    jobs = [(params, alpha, prefilter) for alpha in points]
    if workers > 1 and len(jobs) > 1:
        with mp.Pool(processes=workers) as pool:
            per_alpha = pool.map(_sweep_alpha, jobs)
    else:
        per_alpha = [_sweep_alpha(job) for job in jobs]
    rows = [row for batch in per_alpha for row in batch]
    logger.info("Swept %d alpha values, %d rows", len(points), len(rows))
    return rows


def rows_to_frame(rows):
    """Sweep rows as a DataFrame with the CSV columns plus error and necessary_ok."""
    return pd.DataFrame([
        {
            "alpha_num": row.alpha.numerator,
            "alpha_bits": row.alpha.denominator_log2,
            "K": row.K,
            "L": row.L,
            "T_KL": row.T_KL,
            "A_KL": row.A_KL,
            "bound_value": row.bound_value,
            "ratio": row.ratio,
            "necessary_ok": row.necessary_ok,
            "error": row.error,
        }
        for row in rows
    ], columns=CSV_COLUMNS + ["necessary_ok", "error"])


def summarize(rows):
    """
    Grid averages per class pair.

    Returns:
        pandas.DataFrame: K, L, points, mean_T, mean_A, max_A, bound_value, ratio,
        normalised, within_ceiling
    """
    frame = rows_to_frame(rows)
    frame = frame[frame["error"].isna()]
    summary = (
        frame.groupby(["K", "L"])
        .agg(points=("T_KL", "size"), mean_T=("T_KL", "mean"), mean_A=("A_KL", "mean"), max_A=("A_KL", "max"))
        .reset_index()
    )
    summary["bound_value"] = [bound_value(K, L) for K, L in zip(summary["K"], summary["L"])]
    summary["ratio"] = summary["mean_T"] / summary["bound_value"]
    summary["normalised"] = [
        normalised_count(A, K, L) for A, K, L in zip(summary["max_A"], summary["K"], summary["L"])
    ]
    summary["within_ceiling"] = summary["normalised"] <= TREND_CEILING
    for row in summary.itertuples():
        if not row.within_ceiling:
            logger.warning("A_KL trend for (K, L)=(%d, %d) exceeds %d: %.2f", row.K, row.L, TREND_CEILING, row.normalised)
    return summary


def convergence_report(params, grid, prefilter=True, workers=None, rows=None):
    """
    Summaries at the grid's resolution b and at b + 1, side by side.

    Args:
        rows (list): sweep rows already computed on `grid`, reused instead of sweeping again

    Returns:
        pandas.DataFrame: one row per (K, L), columns suffixed _b and _b1
    """
    if rows is None:
        rows = sweep(params, grid, prefilter=prefilter, workers=workers)
    coarse = summarize(rows)
    finer_grid = AlphaGrid(resolution_log2=grid.resolution_log2 + 1, stride=grid.stride)
    fine = summarize(sweep(params, finer_grid, prefilter=prefilter, workers=workers))
    return coarse.merge(fine, on=["K", "L"], suffixes=("_b", "_b1"))


def _phi_fixed(p, scale):
    enc = phi_of(p, scale + 8).enclosure.rescale(scale)
    return enc.lo, enc.hi


def _m_on_grid(p, K, numerators, b, params):
    """
    m_p(alpha) = floor(A phi_p 2^(K^2 - b)) for every numerator A.

    Computed in int64 from a phi enclosure at scale 2^(63-b); points where the
    two endpoints floor differently are recomputed with exact integers.
    """
    scale = _INT64_BITS - b
    shift = scale + b - K * K
    if shift < 0 or scale < 2:
        return np.array([m_value(p, params.with_alpha(DyadicRational(int(A), b))) for A in numerators], dtype=object)
    lo, hi = _phi_fixed(p, scale)
    m_lo = (numerators * np.int64(lo)) >> shift
    m_hi = (numerators * np.int64(hi)) >> shift
    ambiguous = np.flatnonzero(m_lo != m_hi)
    for i in ambiguous:
        m_lo[i] = m_value(p, params.with_alpha(DyadicRational(int(numerators[i]), b)))
    return m_lo


def congruence_measure(p, r, L, grid, params):
    """
    Fraction of grid points alpha at which m_p(alpha) = m_r(alpha) (mod 2^(K^2 - L^2)).

    Args:
        p, r (int): primes of the same class K
        L (int): the smaller class index
        grid (AlphaGrid): resolution b must be at least K^2
        params (ConstructionParams): supplies the precision cap

    Returns:
        Fraction: matching points / grid size

    Raises:
        ResolutionTooCoarse: when b < K^2
    """
    K = k_index(p, params)
    if k_index(r, params) != K:
        raise InvalidParameter(f"{p} and {r} are not in the same class")
    if L > K:
        raise InvalidParameter(f"L={L} exceeds K={K}")
    if p == r or K == L:
        return Fraction(1)
    b = grid.resolution_log2
    if b < K * K:
        raise ResolutionTooCoarse(f"Grid resolution 2^-{b} cannot resolve class {K}; need b >= {K * K}")
    mask = np.int64((1 << (K * K - L * L)) - 1)
    hits = 0
    for chunk in grid.numerators(CHUNK):
        m_p = _m_on_grid(p, K, chunk, b, params)
        m_r = _m_on_grid(r, K, chunk, b, params)
        if m_p.dtype == object:
            hits += sum(1 for x, y in zip(m_p, m_r) if (x - y) & int(mask) == 0)
        else:
            hits += int(np.count_nonzero(((m_p - m_r) & mask) == 0))
    return Fraction(hits, len(grid))


def congruence_pairs(K, L, params, limit=5, participation_grid=None):
    """
    Prime pairs (p, r) of class K for the congruence experiment.

    Pairs taking part in a bad tuple of classes (K, L) at some alpha of
    `participation_grid` are tagged "participating", the rest "arbitrary".
    Up to `limit` of each kind are returned, in ascending order.

    Returns:
        list: (p, r, tag) triples
    """
    members = list(class_members(K, params))
    pairs = [(p, r) for i, p in enumerate(members) for r in members[i + 1:]]
    participating = set()
    if participation_grid is not None:
        run = replace(params, k_max=K)
        for alpha in participation_grid.points:
            for bt in find_bad_tuples(generate(run.with_alpha(alpha), workers=1)):
                if bt.K == K and bt.L == L:
                    participating.add(tuple(sorted((bt.p, bt.r))))
    tagged = [(p, r, "participating") for p, r in pairs if (p, r) in participating][:limit]
    tagged += [(p, r, "arbitrary") for p, r in pairs if (p, r) not in participating][:limit]
    return tagged


def _in_sector(p, q, r, s, half_angle, params):
    # arg(rho_p conj(rho_r)) - arg(rho_s conj(rho_q)) = pi (phi_r - phi_p - phi_q + phi_s)
    if sorted((r, s)) == sorted((p, q)):
        return True
    if half_angle == 0:
        return False
    estimate = math.pi * (
        phi_of(r, 64).enclosure.midpoint() - phi_of(p, 64).enclosure.midpoint()
        - phi_of(q, 64).enclosure.midpoint() + phi_of(s, 64).enclosure.midpoint()
    )
    if abs(abs(estimate) - float(half_angle)) > _ANGLE_MARGIN:
        return abs(estimate) <= float(half_angle)
    difference = _phi_sum((r, s), (p, q))

    def make(bits):
        return difference(bits) * pi_const(max(bits, 8))

    num, den = half_angle.numerator, half_angle.denominator
    return (
        certified_compare(make, num, den, cap=params.cap) <= 0
        and certified_compare(make, -num, den, cap=params.cap) >= 0
    )


def sector_bound_check(K, L, params, samples=None, theta=None):
    """
    Count the points rho_p conj(rho_r), p != r in P_K, inside the sector of
    apex 0, radius R = 2^((K-1)^2 / beta) and angle theta bisected by
    rho_s conj(rho_q), for pairs q != s in P_L; each count must be at most
    theta R^2 + 1.

    Args:
        K, L (int): class indices
        params (ConstructionParams): supplies the precision cap
        samples (int): how many (q, s) pairs to test, None for all
        theta (Fraction): sector angle, default 2^-(L^2)

    Returns:
        dict: K, L, theta, R, bound, pairs_checked, max_count, ok
    """
    theta = Fraction(1, 1 << (L * L)) if theta is None else Fraction(theta)
    radius = 2.0 ** ((K - 1) ** 2 / BETA_FLOAT)
    bound = float(theta) * radius * radius + 1
    big = list(class_members(K, params))
    small = list(class_members(L, params))
    qs_pairs = list(permutations(small, 2))
    if samples is not None:
        qs_pairs = qs_pairs[:samples]
    points = {
        (p, r): gaussian_multiply(two_squares(p).rho, conjugate(two_squares(r).rho))
        for p, r in permutations(big, 2)
    }
    max_count = 0
    for q, s in qs_pairs:
        count = 0
        for (p, r), w in points.items():
            if w[0] * w[0] + w[1] * w[1] > radius * radius:
                continue
            if _in_sector(p, q, r, s, theta / 2, params):
                count += 1
        max_count = max(max_count, count)
    report = {
        "K": K,
        "L": L,
        "theta": float(theta),
        "R": radius,
        "bound": bound,
        "pairs_checked": len(qs_pairs),
        "max_count": max_count,
        "ok": max_count <= bound,
    }
    if not report["ok"]:
        logger.warning("Sector count %d exceeds theta R^2 + 1 = %.3f for K=%d, L=%d", max_count, bound, K, L)
    return report
