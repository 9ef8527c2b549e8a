import math
import random
from fractions import Fraction

import mpmath
import pytest

from models.infinite_construction import (
    BadTuple,
    ConstructionParams,
    ElementRecord,
    aligned_m_identity,
    assemble,
    beta_enclosure,
    blocks_of,
    brute_force_bad_tuples,
    build_sidon_set,
    class_members,
    class_upper_bound,
    counting,
    counting_slope,
    element,
    find_bad_tuples,
    generate,
    k_index,
    m_from_blocks,
    m_value,
    prune,
    size_exponent_bounds,
    slope_report,
    split_duplicates,
)
from models.verifier import check_sidon
from models import infinite_construction
from models.alpha_lab import necessary_conditions
from utils import gaussian, precision
from utils.errors import InvalidParameter
from utils.gaussian import phi_of
from utils.precision import DyadicRational, certified_floor
from utils.primes import primes_1mod4_upto

mpmath.mp.dps = 60

CLASS_5 = (17, 29, 37, 41, 53, 61, 73, 89, 97)


def params(num=1, bits=0, k_max=6):
    return ConstructionParams.default(alpha_num=num, alpha_bits=bits, k_max=k_max)


def synthetic(label, blocks):
    K = len(blocks)
    a, t = assemble(blocks, K)
    return ElementRecord(p=label, K=K, m=m_from_blocks(blocks), blocks=tuple(blocks), a=a, t=t)


def angle_record(p, K):
    m = certified_floor(lambda bits: phi_of(p, max(bits, 16)).enclosure, shift=K * K)
    blocks = blocks_of(m, K)
    a, t = assemble(blocks, K)
    return ElementRecord(p=p, K=K, m=m, blocks=blocks, a=a, t=t)


def crowded_records(classes):
    """Alpha = 1 records with chosen classes: many primes share few truncation bits."""
    return [angle_record(p, K) for K, primes in classes for p in primes]


CROWDED = {
    "class3": [(3, primes_1mod4_upto(400))],
    "class4": [(4, primes_1mod4_upto(400))],
    "mixed": [
        (3, [p for p in primes_1mod4_upto(400) if p <= 200]),
        (4, [p for p in primes_1mod4_upto(400) if p > 200]),
    ],
}


@pytest.fixture(scope="module")
def worked_example():
    return [
        synthetic(1, [1, 3]),
        synthetic(2, [0, 1]),
        synthetic(3, [1, 2]),
        synthetic(4, [0, 2]),
    ]


@pytest.fixture(scope="module")
def k6_build():
    return build_sidon_set(params(k_max=6))


class TestParams:
    def test_beta_is_root_of_quadratic(self):
        beta = beta_enclosure(128)
        residual = beta * beta - beta.scale_int(2) - 1
        assert residual.contains(0)
        assert residual.width < Fraction(1, 1 << 60)
        v = Fraction(mpmath.nstr(1 + mpmath.sqrt(2), 50))
        slack = Fraction(1, 10 ** 45)
        assert beta.lower - slack <= v <= beta.upper + slack

    @pytest.mark.parametrize("k_max", [0, 2])
    def test_k_must_exceed_two(self, k_max):
        with pytest.raises(InvalidParameter):
            params(k_max=k_max)

    def test_alpha_must_be_in_unit_interval(self):
        with pytest.raises(InvalidParameter):
            ConstructionParams(alpha=DyadicRational(2, 0))


class TestClasses:
    @pytest.mark.parametrize("p,K", [(5, 4), (13, 4), (17, 5), (97, 5), (101, 6)])
    def test_k_index(self, p, K):
        assert k_index(p, params()) == K

    def test_k_index_rejects_other_primes(self):
        with pytest.raises(InvalidParameter):
            k_index(7, params())

    def test_members(self):
        assert class_members(3, params()).primes == ()
        assert class_members(4, params()).primes == (5, 13)
        assert class_members(5, params()).primes == CLASS_5

    def test_bounds(self):
        assert class_upper_bound(4, params()) == 13
        assert class_upper_bound(5, params()) == 98
        assert class_upper_bound(6, params()) == int(2 ** (25 / (1 + math.sqrt(2))))

    def test_classes_partition_the_primes(self):
        p = params()
        union = [q for K in range(3, 7) for q in class_members(K, p)]
        assert tuple(union) == primes_1mod4_upto(class_upper_bound(6, p)).primes

    def test_every_class_member_has_its_index(self):
        p = params()
        for K in (4, 5, 6):
            assert all(k_index(q, p) == K for q in class_members(K, p))


class TestTruncation:
    def test_m_of_five(self):
        assert m_value(5, params()) == 9672

    def test_m_with_alpha(self):
        expected = int(mpmath.floor(mpmath.mpf(2) ** 16 * mpmath.mpf(3) / 2 * mpmath.atan(mpmath.mpf(2) / 3) / mpmath.pi))
        assert m_value(13, params(3, 1)) == expected

    def test_unreduced_alpha_gives_same_value(self):
        assert m_value(29, params(4, 2)) == m_value(29, params(1, 0))

    def test_alpha_one_stays_below_a_quarter(self):
        p = params()
        for q in (5, 13) + CLASS_5:
            K = k_index(q, p)
            assert 0 <= m_value(q, p) < (1 << (K * K)) // 4


class TestBlocks:
    def test_worked_digits(self):
        assert blocks_of(0b101010101, 3) == (1, 2, 21)

    def test_extremes(self):
        assert blocks_of(0, 3) == (0, 0, 0)
        assert blocks_of((1 << 9) - 1, 3) == (1, 7, 31)

    def test_rejects_wide_m(self):
        with pytest.raises(InvalidParameter):
            blocks_of(1 << 9, 3)

    def test_round_trip(self):
        rng = random.Random(3)
        for _ in range(10 ** 4):
            K = rng.randint(1, 9)
            m = rng.randrange(1 << (K * K))
            blocks = blocks_of(m, K)
            assert m_from_blocks(blocks) == m
            assert all(d < 1 << (2 * i - 1) for i, d in enumerate(blocks, start=1))


class TestAssemble:
    def test_worked_values(self):
        assert assemble((1, 2, 21), 3) == (1220872, 1 << 20)
        assert assemble((0, 0, 0), 3) == (1 << 20, 1 << 20)
        assert assemble((1, 3), 2)[0] == 4488

    def test_rejects_oversized_block(self):
        with pytest.raises(InvalidParameter):
            assemble((2, 0, 0), 3)
        with pytest.raises(InvalidParameter):
            assemble((1, 2), 3)


class TestElements:
    def test_element_of_five(self):
        e = element(5, params())
        assert (e.K, e.m) == (4, 9672)
        assert e.a.bit_length() == 4 * 4 + 3 * 4 + 3
        assert e == element(5, params())

    def test_generate_small(self):
        assert [e.p for e in generate(params(k_max=4))] == [5, 13]
        assert generate(params(k_max=3)) == []

    def test_record_invariants(self, k6_build):
        _, _, records = k6_build
        p = params()
        for e in records:
            assert e.t < e.a < 2 * e.t
            assert e.a.bit_length() == e.K * e.K + 3 * e.K + 3
            assert blocks_of(e.m, e.K) == e.blocks
            assert assemble(e.blocks, e.K)[0] == e.a
            lower, upper = size_exponent_bounds(e.K, p)
            assert float(lower) < math.log2(e.a) / math.log2(e.p) < float(upper)

    def test_parallel_generation_matches(self):
        p = params(k_max=5)
        assert generate(p, workers=2) == generate(p, workers=1)


class TestBadTuples:
    def test_worked_example(self, worked_example):
        expected = [BadTuple(p=1, q=2, r=3, s=4, K=2, L=2)]
        assert find_bad_tuples(worked_example, prefilter=False) == expected
        assert brute_force_bad_tuples(worked_example) == expected

    def test_too_few_elements(self):
        assert find_bad_tuples(generate(params(k_max=4))) == []
        assert brute_force_bad_tuples([]) == []

    def test_prune_worked_example(self, worked_example):
        result = prune(worked_example, brute_force_bad_tuples(worked_example))
        assert 4488 not in result.values
        assert result.values == (4224, 4352, 4360)
        assert check_sidon(result.values).ok

    def test_prune_without_tuples_is_identity(self):
        records = generate(params(k_max=4))
        assert prune(records, []).values == tuple(sorted(e.a for e in records))

    def test_duplicates(self):
        first, second = synthetic(1, [1, 3]), synthetic(2, [1, 3])
        other = synthetic(3, [0, 1])
        unique, duplicates = split_duplicates([second, first, other])
        assert [e.p for e in unique] == [1, 3]
        assert [e.p for e in duplicates] == [2]
        result = prune([first, second, other], [])
        assert result.duplicate_count == 1
        assert result.values == (other.a, first.a)

    @pytest.mark.parametrize("num", range(8, 16))
    def test_prefilter_matches_brute_force(self, num):
        records = generate(params(num, 3, k_max=5))
        expected = brute_force_bad_tuples(records)
        assert find_bad_tuples(records, prefilter=True) == expected
        assert find_bad_tuples(records, prefilter=False) == expected

    def test_tuples_line_up_in_m(self, k6_build):
        result, bad, records = k6_build
        by_p = {e.p: e for e in records}
        for bt in bad:
            assert aligned_m_identity(bt, by_p)
            p, q, r, s = (by_p[x] for x in bt.primes())
            assert p.a + q.a == r.a + s.a and p.a > r.a >= s.a > q.a
            assert (p.K, r.K, q.K, s.K) == (bt.K, bt.K, bt.L, bt.L)
            if bt.K == bt.L:
                assert p.m + q.m == r.m + s.m

    def test_pruned_set_is_sidon(self, k6_build):
        result, bad, records = k6_build
        assert result.verified
        assert check_sidon(result.values).ok
        assert len(result.removed) <= len(bad) + result.duplicate_count
        assert len(result) + len(result.removed) == len(records)

    @pytest.mark.parametrize("name", sorted(CROWDED))
    def test_prefilter_on_crowded_records(self, name):
        records = crowded_records(CROWDED[name])
        expected = brute_force_bad_tuples(records)
        assert find_bad_tuples(records, prefilter=True) == expected
        if name != "mixed":
            assert expected

    @pytest.mark.parametrize("name", sorted(CROWDED))
    def test_crowded_tuples_meet_conditions(self, name):
        records = crowded_records(CROWDED[name])
        by_p = {e.p: e for e in records}
        bad = find_bad_tuples(records)
        for bt in bad:
            assert aligned_m_identity(bt, by_p)
            conditions = necessary_conditions(bt, params())
            assert conditions["angle"]
        result = prune(records, bad)
        assert result.verified and check_sidon(result.values).ok
        assert {bt.p for bt in bad} <= {e.p for e in result.removed}

    @pytest.mark.slow
    @pytest.mark.parametrize("num", range(32, 64))
    def test_pruned_union_is_sidon_over_grid(self, num):
        result, _, _ = build_sidon_set(params(num, 5, k_max=6))
        assert check_sidon(result.values).ok


class TestCounting:
    def test_bounds(self, k6_build):
        result, _, _ = k6_build
        values = result.values
        assert counting(result, values[0] - 1) == 0
        assert counting(result, values[-1]) == len(result)
        assert counting([3, 1, 2], 2) == 2

    def test_slopes(self, k6_build):
        result, _, _ = k6_build
        slopes = [counting_slope(result, K)[1] for K in (4, 5, 6)]
        assert all(0 < s < 0.55 for s in slopes)
        assert slopes == sorted(slopes)
        assert counting_slope(result, 4)[0] == 2

    def test_report_rows(self, k6_build):
        result, _, _ = k6_build
        rows = slope_report(result, [4, 5, 6])
        assert [row["x_log2"] for row in rows] == [36, 49, 64]
        assert rows[0]["target"] == pytest.approx(math.sqrt(2) - 1)

    def test_size_bounds_need_a_real_class(self):
        with pytest.raises(InvalidParameter):
            size_exponent_bounds(2, params())


def test_memo_tables_are_bounded():
    cached = [
        infinite_construction._m_value,
        infinite_construction._beta_log2_floor,
        infinite_construction._class_upper_bound,
        infinite_construction.beta_enclosure,
        gaussian._phi,
        gaussian.two_squares,
        precision.arctan_ratio,
        precision.pi_const,
    ]
    for fn in cached:
        assert fn.cache_info().maxsize is not None, fn.__name__
    for num in range(16, 32):
        m_value(5, params(num, 4))
    info = infinite_construction._m_value.cache_info()
    assert info.currsize <= info.maxsize
