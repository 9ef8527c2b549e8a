import random
from fractions import Fraction

import mpmath
import pytest

from utils.errors import InvalidParameter, NeedsMorePrecision, PrecisionCapExceeded
from utils.gaussian import phi_of
from utils.precision import (
    DyadicRational,
    FixedReal,
    arctan_ratio,
    certified_floor,
    floor_scaled,
    log_of,
    pi_const,
    sqrt_int,
)

mpmath.mp.dps = 80

# mpmath values are rounded to 80 digits; allow that much slack when testing containment
SLACK = Fraction(1, 10 ** 70)


def assert_encloses(enclosure, value):
    v = Fraction(mpmath.nstr(value, 78, min_fixed=-100, max_fixed=100))
    assert enclosure.lower - SLACK <= v <= enclosure.upper + SLACK


def span(lo, hi, bits=20):
    return FixedReal(FixedReal.from_fraction(lo.numerator, lo.denominator, bits).lo,
                     FixedReal.from_fraction(hi.numerator, hi.denominator, bits).hi, bits)


class TestFixedReal:
    def test_rejects_empty_enclosure(self):
        with pytest.raises(InvalidParameter):
            FixedReal(3, 2, 4)

    def test_addition_contains_exact_sum(self):
        x = FixedReal.from_fraction(1, 3, 40)
        y = FixedReal.from_fraction(1, 7, 40)
        assert (x + y).contains(Fraction(10, 21))
        assert (x - y).contains(Fraction(4, 21))

    def test_product_and_quotient_contain_exact_values(self):
        x = FixedReal.from_fraction(2, 3, 50)
        y = FixedReal.from_fraction(5, 7, 50)
        assert (x * y).contains(Fraction(10, 21))
        assert x.divide(y).contains(Fraction(14, 15))

    def test_rescale_rounds_outward(self):
        x = FixedReal.from_fraction(1, 3, 60)
        coarse = x.rescale(10)
        assert coarse.contains(Fraction(1, 3))
        assert coarse.width >= x.width

    def test_to_decimal(self):
        assert FixedReal.exact(1, 4).to_decimal(3) == "[1.000, 1.000]"
        assert FixedReal.from_fraction(1, 3, 64).to_decimal(5) == "[0.33333, 0.33334]"


class TestPi:
    @pytest.mark.parametrize("bits", [8, 64, 200])
    def test_width_and_containment(self, bits):
        enc = pi_const(bits)
        assert enc.lo <= enc.hi
        assert enc.width <= Fraction(1, 1 << bits)
        assert_encloses(enc, mpmath.pi)

    def test_rejects_tiny_precision(self):
        with pytest.raises(InvalidParameter):
            pi_const(4)


class TestArctan:
    def test_half(self):
        enc = arctan_ratio(1, 2, 64)
        assert enc.width <= Fraction(1, 1 << 64)
        assert_encloses(enc, mpmath.atan(mpmath.mpf(1) / 2))

    def test_tiny_argument(self):
        enc = arctan_ratio(1, 10 ** 6, 32)
        eps = Fraction(1, 1 << 32)
        assert Fraction(1, 10 ** 6) - eps <= enc.lower <= enc.upper <= Fraction(1, 10 ** 6) + eps

    @pytest.mark.parametrize("num,den", [(1, 1), (3, 2), (0, 5)])
    def test_rejects_out_of_range(self, num, den):
        with pytest.raises(InvalidParameter):
            arctan_ratio(num, den, 32)

    def test_random_containment(self):
        rng = random.Random(7)
        for _ in range(1000):
            den = rng.randint(2, 10 ** 9)
            num = rng.randint(1, den - 1)
            bits = rng.choice([32, 64, 128])
            enc = arctan_ratio(num, den, bits)
            assert enc.width <= Fraction(1, 1 << bits)
            assert_encloses(enc, mpmath.atan(mpmath.mpf(num) / den))

    def test_deterministic(self):
        assert arctan_ratio(2, 3, 100) == arctan_ratio(2, 3, 100)


class TestLog:
    def test_power_of_two_is_exact(self):
        enc = log_of(8, 2, 64)
        assert enc.is_exact()
        assert enc.contains(3)

    def test_natural_log(self):
        enc = log_of(100, "e", 64)
        assert enc.width <= Fraction(1, 1 << 64)
        assert_encloses(enc, mpmath.log(100))

    def test_binary_log(self):
        enc = log_of(5, 2, 64)
        assert enc.width <= Fraction(1, 1 << 64)
        assert_encloses(enc, mpmath.log(5, 2))

    def test_random_containment(self):
        rng = random.Random(11)
        for _ in range(1000):
            n = rng.randint(2, 10 ** 12)
            assert_encloses(log_of(n, "e", 96), mpmath.log(n))

    def test_rejects_small_argument(self):
        with pytest.raises(InvalidParameter):
            log_of(1, "e", 32)


class TestFloors:
    def test_floor_of_narrow_enclosure(self):
        x = span(Fraction(51, 100), Fraction(52, 100))
        assert floor_scaled(x, 1) == 1

    def test_straddling_enclosure(self):
        x = span(Fraction(999, 1000), Fraction(1001, 1000))
        with pytest.raises(NeedsMorePrecision):
            floor_scaled(x, 0)

    def test_phi5_truncation(self):
        assert floor_scaled(phi_of(5, 128).enclosure, 16) == 9672

    def test_certified_floor_of_known_value(self):
        assert certified_floor(lambda bits: log_of(1 << 20, 2, bits)) == 20
        assert certified_floor(lambda bits: sqrt_int(2, bits), shift=10) == 1448

    def test_escalation_stops_at_cap(self):
        def always_straddles(bits):
            return FixedReal(0, 2 << bits, bits)

        with pytest.raises(PrecisionCapExceeded):
            certified_floor(always_straddles, start_bits=16, cap=128)

    def test_refinement_never_widens(self):
        assert phi_of(13, 128).enclosure.width <= phi_of(13, 64).enclosure.width


class TestDyadic:
    def test_parse(self):
        alpha = DyadicRational.parse("3/2")
        assert (alpha.numerator, alpha.denominator_log2) == (3, 1)
        assert alpha.as_fraction() == Fraction(3, 2)

    def test_rejects_non_dyadic(self):
        with pytest.raises(InvalidParameter):
            DyadicRational.parse("4/3")

    @pytest.mark.parametrize("num,bits", [(2, 0), (1, 1), (8, 2)])
    def test_alpha_outside_unit_interval(self, num, bits):
        with pytest.raises(InvalidParameter):
            DyadicRational(num, bits).validate_alpha()
