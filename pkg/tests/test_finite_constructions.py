from math import isqrt

import pytest

from models.finite_constructions import (
    build,
    gauss_construction,
    greedy_sidon,
    log_construction,
    theoretical_size,
)
from models.verifier import check_sidon
from utils.errors import InvalidParameter, RangeEmpty
from utils.primes import pi1


def greedy_oracle(count):
    terms, sums = [], set()
    candidate = 1
    while len(terms) < count:
        new = {candidate + t for t in terms} | {2 * candidate}
        if len(new) == len(terms) + 1 and not new & sums:
            terms.append(candidate)
            sums |= new
        candidate += 1
    return terms


class TestGreedy:
    def test_first_terms(self):
        assert greedy_sidon(5).elements == (1, 2, 4, 8, 13)
        assert greedy_sidon(10).elements == (1, 2, 4, 8, 13, 21, 31, 45, 66, 81)

    def test_single_term(self):
        result = greedy_sidon(1)
        assert result.elements == (1,)
        assert result.method == "greedy" and result.provenance is None

    def test_matches_oracle_and_cubic_bound(self):
        terms = greedy_sidon(50).elements
        assert list(terms) == greedy_oracle(50)
        assert all(a <= (k - 1) ** 3 + 1 for k, a in enumerate(terms, start=1))
        assert check_sidon(terms).ok

    def test_rejects_empty(self):
        with pytest.raises(InvalidParameter):
            greedy_sidon(0)


class TestLogConstruction:
    def test_hundred(self):
        result = log_construction(100)
        assert result.elements == (30, 47)
        assert result.provenance == (2, 3)

    @pytest.mark.parametrize("n", [2, 10])
    def test_too_small(self, n):
        with pytest.raises(RangeEmpty):
            log_construction(n)

    def test_power_of_a_prime_in_range(self):
        result = log_construction(1024)
        assert dict(zip(result.provenance, result.elements))[2] == 2048 // 10
        assert check_sidon(result.elements).ok

    def test_count_matches_range(self):
        assert len(log_construction(10 ** 4)) == 9

    @pytest.mark.parametrize("n", [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
    def test_is_sidon(self, n):
        result = log_construction(n)
        assert check_sidon(result.elements).ok
        assert all(0 <= x <= 2 * n for x in result.elements)


class TestGaussConstruction:
    def test_ten_thousand(self):
        result = gauss_construction(10000)
        assert dict(zip(result.provenance, result.elements)) == {5: 1475, 13: 1871, 17: 779}
        assert result.elements == (779, 1475, 1871)

    def test_smallest_range(self):
        assert gauss_construction(400).elements == (59,)
        with pytest.raises(RangeEmpty):
            gauss_construction(399)

    @pytest.mark.parametrize("n", [10 ** 4, 10 ** 5, 10 ** 6])
    def test_is_sidon_with_exact_size(self, n):
        result = gauss_construction(n)
        assert check_sidon(result.elements).ok
        assert len(result) == pi1(isqrt(n) // 4)
        assert all(0 <= c <= n for c in result.elements)


def test_build_dispatch():
    assert build("greedy", 3).elements == (1, 2, 4)
    with pytest.raises(InvalidParameter):
        build("singer", 10)


def test_theoretical_size():
    assert theoretical_size("greedy", 1000) == pytest.approx(10.0)
    assert theoretical_size("gauss", 10 ** 6) > 0
    assert theoretical_size("log", 10 ** 6) > theoretical_size("gauss", 10 ** 6)
