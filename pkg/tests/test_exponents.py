from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from momsq.exponents import (
    ExponentTable,
    critical_exponent,
    even_exponent,
    next_even_index,
    verify_pprops,
)


def even_exponent_oracle(n):
    # independent evaluation of the mod-4 case formula by literal summation
    if n == 1:
        return 2
    s = sum(range(1, n + 1))
    return s + 1 if n % 4 in (1, 2) else s


class TestCriticalExponent:
    def test_paper_values(self):
        assert critical_exponent(2) == 4
        assert critical_exponent(4) == 11

    def test_n1(self):
        assert critical_exponent(1) == 2

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            critical_exponent(0)

    @given(st.integers(min_value=1, max_value=500))
    def test_matches_formula(self, n):
        assert critical_exponent(n) == Fraction(n * (n + 1), 2) + 1


class TestEvenExponent:
    def test_base(self):
        assert even_exponent(1) == 2

    def test_derived_values(self):
        assert even_exponent(3) == even_exponent_oracle(3) == 6
        assert even_exponent(4) == even_exponent_oracle(4) == 10

    @given(st.integers(min_value=1, max_value=500))
    def test_even_and_matches_oracle(self, n):
        v = even_exponent(n)
        assert v % 2 == 0
        assert v == even_exponent_oracle(n)


class TestNextEvenIndex:
    def test_derived_scan(self):
        # p=11: p_tilde = 2,4,6 -> first l-1 with ratio in [1,2] is 3
        assert next_even_index(11) == 4
        assert next_even_index(4) == 2

    def test_boundary(self):
        assert next_even_index(2) == 2

    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            next_even_index(Fraction(3, 2))

    def test_monotone_in_p(self):
        table = ExponentTable(12)
        ps = sorted({Fraction(k, 4) for k in range(8, 4 * int(table.p[-1]) + 1)})
        vals = [next_even_index(p) for p in ps]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


class TestVerifyPprops:
    def test_small_exhaustive(self):
        checks = verify_pprops(4)
        assert all(c.passed for c in checks)

    def test_large_exhaustive(self):
        checks = verify_pprops(200)
        assert all(c.passed for c in checks)
        # property-4 check really covered all (n, k) pairs
        assert checks[3].checked == sum(n for n in range(2, 201))

    def test_property4_witness_arithmetic(self):
        # (n=4, k=1): p_4/p_tilde_1 = 5.5 > 2 and 5.5 <= p_3 = 7
        q = critical_exponent(4) / even_exponent(1)
        assert q == Fraction(11, 2) and q > 2
        assert q <= critical_exponent(3) == 7

    def test_table_invariants(self):
        t = ExponentTable(50)
        for n, p, pt in t.rows():
            assert p == critical_exponent(n)
            assert pt % 2 == 0
