"""Exact number theory kernels and certified enclosures.

Expected values in this file are frozen from independent hand computation
(small products and gcd scans one can check on paper).
"""

import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsextra.arith import (
    Approx,
    Factorization,
    ScaleLadder,
    coprime_density,
    coprime_harmonic,
    exp_bounds,
    exp_rational,
    factor_totient,
    factorize,
    floored_log_bounds,
    guarded_floor,
    is_prime,
    log_bounds,
    log_weight_integral,
    mertens_product,
    pow_bounds,
    primes_up_to,
    restricted_prime_product,
    sieve_upper_bound,
    totient,
)
from dsextra.errors import CapExceededError, DomainError, PrecisionGuardError


# ---------------------------------------------------------------------------
# factorization and totients

def test_factorize_small_table():
    assert factorize(1) == ()
    assert factorize(2) == ((2, 1),)
    assert factorize(12) == ((2, 2), (3, 1))
    assert factorize(360) == ((2, 3), (3, 2), (5, 1))
    assert factorize(97) == ((97, 1),)


def test_factorize_beyond_table_walk():
    # large enough to take the trial-division branch
    n = (1 << 18) + 2
    f = factorize(n)
    assert math.prod(p ** e for p, e in f) == n
    assert all(is_prime(p) for p, _ in f)


def test_factorize_rejects_nonpositive():
    with pytest.raises(DomainError):
        factorize(0)
    with pytest.raises(DomainError):
        factorize(-6)


def test_primes_up_to():
    assert primes_up_to(1) == []
    assert primes_up_to(30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_factorization_accessors():
    f = Factorization.of(12)
    assert f.primes == (2, 3)
    assert f.totient() == 4
    assert f.radical() == 6
    assert Factorization.of(1).radical() == 1


def test_factor_totient_360():
    f, phi = factor_totient(360)
    assert f.factors == ((2, 3), (3, 2), (5, 1))
    assert phi == 96


def test_totient_values():
    assert [totient(n) for n in (1, 2, 3, 4, 30, 97)] == [1, 1, 2, 2, 8, 96]


@settings(max_examples=200)
@given(st.integers(min_value=1, max_value=5000))
def test_factorize_reconstructs(n):
    f = factorize(n)
    assert math.prod(p ** e for p, e in f) == n
    assert list(f) == sorted(f)
    assert all(e >= 1 and is_prime(p) for p, e in f)


@settings(max_examples=100)
@given(st.integers(min_value=1, max_value=2000))
def test_totient_counts_coprimes(n):
    assert totient(n) == sum(1 for a in range(1, n + 1) if math.gcd(a, n) == 1)


# ---------------------------------------------------------------------------
# Euler products

def test_mertens_product_values():
    assert mertens_product(1) == 1
    assert mertens_product(2) == 2
    assert mertens_product(F(5, 2)) == 2
    assert mertens_product(10) == F(35, 8)


def test_mertens_product_is_prime_product():
    x = 50
    prod = F(1)
    for p in primes_up_to(x):
        prod *= F(p, p - 1)
    assert mertens_product(x) == prod


def test_restricted_prime_product_values():
    assert restricted_prime_product(36, F(5, 2)) == F(3, 2)
    assert restricted_prime_product(15, 1) == F(15, 8)
    assert restricted_prime_product(15, 5) == 1     # empty product
    assert restricted_prime_product(1, 0) == 1


def test_coprime_density_values():
    assert coprime_density(6, 10) == F(3, 10)
    assert coprime_density(30, 7) == F(2, 7)
    assert coprime_density(1, 10) == 1
    assert coprime_density(2, F(7, 2)) == F(4, 7)   # {1, 3} over 7/2


def test_coprime_harmonic_values():
    assert coprime_harmonic(6, 10) == 1 + F(1, 5) + F(1, 7)
    assert coprime_harmonic(1, 3) == F(11, 6)
    assert coprime_harmonic(6, F(1, 2)) == 0


@settings(max_examples=60)
@given(
    st.integers(min_value=1, max_value=300),
    st.integers(min_value=0, max_value=400),
)
def test_coprime_harmonic_matches_scan(t, b_max):
    # independent oracle: the plain gcd scan
    direct = sum(F(1, b) for b in range(1, b_max + 1) if math.gcd(b, t) == 1)
    assert coprime_harmonic(t, b_max) == direct


def test_sieve_upper_bound_factored_identity():
    bound, (full, dividing) = sieve_upper_bound(6, 7)
    assert (bound, full, dividing) == (F(35, 24), F(35, 8), F(1, 3))
    assert bound == full * dividing
    # direct product over primes <= 7 not dividing 6: {5, 7}
    assert bound == F(5, 4) * F(7, 6)


@settings(max_examples=60)
@given(
    st.integers(min_value=1, max_value=500),
    st.integers(min_value=1, max_value=200),
)
def test_sieve_bound_dominates_harmonic(t, x):
    bound, (full, dividing) = sieve_upper_bound(t, x)
    assert bound == full * dividing
    assert coprime_harmonic(t, x) <= bound


# ---------------------------------------------------------------------------
# caps

def test_caps_name_their_constant():
    with pytest.raises(CapExceededError, match="HARMONIC_CAP"):
        coprime_harmonic(6, 5001)
    with pytest.raises(CapExceededError, match="DENSITY_SCAN_CAP"):
        coprime_density(2, 200_001)
    with pytest.raises(CapExceededError, match="INTEGRAL_CAP"):
        log_weight_integral(2, 50_001)
    with pytest.raises(CapExceededError, match="SCALE_CAP"):
        exp_rational(65)


# ---------------------------------------------------------------------------
# enclosures

def test_approx_from_bounds():
    a = Approx.from_bounds(F(1, 3), F(1, 2))
    assert (a.value, a.err) == (F(5, 12), F(1, 12))
    assert (a.lo, a.hi) == (F(1, 3), F(1, 2))
    assert float(a) == float(F(5, 12))
    b = a.scale(F(-2))
    assert (b.value, b.err) == (F(-5, 6), F(1, 6))
    with pytest.raises(DomainError):
        Approx(F(1), F(-1))
    with pytest.raises(DomainError):
        Approx.from_bounds(F(1), F(0))


def test_log_bounds_encloses_tightly():
    lo, hi = log_bounds(2)
    assert lo <= hi
    assert hi - lo <= F(1, 1 << 120)
    assert F(693147, 10 ** 6) < lo and hi < F(693148, 10 ** 6)
    assert log_bounds(1) == (F(0), F(0))
    with pytest.raises(DomainError):
        log_bounds(0)


def test_log_bounds_precision_controls_width():
    lo8, hi8 = log_bounds(3, precision=8)
    lo64, hi64 = log_bounds(3, precision=64)
    assert hi64 - lo64 < hi8 - lo8
    # 1.0986 < ln 3 < 1.0987, and both enclosures must contain ln 3
    assert lo8 < F(10987, 10 ** 4) and F(10986, 10 ** 4) < hi8
    assert lo64 < F(10987, 10 ** 4) and F(10986, 10 ** 4) < hi64


def test_floored_log_bounds():
    assert floored_log_bounds(2) == (F(1), F(1))      # ln 2 < 1 clamps
    lo, hi = floored_log_bounds(3)
    assert F(1) < lo <= hi
    assert floored_log_bounds(F(1, 10)) == (F(1), F(1))


def test_exp_bounds_enclose():
    lo, hi = exp_bounds(F(1), F(1))
    assert lo <= hi and hi - lo < F(1, 1 << 100)
    assert F(2718281, 10 ** 6) < lo and hi < F(2718282, 10 ** 6)
    lo, hi = exp_bounds(F(0), F(1))
    assert lo <= 1 and F(2718281, 10 ** 6) < hi


def test_pow_bounds_integer_exact():
    assert pow_bounds(F(3, 2), F(3, 2), F(2)) == (F(9, 4), F(9, 4))
    assert pow_bounds(F(2), F(3), F(0)) == (F(1), F(1))


def test_pow_bounds_fractional_encloses():
    lo, hi = pow_bounds(F(4), F(4), F(1, 2))
    assert lo <= 2 <= hi and hi - lo < F(1, 1 << 100)
    with pytest.raises(DomainError):
        pow_bounds(F(0), F(1), F(1, 2))
    with pytest.raises(DomainError):
        pow_bounds(F(1), F(2), F(-1))


def test_guarded_floor():
    assert guarded_floor(F(5, 2), F(51, 20)) == 2
    with pytest.raises(PrecisionGuardError):
        guarded_floor(F(199, 100), F(201, 100))       # straddles 2
    with pytest.raises(PrecisionGuardError):
        guarded_floor(F(3), F(3))                      # exactly on an integer
    with pytest.raises(PrecisionGuardError):
        guarded_floor(F(3) + F(1, 1 << 70), F(3) + F(1, 1 << 69))
    with pytest.raises(DomainError):
        guarded_floor(F(2), F(1))


def test_log_weight_integral_small_window():
    # b in {1, 5, 7}: sum ln(10/b) = ln(200/7)
    out = log_weight_integral(6, 10)
    truth_lo, truth_hi = log_bounds(F(200, 7))
    assert out.lo <= truth_lo and truth_hi <= out.hi
    assert out.err <= F(1, 1 << 126)
    assert log_weight_integral(6, 1).value == 0


def test_log_weight_integral_error_contract():
    # err <= 2^-(precision - ceil(log2 count)) whenever that is meaningful
    for t, x, precision in ((1, 1000, 64), (6, 500, 128), (30, 4000, 64)):
        out = log_weight_integral(t, x, precision)
        count = sum(1 for b in range(1, x + 1) if math.gcd(b, t) == 1)
        assert out.err <= F(1, 1 << (precision - (count - 1).bit_length()))


# ---------------------------------------------------------------------------
# scale ladder

def test_exp_rational_values():
    assert exp_rational(0) == 1
    e1 = exp_rational(1)
    assert abs(e1 - F(2718281828459045, 10 ** 15)) < F(1, 10 ** 12)
    for k in range(1, 9):
        rel = abs(exp_rational(k) - exp_rational(1) ** k) / exp_rational(1) ** k
        assert rel < F(1, 10 ** 7)    # limit_denominator keeps them close
    with pytest.raises(DomainError):
        exp_rational(-1)


def test_scale_ladder():
    ladder = ScaleLadder.up_to(8)
    assert ladder.top == 8
    assert ladder.scale(0) == 1
    assert ladder.scale(3) == exp_rational(3)
    assert all(a < b for a, b in zip((F(1),) + ladder.values, ladder.values))
    with pytest.raises(DomainError):
        ladder.scale(9)
    with pytest.raises(DomainError):
        ScaleLadder.up_to(0)
