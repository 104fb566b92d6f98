"""Exact arithmetic kernels: primes, totients, Euler products, harmonic
sums over coprime residues, and certified logarithms.

Everything here is exact (fractions.Fraction over arbitrary-size ints)
except the log helpers, which return certified enclosures computed with
mpmath interval arithmetic and converted back to exact dyadic rationals,
so downstream comparisons stay exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from mpmath import iv

from .errors import CapExceededError, DomainError, PrecisionGuardError

# Exact rational scalar used throughout the package.  fractions.Fraction
# already provides normalized big-int rationals with exact comparison and
# hashing, so it is adopted as-is instead of a bespoke type.
Rational = Fraction

RationalLike = Fraction | int

# Desk-scale caps.  Exact arithmetic cost grows quickly with these bounds;
# each cap raises CapExceededError naming the constant so a caller who
# accepts the cost can raise it deliberately.
SIEVE_CAP = 4_000_000        # largest prime table we will build
HARMONIC_CAP = 5_000         # largest floor(X) for coprime_harmonic
DENSITY_SCAN_CAP = 200_000   # largest floor(theta) for coprime_density
INTEGRAL_CAP = 50_000        # largest floor(X) for log_weight_integral
SCALE_CAP = 64               # largest k for exp_rational


# ---------------------------------------------------------------------------
# primes and factorization

_spf: list[int] = [0, 1]   # smallest-prime-factor table; _spf[0] unused
_primes: list[int] = []


def _ensure_sieve(limit: int) -> None:
    global _spf, _primes
    if limit < len(_spf):
        return
    if limit > SIEVE_CAP:
        raise CapExceededError(
            f"prime sieve limited to {SIEVE_CAP} (arith.SIEVE_CAP); needed {limit}"
        )
    size = min(max(limit + 1, 2 * len(_spf), 1 << 16), SIEVE_CAP + 1)
    spf = list(range(size))
    for p in range(2, math.isqrt(size - 1) + 1):
        if spf[p] == p:
            for q in range(p * p, size, p):
                if spf[q] == q:
                    spf[q] = p
    _spf = spf
    _primes = [i for i in range(2, size) if spf[i] == i]


@lru_cache(maxsize=1 << 17)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of n >= 1 as ((p, multiplicity), ...) ascending."""
    if n < 1:
        raise DomainError(f"factorize requires n >= 1, got {n}")
    if n == 1:
        return ()
    if n < len(_spf) or n <= (1 << 18):
        _ensure_sieve(n)
        out = []
        m = n
        while m > 1:
            p = _spf[m]
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        return tuple(out)
    # beyond the table: trial division by sieved primes up to sqrt(n)
    _ensure_sieve(math.isqrt(n))
    out = []
    m = n
    for p in _primes:
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    if m > 1:
        out.append((m, 1))
    return tuple(out)


def primes_up_to(x: int) -> list[int]:
    """All primes p <= x, ascending."""
    if x < 2:
        return []
    _ensure_sieve(x)
    import bisect

    return _primes[: bisect.bisect_right(_primes, x)]


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == ((n, 1),)


@dataclass(frozen=True)
class Factorization:
    """An integer together with its prime factorization."""

    value: int
    factors: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, n: int) -> "Factorization":
        return cls(n, factorize(n))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def totient(self) -> int:
        phi = 1
        for p, e in self.factors:
            phi *= (p - 1) * p ** (e - 1)
        return phi

    def radical(self) -> int:
        return math.prod(self.primes)


def factor_totient(n: int) -> tuple[Factorization, int]:
    """Factorization of n and its Euler totient."""
    f = Factorization.of(n)
    return f, f.totient()


@lru_cache(maxsize=1 << 17)
def totient(n: int) -> int:
    phi = 1
    for p, e in factorize(n):
        phi *= (p - 1) * p ** (e - 1)
    return phi


# ---------------------------------------------------------------------------
# Euler products and coprime sums

def mertens_product(x: RationalLike) -> Fraction:
    """Exact Π_{p <= x} (1 - 1/p)^(-1) over primes."""
    x = Fraction(x)
    if x < 0:
        raise DomainError("mertens_product requires x >= 0")
    num = den = 1
    for p in primes_up_to(math.floor(x)):
        num *= p
        den *= p - 1
    return Fraction(num, den)


def restricted_prime_product(t: int, lower: RationalLike) -> Fraction:
    """Exact Π (1 - 1/p)^(-1) over distinct primes p | t with p > lower."""
    if t < 1:
        raise DomainError("restricted_prime_product requires t >= 1")
    lower = Fraction(lower)
    num = den = 1
    for p, _ in factorize(t):
        if p > lower:
            num *= p
            den *= p - 1
    return Fraction(num, den)


def coprime_density(t: int, theta: RationalLike) -> Fraction:
    """#{1 <= b <= theta : gcd(b, t) = 1} / theta, exact.

    The count is a direct gcd scan; this is the slow honest route and is
    capped accordingly.
    """
    if t < 1:
        raise DomainError("coprime_density requires t >= 1")
    theta = Fraction(theta)
    if theta < 1:
        raise DomainError("coprime_density requires theta >= 1")
    b_max = math.floor(theta)
    if b_max > DENSITY_SCAN_CAP:
        raise CapExceededError(
            f"coprime_density scan limited to {DENSITY_SCAN_CAP} "
            f"(arith.DENSITY_SCAN_CAP); needed {b_max}"
        )
    count = sum(1 for b in range(1, b_max + 1) if math.gcd(b, t) == 1)
    return Fraction(count) / theta


_harmonic_prefix: list[Fraction] = [Fraction(0)]


def _harmonic(m: int) -> Fraction:
    """H_m = Σ_{b <= m} 1/b, served from an exact prefix cache."""
    if m > HARMONIC_CAP:
        raise CapExceededError(
            f"harmonic prefix limited to {HARMONIC_CAP} (arith.HARMONIC_CAP); needed {m}"
        )
    h = _harmonic_prefix
    while len(h) <= m:
        h.append(h[-1] + Fraction(1, len(h)))
    return h[m]


def coprime_harmonic(t: int, x: RationalLike) -> Fraction:
    """Exact Σ_{b <= x, gcd(b,t)=1} 1/b.

    Evaluated by Moebius inversion over the squarefree divisors of t so the
    cost is ~2^omega(t) harmonic-prefix lookups instead of a fresh scan.
    """
    if t < 1:
        raise DomainError("coprime_harmonic requires t >= 1")
    x = Fraction(x)
    if x < 0:
        raise DomainError("coprime_harmonic requires x >= 0")
    b_max = math.floor(x)
    if b_max <= 0:
        return Fraction(0)
    ps = [p for p, _ in factorize(t)]
    total = Fraction(0)
    for size in range(len(ps) + 1):
        sign = -1 if size & 1 else 1
        for combo in itertools.combinations(ps, size):
            d = math.prod(combo)
            q = b_max // d
            if q:
                total += Fraction(sign, d) * _harmonic(q)
    return total


def sieve_upper_bound(
    t: int, x: RationalLike
) -> tuple[Fraction, tuple[Fraction, Fraction]]:
    """Exact Π_{p <= x, p ∤ t} (1 - 1/p)^(-1), factored.

    Returns (bound, (full, dividing)) where full = Π_{p <= x} (1 - 1/p)^(-1)
    and dividing = Π_{p <= x, p | t} (1 - 1/p), so bound = full * dividing.
    The factored pair is exposed so callers can audit the factorization
    identity against an independently computed product.
    """
    if t < 1:
        raise DomainError("sieve_upper_bound requires t >= 1")
    x = Fraction(x)
    if x < 1:
        raise DomainError("sieve_upper_bound requires x >= 1")
    full = mertens_product(x)
    num = den = 1
    for p, _ in factorize(t):
        if p <= x:
            num *= p - 1
            den *= p
    dividing = Fraction(num, den)
    return full * dividing, (full, dividing)


# ---------------------------------------------------------------------------
# certified enclosures

@dataclass(frozen=True)
class Approx:
    """Midpoint/error certificate: the true value lies in [value-err, value+err]."""

    value: Fraction
    err: Fraction

    def __post_init__(self):
        if self.err < 0:
            raise DomainError("negative error bound")

    @property
    def lo(self) -> Fraction:
        return self.value - self.err

    @property
    def hi(self) -> Fraction:
        return self.value + self.err

    @classmethod
    def from_bounds(cls, lo: Fraction, hi: Fraction) -> "Approx":
        if hi < lo:
            raise DomainError("empty enclosure")
        return cls((lo + hi) / 2, (hi - lo) / 2)

    def scale(self, c: Fraction) -> "Approx":
        return Approx(self.value * c, self.err * abs(c))

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return f"{float(self.value):.12g} (±{float(self.err):.3g})"


_LOG_GUARD_BITS = 32


def _mpf_to_fraction(mpf_tuple) -> Fraction:
    sign, man, exp, _ = mpf_tuple
    f = Fraction(int(man)) * Fraction(2) ** exp
    return -f if sign else f


def log_bounds(x: RationalLike, precision: int = 128) -> tuple[Fraction, Fraction]:
    """Certified enclosure of ln(x) with exact dyadic rational endpoints.

    Computed with mpmath interval arithmetic at precision + 32 bits; the
    endpoints are converted back to Fractions so all later comparisons are
    exact.
    """
    x = Fraction(x)
    if x <= 0:
        raise DomainError("log requires x > 0")
    if x == 1:
        return Fraction(0), Fraction(0)
    saved = iv.prec
    iv.prec = precision + _LOG_GUARD_BITS
    try:
        enc = iv.log(iv.mpf(x.numerator) / iv.mpf(x.denominator))
        lo_t, hi_t = enc._mpi_
    finally:
        iv.prec = saved
    return _mpf_to_fraction(lo_t), _mpf_to_fraction(hi_t)


@lru_cache(maxsize=1 << 17)
def _log_int_bounds(b: int, precision: int) -> tuple[Fraction, Fraction]:
    return log_bounds(b, precision)


def floored_log_bounds(
    x: RationalLike, precision: int = 128
) -> tuple[Fraction, Fraction]:
    """Enclosure of max(1, ln x) — the all-logs-positive convention."""
    lo, hi = log_bounds(x, precision)
    one = Fraction(1)
    return max(lo, one), max(hi, one)


def exp_bounds(lo: Fraction, hi: Fraction, precision: int = 128) -> tuple[Fraction, Fraction]:
    """Certified enclosure of exp over the interval [lo, hi]."""
    if hi < lo:
        raise DomainError("empty enclosure")
    saved = iv.prec
    iv.prec = precision + _LOG_GUARD_BITS
    try:
        lo_enc = iv.exp(iv.mpf(lo.numerator) / iv.mpf(lo.denominator))
        hi_enc = iv.exp(iv.mpf(hi.numerator) / iv.mpf(hi.denominator))
        lo_t = lo_enc._mpi_[0]
        hi_t = hi_enc._mpi_[1]
    finally:
        iv.prec = saved
    return _mpf_to_fraction(lo_t), _mpf_to_fraction(hi_t)


def pow_bounds(
    lo: Fraction, hi: Fraction, exponent: Fraction, precision: int = 128
) -> tuple[Fraction, Fraction]:
    """Certified enclosure of [lo, hi]^exponent for 0 < lo, exponent >= 0.

    Integer exponents stay exact; fractional ones go through
    exp(exponent * log), outward-rounded.
    """
    if hi < lo:
        raise DomainError("empty enclosure")
    if lo <= 0:
        raise DomainError("pow_bounds requires a positive base interval")
    exponent = Fraction(exponent)
    if exponent < 0:
        raise DomainError("pow_bounds requires exponent >= 0")
    if exponent.denominator == 1:
        e = exponent.numerator
        return lo ** e, hi ** e
    llo, _ = log_bounds(lo, precision)
    _, lhi = log_bounds(hi, precision)
    return exp_bounds(exponent * llo, exponent * lhi, precision)


DEFAULT_FLOOR_GUARD = Fraction(1, 1 << 64)


def guarded_floor(
    lo: Fraction, hi: Fraction, guard: Fraction = DEFAULT_FLOOR_GUARD
) -> int:
    """floor of the value enclosed by [lo, hi], certified.

    Refuses (PrecisionGuardError) when the enclosure straddles an integer or
    approaches one within `guard`: a floor read off such an enclosure could
    silently flip with precision.
    """
    if hi < lo:
        raise DomainError("empty enclosure")
    f_lo = math.floor(lo)
    if f_lo != math.floor(hi):
        raise PrecisionGuardError(
            "enclosure straddles an integer; floor not certified (retry with more bits)"
        )
    if lo - f_lo < guard or f_lo + 1 - hi < guard:
        raise PrecisionGuardError(
            "value within guard distance of an integer; floor not certified"
        )
    return f_lo


def log_weight_integral(t: int, x: RationalLike, precision: int = 128) -> Approx:
    """Σ_{b <= x, gcd(b,t)=1} ln(x/b), certified.

    This equals ∫_1^x (#{b <= θ : gcd(b,t)=1}/θ) dθ/θ ... the distribution-
    function integral behind the overlap bound, collapsed to a finite log sum.
    Error is guaranteed <= 2^(-precision + ceil(log2 count)).
    """
    if t < 1:
        raise DomainError("log_weight_integral requires t >= 1")
    x = Fraction(x)
    if x < 1:
        raise DomainError("log_weight_integral requires x >= 1")
    b_max = math.floor(x)
    if b_max > INTEGRAL_CAP:
        raise CapExceededError(
            f"log_weight_integral limited to {INTEGRAL_CAP} "
            f"(arith.INTEGRAL_CAP); needed {b_max}"
        )
    lnx_lo, lnx_hi = log_bounds(x, precision)
    count = 0
    sum_lo = Fraction(0)
    sum_hi = Fraction(0)
    for b in range(1, b_max + 1):
        if math.gcd(b, t) == 1:
            blo, bhi = _log_int_bounds(b, precision)
            count += 1
            sum_lo += blo
            sum_hi += bhi
    lo = count * lnx_lo - sum_hi
    hi = count * lnx_hi - sum_lo
    if lo < 0:
        lo = Fraction(0)  # integrand is nonnegative; rounding can dip below
    out = Approx.from_bounds(lo, hi)
    ceil_log2 = (count - 1).bit_length() if count else 0
    if precision > ceil_log2:
        budget = Fraction(1, 1 << (precision - ceil_log2))
        if out.err > budget:
            raise PrecisionGuardError(
                f"integral error {float(out.err):.3g} exceeds 2^-{precision - ceil_log2}"
            )
    return out


# ---------------------------------------------------------------------------
# rational scale ladder for e^k

_E_SERIES_TERMS = 40
# Σ_{i<=40} 1/i!; truncation error 0 < e - _E_SERIES < 2/41! < 1.9e-50.
_E_SERIES = sum(Fraction(1, math.factorial(i)) for i in range(_E_SERIES_TERMS + 1))

_EHAT_DEN_LIMIT = 10 ** 8
# Budget left to limit_denominator: 9e-13 here plus k * 2e-50 series effect
# stays under the contracted relative 1e-12 for all k <= SCALE_CAP.
_EHAT_BUILD_TOL = Fraction(9, 10 ** 13)


@lru_cache(maxsize=None)
def exp_rational(k: int) -> Fraction:
    """Small-denominator rational ê_k with |ê_k - e^k| <= e^k * 1e-12."""
    if k < 0:
        raise DomainError("exp_rational requires k >= 0")
    if k > SCALE_CAP:
        raise CapExceededError(
            f"scale ladder limited to k <= {SCALE_CAP} (arith.SCALE_CAP); needed {k}"
        )
    if k == 0:
        return Fraction(1)
    target = _E_SERIES ** k
    approx = target.limit_denominator(_EHAT_DEN_LIMIT)
    if abs(approx - target) > target * _EHAT_BUILD_TOL:
        raise PrecisionGuardError(f"exp_rational({k}) misses its tolerance")
    return approx


@dataclass(frozen=True)
class ScaleLadder:
    """Strictly increasing scales 1 = ê_0 < ê_1 < ... < ê_top."""

    top: int
    values: tuple[Fraction, ...]   # ê_1 .. ê_top

    @classmethod
    def up_to(cls, top: int) -> "ScaleLadder":
        if top < 1:
            raise DomainError("ScaleLadder requires top >= 1")
        vals = tuple(exp_rational(k) for k in range(1, top + 1))
        prev = Fraction(1)
        for v in vals:
            if v <= prev:
                raise PrecisionGuardError("scale ladder not strictly increasing")
            prev = v
        return cls(top, vals)

    def scale(self, k: int) -> Fraction:
        if k == 0:
            return Fraction(1)
        if not 1 <= k <= self.top:
            raise DomainError(f"scale index {k} outside ladder 0..{self.top}")
        return self.values[k - 1]
