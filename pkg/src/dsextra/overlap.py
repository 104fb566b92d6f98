"""Pairwise overlap machinery for coprime arc systems.

Decomposes a pair (m, n) by equal/unequal prime exponents, computes the
exact overlap ratio of the scaled arc systems, the restricted Euler
product bounding it, the certified integral form of that bound, and the
scale-averaged sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .arith import (
    Approx,
    exp_rational,
    factorize,
    floored_log_bounds,
    log_weight_integral,
)
from .circles import coprime_arcs, intersection_measure
from .errors import DomainError, UndefinedRatioError
from .psi import PsiFunction

CSV_COLUMNS = (
    "m", "n", "k", "r", "s", "t", "gcd", "delta", "Delta", "D_k",
    "pv_product", "P_exact_num", "P_exact_den", "integral_bound",
    "integral_err", "disjoint_pred", "threshold_class",
)


@dataclass(frozen=True)
class PairDecomposition:
    """Split of (m, n) by prime exponents: r collects the equal-exponent
    part, s the smaller and t the larger unequal-exponent parts, so that
    m*n = r^2*s*t and gcd(m, n) = r*s with s | t.

    delta/Delta are the scaled half-widths min/max of psi(m)/m, psi(n)/n.
    """

    m: int
    n: int
    gcd: int
    r: int
    s: int
    t: int
    t_factors: tuple[tuple[int, int], ...]
    psi_m: Fraction
    psi_n: Fraction
    delta: Fraction
    Delta: Fraction

    @property
    def t_primes(self) -> tuple[int, ...]:
        # every unequal exponent strictly increases from s to t, so the
        # primes of t/s are exactly the primes of t
        return tuple(p for p, _ in self.t_factors)

    def phi_t(self) -> int:
        phi = 1
        for p, e in self.t_factors:
            phi *= (p - 1) * p ** (e - 1)
        return phi


def decompose_pair(m: int, n: int, psi: PsiFunction) -> PairDecomposition:
    """Exponent-comparison decomposition of a distinct pair."""
    if m == n:
        raise DomainError("pair decomposition requires m != n")
    if m < 1 or n < 1:
        raise DomainError("pair entries must be >= 1")
    em = dict(factorize(m))
    en = dict(factorize(n))
    r = s = t = 1
    t_factors = []
    for p in sorted(em.keys() | en.keys()):
        a = em.get(p, 0)
        b = en.get(p, 0)
        if a == b:
            r *= p ** a
        else:
            lo, hi = (a, b) if a < b else (b, a)
            s *= p ** lo
            t *= p ** hi
            t_factors.append((p, hi))
    psi_m = psi.value(m)
    psi_n = psi.value(n)
    dm = psi_m / m
    dn = psi_n / n
    return PairDecomposition(
        m=m, n=n, gcd=math.gcd(m, n), r=r, s=s, t=t,
        t_factors=tuple(t_factors), psi_m=psi_m, psi_n=psi_n,
        delta=min(dm, dn), Delta=max(dm, dn),
    )


def overlap_cutoff(dec: PairDecomposition, k: int = 0) -> Fraction:
    """The prime cutoff max(n*psi(m), m*psi(n)) / (ê_k * gcd).

    Kept as the raw rational (no floor at 1); an empty product handles
    small cutoffs naturally.
    """
    return max(dec.n * dec.psi_m, dec.m * dec.psi_n) / (exp_rational(k) * dec.gcd)


def prime_product_bound(dec: PairDecomposition, k: int = 0) -> Fraction:
    """Exact Π (1 - 1/p)^(-1) over primes p | t/s with p > cutoff; >= 1."""
    cutoff = overlap_cutoff(dec, k)
    num = den = 1
    for p in dec.t_primes:
        if p > cutoff:
            num *= p
            den *= p - 1
    return Fraction(num, den)


def overlap_ratio(m: int, n: int, psi: PsiFunction, k: int = 0) -> Fraction:
    """Exact measure(A ∩ B) / (measure(A) * measure(B)) for the scaled arcs.

    A, B are the coprime arc systems of m, n with radii psi/ê_k.
    """
    scale = exp_rational(k)
    a = coprime_arcs(m, psi.value(m) / scale)
    b = coprime_arcs(n, psi.value(n) / scale)
    mu = a.measure() * b.measure()
    if mu == 0:
        raise UndefinedRatioError(
            f"overlap ratio undefined: zero-measure arc system for ({m}, {n}) at k={k}"
        )
    return intersection_measure(a, b) / mu


def disjoint_predicted(dec: PairDecomposition, k: int = 0) -> bool:
    """Exact disjointness test: 2*Delta*r*t/ê_k <= 1 forces empty overlap."""
    return 2 * dec.Delta * dec.r * dec.t <= exp_rational(k)


def integration_window(dec: PairDecomposition, k: int = 0) -> Fraction:
    return 4 * dec.Delta * dec.r * dec.t / exp_rational(k)


def threshold_class(dec: PairDecomposition, k: int, top: int) -> str:
    """Classify the integration window against 1 and the ladder top ê_top."""
    w = integration_window(dec, k)
    if w <= 1:
        return "below-1"
    if w <= exp_rational(top):
        return "in-window"
    return "above-window"


def overlap_integral_bound(
    dec: PairDecomposition, k: int = 0, precision: int = 128
) -> Approx:
    """Certified (t/phi(t)) * integral / (Delta*r*t/ê_k) diagnostic bound.

    The integral is the coprime log-weight sum over b <= 4*Delta*r*t/ê_k;
    an empty window (<= 1) gives exactly 0.
    """
    window = integration_window(dec, k)
    if window <= 1:
        return Approx(Fraction(0), Fraction(0))
    integral = log_weight_integral(dec.t, window, precision)
    c = exp_rational(k) / (dec.phi_t() * dec.Delta * dec.r)
    return integral.scale(c)


@dataclass(frozen=True)
class OverlapRecord:
    """One (m, n, k) overlap computation, shaped for the fixed CSV columns."""

    m: int
    n: int
    k: int
    r: int
    s: int
    t: int
    gcd: int
    delta: Fraction
    Delta: Fraction
    cutoff: Fraction
    pv_product: Fraction
    p_exact: Fraction
    integral: Approx | None
    disjoint_pred: bool
    threshold_class: str

    def csv_row(self) -> list[str]:
        return [
            str(self.m), str(self.n), str(self.k),
            str(self.r), str(self.s), str(self.t), str(self.gcd),
            _frac(self.delta), _frac(self.Delta), _frac(self.cutoff),
            _frac(self.pv_product),
            str(self.p_exact.numerator), str(self.p_exact.denominator),
            _frac(self.integral.value) if self.integral is not None else "",
            _frac(self.integral.err) if self.integral is not None else "",
            "true" if self.disjoint_pred else "false",
            self.threshold_class,
        ]


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def overlap_record(
    m: int,
    n: int,
    psi: PsiFunction,
    k: int = 0,
    top: int | None = None,
    precision: int = 128,
    with_integral: bool = True,
) -> OverlapRecord:
    """Full overlap computation for one (m, n, k).

    A zero-measure arc system records P = 0 (the dropped-term convention);
    `top` is the ladder top used for window classification, default k.
    """
    dec = decompose_pair(m, n, psi)
    if top is None:
        top = k
    try:
        p = overlap_ratio(m, n, psi, k)
    except UndefinedRatioError:
        p = Fraction(0)
    integ = (
        overlap_integral_bound(dec, k, precision) if with_integral else None
    )
    return OverlapRecord(
        m=m, n=n, k=k, r=dec.r, s=dec.s, t=dec.t, gcd=dec.gcd,
        delta=dec.delta, Delta=dec.Delta,
        cutoff=overlap_cutoff(dec, k),
        pv_product=prime_product_bound(dec, k),
        p_exact=p,
        integral=integ,
        disjoint_pred=disjoint_predicted(dec, k),
        threshold_class=threshold_class(dec, k, top),
    )


def averaging_reference(n: int, top: int, precision: int = 128) -> Approx:
    """Certified max(1, ln top) * max(1, ln max(1, ln n)).

    The comparison value the averaged sum is measured against, under the
    all-logs-positive convention.
    """
    lk_lo, lk_hi = floored_log_bounds(top, precision)
    ln_lo, ln_hi = floored_log_bounds(n, precision)
    lln_lo, _ = floored_log_bounds(ln_lo, precision)
    _, lln_hi = floored_log_bounds(ln_hi, precision)
    return Approx.from_bounds(lk_lo * lln_lo, lk_hi * lln_hi)


def averaged_sum(
    m: int,
    n: int,
    psi: PsiFunction,
    top: int,
    precision: int = 128,
    with_integral: bool = False,
) -> tuple[Fraction, list[OverlapRecord], Approx]:
    """Σ_{k=1..top} of the exact overlap ratios, with per-k records.

    Returns (total, records, reference) where reference is the certified
    ln(top)*ln(ln(n)) comparison value.
    """
    if top < 1:
        raise DomainError("averaged_sum requires top >= 1")
    records = [
        overlap_record(m, n, psi, k, top, precision, with_integral)
        for k in range(1, top + 1)
    ]
    total = sum((rec.p_exact for rec in records), Fraction(0))
    return total, records, averaging_reference(n, top, precision)
