"""Block scheduling: dyadic-tower blocks 2^{base^h} <= n < 2^{base^{h+1}},
the per-block scale count, exact selection of the best damping scale, and
the thinned (even-block, rescaled) radius function.

The full-scale tower base is 4; base 2 is offered because 2^{4^2} = 2^16
already ends desk-scale exhaustive work, and the machinery is identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .arith import (
    RationalLike,
    ScaleLadder,
    exp_rational,
    guarded_floor,
    log_bounds,
)
from .circles import coprime_arcs, intersection_measure
from .errors import CapExceededError, ConfigError, DomainError
from .psi import PsiFunction

# 2^(2^20) is already a ~315k-digit bound; nothing desk-scale lives beyond.
BLOCK_EXP_CAP = 1 << 20


def block_bounds(h: int, base: int = 4) -> tuple[int, int]:
    """[lo, hi) = [2^(base^h), 2^(base^(h+1))) for block index h."""
    if h < 0:
        raise DomainError("block index must be >= 0")
    if base < 2:
        raise DomainError("block base must be >= 2")
    exp_hi = base ** (h + 1)
    if exp_hi > BLOCK_EXP_CAP:
        raise CapExceededError(
            f"block bound 2^({exp_hi}) is beyond desk scale "
            f"(schedule.BLOCK_EXP_CAP); use a smaller base or h"
        )
    return 1 << (base ** h), 1 << exp_hi


def block_of(n: int, base: int = 4) -> int | None:
    """Index h of the block containing n; None for n < 2.

    Blocks tile [2, inf): hi(h) = lo(h+1), so every n >= 2 lands in
    exactly one.
    """
    if base < 2:
        raise DomainError("block base must be >= 2")
    if n < 2:
        return None
    h = 0
    while n >= (1 << base ** (h + 1)):
        h += 1
    return h


def scale_count(h: int, epsilon: RationalLike, precision: int = 128) -> int:
    """K(h) = max(1, floor(epsilon * h * ln 4)), certified.

    The floor is read off an interval enclosure and refuses to guess near
    integers (PrecisionGuardError).  h = 0 is allowed (the even-block
    pipeline needs it for small bases): the product is exactly 0 there, so
    K = 1 without any enclosure.
    """
    if h < 0:
        raise DomainError("block index must be >= 0")
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise DomainError("epsilon must be > 0")
    if h == 0:
        return 1
    c = epsilon * h
    lo, hi = log_bounds(4, precision)
    return max(1, guarded_floor(c * lo, c * hi))


@dataclass(frozen=True)
class BlockReport:
    """Outcome of scale selection on one block.

    per_k_sums rows are (k, sum of ê_k^2 * measure(scaled intersection),
    sum of measure * measure), all exact; chosen_k minimizes their ratio
    with ties to the smallest k.
    """

    h: int
    base: int
    lo: int
    hi: int
    epsilon: Fraction
    scale_count: int
    per_k_sums: tuple[tuple[int, Fraction, Fraction], ...]
    chosen_k: int
    pair_count: int
    seed: int | None = None

    def ratios(self) -> list[tuple[int, Fraction | None]]:
        return [
            (k, s1 / s2 if s2 else None) for k, s1, s2 in self.per_k_sums
        ]


def select_scale(
    h: int,
    psi: PsiFunction,
    epsilon: RationalLike,
    pairs: list[tuple[int, int]],
    base: int = 4,
    precision: int = 128,
    seed: int | None = None,
) -> BlockReport:
    """Pick the damping scale k minimizing the weighted overlap sums.

    For each k <= K(h) accumulates S1(k) = sum over pairs of
    ê_k^2 * measure(intersection of the ê_k-scaled arc systems) and the
    k-independent S2 = sum of products of unscaled measures; chosen_k is
    the argmin of S1(k)/S2 (equivalently of S1(k)), ties to smallest k.
    An empty pair list or S2 = 0 degenerates to chosen_k = 1.
    """
    lo, hi = block_bounds(h, base)
    epsilon = Fraction(epsilon)
    for m, n in pairs:
        if m == n:
            raise DomainError("block pairs must be distinct")
        if not (lo <= m < hi and lo <= n < hi):
            raise DomainError(
                f"pair ({m}, {n}) outside block [{lo}, {hi})"
            )
    top = scale_count(h, epsilon, precision)
    ladder = ScaleLadder.up_to(top)

    mu_cache: dict[int, Fraction] = {}

    def mu(x: int) -> Fraction:
        v = mu_cache.get(x)
        if v is None:
            v = coprime_arcs(x, psi.value(x)).measure()
            mu_cache[x] = v
        return v

    s2 = sum((mu(m) * mu(n) for m, n in pairs), Fraction(0))
    sums = []
    for k in range(1, top + 1):
        scale = ladder.scale(k)
        acc = Fraction(0)
        for m, n in pairs:
            a = coprime_arcs(m, psi.value(m) / scale)
            b = coprime_arcs(n, psi.value(n) / scale)
            acc += intersection_measure(a, b)
        sums.append((k, acc * scale * scale, s2))
    if not pairs or s2 == 0:
        chosen = 1
    else:
        chosen = min(sums, key=lambda row: (row[1], row[0]))[0]
    return BlockReport(
        h=h, base=base, lo=lo, hi=hi, epsilon=epsilon,
        scale_count=top, per_k_sums=tuple(sums), chosen_k=chosen,
        pair_count=len(pairs), seed=seed,
    )


def thinned_psi(
    psi: PsiFunction,
    epsilon: RationalLike,
    chosen: dict[int, int],
    base: int = 4,
    precision: int = 128,
) -> PsiFunction:
    """The even-block rescaled radius function.

    On even-h blocks the radius is divided by ê_{chosen[h]}; elsewhere it
    is 0.  The result is a final value table: its entries are used as-is
    for arc construction and must not be re-normalized (rescaling pushes
    radii below the 1/n drop threshold by design).
    """
    if not psi.normalized:
        raise DomainError("thinned_psi requires a normalized input")
    epsilon = Fraction(epsilon)
    table: dict[int, Fraction] = {}
    for n in range(2, psi.n_max + 1):
        h = block_of(n, base)
        if h is None or h % 2:
            continue
        v = psi.value(n)
        if v == 0:
            continue
        k = chosen.get(h)
        if k is None:
            raise ConfigError(f"no chosen scale for even block h = {h}")
        if not 1 <= k <= scale_count(h, epsilon, precision):
            raise ConfigError(
                f"chosen scale {k} outside 1..K({h}) for epsilon = {epsilon}"
            )
        table[n] = v / exp_rational(k)
    return PsiFunction(
        psi.n_max, f"thin:{psi.generator}", base=table, normalized=False
    )


def even_blocks_upto(n_max: int, base: int = 4) -> list[int]:
    """Even block indices whose blocks intersect [2, n_max]."""
    out = []
    h = 0
    while True:
        lo = 1 << base ** h
        if lo > n_max:
            break
        if h % 2 == 0:
            out.append(h)
        h += 1
    return out
