"""Batch experiment harness.

Holds the Borel-Cantelli second-moment ratio, the divergence comparison
table, deterministic pair sampling, the JSON experiment config, CSV
writers, and the config-driven runner with an optional worker pool.
"""

from __future__ import annotations

import csv
import json
import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .arith import (
    Approx,
    RationalLike,
    SCALE_CAP,
    exp_bounds,
    exp_rational,
    floored_log_bounds,
    pow_bounds,
    totient,
)
from .circles import coprime_arcs, intersection_measure
from .errors import (
    CapExceededError,
    ConfigError,
    DomainError,
    UndefinedRatioError,
)
from .overlap import CSV_COLUMNS, OverlapRecord, averaged_sum, overlap_record
from .psi import PsiFunction, make_psi, normalize_psi
from .schedule import (
    BlockReport,
    block_bounds,
    block_of,
    even_blocks_upto,
    scale_count,
    select_scale,
    thinned_psi,
)

# Desk-scale corpus caps; a config may override with an explicit "max_n".
PAIR_CAP_EXACT = 2000     # exhaustive pair corpora
PAIR_CAP_SAMPLED = 10_000 # sampled pair corpora
BC_CAP = 500              # exact Borel-Cantelli series
TABLE_CAP = 10_000        # divergence table length

# Exact partial sums near TABLE_CAP carry lcm-scale denominators whose
# decimal form exceeds CPython's default 4300-digit conversion guard.
# Raise the guard (never lower it; 0 means unlimited).
if 0 < sys.get_int_max_str_digits() < 100_000:
    sys.set_int_max_str_digits(100_000)


# ---------------------------------------------------------------------------
# Borel-Cantelli second-moment ratio

def borel_cantelli_ratio(
    psi: PsiFunction, n_top: int
) -> tuple[Fraction, list[tuple[int, Fraction, Fraction, Fraction | None]]]:
    """(Σ measure)² / Σ pairwise-intersection measures, exact.

    The second moment runs over ordered pairs (m, n) <= n_top with the
    diagonal contributing measure(E_n) itself.  Returns the final ratio
    and per-n partial rows (n, measure sum, second moment, ratio so far).
    By Cauchy-Schwarz the ratio always lies in [0, 1].
    """
    if n_top < 1:
        raise DomainError("borel_cantelli_ratio requires N >= 1")
    if not psi.normalized:
        raise DomainError("borel_cantelli_ratio requires a normalized psi")
    sets = []
    measure_sum = Fraction(0)
    second_moment = Fraction(0)
    rows = []
    for n in range(1, n_top + 1):
        e = coprime_arcs(n, psi.value(n))
        mu = e.measure()
        second_moment += mu  # diagonal term
        if mu > 0:
            for prev in sets:
                im = intersection_measure(prev, e)
                if im:
                    second_moment += 2 * im
        measure_sum += mu
        sets.append(e)
        ratio = (
            measure_sum * measure_sum / second_moment if second_moment else None
        )
        rows.append((n, measure_sum, second_moment, ratio))
    if second_moment == 0:
        raise UndefinedRatioError("all events have measure zero")
    return measure_sum * measure_sum / second_moment, rows


# ---------------------------------------------------------------------------
# divergence comparison table

@dataclass(frozen=True)
class DivergenceRow:
    n: int
    plain: Fraction          # Σ psi(n)·phi(n)/n, exact
    damped: Approx           # same sum divided by (ln n)^epsilon
    hpv: Approx              # divided by exp(c·ln n/ln ln n)
    bhhv: Approx             # divided by (ln n)^(epsilon·ln ln ln n)


def divergence_table(
    epsilon: RationalLike,
    n_top: int,
    psi: PsiFunction,
    precision: int = 128,
    hpv_c: RationalLike = 1,
    checkpoints: Sequence[int] | None = None,
) -> list[DivergenceRow]:
    """Partial sums of the divergence series under the competing damping
    factors, at the given checkpoints (default: powers of two and n_top).

    All logs follow the all-logs-positive convention max(1, ln x); the
    damped sums are certified enclosures, the plain sum is exact.
    """
    epsilon = Fraction(epsilon)
    hpv_c = Fraction(hpv_c)
    if n_top < 2:
        raise DomainError("divergence_table requires N >= 2")
    if epsilon <= 0 or hpv_c <= 0:
        raise DomainError("damping parameters must be > 0")
    if n_top > TABLE_CAP:
        raise CapExceededError(
            f"divergence table limited to {TABLE_CAP} (harness.TABLE_CAP); "
            f"needed {n_top}"
        )
    if checkpoints is None:
        checkpoints = sorted(
            {1 << j for j in range(1, n_top.bit_length()) if (1 << j) <= n_top}
            | {n_top}
        )
    else:
        checkpoints = sorted(set(checkpoints))
        if any(c < 1 or c > n_top for c in checkpoints):
            raise DomainError("checkpoints outside 1..N")
    marks = set(checkpoints)
    plain = Fraction(0)
    grid_bits = precision + 16      # rounding grid for the running bounds
    acc = {
        "damped": [Fraction(0), Fraction(0)],
        "hpv": [Fraction(0), Fraction(0)],
        "bhhv": [Fraction(0), Fraction(0)],
    }
    rows = []
    for n in range(1, n_top + 1):
        term = psi.value(n) * totient(n) / n
        plain += term
        if term:
            l1 = floored_log_bounds(n, precision)            # max(1, ln n)
            l2_lo, _ = floored_log_bounds(l1[0], precision)  # max(1, ln ln n)
            _, l2_hi = floored_log_bounds(l1[1], precision)
            # (ln n)^epsilon
            f_lo, f_hi = pow_bounds(l1[0], l1[1], epsilon, precision)
            _div_add(acc["damped"], term, f_lo, f_hi, grid_bits)
            # exp(c * ln n / ln ln n)
            f_lo, f_hi = exp_bounds(
                hpv_c * l1[0] / l2_hi, hpv_c * l1[1] / l2_lo, precision
            )
            _div_add(acc["hpv"], term, f_lo, f_hi, grid_bits)
            # (ln n)^(epsilon * ln ln ln n)
            l3_lo, _ = floored_log_bounds(l2_lo, precision)
            _, l3_hi = floored_log_bounds(l2_hi, precision)
            ll1_lo, _ = floored_log_bounds(l1[0], precision)
            _, ll1_hi = floored_log_bounds(l1[1], precision)
            f_lo, f_hi = exp_bounds(
                epsilon * l3_lo * ll1_lo, epsilon * l3_hi * ll1_hi, precision
            )
            _div_add(acc["bhhv"], term, f_lo, f_hi, grid_bits)
        if n in marks:
            rows.append(
                DivergenceRow(
                    n=n,
                    plain=plain,
                    damped=Approx.from_bounds(*acc["damped"]),
                    hpv=Approx.from_bounds(*acc["hpv"]),
                    bhhv=Approx.from_bounds(*acc["bhhv"]),
                )
            )
    return rows


def _div_add(
    acc: list[Fraction],
    term: Fraction,
    f_lo: Fraction,
    f_hi: Fraction,
    bits: int,
):
    # term > 0 divided by enclosure [f_lo, f_hi] of a factor >= 1.  The
    # running bounds are rounded outward onto a 2^-bits grid once their
    # denominators outgrow it: the factor endpoints carry ~160-bit odd
    # parts, and exact accumulation would compound them into rationals
    # with thousands of digits.  Outward rounding keeps the enclosure
    # valid and adds at most 2^-bits width per term.
    acc[0] += term / f_hi
    acc[1] += term / f_lo
    grid = 1 << bits
    if acc[0].denominator > grid:
        acc[0] = Fraction(math.floor(acc[0] * grid), grid)
    if acc[1].denominator > grid:
        acc[1] = Fraction(math.ceil(acc[1] * grid), grid)


# ---------------------------------------------------------------------------
# deterministic pair sampling

def sample_pairs(
    lo: int, hi: int, count: int, seed: int
) -> list[tuple[int, int]]:
    """`count` distinct sorted pairs (m < n) from [lo, hi), seeded.

    Deterministic for a given seed; the returned list is sorted so any
    later processing order is reproducible.
    """
    if not (1 <= lo < hi - 1):
        raise DomainError(f"sampling range [{lo}, {hi}) needs two elements")
    span = hi - lo
    available = span * (span - 1) // 2
    if count < 1 or count > available:
        raise ConfigError(
            f"cannot sample {count} distinct pairs from [{lo}, {hi})"
        )
    rng = random.Random(seed)
    seen: set[tuple[int, int]] = set()
    while len(seen) < count:
        m = rng.randrange(lo, hi)
        n = rng.randrange(lo, hi)
        if m == n:
            continue
        if m > n:
            m, n = n, m
        seen.add((m, n))
    return sorted(seen)


# ---------------------------------------------------------------------------
# experiment config

@dataclass(frozen=True)
class PairSweepSpec:
    mode: str                       # exhaustive | list | sample
    lo: int = 0
    hi: int = 0
    count: int = 0
    seed: int | None = None
    pairs: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class BlockSpec:
    base: int
    h_list: tuple[int, ...]
    epsilon: Fraction
    sample: int | None = None
    seed: int | None = None
    thinned: bool = False


@dataclass(frozen=True)
class TableSpec:
    epsilon: Fraction
    n_top: int
    hpv_c: Fraction = Fraction(1)


@dataclass(frozen=True)
class ExperimentConfig:
    psi: str
    k_top: int = 1
    precision: int = 128
    jobs: int = 1
    out: str | None = None
    with_integral: bool = False
    pair_sweep: PairSweepSpec | None = None
    blocks: BlockSpec | None = None
    bc_n: int | None = None
    table: TableSpec | None = None
    max_n: int | None = None

    def cap(self, default: int) -> int:
        return self.max_n if self.max_n is not None else default


def _as_fraction(value, where: str) -> Fraction:
    # exact numeric config values travel as strings (or ints)
    if isinstance(value, bool) or isinstance(value, float):
        raise ConfigError(f"{where}: expected an exact number as string, got {value!r}")
    try:
        return Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise ConfigError(f"{where}: {e}") from e


def _as_int(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a JSON config document into an ExperimentConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known = {
        "psi", "k_top", "precision", "jobs", "out", "with_integral",
        "pairs", "blocks", "bc_n", "table", "max_n",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    psi = doc.get("psi")
    if not isinstance(psi, str):
        raise ConfigError("config needs a psi generator string")
    k_top = _as_int(doc.get("k_top", 1), "k_top", 1)
    if k_top > SCALE_CAP:
        raise CapExceededError(f"k_top limited to {SCALE_CAP} (arith.SCALE_CAP)")
    precision = _as_int(doc.get("precision", 128), "precision", 8)
    jobs = _as_int(doc.get("jobs", 1), "jobs", 1)
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a path string")
    with_integral = doc.get("with_integral", False)
    if not isinstance(with_integral, bool):
        raise ConfigError("with_integral must be a boolean")
    max_n = doc.get("max_n")
    if max_n is not None:
        max_n = _as_int(max_n, "max_n", 2)

    pair_sweep = None
    if "pairs" in doc:
        p = doc["pairs"]
        if not isinstance(p, dict) or "mode" not in p:
            raise ConfigError("pairs must be an object with a mode")
        mode = p["mode"]
        if mode == "exhaustive":
            lo = _as_int(p.get("lo", 2), "pairs.lo", 1)
            hi = _as_int(p.get("hi", 0), "pairs.hi", lo + 2)
            pair_sweep = PairSweepSpec(mode=mode, lo=lo, hi=hi)
        elif mode == "sample":
            lo = _as_int(p.get("lo", 2), "pairs.lo", 1)
            hi = _as_int(p.get("hi", 0), "pairs.hi", lo + 2)
            count = _as_int(p.get("count", 0), "pairs.count", 1)
            if "seed" not in p:
                raise ConfigError("sampled pairs require a seed")
            seed = _as_int(p["seed"], "pairs.seed")
            pair_sweep = PairSweepSpec(
                mode=mode, lo=lo, hi=hi, count=count, seed=seed
            )
        elif mode == "list":
            raw = p.get("pairs")
            if not isinstance(raw, list) or not raw:
                raise ConfigError("pairs.pairs must be a nonempty list")
            pairs = []
            for item in raw:
                if (
                    not isinstance(item, list)
                    or len(item) != 2
                    or not all(isinstance(x, int) for x in item)
                ):
                    raise ConfigError(f"bad pair entry {item!r}")
                m, n = item
                if m == n or m < 1 or n < 1:
                    raise ConfigError(f"bad pair ({m}, {n})")
                pairs.append((min(m, n), max(m, n)))
            pair_sweep = PairSweepSpec(mode=mode, pairs=tuple(sorted(set(pairs))))
        else:
            raise ConfigError(f"unknown pairs mode {mode!r}")

    blocks = None
    if "blocks" in doc:
        b = doc["blocks"]
        if not isinstance(b, dict):
            raise ConfigError("blocks must be an object")
        base = _as_int(b.get("base", 4), "blocks.base", 2)
        h_raw = b.get("h_list")
        if not isinstance(h_raw, list) or not h_raw:
            raise ConfigError("blocks.h_list must be a nonempty list")
        h_list = tuple(sorted({_as_int(h, "blocks.h_list", 0) for h in h_raw}))
        eps = _as_fraction(b.get("epsilon", "1"), "blocks.epsilon")
        if eps <= 0:
            raise ConfigError("blocks.epsilon must be > 0")
        sample = b.get("sample")
        if sample is not None:
            sample = _as_int(sample, "blocks.sample", 1)
        seed = b.get("seed")
        if seed is not None:
            seed = _as_int(seed, "blocks.seed")
        thinned = b.get("thinned", False)
        if not isinstance(thinned, bool):
            raise ConfigError("blocks.thinned must be a boolean")
        blocks = BlockSpec(
            base=base, h_list=h_list, epsilon=eps,
            sample=sample, seed=seed, thinned=thinned,
        )

    bc_n = doc.get("bc_n")
    if bc_n is not None:
        bc_n = _as_int(bc_n, "bc_n", 1)

    table = None
    if "table" in doc:
        t = doc["table"]
        if not isinstance(t, dict):
            raise ConfigError("table must be an object")
        table = TableSpec(
            epsilon=_as_fraction(t.get("epsilon", "1"), "table.epsilon"),
            n_top=_as_int(t.get("n_top", 0), "table.n_top", 2),
            hpv_c=_as_fraction(t.get("hpv_c", "1"), "table.hpv_c"),
        )
        if table.epsilon <= 0 or table.hpv_c <= 0:
            raise ConfigError("table damping parameters must be > 0")

    if pair_sweep is None and blocks is None and bc_n is None and table is None:
        raise ConfigError(
            "config requests no work: add pairs, blocks, bc_n, or table"
        )
    return ExperimentConfig(
        psi=psi, k_top=k_top, precision=precision, jobs=jobs, out=out,
        with_integral=with_integral, pair_sweep=pair_sweep, blocks=blocks,
        bc_n=bc_n, table=table, max_n=max_n,
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return parse_config(doc)


# ---------------------------------------------------------------------------
# runner

@dataclass
class RunResult:
    summary: dict
    records: list[OverlapRecord] = field(default_factory=list)
    block_reports: list[BlockReport] = field(default_factory=list)
    bc_rows: list = field(default_factory=list)
    table_rows: list[DivergenceRow] = field(default_factory=list)
    csv_paths: list[str] = field(default_factory=list)


def _resolve_pairs(cfg: ExperimentConfig) -> list[tuple[int, int]]:
    spec = cfg.pair_sweep
    assert spec is not None
    if spec.mode == "list":
        limit = cfg.cap(PAIR_CAP_SAMPLED)
        worst = max(n for _, n in spec.pairs)
        if worst > limit:
            raise CapExceededError(
                f"pair list reaches n = {worst}, beyond the cap {limit} "
                f"(override with max_n)"
            )
        return list(spec.pairs)
    if spec.mode == "exhaustive":
        limit = cfg.cap(PAIR_CAP_EXACT)
        if spec.hi - 1 > limit:
            raise CapExceededError(
                f"exhaustive pairs up to {spec.hi - 1} exceed the cap {limit} "
                f"(sample instead, or override with max_n)"
            )
        return [
            (m, n)
            for m in range(spec.lo, spec.hi)
            for n in range(m + 1, spec.hi)
        ]
    limit = cfg.cap(PAIR_CAP_SAMPLED)
    if spec.hi - 1 > limit:
        raise CapExceededError(
            f"sampled pairs up to {spec.hi - 1} exceed the cap {limit} "
            f"(override with max_n)"
        )
    assert spec.seed is not None
    return sample_pairs(spec.lo, spec.hi, spec.count, spec.seed)


def _sweep_chunk(args) -> list[OverlapRecord]:
    psi, pairs, k_top, precision, with_integral = args
    out = []
    for m, n in pairs:
        for k in range(1, k_top + 1):
            out.append(
                overlap_record(m, n, psi, k, k_top, precision, with_integral)
            )
    return out


def run_pair_sweep(
    psi: PsiFunction, cfg: ExperimentConfig, pairs: list[tuple[int, int]]
) -> list[OverlapRecord]:
    """Overlap records for all pairs and k = 1..k_top, (m, n, k)-sorted.

    With jobs > 1 the pair list is chunked across a process pool; the
    final sort makes the output independent of scheduling.
    """
    if cfg.jobs > 1 and len(pairs) > 64:
        chunk_count = cfg.jobs * 4
        chunks = [pairs[i::chunk_count] for i in range(chunk_count)]
        payload = [
            (psi, chunk, cfg.k_top, cfg.precision, cfg.with_integral)
            for chunk in chunks
            if chunk
        ]
        records: list[OverlapRecord] = []
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for part in pool.map(_sweep_chunk, payload):
                records.extend(part)
    else:
        records = _sweep_chunk(
            (psi, pairs, cfg.k_top, cfg.precision, cfg.with_integral)
        )
    records.sort(key=lambda rec: (rec.m, rec.n, rec.k))
    return records


def _sweep_summary(records: list[OverlapRecord], k_top: int) -> dict:
    summary: dict = {"records": len(records)}
    if not records:
        return summary
    worst_ratio = None
    worst_pair = None
    sums: dict[tuple[int, int], Fraction] = {}
    classes: dict[str, int] = {}
    disjoint = 0
    for rec in records:
        ratio = rec.p_exact / rec.pv_product
        if worst_ratio is None or ratio > worst_ratio:
            worst_ratio = ratio
            worst_pair = (rec.m, rec.n, rec.k)
        key = (rec.m, rec.n)
        sums[key] = sums.get(key, Fraction(0)) + rec.p_exact
        classes[rec.threshold_class] = classes.get(rec.threshold_class, 0) + 1
        if rec.disjoint_pred:
            disjoint += 1
    max_avg_pair, max_avg = max(
        ((pair, total / k_top) for pair, total in sums.items()),
        key=lambda item: (item[1], item[0]),
    )
    summary["max_p_over_pv"] = worst_ratio
    summary["max_p_over_pv_at"] = worst_pair
    summary["max_mean_p"] = max_avg
    summary["max_mean_p_at"] = max_avg_pair
    summary["disjoint_predicted"] = disjoint
    summary["threshold_classes"] = dict(sorted(classes.items()))
    return summary


def _block_pairs(
    cfg: ExperimentConfig, h: int
) -> tuple[list[tuple[int, int]], bool]:
    spec = cfg.blocks
    assert spec is not None
    lo, hi = block_bounds(h, spec.base)
    exhaustive_limit = cfg.cap(PAIR_CAP_EXACT)
    if hi - 1 <= exhaustive_limit:
        return (
            [(m, n) for m in range(lo, hi) for n in range(m + 1, hi)],
            False,
        )
    sampled_limit = cfg.cap(PAIR_CAP_SAMPLED)
    if lo >= sampled_limit:
        raise CapExceededError(
            f"block h={h} starts at {lo}, beyond the sampled cap "
            f"{sampled_limit} (override with max_n)"
        )
    if spec.sample is None or spec.seed is None:
        raise ConfigError(
            f"block h={h} is too large for exhaustive pairs; "
            f"set blocks.sample and blocks.seed"
        )
    top = min(hi, sampled_limit + 1)
    return sample_pairs(lo, top, spec.sample, spec.seed), True


def _thinned_audit(
    psi_n: PsiFunction,
    spec: BlockSpec,
    chosen: dict[int, int],
    n_star: int,
    precision: int,
) -> tuple[PsiFunction, dict]:
    star = thinned_psi(psi_n, spec.epsilon, chosen, spec.base, precision)
    support = 0
    off_even_violations = 0
    value_violations = 0
    window_lo = None
    window_hi = None
    for n in range(1, n_star + 1):
        v = star.value(n)
        h = block_of(n, spec.base) if n >= 2 else None
        on_even = h is not None and h % 2 == 0 and h in chosen
        if v > 0:
            support += 1
            if not on_even:
                off_even_violations += 1
            else:
                k = chosen[h]
                if v != psi_n.value(n) / exp_rational(k):
                    value_violations += 1
                # ratio psi*(n)·(ln n)^eps / psi(n) = (ln n)^eps / ê_k
                l1 = floored_log_bounds(n, precision)
                p_lo, p_hi = pow_bounds(l1[0], l1[1], spec.epsilon, precision)
                lo = p_lo / exp_rational(k)
                hi = p_hi / exp_rational(k)
                window_lo = lo if window_lo is None or lo < window_lo else window_lo
                window_hi = hi if window_hi is None or hi > window_hi else window_hi
        elif on_even and psi_n.value(n) > 0:
            value_violations += 1
    audit = {
        "support": support,
        "off_even_violations": off_even_violations,
        "value_violations": value_violations,
        "ratio_window": (window_lo, window_hi),
    }
    return star, audit


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Execute every part the config requests; see README for the schema.

    Returns all data in memory; CSV files are written when cfg.out is set
    (pair sweep at out itself, other sections at out-derived names).
    """
    needs = [2]
    if cfg.pair_sweep is not None:
        if cfg.pair_sweep.mode == "list":
            needs.append(max(n for _, n in cfg.pair_sweep.pairs))
        else:
            needs.append(cfg.pair_sweep.hi - 1)
    if cfg.blocks is not None:
        for h in cfg.blocks.h_list:
            needs.append(
                min(
                    block_bounds(h, cfg.blocks.base)[1] - 1,
                    cfg.cap(PAIR_CAP_SAMPLED),
                )
            )
    if cfg.bc_n is not None:
        needs.append(cfg.bc_n)
    if cfg.table is not None:
        needs.append(cfg.table.n_top)
    n_eff = max(needs)
    psi_n = normalize_psi(make_psi(cfg.psi, n_eff))

    result = RunResult(summary={"psi": cfg.psi, "k_top": cfg.k_top})
    out_path = Path(cfg.out) if cfg.out else None

    if cfg.pair_sweep is not None:
        pairs = _resolve_pairs(cfg)
        records = run_pair_sweep(psi_n, cfg, pairs)
        result.records = records
        result.summary["sweep"] = _sweep_summary(records, cfg.k_top)
        if cfg.pair_sweep.mode == "sample":
            result.summary["sweep"]["seed"] = cfg.pair_sweep.seed
        if out_path is not None:
            write_csv(
                out_path, CSV_COLUMNS, [rec.csv_row() for rec in records]
            )
            result.csv_paths.append(str(out_path))

    if cfg.blocks is not None:
        spec = cfg.blocks
        chosen: dict[int, int] = {}
        for h in spec.h_list:
            pairs, sampled = _block_pairs(cfg, h)
            report = select_scale(
                h, psi_n, spec.epsilon, pairs, spec.base, cfg.precision,
                seed=spec.seed if sampled else None,
            )
            result.block_reports.append(report)
            chosen[h] = report.chosen_k
        result.summary["blocks"] = {
            "base": spec.base,
            "epsilon": spec.epsilon,
            "chosen": {h: chosen[h] for h in spec.h_list},
        }
        if spec.thinned:
            n_star = min(
                max(block_bounds(h, spec.base)[1] for h in spec.h_list) - 1,
                cfg.cap(PAIR_CAP_SAMPLED),
            )
            needed = even_blocks_upto(n_star, spec.base)
            missing = [h for h in needed if h not in chosen]
            if missing:
                raise ConfigError(
                    f"thinned psi needs chosen scales for even blocks {missing}; "
                    f"add them to blocks.h_list"
                )
            star, audit = _thinned_audit(
                psi_n, spec, chosen, n_star, cfg.precision
            )
            audit["n_star"] = n_star
            result.summary["thinned"] = audit
        if out_path is not None:
            rows = []
            for rep in result.block_reports:
                for k, s1, s2 in rep.per_k_sums:
                    rows.append([
                        str(rep.h), str(rep.base), str(rep.lo), str(rep.hi),
                        _frac_str(rep.epsilon), str(rep.scale_count), str(k),
                        _frac_str(s1), _frac_str(s2),
                        _frac_str(s1 / s2) if s2 else "",
                        str(rep.chosen_k),
                    ])
            path = _derived_path(out_path, "blocks")
            write_csv(
                path,
                ("h", "base", "lo", "hi", "epsilon", "K", "k",
                 "weighted_intersections", "measure_products", "ratio",
                 "chosen_k"),
                rows,
            )
            result.csv_paths.append(str(path))

    if cfg.bc_n is not None:
        limit = cfg.cap(BC_CAP)
        if cfg.bc_n > limit:
            raise CapExceededError(
                f"bc series limited to N <= {limit} (harness.BC_CAP; "
                f"override with max_n)"
            )
        ratio, rows = borel_cantelli_ratio(psi_n, cfg.bc_n)
        result.bc_rows = rows
        result.summary["bc"] = {"n": cfg.bc_n, "ratio": ratio}
        if out_path is not None:
            path = _derived_path(out_path, "bc")
            write_csv(
                path,
                ("n", "measure_sum", "second_moment", "ratio"),
                [
                    [
                        str(n), _frac_str(ms), _frac_str(sm),
                        _frac_str(rt) if rt is not None else "",
                    ]
                    for n, ms, sm, rt in rows
                ],
            )
            result.csv_paths.append(str(path))

    if cfg.table is not None:
        rows = divergence_table(
            cfg.table.epsilon, cfg.table.n_top, psi_n,
            cfg.precision, cfg.table.hpv_c,
        )
        result.table_rows = rows
        result.summary["table"] = {
            "epsilon": cfg.table.epsilon,
            "n_top": cfg.table.n_top,
            "plain_final": rows[-1].plain if rows else None,
        }
        if out_path is not None:
            path = _derived_path(out_path, "table")
            write_csv(path, TABLE_COLUMNS, [table_csv_row(r) for r in rows])
            result.csv_paths.append(str(path))

    return result


TABLE_COLUMNS = (
    "n", "plain", "damped_value", "damped_err", "hpv_value", "hpv_err",
    "bhhv_value", "bhhv_err",
)


def table_csv_row(row: DivergenceRow) -> list[str]:
    return [
        str(row.n), _frac_str(row.plain),
        _frac_str(row.damped.value), _frac_str(row.damped.err),
        _frac_str(row.hpv.value), _frac_str(row.hpv.err),
        _frac_str(row.bhhv.value), _frac_str(row.bhhv.err),
    ]


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _derived_path(out: Path, tag: str) -> Path:
    return out.with_name(f"{out.stem}.{tag}{out.suffix or '.csv'}")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[str]]):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
