"""Listening-test analysis: listener filtering, box stats, pairwise tests.

Ratings are 0-100 in steps of 10. A listener fails a screen when the
hidden reference is not rated strictly higher than every other system on
that screen (ties count as failures); listeners failing more than half
their screens are rejected. Pairwise comparisons are two-sided Welch
t-tests on per-listener mean ratings, Holm-Bonferroni corrected.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import betainc

ALPHA = 0.05
VALID_RATINGS = frozenset(range(0, 101, 10))


class RatingError(ValueError):
    """Malformed rating rows or screens."""


@dataclass(frozen=True)
class RatingRecord:
    listener_id: str
    screen_id: str
    system: str
    rating: int
    is_hidden_reference: bool = False

    def __post_init__(self):
        if self.rating not in VALID_RATINGS:
            raise RatingError(f"rating must be one of 0,10,...,100, got {self.rating}")


def load_ratings_csv(path) -> list[RatingRecord]:
    """Rows: listener_id,screen_id,system,rating,is_hidden_reference."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"listener_id", "screen_id", "system", "rating", "is_hidden_reference"}
        if reader.fieldnames is None or not needed <= set(reader.fieldnames):
            raise RatingError(f"{path}: header must contain {sorted(needed)}")
        for lineno, row in enumerate(reader, 2):
            try:
                records.append(RatingRecord(
                    listener_id=row["listener_id"],
                    screen_id=row["screen_id"],
                    system=row["system"],
                    rating=int(row["rating"]),
                    is_hidden_reference=row["is_hidden_reference"].strip().lower()
                    in ("1", "true", "yes"),
                ))
            except (ValueError, RatingError) as exc:
                raise RatingError(f"{path} line {lineno}: {exc}") from None
    return records


def filter_listeners(records: list[RatingRecord]) -> tuple[list[str], list[str]]:
    """Keep listeners who rank the hidden reference strictly highest on
    more than half of their screens. Returns (kept, rejected), sorted."""
    by_listener_screen: dict[tuple[str, str], list[RatingRecord]] = defaultdict(list)
    for rec in records:
        by_listener_screen[(rec.listener_id, rec.screen_id)].append(rec)

    screens_by_listener: dict[str, list[tuple[str, bool]]] = defaultdict(list)
    for (listener, screen), rows in sorted(by_listener_screen.items()):
        refs = [r for r in rows if r.is_hidden_reference]
        others = [r for r in rows if not r.is_hidden_reference]
        if len(refs) != 1:
            raise RatingError(f"listener {listener!r} screen {screen!r} has "
                              f"{len(refs)} hidden-reference rows, expected exactly 1")
        if not others:
            raise RatingError(f"listener {listener!r} screen {screen!r} has no "
                              f"non-reference systems")
        failed = any(r.rating >= refs[0].rating for r in others)  # ties fail
        screens_by_listener[listener].append((screen, failed))

    kept, rejected = [], []
    for listener in sorted(screens_by_listener):
        screens = screens_by_listener[listener]
        failures = sum(1 for _, failed in screens if failed)
        (rejected if failures / len(screens) > 0.5 else kept).append(listener)
    return kept, rejected


def welch_t_test(a, b) -> tuple[float, float]:
    """Two-sided Welch t-test: statistic and p-value.

    Welch-Satterthwaite degrees of freedom; p from the regularized
    incomplete beta form of the Student-t survival function.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise RatingError(f"need >= 2 observations per side, got {len(a)}, {len(b)}")
    va = a.var(ddof=1) / len(a)
    vb = b.var(ddof=1) / len(b)
    denom = np.sqrt(va + vb)
    if denom == 0.0:
        return 0.0, 1.0
    t = (a.mean() - b.mean()) / denom
    df = (va + vb) ** 2 / (va ** 2 / (len(a) - 1) + vb ** 2 / (len(b) - 1))
    p = betainc(df / 2.0, 0.5, df / (df + t * t))  # two-sided
    return float(t), float(min(1.0, p))


def holm_bonferroni(pvals) -> np.ndarray:
    """Step-down adjusted p-values, returned in the input order.

    adjusted_(i) = max_{j<=i} min(1, (m-j+1) * p_(j)) over the ascending
    order; monotone non-decreasing in that order and permutation invariant.
    """
    p = np.asarray(pvals, dtype=np.float64)
    m = len(p)
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p[idx]))
        adjusted[idx] = running
    return adjusted


@dataclass
class SystemSummary:
    system: str
    n: int
    mean: float
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: list[float] = field(default_factory=list)


@dataclass
class PairwiseTest:
    system_a: str
    system_b: str
    t: float
    p_raw: float
    p_adjusted: float
    significant: bool


@dataclass
class MushraSummary:
    systems: list[SystemSummary]
    pairwise: list[PairwiseTest]
    kept_listeners: list[str]
    rejected_listeners: list[str]

    def to_doc(self) -> dict:
        return {"systems": [vars(s) for s in self.systems],
                "pairwise": [vars(p) for p in self.pairwise],
                "kept_listeners": self.kept_listeners,
                "rejected_listeners": self.rejected_listeners}


def _box_stats(system: str, values: np.ndarray) -> SystemSummary:
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    outliers = sorted(float(v) for v in values[(values < lo_fence) | (values > hi_fence)])
    return SystemSummary(system=system, n=len(values), mean=float(values.mean()),
                         q1=float(q1), median=float(median), q3=float(q3),
                         whisker_low=float(inside.min()), whisker_high=float(inside.max()),
                         outliers=outliers)


def mushra_analyze(records: list[RatingRecord], alpha: float = ALPHA,
                   prefiltered: bool = False) -> MushraSummary:
    """Filter listeners, then summarize and test all system pairs.

    Hidden-reference rows are used for filtering and reported like any
    other system. Tests run on per-listener mean ratings per system.
    """
    if prefiltered:
        kept = sorted({r.listener_id for r in records})
        rejected = []
    else:
        kept, rejected = filter_listeners(records)
    kept_set = set(kept)
    usable = [r for r in records if r.listener_id in kept_set]
    if len(kept) < 2:
        raise RatingError(f"need >= 2 valid listeners, have {len(kept)}")

    by_system: dict[str, list[int]] = defaultdict(list)
    per_listener: dict[str, dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
    for r in usable:
        by_system[r.system].append(r.rating)
        per_listener[r.system][r.listener_id].append(r.rating)
    systems = sorted(by_system)
    if len(systems) < 2:
        raise RatingError(f"need >= 2 systems, have {systems}")
    for sys_name, vals in by_system.items():
        if len(vals) < 2:
            raise RatingError(f"system {sys_name!r} has fewer than 2 observations")

    summaries = [_box_stats(s, np.array(by_system[s], dtype=np.float64)) for s in systems]

    listener_means = {
        s: np.array([np.mean(per_listener[s][l]) for l in sorted(per_listener[s])])
        for s in systems}
    pairs = [(a, b) for i, a in enumerate(systems) for b in systems[i + 1:]]
    raw = []
    stats = []
    for a, b in pairs:
        t, p = welch_t_test(listener_means[a], listener_means[b])
        stats.append(t)
        raw.append(p)
    adjusted = holm_bonferroni(raw) if raw else np.array([])
    pairwise = [PairwiseTest(system_a=a, system_b=b, t=stats[i], p_raw=raw[i],
                             p_adjusted=float(adjusted[i]),
                             significant=bool(adjusted[i] <= alpha))
                for i, (a, b) in enumerate(pairs)]
    return MushraSummary(systems=summaries, pairwise=pairwise,
                         kept_listeners=kept, rejected_listeners=rejected)
