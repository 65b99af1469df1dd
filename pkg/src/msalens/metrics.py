"""Evaluation and corpus analytics.

Per-criterion F1 and the nine-way overall average, reliability-curve
calibration (5 bins for the curve, 10 for ECE), Jensen-Shannon vocabulary
divergence in base-2 logs, per-criterion compliance fractions, and faceted
compliance trend tables.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import Sector, Statement, TurnoverBand
from .criteria import CRITERIA, Criterion
from .errors import EmptySlice

CURVE_BINS = 5
ECE_BINS = 10
VOCAB_SMOOTHING = 1e-9


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")


def f1(counts: ConfusionCounts) -> float:
    """F1 = 2tp / (2tp + fp + fn); 0.0 when the denominator is zero."""
    denom = 2 * counts.tp + counts.fp + counts.fn
    if denom == 0:
        return 0.0
    return 2 * counts.tp / denom


def overall_f1(per_criterion_scores: Sequence[float]) -> float:
    """Unweighted mean of the nine per-criterion scores."""
    if len(per_criterion_scores) != len(CRITERIA):
        raise ValueError(f"expected {len(CRITERIA)} scores, got {len(per_criterion_scores)}")
    return sum(per_criterion_scores) / len(per_criterion_scores)


@dataclass(frozen=True)
class CalibrationBin:
    mean_predicted: float
    fraction_positive: float
    count: int


@dataclass(frozen=True)
class CalibrationReport:
    curve: tuple[CalibrationBin, ...]  # occupied bins only, 5 uniform bins
    ece: float  # 10 uniform bins
    sample_count: int


def _bin_index(p: float, bins: int) -> int:
    return min(int(p * bins), bins - 1)


def calibration(
    probs: Sequence[float],
    labels: Sequence[int],
    curve_bins: int = CURVE_BINS,
    ece_bins: int = ECE_BINS,
) -> CalibrationReport:
    """Positive-class reliability binning over uniform probability bins.

    ECE is the bin-weighted mean absolute gap between mean predicted
    probability and the observed positive fraction; empty bins are skipped.
    """
    if len(probs) != len(labels):
        raise ValueError(f"length mismatch: {len(probs)} probs vs {len(labels)} labels")
    if not probs:
        raise ValueError("calibration needs at least one sample")
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability out of range: {p}")
    for y in labels:
        if y not in (0, 1, True, False):
            raise ValueError(f"label not binary: {y}")

    def bin_stats(bins: int) -> list[tuple[float, float, int]]:
        sums = [0.0] * bins
        positives = [0] * bins
        counts = [0] * bins
        for p, y in zip(probs, labels):
            b = _bin_index(p, bins)
            sums[b] += p
            positives[b] += int(y)
            counts[b] += 1
        return [
            (sums[b] / counts[b], positives[b] / counts[b], counts[b])
            for b in range(bins)
            if counts[b]
        ]

    curve = tuple(CalibrationBin(*stats) for stats in bin_stats(curve_bins))
    n = len(probs)
    ece = sum(
        (count / n) * abs(mean_p - frac_pos) for mean_p, frac_pos, count in bin_stats(ece_bins)
    )
    return CalibrationReport(curve=curve, ece=ece, sample_count=n)


@dataclass(frozen=True)
class VocabDistribution:
    """Token -> probability over a corpus slice; optional comparison-time smoothing."""

    probabilities: Mapping[str, float]
    epsilon: float = 0.0

    def __post_init__(self):
        if self.probabilities:
            total = sum(self.probabilities.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"probabilities sum to {total}, not 1")


_EDGE_PUNCT = re.compile(r"^[^\w]+|[^\w]+$")


def vocab_tokens(text: str) -> list[str]:
    """Lowercase whitespace tokens with punctuation stripped at token edges."""
    out = []
    for raw in text.lower().split():
        token = _EDGE_PUNCT.sub("", raw)
        if token:
            out.append(token)
    return out


def vocab_distribution(
    texts: Iterable[str],
    epsilon: float = VOCAB_SMOOTHING,
) -> VocabDistribution:
    """Normalized token distribution of a corpus slice.

    Raises EmptySlice when the slice has no tokens. The epsilon rides along
    and is applied over the union support when two distributions are compared.
    """
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(vocab_tokens(text))
    total = sum(counts.values())
    if total == 0:
        raise EmptySlice("corpus slice has no tokens")
    return VocabDistribution(
        probabilities={token: count / total for token, count in counts.items()},
        epsilon=epsilon,
    )


def label_conditioned_texts(
    sentences: Iterable[tuple[str, bool]],
    polarity: str,
) -> list[str]:
    """Filter (text, relevant) pairs by polarity: overall, positive, or negative."""
    if polarity not in ("overall", "positive", "negative"):
        raise ValueError(f"unknown polarity: {polarity}")
    if polarity == "overall":
        return [text for text, _ in sentences]
    want = polarity == "positive"
    return [text for text, relevant in sentences if relevant == want]


def corpus_vocab_distribution(
    items: Sequence["StatementPredictions"],
    criterion: Criterion | None = None,
    polarity: str = "overall",
    epsilon: float = VOCAB_SMOOTHING,
) -> VocabDistribution:
    """Token distribution of a corpus slice, optionally label-conditioned.

    With a criterion and polarity "positive"/"negative", only sentences whose
    relevance flag matches are counted. Raises EmptySlice when nothing
    remains.
    """
    if polarity != "overall" and criterion is None:
        raise ValueError("label-conditioned distributions need a criterion")
    pairs: list[tuple[str, bool]] = []
    for item in items:
        flags = item.relevance.get(criterion.value, ()) if criterion else ()
        for sentence in item.statement.sentences:
            relevant = bool(flags[sentence.index]) if sentence.index < len(flags) else False
            pairs.append((sentence.text, relevant))
    return vocab_distribution(label_conditioned_texts(pairs, polarity), epsilon=epsilon)


def js_divergence(p: VocabDistribution, q: VocabDistribution) -> float:
    """Jensen-Shannon divergence with base-2 logs, in [0, 1].

    Smoothing (the larger of the two distributions' epsilons) is added over
    the union support and renormalized before comparison; with epsilon 0 the
    computation is exact and disjoint supports give exactly 1.0.
    """
    support = sorted(set(p.probabilities) | set(q.probabilities))
    epsilon = max(p.epsilon, q.epsilon)

    def smoothed(dist: VocabDistribution) -> list[float]:
        values = [dist.probabilities.get(token, 0.0) + epsilon for token in support]
        total = sum(values)
        return [v / total for v in values]

    pv = smoothed(p)
    qv = smoothed(q)

    divergence = 0.0
    for pi, qi in zip(pv, qv):
        mi = 0.5 * (pi + qi)
        if pi > 0.0:
            divergence += 0.5 * pi * math.log2(pi / mi)
        if qi > 0.0:
            divergence += 0.5 * qi * math.log2(qi / mi)
    return min(max(divergence, 0.0), 1.0)


@dataclass(frozen=True)
class StatementPredictions:
    """A statement plus its per-criterion, per-sentence relevance booleans."""

    statement: Statement
    relevance: Mapping[str, Sequence[bool]]  # criterion value -> one flag per sentence

    def has_relevant(self, criterion: Criterion) -> bool:
        return any(self.relevance.get(criterion.value, ()))


def compliance_fraction(items: Sequence[StatementPredictions], criterion: Criterion) -> float:
    """Fraction of statements with at least one relevant sentence for the criterion."""
    if not items:
        return 0.0
    hits = sum(1 for item in items if item.has_relevant(criterion))
    return hits / len(items)


FACETS = ("sector", "turnover", "year")


@dataclass(frozen=True)
class TrendRow:
    facet_value: str
    statement_count: int
    fractions: Mapping[str, float]  # criterion value -> compliance fraction


@dataclass(frozen=True)
class TrendReport:
    facet: str
    rows: tuple[TrendRow, ...]
    missing_metadata: tuple[str, ...] = ()  # statement ids excluded from denominators

    def to_json(self) -> dict:
        return {
            "facet": self.facet,
            "criteria": [c.value for c in CRITERIA],
            "rows": [
                {
                    "facet_value": row.facet_value,
                    "statement_count": row.statement_count,
                    "fractions": dict(row.fractions),
                }
                for row in self.rows
            ],
            "missing_metadata": list(self.missing_metadata),
        }


def _facet_value(item: StatementPredictions, facet: str) -> str | None:
    md = item.statement.metadata
    if facet == "sector":
        return md.sector.value if md.sector else None
    if facet == "turnover":
        return md.turnover_band.value if md.turnover_band else None
    if facet == "year":
        return str(md.publication_year) if md.publication_year else None
    raise ValueError(f"unknown facet: {facet}")


def _facet_order(facet: str, values: Iterable[str]) -> list[str]:
    values = set(values)
    if facet == "sector":
        return [s.value for s in Sector if s.value in values]
    if facet == "turnover":
        return [b.value for b in TurnoverBand if b.value in values]
    return sorted(values)


def trend_report(items: Sequence[StatementPredictions], facet: str) -> TrendReport:
    """Per-facet-value compliance fractions, one column per criterion.

    Statements lacking the facet's metadata are listed in missing_metadata and
    excluded from every denominator; facet values with no statements are
    omitted entirely.
    """
    if facet not in FACETS:
        raise ValueError(f"facet must be one of {FACETS}")
    groups: dict[str, list[StatementPredictions]] = {}
    missing: list[str] = []
    for item in items:
        value = _facet_value(item, facet)
        if value is None:
            missing.append(item.statement.id)
            continue
        groups.setdefault(value, []).append(item)

    rows = []
    for value in _facet_order(facet, groups):
        members = groups[value]
        fractions = {c.value: compliance_fraction(members, c) for c in CRITERIA}
        rows.append(TrendRow(facet_value=value, statement_count=len(members), fractions=fractions))
    return TrendReport(facet=facet, rows=tuple(rows), missing_metadata=tuple(missing))
