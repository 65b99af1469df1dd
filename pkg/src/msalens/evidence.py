"""Evidence status for relevant sentences: implemented, future commitment, or negative.

Future commitments are detected by a cue-phrase rule (a future cue followed by
a verb slot, with no past-tense anchor earlier in the clause). Negative
evidence prefers a remote NLI backend scoring a deny-hypothesis against an
acknowledge-hypothesis at a lowered threshold; without a backend, a native
negation-cue rule scoped to criterion keywords takes over. Cue lexicons and
hypothesis templates ship as editable data files.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

import httpx

from .backends import RelevancePrediction
from .criteria import Criterion, default_mapping
from .errors import NotRelevant

DEFAULT_NEGATIVE_THRESHOLD = 0.35

_CLAUSE_SPLIT = re.compile(r"[,;:]")

# Common irregular past forms; regular pasts are caught by the -ed suffix rule.
_IRREGULAR_PAST = frozenset(
    "was were had did been undertook took made began held met found built sent gave "
    "put kept set ran led brought taught paid became underwent chose drew grew knew "
    "saw wrote said told won left felt".split()
)


class EvidenceLabel(str, Enum):
    IMPLEMENTED = "Implemented"
    FUTURE_COMMITMENT = "FutureCommitment"
    NEGATIVE_EVIDENCE = "NegativeEvidence"


@dataclass(frozen=True)
class Provenance:
    detector: str  # "future-cues" | "negative-nli" | "negative-cues" | "default"
    score: float
    cue: str | None = None
    fallback_used: bool = False
    conflict: bool = False  # both future and negative detectors fired


@dataclass(frozen=True)
class EvidenceStatus:
    label: EvidenceLabel
    provenance: Provenance


@dataclass(frozen=True)
class NliBackendConfig:
    endpoint: str
    threshold: float = DEFAULT_NEGATIVE_THRESHOLD
    timeout: float = 30.0

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("negative-evidence threshold must be in (0, 1)")


def _load_lines(name: str) -> list[str]:
    text = resources.files("msalens.data").joinpath(name).read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]


_future_cues: list[str] | None = None
_negation_cues: list[str] | None = None
_keywords: dict[str, list[str]] | None = None
_hypotheses: dict | None = None


def future_cues() -> list[str]:
    global _future_cues
    if _future_cues is None:
        _future_cues = sorted(_load_lines("future_cues.txt"), key=len, reverse=True)
    return _future_cues


def negation_cues() -> list[str]:
    global _negation_cues
    if _negation_cues is None:
        _negation_cues = sorted(_load_lines("negation_cues.txt"), key=len, reverse=True)
    return _negation_cues


def criterion_keywords(criterion: Criterion) -> list[str]:
    global _keywords
    if _keywords is None:
        text = resources.files("msalens.data").joinpath("criterion_keywords.json").read_text("utf-8")
        _keywords = json.loads(text)
    return _keywords[criterion.value]


def hypotheses_for(criterion: Criterion) -> tuple[str, str]:
    """(deny, acknowledge) hypothesis texts for one criterion."""
    global _hypotheses
    if _hypotheses is None:
        text = resources.files("msalens.data").joinpath("hypotheses.json").read_text("utf-8")
        _hypotheses = json.loads(text)
    entry = _hypotheses["overrides"].get(criterion.value)
    if entry is None:
        name = default_mapping().info(criterion).display_name.lower()
        entry = {
            key: template.replace("{criterion}", name)
            for key, template in _hypotheses["default"].items()
        }
    return entry["deny"], entry["acknowledge"]


def _tokenize(text: str) -> list[str]:
    return re.findall(r"\S+", text.lower())


def _is_past_tense(token: str) -> bool:
    word = token.strip(".,;:!?()\"'")
    if word in _IRREGULAR_PAST:
        return True
    return len(word) > 3 and word.endswith("ed") and not word.endswith("eed")


def _find_cue(text_lower: str, cues: list[str]) -> tuple[str, int] | None:
    """Earliest word-boundary cue occurrence; longer cues win ties."""
    best: tuple[str, int] | None = None
    for cue in cues:
        match = re.search(rf"(?<![\w]){re.escape(cue)}(?![\w])", text_lower)
        if match and (best is None or match.start() < best[1]):
            best = (cue, match.start())
    return best


def detect_future(sentence_text: str) -> tuple[bool, str | None]:
    """Does the sentence commit to a future action? Returns (fired, matched cue)."""
    lower = sentence_text.lower()
    hit = _find_cue(lower, future_cues())
    if hit is None:
        return False, None
    cue, position = hit

    after = lower[position + len(cue) :]
    verb_match = re.search(r"[a-z]+", after)
    if verb_match is None:
        return False, None

    clause_start = 0
    for sep in _CLAUSE_SPLIT.finditer(lower[:position]):
        clause_start = sep.end()
    preceding = _tokenize(lower[clause_start:position])
    if any(_is_past_tense(tok) for tok in preceding):
        return False, None
    return True, cue


def _negative_by_cues(sentence_text: str, criterion: Criterion) -> tuple[bool, str | None]:
    """Negation cue scoped to a criterion keyword in the same clause, within 8 words after it."""
    lower = sentence_text.lower()
    keywords = [k.lower() for k in criterion_keywords(criterion)]
    for clause in _CLAUSE_SPLIT.split(lower):
        hits: list[tuple[int, str]] = []
        for cue in negation_cues():
            for match in re.finditer(rf"(?<![\w]){re.escape(cue)}(?![\w])", clause):
                hits.append((match.start(), cue))
        for position, cue in sorted(hits):
            window = " ".join(_tokenize(clause[position + len(cue) :])[:8])
            scope = f"{cue} {window}"
            if any(re.search(rf"(?<![\w]){re.escape(k)}(?![\w])", scope) for k in keywords):
                return True, cue
    return False, None


class NliClient:
    """HTTP client for the two-hypothesis entailment protocol."""

    def __init__(self, config: NliBackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def deny_score(self, premise: str, criterion: Criterion) -> float:
        """Probability of the deny-hypothesis; raises httpx errors on failure."""
        deny, acknowledge = hypotheses_for(criterion)
        response = self._client.post(
            self.config.endpoint, json={"premise": premise, "hypotheses": [deny, acknowledge]}
        )
        response.raise_for_status()
        scores = response.json()["scores"]
        if len(scores) != 2 or not all(isinstance(s, (int, float)) for s in scores):
            raise ValueError(f"bad NLI scores: {scores!r}")
        if scores[0] + scores[1] > 1.0 + 1e-6:
            raise ValueError(f"NLI scores sum above 1: {scores!r}")
        return float(scores[0])


def detect_negative(
    sentence_text: str,
    criterion: Criterion,
    nli: NliClient | None = None,
) -> tuple[bool, float, Provenance]:
    """Does the sentence deny, downplay, or avoid the criterion?

    With an NLI backend the deny-hypothesis score is compared against the
    (closed) threshold. Backend failure falls back to the native cue rule and
    is recorded in provenance rather than raised.
    """
    if nli is not None:
        try:
            score = nli.deny_score(sentence_text, criterion)
            fired = score >= nli.config.threshold
            return fired, score, Provenance(detector="negative-nli", score=score)
        except (httpx.HTTPError, ValueError, KeyError, json.JSONDecodeError):
            fired, cue = _negative_by_cues(sentence_text, criterion)
            score = 1.0 if fired else 0.0
            return fired, score, Provenance(
                detector="negative-cues", score=score, cue=cue, fallback_used=True
            )
    fired, cue = _negative_by_cues(sentence_text, criterion)
    score = 1.0 if fired else 0.0
    return fired, score, Provenance(detector="negative-cues", score=score, cue=cue)


def evidence_status(
    sentence_text: str,
    criterion: Criterion,
    relevance: RelevancePrediction,
    nli: NliClient | None = None,
) -> EvidenceStatus:
    """Classify a relevant sentence's evidence status.

    Precedence: NegativeEvidence > FutureCommitment > Implemented (the
    default). Raises NotRelevant when the prediction is not relevant.
    """
    if not relevance.relevant:
        raise NotRelevant(
            f"evidence status requested for irrelevant cell "
            f"(sentence {relevance.sentence_index}, {criterion.value})"
        )
    negative, score, provenance = detect_negative(sentence_text, criterion, nli)
    future, cue = detect_future(sentence_text)
    if negative:
        return EvidenceStatus(
            label=EvidenceLabel.NEGATIVE_EVIDENCE,
            provenance=Provenance(
                detector=provenance.detector,
                score=provenance.score,
                cue=provenance.cue,
                fallback_used=provenance.fallback_used,
                conflict=future,
            ),
        )
    if future:
        return EvidenceStatus(
            label=EvidenceLabel.FUTURE_COMMITMENT,
            provenance=Provenance(detector="future-cues", score=1.0, cue=cue),
        )
    return EvidenceStatus(
        label=EvidenceLabel.IMPLEMENTED,
        provenance=Provenance(detector="default", score=0.0),
    )
