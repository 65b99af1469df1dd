"""Statement ingestion: rule-based sentence segmentation and balanced context windows.

Statements arrive as pre-extracted plain text (PDF/OCR handling happens
upstream). Segmentation is deterministic: terminal punctuation followed by
whitespace and an uppercase letter or digit ends a sentence, newline-prefixed
bullet markers start one, and a small abbreviation guard list suppresses
false splits.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .errors import EmptyDocument, IndexOutOfRange, InvalidMetadata, TooLong

MAX_SENTENCES = 200

DEFAULT_CONTEXT_BUDGETS = (0, 100, 200, 500)
DEFAULT_CONTEXT_BUDGET = 100

EARLIEST_YEAR = 2015

# Tokens (lowercased, trailing period included) that never end a sentence.
ABBREVIATIONS = frozenset(
    {
        "ltd.", "inc.", "plc.", "no.", "u.k.", "u.s.", "u.n.", "co.", "corp.",
        "pty.", "llc.", "mr.", "ms.", "mrs.", "dr.", "st.", "vs.", "etc.",
        "e.g.", "i.e.", "approx.", "dept.", "fig.", "sec.",
    }
)

_BULLET_RE = re.compile(r"\n[ \t]*(?:[-•*][ \t]|\d{1,3}\.[ \t])")


class Jurisdiction(str, Enum):
    AU = "AU"
    UK = "UK"
    CA = "CA"


class Sector(str, Enum):
    INDUSTRY_INFRASTRUCTURE = "IndustryInfrastructure"
    COMMERCE_SERVICES = "CommerceServices"
    PUBLIC_HEALTHCARE = "PublicHealthcare"
    OTHER = "Other"


class TurnoverBand(str, Enum):
    """Annual turnover bands in £M; the first band sits below the UK reporting threshold."""

    BELOW_36M = "<36M"
    FROM_36M_TO_100M = "36-100M"
    FROM_100M_TO_500M = "100-500M"
    ABOVE_500M = ">500M"

    @property
    def order(self) -> int:
        return _TURNOVER_ORDER[self]


_TURNOVER_ORDER = {band: i for i, band in enumerate(TurnoverBand)}

_SECTOR_ALIASES = {
    "industryinfrastructure": Sector.INDUSTRY_INFRASTRUCTURE,
    "industry & infrastructure": Sector.INDUSTRY_INFRASTRUCTURE,
    "industry and infrastructure": Sector.INDUSTRY_INFRASTRUCTURE,
    "commerceservices": Sector.COMMERCE_SERVICES,
    "commerce & services": Sector.COMMERCE_SERVICES,
    "commerce and services": Sector.COMMERCE_SERVICES,
    "publichealthcare": Sector.PUBLIC_HEALTHCARE,
    "public & healthcare": Sector.PUBLIC_HEALTHCARE,
    "public and healthcare": Sector.PUBLIC_HEALTHCARE,
    "other": Sector.OTHER,
}


def parse_sector(value: str) -> Sector:
    try:
        return Sector(value)
    except ValueError:
        pass
    key = value.strip().lower()
    if key in _SECTOR_ALIASES:
        return _SECTOR_ALIASES[key]
    raise InvalidMetadata(f"unknown sector: {value!r}")


def parse_turnover_band(value: str) -> TurnoverBand:
    try:
        return TurnoverBand(value)
    except ValueError:
        raise InvalidMetadata(f"unknown turnover band: {value!r}") from None


@dataclass(frozen=True)
class StatementMetadata:
    jurisdiction: Jurisdiction
    sector: Sector
    turnover_band: TurnoverBand
    publication_year: int
    company_id: str = ""

    def __post_init__(self):
        if self.publication_year < EARLIEST_YEAR:
            raise InvalidMetadata(
                f"publication_year {self.publication_year} predates the earliest MSA ({EARLIEST_YEAR})"
            )


@dataclass(frozen=True)
class Sentence:
    index: int
    span: tuple[int, int]
    text: str
    word_count: int


@dataclass(frozen=True)
class Statement:
    id: str
    raw_text: str
    sentences: tuple[Sentence, ...]
    metadata: StatementMetadata


@dataclass(frozen=True)
class ContextWindow:
    target_index: int
    before_text: str
    after_text: str
    budget: int


def _words(text: str) -> list[str]:
    """A word is a maximal run of non-whitespace characters."""
    return text.split()


def _is_abbreviation(text: str, period_index: int) -> bool:
    """True if the non-whitespace run ending at text[period_index] is a guarded abbreviation."""
    match = re.search(r"\S+$", text[: period_index + 1])
    if match is None:
        return False
    token = match.group().lstrip("([{'\"“‘")
    return token.lower() in ABBREVIATIONS


def _is_numbered_bullet(text: str, period_index: int) -> bool:
    """True if the token ending at text[period_index] is an 'N.' list marker at line start."""
    match = re.search(r"\S+$", text[: period_index + 1])
    if match is None:
        return False
    token = match.group()
    if not token[:-1].isdigit() or token[-1] != ".":
        return False
    line_start = text.rfind("\n", 0, match.start()) + 1
    return text[line_start : match.start()].strip(" \t") == ""


def _terminal_break_positions(text: str) -> Iterator[int]:
    """Yield indices where a new sentence starts after '.', '!' or '?'."""
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in ".!?":
            continue
        j = i + 1
        if j < n and text[j] in ".!?":
            continue  # break only after the last char of a terminal run
        if ch == "." and (_is_abbreviation(text, i) or _is_numbered_bullet(text, i)):
            continue
        if j >= n or not text[j].isspace():
            continue
        k = j
        while k < n and text[k].isspace():
            k += 1
        if k < n and (text[k].isupper() or text[k].isdigit()):
            yield k


def _bullet_break_positions(text: str) -> Iterator[int]:
    """Yield indices of bullet markers ('-', '•', '*', 'N.') that follow a newline."""
    for match in _BULLET_RE.finditer(text):
        marker_start = match.start() + 1
        while text[marker_start] in " \t":
            marker_start += 1
        yield marker_start


def segment(raw_text: str) -> list[Sentence]:
    """Split raw statement text into ordered sentences with character spans.

    Spans cover the trimmed sentence text and partition the non-whitespace
    content, so concatenating sentence texts and collapsing whitespace
    reproduces the whitespace-collapsed input.

    Raises EmptyDocument if no sentence can be produced.
    """
    if not raw_text or not raw_text.strip():
        raise EmptyDocument("document is empty after whitespace normalization")

    breaks = sorted(set(_terminal_break_positions(raw_text)) | set(_bullet_break_positions(raw_text)))
    bounds = [0, *breaks, len(raw_text)]

    sentences: list[Sentence] = []
    for start, end in zip(bounds, bounds[1:]):
        chunk = raw_text[start:end]
        stripped = chunk.strip()
        if not stripped:
            continue  # zero-word segment: merge forward by skipping the boundary
        lead = len(chunk) - len(chunk.lstrip())
        span = (start + lead, start + lead + len(stripped))
        sentences.append(
            Sentence(
                index=len(sentences),
                span=span,
                text=stripped,
                word_count=len(_words(stripped)),
            )
        )
    if not sentences:
        raise EmptyDocument("document is empty after whitespace normalization")
    return sentences


def content_id(raw_text: str) -> str:
    """Deterministic statement id derived from the raw text."""
    return hashlib.sha256(raw_text.encode("utf-8")).hexdigest()[:16]


def ingest_statement(
    raw_text: str, metadata: StatementMetadata, statement_id: str | None = None
) -> Statement:
    """Segment raw text and wrap it as a Statement.

    Raises TooLong when segmentation yields more than MAX_SENTENCES sentences,
    mirroring the corpus construction cap.
    """
    sentences = segment(raw_text)
    if len(sentences) > MAX_SENTENCES:
        raise TooLong(len(sentences), MAX_SENTENCES)
    return Statement(
        id=statement_id or content_id(raw_text),
        raw_text=raw_text,
        sentences=tuple(sentences),
        metadata=metadata,
    )


def build_context(statement: Statement, target_index: int, budget: int) -> ContextWindow:
    """Build a word-budgeted context window around a target sentence.

    The budget is split evenly before/after the target; when one side runs out
    of document, the deficit spills to the other side. The target sentence's
    own words never count against the budget. Context is taken word-by-word,
    cutting through neighboring sentences.
    """
    if target_index < 0 or target_index >= len(statement.sentences):
        raise IndexOutOfRange(f"sentence index {target_index} out of range")
    if budget < 0:
        raise ValueError("budget must be >= 0")

    before_words: list[str] = []
    for sent in statement.sentences[:target_index]:
        before_words.extend(_words(sent.text))
    after_words: list[str] = []
    for sent in statement.sentences[target_index + 1 :]:
        after_words.extend(_words(sent.text))

    take_before = min(len(before_words), budget // 2)
    take_after = min(len(after_words), budget - take_before)
    take_before = min(len(before_words), budget - take_after)

    return ContextWindow(
        target_index=target_index,
        before_text=" ".join(before_words[len(before_words) - take_before :]) if take_before else "",
        after_text=" ".join(after_words[:take_after]),
        budget=budget,
    )


def sentence_in_context(statement: Statement, window: ContextWindow) -> str:
    """The target sentence embedded in its context window, space-joined."""
    target = statement.sentences[window.target_index].text
    parts = [p for p in (window.before_text, target, window.after_text) if p]
    return " ".join(parts)


def metadata_from_record(record: dict) -> StatementMetadata:
    try:
        jurisdiction = Jurisdiction(record["jurisdiction"])
    except (KeyError, ValueError) as exc:
        raise InvalidMetadata(f"bad jurisdiction in record: {exc}") from None
    for key in ("sector", "turnover_band", "year"):
        if key not in record:
            raise InvalidMetadata(f"missing metadata field {key!r}")
    return StatementMetadata(
        jurisdiction=jurisdiction,
        sector=parse_sector(record["sector"]),
        turnover_band=parse_turnover_band(record["turnover_band"]),
        publication_year=int(record["year"]),
        company_id=str(record.get("company_id", "")),
    )


def statement_from_record(record: dict) -> Statement:
    """Build a Statement from one parsed JSONL record."""
    if "text" not in record or not isinstance(record["text"], str):
        raise InvalidMetadata("record is missing a 'text' field")
    metadata = metadata_from_record(record)
    return ingest_statement(record["text"], metadata, statement_id=record.get("id"))


def iter_statement_records(lines: Iterable[str]) -> Iterator[tuple[int, dict | None, str | None]]:
    """Parse JSONL lines into records, yielding (line_number, record, error)."""
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, None, f"invalid JSON: {exc}"
            continue
        if not isinstance(record, dict):
            yield lineno, None, "record is not an object"
            continue
        yield lineno, record, None
