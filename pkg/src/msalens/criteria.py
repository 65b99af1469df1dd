"""The nine common reporting criteria and their cross-jurisdiction alignment.

The alignment table ships as a versioned data file so further legislations can
be added without code changes. Three AU-only criteria sit on an excluded list
(status "none") rather than being dropped silently, so coverage reports can
explain the gap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .corpus import Jurisdiction
from .errors import IncompleteMapping


class Criterion(str, Enum):
    """The nine reporting criteria common to the AU, UK and CA acts, in fixed order."""

    APPROVAL = "Approval"
    SIGNATURE = "Signature"
    C2_STRUCTURE = "C2_Structure"
    C2_OPERATIONS = "C2_Operations"
    C2_SUPPLY_CHAINS = "C2_SupplyChains"
    C3_RISK_DESCRIPTION = "C3_RiskDescription"
    C4_RISK_MITIGATION = "C4_RiskMitigation"
    C4_REMEDIATION = "C4_Remediation"
    C5_EFFECTIVENESS = "C5_Effectiveness"


CRITERIA: tuple[Criterion, ...] = tuple(Criterion)


class AlignmentStatus(str, Enum):
    PERFECT = "perfect"
    PARTIAL = "partial"
    NONE = "none"


@dataclass(frozen=True)
class CriterionInfo:
    key: Criterion
    display_name: str
    description: str
    citations: dict[str, str]


@dataclass(frozen=True)
class Alignment:
    criterion: Criterion
    source: Jurisdiction
    target: Jurisdiction
    status: AlignmentStatus
    citation: str


@dataclass(frozen=True)
class ExcludedCriterion:
    jurisdiction: Jurisdiction
    name: str
    status: AlignmentStatus
    note: str


def _pair_key(a: Jurisdiction, b: Jurisdiction) -> tuple[str, str]:
    return tuple(sorted((a.value, b.value)))  # type: ignore[return-value]


class JurisdictionMap:
    """Complete alignment table over the nine criteria and three jurisdictions."""

    def __init__(
        self,
        criteria: dict[Criterion, CriterionInfo],
        pair_status: dict[tuple[Criterion, tuple[str, str]], AlignmentStatus],
        excluded: list[ExcludedCriterion],
    ):
        self._criteria = criteria
        self._pair_status = pair_status
        self.excluded = excluded

    def info(self, criterion: Criterion) -> CriterionInfo:
        return self._criteria[criterion]

    def criteria_for(self, jurisdiction: Jurisdiction) -> list[Criterion]:
        """All nine common criteria in fixed order; the study scope is the same for every jurisdiction."""
        Jurisdiction(jurisdiction)
        return list(CRITERIA)

    def alignment_status(
        self, criterion: Criterion, source: Jurisdiction, target: Jurisdiction
    ) -> Alignment:
        criterion = Criterion(criterion)
        source = Jurisdiction(source)
        target = Jurisdiction(target)
        citation = self._criteria[criterion].citations[source.value]
        if source == target:
            status = AlignmentStatus.PERFECT
        else:
            status = self._pair_status[(criterion, _pair_key(source, target))]
        return Alignment(criterion=criterion, source=source, target=target, status=status, citation=citation)


def load_mapping(document: dict) -> JurisdictionMap:
    """Validate a mapping document and return a complete JurisdictionMap.

    Raises IncompleteMapping listing missing and duplicate (criterion, pair)
    cells; criterion records missing a jurisdiction citation are reported as
    missing cells too.
    """
    missing: list[str] = []
    duplicates: list[str] = []

    criteria: dict[Criterion, CriterionInfo] = {}
    for entry in document.get("criteria", []):
        key = Criterion(entry["key"])
        if key in criteria:
            duplicates.append(f"criterion {key.value}")
            continue
        criteria[key] = CriterionInfo(
            key=key,
            display_name=entry["display_name"],
            description=entry["description"],
            citations=dict(entry["citations"]),
        )
    for criterion in CRITERIA:
        if criterion not in criteria:
            missing.append(f"criterion {criterion.value}")
        else:
            for jur in Jurisdiction:
                if jur.value not in criteria[criterion].citations:
                    missing.append(f"citation ({criterion.value}, {jur.value})")

    pair_status: dict[tuple[Criterion, tuple[str, str]], AlignmentStatus] = {}
    for entry in document.get("alignments", []):
        criterion = Criterion(entry["criterion"])
        a, b = entry["pair"]
        key = (criterion, _pair_key(Jurisdiction(a), Jurisdiction(b)))
        if key in pair_status:
            duplicates.append(f"({criterion.value}, {key[1][0]}-{key[1][1]})")
            continue
        pair_status[key] = AlignmentStatus(entry["status"])

    jurisdictions = list(Jurisdiction)
    for criterion in CRITERIA:
        for i, a in enumerate(jurisdictions):
            for b in jurisdictions[i + 1 :]:
                if (criterion, _pair_key(a, b)) not in pair_status:
                    missing.append(f"({criterion.value}, {a.value}-{b.value})")

    if missing or duplicates:
        raise IncompleteMapping(missing=missing, duplicates=duplicates)

    excluded = [
        ExcludedCriterion(
            jurisdiction=Jurisdiction(entry["jurisdiction"]),
            name=entry["name"],
            status=AlignmentStatus(entry.get("status", "none")),
            note=entry.get("note", ""),
        )
        for entry in document.get("excluded", [])
    ]
    return JurisdictionMap(criteria=criteria, pair_status=pair_status, excluded=excluded)


def load_mapping_file(path: str | Path | None = None) -> JurisdictionMap:
    """Load the bundled default mapping, or an alternative file."""
    if path is None:
        text = resources.files("msalens.data").joinpath("jurisdiction_map.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return load_mapping(json.loads(text))


_default_map: JurisdictionMap | None = None


def default_mapping() -> JurisdictionMap:
    global _default_map
    if _default_map is None:
        _default_map = load_mapping_file()
    return _default_map


def criteria_for(jurisdiction: Jurisdiction) -> list[Criterion]:
    return default_mapping().criteria_for(jurisdiction)


def alignment_status(
    criterion: Criterion, source: Jurisdiction, target: Jurisdiction
) -> Alignment:
    return default_mapping().alignment_status(criterion, source, target)
