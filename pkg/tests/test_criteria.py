"""Jurisdiction mapping: completeness, identity, symmetry."""

from __future__ import annotations

import json

import pytest

from msalens.corpus import Jurisdiction
from msalens.criteria import (
    CRITERIA,
    AlignmentStatus,
    Criterion,
    load_mapping,
    load_mapping_file,
)
from msalens.errors import IncompleteMapping


@pytest.fixture(scope="module")
def mapping():
    return load_mapping_file()


@pytest.fixture()
def document():
    from importlib import resources

    return json.loads(
        resources.files("msalens.data").joinpath("jurisdiction_map.json").read_text("utf-8")
    )


def test_bundled_map_is_complete(mapping):
    for criterion in CRITERIA:
        for source in Jurisdiction:
            for target in Jurisdiction:
                alignment = mapping.alignment_status(criterion, source, target)
                assert alignment.status in AlignmentStatus
                assert alignment.citation


def test_nine_criteria_fixed_order(mapping):
    for jurisdiction in Jurisdiction:
        criteria = mapping.criteria_for(jurisdiction)
        assert len(criteria) == 9
        assert criteria[0] == Criterion.APPROVAL
        assert criteria == list(CRITERIA)


def test_flowchart_statuses(mapping):
    assert (
        mapping.alignment_status(Criterion.APPROVAL, Jurisdiction.AU, Jurisdiction.UK).status
        == AlignmentStatus.PERFECT
    )
    assert (
        mapping.alignment_status(
            Criterion.C4_RISK_MITIGATION, Jurisdiction.AU, Jurisdiction.UK
        ).status
        == AlignmentStatus.PARTIAL
    )


def test_identity_is_perfect(mapping):
    for criterion in CRITERIA:
        for jurisdiction in Jurisdiction:
            assert (
                mapping.alignment_status(criterion, jurisdiction, jurisdiction).status
                == AlignmentStatus.PERFECT
            )


def test_symmetry(mapping):
    for criterion in CRITERIA:
        for source in Jurisdiction:
            for target in Jurisdiction:
                forward = mapping.alignment_status(criterion, source, target)
                backward = mapping.alignment_status(criterion, target, source)
                assert forward.status == backward.status


def test_citation_is_source_law_text(mapping):
    alignment = mapping.alignment_status(Criterion.APPROVAL, Jurisdiction.AU, Jurisdiction.UK)
    assert alignment.citation == "Statement must be approved by the board."


def test_excluded_criteria_listed(mapping):
    assert len(mapping.excluded) == 3
    assert all(e.status == AlignmentStatus.NONE for e in mapping.excluded)
    assert any("Identify the reporting entity" in e.name for e in mapping.excluded)


def test_missing_cell_rejected(document):
    document["alignments"] = [
        a
        for a in document["alignments"]
        if not (a["criterion"] == "Signature" and sorted(a["pair"]) == ["AU", "CA"])
    ]
    with pytest.raises(IncompleteMapping) as excinfo:
        load_mapping(document)
    assert any("Signature" in cell for cell in excinfo.value.missing)


def test_duplicate_cell_rejected(document):
    document["alignments"].append(
        {"criterion": "Approval", "pair": ["AU", "UK"], "status": "perfect"}
    )
    with pytest.raises(IncompleteMapping) as excinfo:
        load_mapping(document)
    assert any("Approval" in cell for cell in excinfo.value.duplicates)
