"""Synthetic separable corpus for training sanity checks and demos.

Each criterion gets a planted keyword; positives contain it, fillers do not,
so a working classifier must reach near-perfect held-out F1.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .criteria import CRITERIA, Criterion
from .model import TrainingExample

PLANTED_KEYWORDS: dict[Criterion, str] = {
    Criterion.APPROVAL: "approved",
    Criterion.SIGNATURE: "signed",
    Criterion.C2_STRUCTURE: "subsidiaries",
    Criterion.C2_OPERATIONS: "operations",
    Criterion.C2_SUPPLY_CHAINS: "suppliers",
    Criterion.C3_RISK_DESCRIPTION: "risks",
    Criterion.C4_RISK_MITIGATION: "audits",
    Criterion.C4_REMEDIATION: "remediation",
    Criterion.C5_EFFECTIVENESS: "effectiveness",
}

_FILLER = (
    "the company during period reporting year group team members staff office global "
    "market sector customers clients products services quality annual report section "
    "overview commitment values culture people communities partners programs initiatives "
    "standards framework charter governance leadership management strategy growth "
    "performance results summary update information details disclosure statement"
).split()


def _labels_for(tokens: list[str]) -> dict[str, bool]:
    present = set(tokens)
    return {c.value: PLANTED_KEYWORDS[c] in present for c in CRITERIA}


def generate_separable_corpus(
    sentences_per_criterion: int = 500, seed: int = 0
) -> list[TrainingExample]:
    """Half of each criterion's sentences carry its keyword; the rest are filler."""
    rng = np.random.default_rng(seed)
    examples: list[TrainingExample] = []
    for criterion in CRITERIA:
        keyword = PLANTED_KEYWORDS[criterion]
        n_pos = sentences_per_criterion // 2
        n_neg = sentences_per_criterion - n_pos
        for _ in range(n_pos):
            length = int(rng.integers(6, 12))
            tokens = [str(_FILLER[i]) for i in rng.integers(0, len(_FILLER), size=length)]
            tokens.insert(int(rng.integers(0, length + 1)), keyword)
            examples.append(
                TrainingExample(sentence=" ".join(tokens), context="", labels=_labels_for(tokens))
            )
        for _ in range(n_neg):
            length = int(rng.integers(6, 12))
            tokens = [str(_FILLER[i]) for i in rng.integers(0, len(_FILLER), size=length)]
            examples.append(
                TrainingExample(sentence=" ".join(tokens), context="", labels=_labels_for(tokens))
            )
    order = rng.permutation(len(examples))
    return [examples[i] for i in order]


def bundled_sample_path() -> Path:
    """Path of the bundled 3-statement demo JSONL."""
    return Path(str(resources.files("msalens.data").joinpath("sample_statements.jsonl")))
