"""Feature hashing behavior."""

from __future__ import annotations

import math

from msalens.features import DEFAULT_DIMENSION, featurize, stable_hash


def test_empty_inputs_give_empty_vector():
    assert featurize("", "") == {}


def test_deterministic():
    a = featurize("We audit suppliers", "before text after text")
    b = featurize("We audit suppliers", "before text after text")
    assert a == b


def test_sublinear_tf():
    # frozen from the tf rule: weight("audit" x2) = 1 + ln(2)
    vec = featurize("audit audit")
    index = stable_hash("audit") % (DEFAULT_DIMENSION // 2)
    assert math.isclose(vec[index], 1.0 + math.log(2.0), rel_tol=0, abs_tol=1e-12)
    assert len(vec) == 1


def test_sentence_and_context_in_disjoint_halves():
    vec = featurize("audit", "audit")
    assert len(vec) == 2
    indices = sorted(vec)
    assert indices[0] < DEFAULT_DIMENSION // 2 <= indices[1]
    assert indices[1] - indices[0] == DEFAULT_DIMENSION // 2


def test_case_folding():
    assert featurize("Audit AUDIT") == featurize("audit audit")


def test_weights_non_negative_and_in_range():
    vec = featurize("a b c a b a", "x y z")
    assert all(0 <= i < DEFAULT_DIMENSION for i in vec)
    assert all(w > 0 for w in vec.values())
