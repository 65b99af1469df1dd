"""Acceptance suite: every exit criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion.
"""

from __future__ import annotations

import time
from itertools import combinations

import httpx
import numpy as np
import pytest

from msalens.backends import BackendDescriptor, NativeBackend
from msalens.corpus import (
    Jurisdiction,
    Sector,
    StatementMetadata,
    TurnoverBand,
    build_context,
    ingest_statement,
    segment,
)
from msalens.criteria import CRITERIA, Criterion
from msalens.errors import TooLong
from msalens.evidence import (
    EvidenceLabel,
    NliBackendConfig,
    NliClient,
    detect_future,
    detect_negative,
    evidence_status,
)
from msalens.explain import ValueFunction, exact_shapley, kernel_shap
from msalens.features import stable_hash
from msalens.metrics import (
    ConfusionCounts,
    StatementPredictions,
    VocabDistribution,
    calibration,
    compliance_fraction,
    f1,
    js_divergence,
    overall_f1,
)
from msalens.model import TrainConfig, train_native
from msalens.pipeline import PipelineConfig, run_pipeline
from msalens.store import BUNDLE_FILES
from msalens.synth import bundled_sample_path, generate_separable_corpus

META = StatementMetadata(
    jurisdiction=Jurisdiction.AU,
    sector=Sector.OTHER,
    turnover_band=TurnoverBand.ABOVE_500M,
    publication_year=2023,
)


def random_table(m: int, rng: np.random.Generator) -> dict[frozenset, float]:
    table = {}
    for size in range(m + 1):
        for members in combinations(range(m), size):
            table[frozenset(members)] = float(rng.uniform())
    return table


def table_v(table):
    return lambda coalition: table[frozenset(coalition)]


@pytest.mark.criterion("Shapley axioms (200 random tables, M<=8, <5s)")
def test_shapley_axioms():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    for _ in range(200):
        m = int(rng.integers(2, 9))
        tokens = [f"t{i}" for i in range(m)]
        table = random_table(m, rng)

        attribution = exact_shapley(table_v(table), tokens)
        efficiency_gap = abs(
            sum(attribution.phi) - (table[frozenset(range(m))] - table[frozenset()])
        )
        assert efficiency_gap <= 1e-10

        dummy = int(rng.integers(0, m))
        dummy_table = {members: table[frozenset(members - {dummy})] for members in table}
        dummy_attr = exact_shapley(table_v(dummy_table), tokens)
        assert abs(dummy_attr.phi[dummy]) <= 1e-10

        i, j = sorted(rng.choice(m, size=2, replace=False))

        def swap(members: frozenset) -> frozenset:
            out = set(members)
            has_i, has_j = i in out, j in out
            out.discard(i)
            out.discard(j)
            if has_i:
                out.add(j)
            if has_j:
                out.add(i)
            return frozenset(out)

        sym_table = {k: 0.5 * (table[k] + table[swap(k)]) for k in table}
        sym_attr = exact_shapley(table_v(sym_table), tokens)
        assert abs(sym_attr.phi[i] - sym_attr.phi[j]) <= 1e-10
    assert time.perf_counter() - started < 5.0


@pytest.fixture(scope="module")
def native(demo_model):
    return NativeBackend(demo_model)


def random_sentence(rng: np.random.Generator, max_tokens: int, distinct: bool = False) -> str:
    vocab = (
        "the company suppliers risks audit board approved training remediation policy "
        "effectiveness operations structure staff annual review global sites program local"
    ).split()
    n = int(rng.integers(2, max_tokens + 1))
    if distinct:
        chosen = rng.choice(len(vocab), size=n, replace=False)
    else:
        chosen = rng.integers(0, len(vocab), size=n)
    return " ".join(vocab[i] for i in chosen)


@pytest.mark.criterion("Kernel-exact agreement (50 sentences, M<=12, <=1e-6)")
def test_kernel_matches_exact_on_native_model(native):
    rng = np.random.default_rng(7)
    for trial in range(50):
        sentence = random_sentence(rng, 12)
        tokens = sentence.split()
        criterion = CRITERIA[trial % 9]
        v = ValueFunction(native, criterion, tokens)
        exact = exact_shapley(v, tokens)
        kernel = kernel_shap(v, tokens, sample_budget=max(2 * len(tokens), 1 << len(tokens)), seed=trial)
        assert np.max(np.abs(np.array(kernel.phi) - np.array(exact.phi))) <= 1e-6


@pytest.mark.criterion("Linear-model analytic check (phi_i equals weight contribution, <=1e-10)")
def test_linear_model_analytic_identity(native):
    rng = np.random.default_rng(11)
    model = native.model
    half = model.dimension // 2
    for trial in range(25):
        sentence = random_sentence(rng, 10, distinct=True)
        tokens = sentence.split()
        criterion = CRITERIA[trial % 9]
        v = ValueFunction(native, criterion, tokens, output="margin")
        attribution = exact_shapley(v, tokens)
        for token, phi in zip(tokens, attribution.phi):
            expected = float(model.weights[criterion][stable_hash(token.lower()) % half])
            assert abs(phi - expected) <= 1e-10


def oracle_ece(probs, labels, bins=10):
    gap = [0.0] * bins
    for p, y in zip(probs, labels):
        gap[min(int(p * bins), bins - 1)] += p - y
    return sum(abs(g) for g in gap) / len(probs)


@pytest.mark.criterion("Calibration oracle (1,000 random sets within 1e-12; perfect data ECE=0)")
def test_calibration_oracle():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = int(rng.integers(1, 120))
        probs = rng.uniform(size=n).tolist()
        labels = (rng.uniform(size=n) < rng.uniform()).astype(int).tolist()
        assert abs(calibration(probs, labels).ece - oracle_ece(probs, labels)) <= 1e-12

    probs, labels = [], []
    for value, size in ((0.0, 10), (0.2, 10), (0.4, 10), (0.6, 10), (0.8, 10), (1.0, 10)):
        positives = round(value * size)
        probs.extend([value] * size)
        labels.extend([1] * positives + [0] * (size - positives))
    assert calibration(probs, labels).ece == pytest.approx(0.0, abs=1e-12)


@pytest.mark.criterion("JSD properties (500 random pairs; symmetry, identity, disjoint=1.0)")
def test_jsd_properties():
    rng = np.random.default_rng(17)
    for _ in range(500):
        n = int(rng.integers(1, 40))
        p = VocabDistribution({f"t{i}": float(x) for i, x in enumerate(rng.dirichlet(np.ones(n)))})
        q = VocabDistribution({f"t{i}": float(x) for i, x in enumerate(rng.dirichlet(np.ones(n)))})
        assert js_divergence(p, q) == pytest.approx(js_divergence(q, p), abs=1e-15)
        assert js_divergence(p, p) == 0.0
        disjoint = VocabDistribution(
            {f"u{i}": float(x) for i, x in enumerate(rng.dirichlet(np.ones(n)))}
        )
        assert abs(js_divergence(p, disjoint) - 1.0) <= 1e-12


@pytest.mark.criterion("Native classifier sanity (500/criterion; held-out F1>=0.95; deterministic)")
def test_native_classifier_sanity():
    corpus = generate_separable_corpus(sentences_per_criterion=500, seed=13)
    split = int(0.8 * len(corpus))
    train_set, heldout = corpus[:split], corpus[split:]
    config = TrainConfig(seed=13)
    model = train_native(train_set, config)

    for criterion in CRITERIA:
        tp = fp = fn = tn = 0
        for ex in heldout:
            features = model.featurize(ex.sentence, "", ex.context)
            predicted = model.probability(features, criterion) >= 0.5
            actual = ex.labels[criterion.value]
            tp += predicted and actual
            fp += predicted and not actual
            fn += actual and not predicted
            tn += not predicted and not actual
        score = f1(ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn))
        assert score >= 0.95, f"{criterion.value}: held-out F1 {score:.4f}"

    again = train_native(train_set, config)
    for criterion in CRITERIA:
        assert np.array_equal(model.weights[criterion], again.weights[criterion])
        assert model.biases[criterion] == again.biases[criterion]


def fuzz_document(rng: np.random.Generator) -> str:
    words = "alpha Beta gamma Delta epsilon zeta Eta theta supply audit board risk".split()
    abbreviations = ["Ltd.", "Inc.", "No.", "U.K.", "plc."]
    parts = []
    for _ in range(int(rng.integers(1, 12))):
        kind = rng.uniform()
        n = int(rng.integers(1, 9))
        sentence_words = [words[i] for i in rng.integers(0, len(words), size=n)]
        if kind < 0.15:
            sentence_words.insert(int(rng.integers(0, n)), abbreviations[int(rng.integers(0, 5))])
        body = " ".join(sentence_words)
        terminal = ".!?"[int(rng.integers(0, 3))]
        if kind < 0.3:
            parts.append(f"\n- {body}")
        elif kind < 0.4:
            parts.append(f"\n{int(rng.integers(1, 20))}. {body}")
        else:
            parts.append(f"{body}{terminal} ")
        if rng.uniform() < 0.2:
            parts.append("\n")
    return "".join(parts).strip() or "Fallback sentence."


@pytest.mark.criterion("Segmentation (round-trip on 100-doc fuzz corpus; >200-sentence rejection)")
def test_segmentation_round_trip_and_cap():
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 100:
        doc = fuzz_document(rng)
        if not doc.strip():
            continue
        sentences = segment(doc)
        joined = " ".join(s.text for s in sentences)
        assert " ".join(joined.split()) == " ".join(doc.split())
        for a, b in zip(sentences, sentences[1:]):
            assert a.span[1] <= b.span[0]
        for s in sentences:
            assert doc[s.span[0] : s.span[1]] == s.text
            assert s.word_count >= 1
        checked += 1

    too_long = " ".join(f"Sentence number {i} ends here." for i in range(201))
    with pytest.raises(TooLong):
        ingest_statement(too_long, META)


@pytest.mark.criterion("Context windows (1,000 random cases; budget and balance invariants)")
def test_context_window_invariants():
    rng = np.random.default_rng(29)
    budgets = [0, 100, 200, 500]
    for _ in range(1000):
        n_sentences = int(rng.integers(1, 40))
        words_per = int(rng.integers(1, 15))
        text = " ".join(
            " ".join(f"W{i}n{j}" for j in range(words_per)) + "."
            for i in range(n_sentences)
        )
        statement = ingest_statement(text, META)
        target = int(rng.integers(0, len(statement.sentences)))
        budget = budgets[int(rng.integers(0, 4))]
        window = build_context(statement, target, budget)

        n_before = len(window.before_text.split())
        n_after = len(window.after_text.split())
        available_before = sum(s.word_count for s in statement.sentences[:target])
        available_after = sum(s.word_count for s in statement.sentences[target + 1 :])

        assert n_before + n_after <= budget
        half = -(-budget // 2)  # ceil
        if available_before >= half and available_after >= half:
            assert n_before + n_after == budget
            assert abs(n_before - n_after) <= 1
        if abs(n_before - n_after) > 1:
            # imbalance only when one side ran dry and the other absorbed the deficit
            short, long_ = min(n_before, n_after), max(n_before, n_after)
            exhausted = (n_before == available_before) or (n_after == available_after)
            assert exhausted
            assert n_before + n_after == min(budget, available_before + available_after) or (
                n_before + n_after == budget
            )


@pytest.mark.criterion("Table arithmetic fixtures (overall F1 0.738 +/- 0.005; 49/50 = 0.98)")
def test_table_arithmetic_fixtures():
    table3_au = {
        "Approval": 0.864,
        "C2_Operations": 0.769,
        "C2_Structure": 0.749,
        "C2_SupplyChains": 0.805,
        "C3_RiskDescription": 0.738,
        "C4_Remediation": 0.667,
        "C4_RiskMitigation": 0.669,
        "C5_Effectiveness": 0.592,
        "Signature": 0.790,
    }
    scores = [table3_au[c.value] for c in CRITERIA]
    assert overall_f1(scores) == pytest.approx(0.738, abs=0.005)

    items = []
    for i in range(49):
        statement = ingest_statement(f"Statement {i} was approved by the board.", META)
        items.append(
            StatementPredictions(
                statement=statement,
                relevance={c.value: [c == Criterion.APPROVAL] for c in CRITERIA},
            )
        )
    statement = ingest_statement("Statement fifty says nothing relevant.", META)
    items.append(
        StatementPredictions(
            statement=statement, relevance={c.value: [False] for c in CRITERIA}
        )
    )
    assert compliance_fraction(items, Criterion.APPROVAL) == pytest.approx(0.98)


def nli_client(deny_score: float) -> NliClient:
    transport = httpx.MockTransport(
        lambda request: httpx.Response(200, json={"scores": [deny_score, 1.0 - deny_score]})
    )
    return NliClient(NliBackendConfig(endpoint="http://nli.test/score"), transport=transport)


@pytest.mark.criterion("Evidence rules (worked examples; closed 0.35 threshold)")
def test_evidence_rules():
    fired, cue = detect_future("We plan to implement a supplier audit programme.")
    assert fired and cue == "plan to"

    fired, _ = detect_future("We trained all staff in 2023.")
    assert not fired

    sentence = (
        "During the calendar year of 2023, no concerns of child labour were identified "
        "and therefore no remedial measures were undertaken"
    )
    fired_c3, _, _ = detect_negative(sentence, Criterion.C3_RISK_DESCRIPTION)
    fired_c4, _, _ = detect_negative(sentence, Criterion.C4_REMEDIATION)
    assert fired_c3 and fired_c4

    at_threshold, score, _ = detect_negative("Nothing to report.", Criterion.C3_RISK_DESCRIPTION, nli_client(0.35))
    assert at_threshold and score == pytest.approx(0.35)
    below, _, _ = detect_negative("Nothing to report.", Criterion.C3_RISK_DESCRIPTION, nli_client(0.3499))
    assert not below

    # precedence on a sentence where both detectors fire
    from msalens.backends import RelevancePrediction

    both = "We have no remediation policy but plan to adopt one"
    prediction = RelevancePrediction(
        sentence_index=0,
        criterion=Criterion.C4_REMEDIATION,
        probability=0.9,
        relevant=True,
        threshold=0.5,
        backend_id="native-linear",
    )
    status = evidence_status(both, Criterion.C4_REMEDIATION, prediction)
    assert status.label == EvidenceLabel.NEGATIVE_EVIDENCE


@pytest.mark.criterion("End-to-end determinism (byte-identical bundle twice, <30s)")
def test_end_to_end_determinism(demo_model, tmp_path):
    config = PipelineConfig(
        backend=BackendDescriptor(kind="NativeLinear"),
        context_budget=100,
        threshold=0.5,
        seed=42,
    )
    started = time.perf_counter()
    run_pipeline(bundled_sample_path(), config, model=demo_model, export_dir=tmp_path / "a")
    run_pipeline(bundled_sample_path(), config, model=demo_model, export_dir=tmp_path / "b")
    elapsed = time.perf_counter() - started
    for name in BUNDLE_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    assert (tmp_path / "a" / "run.json").read_bytes() == (tmp_path / "b" / "run.json").read_bytes()
    assert elapsed < 30.0
