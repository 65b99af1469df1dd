"""Shared fixtures: a deterministic demo model pinned as a golden artifact.

Acceptance-suite tests print one PASS/FAIL line per criterion via the
makereport hook below.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from msalens.model import NativeModel, TrainConfig, train_native
from msalens.synth import generate_separable_corpus


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.module.__name__.endswith("test_acceptance"):
        marker = item.get_closest_marker("criterion")
        if marker:
            status = "PASS" if report.passed else "FAIL"
            print(f"\nACCEPTANCE {status}: {marker.args[0]}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion label")

GOLDEN_DIR = Path(__file__).parent / "golden"
DEMO_MODEL_PATH = GOLDEN_DIR / "demo_model.json"

DEMO_TRAIN_CONFIG = TrainConfig(seed=42)
DEMO_CORPUS_SIZE = 120
DEMO_CORPUS_SEED = 42


def train_demo_model() -> NativeModel:
    corpus = generate_separable_corpus(DEMO_CORPUS_SIZE, seed=DEMO_CORPUS_SEED)
    return train_native(corpus, DEMO_TRAIN_CONFIG)


@pytest.fixture(scope="session")
def demo_model() -> NativeModel:
    """The pinned demo model when present, else a fresh deterministic train."""
    if DEMO_MODEL_PATH.exists():
        return NativeModel.load(DEMO_MODEL_PATH)
    return train_demo_model()


@pytest.fixture(scope="session")
def demo_model_path(demo_model, tmp_path_factory) -> Path:
    if DEMO_MODEL_PATH.exists():
        return DEMO_MODEL_PATH
    path = tmp_path_factory.mktemp("model") / "demo_model.json"
    demo_model.save(path)
    return path
