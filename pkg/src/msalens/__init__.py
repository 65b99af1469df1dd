"""Compliance analysis engine for modern slavery statements.

Segments statements into sentences, classifies per-sentence relevance against
the nine common reporting criteria, explains predictions with token-level
Shapley attributions, tracks evidence status, computes evaluation and corpus
metrics, and serves results to a human reviewer.
"""

from __future__ import annotations

from .backends import (
    BackendDescriptor,
    NativeBackend,
    PredictionMatrix,
    RelevancePrediction,
    RemoteBackend,
    build_backend,
    predict,
    predict_statement,
    render_prompt,
)
from .corpus import (
    ContextWindow,
    Jurisdiction,
    Sector,
    Sentence,
    Statement,
    StatementMetadata,
    TurnoverBand,
    build_context,
    ingest_statement,
    segment,
)
from .criteria import (
    CRITERIA,
    Alignment,
    AlignmentStatus,
    Criterion,
    JurisdictionMap,
    alignment_status,
    criteria_for,
    default_mapping,
    load_mapping,
    load_mapping_file,
)
from .errors import MsaLensError
from .evidence import (
    EvidenceLabel,
    EvidenceStatus,
    NliBackendConfig,
    NliClient,
    detect_future,
    detect_negative,
    evidence_status,
)
from .explain import (
    TokenAttribution,
    ValueFunction,
    attribute,
    exact_shapley,
    kernel_shap,
    mask_tokens,
    shapley_kernel_weight,
)
from .features import FeatureVector, featurize
from .metrics import (
    CalibrationReport,
    ConfusionCounts,
    StatementPredictions,
    TrendReport,
    VocabDistribution,
    calibration,
    compliance_fraction,
    corpus_vocab_distribution,
    f1,
    js_divergence,
    overall_f1,
    trend_report,
    vocab_distribution,
)
from .model import NativeModel, TrainConfig, TrainingExample, train_native
from .pipeline import PipelineConfig, PipelineRun, run_pipeline
from .store import ComplianceDetermination, ReviewDecision, Store

__version__ = "0.1.0"
