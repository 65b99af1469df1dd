"""Relevance-prediction backends: the native linear model and a remote YES/NO client.

Both backends expose the same probability contract, so the pipeline output is
structurally identical whichever one is configured. The remote protocol sends
{criterion, target_sentence, sentence_in_context, template_id} and expects
{answer: "YES"|"NO", raw: str}; YES maps to p=1.0 and NO to p=0.0.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

import httpx

from .corpus import ContextWindow, Statement, build_context
from .criteria import CRITERIA, Criterion, default_mapping
from .errors import BackendUnavailable, MalformedReply
from .model import NativeModel

DEFAULT_THRESHOLD = 0.5

TEMPLATE_IDS = ("zero_shot", "cot_zero_shot", "cot_few_shot")


@dataclass(frozen=True)
class BackendDescriptor:
    """Configuration for building a backend."""

    kind: str  # "NativeLinear" | "RemoteYesNo"
    model_path: str | None = None
    endpoint: str | None = None
    template_ids: dict[str, str] = field(default_factory=dict)  # criterion value -> template id
    default_template_id: str = "zero_shot"
    timeout: float = 30.0
    max_concurrency: int = 4

    def __post_init__(self):
        if self.kind not in ("NativeLinear", "RemoteYesNo"):
            raise ValueError(f"unknown backend kind: {self.kind}")
        if self.kind == "RemoteYesNo":
            if not self.endpoint:
                raise ValueError("remote backend requires an endpoint")
            for criterion in CRITERIA:
                if self.template_for(criterion) not in TEMPLATE_IDS:
                    raise ValueError(f"no prompt template for criterion {criterion.value}")

    def template_for(self, criterion: Criterion) -> str:
        return self.template_ids.get(criterion.value, self.default_template_id)


@dataclass(frozen=True)
class RelevancePrediction:
    sentence_index: int
    criterion: Criterion
    probability: float
    relevant: bool
    threshold: float
    backend_id: str


@dataclass(frozen=True)
class PredictionError:
    """Per-cell failure marker; a failed cell never aborts the matrix."""

    sentence_index: int
    criterion: Criterion
    error: str
    detail: str


Cell = RelevancePrediction | PredictionError


class PredictionMatrix:
    """9 x S grid of predictions (or error markers) for one statement."""

    def __init__(self, statement_id: str, sentence_count: int, cells: dict[tuple[Criterion, int], Cell]):
        self.statement_id = statement_id
        self.sentence_count = sentence_count
        self._cells = cells

    @property
    def shape(self) -> tuple[int, int]:
        return (len(CRITERIA), self.sentence_count)

    def at(self, criterion: Criterion, sentence_index: int) -> Cell:
        return self._cells[(criterion, sentence_index)]

    def cells(self) -> list[Cell]:
        out = []
        for criterion in CRITERIA:
            for i in range(self.sentence_count):
                out.append(self._cells[(criterion, i)])
        return out

    def predictions(self) -> list[RelevancePrediction]:
        return [c for c in self.cells() if isinstance(c, RelevancePrediction)]

    def errors(self) -> list[PredictionError]:
        return [c for c in self.cells() if isinstance(c, PredictionError)]

    def relevant_cells(self) -> list[RelevancePrediction]:
        return [p for p in self.predictions() if p.relevant]

    def relevance_grid(self) -> dict[str, list[bool]]:
        """criterion value -> per-sentence booleans; error cells count as not relevant."""
        grid: dict[str, list[bool]] = {}
        for criterion in CRITERIA:
            row = []
            for i in range(self.sentence_count):
                cell = self._cells[(criterion, i)]
                row.append(isinstance(cell, RelevancePrediction) and cell.relevant)
            grid[criterion.value] = row
        return grid


class NativeBackend:
    """Wraps a trained NativeModel behind the backend probability contract."""

    kind = "NativeLinear"

    def __init__(self, model: NativeModel):
        self.model = model
        self.backend_id = "native-linear"

    def probability(self, sentence_text: str, context: ContextWindow | None, criterion: Criterion) -> float:
        return self.model.probability(self._features(sentence_text, context), criterion)

    def raw_score(self, sentence_text: str, context: ContextWindow | None, criterion: Criterion) -> float:
        return self.model.raw_score(self._features(sentence_text, context), criterion)

    def _features(self, sentence_text: str, context: ContextWindow | None):
        before = context.before_text if context else ""
        after = context.after_text if context else ""
        return self.model.featurize(sentence_text, before, after)


_FINAL_ANSWER_RE = re.compile(r"final\s+answer\s*:\s*(yes|no)\b", re.IGNORECASE)
_YES_NO_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


def parse_yes_no(raw: str, chain_of_thought: bool = False) -> bool:
    """Extract the authoritative YES/NO verdict from a raw reply.

    Chain-of-thought replies must carry a "Final Answer: YES/NO" line; plain
    replies are scanned case-insensitively for the last standalone YES/NO
    token. Raises MalformedReply otherwise.
    """
    if chain_of_thought:
        matches = _FINAL_ANSWER_RE.findall(raw)
        if not matches:
            raise MalformedReply("chain-of-thought reply has no 'Final Answer: YES/NO' line")
        return matches[-1].lower() == "yes"
    matches = _YES_NO_RE.findall(raw)
    if not matches:
        raise MalformedReply(f"reply contains no YES/NO token: {raw[:80]!r}")
    return matches[-1].lower() == "yes"


class RemoteBackend:
    """HTTP client for the YES/NO relevance protocol."""

    kind = "RemoteYesNo"

    def __init__(self, descriptor: BackendDescriptor, transport: httpx.BaseTransport | None = None):
        self.descriptor = descriptor
        self.backend_id = f"remote:{descriptor.endpoint}"
        self._client = httpx.Client(timeout=descriptor.timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def probability(self, sentence_text: str, context: ContextWindow | None, criterion: Criterion) -> float:
        before = context.before_text if context else ""
        after = context.after_text if context else ""
        in_context = " ".join(p for p in (before, sentence_text, after) if p)
        template_id = self.descriptor.template_for(criterion)
        request = {
            "criterion": criterion.value,
            "target_sentence": sentence_text,
            "sentence_in_context": in_context,
            "template_id": template_id,
        }
        try:
            response = self._client.post(self.descriptor.endpoint, json=request)
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"remote backend transport failure: {exc}") from exc
        if response.status_code >= 500:
            raise BackendUnavailable(f"remote backend returned {response.status_code}")
        if response.status_code != 200:
            raise MalformedReply(f"remote backend returned status {response.status_code}")
        try:
            payload = response.json()
        except json.JSONDecodeError as exc:
            raise MalformedReply(f"remote reply is not JSON: {exc}") from exc

        answer = payload.get("answer")
        if isinstance(answer, str) and answer.strip().upper() in ("YES", "NO"):
            return 1.0 if answer.strip().upper() == "YES" else 0.0
        raw = payload.get("raw")
        if isinstance(raw, str):
            verdict = parse_yes_no(raw, chain_of_thought=template_id.startswith("cot"))
            return 1.0 if verdict else 0.0
        raise MalformedReply(f"remote reply has no usable answer: {payload!r}")


Backend = NativeBackend | RemoteBackend


def build_backend(descriptor: BackendDescriptor, model: NativeModel | None = None) -> Backend:
    if descriptor.kind == "NativeLinear":
        if model is None:
            if not descriptor.model_path:
                raise ValueError("native backend requires a model or model_path")
            model = NativeModel.load(descriptor.model_path)
        return NativeBackend(model)
    return RemoteBackend(descriptor)


def predict(
    backend: Backend,
    sentence_text: str,
    context: ContextWindow | None,
    criterion: Criterion,
    threshold: float = DEFAULT_THRESHOLD,
    sentence_index: int = 0,
) -> RelevancePrediction:
    """One relevance prediction; relevant iff probability >= threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    p = backend.probability(sentence_text, context, criterion)
    return RelevancePrediction(
        sentence_index=sentence_index,
        criterion=criterion,
        probability=p,
        relevant=p >= threshold,
        threshold=threshold,
        backend_id=backend.backend_id,
    )


def predict_statement(
    backend: Backend,
    statement: Statement,
    budget: int,
    threshold: float = DEFAULT_THRESHOLD,
) -> PredictionMatrix:
    """Predict every (criterion, sentence) cell; failures mark cells, never abort."""
    cells: dict[tuple[Criterion, int], Cell] = {}
    windows = [build_context(statement, i, budget) for i in range(len(statement.sentences))]
    for criterion in CRITERIA:
        for i, sentence in enumerate(statement.sentences):
            try:
                cells[(criterion, i)] = predict(
                    backend, sentence.text, windows[i], criterion, threshold, sentence_index=i
                )
            except (BackendUnavailable, MalformedReply) as exc:
                cells[(criterion, i)] = PredictionError(
                    sentence_index=i,
                    criterion=criterion,
                    error=type(exc).__name__,
                    detail=str(exc),
                )
    return PredictionMatrix(statement.id, len(statement.sentences), cells)


def _load_template(template_id: str) -> str:
    if template_id not in TEMPLATE_IDS:
        raise ValueError(f"unknown template id: {template_id}")
    return resources.files("msalens.data.prompts").joinpath(f"{template_id}.txt").read_text("utf-8")


def _criterion_prompt_data() -> dict:
    text = resources.files("msalens.data").joinpath("prompt_criteria.json").read_text("utf-8")
    return json.loads(text)


def render_prompt(
    template_id: str,
    criterion: Criterion,
    target_sentence: str,
    sentence_in_context: str,
) -> str:
    """Fill a shipped template for one criterion and one target sentence."""
    template = _load_template(template_id)
    data = _criterion_prompt_data()[criterion.value]
    display = default_mapping().info(criterion).display_name
    text = template.replace("{CRITERION_NAME}", display)
    text = text.replace("{CRITERION_DEFINITION}", data["definition"])
    if "{EXAMPLES}" in text:
        blocks = []
        for n, ex in enumerate(data["examples"], start=1):
            blocks.append(
                f"Example {n}:\n"
                f"- Target Sentence: \"{ex['sentence']}\"\n"
                f"- Question: Is the target sentence relevant? (YES/NO)\n"
                f"- Reasoning: {ex['reasoning']}\n"
                f"- Final Answer: {ex['answer']}"
            )
        text = text.replace("{EXAMPLES}", "\n\n".join(blocks))
    text = text.replace("TARGET_SENTENCE", target_sentence)
    text = text.replace("SENTENCE_IN_CONTEXT", sentence_in_context)
    return text
