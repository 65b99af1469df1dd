/**
 * Statement view assembly: pure projection of the gateway payload.
 *
 * Nothing here recomputes probabilities or attributions; every displayed
 * number is the stored value, and highlight spans are exactly the stored
 * sentence spans.
 */

import type {
  AttributionRecord,
  Criterion,
  EvidenceRecord,
  PredictionRecord,
  ReviewRecord,
  StatementDetail,
} from "./types.js";
import { CRITERIA } from "./types.js";

export type EvidenceBadge = "Implemented" | "Future" | "Negative";

export interface CellView {
  sentenceIndex: number;
  criterion: Criterion;
  probability: number | null;
  predictionError: string | null;
  relevant: boolean;
  effectiveRelevant: boolean;
  badge: EvidenceBadge | null;
  attribution: { tokens: string[]; phi: number[]; base: number; method: string } | null;
  latestVerdict: ReviewRecord["verdict"] | null;
  revision: number;
}

export interface CriterionView {
  criterion: Criterion;
  cells: CellView[];
  relevantCount: number;
  reviewedCount: number;
  determination: { decision: string; cited_sentences: number[] } | null;
}

export interface StatementView {
  statementId: string;
  rawText: string;
  sentences: { index: number; span: [number, number]; text: string }[];
  criteria: CriterionView[]; // fixed nine-criterion order
  progress: { reviewed: number; relevant: number };
}

const BADGES: Record<EvidenceRecord["status"], EvidenceBadge> = {
  Implemented: "Implemented",
  FutureCommitment: "Future",
  NegativeEvidence: "Negative",
};

export class SpanMismatchError extends Error {}

/** Rendered spans must reproduce stored sentence text exactly. */
export function checkSpans(detail: StatementDetail): void {
  for (const sentence of detail.statement.sentences) {
    const [start, end] = sentence.span;
    const slice = detail.statement.raw_text.slice(start, end);
    if (slice !== sentence.text) {
      throw new SpanMismatchError(
        `sentence ${sentence.index} span [${start}, ${end}) does not match its text`,
      );
    }
  }
}

function cellKey(criterion: string, index: number): string {
  return `${criterion}:${index}`;
}

export function buildStatementView(detail: StatementDetail): StatementView {
  checkSpans(detail);

  const predictions = new Map<string, PredictionRecord>();
  for (const record of detail.predictions) {
    predictions.set(cellKey(record.criterion, record.sentence_index), record);
  }
  const attributions = new Map<string, AttributionRecord>();
  for (const record of detail.attributions) {
    attributions.set(cellKey(record.criterion, record.sentence_index), record);
  }
  const evidence = new Map<string, EvidenceRecord>();
  for (const record of detail.evidence) {
    evidence.set(cellKey(record.criterion, record.sentence_index), record);
  }
  const latestReviews = new Map<string, ReviewRecord>();
  for (const record of detail.reviews) {
    const key = cellKey(record.criterion, record.sentence_index);
    const current = latestReviews.get(key);
    if (!current || record.revision > current.revision) {
      latestReviews.set(key, record);
    }
  }
  const latestDeterminations = new Map<string, StatementDetail["determinations"][number]>();
  for (const record of detail.determinations) {
    latestDeterminations.set(record.criterion, record); // append order: last wins
  }

  let reviewedTotal = 0;
  let relevantTotal = 0;
  const criteria: CriterionView[] = CRITERIA.map((criterion) => {
    const effectiveRow = detail.effective_relevance[criterion] ?? [];
    const cells: CellView[] = detail.statement.sentences.map((sentence) => {
      const key = cellKey(criterion, sentence.index);
      const prediction = predictions.get(key);
      const attribution = attributions.get(key);
      const evidenceRecord = evidence.get(key);
      const review = latestReviews.get(key);
      return {
        sentenceIndex: sentence.index,
        criterion,
        probability: prediction?.probability ?? null,
        predictionError: prediction?.error ?? null,
        relevant: prediction?.relevant ?? false,
        effectiveRelevant: effectiveRow[sentence.index] ?? false,
        badge: evidenceRecord ? BADGES[evidenceRecord.status] : null,
        attribution: attribution
          ? {
              tokens: attribution.tokens,
              phi: attribution.phi,
              base: attribution.base,
              method: attribution.method,
            }
          : null,
        latestVerdict: review?.verdict ?? null,
        revision: review?.revision ?? 0,
      };
    });
    const relevantCount = cells.filter((cell) => cell.relevant).length;
    const reviewedCount = cells.filter((cell) => cell.relevant && cell.latestVerdict !== null).length;
    relevantTotal += relevantCount;
    reviewedTotal += reviewedCount;
    const determination = latestDeterminations.get(criterion);
    return {
      criterion,
      cells,
      relevantCount,
      reviewedCount,
      determination: determination
        ? { decision: determination.decision, cited_sentences: determination.cited_sentences }
        : null,
    };
  });

  return {
    statementId: detail.statement.id,
    rawText: detail.statement.raw_text,
    sentences: detail.statement.sentences.map((s) => ({
      index: s.index,
      span: s.span,
      text: s.text,
    })),
    criteria,
    progress: { reviewed: reviewedTotal, relevant: relevantTotal },
  };
}

/** Client-side mirror of the store invariant: Met must cite sentences. */
export function validateDetermination(
  decision: "Met" | "NotMet" | "Unclear",
  citedSentences: number[],
  view: CriterionView,
): string | null {
  if (decision !== "Met") {
    return null;
  }
  if (citedSentences.length === 0) {
    return "A Met determination must cite at least one sentence.";
  }
  const notRelevant = citedSentences.filter(
    (index) => !view.cells[index]?.effectiveRelevant,
  );
  if (notRelevant.length > 0) {
    return `Cited sentences must be relevant after review overrides: ${notRelevant.join(", ")}`;
  }
  return null;
}
