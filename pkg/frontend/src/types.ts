/** Wire types mirroring the gateway's store schemas (field names verbatim). */

export const CRITERIA = [
  "Approval",
  "Signature",
  "C2_Structure",
  "C2_Operations",
  "C2_SupplyChains",
  "C3_RiskDescription",
  "C4_RiskMitigation",
  "C4_Remediation",
  "C5_Effectiveness",
] as const;

export type Criterion = (typeof CRITERIA)[number];

export interface SentenceRecord {
  index: number;
  span: [number, number];
  text: string;
  word_count: number;
}

export interface StatementRecord {
  id: string;
  raw_text: string;
  sentences: SentenceRecord[];
  metadata: {
    jurisdiction: string;
    sector: string;
    turnover_band: string;
    publication_year: number;
    company_id: string;
  };
}

export interface PredictionRecord {
  statement_id: string;
  sentence_index: number;
  criterion: Criterion;
  probability?: number;
  relevant?: boolean;
  threshold?: number;
  backend_id?: string;
  error?: string;
  detail?: string;
}

export interface AttributionRecord {
  statement_id: string;
  sentence_index: number;
  criterion: Criterion;
  tokens: string[];
  phi: number[];
  base: number;
  method: string;
  samples_used?: number;
}

export interface EvidenceRecord {
  statement_id: string;
  sentence_index: number;
  criterion: Criterion;
  status: "Implemented" | "FutureCommitment" | "NegativeEvidence";
  detector: string;
  score: number;
  cue: string | null;
  fallback_used: boolean;
  conflict: boolean;
}

export interface ReviewRecord {
  type: "decision";
  statement_id: string;
  sentence_index: number;
  criterion: Criterion;
  verdict: "Accept" | "OverrideRelevant" | "OverrideIrrelevant";
  reviewer_id: string;
  timestamp: string;
  revision: number;
}

export interface DeterminationRecord {
  type: "determination";
  statement_id: string;
  criterion: Criterion;
  decision: "Met" | "NotMet" | "Unclear";
  cited_sentences: number[];
  reviewer_id: string;
  timestamp: string;
}

export interface StatementDetail {
  statement: StatementRecord;
  predictions: PredictionRecord[];
  attributions: AttributionRecord[];
  evidence: EvidenceRecord[];
  reviews: ReviewRecord[];
  determinations: DeterminationRecord[];
  effective_relevance: Record<string, boolean[]>;
}

export interface StatementSummary {
  id: string;
  sentence_count: number;
  metadata: StatementRecord["metadata"];
}
