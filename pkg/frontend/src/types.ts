// View models mirror the gateway API payloads exactly; the console never
// recomputes scores, gates, or routing client-side.

export interface QueueRow {
  id: string;
  ingested_at: string;
  title: string;
  affected_models: string[];
  ttps: string[];
  reported_asr: number | null;
  pir_score: number | null;
  status: string;
}

export interface QueueFilters {
  status?: string;
  ttp?: string;
  model?: string;
  minScore?: number;
  maxScore?: number;
}

export interface Report {
  item_id: string;
  sections: Record<string, string>;
  author: string;
  revision: number;
  created_at: string;
  recommended_signature: string | null;
}

export interface AssignmentView {
  version_id: string;
  mode: 'serving' | 'shadow';
  fraction: number;
}

export interface DeploymentSnapshot {
  environment: string;
  epoch: number;
  assignments: AssignmentView[];
  created_at: string;
}

export interface GateReportView {
  baseline: string;
  candidate: string;
  corpus: string;
  fp_rate_delta: number;
  recall_delta: number;
  flag_rate_delta: number;
  pass: boolean;
  created_at: string;
}

export interface ShadowReportView {
  serving_version: string;
  shadow_version: string;
  window: number;
  serving_flag_rate: number;
  shadow_flag_rate: number;
  flag_rate_delta: number;
  disagreement_count: number;
}

export interface AuditEntry {
  ts: number;
  actor: string;
  action: string;
  payload_digest: string;
  epoch: number | null;
  environment: string | null;
}

export const REPORT_SECTIONS = [
  'threat_summary',
  'technical_details',
  'potential_impact',
  'attack_example',
  'ease_of_implementation',
  'detection_mitigation',
] as const;
