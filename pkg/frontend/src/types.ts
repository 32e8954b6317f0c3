// Shapes of the gateway HTTP API. These mirror the JSON the gateway emits;
// the dashboard never invents fields of its own.

export interface StoredRecord {
  seq: number;
  dseq: number;
  device: string;
  kind: string; // "vitals" | "fix" | "alert" | "ack"
  t_ms: number;
  payload: Record<string, unknown>;
}

export interface VitalsClassification {
  normal: boolean;
  reasons: string[];
}

export interface VitalsPayload {
  bpm: number;
  spo2_pct: number;
  quality: string;
  classification: VitalsClassification | null;
}

export interface FixPayload {
  t_ms: number;
  lat: number;
  lon: number;
  valid: boolean;
  source: string;
}

export type CaseStatus =
  | "awaiting_user_ack"
  | "dispatching"
  | "dispatched"
  | "acknowledged"
  | "suppressed";

export interface AlertCase {
  id: string;
  device: string;
  cause: string; // "panic" | "fall_confirmed" | "vitals_abnormal"
  reasons: string[];
  opened_at_ms: number;
  status: CaseStatus;
  ack_deadline_ms: number | null;
  wearer: string;
  fix: FixPayload | null;
  address: string | null;
  contacts_available: boolean;
  planned: [string, string][];
  dispatch_record: unknown[];
  acked_at_ms: number | null;
  dispatch_began_ms: number | null;
}

export interface DeviceStateResponse {
  device: string;
  connected: boolean;
  connected_at_ms: number | null;
  frame_errors: number;
  latest_vitals: VitalsPayload | null;
  latest_fix: FixPayload | null;
  address: string | null;
  cases: AlertCase[];
  profile: { name: string; contacts: unknown[] } | null;
  last_seq: number;
  now_ms: number;
}

export interface DeviceListEntry {
  device: string;
  connected: boolean;
}

/** A case is still waiting on someone (watch wearer or the dispatcher). */
export function caseIsOpen(status: CaseStatus): boolean {
  return status === "awaiting_user_ack" || status === "dispatching";
}
