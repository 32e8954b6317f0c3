// The view state and the reducer that derives it from gateway records.
// Everything rendered comes from here, and everything here comes from the
// gateway: records applied in sequence order plus /state snapshots. Applying
// the same record twice is a no-op, so replays after a reconnect are safe.

import {
  AlertCase,
  DeviceStateResponse,
  FixPayload,
  StoredRecord,
  VitalsPayload,
} from "./types.js";

const TRACK_LIMIT = 200;

export interface DevicePanel {
  device: string;
  connected: boolean;
  wearer: string | null;
  address: string | null;
  vitals: VitalsPayload | null;
  vitalsAtMs: number | null;
  fix: FixPayload | null;
  track: { lat: number; lon: number }[];
  cases: Map<string, AlertCase>;
  caseOrder: string[];
}

export interface ViewState {
  devices: Map<string, DevicePanel>;
  /** Highest record sequence applied so far. */
  lastSeq: number;
  /** Sequence numbers in the order they were rendered into the feed. */
  history: number[];
  feed: StoredRecord[];
  /** Count of records that arrived above lastSeq+1 (should stay 0). */
  gaps: number;
  /** Count of records dropped as already-applied duplicates. */
  duplicates: number;
  connected: boolean;
  stale: boolean;
  /** Latest gateway clock reading and when (locally) it was learned. */
  gatewayNowMs: number;
  gatewayNowAtLocalMs: number;
}

export function emptyState(): ViewState {
  return {
    devices: new Map(),
    lastSeq: 0,
    history: [],
    feed: [],
    gaps: 0,
    duplicates: 0,
    connected: false,
    stale: false,
    gatewayNowMs: 0,
    gatewayNowAtLocalMs: 0,
  };
}

export function panelFor(state: ViewState, device: string): DevicePanel {
  let panel = state.devices.get(device);
  if (!panel) {
    panel = {
      device,
      connected: false,
      wearer: null,
      address: null,
      vitals: null,
      vitalsAtMs: null,
      fix: null,
      track: [],
      cases: new Map(),
      caseOrder: [],
    };
    state.devices.set(device, panel);
  }
  return panel;
}

/**
 * Apply one record from the event feed. Returns true if it changed state,
 * false for duplicates (seq already applied).
 */
export function applyRecord(state: ViewState, rec: StoredRecord, localNowMs: number): boolean {
  if (rec.seq <= state.lastSeq) {
    state.duplicates += 1;
    return false;
  }
  if (rec.seq > state.lastSeq + 1 && state.lastSeq > 0) {
    state.gaps += 1;
  }
  state.lastSeq = rec.seq;
  state.history.push(rec.seq);
  state.feed.push(rec);
  observeGatewayClock(state, rec.t_ms, localNowMs);

  const panel = panelFor(state, rec.device);
  if (rec.kind === "vitals") {
    if (panel.vitalsAtMs === null || rec.t_ms >= panel.vitalsAtMs) {
      panel.vitals = rec.payload as unknown as VitalsPayload;
      panel.vitalsAtMs = rec.t_ms;
    }
  } else if (rec.kind === "fix") {
    const fix = rec.payload as unknown as FixPayload;
    if (panel.fix === null || fix.t_ms >= panel.fix.t_ms) {
      panel.fix = fix;
    }
    panel.track.push({ lat: fix.lat, lon: fix.lon });
    if (panel.track.length > TRACK_LIMIT) panel.track.shift();
  } else if (rec.kind === "alert") {
    upsertCase(panel, rec.payload as unknown as AlertCase);
  }
  // "ack" records carry no state of their own; the case transition arrives
  // as its own alert record.
  return true;
}

function upsertCase(panel: DevicePanel, alertCase: AlertCase): void {
  if (!panel.cases.has(alertCase.id)) {
    panel.caseOrder.push(alertCase.id);
  }
  panel.cases.set(alertCase.id, alertCase);
}

/** Fold a /state snapshot in. Snapshot fields the stream cannot carry. */
export function hydrateDevice(
  state: ViewState,
  snapshot: DeviceStateResponse,
  localNowMs: number,
): void {
  const panel = panelFor(state, snapshot.device);
  panel.connected = snapshot.connected;
  panel.address = snapshot.address;
  if (snapshot.profile) panel.wearer = snapshot.profile.name;
  for (const alertCase of snapshot.cases) {
    upsertCase(panel, alertCase);
  }
  observeGatewayClock(state, snapshot.now_ms, localNowMs);
}

export function observeGatewayClock(
  state: ViewState,
  gatewayMs: number,
  localNowMs: number,
): void {
  if (gatewayMs > state.gatewayNowMs) {
    state.gatewayNowMs = gatewayMs;
    state.gatewayNowAtLocalMs = localNowMs;
  }
}

/** Best estimate of the gateway clock right now, for countdowns. */
export function estimateGatewayNow(state: ViewState, localNowMs: number): number {
  if (state.gatewayNowAtLocalMs === 0) return state.gatewayNowMs;
  return state.gatewayNowMs + (localNowMs - state.gatewayNowAtLocalMs);
}

/**
 * Milliseconds until the ack deadline, or null when the case has none or is
 * past the point where acknowledging changes anything.
 */
export function countdownMs(
  state: ViewState,
  alertCase: AlertCase,
  localNowMs: number,
): number | null {
  if (alertCase.status !== "awaiting_user_ack") return null;
  if (alertCase.ack_deadline_ms === null) return null;
  return alertCase.ack_deadline_ms - estimateGatewayNow(state, localNowMs);
}

export function formatCountdown(ms: number): string {
  const total = Math.max(0, Math.ceil(ms / 1000));
  const minutes = Math.floor(total / 60);
  const seconds = total % 60;
  return minutes > 0 ? `${minutes}:${String(seconds).padStart(2, "0")}` : `${seconds}s`;
}

export function allCases(state: ViewState): AlertCase[] {
  const rows: AlertCase[] = [];
  for (const panel of state.devices.values()) {
    for (const id of panel.caseOrder) {
      const alertCase = panel.cases.get(id);
      if (alertCase) rows.push(alertCase);
    }
  }
  rows.sort((a, b) => b.opened_at_ms - a.opened_at_ms);
  return rows;
}
