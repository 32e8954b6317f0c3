// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";
import { applyRecord, emptyState, hydrateDevice, ViewState } from "../src/store.js";
import { render } from "../src/view.js";
import { AlertCase, DeviceStateResponse, StoredRecord } from "../src/types.js";

const APP_HTML = `
  <div class="topbar">
    <span id="conn-dot" class="dot dead"></span><span id="conn-label"></span>
  </div>
  <div id="stale-banner" hidden>stale</div>
  <div id="toast" hidden></div>
  <table id="alerts"><tbody></tbody></table>
  <div id="panels"></div>
  <ol id="feed"></ol><span id="feed-count"></span>
`;

function caseDict(over: Partial<AlertCase> = {}): AlertCase {
  return {
    id: "watch-1-c1",
    device: "watch-1",
    cause: "vitals_abnormal",
    reasons: ["spo2"],
    opened_at_ms: 5000,
    status: "awaiting_user_ack",
    ack_deadline_ms: 65000,
    wearer: "Asha",
    fix: null,
    address: "Stub Street 1",
    contacts_available: true,
    planned: [],
    dispatch_record: [],
    acked_at_ms: null,
    dispatch_began_ms: null,
    ...over,
  };
}

let root: HTMLElement;
let state: ViewState;
let seq = 0;

function rec(kind: string, payload: Record<string, unknown>, t = 1000): StoredRecord {
  return { seq: ++seq, dseq: 1, device: "watch-1", kind, t_ms: t, payload };
}

beforeEach(() => {
  document.body.innerHTML = `<div id="app">${APP_HTML}</div>`;
  root = document.getElementById("app")!;
  state = emptyState();
  seq = 0;
});

describe("alert rows", () => {
  it("renders an awaiting case with a ticking countdown and a live ack button", () => {
    state.gatewayNowMs = 50000;
    state.gatewayNowAtLocalMs = 1_000_000;
    applyRecord(state, rec("alert", caseDict() as unknown as Record<string, unknown>), 1_000_000);
    render(root, state, 1_000_000);
    const row = root.querySelector(`tr[data-case-id="watch-1-c1"]`)!;
    expect(row.querySelector(".cause")!.textContent).toContain("Abnormal vitals");
    expect(row.querySelector(".countdown")!.textContent).toBe("15s");
    expect(row.querySelector<HTMLButtonElement>(".ack-btn")!.disabled).toBe(false);

    render(root, state, 1_004_000);
    const later = root.querySelector(`tr[data-case-id="watch-1-c1"] .countdown`)!;
    expect(later.textContent).toBe("11s");
    const remaining = Number(later.getAttribute("data-remaining-ms"));
    expect(remaining).toBe(11000);
  });

  it("disables the ack button and drops the countdown once acknowledged", () => {
    applyRecord(state, rec("alert", caseDict() as unknown as Record<string, unknown>), 0);
    applyRecord(
      state,
      rec("alert", caseDict({ status: "acknowledged", acked_at_ms: 9000 }) as unknown as Record<string, unknown>),
      0,
    );
    render(root, state, 0);
    const row = root.querySelector(`tr[data-case-id="watch-1-c1"]`)!;
    expect(row.querySelector<HTMLButtonElement>(".ack-btn")!.disabled).toBe(true);
    expect(row.querySelector(".status")!.textContent).toBe("acknowledged");
    expect(row.querySelector(".countdown")!.getAttribute("data-remaining-ms")).toBe("");
  });

  it("renders re-renders idempotently: one row per case", () => {
    applyRecord(state, rec("alert", caseDict() as unknown as Record<string, unknown>), 0);
    render(root, state, 0);
    render(root, state, 0);
    expect(root.querySelectorAll("tr[data-case-id]")).toHaveLength(1);
  });
});

describe("device panels", () => {
  it("shows vitals with a Normal badge", () => {
    applyRecord(
      state,
      rec("vitals", { bpm: 72, spo2_pct: 97.5, quality: "good", classification: { normal: true, reasons: [] } }),
      0,
    );
    render(root, state, 0);
    const panel = root.querySelector(`.panel[data-device="watch-1"]`)!;
    expect(panel.querySelector(".vitals-bpm")!.textContent).toBe("72");
    expect(panel.querySelector(".vitals-spo2")!.textContent).toBe("97.5");
    expect(panel.querySelector(".badge")!.textContent).toBe("Normal");
  });

  it("flags abnormal vitals with the reasons", () => {
    applyRecord(
      state,
      rec("vitals", { bpm: 40, spo2_pct: 88, quality: "good", classification: { normal: false, reasons: ["bpm", "spo2"] } }),
      0,
    );
    render(root, state, 0);
    const badge = root.querySelector(`.panel[data-device="watch-1"] .badge`)!;
    expect(badge.textContent).toContain("Abnormal");
    expect(badge.textContent).toContain("spo2");
    expect(badge.className).toContain("abnormal");
  });

  it("tracks fixes on the map pane", () => {
    applyRecord(state, rec("fix", { t_ms: 1000, lat: 48.1173, lon: 11.5167, valid: true, source: "wire" }), 0);
    applyRecord(state, rec("fix", { t_ms: 2000, lat: 48.1174, lon: 11.5168, valid: true, source: "wire" }), 0);
    render(root, state, 0);
    const canvas = root.querySelector<HTMLCanvasElement>(`.panel[data-device="watch-1"] canvas.map`)!;
    expect(canvas.dataset.points).toBe("2");
    expect(canvas.dataset.last).toBe("48.1174,11.5168");
  });

  it("shows wearer name and address after hydration", () => {
    const snapshot: DeviceStateResponse = {
      device: "watch-1",
      connected: true,
      connected_at_ms: 0,
      frame_errors: 0,
      latest_vitals: null,
      latest_fix: null,
      address: "Stub Street 1",
      cases: [],
      profile: { name: "Asha", contacts: [] },
      last_seq: 0,
      now_ms: 0,
    };
    hydrateDevice(state, snapshot, 0);
    render(root, state, 0);
    const panel = root.querySelector(`.panel[data-device="watch-1"]`)!;
    expect(panel.querySelector(".device-name")!.textContent).toBe("Asha (watch-1)");
    expect(panel.querySelector(".address")!.textContent).toBe("Stub Street 1");
    expect(panel.querySelector(".link-state")!.textContent).toBe("connected");
  });
});

describe("connection state", () => {
  it("shows the stale banner only when the feed goes quiet", () => {
    render(root, state, 0);
    expect(root.querySelector<HTMLElement>("#stale-banner")!.hidden).toBe(true);
    state.stale = true;
    render(root, state, 0);
    expect(root.querySelector<HTMLElement>("#stale-banner")!.hidden).toBe(false);
    state.stale = false;
    render(root, state, 0);
    expect(root.querySelector<HTMLElement>("#stale-banner")!.hidden).toBe(true);
  });

  it("switches the connection dot with the stream", () => {
    state.connected = true;
    render(root, state, 0);
    expect(root.querySelector("#conn-dot")!.className).toBe("dot live");
    state.connected = false;
    render(root, state, 0);
    expect(root.querySelector("#conn-dot")!.className).toBe("dot dead");
  });
});

describe("event feed", () => {
  it("renders one line per applied record, in order, append-only", () => {
    applyRecord(state, rec("vitals", { bpm: 72, spo2_pct: 97.5, quality: "good", classification: null }), 0);
    render(root, state, 0);
    applyRecord(state, rec("fix", { t_ms: 2000, lat: 48.1, lon: 11.5, valid: true, source: "wire" }), 0);
    applyRecord(state, rec("alert", caseDict() as unknown as Record<string, unknown>), 0);
    render(root, state, 0);
    const items = [...root.querySelectorAll("#feed li")];
    expect(items.map((li) => li.getAttribute("data-seq"))).toEqual(["1", "2", "3"]);
    expect(items[2].textContent).toContain("vitals_abnormal awaiting_user_ack");
    expect(root.querySelector("#feed-count")!.textContent).toBe("3 events");
  });

  it("does not duplicate feed rows when the same state renders twice", () => {
    applyRecord(state, rec("vitals", { bpm: 72, spo2_pct: 97.5, quality: "good", classification: null }), 0);
    render(root, state, 0);
    render(root, state, 0);
    expect(root.querySelectorAll("#feed li")).toHaveLength(1);
  });
});
