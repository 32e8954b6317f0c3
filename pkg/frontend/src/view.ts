// DOM rendering. Renders are full rebuilds of each section from ViewState,
// so applying the same state twice paints the same pixels: nothing here
// accumulates outside the store.

import {
  allCases,
  countdownMs,
  formatCountdown,
  DevicePanel,
  ViewState,
} from "./store.js";
import { AlertCase, caseIsOpen } from "./types.js";

const STATUS_LABEL: Record<string, string> = {
  awaiting_user_ack: "awaiting ack",
  dispatching: "dispatching",
  dispatched: "dispatched",
  acknowledged: "acknowledged",
  suppressed: "suppressed",
};

const CAUSE_LABEL: Record<string, string> = {
  panic: "Panic button",
  fall_confirmed: "Fall detected",
  vitals_abnormal: "Abnormal vitals",
};

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function render(root: HTMLElement, state: ViewState, localNowMs: number): void {
  renderTopbar(root, state);
  renderAlerts(root, state, localNowMs);
  renderPanels(root, state);
  renderFeed(root, state);
}

function renderTopbar(root: HTMLElement, state: ViewState): void {
  const dot = root.querySelector<HTMLElement>("#conn-dot");
  if (dot) dot.className = state.connected ? "dot live" : "dot dead";
  const label = root.querySelector<HTMLElement>("#conn-label");
  if (label) label.textContent = state.connected ? "live" : "disconnected";
  const banner = root.querySelector<HTMLElement>("#stale-banner");
  if (banner) banner.hidden = !state.stale;
}

function renderAlerts(root: HTMLElement, state: ViewState, localNowMs: number): void {
  const tbody = root.querySelector<HTMLElement>("#alerts tbody");
  if (!tbody) return;
  const rows = allCases(state);
  if (rows.length === 0) {
    tbody.innerHTML = `<tr class="empty"><td colspan="6">no alerts</td></tr>`;
    return;
  }
  tbody.innerHTML = rows.map((row) => alertRowHtml(state, row, localNowMs)).join("");
}

function alertRowHtml(state: ViewState, alertCase: AlertCase, localNowMs: number): string {
  const remaining = countdownMs(state, alertCase, localNowMs);
  const countdown =
    remaining === null
      ? `<span class="countdown" data-remaining-ms="">&mdash;</span>`
      : `<span class="countdown" data-remaining-ms="${Math.round(remaining)}">${formatCountdown(remaining)}</span>`;
  const open = caseIsOpen(alertCase.status);
  const ackDisabled = alertCase.status === "awaiting_user_ack" ? "" : "disabled";
  const where = alertCase.address ?? (alertCase.fix ? `${alertCase.fix.lat.toFixed(5)}, ${alertCase.fix.lon.toFixed(5)}` : "unknown");
  const reasons = alertCase.reasons.length ? ` (${alertCase.reasons.join(", ")})` : "";
  return `<tr data-case-id="${esc(alertCase.id)}" class="${open ? "open" : "closed"}">
    <td class="cause">${esc(CAUSE_LABEL[alertCase.cause] ?? alertCase.cause)}${esc(reasons)}</td>
    <td>${esc(alertCase.wearer)}</td>
    <td class="where">${esc(where)}</td>
    <td><span class="status st-${esc(alertCase.status)}">${esc(STATUS_LABEL[alertCase.status] ?? alertCase.status)}</span></td>
    <td>${countdown}</td>
    <td><button class="ack-btn" data-device="${esc(alertCase.device)}" data-case-id="${esc(alertCase.id)}" ${ackDisabled}>Acknowledge</button></td>
  </tr>`;
}

function renderPanels(root: HTMLElement, state: ViewState): void {
  const host = root.querySelector<HTMLElement>("#panels");
  if (!host) return;
  const devices = [...state.devices.values()];
  const seen = new Set<string>();
  for (const panel of devices) {
    seen.add(panel.device);
    let el = host.querySelector<HTMLElement>(`.panel[data-device="${cssEscape(panel.device)}"]`);
    if (!el) {
      el = document.createElement("section");
      el.className = "panel";
      el.dataset.device = panel.device;
      el.innerHTML = panelSkeleton();
      host.appendChild(el);
    }
    updatePanel(el, panel);
  }
  for (const el of [...host.querySelectorAll<HTMLElement>(".panel")]) {
    if (!seen.has(el.dataset.device ?? "")) el.remove();
  }
}

function panelSkeleton(): string {
  return `
    <header><span class="device-name"></span><span class="link-state"></span></header>
    <div class="vitals-line">
      <span class="vitals-bpm metric">&mdash;</span><span class="unit">bpm</span>
      <span class="vitals-spo2 metric">&mdash;</span><span class="unit">% SpO2</span>
      <span class="badge"></span>
    </div>
    <div class="address"></div>
    <canvas class="map" width="260" height="160"></canvas>`;
}

function updatePanel(el: HTMLElement, panel: DevicePanel): void {
  const name = el.querySelector<HTMLElement>(".device-name");
  if (name) name.textContent = panel.wearer ? `${panel.wearer} (${panel.device})` : panel.device;
  const link = el.querySelector<HTMLElement>(".link-state");
  if (link) {
    link.textContent = panel.connected ? "connected" : "offline";
    link.className = panel.connected ? "link-state on" : "link-state off";
  }
  const bpm = el.querySelector<HTMLElement>(".vitals-bpm");
  const spo2 = el.querySelector<HTMLElement>(".vitals-spo2");
  const badge = el.querySelector<HTMLElement>(".badge");
  if (panel.vitals) {
    if (bpm) bpm.textContent = String(panel.vitals.bpm);
    if (spo2) spo2.textContent = panel.vitals.spo2_pct.toFixed(1);
    if (badge) {
      const cls = panel.vitals.classification;
      if (cls === null) {
        badge.textContent = "no signal";
        badge.className = "badge quiet";
      } else if (cls.normal) {
        badge.textContent = "Normal";
        badge.className = "badge normal";
      } else {
        badge.textContent = `Abnormal: ${cls.reasons.join(", ")}`;
        badge.className = "badge abnormal";
      }
    }
  }
  const address = el.querySelector<HTMLElement>(".address");
  if (address) {
    address.textContent = panel.address ?? (panel.fix ? `${panel.fix.lat.toFixed(5)}, ${panel.fix.lon.toFixed(5)}` : "");
  }
  const canvas = el.querySelector<HTMLCanvasElement>("canvas.map");
  if (canvas) {
    canvas.dataset.points = String(panel.track.length);
    if (panel.fix) canvas.dataset.last = `${panel.fix.lat},${panel.fix.lon}`;
    drawTrack(canvas, panel.track);
  }
}

let canvas2dAvailable = true; // cleared on the first environment without 2d contexts

/** Plot the recent fixes on a plain lat/lon canvas: track line + last point. */
function drawTrack(canvas: HTMLCanvasElement, track: { lat: number; lon: number }[]): void {
  if (!canvas2dAvailable) return;
  let ctx: CanvasRenderingContext2D | null = null;
  try {
    ctx = canvas.getContext("2d");
  } catch {
    ctx = null;
  }
  if (!ctx) {
    canvas2dAvailable = false;
    return;
  }
  if (track.length === 0) return;
  const pad = 14;
  let latLo = Infinity, latHi = -Infinity, lonLo = Infinity, lonHi = -Infinity;
  for (const p of track) {
    latLo = Math.min(latLo, p.lat); latHi = Math.max(latHi, p.lat);
    lonLo = Math.min(lonLo, p.lon); lonHi = Math.max(lonHi, p.lon);
  }
  const latSpan = Math.max(latHi - latLo, 1e-4);
  const lonSpan = Math.max(lonHi - lonLo, 1e-4);
  const x = (lon: number) => pad + ((lon - lonLo) / lonSpan) * (canvas.width - 2 * pad);
  const y = (lat: number) => canvas.height - pad - ((lat - latLo) / latSpan) * (canvas.height - 2 * pad);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#58a6ff";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  track.forEach((p, i) => (i === 0 ? ctx.moveTo(x(p.lon), y(p.lat)) : ctx.lineTo(x(p.lon), y(p.lat))));
  ctx.stroke();
  const last = track[track.length - 1];
  ctx.fillStyle = "#3fb950";
  ctx.beginPath();
  ctx.arc(x(last.lon), y(last.lat), 4, 0, Math.PI * 2);
  ctx.fill();
}

function renderFeed(root: HTMLElement, state: ViewState): void {
  const list = root.querySelector<HTMLElement>("#feed");
  if (!list) return;
  // The feed only ever grows, so append the rows that are new since the
  // last render; re-rendering an already-applied record never duplicates.
  let from = list.children.length;
  if (from > state.feed.length) {
    list.innerHTML = "";
    from = 0;
  }
  for (let i = from; i < state.feed.length; i++) {
    const rec = state.feed[i];
    const li = document.createElement("li");
    li.dataset.seq = String(rec.seq);
    li.dataset.kind = rec.kind;
    li.textContent = `#${rec.seq} t=${rec.t_ms}ms ${rec.device} ${rec.kind}${feedDetail(rec.kind, rec.payload)}`;
    list.appendChild(li);
  }
  const counter = root.querySelector<HTMLElement>("#feed-count");
  if (counter) counter.textContent = `${state.feed.length} events`;
}

function feedDetail(kind: string, payload: Record<string, unknown>): string {
  if (kind === "vitals") return ` bpm=${payload.bpm} spo2=${payload.spo2_pct}`;
  if (kind === "fix") return ` ${payload.lat}, ${payload.lon}`;
  if (kind === "alert") return ` ${payload.cause} ${payload.status} (${payload.id})`;
  if (kind === "ack") return ` ${payload.case_id} via ${payload.source}`;
  return "";
}

export function showToast(root: HTMLElement, message: string): void {
  const toast = root.querySelector<HTMLElement>("#toast");
  if (!toast) return;
  toast.textContent = message;
  toast.hidden = false;
  setTimeout(() => {
    toast.hidden = true;
  }, 4000);
}

function cssEscape(value: string): string {
  return value.replace(/["\\]/g, "\\$&");
}
