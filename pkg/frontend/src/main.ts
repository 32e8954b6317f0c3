// Dashboard wiring: hydrate from snapshots, subscribe to the event feed,
// keep countdowns ticking, and route Acknowledge clicks back to the gateway.

import { ApiError, GatewayClient } from "./client.js";
import { EventStream } from "./sse.js";
import {
  applyRecord,
  emptyState,
  hydrateDevice,
  panelFor,
  ViewState,
} from "./store.js";
import { StoredRecord } from "./types.js";
import { render, showToast } from "./view.js";

const STALE_AFTER_MS = 5000;
const RENDER_EVERY_MS = 250;

export interface Dashboard {
  state: ViewState;
  stream: EventStream;
  client: GatewayClient;
  refresh: () => Promise<void>;
  stop: () => void;
}

/**
 * Boot the dashboard against a gateway. Returns the live pieces so tests
 * (and the console) can poke at them.
 */
export function startDashboard(root: HTMLElement, baseUrl: string): Dashboard {
  const client = new GatewayClient(baseUrl);
  const state = emptyState();
  let lastActivityMs = Date.now();

  const stream = new EventStream(baseUrl, {
    onEvent: (ev) => {
      if (ev.event !== "record") return;
      try {
        const rec = JSON.parse(ev.data) as StoredRecord;
        applyRecord(state, rec, Date.now());
      } catch {
        // a malformed event is dropped; the next snapshot refresh heals
      }
    },
    onActivity: () => {
      lastActivityMs = Date.now();
      state.stale = false;
    },
    onConnectionChange: (connected) => {
      state.connected = connected;
      if (connected) void refresh();
    },
  });

  async function refresh(): Promise<void> {
    try {
      const { devices } = await client.listDevices();
      for (const entry of devices) {
        const snapshot = await client.getState(entry.device);
        hydrateDevice(state, snapshot, Date.now());
        panelFor(state, entry.device).connected = entry.connected;
      }
    } catch {
      // gateway briefly unreachable; the staleness banner covers it
    }
  }

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement | null;
    const button = target?.closest<HTMLButtonElement>("button.ack-btn");
    if (!button || button.disabled) return;
    button.disabled = true;
    const device = button.dataset.device ?? "";
    const caseId = button.dataset.caseId ?? "";
    client
      .ack(device, caseId)
      .then(({ case: updated }) => {
        const panel = panelFor(state, device);
        panel.cases.set(updated.id, updated);
      })
      .catch(async (err: unknown) => {
        const message = err instanceof ApiError ? err.message : "acknowledge failed";
        showToast(root, message);
        await refresh();
      });
  });

  const ticker = setInterval(() => {
    state.stale = Date.now() - lastActivityMs > STALE_AFTER_MS;
    render(root, state, Date.now());
  }, RENDER_EVERY_MS);

  void refresh().then(() => render(root, state, Date.now()));
  stream.start();

  return {
    state,
    stream,
    client,
    refresh,
    stop: () => {
      clearInterval(ticker);
      stream.stop();
    },
  };
}

// Browser entry point: gateway URL from ?gateway=, same origin otherwise.
declare global {
  interface Window {
    dashboard?: Dashboard;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const params = new URLSearchParams(location.search);
  const base = params.get("gateway") ?? location.origin;
  window.dashboard = startDashboard(document.getElementById("app")!, base.replace(/\/$/, ""));
}
