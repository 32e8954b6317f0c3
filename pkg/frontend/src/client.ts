// Thin wrappers over the gateway REST endpoints. All mutations the dashboard
// can perform go through here: acknowledging a case and registering a
// profile. Everything else is read-only.

import { AlertCase, DeviceListEntry, DeviceStateResponse, StoredRecord } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function json<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail = (body as { error?: string }).error ?? response.statusText;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export class GatewayClient {
  constructor(
    public baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  listDevices(): Promise<{ devices: DeviceListEntry[] }> {
    return this.fetchFn(`${this.baseUrl}/v1/devices`).then((r) => json(r));
  }

  getState(device: string): Promise<DeviceStateResponse> {
    return this.fetchFn(`${this.baseUrl}/v1/devices/${encodeURIComponent(device)}/state`).then(
      (r) => json(r),
    );
  }

  getRecords(device: string, sinceSeq = 0): Promise<{ records: StoredRecord[] }> {
    const path = `/v1/devices/${encodeURIComponent(device)}/records?since=${sinceSeq}`;
    return this.fetchFn(`${this.baseUrl}${path}`).then((r) => json(r));
  }

  ack(device: string, caseId: string): Promise<{ case: AlertCase }> {
    return this.fetchFn(`${this.baseUrl}/v1/devices/${encodeURIComponent(device)}/ack`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ case_id: caseId }),
    }).then((r) => json(r));
  }

  registerProfile(device: string, profile: Record<string, unknown>): Promise<unknown> {
    return this.fetchFn(`${this.baseUrl}/v1/profile`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ device, ...profile }),
    }).then((r) => json(r));
  }
}
