import {
  DiscoverResponseSchema,
  DiscoveryParams,
  LogStats,
  ModelDoc,
  ModelDocSchema,
  ServiceErrorSchema,
  StatsSchema,
  UploadResponseSchema,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    readonly detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

async function raiseFor(resp: Response): Promise<never> {
  const body = ServiceErrorSchema.safeParse(await resp.json().catch(() => null));
  if (body.success) {
    throw new ServiceError(resp.status, body.data.error, body.data.detail);
  }
  throw new ServiceError(resp.status, "unknown", resp.statusText);
}

/** Thin typed wrapper over the discovery service HTTP API. */
export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async uploadLog(mdl: string): Promise<{ log_id: string; events: number }> {
    const resp = await fetch(this.url("/logs"), { method: "POST", body: mdl });
    if (!resp.ok) await raiseFor(resp);
    return UploadResponseSchema.parse(await resp.json());
  }

  async stats(logId: string): Promise<LogStats> {
    const resp = await fetch(this.url(`/logs/${logId}/stats`));
    if (!resp.ok) await raiseFor(resp);
    return StatsSchema.parse(await resp.json());
  }

  async discover(
    logId: string,
    params: DiscoveryParams,
  ): Promise<{ model_id: string; cached: boolean }> {
    const resp = await fetch(this.url(`/logs/${logId}/discover`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(params),
    });
    if (!resp.ok) await raiseFor(resp);
    return DiscoverResponseSchema.parse(await resp.json());
  }

  async model(modelId: string): Promise<ModelDoc> {
    const resp = await fetch(this.url(`/models/${modelId}`));
    if (!resp.ok) await raiseFor(resp);
    return ModelDocSchema.parse(await resp.json());
  }

  async dot(modelId: string): Promise<string> {
    const resp = await fetch(this.url(`/models/${modelId}/dot`));
    if (!resp.ok) await raiseFor(resp);
    return resp.text();
  }

  /**
   * Drill-down statistics for one transition, by visible label.
   * The raw response body is preserved so panels can display exactly
   * what the service reported.
   */
  async transitionPanel(
    modelId: string,
    label: string,
  ): Promise<{ raw: string; data: unknown }> {
    const resp = await fetch(
      this.url(`/models/${modelId}/transitions/${encodeURIComponent(label)}`),
    );
    if (!resp.ok) await raiseFor(resp);
    const raw = await resp.text();
    return { raw, data: JSON.parse(raw) };
  }

  async flatten(logId: string, objectType: string): Promise<string> {
    const resp = await fetch(this.url(`/logs/${logId}/flatten`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ type: objectType }),
    });
    if (!resp.ok) await raiseFor(resp);
    return resp.text();
  }
}
