// Typed client for the gateway HTTP API. Every mutation sends an
// Idempotency-Key so retries replay instead of re-executing, matching
// the CLI's contract.

import type {
  AuditEntry,
  DeploymentSnapshot,
  GateReportView,
  QueueRow,
  Report,
  ShadowReportView,
} from './types.js';

export interface ApiConfig {
  baseUrl: string;
  adminToken: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

function newIdempotencyKey(): string {
  return (globalThis.crypto?.randomUUID?.() ??
    `k-${Date.now()}-${Math.random().toString(36).slice(2)}`);
}

export class ApiClient {
  constructor(private readonly config: ApiConfig) {}

  private async request<T>(
    method: string,
    path: string,
    options: { body?: unknown; admin?: boolean; idempotent?: boolean } = {},
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (options.body !== undefined) headers['Content-Type'] = 'application/json';
    if (options.admin) headers['X-Admin-Token'] = this.config.adminToken;
    if (options.idempotent !== false && method !== 'GET') {
      headers['Idempotency-Key'] = newIdempotencyKey();
    }
    const response = await fetch(this.config.baseUrl + path, {
      method,
      headers,
      body: options.body === undefined ? undefined : JSON.stringify(options.body),
    });
    const text = await response.text();
    let payload: unknown = {};
    try {
      payload = text ? JSON.parse(text) : {};
    } catch {
      payload = { detail: text };
    }
    if (!response.ok) {
      const err = payload as { error?: string; detail?: string };
      throw new ApiError(
        response.status,
        err.error ?? `HTTP${response.status}`,
        err.detail ?? text,
      );
    }
    return payload as T;
  }

  // --- health / intel ------------------------------------------------------

  async health(): Promise<{ status: string; store: string }> {
    return this.request('GET', '/healthz');
  }

  async intelQueue(status = 'queued', minScore?: number): Promise<QueueRow[]> {
    const params = new URLSearchParams();
    params.set('status', status); // empty string = any status
    if (minScore !== undefined) params.set('min_score', String(minScore));
    const data = await this.request<{ items: QueueRow[] }>(
      'GET',
      `/intel/queue?${params.toString()}`,
    );
    return data.items;
  }

  async intelItem(itemId: string): Promise<Record<string, unknown>> {
    const data = await this.request<{ item: Record<string, unknown> }>(
      'GET',
      `/intel/items/${itemId}`,
    );
    return data.item;
  }

  async reports(itemId: string): Promise<Report[]> {
    const data = await this.request<{ reports: Report[] }>(
      'GET',
      `/intel/items/${itemId}/reports`,
    );
    return data.reports;
  }

  async generateReport(itemId: string): Promise<Report> {
    const data = await this.request<{ report: Report }>(
      'POST',
      `/intel/items/${itemId}/report`,
      { body: { mode: 'generate' } },
    );
    return data.report;
  }

  async finalizeReport(
    itemId: string,
    edits: Record<string, string>,
    baseRevision: number,
  ): Promise<Report> {
    const data = await this.request<{ report: Report }>(
      'POST',
      `/intel/items/${itemId}/report`,
      { body: { mode: 'finalize', edits, base_revision: baseRevision } },
    );
    return data.report;
  }

  async beginReview(itemId: string): Promise<void> {
    await this.request('PATCH', `/intel/items/${itemId}`, {
      body: { status: 'in_review' },
    });
  }

  // --- release admin ---------------------------------------------------------

  async deployments(): Promise<
    Record<string, { current: DeploymentSnapshot; history: DeploymentSnapshot[] }>
  > {
    const data = await this.request<{
      environments: Record<
        string,
        { current: DeploymentSnapshot; history: DeploymentSnapshot[] }
      >;
    }>('GET', '/admin/deployments', { admin: true });
    return data.environments;
  }

  async versions(): Promise<{ version_id: string }[]> {
    const data = await this.request<{ versions: { version_id: string }[] }>(
      'GET',
      '/admin/versions',
      { admin: true },
    );
    return data.versions;
  }

  async gateReports(candidate?: string): Promise<GateReportView[]> {
    const suffix = candidate ? `?candidate=${encodeURIComponent(candidate)}` : '';
    const data = await this.request<{ reports: GateReportView[] }>(
      'GET',
      `/admin/gate-reports${suffix}`,
      { admin: true },
    );
    return data.reports;
  }

  async runGate(
    baseline: string,
    candidate: string,
    corpus: string,
  ): Promise<GateReportView> {
    const data = await this.request<{ gate: GateReportView }>(
      'POST',
      '/admin/gate',
      { body: { baseline, candidate, corpus }, admin: true },
    );
    return data.gate;
  }

  async promote(
    environment: string,
    versionId: string,
    schedule: number[],
    steps?: number,
  ): Promise<DeploymentSnapshot> {
    const data = await this.request<{ deployment: DeploymentSnapshot }>(
      'POST',
      '/admin/promote',
      {
        body: { environment, version_id: versionId, schedule, steps: steps ?? null },
        admin: true,
      },
    );
    return data.deployment;
  }

  async rollback(environment: string, epoch: number): Promise<DeploymentSnapshot> {
    const data = await this.request<{ deployment: DeploymentSnapshot }>(
      'POST',
      '/admin/rollback',
      { body: { environment, epoch }, admin: true },
    );
    return data.deployment;
  }

  async shadowReport(
    serving: string,
    shadow: string,
    minSamples?: number,
  ): Promise<ShadowReportView> {
    const params = new URLSearchParams({ serving, shadow });
    if (minSamples !== undefined) params.set('min_samples', String(minSamples));
    const data = await this.request<{ report: ShadowReportView }>(
      'GET',
      `/admin/shadow-report?${params.toString()}`,
      { admin: true },
    );
    return data.report;
  }

  async audit(): Promise<AuditEntry[]> {
    const data = await this.request<{ entries: AuditEntry[] }>(
      'GET',
      '/admin/audit',
      { admin: true },
    );
    return data.entries;
  }
}
