// Intel queue view: pure row filtering and rendering over the exact
// GET /intel/queue payload. Sorting comes from the server (score desc,
// ingest time asc); the client never reorders or rescores.

import type { QueueFilters, QueueRow } from './types.js';

export function filterRows(rows: QueueRow[], filters: QueueFilters): QueueRow[] {
  return rows.filter((row) => {
    if (filters.status && row.status !== filters.status) return false;
    if (filters.ttp && !row.ttps.includes(filters.ttp)) return false;
    if (filters.model && !row.affected_models.includes(filters.model)) return false;
    if (filters.minScore !== undefined) {
      if (row.pir_score === null || row.pir_score < filters.minScore) return false;
    }
    if (filters.maxScore !== undefined) {
      if (row.pir_score === null || row.pir_score > filters.maxScore) return false;
    }
    return true;
  });
}

export function distinctValues(rows: QueueRow[]): { ttps: string[]; models: string[] } {
  const ttps = new Set<string>();
  const models = new Set<string>();
  for (const row of rows) {
    row.ttps.forEach((t) => ttps.add(t));
    row.affected_models.forEach((m) => models.add(m));
  }
  return { ttps: [...ttps].sort(), models: [...models].sort() };
}

export function escapeHtml(value: string): string {
  return value
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;');
}

export function formatScore(score: number | null): string {
  return score === null ? '-' : score.toFixed(2);
}

export function formatAsr(asr: number | null): string {
  return asr === null ? '-' : String(asr);
}

// One <tr> per row carrying every field of the payload, in payload order.
export function renderQueueRow(row: QueueRow): string {
  const cells = [
    row.ingested_at,
    row.title,
    row.affected_models.join(', ') || '-',
    row.ttps.join(', ') || '-',
    formatAsr(row.reported_asr),
    formatScore(row.pir_score),
    row.status,
  ];
  const tds = cells.map((c) => `<td>${escapeHtml(c)}</td>`).join('');
  return `<tr data-item-id="${escapeHtml(row.id)}">${tds}</tr>`;
}

export function renderQueueTable(rows: QueueRow[]): string {
  if (rows.length === 0) {
    return '<p class="empty-state">No intel items match the current filters.</p>';
  }
  const header =
    '<tr><th>Ingested</th><th>Title</th><th>Affected models</th>' +
    '<th>TTPs</th><th>Reported ASR</th><th>PIR score</th><th>Status</th></tr>';
  return `<table class="queue"><thead>${header}</thead><tbody>${rows
    .map(renderQueueRow)
    .join('')}</tbody></table>`;
}
