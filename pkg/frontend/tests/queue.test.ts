// Queue view fidelity: the rendered table must carry exactly the rows
// and fields of the GET /intel/queue payload (seeded 25-item fixture),
// in server order, with no client-side rescoring.

import { describe, expect, it } from 'vitest';
import { readFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';

import {
  distinctValues,
  filterRows,
  formatAsr,
  formatScore,
  renderQueueRow,
  renderQueueTable,
} from '../src/queue.js';
import type { QueueRow } from '../src/types.js';

const fixturePath = fileURLToPath(new URL('./fixtures/queue.json', import.meta.url));
const fixture: { items: QueueRow[] } = JSON.parse(readFileSync(fixturePath, 'utf-8'));

describe('queue fixture fidelity', () => {
  it('has the seeded 25 items', () => {
    expect(fixture.items).toHaveLength(25);
  });

  it('renders one row per item, in payload order', () => {
    const html = renderQueueTable(fixture.items);
    const ids = [...html.matchAll(/data-item-id="([^"]+)"/g)].map((m) => m[1]);
    expect(ids).toEqual(fixture.items.map((r) => r.id));
  });

  it('every field of every row appears exactly as served', () => {
    for (const row of fixture.items) {
      const html = renderQueueRow(row);
      expect(html).toContain(`data-item-id="${row.id}"`);
      expect(html).toContain(`<td>${row.ingested_at}</td>`);
      expect(html).toContain(`<td>${row.title}</td>`);
      expect(html).toContain(`<td>${row.affected_models.join(', ') || '-'}</td>`);
      expect(html).toContain(`<td>${row.ttps.join(', ') || '-'}</td>`);
      expect(html).toContain(`<td>${formatAsr(row.reported_asr)}</td>`);
      expect(html).toContain(`<td>${formatScore(row.pir_score)}</td>`);
      expect(html).toContain(`<td>${row.status}</td>`);
    }
  });

  it('is sorted by pir_score descending (as served; client must not reorder)', () => {
    const scores = fixture.items.map((r) => r.pir_score ?? -1);
    const sorted = [...scores].sort((a, b) => b - a);
    expect(scores).toEqual(sorted);
  });

  it('renders an explicit empty state', () => {
    expect(renderQueueTable([])).toContain('No intel items');
  });
});

describe('filters', () => {
  it('status filter keeps only matching rows', () => {
    const rows = filterRows(fixture.items, { status: 'queued' });
    expect(rows).toHaveLength(25); // all are queued in the fixture
    expect(filterRows(fixture.items, { status: 'archived' })).toHaveLength(0);
  });

  it('score range filter is inclusive on both ends', () => {
    const rows = filterRows(fixture.items, { minScore: 3, maxScore: 5 });
    expect(rows.length).toBeGreaterThan(0);
    for (const row of rows) {
      expect(row.pir_score).not.toBeNull();
      expect(row.pir_score!).toBeGreaterThanOrEqual(3);
      expect(row.pir_score!).toBeLessThanOrEqual(5);
    }
    const excluded = fixture.items.filter((r) => !rows.includes(r));
    for (const row of excluded) {
      expect(row.pir_score === null || row.pir_score < 3 || row.pir_score > 5).toBe(true);
    }
  });

  it('ttp and model filters match membership', () => {
    const byTtp = filterRows(fixture.items, { ttp: 'jailbreak' });
    expect(byTtp.length).toBeGreaterThan(0);
    for (const row of byTtp) expect(row.ttps).toContain('jailbreak');

    const byModel = filterRows(fixture.items, { model: 'chat-large' });
    expect(byModel.length).toBeGreaterThan(0);
    for (const row of byModel) expect(row.affected_models).toContain('chat-large');
  });

  it('distinctValues exposes only values present in the data', () => {
    const { ttps, models } = distinctValues(fixture.items);
    expect(ttps).toContain('prompt_injection');
    expect(models).toContain('code-assist');
    for (const t of ttps) {
      expect(fixture.items.some((r) => r.ttps.includes(t))).toBe(true);
    }
  });
});

describe('escaping', () => {
  it('html in titles is escaped, not interpreted', () => {
    const row: QueueRow = {
      id: 'itm-x',
      ingested_at: '2025-06-01T00:00:00+00:00',
      title: '<script>alert(1)</script>',
      affected_models: [],
      ttps: [],
      reported_asr: null,
      pir_score: 1.0,
      status: 'queued',
    };
    const html = renderQueueRow(row);
    expect(html).not.toContain('<script>');
    expect(html).toContain('&lt;script&gt;');
  });
});
