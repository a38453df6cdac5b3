// Dashboard projections: epoch diffs for rollback confirmation, gate and
// shadow summaries rendered verbatim from API payloads.

import { describe, expect, it } from 'vitest';

import {
  describeDiff,
  epochDiff,
  renderEnvironment,
  renderGateSummary,
  renderShadowSummary,
} from '../src/dashboard.js';
import type { DeploymentSnapshot } from '../src/types.js';

const epoch1: DeploymentSnapshot = {
  environment: 'production',
  epoch: 1,
  created_at: '2025-06-01T00:00:00+00:00',
  assignments: [
    { version_id: 'gv-0001', mode: 'serving', fraction: 0.9 },
    { version_id: 'gv-0002', mode: 'serving', fraction: 0.1 },
    { version_id: 'gv-0003', mode: 'shadow', fraction: 1.0 },
  ],
};

const epoch2: DeploymentSnapshot = {
  environment: 'production',
  epoch: 2,
  created_at: '2025-06-02T00:00:00+00:00',
  assignments: [{ version_id: 'gv-0002', mode: 'serving', fraction: 1.0 }],
};

describe('epochDiff', () => {
  it('empty diff for identical epochs', () => {
    expect(epochDiff(epoch1, epoch1)).toEqual([]);
    expect(describeDiff([])).toBe('no routing changes');
  });

  it('reports exact fraction transitions per version', () => {
    const lines = epochDiff(epoch2, epoch1); // current epoch2, rolling back to epoch1
    const byVersion = Object.fromEntries(lines.map((l) => [`${l.version_id}|${l.mode}`, l]));
    expect(byVersion['gv-0001|serving']).toEqual({
      version_id: 'gv-0001',
      mode: 'serving',
      from: null,
      to: 0.9,
    });
    expect(byVersion['gv-0002|serving']).toEqual({
      version_id: 'gv-0002',
      mode: 'serving',
      from: 1.0,
      to: 0.1,
    });
    expect(byVersion['gv-0003|shadow']).toEqual({
      version_id: 'gv-0003',
      mode: 'shadow',
      from: null,
      to: 1.0,
    });
  });

  it('describes the diff for the confirmation dialog', () => {
    const text = describeDiff(epochDiff(epoch2, epoch1));
    expect(text).toContain('gv-0002 (serving): 1 -> 0.1');
    expect(text).toContain('gv-0001 (serving): absent -> 0.9');
  });
});

describe('render summaries', () => {
  it('gate summary shows verdict and deltas from the payload', () => {
    const html = renderGateSummary({
      baseline: 'gv-0001',
      candidate: 'gv-0002',
      corpus: 'golden',
      fp_rate_delta: 0.002,
      recall_delta: 0.05,
      flag_rate_delta: 0.0064,
      pass: false,
      created_at: 'x',
    });
    expect(html).toContain('FAIL');
    expect(html).toContain('0.0020');
    expect(html).toContain('0.0500');
  });

  it('shadow summary shows window and disagreements', () => {
    const html = renderShadowSummary({
      serving_version: 'gv-0001',
      shadow_version: 'gv-0002',
      window: 1000,
      serving_flag_rate: 0.0,
      shadow_flag_rate: 0.001,
      flag_rate_delta: 0.001,
      disagreement_count: 1,
    });
    expect(html).toContain('1 disagreement(s) over 1000 requests');
  });

  it('environment pane lists every epoch for rollback selection', () => {
    const html = renderEnvironment('production', epoch2, [epoch1, epoch2], null, null);
    expect(html).toContain('production - epoch 2');
    expect(html).toContain('<option value="1">');
    expect(html).toContain('<option value="2">');
    expect(html).toContain('data-action="promote"');
    expect(html).toContain('data-action="rollback"');
    expect(html).toContain('No gate report recorded');
  });
});
