// Live parity: the console's finalize-report and promote/rollback (and
// gate) actions must produce exactly the same server state transitions
// as the equivalent CLI commands. Two identical platforms are built,
// one driven through the console's ApiClient against a live server, one
// through the CLI against its own data directory; their audit logs are
// then compared entry for entry (modulo actor and wall time).
//
// The test also checks queue-view fidelity against the live server.
// It skips itself when the Python backend is not importable.

import { execFileSync, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { renderQueueTable } from '../src/queue.js';
import type { AuditEntry, QueueRow } from '../src/types.js';

const ADMIN_TOKEN = 'parity-token';
const PORT = 8741;
const BASE = `http://127.0.0.1:${PORT}`;

const RULE = `rule parity_rule {
  meta:
    description = "parity test rule"
    category = "prompt_injection"
    severity = 3
    created = "2025-06-01"
  strings:
    $a = "ignore previous instructions" nocase
  condition:
    $a
}
`;

const INTEL_DOC = {
  title: 'Parity attack writeup',
  body: 'A technique using the phrase ignore previous instructions, with details.',
  ttps: ['prompt_injection'],
  affected_models: ['chat-large'],
  reported_asr: 0.5,
};

const FINAL_EDIT = 'Analyst approved: deploy the parity signature.';

function pythonAvailable(): boolean {
  try {
    execFileSync('python3', ['-c', 'import rapidguard'], { stdio: 'pipe' });
    return true;
  } catch {
    return false;
  }
}

const available = pythonAvailable();

let pirRegistryPath = '';

function cli(dataDir: string, ...args: string[]): unknown {
  const out = execFileSync(
    'python3',
    ['-m', 'rapidguard.gateway.cli', '--data-dir', dataDir, '--json', ...args],
    {
      encoding: 'utf-8',
      env: { ...process.env, RAPIDGUARD_PIR_REGISTRY: pirRegistryPath },
    },
  );
  const lines = out.trim().split('\n');
  return lines.length ? JSON.parse(lines[lines.length - 1]!) : {};
}

async function adminPost(path: string, body: unknown): Promise<unknown> {
  const response = await fetch(BASE + path, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json', 'X-Admin-Token': ADMIN_TOKEN },
    body: JSON.stringify(body),
  });
  if (!response.ok) throw new Error(`${path}: ${response.status} ${await response.text()}`);
  return response.json();
}

function comparable(entries: AuditEntry[]): unknown[] {
  return entries.map((e) => ({
    action: e.action,
    payload_digest: e.payload_digest,
    epoch: e.epoch ?? null,
    environment: e.environment ?? null,
  }));
}

describe.skipIf(!available)('console/CLI parity against a live server', () => {
  let server: ChildProcess;
  let serverDir: string;
  let cliDir: string;
  let fixtureDir: string;
  const api = new ApiClient({ baseUrl: BASE, adminToken: ADMIN_TOKEN });

  beforeAll(async () => {
    serverDir = mkdtempSync(join(tmpdir(), 'parity-server-'));
    cliDir = mkdtempSync(join(tmpdir(), 'parity-cli-'));
    fixtureDir = mkdtempSync(join(tmpdir(), 'parity-fixtures-'));
    writeFileSync(join(fixtureDir, 'rules.txt'), RULE);
    // both sides score against the same PIR registry
    writeFileSync(
      join(fixtureDir, 'pirs.json'),
      JSON.stringify({
        version: 1,
        floor: 0.0,
        pirs: [{ id: 'p1', kind: 'ttp', subject: 'prompt_injection', priority: 5.0 }],
      }),
    );
    writeFileSync(
      join(fixtureDir, 'golden.jsonl'),
      Array.from({ length: 25 }, (_, i) =>
        JSON.stringify({ text: `benign customer request ${i}`, label: 'benign' }),
      ).join('\n'),
    );
    writeFileSync(join(fixtureDir, 'drop.jsonl'), JSON.stringify(INTEL_DOC));

    pirRegistryPath = join(fixtureDir, 'pirs.json');
    server = spawn(
      'python3',
      ['-m', 'rapidguard.gateway.cli', '--data-dir', join(serverDir, 'data'), 'serve',
       '--listen', `127.0.0.1:${PORT}`],
      {
        env: {
          ...process.env,
          RAPIDGUARD_ADMIN_TOKEN: ADMIN_TOKEN,
          RAPIDGUARD_PIR_REGISTRY: pirRegistryPath,
        },
        stdio: 'pipe',
      },
    );
    const deadline = Date.now() + 30_000;
    for (;;) {
      try {
        const health = await api.health();
        if (health.status === 'ok') break;
      } catch {
        /* not up yet */
      }
      if (Date.now() > deadline) throw new Error('server did not come up');
      await new Promise((r) => setTimeout(r, 300));
    }
  });

  afterAll(() => {
    server?.kill();
  });

  it('produces identical audit logs for the same operation sequence', async () => {
    // --- server side: setup over HTTP, actions through the console client
    await adminPost('/admin/packages', { package_id: 'sigs', version: 1, rules: [RULE] });
    await adminPost('/admin/models', {
      model_id: 'kw', version: 1, weights: { attack: 0.7 }, threshold: 0.5,
    });
    const v1 = (await adminPost('/admin/versions', {
      signature_package: ['sigs', 1], models: [['kw', 1]],
    })) as { version: { version_id: string } };
    const v2 = (await adminPost('/admin/versions', {
      signature_package: ['sigs', 1], models: [['kw', 1]],
    })) as { version: { version_id: string } };
    const baseline = v1.version.version_id;
    const candidate = v2.version.version_id;

    const golden = readFileSync(join(fixtureDir, 'golden.jsonl'), 'utf-8');
    await fetch(`${BASE}/corpus/prompts?corpus=golden`, { method: 'POST', body: golden });
    await adminPost('/admin/deployments', {
      environment: 'production',
      assignments: [{ version_id: baseline, mode: 'serving', fraction: 1.0 }],
    });
    const ingest = (await (
      await fetch(`${BASE}/intel/items`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(INTEL_DOC),
      })
    ).json()) as { item: { id: string } };
    const itemId = ingest.item.id;
    await fetch(`${BASE}/intel/items/${itemId}/score`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({
        susceptibility: 'highly_likely', signature_opportunity: true, data_available: true,
      }),
    });

    // console actions: open editor (review + generate), finalize, gate,
    // promote one step, rollback
    await api.beginReview(itemId);
    const generated = await api.generateReport(itemId);
    await api.finalizeReport(itemId, { threat_summary: FINAL_EDIT }, generated.revision);
    const gate = await api.runGate(baseline, candidate, 'golden');
    expect(gate.pass).toBe(true);
    const promoted = await api.promote('production', candidate, [0.5, 1.0], 1);
    expect(promoted.epoch).toBe(2);
    const rolled = await api.rollback('production', 1);
    expect(rolled.epoch).toBe(3);
    const serverAudit = await api.audit();

    // --- CLI side: the equivalent commands on a fresh data dir
    cli(cliDir, 'package', 'publish', '--rules', join(fixtureDir, 'rules.txt'),
      '--id', 'sigs', '--version', '1');
    cli(cliDir, 'model', 'register', '--id', 'kw', '--version', '1',
      '--weights', '{"attack": 0.7}', '--threshold', '0.5');
    cli(cliDir, 'release', 'register', '--package', 'sigs:1', '--models', 'kw:1');
    cli(cliDir, 'release', 'register', '--package', 'sigs:1', '--models', 'kw:1');
    cli(cliDir, 'corpus', 'import', '--file', join(fixtureDir, 'golden.jsonl'),
      '--corpus', 'golden');
    cli(cliDir, 'release', 'deploy', '--environment', 'production',
      '--serving', `${baseline}:1.0`);
    cli(cliDir, 'intel', 'ingest', '--file', join(fixtureDir, 'drop.jsonl'));
    cli(cliDir, 'intel', 'score', '--item', itemId, '--susceptibility', 'highly_likely',
      '--signature-opportunity', '--data-available');
    cli(cliDir, 'intel', 'review', '--item', itemId);
    cli(cliDir, 'intel', 'finalize', '--item', itemId,
      '--set', `threat_summary=${FINAL_EDIT}`, '--base-revision', '1');
    cli(cliDir, 'release', 'gate', '--baseline', baseline, '--candidate', candidate,
      '--corpus', 'golden');
    cli(cliDir, 'release', 'promote', '--environment', 'production',
      '--version', candidate, '--schedule', '0.5,1.0', '--steps', '1');
    cli(cliDir, 'release', 'rollback', '--environment', 'production', '--epoch', '1');

    const cliAudit = readFileSync(join(cliDir, 'audit.jsonl'), 'utf-8')
      .trim()
      .split('\n')
      .map((line) => JSON.parse(line) as AuditEntry);

    // the full comparable streams must agree, not just the action names
    expect(comparable(serverAudit)).toEqual(comparable(cliAudit));

    const actions = serverAudit.map((e) => e.action);
    expect(actions).toContain('finalize_report');
    expect(actions).toContain('promote');
    expect(actions).toContain('rollback');
  });

  it('queue view renders exactly what the live server returns', async () => {
    const raw = (await (
      await fetch(`${BASE}/intel/queue?status=`)
    ).json()) as { items: QueueRow[] };
    const rows = await api.intelQueue('');
    expect(rows).toEqual(raw.items);
    const html = renderQueueTable(rows);
    for (const row of raw.items) {
      expect(html).toContain(`data-item-id="${row.id}"`);
      expect(html).toContain(row.title);
      expect(html).toContain(row.status);
    }
  });
});
