// Release dashboard: a read-only projection of the admin API plus the
// three actions (gate, promote one step, rollback). Destructive actions
// confirm with the exact assignment diff between the current epoch and
// the one being reinstated.

import type {
  AssignmentView,
  DeploymentSnapshot,
  GateReportView,
  ShadowReportView,
} from './types.js';
import { escapeHtml } from './queue.js';

export interface EpochDiffLine {
  version_id: string;
  mode: string;
  from: number | null; // fraction now, null when absent
  to: number | null; // fraction after rollback
}

export function epochDiff(
  current: DeploymentSnapshot,
  target: DeploymentSnapshot,
): EpochDiffLine[] {
  const key = (a: AssignmentView) => `${a.version_id}|${a.mode}`;
  const now = new Map(current.assignments.map((a) => [key(a), a]));
  const then = new Map(target.assignments.map((a) => [key(a), a]));
  const keys = [...new Set([...now.keys(), ...then.keys()])].sort();
  const lines: EpochDiffLine[] = [];
  for (const k of keys) {
    const a = now.get(k);
    const b = then.get(k);
    const from = a ? a.fraction : null;
    const to = b ? b.fraction : null;
    if (from !== to) {
      const [version_id, mode] = k.split('|') as [string, string];
      lines.push({ version_id, mode, from, to });
    }
  }
  return lines;
}

export function describeDiff(lines: EpochDiffLine[]): string {
  if (lines.length === 0) return 'no routing changes';
  return lines
    .map((l) => {
      const from = l.from === null ? 'absent' : l.from;
      const to = l.to === null ? 'removed' : l.to;
      return `${l.version_id} (${l.mode}): ${from} -> ${to}`;
    })
    .join('; ');
}

function renderAssignments(assignments: AssignmentView[]): string {
  const rows = assignments
    .map(
      (a) =>
        `<tr><td>${escapeHtml(a.version_id)}</td><td>${a.mode}</td>` +
        `<td>${a.mode === 'serving' ? a.fraction : 'mirror'}</td></tr>`,
    )
    .join('');
  return `<table class="assignments"><thead><tr><th>Version</th><th>Mode</th><th>Fraction</th></tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderGateSummary(gate: GateReportView | null): string {
  if (!gate) return '<p class="gate">No gate report recorded.</p>';
  const verdict = gate.pass ? 'PASS' : 'FAIL';
  return (
    `<p class="gate">Latest gate ${escapeHtml(gate.baseline)} -> ${escapeHtml(gate.candidate)}: ` +
    `<strong>${verdict}</strong> (fp ${gate.fp_rate_delta.toFixed(4)}, ` +
    `recall ${gate.recall_delta.toFixed(4)}, flag ${gate.flag_rate_delta.toFixed(4)})</p>`
  );
}

export function renderShadowSummary(report: ShadowReportView | null): string {
  if (!report) return '<p class="shadow">No shadow comparison available.</p>';
  return (
    `<p class="shadow">Shadow ${escapeHtml(report.shadow_version)} vs ` +
    `${escapeHtml(report.serving_version)}: ${report.disagreement_count} ` +
    `disagreement(s) over ${report.window} requests ` +
    `(flag rate delta ${report.flag_rate_delta.toFixed(4)})</p>`
  );
}

export function renderEnvironment(
  environment: string,
  current: DeploymentSnapshot,
  history: DeploymentSnapshot[],
  gate: GateReportView | null,
  shadow: ShadowReportView | null,
): string {
  const epochs = history
    .map((d) => `<option value="${d.epoch}">epoch ${d.epoch} (${escapeHtml(d.created_at)})</option>`)
    .join('');
  return (
    `<section class="environment" data-environment="${escapeHtml(environment)}">` +
    `<h3>${escapeHtml(environment)} - epoch ${current.epoch}</h3>` +
    renderAssignments(current.assignments) +
    renderGateSummary(gate) +
    renderShadowSummary(shadow) +
    `<div class="actions">` +
    `<button data-action="gate">Run gate</button>` +
    `<button data-action="promote">Promote one step</button>` +
    `<select data-role="epoch">${epochs}</select>` +
    `<button data-action="rollback">Rollback to selected epoch</button>` +
    `</div>` +
    `<p class="action-error" hidden></p>` +
    `</section>`
  );
}
