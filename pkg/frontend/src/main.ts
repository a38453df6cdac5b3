// App shell: two screens (intel queue + report editor, release
// dashboard) over the gateway API. No optimistic updates: every action
// round-trips and then re-fetches server state.

import { ApiClient, ApiError } from './api.js';
import {
  applyEdit,
  blankEditedSections,
  editorStateFrom,
  pendingEdits,
  renderEditor,
  type EditorState,
} from './editor.js';
import {
  describeDiff,
  epochDiff,
  renderEnvironment,
} from './dashboard.js';
import { distinctValues, filterRows, renderQueueTable } from './queue.js';
import {
  afterFailure,
  afterSuccess,
  initialPollState,
  renderBanner,
  startPolling,
} from './poll.js';
import type { QueueFilters, QueueRow } from './types.js';

const params = new URLSearchParams(location.search);
const api = new ApiClient({
  baseUrl: params.get('api') ?? 'http://127.0.0.1:8080',
  adminToken: params.get('token') ?? localStorage.getItem('adminToken') ?? '',
});

let pollState = initialPollState();
let queueRows: QueueRow[] = [];
let filters: QueueFilters = { status: 'queued' };
let editor: EditorState | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function showError(container: HTMLElement, error: unknown): void {
  const detail =
    error instanceof ApiError
      ? `${error.code}: ${error.message}${hintFor(error.code)}`
      : String(error);
  const target = container.querySelector<HTMLElement>('.action-error, .editor-error');
  if (target) {
    target.textContent = detail;
    target.hidden = false;
  } else {
    alert(detail);
  }
}

function hintFor(code: string): string {
  switch (code) {
    case 'GateNotPassed':
      return ' - run a gate with this version as candidate first';
    case 'RevisionConflict':
      return ' - the report changed underneath you; reload to pick up the latest revision';
    case 'UnknownEpoch':
      return ' - pick an epoch from the history list';
    default:
      return '';
  }
}

// --- queue screen -----------------------------------------------------------

async function refreshQueue(): Promise<void> {
  try {
    queueRows = await api.intelQueue(filters.status ?? '');
    pollState = afterSuccess(pollState, new Date());
  } catch (error) {
    pollState = afterFailure(pollState, String(error));
  }
  renderQueue();
}

function renderQueue(): void {
  el('banner').innerHTML = renderBanner(pollState);
  const visible = filterRows(queueRows, filters);
  el('queue-table').innerHTML = renderQueueTable(visible);
  const { ttps, models } = distinctValues(queueRows);
  const ttpSelect = el('filter-ttp') as HTMLSelectElement;
  const modelSelect = el('filter-model') as HTMLSelectElement;
  fillSelect(ttpSelect, ttps, filters.ttp);
  fillSelect(modelSelect, models, filters.model);
  for (const tr of el('queue-table').querySelectorAll('tr[data-item-id]')) {
    tr.addEventListener('click', () => {
      void openEditor((tr as HTMLElement).dataset.itemId!);
    });
  }
}

function fillSelect(select: HTMLSelectElement, values: string[], current?: string): void {
  const options = ['<option value="">(any)</option>']
    .concat(values.map((v) => `<option value="${v}"${v === current ? ' selected' : ''}>${v}</option>`))
    .join('');
  select.innerHTML = options;
}

async function openEditor(itemId: string): Promise<void> {
  try {
    const revisions = await api.reports(itemId);
    let latest = revisions[revisions.length - 1];
    if (!latest) {
      await api.beginReview(itemId).catch(() => undefined); // may already be in review
      latest = await api.generateReport(itemId);
    }
    editor = editorStateFrom(latest);
    renderEditorPane(await api.reports(itemId));
  } catch (error) {
    showError(el('editor-pane'), error);
  }
}

function renderEditorPane(revisions: import('./types.js').Report[]): void {
  if (!editor) return;
  el('editor-pane').innerHTML = renderEditor(editor, revisions);
  for (const area of el('editor-pane').querySelectorAll('textarea[data-section-input]')) {
    area.addEventListener('input', () => {
      const section = (area as HTMLTextAreaElement).dataset.sectionInput!;
      editor = applyEdit(editor!, section, (area as HTMLTextAreaElement).value);
    });
  }
  el('editor-pane')
    .querySelector('button[data-action="finalize"]')
    ?.addEventListener('click', () => void finalize());
}

async function finalize(): Promise<void> {
  if (!editor) return;
  const blank = blankEditedSections(editor);
  if (blank.length > 0) {
    for (const section of blank) {
      const error = el('editor-pane').querySelector<HTMLElement>(
        `[data-error-for="${section}"]`,
      );
      if (error) {
        error.textContent = 'section must be non-empty';
        error.hidden = false;
      }
    }
    return;
  }
  try {
    await api.finalizeReport(editor.itemId, pendingEdits(editor), editor.baseRevision);
    const revisions = await api.reports(editor.itemId);
    editor = editorStateFrom(revisions[revisions.length - 1]!);
    renderEditorPane(revisions);
    await refreshQueue();
  } catch (error) {
    if (error instanceof ApiError && error.code === 'RevisionConflict') {
      if (confirm('The report changed on the server. Reload the latest revision?')) {
        await openEditor(editor.itemId);
        return;
      }
    }
    showError(el('editor-pane'), error);
  }
}

// --- dashboard screen ----------------------------------------------------------

async function refreshDashboard(): Promise<void> {
  try {
    const environments = await api.deployments();
    const panes: string[] = [];
    for (const [environment, view] of Object.entries(environments)) {
      const serving = view.current.assignments.filter((a) => a.mode === 'serving');
      const shadows = view.current.assignments.filter((a) => a.mode === 'shadow');
      const candidate = shadows[0]?.version_id ?? serving[serving.length - 1]?.version_id;
      const gates = candidate ? await api.gateReports(candidate) : [];
      let shadowReport = null;
      if (shadows[0] && serving[0]) {
        shadowReport = await api
          .shadowReport(serving[0].version_id, shadows[0].version_id)
          .catch(() => null); // below the sample floor: simply not available yet
      }
      panes.push(
        renderEnvironment(
          environment,
          view.current,
          view.history,
          gates[gates.length - 1] ?? null,
          shadowReport,
        ),
      );
    }
    el('dashboard').innerHTML =
      panes.join('') || '<p class="empty-state">No deployments yet.</p>';
    wireDashboardActions(environments);
    pollState = afterSuccess(pollState, new Date());
  } catch (error) {
    pollState = afterFailure(pollState, String(error));
  }
  el('banner').innerHTML = renderBanner(pollState);
}

function wireDashboardActions(
  environments: Awaited<ReturnType<ApiClient['deployments']>>,
): void {
  for (const section of el('dashboard').querySelectorAll('section[data-environment]')) {
    const environment = (section as HTMLElement).dataset.environment!;
    const view = environments[environment]!;
    section
      .querySelector('button[data-action="gate"]')
      ?.addEventListener('click', () => void runGateAction(section as HTMLElement));
    section
      .querySelector('button[data-action="promote"]')
      ?.addEventListener('click', () => void promoteAction(section as HTMLElement, environment));
    section
      .querySelector('button[data-action="rollback"]')
      ?.addEventListener('click', () => void rollbackAction(section as HTMLElement, environment, view));
  }
}

async function runGateAction(section: HTMLElement): Promise<void> {
  const baseline = prompt('Baseline version id?');
  const candidate = prompt('Candidate version id?');
  const corpus = prompt('Golden corpus id?');
  if (!baseline || !candidate || !corpus) return;
  try {
    await api.runGate(baseline, candidate, corpus);
    await refreshDashboard();
  } catch (error) {
    showError(section, error);
  }
}

async function promoteAction(section: HTMLElement, environment: string): Promise<void> {
  const version = prompt('Version id to promote?');
  const schedule = prompt('Fraction schedule (comma-separated)?', '0.01,0.1,1.0');
  if (!version || !schedule) return;
  try {
    await api.promote(
      environment,
      version,
      schedule.split(',').map((f) => Number(f.trim())),
      1, // the dashboard always advances one schedule step at a time
    );
    await refreshDashboard();
  } catch (error) {
    showError(section, error);
  }
}

async function rollbackAction(
  section: HTMLElement,
  environment: string,
  view: { current: import('./types.js').DeploymentSnapshot; history: import('./types.js').DeploymentSnapshot[] },
): Promise<void> {
  const select = section.querySelector<HTMLSelectElement>('select[data-role="epoch"]');
  if (!select) return;
  const epoch = Number(select.value);
  const target = view.history.find((d) => d.epoch === epoch);
  if (!target) return;
  const diff = describeDiff(epochDiff(view.current, target));
  if (!confirm(`Rollback ${environment} to epoch ${epoch}?\nChanges: ${diff}`)) return;
  try {
    await api.rollback(environment, epoch);
    await refreshDashboard();
  } catch (error) {
    showError(section, error);
  }
}

// --- shell -------------------------------------------------------------------------

function switchTab(tab: 'queue' | 'dashboard'): void {
  el('screen-queue').hidden = tab !== 'queue';
  el('screen-dashboard').hidden = tab !== 'dashboard';
}

export function start(): void {
  el('tab-queue').addEventListener('click', () => switchTab('queue'));
  el('tab-dashboard').addEventListener('click', () => switchTab('dashboard'));
  el('filter-status').addEventListener('change', (e) => {
    filters = { ...filters, status: (e.target as HTMLSelectElement).value || undefined };
    void refreshQueue();
  });
  el('filter-ttp').addEventListener('change', (e) => {
    filters = { ...filters, ttp: (e.target as HTMLSelectElement).value || undefined };
    renderQueue();
  });
  el('filter-model').addEventListener('change', (e) => {
    filters = { ...filters, model: (e.target as HTMLSelectElement).value || undefined };
    renderQueue();
  });
  el('filter-min').addEventListener('change', (e) => {
    const v = (e.target as HTMLInputElement).value;
    filters = { ...filters, minScore: v ? Number(v) : undefined };
    renderQueue();
  });
  el('filter-max').addEventListener('change', (e) => {
    const v = (e.target as HTMLInputElement).value;
    filters = { ...filters, maxScore: v ? Number(v) : undefined };
    renderQueue();
  });
  switchTab('queue');
  startPolling(async () => {
    await refreshQueue();
    await refreshDashboard();
  }, 5000);
}

if (typeof document !== 'undefined' && document.getElementById('tab-queue')) {
  start();
}
