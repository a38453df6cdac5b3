// Report editor state: section-level edits over the latest revision.
// Finalize round-trips with the base revision so a concurrent finalize
// surfaces as a conflict rather than a silent overwrite.

import type { Report } from './types.js';
import { REPORT_SECTIONS } from './types.js';
import { escapeHtml } from './queue.js';

export interface EditorState {
  itemId: string;
  baseRevision: number;
  sections: Record<string, string>;
  edited: Set<string>;
}

export function editorStateFrom(report: Report): EditorState {
  return {
    itemId: report.item_id,
    baseRevision: report.revision,
    sections: { ...report.sections },
    edited: new Set(),
  };
}

export function applyEdit(state: EditorState, section: string, text: string): EditorState {
  if (!(REPORT_SECTIONS as readonly string[]).includes(section)) {
    throw new Error(`unknown report section: ${section}`);
  }
  const next = {
    ...state,
    sections: { ...state.sections, [section]: text },
    edited: new Set(state.edited),
  };
  next.edited.add(section);
  return next;
}

// Only the sections the analyst touched are sent; the server merges.
export function pendingEdits(state: EditorState): Record<string, string> {
  const out: Record<string, string> = {};
  for (const section of state.edited) out[section] = state.sections[section] ?? '';
  return out;
}

export function blankEditedSections(state: EditorState): string[] {
  return [...state.edited].filter((s) => !(state.sections[s] ?? '').trim());
}

export function renderEditor(state: EditorState, revisions: Report[]): string {
  const sections = REPORT_SECTIONS.map((section) => {
    const body = escapeHtml(state.sections[section] ?? '');
    const mark = state.edited.has(section) ? ' (edited)' : '';
    return (
      `<div class="section" data-section="${section}">` +
      `<label>${section}${mark}</label>` +
      `<textarea data-section-input="${section}">${body}</textarea>` +
      `<p class="inline-error" data-error-for="${section}" hidden></p>` +
      `</div>`
    );
  }).join('');
  const history = revisions
    .map(
      (r) =>
        `<li>rev ${r.revision} by ${escapeHtml(r.author)} at ${escapeHtml(r.created_at)}</li>`,
    )
    .join('');
  return (
    `<div class="editor" data-item-id="${escapeHtml(state.itemId)}">` +
    `<h3>Report for ${escapeHtml(state.itemId)} (base revision ${state.baseRevision})</h3>` +
    sections +
    `<button data-action="finalize">Finalize</button>` +
    `<p class="editor-error" hidden></p>` +
    `<h4>Revision history</h4><ul class="revisions">${history}</ul>` +
    `</div>`
  );
}
