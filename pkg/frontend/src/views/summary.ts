import { escapeHtml, fmtBytes, fmtCount, fmtMicros } from '../format.js'
import type { CaseStatus } from '../types.js'
import {
  errorHtml,
  loadingHtml,
  setViewClass,
  wireErrorActions,
  type ViewResult,
} from './common.js'

export interface SummaryHandlers {
  onPickDay(day: string): void
  onRetry(): void
  onOpenWizard(): void
}

/** Case overview: headline numbers, day chips, watches, import count. */
export function renderSummaryView(
  root: HTMLElement,
  activeDay: string | null,
  result: ViewResult<CaseStatus>,
  handlers: SummaryHandlers,
): void {
  setViewClass(root, 'summary-view')
  if (result.kind === 'loading') {
    root.innerHTML = loadingHtml()
    return
  }
  if (result.kind === 'error') {
    root.innerHTML = errorHtml(result.error)
    wireErrorActions(root, handlers.onRetry, () => {})
    return
  }
  const s = result.data
  const dayChips = s.days
    .map(
      (d) =>
        `<button type="button" class="day-chip${d === activeDay ? ' active' : ''}" data-day="${escapeHtml(d)}">${escapeHtml(d)}</button>`,
    )
    .join('')
  const watches = s.watches
    .map(
      (w) => `
      <li>
        <code>${escapeHtml(w.watch_id)}</code> polls ${escapeHtml(w.directory)}
        every ${w.poll_interval}s (config ${escapeHtml(w.config_id)})
      </li>`,
    )
    .join('')
  root.innerHTML = `
    <div class="stat-grid">
      <div class="stat"><span class="stat-value" id="stat-docs">${fmtCount(s.docs)}</span><span class="stat-label">documents</span></div>
      <div class="stat"><span class="stat-value">${s.days.length}</span><span class="stat-label">days</span></div>
      <div class="stat"><span class="stat-value">${fmtBytes(s.disk_bytes)}</span><span class="stat-label">on disk</span></div>
      <div class="stat"><span class="stat-value">${fmtCount(s.history_count)}</span><span class="stat-label">imports</span></div>
    </div>
    <p class="case-meta">
      state <strong>${escapeHtml(s.state)}</strong>,
      created ${fmtMicros(s.created_us)},
      ${s.running_imports} running import(s)
    </p>
    <div class="day-chips">${dayChips || '<span class="none">no days indexed yet</span>'}</div>
    <ul class="watch-list">${watches}</ul>
    <button type="button" class="open-wizard">Import data...</button>`
  for (const chip of root.querySelectorAll<HTMLButtonElement>('.day-chip')) {
    chip.addEventListener('click', () => handlers.onPickDay(chip.dataset.day ?? ''))
  }
  root.querySelector('.open-wizard')?.addEventListener('click', handlers.onOpenWizard)
}
