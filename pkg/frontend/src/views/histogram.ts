import { escapeHtml, fmtBinLabel, fmtCount } from '../format.js'
import type { HistogramResponse } from '../types.js'
import {
  emptyStateHtml,
  errorHtml,
  loadingHtml,
  setViewClass,
  wireErrorActions,
  type ViewResult,
} from './common.js'

export interface HistogramHandlers {
  onToggleDay(day: string): void
  onRetry(): void
  onRaiseLimit(required: number): void
}

// Bar heights are log-scaled so the two scanner-grade outliers do not
// flatten the benign mass visually; counts themselves stay verbatim.
export function logHeightPct(count: number, maxCount: number): number {
  if (count <= 0 || maxCount <= 0) return 0
  return Math.max(2, Math.round((Math.log10(count + 1) / Math.log10(maxCount + 1)) * 100))
}

function dayToggleHtml(days: string[], active: string): string {
  if (days.length === 0) return ''
  const buttons = days
    .map(
      (d) => `
      <button type="button" class="day-btn${d === active ? ' active' : ''}" data-day="${escapeHtml(d)}">
        ${escapeHtml(d)}
      </button>`,
    )
    .join('')
  return `<div class="day-toggle">${buttons}</div>`
}

/** Sender fan-out distribution for one day, decade bins on a log axis. */
export function renderHistogramView(
  root: HTMLElement,
  days: string[],
  result: ViewResult<HistogramResponse>,
  handlers: HistogramHandlers,
): void {
  setViewClass(root, 'histogram-view')
  if (result.kind === 'loading') {
    root.innerHTML = loadingHtml()
    return
  }
  if (result.kind === 'error') {
    root.innerHTML = errorHtml(result.error)
    wireErrorActions(root, handlers.onRetry, handlers.onRaiseLimit)
    return
  }
  const hist = result.data
  const toggle = dayToggleHtml(days, hist.day)
  const maxCount = Math.max(...hist.bins.map((b) => b.sender_count))
  if (maxCount === 0) {
    root.innerHTML = toggle + emptyStateHtml(`No sender activity recorded on ${hist.day}.`)
  } else {
    const cols = hist.bins
      .map(
        (b) => `
        <div class="hist-col" data-lo="${b.lo}">
          <span class="hist-count">${fmtCount(b.sender_count)}</span>
          <div class="hist-bar" style="height: ${logHeightPct(b.sender_count, maxCount)}%"></div>
          <span class="hist-label">${fmtBinLabel(b.lo, b.hi)}</span>
        </div>`,
      )
      .join('')
    root.innerHTML = `
      ${toggle}
      <div class="hist-chart">${cols}</div>
      <p class="hist-note">senders by unique destination ports on ${escapeHtml(hist.day)} (log-scaled bars)</p>`
  }
  for (const btn of root.querySelectorAll<HTMLButtonElement>('.day-btn')) {
    btn.addEventListener('click', () => handlers.onToggleDay(btn.dataset.day ?? ''))
  }
}
